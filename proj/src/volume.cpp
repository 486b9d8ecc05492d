#include "fpr/volume.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fpr/error.hpp"

namespace fpr {

namespace {

constexpr char kMagic[8] = {'R', 'V', 'O', 'L', '0', '0', '0', '1'};

double round_half_away(double v) { return v < 0 ? std::ceil(v - 0.5) : std::floor(v + 0.5); }

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(Errc::bad_number, "non-numeric field '" + std::string(s) + "' in " + context);
    return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// Reads lines tolerating trailing '\r' from foreign line endings.
bool get_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

} // namespace

std::array<int64_t, 3> world_to_voxel(const CtVolume& vol, const std::array<double, 3>& world_mm) {
    std::array<int64_t, 3> idx{};
    for (int a = 0; a < 3; ++a)
        idx[a] = int64_t(round_half_away((world_mm[a] - vol.origin_mm[a]) / vol.spacing_mm[a]));
    return idx;
}

std::array<double, 3> voxel_to_world(const CtVolume& vol, const std::array<int64_t, 3>& index) {
    std::array<double, 3> w{};
    for (int a = 0; a < 3; ++a) w[a] = vol.origin_mm[a] + double(index[a]) * vol.spacing_mm[a];
    return w;
}

CtVolume load_volume(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open volume file " + path.string());

    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        fail(Errc::malformed_header, "bad RVOL magic in " + path.string());

    std::string header;
    if (!std::getline(in, header))
        fail(Errc::malformed_header, "missing RVOL header line in " + path.string());

    CtVolume vol;
    try {
        nlohmann::json j = nlohmann::json::parse(header);
        vol.scan_id = j.at("scan_id").get<std::string>();
        auto dims = j.at("dims");
        auto sp = j.at("spacing_mm");
        auto org = j.at("origin_mm");
        if (dims.size() != 3 || sp.size() != 3 || org.size() != 3)
            fail(Errc::malformed_header, "RVOL header arrays must have 3 entries");
        for (int a = 0; a < 3; ++a) {
            vol.dims[a] = dims[a].get<int>();
            vol.spacing_mm[a] = sp[a].get<double>();
            vol.origin_mm[a] = org[a].get<double>();
            if (vol.dims[a] <= 0)
                fail(Errc::malformed_header, "non-positive dimension in " + path.string());
            if (vol.spacing_mm[a] <= 0.0)
                fail(Errc::malformed_header, "non-positive spacing in " + path.string());
        }
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_header, "unparsable RVOL header in " + path.string() + ": " + e.what());
    }

    size_t count = size_t(vol.dims[0]) * size_t(vol.dims[1]) * size_t(vol.dims[2]);
    std::vector<char> raw(count * 2);
    in.read(raw.data(), std::streamsize(raw.size()));
    size_t got = size_t(in.gcount());
    if (got < raw.size())
        fail(Errc::truncated_payload, "voxel payload of " + path.string() + " is " +
                                          std::to_string(got) + " bytes, expected " +
                                          std::to_string(raw.size()));
    char extra;
    if (in.read(&extra, 1))
        fail(Errc::size_mismatch,
             "voxel payload of " + path.string() + " longer than dims imply");

    vol.voxels.resize(count);
    for (size_t i = 0; i < count; ++i) {
        uint16_t u = uint16_t(uint8_t(raw[2 * i])) | uint16_t(uint8_t(raw[2 * i + 1])) << 8;
        vol.voxels[i] = int16_t(u);
    }
    return vol;
}

void save_volume(const std::filesystem::path& path, const CtVolume& vol) {
    size_t count = size_t(vol.dims[0]) * size_t(vol.dims[1]) * size_t(vol.dims[2]);
    if (vol.voxels.size() != count)
        fail(Errc::size_mismatch, "voxel count does not match dims for scan " + vol.scan_id);

    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot create volume file " + path.string());

    nlohmann::json j;
    j["scan_id"] = vol.scan_id;
    j["dims"] = vol.dims;
    j["spacing_mm"] = vol.spacing_mm;
    j["origin_mm"] = vol.origin_mm;
    std::string header = j.dump();

    out.write(kMagic, 8);
    out.write(header.data(), std::streamsize(header.size()));
    out.put('\n');

    std::vector<char> raw(count * 2);
    for (size_t i = 0; i < count; ++i) {
        uint16_t u = uint16_t(vol.voxels[i]);
        raw[2 * i] = char(u & 0xff);
        raw[2 * i + 1] = char(u >> 8);
    }
    out.write(raw.data(), std::streamsize(raw.size()));
    if (!out) fail(Errc::io_error, "short write to " + path.string());
}

namespace {

std::ifstream open_table(const std::filesystem::path& path, const char* expected_header,
                         bool* has_probability) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "cannot open table " + path.string());
    std::string header;
    if (!get_line(in, header)) fail(Errc::missing_column, "empty table " + path.string());
    if (has_probability) {
        *has_probability = false;
        std::string with_prob = std::string(expected_header) + ",probability";
        if (header == with_prob) {
            *has_probability = true;
            return in;
        }
    }
    if (header != expected_header)
        fail(Errc::missing_column, "unexpected header '" + header + "' in " + path.string() +
                                       ", want '" + expected_header + "'");
    return in;
}

} // namespace

std::vector<Candidate> load_candidates(const std::filesystem::path& path) {
    bool has_prob = false;
    std::ifstream in = open_table(path, "seriesuid,coordX,coordY,coordZ,class", &has_prob);
    std::vector<Candidate> rows;
    std::string line;
    size_t lineno = 1;
    while (get_line(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        size_t expected = has_prob ? 6 : 5;
        std::string ctx = path.string() + ":" + std::to_string(lineno);
        if (fields.size() != expected)
            fail(Errc::missing_column, "expected " + std::to_string(expected) + " fields at " + ctx);
        Candidate c;
        c.scan_id = std::string(fields[0]);
        for (int a = 0; a < 3; ++a) c.world_mm[a] = parse_double(fields[1 + a], ctx);
        double cls = parse_double(fields[4], ctx);
        if (cls != 0.0 && cls != 1.0)
            fail(Errc::bad_label, "class must be 0 or 1 at " + ctx);
        c.label = int(cls);
        if (has_prob) {
            double p = parse_double(fields[5], ctx);
            if (p < 0.0 || p > 1.0) fail(Errc::bad_value, "probability outside [0,1] at " + ctx);
            c.probability = p;
        }
        rows.push_back(std::move(c));
    }
    return rows;
}

std::vector<NoduleAnnotation> load_annotations(const std::filesystem::path& path) {
    std::ifstream in = open_table(path, "seriesuid,coordX,coordY,coordZ,diameter_mm", nullptr);
    std::vector<NoduleAnnotation> rows;
    std::string line;
    size_t lineno = 1;
    while (get_line(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        std::string ctx = path.string() + ":" + std::to_string(lineno);
        if (fields.size() != 5) fail(Errc::missing_column, "expected 5 fields at " + ctx);
        NoduleAnnotation a;
        a.scan_id = std::string(fields[0]);
        for (int k = 0; k < 3; ++k) a.center_mm[k] = parse_double(fields[1 + k], ctx);
        a.diameter_mm = parse_double(fields[4], ctx);
        if (a.diameter_mm <= 0.0) fail(Errc::bad_value, "diameter_mm must be positive at " + ctx);
        rows.push_back(std::move(a));
    }
    return rows;
}

void save_candidates(const std::filesystem::path& path, const std::vector<Candidate>& rows) {
    bool any_prob = false;
    for (const auto& c : rows) any_prob = any_prob || c.probability.has_value();

    std::ofstream out(path);
    if (!out) fail(Errc::io_error, "cannot create table " + path.string());
    out << "seriesuid,coordX,coordY,coordZ,class";
    if (any_prob) out << ",probability";
    out << '\n';
    for (const auto& c : rows) {
        out << c.scan_id;
        for (int a = 0; a < 3; ++a) out << ',' << format_double(c.world_mm[a]);
        out << ',' << (c.label ? std::to_string(*c.label) : std::string("0"));
        if (any_prob) out << ',' << format_double(c.probability.value_or(0.0));
        out << '\n';
    }
    if (!out) fail(Errc::io_error, "short write to " + path.string());
}

void save_annotations(const std::filesystem::path& path, const std::vector<NoduleAnnotation>& rows) {
    std::ofstream out(path);
    if (!out) fail(Errc::io_error, "cannot create table " + path.string());
    out << "seriesuid,coordX,coordY,coordZ,diameter_mm\n";
    for (const auto& a : rows) {
        out << a.scan_id;
        for (int k = 0; k < 3; ++k) out << ',' << format_double(a.center_mm[k]);
        out << ',' << format_double(a.diameter_mm) << '\n';
    }
    if (!out) fail(Errc::io_error, "short write to " + path.string());
}

} // namespace fpr

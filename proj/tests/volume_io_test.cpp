#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "fpr/error.hpp"
#include "fpr/phantom.hpp"
#include "fpr/volume.hpp"
#include "test_util.hpp"

using namespace fpr;

TEST_CASE("normalize_hu maps the clip interval onto [0,1]") {
    CHECK(normalize_hu(-1000) == 0.0f);
    CHECK(normalize_hu(400) == 1.0f);
    CHECK(normalize_hu(-300) == 0.5f);
    CHECK(normalize_hu(1200) == 1.0f);
    CHECK(normalize_hu(-20000) == 0.0f);
}

TEST_CASE("normalize_hu is monotone and constant outside the clip interval") {
    float prev = normalize_hu(-32768);
    for (int hu = -32767; hu <= 32767; hu += 7) {
        float v = normalize_hu(hu);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(normalize_hu(-1500) == normalize_hu(-1000));
    CHECK(normalize_hu(500) == normalize_hu(5000));
}

namespace {

CtVolume tiny_volume() {
    CtVolume vol;
    vol.scan_id = "tiny";
    vol.dims = {2, 2, 1};
    vol.spacing_mm = {1, 1, 1};
    vol.origin_mm = {0, 0, 0};
    vol.voxels = {-1000, -1000, 0, 400};
    return vol;
}

} // namespace

TEST_CASE("world_to_voxel rounds to the nearest voxel") {
    CtVolume vol = tiny_volume();
    CHECK(world_to_voxel(vol, {5, 6, 7}) == std::array<int64_t, 3>{5, 6, 7});

    CtVolume ct;
    ct.dims = {512, 512, 100};
    ct.spacing_mm = {0.74, 0.74, 2.5};
    ct.origin_mm = {-100, -100, -50};
    CHECK(world_to_voxel(ct, {-92.6, -100, -45}) == std::array<int64_t, 3>{10, 0, 2});

    // halves round away from zero
    CHECK(world_to_voxel(vol, {2.5, 0, 0})[0] == 3);
    CHECK(world_to_voxel(vol, {-2.5, 0, 0})[0] == -3);
}

TEST_CASE("voxel_to_world inverts world_to_voxel on the grid") {
    CtVolume ct;
    ct.dims = {16, 12, 8};
    ct.spacing_mm = {0.74, 0.8, 2.5};
    ct.origin_mm = {-31.7, 4.25, -11.0};
    for (int64_t z = 0; z < 8; ++z)
        for (int64_t y = 0; y < 12; y += 3)
            for (int64_t x = 0; x < 16; x += 5) {
                auto w = voxel_to_world(ct, {x, y, z});
                CHECK(world_to_voxel(ct, w) == std::array<int64_t, 3>{x, y, z});
            }
}

TEST_CASE("rvol round trip preserves voxels and bytes") {
    auto dir = test::temp_dir("rvol");
    CtVolume vol = tiny_volume();
    save_volume(dir / "t.rvol", vol);
    CtVolume back = load_volume(dir / "t.rvol");
    CHECK(back.scan_id == "tiny");
    CHECK(back.dims == vol.dims);
    CHECK(back.voxels == vol.voxels);

    // save -> load -> save is byte-identical
    save_volume(dir / "t2.rvol", back);
    std::ifstream a(dir / "t.rvol", std::ios::binary), b(dir / "t2.rvol", std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
}

TEST_CASE("phantom scan survives the rvol container bit-exactly") {
    auto dir = test::temp_dir("rvol_phantom");
    PhantomSpec spec;
    spec.seed = 99;
    PhantomScan scan = gen_scan(spec, 0);
    save_volume(dir / "p.rvol", scan.volume);
    CtVolume back = load_volume(dir / "p.rvol");
    CHECK(back.voxels == scan.volume.voxels);
    CHECK(back.origin_mm == scan.volume.origin_mm);
}

TEST_CASE("rvol loader rejects malformed files") {
    auto dir = test::temp_dir("rvol_bad");
    CtVolume vol = tiny_volume();
    save_volume(dir / "ok.rvol", vol);

    auto slurp = [&](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    std::string bytes = slurp(dir / "ok.rvol");

    SUBCASE("truncated payload") {
        std::ofstream out(dir / "trunc.rvol", std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size() - 3));
        out.close();
        CHECK_THROWS_WITH_AS(load_volume(dir / "trunc.rvol"), doctest::Contains("payload"),
                             Error);
        try {
            load_volume(dir / "trunc.rvol");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::truncated_payload);
        }
    }
    SUBCASE("payload longer than dims") {
        std::ofstream out(dir / "long.rvol", std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.put('\0');
        out.put('\0');
        out.close();
        try {
            load_volume(dir / "long.rvol");
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::size_mismatch);
        }
    }
    SUBCASE("bad magic") {
        std::string corrupt = bytes;
        corrupt[0] = 'X';
        std::ofstream out(dir / "bad.rvol", std::ios::binary);
        out.write(corrupt.data(), std::streamsize(corrupt.size()));
        out.close();
        try {
            load_volume(dir / "bad.rvol");
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::malformed_header);
        }
    }
    SUBCASE("garbled header json") {
        std::string corrupt = bytes;
        corrupt[9] = '!';
        std::ofstream out(dir / "hdr.rvol", std::ios::binary);
        out.write(corrupt.data(), std::streamsize(corrupt.size()));
        out.close();
        try {
            load_volume(dir / "hdr.rvol");
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::malformed_header);
        }
    }
}

TEST_CASE("candidate table round trip and validation") {
    auto dir = test::temp_dir("tables");

    SUBCASE("direct field mapping") {
        std::ofstream out(dir / "c.csv");
        out << "seriesuid,coordX,coordY,coordZ,class\n";
        out << "scan1,-56.08,-67.85,-311.92,0\n";
        out.close();
        auto rows = load_candidates(dir / "c.csv");
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].scan_id == "scan1");
        CHECK(rows[0].world_mm[0] == doctest::Approx(-56.08));
        CHECK(rows[0].world_mm[2] == doctest::Approx(-311.92));
        CHECK(rows[0].label == 0);
        CHECK(!rows[0].probability.has_value());
    }
    SUBCASE("header only gives an empty list") {
        std::ofstream out(dir / "empty.csv");
        out << "seriesuid,coordX,coordY,coordZ,class\n";
        out.close();
        CHECK(load_candidates(dir / "empty.csv").empty());
    }
    SUBCASE("unknown label value") {
        std::ofstream out(dir / "bad.csv");
        out << "seriesuid,coordX,coordY,coordZ,class\nscan1,0,0,0,2\n";
        out.close();
        try {
            load_candidates(dir / "bad.csv");
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::bad_label);
        }
    }
    SUBCASE("non-numeric coordinate") {
        std::ofstream out(dir / "nan.csv");
        out << "seriesuid,coordX,coordY,coordZ,class\nscan1,a,0,0,1\n";
        out.close();
        try {
            load_candidates(dir / "nan.csv");
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::bad_number);
        }
    }
    SUBCASE("missing column") {
        std::ofstream out(dir / "short.csv");
        out << "seriesuid,coordX,coordY,coordZ,class\nscan1,0,0,1\n";
        out.close();
        try {
            load_candidates(dir / "short.csv");
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::missing_column);
        }
    }
    SUBCASE("probability column round trips") {
        std::vector<Candidate> rows(2);
        rows[0] = {"s1", {1, 2, 3}, 1, 0.75};
        rows[1] = {"s1", {4, 5, 6}, 0, 0.125};
        save_candidates(dir / "p.csv", rows);
        auto back = load_candidates(dir / "p.csv");
        REQUIRE(back.size() == 2);
        CHECK(back[0].probability == 0.75);
        CHECK(back[1].probability == 0.125);
        CHECK(back[1].label == 0);
    }
}

TEST_CASE("annotation table validation") {
    auto dir = test::temp_dir("ann");
    SUBCASE("negative diameter is rejected") {
        std::ofstream out(dir / "a.csv");
        out << "seriesuid,coordX,coordY,coordZ,diameter_mm\nscan1,0,0,0,-3\n";
        out.close();
        try {
            load_annotations(dir / "a.csv");
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::bad_value);
        }
    }
    SUBCASE("round trip preserves rows in order") {
        std::vector<NoduleAnnotation> rows(2);
        rows[0] = {"s2", {-1.5, 2.25, 3}, 6.5};
        rows[1] = {"s1", {0, 0, 0}, 3.0};
        save_annotations(dir / "r.csv", rows);
        auto back = load_annotations(dir / "r.csv");
        REQUIRE(back.size() == 2);
        CHECK(back[0].scan_id == "s2");
        CHECK(back[0].diameter_mm == 6.5);
        CHECK(back[1].scan_id == "s1");
    }
}

#include "fpr/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "fpr/error.hpp"
#include "fpr/rng.hpp"

namespace fpr {

namespace {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    return std::string(s.substr(b, e - b + 1));
}

struct KvFile {
    std::map<std::string, std::string> values; // "section.key" -> value
    std::string origin;

    bool has(const std::string& key) const { return values.count(key) > 0; }

    std::string get_str(const std::string& key, const std::string& def) const {
        auto it = values.find(key);
        return it == values.end() ? def : it->second;
    }

    double get_num(const std::string& key, double def) const {
        auto it = values.find(key);
        if (it == values.end()) return def;
        try {
            size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            fail(Errc::invalid_config, origin + ": non-numeric value for " + key);
        }
    }

    int64_t get_int(const std::string& key, int64_t def) const {
        double v = get_num(key, double(def));
        auto r = int64_t(v);
        if (double(r) != v) fail(Errc::invalid_config, origin + ": " + key + " must be an integer");
        return r;
    }

    std::vector<double> get_list(const std::string& key, std::vector<double> def) const {
        auto it = values.find(key);
        if (it == values.end()) return def;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            try {
                size_t pos = 0;
                out.push_back(std::stod(item, &pos));
                if (pos != item.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                fail(Errc::invalid_config, origin + ": non-numeric list entry for " + key);
            }
        }
        if (out.empty()) fail(Errc::invalid_config, origin + ": empty list for " + key);
        return out;
    }
};

const char* kKnownKeys[] = {
    "data.dir", "data.out",
    "phantom.scans", "phantom.dims", "phantom.spacing_mm", "phantom.background_hu",
    "phantom.nodules_per_scan", "phantom.nodule_radius_vox", "phantom.nodule_hu",
    "phantom.non_nodules_per_scan", "phantom.structure_mix", "phantom.jitter_sigma_mm",
    "folds.count", "folds.validation_fraction",
    "ae.hidden_widths", "ae.code_dim", "ae.learning_rate", "ae.decay_rate", "ae.decay_every",
    "ae.batch", "ae.iterations", "ae.noise_level",
    "cluster.k", "cluster.restarts", "cluster.max_iterations", "cluster.epsilon_zero",
    "cnn.kernels", "cnn.channels", "cnn.dense_units", "cnn.dropout", "cnn.learning_rate",
    "cnn.decay_rate", "cnn.decay_every", "cnn.batch", "cnn.iterations", "cnn.val_every",
    "cnn.patience",
    "eval.fp_levels", "eval.bootstrap_resamples", "eval.irrelevant_file",
    "run.regime", "run.fold", "run.master_seed", "run.workers",
};

KvFile parse_kv(const std::string& text, const std::string& origin) {
    KvFile kv;
    kv.origin = origin;
    std::stringstream ss(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            fail(Errc::invalid_config,
                 origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = section + "." + trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        bool known = false;
        for (const char* k : kKnownKeys)
            if (key == k) known = true;
        if (!known)
            fail(Errc::invalid_config,
                 origin + ":" + std::to_string(lineno) + ": unknown config field '" + key + "'");
        kv.values[key] = value;
    }
    return kv;
}

} // namespace

void PipelineConfig::validate() {
    phantom.validate();
    if (fold_count < 1) fail(Errc::invalid_config, "folds.count must be positive");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0)
        fail(Errc::invalid_config, "folds.validation_fraction must be in [0,1)");
    if (fold < 0 || fold >= fold_count) fail(Errc::invalid_config, "run.fold outside fold range");
    if (ae.code_dim < 1 || ae.hidden_widths.size() != 3)
        fail(Errc::invalid_config, "ae requires three hidden widths and a positive code size");
    for (int w : ae.hidden_widths)
        if (w < 1) fail(Errc::invalid_config, "ae.hidden_widths must be positive");
    if (ae.lr <= 0 || cnn.lr <= 0) fail(Errc::invalid_config, "learning rates must be positive");
    if (ae.decay_rate < 0 || ae.decay_rate >= 1 || cnn.decay_rate < 0 || cnn.decay_rate >= 1)
        fail(Errc::invalid_config, "decay rates must be in [0,1)");
    if (ae.noise_level < 0 || ae.noise_level >= 1)
        fail(Errc::invalid_config, "ae.noise_level must be in [0,1)");
    if (cnn.dropout < 0.0f || cnn.dropout >= 1.0f)
        fail(Errc::invalid_config, "cnn.dropout must be in [0,1)");
    if (k < 1) fail(Errc::invalid_config, "cluster.k must be positive");
    if (restarts < 1) fail(Errc::invalid_config, "cluster.restarts must be positive");
    if (bootstrap_resamples < 1)
        fail(Errc::invalid_config, "eval.bootstrap_resamples must be positive");
    for (double f : fp_levels)
        if (f <= 0) fail(Errc::invalid_config, "eval.fp_levels must be positive");
    if (regime == Regime::s) k = 1; // a single network trains on the full pool
    ae.denoise = regime == Regime::dae;
}

PipelineConfig parse_config(const std::string& text, const std::string& origin) {
    KvFile kv = parse_kv(text, origin);
    PipelineConfig cfg;

    cfg.data_dir = kv.get_str("data.dir", cfg.data_dir);
    cfg.out_dir = kv.get_str("data.out", cfg.out_dir);

    cfg.phantom.scan_count = int(kv.get_int("phantom.scans", cfg.phantom.scan_count));
    auto dims = kv.get_list("phantom.dims", {128, 128, 32});
    auto spacing = kv.get_list("phantom.spacing_mm", {0.74, 0.74, 2.5});
    auto bg = kv.get_list("phantom.background_hu", {-850, 25});
    auto nr = kv.get_list("phantom.nodule_radius_vox",
                          {cfg.phantom.nodule_radius_min_vox, cfg.phantom.nodule_radius_max_vox});
    auto nhu = kv.get_list("phantom.nodule_hu", {cfg.phantom.nodule_hu_lo, cfg.phantom.nodule_hu_hi});
    auto mix = kv.get_list("phantom.structure_mix", {1, 1, 3});
    if (dims.size() != 3 || spacing.size() != 3 || bg.size() != 2 || nr.size() != 2 ||
        nhu.size() != 2 || mix.size() != 3)
        fail(Errc::invalid_config, origin + ": phantom list fields have wrong arity");
    for (int i = 0; i < 3; ++i) {
        cfg.phantom.dims[size_t(i)] = int(dims[size_t(i)]);
        cfg.phantom.spacing_mm[size_t(i)] = spacing[size_t(i)];
        cfg.phantom.mix_weights[size_t(i)] = mix[size_t(i)];
    }
    cfg.phantom.bg_mean_hu = bg[0];
    cfg.phantom.bg_sigma_hu = bg[1];
    cfg.phantom.nodule_radius_min_vox = nr[0];
    cfg.phantom.nodule_radius_max_vox = nr[1];
    cfg.phantom.nodule_hu_lo = nhu[0];
    cfg.phantom.nodule_hu_hi = nhu[1];
    cfg.phantom.nodules_per_scan = int(kv.get_int("phantom.nodules_per_scan", 10));
    cfg.phantom.non_nodules_per_scan = int(kv.get_int("phantom.non_nodules_per_scan", 40));
    cfg.phantom.jitter_sigma_mm = kv.get_num("phantom.jitter_sigma_mm", 0.6);

    cfg.fold_count = int(kv.get_int("folds.count", 8));
    cfg.validation_fraction = kv.get_num("folds.validation_fraction", 0.10);

    auto widths = kv.get_list("ae.hidden_widths", {1024, 512, 384});
    cfg.ae.hidden_widths.assign(widths.size(), 0);
    for (size_t i = 0; i < widths.size(); ++i) cfg.ae.hidden_widths[i] = int(widths[i]);
    cfg.ae.code_dim = int(kv.get_int("ae.code_dim", 256));
    cfg.ae.lr = kv.get_num("ae.learning_rate", 0.001);
    cfg.ae.decay_rate = kv.get_num("ae.decay_rate", 0.04);
    cfg.ae.decay_every = kv.get_int("ae.decay_every", 1000);
    cfg.ae.batch = int(kv.get_int("ae.batch", 64));
    cfg.ae.iterations = int(kv.get_int("ae.iterations", 4000));
    cfg.ae.noise_level = kv.get_num("ae.noise_level", 0.25);

    cfg.k = int(kv.get_int("cluster.k", 5));
    cfg.restarts = int(kv.get_int("cluster.restarts", 10));
    cfg.cluster_max_iterations = int(kv.get_int("cluster.max_iterations", 300));
    cfg.eps_zero = kv.get_num("cluster.epsilon_zero", 1e-9);

    auto kernels = kv.get_list("cnn.kernels", {9, 5, 3});
    auto channels = kv.get_list("cnn.channels", {48, 48, 24});
    if (kernels.size() != 3 || channels.size() != 3)
        fail(Errc::invalid_config, origin + ": cnn.kernels and cnn.channels need 3 entries");
    for (size_t i = 0; i < 3; ++i) {
        cfg.cnn.kernels[i] = int(kernels[i]);
        cfg.cnn.channels[i] = int(channels[i]);
    }
    cfg.cnn.dense_units = int(kv.get_int("cnn.dense_units", 48));
    cfg.cnn.dropout = float(kv.get_num("cnn.dropout", 0.5));
    cfg.cnn.lr = kv.get_num("cnn.learning_rate", 0.001);
    cfg.cnn.decay_rate = kv.get_num("cnn.decay_rate", 0.04);
    cfg.cnn.decay_every = kv.get_int("cnn.decay_every", 500);
    cfg.cnn.batch = int(kv.get_int("cnn.batch", 32));
    cfg.cnn.iterations = int(kv.get_int("cnn.iterations", 2000));
    cfg.cnn.val_every = int(kv.get_int("cnn.val_every", 200));
    cfg.cnn.patience = int(kv.get_int("cnn.patience", 5));

    cfg.fp_levels = kv.get_list("eval.fp_levels", cfg.fp_levels);
    cfg.bootstrap_resamples = int(kv.get_int("eval.bootstrap_resamples", 1000));
    cfg.irrelevant_file = kv.get_str("eval.irrelevant_file", "");

    cfg.regime = regime_from_name(kv.get_str("run.regime", "ae"));
    cfg.fold = int(kv.get_int("run.fold", 0));
    cfg.master_seed = uint64_t(kv.get_int("run.master_seed", 20240101));
    cfg.workers = int(kv.get_int("run.workers", 0));

    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string dump_config(const PipelineConfig& cfg) {
    auto num = [](double v) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    };
    auto list = [&](auto&& values) {
        std::string out;
        for (size_t i = 0; i < values.size(); ++i) {
            if (i) out += ',';
            out += num(double(values[i]));
        }
        return out;
    };
    std::string s;
    s += "[data]\ndir = " + cfg.data_dir + "\nout = " + cfg.out_dir + "\n";
    s += "[phantom]\nscans = " + std::to_string(cfg.phantom.scan_count) + "\n";
    s += "dims = " + list(cfg.phantom.dims) + "\n";
    s += "spacing_mm = " + list(cfg.phantom.spacing_mm) + "\n";
    s += "background_hu = " + num(cfg.phantom.bg_mean_hu) + "," + num(cfg.phantom.bg_sigma_hu) + "\n";
    s += "nodules_per_scan = " + std::to_string(cfg.phantom.nodules_per_scan) + "\n";
    s += "nodule_radius_vox = " + num(cfg.phantom.nodule_radius_min_vox) + "," +
         num(cfg.phantom.nodule_radius_max_vox) + "\n";
    s += "nodule_hu = " + num(cfg.phantom.nodule_hu_lo) + "," + num(cfg.phantom.nodule_hu_hi) + "\n";
    s += "non_nodules_per_scan = " + std::to_string(cfg.phantom.non_nodules_per_scan) + "\n";
    s += "structure_mix = " + list(cfg.phantom.mix_weights) + "\n";
    s += "jitter_sigma_mm = " + num(cfg.phantom.jitter_sigma_mm) + "\n";
    s += "[folds]\ncount = " + std::to_string(cfg.fold_count) + "\n";
    s += "validation_fraction = " + num(cfg.validation_fraction) + "\n";
    s += "[ae]\nhidden_widths = " + list(cfg.ae.hidden_widths) + "\n";
    s += "code_dim = " + std::to_string(cfg.ae.code_dim) + "\n";
    s += "learning_rate = " + num(cfg.ae.lr) + "\ndecay_rate = " + num(cfg.ae.decay_rate) + "\n";
    s += "decay_every = " + std::to_string(cfg.ae.decay_every) + "\n";
    s += "batch = " + std::to_string(cfg.ae.batch) + "\n";
    s += "iterations = " + std::to_string(cfg.ae.iterations) + "\n";
    s += "noise_level = " + num(cfg.ae.noise_level) + "\n";
    s += "[cluster]\nk = " + std::to_string(cfg.k) + "\n";
    s += "restarts = " + std::to_string(cfg.restarts) + "\n";
    s += "max_iterations = " + std::to_string(cfg.cluster_max_iterations) + "\n";
    s += "epsilon_zero = " + num(cfg.eps_zero) + "\n";
    s += "[cnn]\nkernels = " + list(cfg.cnn.kernels) + "\n";
    s += "channels = " + list(cfg.cnn.channels) + "\n";
    s += "dense_units = " + std::to_string(cfg.cnn.dense_units) + "\n";
    s += "dropout = " + num(double(cfg.cnn.dropout)) + "\n";
    s += "learning_rate = " + num(cfg.cnn.lr) + "\ndecay_rate = " + num(cfg.cnn.decay_rate) + "\n";
    s += "decay_every = " + std::to_string(cfg.cnn.decay_every) + "\n";
    s += "batch = " + std::to_string(cfg.cnn.batch) + "\n";
    s += "iterations = " + std::to_string(cfg.cnn.iterations) + "\n";
    s += "val_every = " + std::to_string(cfg.cnn.val_every) + "\n";
    s += "patience = " + std::to_string(cfg.cnn.patience) + "\n";
    s += "[eval]\nfp_levels = " + list(cfg.fp_levels) + "\n";
    s += "bootstrap_resamples = " + std::to_string(cfg.bootstrap_resamples) + "\n";
    s += "irrelevant_file = " + cfg.irrelevant_file + "\n";
    s += "[run]\nregime = " + regime_name(cfg.regime) + "\n";
    s += "fold = " + std::to_string(cfg.fold) + "\n";
    s += "master_seed = " + std::to_string(cfg.master_seed) + "\n";
    s += "workers = " + std::to_string(cfg.workers) + "\n";
    return s;
}

uint64_t config_hash(const PipelineConfig& cfg) { return fnv1a(dump_config(cfg)); }

} // namespace fpr

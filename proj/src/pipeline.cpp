#include "fpr/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fpr/cluster.hpp"
#include "fpr/error.hpp"
#include "fpr/froc.hpp"
#include "fpr/nn.hpp"
#include "fpr/patch.hpp"
#include "fpr/rng.hpp"

namespace fpr {

namespace fs = std::filesystem;

namespace {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
    return buf;
}

uint64_t hash_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot hash " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return fnv1a(ss.str());
}

std::string read_text(const fs::path& path, Errc missing = Errc::missing_artifact) {
    std::ifstream in(path);
    if (!in) fail(missing, "missing artifact " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot create " + path.string());
    out << text;
    if (!out) fail(Errc::io_error, "short write to " + path.string());
}

void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path))
        fail(Errc::missing_artifact,
             path.string() + " not found; run the '" + producer + "' stage first");
}

// collects the provenance of one stage run and drops it next to the artifact
class Manifest {
public:
    Manifest(std::string command, const PipelineConfig& cfg, uint64_t stage_seed)
        : command_(std::move(command)), started_(std::chrono::steady_clock::now()) {
        j_["command"] = command_;
        j_["config_hash"] = hex64(config_hash(cfg));
        j_["master_seed"] = cfg.master_seed;
        j_["stage_seed"] = stage_seed;
        j_["inputs"] = nlohmann::json::object();
        j_["outputs"] = nlohmann::json::array();
    }

    void input(const fs::path& path) { j_["inputs"][path.string()] = hex64(hash_file(path)); }
    void output(const fs::path& path) { j_["outputs"].push_back(path.string()); }

    void write(const fs::path& dir) {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - started_)
                      .count();
        j_["elapsed_ms"] = ms;
        write_text(dir / (command_ + ".manifest.json"), j_.dump(2) + "\n");
    }

private:
    std::string command_;
    std::chrono::steady_clock::time_point started_;
    nlohmann::json j_;
};

struct Paths {
    fs::path data, out, fold_dir, regime_dir;
    std::string feature_src; // "ae" or "dae" for the clustered regimes

    explicit Paths(const PipelineConfig& cfg) {
        data = cfg.data_dir;
        out = cfg.out_dir;
        fold_dir = out / ("fold" + std::to_string(cfg.fold));
        regime_dir = fold_dir / regime_name(cfg.regime);
        feature_src = cfg.regime == Regime::dae ? "dae" : "ae";
    }

    fs::path candidates() const { return data / "candidates.csv"; }
    fs::path annotations() const { return data / "annotations.csv"; }
    fs::path scans_dir() const { return data / "scans"; }
    fs::path folds_json() const { return out / "folds.json"; }
    fs::path ae_ckpt() const { return fold_dir / (feature_src + ".ckpt"); }
    fs::path ae_loss() const { return fold_dir / (feature_src + "_loss.csv"); }
    fs::path features() const { return fold_dir / ("features_" + feature_src + ".csv"); }
    fs::path cluster_model() const { return fold_dir / ("clusters_" + feature_src + ".ckpt"); }
    fs::path assignments() const { return fold_dir / ("assignments_" + feature_src + ".csv"); }
    fs::path sets_json() const { return regime_dir / "sets.json"; }
    fs::path predictions() const { return regime_dir / "predictions.csv"; }
    fs::path froc_csv() const { return regime_dir / "froc.csv"; }
    fs::path summary_json() const { return regime_dir / "summary.json"; }
    fs::path froc_svg() const { return regime_dir / "froc.svg"; }
};

std::vector<std::string> list_scan_ids(const Paths& p) {
    require_artifact(p.scans_dir(), "phantom");
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(p.scans_dir()))
        if (entry.path().extension() == ".rvol") ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) fail(Errc::missing_artifact, "no .rvol volumes in " + p.scans_dir().string());
    return ids;
}

FoldPlan::Fold load_fold(const Paths& p, int fold) {
    FoldPlan plan = fold_plan_from_json(read_text(p.folds_json()));
    if (fold < 0 || fold >= int(plan.folds.size()))
        fail(Errc::invalid_config, "fold " + std::to_string(fold) + " outside the fold plan");
    return plan.folds[size_t(fold)];
}

std::map<std::string, CtVolume> load_volumes(const Paths& p, const std::set<std::string>& ids) {
    std::map<std::string, CtVolume> vols;
    for (const auto& id : ids) {
        fs::path vp = p.scans_dir() / (id + ".rvol");
        require_artifact(vp, "phantom");
        vols.emplace(id, load_volume(vp));
    }
    return vols;
}

std::string fmt_num(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---- stages ----

void cmd_phantom(const PipelineConfig& cfg) {
    uint64_t seed = derive_seed(cfg.master_seed, "phantom");
    Manifest man("phantom", cfg, seed);
    PhantomSpec spec = cfg.phantom;
    spec.seed = seed;
    gen_dataset(spec, cfg.data_dir);
    Paths p(cfg);
    man.output(p.candidates());
    man.output(p.annotations());
    man.output(p.scans_dir());
    man.write(p.data);
}

void cmd_folds(const PipelineConfig& cfg) {
    Paths p(cfg);
    uint64_t seed = derive_seed(cfg.master_seed, "folds");
    Manifest man("folds", cfg, seed);
    auto ids = list_scan_ids(p);
    FoldPlan plan = build_folds(ids, seed, cfg.fold_count, cfg.validation_fraction);
    write_text(p.folds_json(), fold_plan_to_json(plan));
    man.input(p.candidates());
    man.output(p.folds_json());
    man.write(p.out);
}

void require_clustered_regime(const PipelineConfig& cfg, const char* stage) {
    if (cfg.regime != Regime::ae && cfg.regime != Regime::dae)
        fail(Errc::invalid_config,
             std::string(stage) + " applies to the clustered regimes (ae, dae) only");
}

void cmd_train_ae(const PipelineConfig& cfg) {
    require_clustered_regime(cfg, "train-ae");
    Paths p(cfg);
    require_artifact(p.candidates(), "phantom");
    require_artifact(p.folds_json(), "folds");

    uint64_t seed = derive_seed(cfg.master_seed, "train-ae", uint64_t(cfg.fold));
    Manifest man("train-ae", cfg, seed);
    man.input(p.candidates());
    man.input(p.folds_json());

    FoldPlan::Fold fold = load_fold(p, cfg.fold);
    std::set<std::string> train(fold.train.begin(), fold.train.end());
    auto cands = load_candidates(p.candidates());
    auto vols = load_volumes(p, train);

    std::vector<Patch2D> patches;
    for (size_t i = 0; i < cands.size(); ++i) {
        const auto& c = cands[i];
        if (c.label.value_or(0) != 0 || !train.count(c.scan_id)) continue;
        patches.push_back(extract_patch2d(vols.at(c.scan_id), c, int(i)));
    }
    if (patches.empty()) fail(Errc::empty_input, "no non-nodule patches in the training scans");

    AeTrainResult res = ae_train(patches, cfg.ae, seed);

    nn::CheckpointMeta meta;
    meta.seed = seed;
    meta.iteration = int64_t(res.loss_history.size());
    meta.base_lr = cfg.ae.lr;
    meta.decay_rate = cfg.ae.decay_rate;
    meta.decay_every = cfg.ae.decay_every;
    meta.adam_t = int64_t(res.loss_history.size());
    fs::create_directories(p.fold_dir);
    nn::save_network(p.ae_ckpt(), res.net, meta);

    std::string loss_csv = "iteration,loss\n";
    for (size_t i = 0; i < res.loss_history.size(); ++i)
        loss_csv += std::to_string(i) + "," + fmt_num(res.loss_history[i]) + "\n";
    write_text(p.ae_loss(), loss_csv);

    man.output(p.ae_ckpt());
    man.output(p.ae_loss());
    man.write(p.fold_dir);
}

void cmd_extract_features(const PipelineConfig& cfg) {
    require_clustered_regime(cfg, "extract-features");
    Paths p(cfg);
    require_artifact(p.ae_ckpt(), "train-ae");
    require_artifact(p.candidates(), "phantom");
    require_artifact(p.folds_json(), "folds");

    uint64_t seed = derive_seed(cfg.master_seed, "extract-features", uint64_t(cfg.fold));
    Manifest man("extract-features", cfg, seed);
    man.input(p.ae_ckpt());
    man.input(p.candidates());

    nn::Network ae = nn::load_network(p.ae_ckpt());
    FoldPlan::Fold fold = load_fold(p, cfg.fold);
    std::set<std::string> train(fold.train.begin(), fold.train.end());
    auto cands = load_candidates(p.candidates());
    auto vols = load_volumes(p, train);

    std::vector<Patch2D> patches;
    std::vector<size_t> rows;
    for (size_t i = 0; i < cands.size(); ++i) {
        const auto& c = cands[i];
        if (c.label.value_or(0) != 0 || !train.count(c.scan_id)) continue;
        patches.push_back(extract_patch2d(vols.at(c.scan_id), c, int(i)));
        rows.push_back(i);
    }
    auto codes = ae_encode_batch(ae, patches);

    std::string csv = "seriesuid,candidate_index";
    int dim = codes.empty() ? cfg.ae.code_dim : int(codes.front().size());
    for (int d = 0; d < dim; ++d) csv += ",f" + std::to_string(d);
    csv += "\n";
    for (size_t i = 0; i < codes.size(); ++i) {
        csv += cands[rows[i]].scan_id + "," + std::to_string(rows[i]);
        for (float v : codes[i]) csv += "," + fmt_num(double(v));
        csv += "\n";
    }
    write_text(p.features(), csv);
    man.output(p.features());
    man.write(p.fold_dir);
}

FeatureMatrix read_feature_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::missing_artifact, "missing artifact " + path.string());
    std::string line;
    if (!std::getline(in, line)) fail(Errc::missing_column, "empty feature table");
    FeatureMatrix m;
    m.cols = int(std::count(line.begin(), line.end(), ',')) - 1;
    if (m.cols < 1) fail(Errc::missing_column, "feature table needs id and feature columns");
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        FeatureMatrix::RowRef ref;
        ref.scan_id = field;
        std::getline(ss, field, ',');
        ref.candidate_index = std::stoi(field);
        m.row_ids.push_back(std::move(ref));
        int got = 0;
        while (std::getline(ss, field, ',')) {
            m.values.push_back(std::stod(field));
            ++got;
        }
        if (got != m.cols) fail(Errc::missing_column, "ragged feature table row");
        m.rows += 1;
    }
    return m;
}

void cmd_cluster(const PipelineConfig& cfg) {
    require_clustered_regime(cfg, "cluster");
    Paths p(cfg);
    require_artifact(p.features(), "extract-features");

    uint64_t seed = derive_seed(cfg.master_seed, "cluster", uint64_t(cfg.fold));
    Manifest man("cluster", cfg, seed);
    man.input(p.features());

    FeatureMatrix features = read_feature_csv(p.features());
    ClusterModel model = fit_cluster_model(features, cfg.k, seed, cfg.restarts, cfg.eps_zero,
                                           cfg.cluster_max_iterations);
    save_cluster_model(p.cluster_model(), model);

    std::string csv = "seriesuid,candidate_index,cluster\n";
    for (size_t i = 0; i < model.assignments.size(); ++i)
        csv += features.row_ids[i].scan_id + "," + std::to_string(features.row_ids[i].candidate_index) +
               "," + std::to_string(model.assignments[i]) + "\n";
    write_text(p.assignments(), csv);

    man.output(p.cluster_model());
    man.output(p.assignments());
    man.write(p.fold_dir);
}

void cmd_build_sets(const PipelineConfig& cfg) {
    Paths p(cfg);
    require_artifact(p.candidates(), "phantom");
    require_artifact(p.folds_json(), "folds");

    uint64_t seed = derive_seed(cfg.master_seed, "build-sets", uint64_t(cfg.fold));
    Manifest man("build-sets", cfg, seed);
    man.input(p.candidates());
    man.input(p.folds_json());

    FoldPlan::Fold fold = load_fold(p, cfg.fold);
    std::set<std::string> train(fold.train.begin(), fold.train.end());
    auto cands = load_candidates(p.candidates());

    std::vector<int> nodule_rows, non_nodule_rows;
    for (size_t i = 0; i < cands.size(); ++i) {
        if (!train.count(cands[i].scan_id)) continue;
        (cands[i].label.value_or(0) == 1 ? nodule_rows : non_nodule_rows).push_back(int(i));
    }

    std::vector<int> assignments;
    if (cfg.regime == Regime::ae || cfg.regime == Regime::dae) {
        require_artifact(p.assignments(), "cluster");
        man.input(p.assignments());
        std::map<int, int> by_row;
        std::ifstream in(p.assignments());
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string scan, row, cluster;
            std::getline(ss, scan, ',');
            std::getline(ss, row, ',');
            std::getline(ss, cluster, ',');
            by_row[std::stoi(row)] = std::stoi(cluster);
        }
        for (int row : non_nodule_rows) {
            auto it = by_row.find(row);
            if (it == by_row.end())
                fail(Errc::missing_assignment,
                     "candidate row " + std::to_string(row) + " has no cluster assignment");
            assignments.push_back(it->second);
        }
    }

    RegimeDatasets sets = build_regime_datasets(nodule_rows, non_nodule_rows, cfg.regime,
                                                assignments, cfg.k, seed);

    nlohmann::json j;
    j["regime"] = regime_name(sets.regime);
    j["k"] = cfg.k;
    j["nodule_rows"] = sets.nodule_rows;
    j["members"] = sets.member_non_nodules;
    write_text(p.sets_json(), j.dump(2) + "\n");
    man.output(p.sets_json());
    man.write(p.regime_dir);
}

void cmd_train_ensemble(const PipelineConfig& cfg) {
    Paths p(cfg);
    require_artifact(p.sets_json(), "build-sets");
    require_artifact(p.candidates(), "phantom");

    uint64_t stage_seed = derive_seed(cfg.master_seed, "train-ensemble", uint64_t(cfg.fold));
    Manifest man("train-ensemble", cfg, stage_seed);
    man.input(p.sets_json());
    man.input(p.candidates());

    nlohmann::json sets;
    try {
        sets = nlohmann::json::parse(read_text(p.sets_json()));
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_header, std::string("unparsable sets.json: ") + e.what());
    }
    if (regime_from_name(sets.at("regime").get<std::string>()) != cfg.regime)
        fail(Errc::invalid_config, "sets.json was built for a different regime");
    int k = sets.at("k").get<int>();
    if (k != cfg.k) fail(Errc::invalid_config, "sets.json was built for a different k");
    std::vector<int> nodule_rows = sets.at("nodule_rows").get<std::vector<int>>();
    std::vector<std::vector<int>> members = sets.at("members").get<std::vector<std::vector<int>>>();

    auto cands = load_candidates(p.candidates());
    FoldPlan::Fold fold = load_fold(p, cfg.fold);
    std::set<std::string> needed;
    for (int row : nodule_rows) needed.insert(cands[size_t(row)].scan_id);
    for (const auto& m : members)
        for (int row : m) needed.insert(cands[size_t(row)].scan_id);
    for (const auto& s : fold.validation) needed.insert(s);
    auto vols = load_volumes(p, needed);

    // shared augmented nodules
    uint64_t aug_seed = derive_seed(cfg.master_seed, "augment", uint64_t(cfg.fold));
    std::vector<Patch3C> nodules;
    for (int row : nodule_rows) {
        Patch3C base = extract_patch3c(vols.at(cands[size_t(row)].scan_id), cands[size_t(row)], row);
        auto aug = augment_nodule(base, derive_seed(aug_seed, "nodule", uint64_t(row)));
        for (auto& a : aug) nodules.push_back(std::move(a));
    }

    // shared validation set from the fold's validation scans
    CnnTrainSet validation;
    std::set<std::string> val(fold.validation.begin(), fold.validation.end());
    for (size_t i = 0; i < cands.size(); ++i) {
        if (!val.count(cands[i].scan_id)) continue;
        Patch3C patch = extract_patch3c(vols.at(cands[i].scan_id), cands[i], int(i));
        (patch.label == 1 ? validation.nodules : validation.non_nodules).push_back(std::move(patch));
    }

    std::vector<nn::Network> trained(members.size());
    std::vector<CnnHistory> histories(members.size());
    std::vector<uint64_t> member_seeds(members.size());
    std::vector<std::exception_ptr> errors(members.size());

    auto train_member = [&](size_t m) {
        try {
            CnnTrainSet ts;
            ts.nodules = nodules; // copy keeps member training independent
            for (int row : members[m])
                ts.non_nodules.push_back(
                    extract_patch3c(vols.at(cands[size_t(row)].scan_id), cands[size_t(row)], row));
            member_seeds[m] =
                derive_seed(stage_seed, regime_name(cfg.regime) + "-member", uint64_t(m));
            auto [net, hist] = cnn_train(ts, validation, cfg.cnn, member_seeds[m]);
            trained[m] = std::move(net);
            histories[m] = std::move(hist);
        } catch (...) {
            errors[m] = std::current_exception();
        }
    };

    size_t workers = cfg.workers > 0 ? size_t(cfg.workers)
                                     : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, members.size());
    if (workers <= 1) {
        for (size_t m = 0; m < members.size(); ++m) train_member(m);
    } else {
        std::vector<std::thread> threads;
        for (size_t w = 0; w < workers; ++w)
            threads.emplace_back([&, w]() {
                for (size_t m = w; m < members.size(); m += workers) train_member(m);
            });
        for (auto& t : threads) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    Ensemble ensemble;
    ensemble.regime = cfg.regime;
    ensemble.members = std::move(trained);
    if (cfg.regime == Regime::ae || cfg.regime == Regime::dae)
        ensemble.cluster_model_path = p.cluster_model().filename().string();
    save_ensemble(p.regime_dir, ensemble, member_seeds);

    for (size_t m = 0; m < histories.size(); ++m) {
        std::string csv = "iteration,loss\n";
        for (size_t i = 0; i < histories[m].loss.size(); ++i)
            csv += std::to_string(i) + "," + fmt_num(histories[m].loss[i]) + "\n";
        write_text(p.regime_dir / ("member_" + std::to_string(m) + "_loss.csv"), csv);
        std::string vcsv = "evaluation,val_loss\n";
        for (size_t i = 0; i < histories[m].val_loss.size(); ++i)
            vcsv += std::to_string(i) + "," + fmt_num(histories[m].val_loss[i]) + "\n";
        write_text(p.regime_dir / ("member_" + std::to_string(m) + "_val_loss.csv"), vcsv);
    }

    man.output(p.regime_dir / "ensemble.json");
    man.write(p.regime_dir);
}

void cmd_predict(const PipelineConfig& cfg) {
    Paths p(cfg);
    require_artifact(p.regime_dir / "ensemble.json", "train-ensemble");
    require_artifact(p.candidates(), "phantom");

    uint64_t seed = derive_seed(cfg.master_seed, "predict", uint64_t(cfg.fold));
    Manifest man("predict", cfg, seed);
    man.input(p.regime_dir / "ensemble.json");
    man.input(p.candidates());

    Ensemble ensemble = load_ensemble(p.regime_dir);
    auto cands = load_candidates(p.candidates());
    std::set<std::string> ids;
    for (const auto& c : cands) ids.insert(c.scan_id);
    auto vols = load_volumes(p, ids);

    for (size_t i = 0; i < cands.size(); ++i) {
        Patch3C patch = extract_patch3c(vols.at(cands[i].scan_id), cands[i], int(i));
        cands[i].probability = predict_ensemble(ensemble, patch)[1];
    }
    fs::create_directories(p.regime_dir);
    save_candidates(p.predictions(), cands);
    man.output(p.predictions());
    man.write(p.regime_dir);
}

void cmd_evaluate(const PipelineConfig& cfg) {
    Paths p(cfg);
    require_artifact(p.predictions(), "predict");
    require_artifact(p.annotations(), "phantom");

    uint64_t seed = derive_seed(cfg.master_seed, "evaluate", uint64_t(cfg.fold));
    Manifest man("evaluate", cfg, seed);
    man.input(p.predictions());
    man.input(p.annotations());

    EvalInput input;
    input.candidates = load_candidates(p.predictions());
    input.annotations = load_annotations(p.annotations());
    if (!cfg.irrelevant_file.empty()) {
        man.input(cfg.irrelevant_file);
        input.irrelevant = load_annotations(cfg.irrelevant_file);
    }
    std::set<std::string> ids;
    for (const auto& c : input.candidates) ids.insert(c.scan_id);
    for (const auto& a : input.annotations) ids.insert(a.scan_id);
    input.scans.assign(ids.begin(), ids.end());

    auto tags = match_candidates(input);
    FrocCurve curve = froc_curve(input, tags, int(input.annotations.size()));
    BootstrapBounds bounds =
        bootstrap_ci(input, tags, cfg.bootstrap_resamples, seed, cfg.fp_levels);

    write_text(p.froc_csv(), froc_curve_csv(curve));
    write_text(p.summary_json(),
               froc_summary_json(curve, bounds, cfg.fp_levels, int(input.scans.size()),
                                 int(input.annotations.size()), cfg.bootstrap_resamples));
    write_text(p.froc_svg(), froc_curve_svg(curve));

    man.output(p.froc_csv());
    man.output(p.summary_json());
    man.output(p.froc_svg());
    man.write(p.regime_dir);
}

void cmd_stats(const PipelineConfig& cfg) {
    Paths p(cfg);
    Manifest man("stats", cfg, 0);

    nn::Network cnn = make_cnn(cfg.cnn);
    std::vector<int> cnn_shape{3, kPatchSize, kPatchSize};
    nn::ModelStats one = nn::model_stats(cnn, cnn_shape);

    nn::Network ae = make_ae(cfg.ae);
    std::vector<int> ae_shape{kPatchPixels};
    nn::ModelStats ae_stats = nn::model_stats(ae, ae_shape);

    nlohmann::json j;
    j["cnn"] = {{"parameters", one.parameters}, {"flops", one.flops}};
    j["ensemble"] = {{"k", cfg.k},
                     {"parameters", one.parameters * cfg.k},
                     {"flops", one.flops * cfg.k}};
    j["autoencoder"] = {{"parameters", ae_stats.parameters}, {"flops", ae_stats.flops}};
    write_text(p.out / "stats.json", j.dump(2) + "\n");

    std::printf("cnn parameters             %lld\n", (long long)one.parameters);
    std::printf("cnn flops per forward      %lld\n", (long long)one.flops);
    std::printf("ensemble (k=%d) parameters %lld\n", cfg.k, (long long)(one.parameters * cfg.k));
    std::printf("ensemble (k=%d) flops      %lld\n", cfg.k, (long long)(one.flops * cfg.k));
    std::printf("autoencoder parameters     %lld\n", (long long)ae_stats.parameters);
    std::printf("autoencoder flops          %lld\n", (long long)ae_stats.flops);

    man.output(p.out / "stats.json");
    man.write(p.out);
}

} // namespace

void run_command(const std::string& command, const PipelineConfig& cfg) {
    if (command == "phantom") return cmd_phantom(cfg);
    if (command == "folds") return cmd_folds(cfg);
    if (command == "train-ae") return cmd_train_ae(cfg);
    if (command == "extract-features") return cmd_extract_features(cfg);
    if (command == "cluster") return cmd_cluster(cfg);
    if (command == "build-sets") return cmd_build_sets(cfg);
    if (command == "train-ensemble") return cmd_train_ensemble(cfg);
    if (command == "predict") return cmd_predict(cfg);
    if (command == "evaluate") return cmd_evaluate(cfg);
    if (command == "stats") return cmd_stats(cfg);
    if (command == "all") {
        cmd_phantom(cfg);
        cmd_folds(cfg);
        if (cfg.regime == Regime::ae || cfg.regime == Regime::dae) {
            cmd_train_ae(cfg);
            cmd_extract_features(cfg);
            cmd_cluster(cfg);
        }
        cmd_build_sets(cfg);
        cmd_train_ensemble(cfg);
        cmd_predict(cfg);
        cmd_evaluate(cfg);
        return;
    }
    fail(Errc::invalid_config, "unknown command '" + command + "'");
}

} // namespace fpr

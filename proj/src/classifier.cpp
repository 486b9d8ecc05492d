#include "fpr/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "fpr/error.hpp"

namespace fpr {

std::string regime_name(Regime r) {
    switch (r) {
    case Regime::ae: return "ae";
    case Regime::dae: return "dae";
    case Regime::r: return "r";
    case Regime::a: return "a";
    case Regime::s: return "s";
    }
    return "ae";
}

Regime regime_from_name(const std::string& name) {
    if (name == "ae") return Regime::ae;
    if (name == "dae") return Regime::dae;
    if (name == "r") return Regime::r;
    if (name == "a") return Regime::a;
    if (name == "s") return Regime::s;
    fail(Errc::invalid_config, "unknown regime '" + name + "' (want ae|dae|r|a|s)");
}

nn::Network make_cnn(const CnnConfig& cfg) {
    for (size_t i = 0; i < 2; ++i)
        if (cfg.kernels[i] < cfg.kernels[i + 1])
            fail(Errc::invalid_config, "kernel sizes must be non-increasing");
    for (int k : cfg.kernels)
        if (k % 2 == 0) fail(Errc::invalid_config, "kernel sizes must be odd");

    nn::Network net;
    int in_ch = 3;
    for (int i = 0; i < 3; ++i) {
        nn::ConvLayer c;
        c.in_ch = in_ch;
        c.out_ch = cfg.channels[size_t(i)];
        c.k = cfg.kernels[size_t(i)];
        c.w.resize(size_t(c.out_ch) * c.in_ch * c.k * c.k);
        c.b.resize(size_t(c.out_ch));
        net.layers.emplace_back(std::move(c));
        net.layers.emplace_back(nn::MaxPoolLayer{});
        in_ch = cfg.channels[size_t(i)];
    }
    int flat = cfg.channels[2] * 8 * 8; // 64 -> 32 -> 16 -> 8 after three pools

    nn::DenseLayer d1;
    d1.in = flat;
    d1.out = cfg.dense_units;
    d1.act = nn::Activation::relu;
    d1.w.resize(size_t(d1.in) * d1.out);
    d1.b.resize(size_t(d1.out));
    net.layers.emplace_back(std::move(d1));
    net.layers.emplace_back(nn::DropoutLayer{cfg.dropout});

    nn::DenseLayer d2;
    d2.in = cfg.dense_units;
    d2.out = 2;
    d2.act = nn::Activation::linear;
    d2.w.resize(size_t(d2.in) * d2.out);
    d2.b.resize(size_t(d2.out));
    net.layers.emplace_back(std::move(d2));
    net.layers.emplace_back(nn::SoftmaxLayer{});
    return net;
}

RegimeDatasets build_regime_datasets(const std::vector<int>& nodule_rows,
                                     const std::vector<int>& non_nodule_rows, Regime regime,
                                     const std::vector<int>& cluster_assignments, int k,
                                     uint64_t seed) {
    if (regime == Regime::s && k != 1) fail(Errc::invalid_config, "regime s uses a single member");
    if (k < 1) fail(Errc::bad_value, "member count must be positive");

    RegimeDatasets out;
    out.regime = regime;
    out.nodule_rows = nodule_rows;
    out.member_non_nodules.assign(size_t(k), {});

    switch (regime) {
    case Regime::ae:
    case Regime::dae: {
        if (cluster_assignments.size() != non_nodule_rows.size())
            fail(Errc::missing_assignment, "cluster assignments must cover every non-nodule");
        for (size_t i = 0; i < non_nodule_rows.size(); ++i) {
            int c = cluster_assignments[i];
            if (c < 0 || c >= k)
                fail(Errc::missing_assignment,
                     "cluster id " + std::to_string(c) + " outside [0," + std::to_string(k) + ")");
            out.member_non_nodules[size_t(c)].push_back(non_nodule_rows[i]);
        }
        break;
    }
    case Regime::r: {
        std::vector<int> pool = non_nodule_rows;
        Rng rng(derive_seed(seed, "regime-r"));
        rng.shuffle(pool);
        // near-equal parts, dealt in order after the shuffle
        size_t base = pool.size() / size_t(k), extra = pool.size() % size_t(k);
        size_t pos = 0;
        for (size_t m = 0; m < size_t(k); ++m) {
            size_t take = base + (m < extra ? 1 : 0);
            out.member_non_nodules[m].assign(pool.begin() + pos, pool.begin() + pos + take);
            pos += take;
        }
        break;
    }
    case Regime::a:
        for (auto& member : out.member_non_nodules) member = non_nodule_rows;
        break;
    case Regime::s:
        out.member_non_nodules[0] = non_nodule_rows;
        break;
    }
    return out;
}

namespace {

double eval_xent(const nn::Network& net, const CnnTrainSet& set) {
    nn::Trace trace;
    std::vector<double> input(3 * kPatchPixels);
    std::vector<int> shape{3, kPatchSize, kPatchSize};
    std::vector<double> ograd;
    double total = 0.0;
    size_t n = 0;
    auto run = [&](const Patch3C& p) {
        for (size_t i = 0; i < input.size(); ++i) input[i] = double(p.pixels[i]);
        nn::forward_trace(net, input, shape, nn::Mode::infer, nullptr, trace);
        total += nn::loss_and_output_grad(nn::LossKind::xent, trace.act.back(), {}, p.label, ograd);
        ++n;
    };
    for (const auto& p : set.nodules) run(p);
    for (const auto& p : set.non_nodules) run(p);
    return n ? total / double(n) : 0.0;
}

} // namespace

std::pair<nn::Network, CnnHistory> cnn_train(const CnnTrainSet& train, const CnnTrainSet& validation,
                                             const CnnConfig& cfg, uint64_t seed) {
    if (train.nodules.empty() || train.non_nodules.empty())
        fail(Errc::single_class, "training set must contain both classes");

    nn::Network net = make_cnn(cfg);
    nn::init_gaussian(net, cfg.conv_init_sigma, cfg.dense_init_sigma, derive_seed(seed, "cnn-init"));
    nn::AdamState adam = nn::make_adam(net, cfg.lr, cfg.decay_rate, cfg.decay_every);

    Rng batch_rng(derive_seed(seed, "cnn-batch"));
    Rng drop_rng(derive_seed(seed, "cnn-dropout"));

    nn::Trace trace;
    nn::Grads grads = nn::make_grads(net);
    std::vector<double> input(3 * kPatchPixels), ograd;
    std::vector<int> shape{3, kPatchSize, kPatchSize};

    CnnHistory hist;
    bool has_val = !validation.nodules.empty() || !validation.non_nodules.empty();
    double best_val = std::numeric_limits<double>::infinity();
    int stale = 0;

    int iter = 0;
    for (; iter < cfg.iterations; ++iter) {
        grads.reset();
        double batch_loss = 0.0;
        for (int s = 0; s < cfg.batch; ++s) {
            // class-balanced draw: alternate nodule / non-nodule slots
            const Patch3C& p =
                s % 2 == 0 ? train.nodules[size_t(batch_rng.uniform_index(train.nodules.size()))]
                           : train.non_nodules[size_t(
                                 batch_rng.uniform_index(train.non_nodules.size()))];
            for (size_t i = 0; i < input.size(); ++i) input[i] = double(p.pixels[i]);
            nn::forward_trace(net, input, shape, nn::Mode::train, &drop_rng, trace);
            batch_loss +=
                nn::loss_and_output_grad(nn::LossKind::xent, trace.act.back(), {}, p.label, ograd);
            nn::backward_trace(net, trace, ograd, grads);
        }
        double scale = 1.0 / double(cfg.batch);
        for (auto& g : grads.gw)
            for (auto& v : g) v *= scale;
        for (auto& g : grads.gb)
            for (auto& v : g) v *= scale;
        hist.loss.push_back(batch_loss * scale);
        nn::adam_step(adam, net, grads);

        if (has_val && cfg.val_every > 0 && (iter + 1) % cfg.val_every == 0) {
            double vl = eval_xent(net, validation);
            hist.val_loss.push_back(vl);
            if (vl < best_val) {
                best_val = vl;
                stale = 0;
            } else if (++stale >= cfg.patience) {
                ++iter;
                break;
            }
        }
    }
    hist.stopped_at = iter;
    return {std::move(net), std::move(hist)};
}

std::array<double, 2> predict_single(const nn::Network& model, const Patch3C& patch) {
    nn::Trace trace;
    std::vector<double> input(3 * kPatchPixels);
    for (size_t i = 0; i < input.size(); ++i) input[i] = double(patch.pixels[i]);
    std::vector<int> shape{3, kPatchSize, kPatchSize};
    nn::forward_trace(model, input, shape, nn::Mode::infer, nullptr, trace);
    const auto& out = trace.act.back();
    if (out.size() != 2) fail(Errc::shape_mismatch, "classifier output is not a 2-class head");
    return {out[0], out[1]};
}

std::array<double, 2> predict_ensemble(const Ensemble& ensemble, const Patch3C& patch) {
    if (ensemble.members.empty()) fail(Errc::empty_input, "ensemble has no members");
    double p0 = 0.0, p1 = 0.0;
    for (const auto& m : ensemble.members) {
        auto p = predict_single(m, patch);
        p0 += p[0];
        p1 += p[1];
    }
    double inv = 1.0 / double(ensemble.members.size());
    return {p0 * inv, p1 * inv};
}

void save_ensemble(const std::filesystem::path& dir, const Ensemble& ensemble,
                   const std::vector<uint64_t>& member_seeds) {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["regime"] = regime_name(ensemble.regime);
    j["k"] = int(ensemble.members.size());
    j["cluster_model"] = ensemble.cluster_model_path;
    nlohmann::json members = nlohmann::json::array();
    for (size_t m = 0; m < ensemble.members.size(); ++m) {
        std::string name = "member_" + std::to_string(m) + ".ckpt";
        nn::CheckpointMeta meta;
        meta.seed = m < member_seeds.size() ? member_seeds[m] : 0;
        nn::save_network(dir / name, ensemble.members[m], meta);
        members.push_back({{"file", name}, {"seed", meta.seed}});
    }
    j["members"] = std::move(members);
    std::ofstream out(dir / "ensemble.json");
    if (!out) fail(Errc::io_error, "cannot create ensemble manifest in " + dir.string());
    out << j.dump(2) << "\n";
}

Ensemble load_ensemble(const std::filesystem::path& dir) {
    std::ifstream in(dir / "ensemble.json");
    if (!in) fail(Errc::missing_artifact, "no ensemble manifest in " + dir.string());
    Ensemble e;
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        e.regime = regime_from_name(j.at("regime").get<std::string>());
        e.cluster_model_path = j.value("cluster_model", std::string());
        for (const auto& jm : j.at("members"))
            e.members.push_back(nn::load_network(dir / jm.at("file").get<std::string>()));
    } catch (const nlohmann::json::exception& ex) {
        fail(Errc::malformed_header,
             "unparsable ensemble manifest in " + dir.string() + ": " + ex.what());
    }
    if (e.members.empty()) fail(Errc::empty_input, "ensemble manifest lists no members");
    return e;
}

} // namespace fpr

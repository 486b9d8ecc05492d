#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fpr/nn.hpp"

namespace fpr::test {

// flat view over every trainable parameter of a network
struct ParamRef {
    size_t layer;
    bool is_bias;
    size_t offset;
};

inline std::vector<ParamRef> enumerate_params(const nn::Network& net) {
    std::vector<ParamRef> refs;
    for (size_t li = 0; li < net.layers.size(); ++li) {
        size_t nw = 0, nb = 0;
        if (const auto* d = std::get_if<nn::DenseLayer>(&net.layers[li])) {
            nw = d->w.size();
            nb = d->b.size();
        } else if (const auto* c = std::get_if<nn::ConvLayer>(&net.layers[li])) {
            nw = c->w.size();
            nb = c->b.size();
        }
        for (size_t i = 0; i < nw; ++i) refs.push_back({li, false, i});
        for (size_t i = 0; i < nb; ++i) refs.push_back({li, true, i});
    }
    return refs;
}

inline float& param_at(nn::Network& net, const ParamRef& ref) {
    if (auto* d = std::get_if<nn::DenseLayer>(&net.layers[ref.layer]))
        return ref.is_bias ? d->b[ref.offset] : d->w[ref.offset];
    auto* c = std::get_if<nn::ConvLayer>(&net.layers[ref.layer]);
    return ref.is_bias ? c->b[ref.offset] : c->w[ref.offset];
}

inline double eval_loss(const nn::Network& net, const std::vector<double>& input,
                        const std::vector<int>& shape, nn::LossKind kind,
                        const std::vector<double>& mse_target, int label) {
    nn::Trace trace;
    nn::forward_trace(net, input, shape, nn::Mode::infer, nullptr, trace);
    std::vector<double> ograd;
    return nn::loss_and_output_grad(kind, trace.act.back(), mse_target, label, ograd);
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    size_t checked = 0;
};

// central finite differences vs the analytic gradients; refs may be a subset
inline GradCheckResult grad_check(nn::Network net, const std::vector<double>& input,
                                  const std::vector<int>& shape, nn::LossKind kind,
                                  const std::vector<double>& mse_target, int label,
                                  const std::vector<ParamRef>& refs, double h = 1e-3) {
    nn::Trace trace;
    nn::forward_trace(net, input, shape, nn::Mode::infer, nullptr, trace);
    std::vector<double> ograd;
    nn::loss_and_output_grad(kind, trace.act.back(), mse_target, label, ograd);
    nn::Grads grads = nn::make_grads(net);
    nn::backward_trace(net, trace, ograd, grads);

    GradCheckResult res;
    for (const ParamRef& ref : refs) {
        float& p = param_at(net, ref);
        float saved = p;
        p = float(double(saved) + h);
        double lp = eval_loss(net, input, shape, kind, mse_target, label);
        p = float(double(saved) - h);
        double lm = eval_loss(net, input, shape, kind, mse_target, label);
        p = saved;
        double numeric = (lp - lm) / (2.0 * h);
        double analytic = ref.is_bias ? grads.gb[ref.layer][ref.offset]
                                      : grads.gw[ref.layer][ref.offset];
        double rel = std::abs(analytic - numeric) /
                     std::max({std::abs(analytic), std::abs(numeric), 1e-3});
        res.max_rel_err = std::max(res.max_rel_err, rel);
        res.checked += 1;
    }
    return res;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fpr_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace fpr::test

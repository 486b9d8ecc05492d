#include "fpr/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fpr/error.hpp"

namespace fpr::nn {

namespace {

size_t numel_of(std::span<const int> shape) {
    size_t n = 1;
    for (int d : shape) n *= size_t(d);
    return n;
}

void dense_fwd(const DenseLayer& l, const double* in, double* out) {
    for (int o = 0; o < l.out; ++o) {
        const float* row = l.w.data() + size_t(o) * l.in;
        double acc = l.b[size_t(o)];
        for (int i = 0; i < l.in; ++i) acc += double(row[i]) * in[i];
        out[o] = l.act == Activation::relu && acc < 0.0 ? 0.0 : acc;
    }
}

void conv_fwd(const ConvLayer& l, const double* in, int H, int W, double* out) {
    int k = l.k, p = k / 2;
    size_t plane = size_t(H) * W;
    for (int oc = 0; oc < l.out_ch; ++oc) {
        double* dst = out + size_t(oc) * plane;
        std::fill(dst, dst + plane, double(l.b[size_t(oc)]));
        for (int ic = 0; ic < l.in_ch; ++ic) {
            const double* src = in + size_t(ic) * plane;
            const float* ker = l.w.data() + (size_t(oc) * l.in_ch + ic) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                int oy_lo = std::max(0, p - ky), oy_hi = std::min(H, H + p - ky);
                for (int kx = 0; kx < k; ++kx) {
                    double wv = ker[ky * k + kx];
                    int ox_lo = std::max(0, p - kx), ox_hi = std::min(W, W + p - kx);
                    for (int oy = oy_lo; oy < oy_hi; ++oy) {
                        double* orow = dst + size_t(oy) * W;
                        const double* srow = src + size_t(oy + ky - p) * W + (kx - p);
                        for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * srow[ox];
                    }
                }
            }
        }
        for (size_t i = 0; i < plane; ++i)
            if (dst[i] < 0.0) dst[i] = 0.0;
    }
}

void pool_fwd(const double* in, int C, int H, int W, double* out, int32_t* src_idx) {
    int OH = (H + 1) / 2, OW = (W + 1) / 2;
    for (int c = 0; c < C; ++c) {
        const double* plane = in + size_t(c) * H * W;
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                int y0 = oy * 2, x0 = ox * 2;
                int32_t best = int32_t(size_t(c) * H * W + size_t(y0) * W + x0);
                double bv = plane[size_t(y0) * W + x0];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        int y = y0 + dy, x = x0 + dx;
                        if (y >= H || x >= W) continue;
                        double v = plane[size_t(y) * W + x];
                        if (v > bv) {
                            bv = v;
                            best = int32_t(size_t(c) * H * W + size_t(y) * W + x);
                        }
                    }
                size_t oi = size_t(c) * OH * OW + size_t(oy) * OW + ox;
                out[oi] = bv;
                src_idx[oi] = best;
            }
    }
}

void softmax_fwd(const double* in, size_t n, double* out) {
    double mx = in[0];
    for (size_t i = 1; i < n; ++i) mx = std::max(mx, in[i]);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        out[i] = std::exp(in[i] - mx);
        sum += out[i];
    }
    for (size_t i = 0; i < n; ++i) out[i] /= sum;
}

constexpr double kProbClamp = 1e-7;

} // namespace

void Grads::reset() {
    for (auto& g : gw) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
}

Grads make_grads(const Network& net) {
    Grads g;
    g.gw.resize(net.layers.size());
    g.gb.resize(net.layers.size());
    for (size_t i = 0; i < net.layers.size(); ++i) {
        if (const auto* d = std::get_if<DenseLayer>(&net.layers[i])) {
            g.gw[i].assign(d->w.size(), 0.0);
            g.gb[i].assign(d->b.size(), 0.0);
        } else if (const auto* c = std::get_if<ConvLayer>(&net.layers[i])) {
            g.gw[i].assign(c->w.size(), 0.0);
            g.gb[i].assign(c->b.size(), 0.0);
        }
    }
    return g;
}

void forward_trace(const Network& net, std::span<const double> input,
                   std::span<const int> input_shape, Mode mode, Rng* dropout_rng, Trace& trace) {
    size_t n_layers = net.layers.size();
    trace.act.resize(n_layers + 1);
    trace.shape.resize(n_layers + 1);
    trace.pool_src.assign(n_layers, {});
    trace.drop_keep.assign(n_layers, {});

    trace.act[0].assign(input.begin(), input.end());
    trace.shape[0].assign(input_shape.begin(), input_shape.end());
    if (numel_of(input_shape) != input.size())
        fail(Errc::shape_mismatch, "input size does not match declared shape");

    for (size_t i = 0; i < n_layers; ++i) {
        const auto& in = trace.act[i];
        const auto& ishape = trace.shape[i];
        auto& out = trace.act[i + 1];
        auto& oshape = trace.shape[i + 1];

        if (const auto* d = std::get_if<DenseLayer>(&net.layers[i])) {
            if (in.size() != size_t(d->in))
                fail(Errc::shape_mismatch, "dense layer expects " + std::to_string(d->in) +
                                               " inputs, got " + std::to_string(in.size()));
            out.resize(size_t(d->out));
            oshape = {d->out};
            dense_fwd(*d, in.data(), out.data());
        } else if (const auto* c = std::get_if<ConvLayer>(&net.layers[i])) {
            if (ishape.size() != 3 || ishape[0] != c->in_ch)
                fail(Errc::shape_mismatch, "conv layer expects [in_ch,H,W] input");
            int H = ishape[1], W = ishape[2];
            out.resize(size_t(c->out_ch) * H * W);
            oshape = {c->out_ch, H, W};
            conv_fwd(*c, in.data(), H, W, out.data());
        } else if (std::holds_alternative<MaxPoolLayer>(net.layers[i])) {
            if (ishape.size() != 3) fail(Errc::shape_mismatch, "maxpool expects [C,H,W] input");
            int C = ishape[0], H = ishape[1], W = ishape[2];
            int OH = (H + 1) / 2, OW = (W + 1) / 2;
            out.resize(size_t(C) * OH * OW);
            oshape = {C, OH, OW};
            trace.pool_src[i].resize(out.size());
            pool_fwd(in.data(), C, H, W, out.data(), trace.pool_src[i].data());
        } else if (const auto* dr = std::get_if<DropoutLayer>(&net.layers[i])) {
            out = in;
            oshape = ishape;
            if (mode == Mode::train && dr->rate > 0.0f) {
                if (!dropout_rng) fail(Errc::empty_input, "train-mode dropout needs an rng");
                double keep_scale = 1.0 / (1.0 - double(dr->rate));
                auto& mask = trace.drop_keep[i];
                mask.resize(out.size());
                for (size_t j = 0; j < out.size(); ++j) {
                    bool keep = dropout_rng->uniform() >= double(dr->rate);
                    mask[j] = keep ? 1 : 0;
                    out[j] = keep ? out[j] * keep_scale : 0.0;
                }
            }
        } else { // softmax
            out.resize(in.size());
            oshape = ishape;
            softmax_fwd(in.data(), in.size(), out.data());
        }
    }
}

void backward_trace(const Network& net, const Trace& trace, std::span<const double> output_grad,
                    Grads& grads) {
    if (trace.act.size() != net.layers.size() + 1)
        fail(Errc::shape_mismatch, "backward called without a matching forward trace");

    std::vector<double> g(output_grad.begin(), output_grad.end());
    std::vector<double> g_prev;

    for (size_t ri = net.layers.size(); ri-- > 0;) {
        const auto& in = trace.act[ri];
        const auto& out = trace.act[ri + 1];
        const auto& ishape = trace.shape[ri];

        if (const auto* d = std::get_if<DenseLayer>(&net.layers[ri])) {
            // ReLU subgradient at 0 is 0: mask on the post-activation value
            if (d->act == Activation::relu)
                for (size_t j = 0; j < g.size(); ++j)
                    if (out[j] <= 0.0) g[j] = 0.0;
            auto& gw = grads.gw[ri];
            auto& gb = grads.gb[ri];
            g_prev.assign(in.size(), 0.0);
            for (int o = 0; o < d->out; ++o) {
                double go = g[size_t(o)];
                gb[size_t(o)] += go;
                const float* wrow = d->w.data() + size_t(o) * d->in;
                double* gwrow = gw.data() + size_t(o) * d->in;
                for (int ii = 0; ii < d->in; ++ii) {
                    gwrow[ii] += go * in[size_t(ii)];
                    g_prev[size_t(ii)] += go * double(wrow[ii]);
                }
            }
        } else if (const auto* c = std::get_if<ConvLayer>(&net.layers[ri])) {
            int H = ishape[1], W = ishape[2];
            size_t plane = size_t(H) * W;
            for (size_t j = 0; j < g.size(); ++j)
                if (out[j] <= 0.0) g[j] = 0.0;
            auto& gw = grads.gw[ri];
            auto& gb = grads.gb[ri];
            g_prev.assign(in.size(), 0.0);
            int k = c->k, p = k / 2;
            for (int oc = 0; oc < c->out_ch; ++oc) {
                const double* gplane = g.data() + size_t(oc) * plane;
                double acc = 0.0;
                for (size_t j = 0; j < plane; ++j) acc += gplane[j];
                gb[size_t(oc)] += acc;
                for (int ic = 0; ic < c->in_ch; ++ic) {
                    const double* src = in.data() + size_t(ic) * plane;
                    double* gsrc = g_prev.data() + size_t(ic) * plane;
                    const float* ker = c->w.data() + (size_t(oc) * c->in_ch + ic) * k * k;
                    double* gker = gw.data() + (size_t(oc) * c->in_ch + ic) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        int oy_lo = std::max(0, p - ky), oy_hi = std::min(H, H + p - ky);
                        for (int kx = 0; kx < k; ++kx) {
                            int ox_lo = std::max(0, p - kx), ox_hi = std::min(W, W + p - kx);
                            double wv = ker[ky * k + kx];
                            double wg = 0.0;
                            for (int oy = oy_lo; oy < oy_hi; ++oy) {
                                const double* grow = gplane + size_t(oy) * W;
                                const double* srow = src + size_t(oy + ky - p) * W + (kx - p);
                                double* gsrow = gsrc + size_t(oy + ky - p) * W + (kx - p);
                                for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                    wg += grow[ox] * srow[ox];
                                    gsrow[ox] += grow[ox] * wv;
                                }
                            }
                            gker[ky * k + kx] += wg;
                        }
                    }
                }
            }
        } else if (std::holds_alternative<MaxPoolLayer>(net.layers[ri])) {
            g_prev.assign(in.size(), 0.0);
            const auto& src_idx = trace.pool_src[ri];
            for (size_t j = 0; j < g.size(); ++j) g_prev[size_t(src_idx[j])] += g[j];
        } else if (const auto* dr = std::get_if<DropoutLayer>(&net.layers[ri])) {
            g_prev = g;
            const auto& mask = trace.drop_keep[ri];
            if (!mask.empty()) {
                double keep_scale = 1.0 / (1.0 - double(dr->rate));
                for (size_t j = 0; j < g_prev.size(); ++j)
                    g_prev[j] = mask[j] ? g_prev[j] * keep_scale : 0.0;
            }
        } else { // softmax: dz_c = p_c * (g_c - sum_d g_d p_d)
            double dot = 0.0;
            for (size_t j = 0; j < g.size(); ++j) dot += g[j] * out[j];
            g_prev.resize(g.size());
            for (size_t j = 0; j < g.size(); ++j) g_prev[j] = out[j] * (g[j] - dot);
        }
        g.swap(g_prev);
    }
}

double loss_and_output_grad(LossKind kind, std::span<const double> output,
                            std::span<const double> mse_target, int xent_label,
                            std::vector<double>& output_grad) {
    output_grad.assign(output.size(), 0.0);
    if (kind == LossKind::mse) {
        if (mse_target.size() != output.size())
            fail(Errc::shape_mismatch, "mse target size mismatch");
        double loss = 0.0;
        for (size_t i = 0; i < output.size(); ++i) {
            double d = output[i] - mse_target[i];
            loss += d * d;
            output_grad[i] = 2.0 * d;
        }
        return loss;
    }
    // xent on a probability vector (softmax output)
    if (xent_label < 0 || size_t(xent_label) >= output.size())
        fail(Errc::bad_label, "class label outside output range");
    double p = output[size_t(xent_label)];
    if (p < kProbClamp) {
        return -std::log(kProbClamp); // saturated; clamped loss is locally flat
    }
    if (p > 1.0 - kProbClamp) return -std::log(1.0 - kProbClamp);
    output_grad[size_t(xent_label)] = -1.0 / p;
    return -std::log(p);
}

AdamState make_adam(const Network& net, double base_lr, double decay_rate, int64_t decay_every) {
    AdamState s;
    s.base_lr = base_lr;
    s.decay_rate = decay_rate;
    s.decay_every = decay_every;
    s.mw.resize(net.layers.size());
    s.vw.resize(net.layers.size());
    s.mb.resize(net.layers.size());
    s.vb.resize(net.layers.size());
    for (size_t i = 0; i < net.layers.size(); ++i) {
        size_t nw = 0, nb = 0;
        if (const auto* d = std::get_if<DenseLayer>(&net.layers[i])) {
            nw = d->w.size();
            nb = d->b.size();
        } else if (const auto* c = std::get_if<ConvLayer>(&net.layers[i])) {
            nw = c->w.size();
            nb = c->b.size();
        }
        s.mw[i].assign(nw, 0.0);
        s.vw[i].assign(nw, 0.0);
        s.mb[i].assign(nb, 0.0);
        s.vb[i].assign(nb, 0.0);
    }
    return s;
}

double effective_lr(const AdamState& state) {
    int64_t windows = state.decay_every > 0 ? state.t / state.decay_every : 0;
    return state.base_lr * std::pow(1.0 - state.decay_rate, double(windows));
}

namespace {

void adam_update(std::span<float> params, std::span<const double> grads, std::vector<double>& m,
                 std::vector<double>& v, double lr, double c1, double c2, double beta1,
                 double beta2, double eps) {
    for (size_t i = 0; i < params.size(); ++i) {
        double g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        double mh = m[i] / c1, vh = v[i] / c2;
        params[i] = float(double(params[i]) - lr * mh / (std::sqrt(vh) + eps));
    }
}

} // namespace

void adam_step(AdamState& state, Network& net, const Grads& grads) {
    state.t += 1;
    double lr = effective_lr(state);
    double c1 = 1.0 - std::pow(state.beta1, double(state.t));
    double c2 = 1.0 - std::pow(state.beta2, double(state.t));
    for (size_t i = 0; i < net.layers.size(); ++i) {
        std::span<float> w, b;
        if (auto* d = std::get_if<DenseLayer>(&net.layers[i])) {
            w = d->w;
            b = d->b;
        } else if (auto* c = std::get_if<ConvLayer>(&net.layers[i])) {
            w = c->w;
            b = c->b;
        } else {
            continue;
        }
        if (w.size() != grads.gw[i].size() || b.size() != grads.gb[i].size())
            fail(Errc::shape_mismatch, "gradient shapes do not match parameters");
        adam_update(w, grads.gw[i], state.mw[i], state.vw[i], lr, c1, c2, state.beta1, state.beta2,
                    state.eps);
        adam_update(b, grads.gb[i], state.mb[i], state.vb[i], lr, c1, c2, state.beta1, state.beta2,
                    state.eps);
    }
}

// ---- float-tensor wrappers ----

namespace {

std::vector<double> widen(const Tensor& t) { return {t.data.begin(), t.data.end()}; }

Tensor narrow(const std::vector<double>& v, std::vector<int> shape) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < v.size(); ++i) t.data[i] = float(v[i]);
    return t;
}

} // namespace

Tensor dense_forward(const DenseLayer& layer, const Tensor& input) {
    if (input.numel() != size_t(layer.in)) fail(Errc::shape_mismatch, "dense input size mismatch");
    std::vector<double> in = widen(input), out(size_t(layer.out));
    dense_fwd(layer, in.data(), out.data());
    return narrow(out, {layer.out});
}

Tensor conv_forward(const ConvLayer& layer, const Tensor& input) {
    if (input.shape.size() != 3 || input.shape[0] != layer.in_ch)
        fail(Errc::shape_mismatch, "conv input must be [in_ch,H,W]");
    int H = input.shape[1], W = input.shape[2];
    std::vector<double> in = widen(input), out(size_t(layer.out_ch) * H * W);
    conv_fwd(layer, in.data(), H, W, out.data());
    return narrow(out, {layer.out_ch, H, W});
}

PoolResult maxpool2(const Tensor& input) {
    if (input.shape.size() != 3) fail(Errc::shape_mismatch, "maxpool input must be [C,H,W]");
    int C = input.shape[0], H = input.shape[1], W = input.shape[2];
    int OH = (H + 1) / 2, OW = (W + 1) / 2;
    std::vector<double> in = widen(input), out(size_t(C) * OH * OW);
    PoolResult res;
    res.argmax.resize(out.size());
    pool_fwd(in.data(), C, H, W, out.data(), res.argmax.data());
    res.out = narrow(out, {C, OH, OW});
    return res;
}

std::array<double, 2> softmax2(double h0, double h1) {
    double in[2] = {h0, h1}, out[2];
    softmax_fwd(in, 2, out);
    return {out[0], out[1]};
}

double mse_loss(const std::vector<Tensor>& x, const std::vector<Tensor>& xhat) {
    if (x.size() != xhat.size() || x.empty())
        fail(Errc::shape_mismatch, "mse batch sizes must match and be non-empty");
    double total = 0.0;
    for (size_t m = 0; m < x.size(); ++m) {
        if (x[m].data.size() != xhat[m].data.size())
            fail(Errc::shape_mismatch, "mse pair size mismatch");
        double s = 0.0;
        for (size_t i = 0; i < x[m].data.size(); ++i) {
            double d = double(x[m].data[i]) - double(xhat[m].data[i]);
            s += d * d;
        }
        total += s;
    }
    return total / double(x.size());
}

double xent_loss(const std::vector<std::pair<double, int>>& batch) {
    if (batch.empty()) fail(Errc::empty_input, "xent batch is empty");
    double total = 0.0;
    for (auto [p1, y] : batch) {
        double p = y == 1 ? p1 : 1.0 - p1;
        p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
        total -= std::log(p);
    }
    return total / double(batch.size());
}

Tensor dropout(const Tensor& input, float rate, Mode mode, uint64_t seed) {
    if (rate < 0.0f || rate >= 1.0f) fail(Errc::bad_value, "dropout rate must be in [0,1)");
    if (mode == Mode::infer || rate == 0.0f) return input;
    Tensor out = input;
    Rng rng(seed);
    float scale = 1.0f / (1.0f - rate);
    for (auto& v : out.data) v = rng.uniform() >= double(rate) ? v * scale : 0.0f;
    return out;
}

Tensor forward(const Network& net, const Tensor& input, Mode mode, Rng* dropout_rng) {
    Trace trace;
    std::vector<double> in = widen(input);
    forward_trace(net, in, input.shape, mode, dropout_rng, trace);
    return narrow(trace.act.back(), trace.shape.back());
}

Grads backward(const Network& net, const Tensor& input, LossKind kind, const Tensor& mse_target,
               int xent_label) {
    Trace trace;
    std::vector<double> in = widen(input);
    forward_trace(net, in, input.shape, Mode::infer, nullptr, trace);
    std::vector<double> target = widen(mse_target);
    std::vector<double> ograd;
    loss_and_output_grad(kind, trace.act.back(), target, xent_label, ograd);
    Grads grads = make_grads(net);
    backward_trace(net, trace, ograd, grads);
    return grads;
}

ModelStats model_stats(const Network& net, std::span<const int> input_shape) {
    ModelStats st;
    std::vector<int> shape(input_shape.begin(), input_shape.end());
    for (const auto& layer : net.layers) {
        if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            st.parameters += int64_t(d->w.size()) + int64_t(d->b.size());
            st.flops += 2ll * d->in * d->out;
            shape = {d->out};
        } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
            st.parameters += int64_t(c->w.size()) + int64_t(c->b.size());
            int64_t hw = int64_t(shape[1]) * shape[2];
            st.flops += 2ll * c->k * c->k * c->in_ch * c->out_ch * hw;
            shape = {c->out_ch, shape[1], shape[2]};
        } else if (std::holds_alternative<MaxPoolLayer>(layer)) {
            shape = {shape[0], (shape[1] + 1) / 2, (shape[2] + 1) / 2};
        }
    }
    return st;
}

// ---- checkpoint io ----

namespace {

constexpr char kCkptMagic[8] = {'N', 'F', 'P', 'R', '0', '0', '0', '1'};

nlohmann::json layer_to_json(const Layer& layer) {
    nlohmann::json j;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        j["kind"] = "dense";
        j["in"] = d->in;
        j["out"] = d->out;
        j["act"] = d->act == Activation::relu ? "relu" : "linear";
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
        j["kind"] = "conv";
        j["in_ch"] = c->in_ch;
        j["out_ch"] = c->out_ch;
        j["k"] = c->k;
    } else if (std::holds_alternative<MaxPoolLayer>(layer)) {
        j["kind"] = "maxpool";
    } else if (const auto* dr = std::get_if<DropoutLayer>(&layer)) {
        j["kind"] = "dropout";
        j["rate"] = dr->rate;
    } else {
        j["kind"] = "softmax";
    }
    return j;
}

Layer layer_from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "dense") {
        DenseLayer d;
        d.in = j.at("in").get<int>();
        d.out = j.at("out").get<int>();
        d.act = j.at("act").get<std::string>() == "relu" ? Activation::relu : Activation::linear;
        d.w.resize(size_t(d.in) * d.out);
        d.b.resize(size_t(d.out));
        return d;
    }
    if (kind == "conv") {
        ConvLayer c;
        c.in_ch = j.at("in_ch").get<int>();
        c.out_ch = j.at("out_ch").get<int>();
        c.k = j.at("k").get<int>();
        c.w.resize(size_t(c.out_ch) * c.in_ch * c.k * c.k);
        c.b.resize(size_t(c.out_ch));
        return c;
    }
    if (kind == "maxpool") return MaxPoolLayer{};
    if (kind == "dropout") return DropoutLayer{j.at("rate").get<float>()};
    if (kind == "softmax") return SoftmaxLayer{};
    fail(Errc::malformed_header, "unknown layer kind '" + kind + "' in checkpoint");
}

} // namespace

void save_blob(const std::filesystem::path& path, const std::string& header_json,
               std::span<const float> payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot create checkpoint " + path.string());
    out.write(kCkptMagic, 8);
    out.write(header_json.data(), std::streamsize(header_json.size()));
    out.put('\n');
    std::vector<char> raw(payload.size() * 4);
    for (size_t i = 0; i < payload.size(); ++i) {
        uint32_t u;
        std::memcpy(&u, &payload[i], 4);
        raw[4 * i] = char(u & 0xff);
        raw[4 * i + 1] = char((u >> 8) & 0xff);
        raw[4 * i + 2] = char((u >> 16) & 0xff);
        raw[4 * i + 3] = char((u >> 24) & 0xff);
    }
    out.write(raw.data(), std::streamsize(raw.size()));
    if (!out) fail(Errc::io_error, "short write to " + path.string());
}

std::pair<std::string, std::vector<float>> load_blob(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, "NFPR", 4) != 0)
        fail(Errc::malformed_header, "bad checkpoint magic in " + path.string());
    if (std::memcmp(magic, kCkptMagic, 8) != 0)
        fail(Errc::version_mismatch, "unsupported checkpoint version in " + path.string());
    std::string header;
    if (!std::getline(in, header))
        fail(Errc::malformed_header, "missing checkpoint header in " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() % 4 != 0)
        fail(Errc::truncated_payload, "checkpoint payload not a whole number of float32 values");
    std::vector<float> payload(raw.size() / 4);
    for (size_t i = 0; i < payload.size(); ++i) {
        uint32_t u = uint32_t(uint8_t(raw[4 * i])) | uint32_t(uint8_t(raw[4 * i + 1])) << 8 |
                     uint32_t(uint8_t(raw[4 * i + 2])) << 16 |
                     uint32_t(uint8_t(raw[4 * i + 3])) << 24;
        std::memcpy(&payload[i], &u, 4);
    }
    return {std::move(header), std::move(payload)};
}

void save_network(const std::filesystem::path& path, const Network& net,
                  const CheckpointMeta& meta) {
    nlohmann::json j;
    j["kind"] = "network";
    nlohmann::json layers = nlohmann::json::array();
    size_t total = 0;
    for (const auto& layer : net.layers) {
        layers.push_back(layer_to_json(layer));
        if (const auto* d = std::get_if<DenseLayer>(&layer)) total += d->w.size() + d->b.size();
        if (const auto* c = std::get_if<ConvLayer>(&layer)) total += c->w.size() + c->b.size();
    }
    j["layers"] = std::move(layers);
    j["adam"] = {{"t", meta.adam_t},
                 {"base_lr", meta.base_lr},
                 {"decay_rate", meta.decay_rate},
                 {"decay_every", meta.decay_every}};
    j["seed"] = meta.seed;
    j["iteration"] = meta.iteration;

    std::vector<float> payload;
    payload.reserve(total);
    for (const auto& layer : net.layers) {
        if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            payload.insert(payload.end(), d->w.begin(), d->w.end());
            payload.insert(payload.end(), d->b.begin(), d->b.end());
        } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
            payload.insert(payload.end(), c->w.begin(), c->w.end());
            payload.insert(payload.end(), c->b.begin(), c->b.end());
        }
    }
    save_blob(path, j.dump(), payload);
}

Network load_network(const std::filesystem::path& path, CheckpointMeta* meta) {
    auto [header, payload] = load_blob(path);
    Network net;
    try {
        nlohmann::json j = nlohmann::json::parse(header);
        if (j.at("kind").get<std::string>() != "network")
            fail(Errc::malformed_header, path.string() + " is not a network checkpoint");
        for (const auto& jl : j.at("layers")) net.layers.push_back(layer_from_json(jl));
        if (meta) {
            meta->seed = j.value("seed", uint64_t(0));
            meta->iteration = j.value("iteration", int64_t(0));
            if (j.contains("adam")) {
                meta->adam_t = j["adam"].value("t", int64_t(0));
                meta->base_lr = j["adam"].value("base_lr", 0.0);
                meta->decay_rate = j["adam"].value("decay_rate", 0.0);
                meta->decay_every = j["adam"].value("decay_every", int64_t(0));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_header,
             "unparsable checkpoint header in " + path.string() + ": " + e.what());
    }
    size_t pos = 0;
    for (auto& layer : net.layers) {
        auto take = [&](std::vector<float>& dst) {
            if (pos + dst.size() > payload.size())
                fail(Errc::truncated_payload, "checkpoint payload shorter than layer shapes imply");
            std::copy(payload.begin() + pos, payload.begin() + pos + dst.size(), dst.begin());
            pos += dst.size();
        };
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            take(d->w);
            take(d->b);
        } else if (auto* c = std::get_if<ConvLayer>(&layer)) {
            take(c->w);
            take(c->b);
        }
    }
    if (pos != payload.size())
        fail(Errc::size_mismatch, "checkpoint payload longer than layer shapes imply");
    return net;
}

void init_gaussian(Network& net, double conv_sigma, double dense_sigma, uint64_t seed) {
    Rng rng(derive_seed(seed, "init"));
    for (auto& layer : net.layers) {
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            for (auto& v : d->w) v = float(rng.normal(0.0, dense_sigma));
            std::fill(d->b.begin(), d->b.end(), 0.0f);
        } else if (auto* c = std::get_if<ConvLayer>(&layer)) {
            for (auto& v : c->w) v = float(rng.normal(0.0, conv_sigma));
            std::fill(c->b.begin(), c->b.end(), 0.0f);
        }
    }
}

} // namespace fpr::nn

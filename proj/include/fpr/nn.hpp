#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fpr/rng.hpp"

namespace fpr::nn {

// Parameters and data interchange are float32; layer arithmetic runs in double.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) { data.resize(numel()); }
    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}

    size_t numel() const {
        size_t n = 1;
        for (int d : shape) n *= size_t(d);
        return n;
    }
};

enum class Activation { relu, linear };
enum class Mode { train, infer };
enum class LossKind { mse, xent };

struct DenseLayer {
    int in = 0, out = 0;
    Activation act = Activation::relu;
    std::vector<float> w; // out x in, row-major
    std::vector<float> b; // out
};

// 2D convolution with ReLU; odd square kernels, zero padding preserves H x W.
struct ConvLayer {
    int in_ch = 0, out_ch = 0, k = 3;
    std::vector<float> w; // [out_ch][in_ch][k][k]
    std::vector<float> b; // out_ch
};

struct MaxPoolLayer {}; // 2x2 non-overlapping, partial windows at odd edges

struct DropoutLayer {
    float rate = 0.5f;
};

struct SoftmaxLayer {}; // 2-class head, max-subtracted for stability

using Layer = std::variant<DenseLayer, ConvLayer, MaxPoolLayer, DropoutLayer, SoftmaxLayer>;

struct Network {
    std::vector<Layer> layers;
};

// Per-sample forward record; owned by the training loop and reused across samples.
struct Trace {
    std::vector<std::vector<double>> act;    // act[0] = input, act[i+1] = output of layer i
    std::vector<std::vector<int>> shape;     // shape of each act entry
    std::vector<std::vector<int32_t>> pool_src; // per layer, argmax source per pooled output
    std::vector<std::vector<uint8_t>> drop_keep; // per layer, kept-unit mask in train mode
};

struct Grads {
    std::vector<std::vector<double>> gw, gb; // parallel to Network::layers

    void reset();
};

Grads make_grads(const Network& net);

void forward_trace(const Network& net, std::span<const double> input,
                   std::span<const int> input_shape, Mode mode, Rng* dropout_rng, Trace& trace);

// Accumulates parameter gradients given dL/d(output of the last layer).
void backward_trace(const Network& net, const Trace& trace, std::span<const double> output_grad,
                    Grads& grads);

// Loss of a traced forward pass plus dL/d(output); target is the flat target
// vector for mse, the true class index for xent.
double loss_and_output_grad(LossKind kind, std::span<const double> output,
                            std::span<const double> mse_target, int xent_label,
                            std::vector<double>& output_grad);

struct AdamState {
    double base_lr = 1e-3;
    double decay_rate = 0.04;
    int64_t decay_every = 1000;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int64_t t = 0;
    std::vector<std::vector<double>> mw, vw, mb, vb;
};

AdamState make_adam(const Network& net, double base_lr, double decay_rate, int64_t decay_every);
double effective_lr(const AdamState& state);

// One Adam update with bias correction; the step counter increments first, so
// the effective learning rate decays from the decay_every-th call onward.
void adam_step(AdamState& state, Network& net, const Grads& grads);

// ---- spec-level operations on float tensors ----

Tensor dense_forward(const DenseLayer& layer, const Tensor& input);
Tensor conv_forward(const ConvLayer& layer, const Tensor& input);

struct PoolResult {
    Tensor out;
    std::vector<int32_t> argmax;
};
PoolResult maxpool2(const Tensor& input);

std::array<double, 2> softmax2(double h0, double h1);

double mse_loss(const std::vector<Tensor>& x, const std::vector<Tensor>& xhat);

// batch of (probability of class 1, true label); probabilities are clamped to
// [1e-7, 1 - 1e-7] before the log
double xent_loss(const std::vector<std::pair<double, int>>& batch);

Tensor dropout(const Tensor& input, float rate, Mode mode, uint64_t seed);

Tensor forward(const Network& net, const Tensor& input, Mode mode = Mode::infer,
               Rng* dropout_rng = nullptr);

Grads backward(const Network& net, const Tensor& input, LossKind kind, const Tensor& mse_target,
               int xent_label);

struct ModelStats {
    int64_t parameters = 0;
    int64_t flops = 0; // multiply-add counted as 2, dense/conv inner products only
};
ModelStats model_stats(const Network& net, std::span<const int> input_shape);

// Checkpoint container: 8-byte magic "NFPR0001", one JSON header line, then all
// parameter tensors as little-endian float32 in layer order (w then b).
struct CheckpointMeta {
    uint64_t seed = 0;
    int64_t iteration = 0;
    double base_lr = 0.0, decay_rate = 0.0;
    int64_t decay_every = 0, adam_t = 0;
};
void save_network(const std::filesystem::path& path, const Network& net,
                  const CheckpointMeta& meta);
Network load_network(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

// Shared low-level container access (also used by the cluster model file).
void save_blob(const std::filesystem::path& path, const std::string& header_json,
               std::span<const float> payload);
std::pair<std::string, std::vector<float>> load_blob(const std::filesystem::path& path);

// Gaussian parameter initialization; biases stay zero.
void init_gaussian(Network& net, double conv_sigma, double dense_sigma, uint64_t seed);

} // namespace fpr::nn

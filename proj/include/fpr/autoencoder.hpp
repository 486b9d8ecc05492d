#pragma once

#include <cstdint>
#include <vector>

#include "fpr/nn.hpp"
#include "fpr/patch.hpp"

namespace fpr {

struct AeConfig {
    std::vector<int> hidden_widths{1024, 512, 384}; // encoder widths before the 256 code
    int code_dim = 256;
    double lr = 1e-3;
    double decay_rate = 0.04;
    int64_t decay_every = 1000;
    int batch = 64;
    int iterations = 4000;
    double init_sigma = 0.05;
    bool denoise = false;       // DAE regime: reconstruct the clean patch from a masked input
    double noise_level = 0.25;
};

struct AeTrainResult {
    nn::Network net;
    std::vector<double> loss_history; // per-iteration batch loss
};

// 4096 -> w1 -> w2 -> w3 -> code -> w3 -> w2 -> w1 -> 4096; hidden layers are
// ReLU, the reconstruction layer is linear.
nn::Network make_ae(const AeConfig& cfg);

AeTrainResult ae_train(const std::vector<Patch2D>& patches, const AeConfig& cfg, uint64_t seed);

// The code vector: activations after the fourth (bottleneck) layer.
std::vector<float> ae_encode(const nn::Network& net, const Patch2D& patch);

// Bulk encoding; shares one encoder prefix across patches.
std::vector<std::vector<float>> ae_encode_batch(const nn::Network& net,
                                                const std::vector<Patch2D>& patches);

// Masking corruption: each pixel zeroed independently with probability noise_level.
Patch2D ae_corrupt(const Patch2D& patch, double noise_level, uint64_t seed);

} // namespace fpr

#include "fpr/autoencoder.hpp"

#include <algorithm>

#include "fpr/error.hpp"

namespace fpr {

nn::Network make_ae(const AeConfig& cfg) {
    if (cfg.hidden_widths.size() != 3) fail(Errc::invalid_config, "autoencoder needs 3 hidden widths");
    std::vector<int> widths{kPatchPixels};
    widths.insert(widths.end(), cfg.hidden_widths.begin(), cfg.hidden_widths.end());
    widths.push_back(cfg.code_dim);
    for (size_t i = cfg.hidden_widths.size(); i-- > 0;) widths.push_back(cfg.hidden_widths[i]);
    widths.push_back(kPatchPixels);

    nn::Network net;
    for (size_t i = 0; i + 1 < widths.size(); ++i) {
        nn::DenseLayer d;
        d.in = widths[i];
        d.out = widths[i + 1];
        d.act = i + 2 == widths.size() ? nn::Activation::linear : nn::Activation::relu;
        d.w.resize(size_t(d.in) * d.out);
        d.b.resize(size_t(d.out));
        net.layers.emplace_back(std::move(d));
    }
    return net;
}

AeTrainResult ae_train(const std::vector<Patch2D>& patches, const AeConfig& cfg, uint64_t seed) {
    if (patches.empty()) fail(Errc::empty_input, "autoencoder training needs at least one patch");

    AeTrainResult res;
    res.net = make_ae(cfg);
    nn::init_gaussian(res.net, cfg.init_sigma, cfg.init_sigma, derive_seed(seed, "ae-init"));
    nn::AdamState adam = nn::make_adam(res.net, cfg.lr, cfg.decay_rate, cfg.decay_every);

    Rng batch_rng(derive_seed(seed, "ae-batch"));
    Rng noise_rng(derive_seed(seed, "ae-noise"));

    nn::Trace trace;
    nn::Grads grads = nn::make_grads(res.net);
    std::vector<double> input(kPatchPixels), clean(kPatchPixels), ograd;
    std::vector<int> in_shape{kPatchPixels};

    res.loss_history.reserve(size_t(cfg.iterations));
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        grads.reset();
        double batch_loss = 0.0;
        for (int s = 0; s < cfg.batch; ++s) {
            const Patch2D& p = patches[size_t(batch_rng.uniform_index(patches.size()))];
            for (int i = 0; i < kPatchPixels; ++i) clean[size_t(i)] = double(p.pixels[size_t(i)]);
            input = clean;
            if (cfg.denoise && cfg.noise_level > 0.0)
                for (auto& v : input)
                    if (noise_rng.uniform() < cfg.noise_level) v = 0.0;
            nn::forward_trace(res.net, input, in_shape, nn::Mode::train, nullptr, trace);
            // DAE reconstructs the clean patch from the corrupted input
            batch_loss +=
                nn::loss_and_output_grad(nn::LossKind::mse, trace.act.back(), clean, 0, ograd);
            nn::backward_trace(res.net, trace, ograd, grads);
        }
        double scale = 1.0 / double(cfg.batch);
        for (auto& g : grads.gw)
            for (auto& v : g) v *= scale;
        for (auto& g : grads.gb)
            for (auto& v : g) v *= scale;
        res.loss_history.push_back(batch_loss * scale);
        nn::adam_step(adam, res.net, grads);
    }
    return res;
}

std::vector<float> ae_encode(const nn::Network& net, const Patch2D& patch) {
    return ae_encode_batch(net, {patch}).front();
}

std::vector<std::vector<float>> ae_encode_batch(const nn::Network& net,
                                                const std::vector<Patch2D>& patches) {
    if (net.layers.size() < 4) fail(Errc::shape_mismatch, "autoencoder has fewer than 4 layers");
    nn::Network encoder;
    encoder.layers.assign(net.layers.begin(), net.layers.begin() + 4);
    std::vector<std::vector<float>> codes;
    codes.reserve(patches.size());
    for (const auto& p : patches) {
        nn::Tensor in({kPatchPixels}, p.pixels);
        codes.push_back(nn::forward(encoder, in).data);
    }
    return codes;
}

Patch2D ae_corrupt(const Patch2D& patch, double noise_level, uint64_t seed) {
    if (noise_level < 0.0 || noise_level >= 1.0)
        fail(Errc::bad_value, "noise_level must be in [0,1)");
    Patch2D out = patch;
    Rng rng(derive_seed(seed, "corrupt"));
    for (auto& v : out.pixels)
        if (rng.uniform() < noise_level) v = 0.0f;
    return out;
}

} // namespace fpr

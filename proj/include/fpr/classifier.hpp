#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fpr/nn.hpp"
#include "fpr/patch.hpp"

namespace fpr {

enum class Regime { ae, dae, r, a, s };

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& name);

struct CnnConfig {
    std::array<int, 3> kernels{9, 5, 3};
    std::array<int, 3> channels{48, 48, 24};
    int dense_units = 48;
    float dropout = 0.5f;
    double lr = 1e-3;
    double decay_rate = 0.04;
    int64_t decay_every = 500;
    int batch = 32;
    int iterations = 2000;
    int val_every = 200;
    int patience = 5;
    double conv_init_sigma = 0.05;
    double dense_init_sigma = 0.04;
};

// conv(k1,3->c1) pool conv(k2,c1->c2) pool conv(k3,c2->c3) pool
// dense(->48 relu) dropout dense(->2) softmax, for 64x64x3 inputs.
nn::Network make_cnn(const CnnConfig& cfg);

// Per-member training sets: nodules are shared, non-nodules differ by regime.
struct RegimeDatasets {
    Regime regime = Regime::ae;
    std::vector<int> nodule_rows;                    // indices into the candidate table
    std::vector<std::vector<int>> member_non_nodules; // one list per member
};

// AE/DAE partition the pool by cluster id, R splits it at random into K
// near-equal parts, A replicates the full pool per member, S is one member
// with the full pool.
RegimeDatasets build_regime_datasets(const std::vector<int>& nodule_rows,
                                     const std::vector<int>& non_nodule_rows, Regime regime,
                                     const std::vector<int>& cluster_assignments, int k,
                                     uint64_t seed);

struct CnnTrainSet {
    std::vector<Patch3C> nodules;     // augmented
    std::vector<Patch3C> non_nodules;
};

struct CnnHistory {
    std::vector<double> loss;       // per iteration
    std::vector<double> val_loss;   // per evaluation
    int stopped_at = 0;             // iterations actually run
};

// Class-balanced batches, Adam with step decay, dropout on the 48-unit layer,
// early stop when validation loss fails to improve `patience` evaluations in
// a row. Deterministic under seed.
std::pair<nn::Network, CnnHistory> cnn_train(const CnnTrainSet& train,
                                             const CnnTrainSet& validation, const CnnConfig& cfg,
                                             uint64_t seed);

std::array<double, 2> predict_single(const nn::Network& model, const Patch3C& patch);

struct Ensemble {
    std::vector<nn::Network> members;
    Regime regime = Regime::ae;
    std::string cluster_model_path; // set for AE/DAE
};

std::array<double, 2> predict_ensemble(const Ensemble& ensemble, const Patch3C& patch);

// K member checkpoints next to a JSON manifest.
void save_ensemble(const std::filesystem::path& dir, const Ensemble& ensemble,
                   const std::vector<uint64_t>& member_seeds);
Ensemble load_ensemble(const std::filesystem::path& dir);

} // namespace fpr

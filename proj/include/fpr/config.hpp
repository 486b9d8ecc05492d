#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fpr/autoencoder.hpp"
#include "fpr/classifier.hpp"
#include "fpr/phantom.hpp"

namespace fpr {

// Everything a pipeline run needs, loaded from a sectioned key = value file.
struct PipelineConfig {
    // [data]
    std::string data_dir = "out/phantom";
    std::string out_dir = "out";
    // [phantom]
    PhantomSpec phantom;
    // [folds]
    int fold_count = 8;
    double validation_fraction = 0.10;
    // [ae]
    AeConfig ae;
    // [cluster]
    int k = 5;
    int restarts = 10;
    int cluster_max_iterations = 300;
    double eps_zero = 1e-9;
    // [cnn]
    CnnConfig cnn;
    // [eval]
    std::vector<double> fp_levels{0.125, 0.25, 0.5, 1, 2, 4, 8};
    int bootstrap_resamples = 1000;
    std::string irrelevant_file;
    // [run]
    Regime regime = Regime::ae;
    int fold = 0;
    uint64_t master_seed = 20240101;
    int workers = 0; // 0 = hardware concurrency

    void validate();
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text, const std::string& origin = "<config>");

// Canonical serialization; its hash identifies the run in manifests.
std::string dump_config(const PipelineConfig& cfg);
uint64_t config_hash(const PipelineConfig& cfg);

} // namespace fpr

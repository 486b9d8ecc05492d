#pragma once

#include <string>
#include <vector>

#include "fpr/config.hpp"

namespace fpr {

// Pipeline stages, in dependency order. "all" runs every stage the configured
// regime needs (ae/dae include feature extraction and clustering, r/a/s skip it).
inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{
        "phantom",       "folds",   "train-ae", "extract-features", "cluster",
        "build-sets",    "train-ensemble", "predict",  "evaluate",  "stats", "all"};
    return names;
}

// Runs one stage: checks prerequisites, writes the artifact plus a JSON run
// manifest (config hash, seeds, input hashes, timings). Throws fpr::Error.
void run_command(const std::string& command, const PipelineConfig& cfg);

} // namespace fpr

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fpr/volume.hpp"

namespace fpr {

// Synthetic labeled CT-like data: noisy background, spherical nodules, and
// three non-nodule morphologies (vessel cylinders, wall slabs, lumpy blobs).
struct PhantomSpec {
    int scan_count = 16;
    std::array<int, 3> dims{128, 128, 32};
    std::array<double, 3> spacing_mm{0.74, 0.74, 2.5};
    double bg_mean_hu = -850.0;
    double bg_sigma_hu = 25.0;
    int nodules_per_scan = 10;
    double nodule_radius_min_vox = 3.5;
    double nodule_radius_max_vox = 6.0;
    double nodule_hu_lo = -80.0;
    double nodule_hu_hi = 100.0;
    int non_nodules_per_scan = 40;
    std::array<double, 3> mix_weights{1.0, 1.0, 3.0}; // vessel, wall, blob; normalized to fractions
    double jitter_sigma_mm = 0.6;
    uint64_t seed = 1;

    std::array<double, 3> mix_fractions() const;
    void validate() const;
};

struct PhantomScan {
    CtVolume volume;
    std::vector<Candidate> candidates;
    std::vector<NoduleAnnotation> annotations;
    std::vector<std::string> structure_labels; // per candidate: nodule|vessel|wall|blob
};

// Deterministic under (spec.seed, scan_index).
PhantomScan gen_scan(const PhantomSpec& spec, int scan_index);

// Writes scans/<id>.rvol, candidates.csv, annotations.csv and structures.csv
// ("seriesuid,candidate_index,structure", global candidate row indices).
void gen_dataset(const PhantomSpec& spec, const std::filesystem::path& out_dir);

} // namespace fpr

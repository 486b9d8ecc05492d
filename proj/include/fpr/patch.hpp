#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpr/volume.hpp"

namespace fpr {

constexpr int kPatchSize = 64;
constexpr int kPatchPixels = kPatchSize * kPatchSize;

struct PatchSource {
    std::string scan_id;
    int candidate_index = -1;
};

// Single axial 64x64 window, normalized to [0,1], row-major.
struct Patch2D {
    std::vector<float> pixels; // kPatchPixels
    PatchSource source;
};

// Three adjacent axial slices (k-1, k, k+1), channel-major [3][64][64].
struct Patch3C {
    std::vector<float> pixels; // 3 * kPatchPixels
    int label = 0;
    PatchSource source;
};

// 8-fold split of scans into test / train / validation sets.
struct FoldPlan {
    int fold_count = 8;
    struct Fold {
        std::vector<std::string> test;
        std::vector<std::string> train;
        std::vector<std::string> validation;
    };
    std::vector<Fold> folds;
};

// Window centered on the candidate's voxel (offsets -32..31 per axis); samples
// outside the volume read as normalized air (0).
Patch2D extract_patch2d(const CtVolume& vol, const Candidate& cand, int candidate_index = -1);
Patch3C extract_patch3c(const CtVolume& vol, const Candidate& cand, int candidate_index = -1);

// Geometric transforms on a 64x64 channel plane set; used by augmentation.
Patch3C translate_patch(const Patch3C& p, int dx, int dy); // zero fill at the vacated edge
Patch3C rotate_patch(const Patch3C& p, int quarter_turns);
Patch3C flip_patch_h(const Patch3C& p);
Patch3C flip_patch_v(const Patch3C& p);

// Exactly 49 patches: the identity plus 48 seeded combinations of translation
// (|dx|,|dy| <= 4), rotation by 90/180/270 and horizontal/vertical flips.
std::vector<Patch3C> augment_nodule(const Patch3C& patch, uint64_t seed);

// Deterministic under seed: 8 near-equal test subsets; per fold the validation
// set is floor(10%) of the non-test scans and the rest trains.
FoldPlan build_folds(const std::vector<std::string>& scan_ids, uint64_t seed, int fold_count = 8,
                     double validation_fraction = 0.10);

std::string fold_plan_to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const std::string& text);

} // namespace fpr

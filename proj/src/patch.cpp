#include "fpr/patch.hpp"

#include <algorithm>

#include <json.hpp>

#include "fpr/error.hpp"
#include "fpr/rng.hpp"

namespace fpr {

namespace {

constexpr int kHalf = kPatchSize / 2;

// One 64x64 plane from axial slice z, centered at voxel (ci, cj).
void fill_plane(const CtVolume& vol, int ci, int cj, int z, float* out) {
    bool slice_ok = z >= 0 && z < vol.dims[2];
    for (int r = 0; r < kPatchSize; ++r) {
        int y = cj + r - kHalf;
        for (int c = 0; c < kPatchSize; ++c) {
            int x = ci + c - kHalf;
            float v = 0.0f;
            if (slice_ok && x >= 0 && x < vol.dims[0] && y >= 0 && y < vol.dims[1])
                v = normalize_hu(vol.at(x, y, z));
            out[r * kPatchSize + c] = v;
        }
    }
}

} // namespace

Patch2D extract_patch2d(const CtVolume& vol, const Candidate& cand, int candidate_index) {
    auto idx = world_to_voxel(vol, cand.world_mm);
    if (idx[2] < 0 || idx[2] >= vol.dims[2])
        fail(Errc::out_of_volume, "candidate slice index " + std::to_string(idx[2]) +
                                      " outside [0," + std::to_string(vol.dims[2]) + ") for scan " +
                                      vol.scan_id);
    Patch2D p;
    p.pixels.resize(kPatchPixels);
    p.source = {cand.scan_id, candidate_index};
    fill_plane(vol, int(idx[0]), int(idx[1]), int(idx[2]), p.pixels.data());
    return p;
}

Patch3C extract_patch3c(const CtVolume& vol, const Candidate& cand, int candidate_index) {
    auto idx = world_to_voxel(vol, cand.world_mm);
    if (idx[2] < 0 || idx[2] >= vol.dims[2])
        fail(Errc::out_of_volume, "candidate slice index " + std::to_string(idx[2]) +
                                      " outside [0," + std::to_string(vol.dims[2]) + ") for scan " +
                                      vol.scan_id);
    Patch3C p;
    p.pixels.resize(3 * kPatchPixels);
    p.label = cand.label.value_or(0);
    p.source = {cand.scan_id, candidate_index};
    for (int ch = 0; ch < 3; ++ch) {
        int z = int(idx[2]) + ch - 1; // slices k-1, k, k+1
        float* plane = p.pixels.data() + ch * kPatchPixels;
        if (z < 0 || z >= vol.dims[2])
            std::fill(plane, plane + kPatchPixels, 0.0f);
        else
            fill_plane(vol, int(idx[0]), int(idx[1]), z, plane);
    }
    return p;
}

Patch3C translate_patch(const Patch3C& p, int dx, int dy) {
    Patch3C out = p;
    for (int ch = 0; ch < 3; ++ch) {
        const float* src = p.pixels.data() + ch * kPatchPixels;
        float* dst = out.pixels.data() + ch * kPatchPixels;
        for (int r = 0; r < kPatchSize; ++r) {
            // content shifts by (dx, dy); source pixel is at (r - dy, c - dx)
            int sr = r - dy;
            for (int c = 0; c < kPatchSize; ++c) {
                int sc = c - dx;
                bool ok = sr >= 0 && sr < kPatchSize && sc >= 0 && sc < kPatchSize;
                dst[r * kPatchSize + c] = ok ? src[sr * kPatchSize + sc] : 0.0f;
            }
        }
    }
    return out;
}

Patch3C rotate_patch(const Patch3C& p, int quarter_turns) {
    int q = ((quarter_turns % 4) + 4) % 4;
    if (q == 0) return p;
    Patch3C out = p;
    const int n = kPatchSize;
    for (int ch = 0; ch < 3; ++ch) {
        const float* src = p.pixels.data() + ch * kPatchPixels;
        float* dst = out.pixels.data() + ch * kPatchPixels;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                int sr, sc; // source of the rotated pixel (counterclockwise turns)
                if (q == 1) {
                    sr = c;
                    sc = n - 1 - r;
                } else if (q == 2) {
                    sr = n - 1 - r;
                    sc = n - 1 - c;
                } else {
                    sr = n - 1 - c;
                    sc = r;
                }
                dst[r * n + c] = src[sr * n + sc];
            }
    }
    return out;
}

Patch3C flip_patch_h(const Patch3C& p) {
    Patch3C out = p;
    const int n = kPatchSize;
    for (int ch = 0; ch < 3; ++ch) {
        const float* src = p.pixels.data() + ch * kPatchPixels;
        float* dst = out.pixels.data() + ch * kPatchPixels;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) dst[r * n + c] = src[r * n + (n - 1 - c)];
    }
    return out;
}

Patch3C flip_patch_v(const Patch3C& p) {
    Patch3C out = p;
    const int n = kPatchSize;
    for (int ch = 0; ch < 3; ++ch) {
        const float* src = p.pixels.data() + ch * kPatchPixels;
        float* dst = out.pixels.data() + ch * kPatchPixels;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) dst[r * n + c] = src[(n - 1 - r) * n + c];
    }
    return out;
}

std::vector<Patch3C> augment_nodule(const Patch3C& patch, uint64_t seed) {
    if (patch.label != 1) fail(Errc::bad_label, "augmentation applies to nodule patches only");

    struct Combo {
        int dx, dy, rot, flip; // flip: 0 none, 1 horizontal, 2 vertical
    };
    std::vector<Combo> combos;
    combos.reserve(81 * 4 * 3);
    for (int dx = -4; dx <= 4; ++dx)
        for (int dy = -4; dy <= 4; ++dy)
            for (int rot = 0; rot < 4; ++rot)
                for (int flip = 0; flip < 3; ++flip) {
                    if (dx == 0 && dy == 0 && rot == 0 && flip == 0) continue;
                    combos.push_back({dx, dy, rot, flip});
                }

    Rng rng(derive_seed(seed, "augment"));
    rng.shuffle(combos);
    combos.resize(48);

    std::vector<Patch3C> out;
    out.reserve(49);
    out.push_back(patch); // the identity is one of the 49
    for (const Combo& t : combos) {
        Patch3C q = translate_patch(patch, t.dx, t.dy);
        if (t.rot != 0) q = rotate_patch(q, t.rot);
        if (t.flip == 1) q = flip_patch_h(q);
        if (t.flip == 2) q = flip_patch_v(q);
        q.label = 1;
        out.push_back(std::move(q));
    }
    return out;
}

FoldPlan build_folds(const std::vector<std::string>& scan_ids, uint64_t seed, int fold_count,
                     double validation_fraction) {
    if (fold_count < 1) fail(Errc::bad_value, "fold_count must be positive");
    if (int(scan_ids.size()) < fold_count)
        fail(Errc::too_few_samples, std::to_string(scan_ids.size()) + " scans cannot fill " +
                                        std::to_string(fold_count) + " folds");

    std::vector<std::string> shuffled = scan_ids;
    Rng rng(derive_seed(seed, "folds"));
    rng.shuffle(shuffled);

    // near-equal subsets; the first (n mod fold_count) subsets take one extra
    size_t n = shuffled.size();
    std::vector<std::vector<std::string>> subsets(static_cast<size_t>(fold_count));
    size_t base = n / size_t(fold_count), extra = n % size_t(fold_count);
    size_t pos = 0;
    for (size_t f = 0; f < size_t(fold_count); ++f) {
        size_t take = base + (f < extra ? 1 : 0);
        subsets[f].assign(shuffled.begin() + pos, shuffled.begin() + pos + take);
        pos += take;
    }

    FoldPlan plan;
    plan.fold_count = fold_count;
    plan.folds.resize(size_t(fold_count));
    for (size_t f = 0; f < size_t(fold_count); ++f) {
        auto& fold = plan.folds[f];
        fold.test = subsets[f];
        std::vector<std::string> rest;
        for (size_t g = 0; g < subsets.size(); ++g)
            if (g != f) rest.insert(rest.end(), subsets[g].begin(), subsets[g].end());
        Rng fold_rng(derive_seed(seed, "fold-validation", f));
        fold_rng.shuffle(rest);
        size_t val = size_t(double(rest.size()) * validation_fraction);
        fold.validation.assign(rest.begin(), rest.begin() + val);
        fold.train.assign(rest.begin() + val, rest.end());
    }
    return plan;
}

std::string fold_plan_to_json(const FoldPlan& plan) {
    nlohmann::json j;
    j["fold_count"] = plan.fold_count;
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : plan.folds) {
        nlohmann::json jf;
        jf["test"] = f.test;
        jf["train"] = f.train;
        jf["validation"] = f.validation;
        folds.push_back(std::move(jf));
    }
    j["folds"] = std::move(folds);
    return j.dump(2) + "\n";
}

FoldPlan fold_plan_from_json(const std::string& text) {
    FoldPlan plan;
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        plan.fold_count = j.at("fold_count").get<int>();
        for (const auto& jf : j.at("folds")) {
            FoldPlan::Fold f;
            f.test = jf.at("test").get<std::vector<std::string>>();
            f.train = jf.at("train").get<std::vector<std::string>>();
            f.validation = jf.at("validation").get<std::vector<std::string>>();
            plan.folds.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_header, std::string("unparsable fold plan: ") + e.what());
    }
    if (int(plan.folds.size()) != plan.fold_count)
        fail(Errc::size_mismatch, "fold plan fold_count does not match fold list");
    return plan;
}

} // namespace fpr

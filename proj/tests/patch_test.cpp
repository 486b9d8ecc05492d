#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "fpr/error.hpp"
#include "fpr/patch.hpp"
#include "test_util.hpp"

using namespace fpr;

namespace {

CtVolume constant_volume(int nx, int ny, int nz, int16_t hu) {
    CtVolume vol;
    vol.scan_id = "const";
    vol.dims = {nx, ny, nz};
    vol.spacing_mm = {1, 1, 1};
    vol.origin_mm = {0, 0, 0};
    vol.voxels.assign(size_t(nx) * ny * nz, hu);
    return vol;
}

Candidate at_voxel(double x, double y, double z) {
    Candidate c;
    c.scan_id = "const";
    c.world_mm = {x, y, z};
    c.label = 1;
    return c;
}

} // namespace

TEST_CASE("patch of a constant -300 volume is all 0.5") {
    CtVolume vol = constant_volume(80, 80, 4, -300);
    Patch2D p = extract_patch2d(vol, at_voxel(40, 40, 2));
    REQUIRE(p.pixels.size() == size_t(kPatchPixels));
    for (float v : p.pixels) CHECK(v == 0.5f);
}

TEST_CASE("corner candidate sees one in-volume quadrant") {
    CtVolume vol = constant_volume(32, 32, 1, 400);
    Patch2D p = extract_patch2d(vol, at_voxel(0, 0, 0));
    for (int r = 0; r < kPatchSize; ++r)
        for (int c = 0; c < kPatchSize; ++c) {
            float v = p.pixels[size_t(r) * kPatchSize + c];
            if (r >= 32 && c >= 32)
                CHECK(v == 1.0f);
            else
                CHECK(v == 0.0f);
        }
}

TEST_CASE("slice index outside the volume is an error") {
    CtVolume vol = constant_volume(8, 8, 4, 0);
    try {
        extract_patch2d(vol, at_voxel(4, 4, 9));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::out_of_volume);
    }
}

TEST_CASE("three-channel patch stacks slices k-1, k, k+1") {
    SUBCASE("air volume is all zeros") {
        CtVolume vol = constant_volume(70, 70, 5, -1000);
        Patch3C p = extract_patch3c(vol, at_voxel(35, 35, 2));
        REQUIRE(p.pixels.size() == size_t(3 * kPatchPixels));
        for (float v : p.pixels) CHECK(v == 0.0f);
    }
    SUBCASE("candidate on slice 0 pads the first channel") {
        CtVolume vol = constant_volume(70, 70, 3, 400);
        Patch3C p = extract_patch3c(vol, at_voxel(35, 35, 0));
        for (int i = 0; i < kPatchPixels; ++i) CHECK(p.pixels[size_t(i)] == 0.0f);
        // channels 1 and 2 come from slices 0 and 1
        for (int ch = 1; ch < 3; ++ch) {
            const float* plane = p.pixels.data() + ch * kPatchPixels;
            CHECK(plane[32 * kPatchSize + 32] == 1.0f);
        }
    }
    SUBCASE("middle channel equals the 2d patch") {
        CtVolume vol = constant_volume(70, 70, 5, -120);
        for (size_t i = 0; i < vol.voxels.size(); ++i)
            vol.voxels[i] = int16_t(-900 + int(i % 700));
        Candidate c = at_voxel(30, 41, 2);
        Patch2D p2 = extract_patch2d(vol, c);
        Patch3C p3 = extract_patch3c(vol, c);
        for (int i = 0; i < kPatchPixels; ++i)
            CHECK(p3.pixels[size_t(kPatchPixels + i)] == p2.pixels[size_t(i)]);
    }
}

TEST_CASE("patch extraction is translation-consistent") {
    CtVolume vol = constant_volume(96, 96, 3, 0);
    for (size_t i = 0; i < vol.voxels.size(); ++i)
        vol.voxels[i] = int16_t(-1000 + int((i * 37) % 1400));
    Patch2D a = extract_patch2d(vol, at_voxel(48, 48, 1));
    Patch2D b = extract_patch2d(vol, at_voxel(49, 48, 1));
    // b is a shifted one column left relative to the volume content
    for (int r = 0; r < kPatchSize; ++r)
        for (int c = 0; c + 1 < kPatchSize; ++c)
            CHECK(b.pixels[size_t(r) * kPatchSize + c] == a.pixels[size_t(r) * kPatchSize + c + 1]);
}

namespace {

Patch3C ramp_patch() {
    Patch3C p;
    p.pixels.resize(size_t(3 * kPatchPixels));
    p.label = 1;
    for (size_t i = 0; i < p.pixels.size(); ++i)
        p.pixels[i] = float((i * 13 % 997) / 996.0);
    return p;
}

} // namespace

TEST_CASE("augmentation yields exactly 49 labeled nodule patches") {
    Patch3C base = ramp_patch();
    auto aug = augment_nodule(base, 7);
    REQUIRE(aug.size() == 49);
    CHECK(aug[0].pixels == base.pixels); // identity is one of the 49
    for (const auto& p : aug) {
        CHECK(p.label == 1);
        REQUIRE(p.pixels.size() == size_t(3 * kPatchPixels));
        for (float v : p.pixels) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
    // the Table-1 scale arithmetic: 1,055 nodules times 49 transforms
    CHECK(1055 * int(aug.size()) == 51695);
}

TEST_CASE("augmentation is deterministic and varied") {
    Patch3C base = ramp_patch();
    auto a = augment_nodule(base, 11);
    auto b = augment_nodule(base, 11);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].pixels == b[i].pixels);

    auto c = augment_nodule(base, 12);
    int differing = 0;
    for (size_t i = 1; i < a.size(); ++i)
        if (a[i].pixels != c[i].pixels) ++differing;
    CHECK(differing > 20);
}

TEST_CASE("flips are involutions and rotations compose to identity") {
    Patch3C base = ramp_patch();
    CHECK(flip_patch_h(flip_patch_h(base)).pixels == base.pixels);
    CHECK(flip_patch_v(flip_patch_v(base)).pixels == base.pixels);
    CHECK(rotate_patch(rotate_patch(base, 2), 2).pixels == base.pixels);
    CHECK(rotate_patch(rotate_patch(rotate_patch(rotate_patch(base, 1), 1), 1), 1).pixels ==
          base.pixels);
    CHECK(translate_patch(base, 0, 0).pixels == base.pixels);
}

TEST_CASE("augmentation requires a nodule") {
    Patch3C p = ramp_patch();
    p.label = 0;
    CHECK_THROWS_AS(augment_nodule(p, 1), Error);
}

namespace {

std::vector<std::string> scan_names(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("scan_" + std::to_string(i));
    return out;
}

} // namespace

TEST_CASE("fold plan matches the 888-scan arithmetic") {
    FoldPlan plan = build_folds(scan_names(888), 42);
    REQUIRE(plan.folds.size() == 8);
    for (const auto& f : plan.folds) {
        CHECK(f.test.size() == 111);
        CHECK(f.validation.size() == 77);
        CHECK(f.train.size() == 700);
    }
}

TEST_CASE("fold plan matches the 16-scan phantom arithmetic") {
    FoldPlan plan = build_folds(scan_names(16), 42);
    for (const auto& f : plan.folds) {
        CHECK(f.test.size() == 2);
        CHECK(f.validation.size() == 1);
        CHECK(f.train.size() == 13);
    }
}

TEST_CASE("fold plans partition the scans for any seed") {
    auto ids = scan_names(23);
    for (uint64_t seed : {1ull, 77ull, 1234567ull}) {
        FoldPlan plan = build_folds(ids, seed);
        std::set<std::string> tested;
        for (const auto& f : plan.folds) {
            std::set<std::string> all;
            for (const auto& s : f.test) {
                CHECK(all.insert(s).second);
                CHECK(tested.insert(s).second); // test-set membership is unique across folds
            }
            for (const auto& s : f.train) CHECK(all.insert(s).second);
            for (const auto& s : f.validation) CHECK(all.insert(s).second);
            CHECK(all.size() == ids.size());
        }
        CHECK(tested.size() == ids.size());
    }
}

TEST_CASE("fold plans are deterministic and serialize round trip") {
    FoldPlan a = build_folds(scan_names(16), 9);
    FoldPlan b = build_folds(scan_names(16), 9);
    std::string ja = fold_plan_to_json(a), jb = fold_plan_to_json(b);
    CHECK(ja == jb);
    FoldPlan back = fold_plan_from_json(ja);
    CHECK(fold_plan_to_json(back) == ja);

    FoldPlan c = build_folds(scan_names(16), 10);
    CHECK(fold_plan_to_json(c) != ja);
}

TEST_CASE("too few scans cannot fill the folds") {
    CHECK_THROWS_AS(build_folds(scan_names(5), 1), Error);
}

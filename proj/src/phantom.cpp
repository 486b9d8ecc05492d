#include "fpr/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fpr/error.hpp"
#include "fpr/rng.hpp"

namespace fpr {

namespace {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

Vec3 sub(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 random_unit(Rng& rng) {
    while (true) {
        Vec3 v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        double n = norm(v);
        if (n > 1e-3 && n <= 1.0) return {v.x / n, v.y / n, v.z / n};
    }
}

Vec3 world_of(const CtVolume& vol, int x, int y, int z) {
    return {vol.origin_mm[0] + x * vol.spacing_mm[0], vol.origin_mm[1] + y * vol.spacing_mm[1],
            vol.origin_mm[2] + z * vol.spacing_mm[2]};
}

void put_hu(CtVolume& vol, int x, int y, int z, double hu) {
    double v = std::clamp(hu, -32768.0, 32767.0);
    vol.at(x, y, z) = int16_t(std::lround(v));
}

// paint every voxel within radius_mm of center (world space)
void paint_sphere(CtVolume& vol, Rng& rng, const Vec3& center, double radius_mm, double hu,
                  double hu_noise) {
    int rx = int(std::ceil(radius_mm / vol.spacing_mm[0])) + 1;
    int ry = int(std::ceil(radius_mm / vol.spacing_mm[1])) + 1;
    int rz = int(std::ceil(radius_mm / vol.spacing_mm[2])) + 1;
    auto ci = world_to_voxel(vol, {center.x, center.y, center.z});
    for (int z = int(ci[2]) - rz; z <= int(ci[2]) + rz; ++z)
        for (int y = int(ci[1]) - ry; y <= int(ci[1]) + ry; ++y)
            for (int x = int(ci[0]) - rx; x <= int(ci[0]) + rx; ++x) {
                if (!vol.in_bounds(x, y, z)) continue;
                Vec3 d = sub(world_of(vol, x, y, z), center);
                if (norm(d) <= radius_mm) put_hu(vol, x, y, z, hu + rng.normal(0, hu_noise));
            }
}

void paint_cylinder(CtVolume& vol, Rng& rng, const Vec3& center, const Vec3& axis,
                    double half_len_mm, double radius_mm, double hu, double hu_noise) {
    for (int z = 0; z < vol.dims[2]; ++z)
        for (int y = 0; y < vol.dims[1]; ++y)
            for (int x = 0; x < vol.dims[0]; ++x) {
                Vec3 d = sub(world_of(vol, x, y, z), center);
                double t = dot(d, axis);
                if (std::abs(t) > half_len_mm) continue;
                Vec3 radial{d.x - t * axis.x, d.y - t * axis.y, d.z - t * axis.z};
                if (norm(radial) <= radius_mm) put_hu(vol, x, y, z, hu + rng.normal(0, hu_noise));
            }
}

// a finite wall segment: slab clipped to a local z-band around its anchor
void paint_slab(CtVolume& vol, Rng& rng, const Vec3& point, const Vec3& normal,
                double half_thickness_mm, double z_extent_mm, double hu, double hu_noise) {
    for (int z = 0; z < vol.dims[2]; ++z)
        for (int y = 0; y < vol.dims[1]; ++y)
            for (int x = 0; x < vol.dims[0]; ++x) {
                Vec3 w = world_of(vol, x, y, z);
                if (std::abs(w.z - point.z) > z_extent_mm) continue;
                Vec3 d = sub(w, point);
                if (std::abs(dot(d, normal)) <= half_thickness_mm)
                    put_hu(vol, x, y, z, hu + rng.normal(0, hu_noise));
            }
}

struct Placed {
    Vec3 center;
    double radius_mm;
};

// rejection-sample a center whose exclusion sphere clears existing structures
Vec3 place_center(const CtVolume& vol, Rng& rng, double margin_vox_xy, double margin_vox_z,
                  double radius_mm, std::vector<Placed>& placed, const char* what) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        double fx = rng.uniform(margin_vox_xy, vol.dims[0] - 1 - margin_vox_xy);
        double fy = rng.uniform(margin_vox_xy, vol.dims[1] - 1 - margin_vox_xy);
        double fz = rng.uniform(margin_vox_z, vol.dims[2] - 1 - margin_vox_z);
        Vec3 c{vol.origin_mm[0] + fx * vol.spacing_mm[0], vol.origin_mm[1] + fy * vol.spacing_mm[1],
               vol.origin_mm[2] + fz * vol.spacing_mm[2]};
        bool ok = true;
        for (const Placed& p : placed)
            if (norm(sub(c, p.center)) < p.radius_mm + radius_mm) {
                ok = false;
                break;
            }
        if (ok) {
            placed.push_back({c, radius_mm});
            return c;
        }
    }
    fail(Errc::placement_failed,
         std::string(what) + " does not fit in the volume after 100 placement attempts");
}

} // namespace

std::array<double, 3> PhantomSpec::mix_fractions() const {
    double total = mix_weights[0] + mix_weights[1] + mix_weights[2];
    if (total <= 0.0) fail(Errc::invalid_config, "structure mix weights must be positive");
    return {mix_weights[0] / total, mix_weights[1] / total, mix_weights[2] / total};
}

void PhantomSpec::validate() const {
    if (scan_count < 0 || nodules_per_scan < 0 || non_nodules_per_scan < 0)
        fail(Errc::invalid_config, "phantom counts must be non-negative");
    for (int d : dims)
        if (d <= 0) fail(Errc::invalid_config, "phantom dims must be positive");
    for (double s : spacing_mm)
        if (s <= 0) fail(Errc::invalid_config, "phantom spacing must be positive");
    if (nodule_radius_min_vox <= 0 || nodule_radius_max_vox < nodule_radius_min_vox)
        fail(Errc::invalid_config, "bad nodule radius range");
    double max_d = 2.0 * nodule_radius_max_vox;
    if (max_d >= dims[0] || max_d >= dims[1])
        fail(Errc::invalid_config, "largest nodule does not fit in the in-plane grid");
    mix_fractions();
}

PhantomScan gen_scan(const PhantomSpec& spec, int scan_index) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, "scan", uint64_t(scan_index)));

    PhantomScan scan;
    CtVolume& vol = scan.volume;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "phantom_%03d", scan_index);
    vol.scan_id = idbuf;
    vol.dims = spec.dims;
    vol.spacing_mm = spec.spacing_mm;
    vol.origin_mm = {-0.5 * spec.dims[0] * spec.spacing_mm[0],
                     -0.5 * spec.dims[1] * spec.spacing_mm[1],
                     -0.5 * spec.dims[2] * spec.spacing_mm[2]};
    vol.voxels.resize(size_t(spec.dims[0]) * spec.dims[1] * spec.dims[2]);
    for (auto& v : vol.voxels)
        v = int16_t(std::lround(std::clamp(rng.normal(spec.bg_mean_hu, spec.bg_sigma_hu), -32768.0, 32767.0)));

    // apportion non-nodules by largest remainder so counts match exactly
    auto frac = spec.mix_fractions();
    std::array<int, 3> counts{};
    std::array<double, 3> rem{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double exact = frac[size_t(i)] * spec.non_nodules_per_scan;
        counts[size_t(i)] = int(exact);
        rem[size_t(i)] = exact - counts[size_t(i)];
        assigned += counts[size_t(i)];
    }
    while (assigned < spec.non_nodules_per_scan) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (rem[size_t(i)] > rem[size_t(best)]) best = i;
        counts[size_t(best)] += 1;
        rem[size_t(best)] = -1.0;
        ++assigned;
    }

    std::vector<Placed> placed;
    auto add_candidate = [&](const Vec3& c, int label, const std::string& kind) {
        Candidate cand;
        cand.scan_id = vol.scan_id;
        cand.world_mm = {c.x + rng.normal(0, spec.jitter_sigma_mm),
                         c.y + rng.normal(0, spec.jitter_sigma_mm),
                         c.z + rng.normal(0, spec.jitter_sigma_mm)};
        // keep the jittered point inside the grid so patch extraction stays legal
        for (int a = 0; a < 3; ++a) {
            double lo = vol.origin_mm[size_t(a)];
            double hi = vol.origin_mm[size_t(a)] + (vol.dims[size_t(a)] - 1) * vol.spacing_mm[size_t(a)];
            cand.world_mm[size_t(a)] = std::clamp(cand.world_mm[size_t(a)], lo, hi);
        }
        cand.label = label;
        scan.candidates.push_back(std::move(cand));
        scan.structure_labels.push_back(kind);
    };

    // nodules: bright-ish spheres, painted last so their centers stay clean
    struct NoduleDef {
        Vec3 c;
        double r_mm, hu;
    };
    std::vector<NoduleDef> nodules;
    for (int i = 0; i < spec.nodules_per_scan; ++i) {
        double r_vox = rng.uniform(spec.nodule_radius_min_vox, spec.nodule_radius_max_vox);
        double r_mm = r_vox * spec.spacing_mm[0];
        Vec3 c = place_center(vol, rng, std::max(r_vox + 1.0, 22.0),
                              std::max(8.0, r_mm / spec.spacing_mm[2]), r_mm + 1.0, placed,
                              "nodule");
        double hu = rng.uniform(spec.nodule_hu_lo, spec.nodule_hu_hi);
        nodules.push_back({c, r_mm, hu});
        NoduleAnnotation ann;
        ann.scan_id = vol.scan_id;
        ann.center_mm = {c.x, c.y, c.z};
        ann.diameter_mm = 2.0 * r_mm;
        scan.annotations.push_back(std::move(ann));
        add_candidate(c, 1, "nodule");
    }

    for (int i = 0; i < counts[0]; ++i) { // vessels: elongated, mostly in-plane
        double radius_mm = rng.uniform(0.8, 2.2) * spec.spacing_mm[0];
        double half_len = rng.uniform(6.0, 16.0) * spec.spacing_mm[0];
        Vec3 c = place_center(vol, rng, 22.0, 8.0, radius_mm + 1.5, placed, "vessel");
        Vec3 axis = random_unit(rng);
        axis.z *= 0.1; // a near-axial vessel would read as a nodule-like dot
        double an = norm(axis);
        axis = {axis.x / an, axis.y / an, axis.z / an};
        double hu = rng.uniform(-100.0, 100.0);
        paint_cylinder(vol, rng, c, axis, half_len, radius_mm, hu, 10.0);
        add_candidate(c, 0, "vessel");
    }
    for (int i = 0; i < counts[1]; ++i) { // walls: bright sheets hugging the top or bottom slices
        Vec3 p0;
        bool found = false;
        for (int attempt = 0; attempt < 100 && !found; ++attempt) {
            bool far_side = rng.uniform() < 0.5;
            double band = std::max(2.0, 0.16 * vol.dims[2]);
            double fz = far_side ? vol.dims[2] - 1 - rng.uniform(1.0, band)
                                 : rng.uniform(1.0, band);
            double mx = std::min(33.0, vol.dims[0] / 4.0);
            double my = std::min(33.0, vol.dims[1] / 4.0);
            double fx = rng.uniform(mx, vol.dims[0] - 1 - mx);
            double fy = rng.uniform(my, vol.dims[1] - 1 - my);
            p0 = {vol.origin_mm[0] + fx * vol.spacing_mm[0],
                  vol.origin_mm[1] + fy * vol.spacing_mm[1],
                  vol.origin_mm[2] + fz * vol.spacing_mm[2]};
            found = true;
            for (const Placed& pl : placed)
                if (norm(sub(p0, pl.center)) < pl.radius_mm + 3.0) found = false;
        }
        if (!found)
            fail(Errc::placement_failed,
                 "wall does not fit in the volume after 100 placement attempts");
        placed.push_back({p0, 3.0});
        // near-axial normal with a small random tilt
        Vec3 tilt = random_unit(rng);
        Vec3 n{0.05 * tilt.x, 0.05 * tilt.y, 1.0 + 0.05 * tilt.z};
        double nn = norm(n);
        n = {n.x / nn, n.y / nn, n.z / nn};
        double half_thick = rng.uniform(1.5, 2.0) * spec.spacing_mm[2];
        double z_extent = 2.0 * spec.spacing_mm[2];
        double hu = rng.uniform(-100.0, 100.0);
        paint_slab(vol, rng, p0, n, half_thick, z_extent, hu, 10.0);
        add_candidate(p0, 0, "wall");
    }
    for (int i = 0; i < counts[2]; ++i) { // blobs: lumpy unions of spheres in the nodule HU range
        double r_mm = rng.uniform(2.5, 5.0) * spec.spacing_mm[0];
        Vec3 c = place_center(vol, rng, std::max(r_mm / spec.spacing_mm[0] + 2.0, 22.0), 8.0,
                              r_mm + 1.2, placed, "blob");
        double hu = rng.uniform(-100.0, 100.0);
        int lumps = 3 + int(rng.uniform_index(4));
        for (int l = 0; l < lumps; ++l) {
            Vec3 off = random_unit(rng);
            double d = rng.uniform(0.35, 0.7) * r_mm;
            Vec3 lc{c.x + off.x * d, c.y + off.y * d, c.z + off.z * d};
            paint_sphere(vol, rng, lc, rng.uniform(0.45, 0.65) * r_mm, hu + rng.uniform(-35, 35),
                         10.0);
        }
        add_candidate(c, 0, "blob");
    }

    for (const NoduleDef& nd : nodules) paint_sphere(vol, rng, nd.c, nd.r_mm, nd.hu, 10.0);
    return scan;
}

void gen_dataset(const PhantomSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    std::filesystem::create_directories(out_dir / "scans");

    std::vector<Candidate> all_cands;
    std::vector<NoduleAnnotation> all_anns;
    std::vector<std::pair<std::string, std::string>> all_structs; // scan_id, kind

    for (int s = 0; s < spec.scan_count; ++s) {
        PhantomScan scan = gen_scan(spec, s);
        save_volume(out_dir / "scans" / (scan.volume.scan_id + ".rvol"), scan.volume);
        for (size_t i = 0; i < scan.candidates.size(); ++i) {
            all_cands.push_back(scan.candidates[i]);
            all_structs.emplace_back(scan.candidates[i].scan_id, scan.structure_labels[i]);
        }
        all_anns.insert(all_anns.end(), scan.annotations.begin(), scan.annotations.end());
    }

    save_candidates(out_dir / "candidates.csv", all_cands);
    save_annotations(out_dir / "annotations.csv", all_anns);

    std::ofstream st(out_dir / "structures.csv");
    if (!st) fail(Errc::io_error, "cannot create structures.csv");
    st << "seriesuid,candidate_index,structure\n";
    for (size_t i = 0; i < all_structs.size(); ++i)
        st << all_structs[i].first << ',' << i << ',' << all_structs[i].second << '\n';
    if (!st) fail(Errc::io_error, "short write to structures.csv");
}

} // namespace fpr

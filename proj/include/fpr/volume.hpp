#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fpr {

// A CT scan as a dense grid of Hounsfield units, x-fastest ordering.
struct CtVolume {
    std::string scan_id;
    std::array<int, 3> dims{0, 0, 0};         // nx, ny, nz
    std::array<double, 3> spacing_mm{1, 1, 1}; // sx, sy, sz
    std::array<double, 3> origin_mm{0, 0, 0};
    std::vector<int16_t> voxels;

    int16_t at(int x, int y, int z) const {
        return voxels[size_t(z) * dims[0] * dims[1] + size_t(y) * dims[0] + size_t(x)];
    }
    int16_t& at(int x, int y, int z) {
        return voxels[size_t(z) * dims[0] * dims[1] + size_t(y) * dims[0] + size_t(x)];
    }
    bool in_bounds(int x, int y, int z) const {
        return x >= 0 && x < dims[0] && y >= 0 && y < dims[1] && z >= 0 && z < dims[2];
    }
};

// A world-space point proposed by candidate detection, to be classified.
struct Candidate {
    std::string scan_id;
    std::array<double, 3> world_mm{0, 0, 0};
    std::optional<int> label;          // 0 = non-nodule, 1 = nodule
    std::optional<double> probability; // filled at inference
};

struct NoduleAnnotation {
    std::string scan_id;
    std::array<double, 3> center_mm{0, 0, 0};
    double diameter_mm = 0.0;
};

// Clip to [-1000, 400] HU and map linearly onto [0, 1].
inline float normalize_hu(int hu) {
    double clipped = hu < -1000 ? -1000.0 : (hu > 400 ? 400.0 : double(hu));
    return float((clipped + 1000.0) / 1400.0);
}

// Nearest voxel index, halves rounded away from zero. May land outside the grid.
std::array<int64_t, 3> world_to_voxel(const CtVolume& vol, const std::array<double, 3>& world_mm);
std::array<double, 3> voxel_to_world(const CtVolume& vol, const std::array<int64_t, 3>& index);

// RVOL container: 8-byte magic "RVOL0001", one JSON header line, then
// nx*ny*nz little-endian int16 voxels.
CtVolume load_volume(const std::filesystem::path& path);
void save_volume(const std::filesystem::path& path, const CtVolume& vol);

// Comma-separated tables. Candidates: "seriesuid,coordX,coordY,coordZ,class"
// with an optional trailing "probability" column. Annotations:
// "seriesuid,coordX,coordY,coordZ,diameter_mm".
std::vector<Candidate> load_candidates(const std::filesystem::path& path);
std::vector<NoduleAnnotation> load_annotations(const std::filesystem::path& path);
void save_candidates(const std::filesystem::path& path, const std::vector<Candidate>& rows);
void save_annotations(const std::filesystem::path& path, const std::vector<NoduleAnnotation>& rows);

} // namespace fpr

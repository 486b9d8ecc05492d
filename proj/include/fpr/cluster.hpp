#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fpr {

// Non-negative feature codes, one row per non-nodule sample.
struct FeatureMatrix {
    int rows = 0, cols = 0;
    std::vector<double> values; // row-major
    struct RowRef {
        std::string scan_id;
        int candidate_index = -1;
    };
    std::vector<RowRef> row_ids;

    double at(int r, int c) const { return values[size_t(r) * cols + c]; }
};

struct ClusterModel {
    int k = 0;
    std::vector<int> kept_dims;     // retained feature columns, ascending
    std::vector<double> centroids;  // k x kept_dims.size(), row-major
    std::vector<int> assignments;   // per training sample
    double inertia = 0.0;

    int dim() const { return int(kept_dims.size()); }
};

// Drop a column iff every entry is <= eps_zero; column order is preserved.
std::pair<FeatureMatrix, std::vector<int>> prune_zero_columns(const FeatureMatrix& features,
                                                              double eps_zero = 1e-9);

// k-means++ seeding, Lloyd iterations to an assignment fixed point (or 300
// iterations), best of `restarts` runs by inertia. Empty clusters are
// re-seeded from the point farthest from its centroid. inertia_trace, when
// given, records the inertia after each assignment step of the winning run.
ClusterModel kmeans_fit(const FeatureMatrix& reduced, int k, uint64_t seed, int restarts = 10,
                        int max_iterations = 300, std::vector<double>* inertia_trace = nullptr);

// prune + fit; the model carries the kept-column mask for later assignment.
ClusterModel fit_cluster_model(const FeatureMatrix& features, int k, uint64_t seed,
                               int restarts = 10, double eps_zero = 1e-9,
                               int max_iterations = 300);

// Nearest centroid over kept dimensions; ties break to the lowest cluster id.
int assign_cluster(const ClusterModel& model, const std::vector<double>& feature);

void save_cluster_model(const std::filesystem::path& path, const ClusterModel& model);
ClusterModel load_cluster_model(const std::filesystem::path& path);

} // namespace fpr

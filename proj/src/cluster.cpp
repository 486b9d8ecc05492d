#include "fpr/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "fpr/error.hpp"
#include "fpr/nn.hpp"
#include "fpr/rng.hpp"

namespace fpr {

namespace {

double sq_dist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

int nearest_centroid(const std::vector<double>& centroids, int k, int d, const double* x,
                     double* dist_out = nullptr) {
    int best = 0;
    double bd = sq_dist(centroids.data(), x, d);
    for (int c = 1; c < k; ++c) {
        double dc = sq_dist(centroids.data() + size_t(c) * d, x, d);
        if (dc < bd) {
            bd = dc;
            best = c;
        }
    }
    if (dist_out) *dist_out = bd;
    return best;
}

struct LloydResult {
    std::vector<double> centroids;
    std::vector<int> assignments;
    double inertia = 0.0;
    std::vector<double> inertia_trace;
};

LloydResult lloyd_run(const FeatureMatrix& m, int k, Rng& rng, int max_iterations) {
    int n = m.rows, d = m.cols;
    std::vector<double> centroids(size_t(k) * d);
    std::vector<double> min_dist(size_t(n), std::numeric_limits<double>::infinity());

    // k-means++: first center uniform, then squared-distance weighted
    int first = int(rng.uniform_index(uint64_t(n)));
    std::copy_n(m.values.data() + size_t(first) * d, d, centroids.begin());
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double dd = sq_dist(centroids.data() + size_t(c - 1) * d,
                                m.values.data() + size_t(i) * d, d);
            min_dist[size_t(i)] = std::min(min_dist[size_t(i)], dd);
            total += min_dist[size_t(i)];
        }
        int pick = 0;
        if (total > 0.0) {
            double r = rng.uniform() * total, acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += min_dist[size_t(i)];
                if (r < acc) {
                    pick = i;
                    break;
                }
                pick = i; // falls through to the last point on rounding
            }
        } else {
            pick = int(rng.uniform_index(uint64_t(n)));
        }
        std::copy_n(m.values.data() + size_t(pick) * d, d, centroids.begin() + size_t(c) * d);
    }

    std::vector<int> assign(size_t(n), -1);
    std::vector<int> counts(static_cast<size_t>(k));
    std::vector<double> inertia_trace;
    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        double cur_inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            double dd = 0.0;
            int a = nearest_centroid(centroids, k, d, m.values.data() + size_t(i) * d, &dd);
            cur_inertia += dd;
            if (a != assign[size_t(i)]) {
                assign[size_t(i)] = a;
                changed = true;
            }
        }
        inertia_trace.push_back(cur_inertia);
        if (!changed && iter > 0) break;

        std::fill(centroids.begin(), centroids.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) {
            int a = assign[size_t(i)];
            counts[size_t(a)] += 1;
            const double* row = m.values.data() + size_t(i) * d;
            double* cen = centroids.data() + size_t(a) * d;
            for (int j = 0; j < d; ++j) cen[j] += row[j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[size_t(c)] > 0) {
                double inv = 1.0 / double(counts[size_t(c)]);
                double* cen = centroids.data() + size_t(c) * d;
                for (int j = 0; j < d; ++j) cen[j] *= inv;
            } else {
                // re-seed an empty cluster at the point farthest from its centroid
                int far_i = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    int a = assign[size_t(i)];
                    if (counts[size_t(a)] <= 1) continue; // do not strand another cluster
                    double dd = sq_dist(centroids.data() + size_t(a) * d,
                                        m.values.data() + size_t(i) * d, d);
                    if (dd > far_d) {
                        far_d = dd;
                        far_i = i;
                    }
                }
                std::copy_n(m.values.data() + size_t(far_i) * d, d,
                            centroids.begin() + size_t(c) * d);
            }
        }
    }

    LloydResult res;
    res.centroids = std::move(centroids);
    res.assignments.resize(size_t(n));
    res.inertia = 0.0;
    for (int i = 0; i < n; ++i) {
        double dd = 0.0;
        res.assignments[size_t(i)] =
            nearest_centroid(res.centroids, k, d, m.values.data() + size_t(i) * d, &dd);
        res.inertia += dd;
    }
    res.inertia_trace = std::move(inertia_trace);
    return res;
}

} // namespace

std::pair<FeatureMatrix, std::vector<int>> prune_zero_columns(const FeatureMatrix& features,
                                                              double eps_zero) {
    if (features.rows < 1) fail(Errc::empty_input, "feature matrix has no rows");
    std::vector<int> kept;
    for (int c = 0; c < features.cols; ++c) {
        bool all_zero = true;
        for (int r = 0; r < features.rows && all_zero; ++r)
            if (features.at(r, c) > eps_zero) all_zero = false;
        if (!all_zero) kept.push_back(c);
    }
    if (kept.empty())
        fail(Errc::degenerate_features, "every feature column is zero across all samples");

    FeatureMatrix out;
    out.rows = features.rows;
    out.cols = int(kept.size());
    out.row_ids = features.row_ids;
    out.values.resize(size_t(out.rows) * out.cols);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c)
            out.values[size_t(r) * out.cols + c] = features.at(r, kept[size_t(c)]);
    return {std::move(out), std::move(kept)};
}

ClusterModel kmeans_fit(const FeatureMatrix& reduced, int k, uint64_t seed, int restarts,
                        int max_iterations, std::vector<double>* inertia_trace) {
    if (k < 1) fail(Errc::bad_value, "k must be at least 1");
    if (reduced.rows < k)
        fail(Errc::too_few_samples, std::to_string(reduced.rows) + " samples cannot form " +
                                        std::to_string(k) + " clusters");
    LloydResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, "kmeans-restart", uint64_t(r)));
        LloydResult run = lloyd_run(reduced, k, rng, max_iterations);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    if (inertia_trace) *inertia_trace = best.inertia_trace;
    ClusterModel model;
    model.k = k;
    model.kept_dims.resize(size_t(reduced.cols));
    for (int c = 0; c < reduced.cols; ++c) model.kept_dims[size_t(c)] = c;
    model.centroids = std::move(best.centroids);
    model.assignments = std::move(best.assignments);
    model.inertia = best.inertia;
    return model;
}

ClusterModel fit_cluster_model(const FeatureMatrix& features, int k, uint64_t seed, int restarts,
                               double eps_zero, int max_iterations) {
    auto [reduced, kept] = prune_zero_columns(features, eps_zero);
    ClusterModel model = kmeans_fit(reduced, k, seed, restarts, max_iterations);
    model.kept_dims = std::move(kept);
    return model;
}

int assign_cluster(const ClusterModel& model, const std::vector<double>& feature) {
    int d = model.dim();
    std::vector<double> x(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
        size_t col = size_t(model.kept_dims[size_t(i)]);
        if (col >= feature.size()) fail(Errc::shape_mismatch, "feature vector too short");
        x[size_t(i)] = feature[col];
    }
    // strict < keeps the lowest id on ties
    return nearest_centroid(model.centroids, model.k, d, x.data());
}

void save_cluster_model(const std::filesystem::path& path, const ClusterModel& model) {
    nlohmann::json j;
    j["kind"] = "kmeans";
    j["k"] = model.k;
    j["kept_dims"] = model.kept_dims;
    j["inertia"] = model.inertia;
    std::vector<float> payload(model.centroids.begin(), model.centroids.end());
    nn::save_blob(path, j.dump(), payload);
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
    auto [header, payload] = nn::load_blob(path);
    ClusterModel model;
    try {
        nlohmann::json j = nlohmann::json::parse(header);
        if (j.at("kind").get<std::string>() != "kmeans")
            fail(Errc::malformed_header, path.string() + " is not a cluster model");
        model.k = j.at("k").get<int>();
        model.kept_dims = j.at("kept_dims").get<std::vector<int>>();
        model.inertia = j.value("inertia", 0.0);
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_header,
             "unparsable cluster model header in " + path.string() + ": " + e.what());
    }
    if (payload.size() != size_t(model.k) * model.kept_dims.size())
        fail(Errc::size_mismatch, "cluster model payload does not match k x dims");
    model.centroids.assign(payload.begin(), payload.end());
    return model;
}

} // namespace fpr

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fpr/cluster.hpp"
#include "fpr/error.hpp"
#include "fpr/rng.hpp"
#include "test_util.hpp"

using namespace fpr;

namespace {

FeatureMatrix matrix(int rows, int cols, std::vector<double> values) {
    FeatureMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values = std::move(values);
    m.row_ids.resize(size_t(rows));
    return m;
}

// exhaustive minimum inertia over every 2-partition with both sides non-empty
double brute_force_k2(const FeatureMatrix& m, std::vector<int>* best_assign = nullptr) {
    int n = m.rows, d = m.cols;
    double best = std::numeric_limits<double>::infinity();
    for (uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<double> c0(static_cast<size_t>(d)), c1(static_cast<size_t>(d));
        int n0 = 0, n1 = 0;
        for (int i = 0; i < n; ++i) {
            const double* row = m.values.data() + size_t(i) * d;
            if (mask >> i & 1) {
                ++n1;
                for (int j = 0; j < d; ++j) c1[size_t(j)] += row[j];
            } else {
                ++n0;
                for (int j = 0; j < d; ++j) c0[size_t(j)] += row[j];
            }
        }
        for (int j = 0; j < d; ++j) {
            c0[size_t(j)] /= n0;
            c1[size_t(j)] /= n1;
        }
        double inertia = 0;
        for (int i = 0; i < n; ++i) {
            const double* row = m.values.data() + size_t(i) * d;
            const auto& c = (mask >> i & 1) ? c1 : c0;
            for (int j = 0; j < d; ++j) {
                double diff = row[j] - c[size_t(j)];
                inertia += diff * diff;
            }
        }
        if (inertia < best) {
            best = inertia;
            if (best_assign) {
                best_assign->assign(size_t(n), 0);
                for (int i = 0; i < n; ++i) (*best_assign)[size_t(i)] = mask >> i & 1;
            }
        }
    }
    return best;
}

} // namespace

TEST_CASE("zero columns are pruned, order preserved") {
    auto [reduced, kept] = prune_zero_columns(matrix(2, 2, {1, 0, 2, 0}));
    CHECK(kept == std::vector<int>{0});
    CHECK(reduced.cols == 1);
    CHECK(reduced.values == std::vector<double>{1, 2});

    auto [same, all] = prune_zero_columns(matrix(2, 3, {1, 2, 3, 4, 5, 6}));
    CHECK(all == std::vector<int>{0, 1, 2});
    CHECK(same.values == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("pruning matches a brute-force column scan on sparse data") {
    Rng rng(5);
    FeatureMatrix m = matrix(10, 256, std::vector<double>(10 * 256, 0.0));
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 256; ++c)
            if (rng.uniform() < 0.1) m.values[size_t(r) * 256 + c] = rng.uniform(0.01, 2.0);

    std::vector<int> expected;
    for (int c = 0; c < 256; ++c) {
        bool nonzero = false;
        for (int r = 0; r < 10; ++r) nonzero = nonzero || m.at(r, c) > 1e-9;
        if (nonzero) expected.push_back(c);
    }
    auto [reduced, kept] = prune_zero_columns(m);
    CHECK(kept == expected);
    CHECK(reduced.cols == int(expected.size()));
}

TEST_CASE("an all-zero feature matrix is degenerate") {
    try {
        prune_zero_columns(matrix(3, 4, std::vector<double>(12, 0.0)));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::degenerate_features);
    }
}

TEST_CASE("k = 1 returns the column mean and the total spread") {
    FeatureMatrix m = matrix(4, 2, {0, 0, 2, 0, 0, 2, 2, 2});
    ClusterModel model = kmeans_fit(m, 1, 3);
    CHECK(model.centroids == std::vector<double>{1, 1});
    double expected = 4 * 2.0; // each point at squared distance 2 from (1,1)
    CHECK(model.inertia == doctest::Approx(expected));
    CHECK(model.assignments == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("well-separated blobs reach the exhaustive optimum") {
    Rng rng(99);
    for (int instance = 0; instance < 12; ++instance) {
        int n = 4 + int(rng.uniform_index(5)); // 4..8 points
        int d = 2 + int(rng.uniform_index(3));
        FeatureMatrix m = matrix(n, d, std::vector<double>(size_t(n) * d));
        for (int i = 0; i < n; ++i) {
            bool second = i >= n / 2;
            for (int j = 0; j < d; ++j)
                m.values[size_t(i) * d + j] = (second ? 10.0 : 0.0) + rng.uniform(-0.5, 0.5);
        }
        ClusterModel model = kmeans_fit(m, 2, uint64_t(instance), 10);
        double best = brute_force_k2(m);
        CHECK(model.inertia == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("too few samples cannot be clustered") {
    FeatureMatrix m = matrix(2, 2, {0, 0, 1, 1});
    CHECK_THROWS_AS(kmeans_fit(m, 3, 1), Error);
}

TEST_CASE("fitting is deterministic under seed") {
    Rng rng(123);
    FeatureMatrix m = matrix(40, 8, std::vector<double>(320));
    for (auto& v : m.values) v = rng.uniform(0, 5);
    ClusterModel a = kmeans_fit(m, 5, 77, 10);
    ClusterModel b = kmeans_fit(m, 5, 77, 10);
    CHECK(a.assignments == b.assignments);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("lloyd iterations never increase inertia and end at a fixed point") {
    Rng rng(7);
    FeatureMatrix m = matrix(60, 4, std::vector<double>(240));
    for (auto& v : m.values) v = rng.uniform(0, 3);
    std::vector<double> trace;
    ClusterModel model = kmeans_fit(m, 4, 5, 1, 300, &trace);
    REQUIRE(trace.size() >= 2);
    for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-9);

    // reassignment changes nothing
    for (int i = 0; i < m.rows; ++i) {
        std::vector<double> row(m.values.begin() + size_t(i) * m.cols,
                                m.values.begin() + size_t(i + 1) * m.cols);
        CHECK(assign_cluster(model, row) == model.assignments[size_t(i)]);
    }
}

TEST_CASE("assignment returns the nearest centroid with low-id ties") {
    ClusterModel model;
    model.k = 3;
    model.kept_dims = {0, 1};
    model.centroids = {0, 0, 4, 0, 8, 0};
    CHECK(assign_cluster(model, {4, 0}) == 1);
    CHECK(assign_cluster(model, {2, 0}) == 0);  // equidistant from 0 and 1
    CHECK(assign_cluster(model, {6, 0}) == 1);  // equidistant from 1 and 2
    CHECK(assign_cluster(model, {8.01, 0}) == 2);
}

TEST_CASE("assignment restricts the feature vector to kept dimensions") {
    ClusterModel model;
    model.k = 2;
    model.kept_dims = {1, 3};
    model.centroids = {0, 0, 5, 5};
    // dims 0 and 2 are noise the model never sees
    CHECK(assign_cluster(model, {100, 0.1, -50, 0.2}) == 0);
    CHECK(assign_cluster(model, {-3, 4.9, 77, 5.1}) == 1);
}

TEST_CASE("clustering ignores re-inserted zero columns") {
    Rng rng(15);
    FeatureMatrix dense = matrix(20, 5, std::vector<double>(100));
    for (auto& v : dense.values) v = rng.uniform(0.01, 2.0);
    ClusterModel base = fit_cluster_model(dense, 3, 5);

    // splice two all-zero columns into the middle
    FeatureMatrix padded = matrix(20, 7, std::vector<double>(140, 0.0));
    for (int r = 0; r < 20; ++r) {
        padded.values[size_t(r) * 7 + 0] = dense.at(r, 0);
        padded.values[size_t(r) * 7 + 2] = dense.at(r, 1);
        padded.values[size_t(r) * 7 + 3] = dense.at(r, 2);
        padded.values[size_t(r) * 7 + 5] = dense.at(r, 3);
        padded.values[size_t(r) * 7 + 6] = dense.at(r, 4);
    }
    ClusterModel same = fit_cluster_model(padded, 3, 5);
    CHECK(same.kept_dims == std::vector<int>{0, 2, 3, 5, 6});
    CHECK(same.assignments == base.assignments);
    CHECK(same.inertia == doctest::Approx(base.inertia));
}

TEST_CASE("cluster models survive the checkpoint container") {
    auto dir = test::temp_dir("cluster_ckpt");
    Rng rng(2);
    FeatureMatrix m = matrix(30, 6, std::vector<double>(180));
    for (auto& v : m.values) v = rng.uniform(0, 2);
    ClusterModel model = fit_cluster_model(m, 4, 9);
    save_cluster_model(dir / "km.ckpt", model);
    ClusterModel back = load_cluster_model(dir / "km.ckpt");
    CHECK(back.k == model.k);
    CHECK(back.kept_dims == model.kept_dims);
    REQUIRE(back.centroids.size() == model.centroids.size());
    for (size_t i = 0; i < model.centroids.size(); ++i)
        CHECK(back.centroids[i] == doctest::Approx(model.centroids[i]).epsilon(1e-6));
}

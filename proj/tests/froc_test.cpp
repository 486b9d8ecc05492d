#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fpr/error.hpp"
#include "fpr/froc.hpp"
#include "fpr/rng.hpp"
#include "test_util.hpp"

using namespace fpr;

namespace {

Candidate cand(const std::string& scan, double x, double y, double z, double p) {
    Candidate c;
    c.scan_id = scan;
    c.world_mm = {x, y, z};
    c.probability = p;
    return c;
}

NoduleAnnotation nodule(const std::string& scan, double x, double y, double z, double d) {
    return {scan, {x, y, z}, d};
}

// independent scoring: for every threshold, count hit nodules and false
// positives by direct definition
std::pair<std::vector<double>, std::vector<std::pair<double, double>>> enumerate_curve(
    const EvalInput& input, int total_nodules) {
    std::set<double> thresholds;
    for (const auto& c : input.candidates) thresholds.insert(*c.probability);
    std::vector<std::pair<double, double>> points; // (fp_per_scan, sensitivity)
    std::vector<double> taus;
    for (double tau : thresholds) {
        std::set<int> hit;
        int fp = 0;
        for (const auto& c : input.candidates) {
            if (*c.probability < tau) continue;
            int best = -1;
            double best_d = 1e300;
            for (size_t n = 0; n < input.annotations.size(); ++n) {
                const auto& a = input.annotations[n];
                if (a.scan_id != c.scan_id) continue;
                double dx = c.world_mm[0] - a.center_mm[0];
                double dy = c.world_mm[1] - a.center_mm[1];
                double dz = c.world_mm[2] - a.center_mm[2];
                double d2 = dx * dx + dy * dy + dz * dz;
                double r = a.diameter_mm / 2;
                if (d2 <= r * r && d2 < best_d) {
                    best = int(n);
                    best_d = d2;
                }
            }
            if (best >= 0)
                hit.insert(best);
            else
                ++fp;
        }
        points.push_back({double(fp) / double(input.scans.size()),
                          double(hit.size()) / double(total_nodules)});
        taus.push_back(tau);
    }
    return {taus, points};
}

EvalInput hand_scenario() {
    EvalInput in;
    in.scans = {"s1", "s2"};
    in.annotations = {nodule("s1", 0, 0, 0, 6), nodule("s1", 30, 0, 0, 8), nodule("s2", 0, 0, 0, 6)};
    in.candidates = {
        cand("s1", 0.5, 0, 0, 0.9),   // hits nodule 0
        cand("s1", 31, 0, 0, 0.6),    // hits nodule 1
        cand("s1", 100, 0, 0, 0.8),   // fp
        cand("s2", 0.2, 0.2, 0, 0.3), // hits nodule 2
        cand("s2", -50, 0, 0, 0.95),  // fp
    };
    return in;
}

} // namespace

TEST_CASE("candidates match the nearest containing nodule") {
    EvalInput in;
    in.scans = {"s1"};
    in.annotations = {nodule("s1", 0, 0, 0, 10), nodule("s1", 6, 0, 0, 10)};
    in.candidates = {
        cand("s1", 0, 0, 0, 0.5),    // dead center of nodule 0
        cand("s1", 3.5, 0, 0, 0.5),  // inside both, nearer to nodule 1
        cand("s1", 5.0, 20, 0, 0.5), // outside both
    };
    auto tags = match_candidates(in);
    CHECK(tags[0].kind == CandidateTag::hit);
    CHECK(tags[0].nodule == 0);
    CHECK(tags[1].kind == CandidateTag::hit);
    CHECK(tags[1].nodule == 1);
    CHECK(tags[2].kind == CandidateTag::fp);
}

TEST_CASE("the hit boundary is the nodule radius") {
    EvalInput in;
    in.scans = {"s1"};
    in.annotations = {nodule("s1", 0, 0, 0, 6)};
    in.candidates = {cand("s1", 3.0, 0, 0, 0.5), cand("s1", 3.0001, 0, 0, 0.5)};
    auto tags = match_candidates(in);
    CHECK(tags[0].kind == CandidateTag::hit); // exactly at diameter/2
    CHECK(tags[1].kind == CandidateTag::fp);  // just beyond
}

TEST_CASE("candidates inside irrelevant findings are ignored") {
    EvalInput in;
    in.scans = {"s1"};
    in.annotations = {nodule("s1", 0, 0, 0, 6)};
    in.irrelevant = {nodule("s1", 20, 0, 0, 10)};
    in.candidates = {cand("s1", 21, 0, 0, 0.9), cand("s1", 40, 0, 0, 0.9),
                     cand("s1", 0.5, 0, 0, 0.9)};
    auto tags = match_candidates(in);
    CHECK(tags[0].kind == CandidateTag::ignored);
    CHECK(tags[1].kind == CandidateTag::fp);
    CHECK(tags[2].kind == CandidateTag::hit); // hits win over irrelevant overlap
}

TEST_CASE("matching does not depend on candidate order") {
    EvalInput in = hand_scenario();
    auto tags = match_candidates(in);
    EvalInput shuffled = in;
    std::reverse(shuffled.candidates.begin(), shuffled.candidates.end());
    auto rtags = match_candidates(shuffled);
    for (size_t i = 0; i < in.candidates.size(); ++i) {
        CHECK(tags[i].kind == rtags[in.candidates.size() - 1 - i].kind);
        CHECK(tags[i].nodule == rtags[in.candidates.size() - 1 - i].nodule);
    }
}

TEST_CASE("a perfect classifier reaches full sensitivity at zero fp per scan") {
    EvalInput in;
    in.scans = {"s1", "s2"};
    in.annotations = {nodule("s1", 0, 0, 0, 6), nodule("s2", 0, 0, 0, 6)};
    in.candidates = {cand("s1", 0, 0, 0, 1.0), cand("s2", 0, 0, 0, 1.0),
                     cand("s1", 50, 0, 0, 0.0), cand("s2", 50, 0, 0, 0.0)};
    auto tags = match_candidates(in);
    FrocCurve curve = froc_curve(in, tags, 2);
    CHECK(sensitivity_at(curve, 1e-9) == doctest::Approx(1.0));
    CHECK(cpm(curve) == doctest::Approx(1.0));
}

TEST_CASE("equal probabilities collapse to a single curve point") {
    EvalInput in;
    in.scans = {"s1"};
    in.annotations = {nodule("s1", 0, 0, 0, 6)};
    in.candidates = {cand("s1", 0, 0, 0, 0.7), cand("s1", 50, 0, 0, 0.7),
                     cand("s1", 70, 0, 0, 0.7)};
    auto tags = match_candidates(in);
    FrocCurve curve = froc_curve(in, tags, 1);
    CHECK(curve.points.size() == 1);
    CHECK(curve.points[0].fp_per_scan == doctest::Approx(2.0));
    CHECK(curve.points[0].sensitivity == doctest::Approx(1.0));
}

TEST_CASE("the hand scenario matches exhaustive threshold enumeration") {
    EvalInput in = hand_scenario();
    auto tags = match_candidates(in);
    FrocCurve curve = froc_curve(in, tags, 3);

    auto [taus, expected] = enumerate_curve(in, 3);
    REQUIRE(curve.points.size() == expected.size());
    std::sort(expected.begin(), expected.end());
    for (size_t i = 0; i < expected.size(); ++i) {
        CHECK(curve.points[i].fp_per_scan == expected[i].first);
        CHECK(curve.points[i].sensitivity == expected[i].second);
    }
    for (double f : cpm_fp_levels()) {
        double best = 0;
        for (auto [fp, sens] : expected)
            if (fp <= f) best = std::max(best, sens);
        CHECK(sensitivity_at(curve, f) == best);
    }
}

TEST_CASE("curves are monotone in fp per scan") {
    Rng rng(3);
    EvalInput in;
    in.scans = {"a", "b", "c"};
    for (int n = 0; n < 6; ++n)
        in.annotations.push_back(nodule(in.scans[size_t(n % 3)], n * 40.0, 0, 0, 6));
    for (int i = 0; i < 40; ++i) {
        const auto& scan = in.scans[size_t(rng.uniform_index(3))];
        bool near = rng.uniform() < 0.4;
        double x = near ? double(int(rng.uniform_index(6))) * 40.0 + rng.uniform(-2, 2)
                        : rng.uniform(300, 900);
        in.candidates.push_back(cand(scan, x, rng.uniform(-1, 1), 0, rng.uniform(0, 1)));
    }
    auto tags = match_candidates(in);
    FrocCurve curve = froc_curve(in, tags, 6);
    for (size_t i = 1; i < curve.points.size(); ++i) {
        CHECK(curve.points[i].fp_per_scan >= curve.points[i - 1].fp_per_scan);
        CHECK(curve.points[i].sensitivity >= curve.points[i - 1].sensitivity - 1e-12);
    }
}

TEST_CASE("sensitivity_at uses the step convention") {
    FrocCurve curve;
    curve.points = {{0.9, 0.0, 0.9}, {0.5, 3.0, 0.95}};
    CHECK(sensitivity_at(curve, 2.0) == doctest::Approx(0.9));
    CHECK(sensitivity_at(curve, 100.0) == doctest::Approx(0.95)); // beyond the last point
    FrocCurve empty;
    CHECK(sensitivity_at(empty, 1.0) == 0.0);

    FrocCurve four;
    four.points = {{0.8, 0.1, 0.4}, {0.6, 0.7, 0.55}, {0.4, 1.5, 0.8}, {0.2, 6.0, 0.9}};
    std::vector<double> expected{0.4, 0.4, 0.4, 0.55, 0.8, 0.8, 0.9};
    for (size_t i = 0; i < cpm_fp_levels().size(); ++i)
        CHECK(sensitivity_at(four, cpm_fp_levels()[i]) == doctest::Approx(expected[i]));
}

TEST_CASE("cpm reproduces the published score arithmetic") {
    auto curve_from = [](const std::vector<double>& sens) {
        FrocCurve c;
        for (size_t i = 0; i < sens.size(); ++i)
            c.points.push_back({0.0, cpm_fp_levels()[i], sens[i]});
        return c;
    };
    FrocCurve ours = curve_from({0.905, 0.913, 0.921, 0.925, 0.927, 0.931, 0.933});
    CHECK(std::abs(cpm(ours) - 0.922) < 0.0005);
    FrocCurve cumedvis = curve_from({0.678, 0.738, 0.816, 0.848, 0.879, 0.907, 0.922});
    CHECK(std::abs(cpm(cumedvis) - 0.827) < 0.0005);
    FrocCurve all_ones = curve_from({1, 1, 1, 1, 1, 1, 1});
    CHECK(cpm(all_ones) == doctest::Approx(1.0));
}

TEST_CASE("raising fp probabilities never helps, raising hits never hurts") {
    EvalInput in = hand_scenario();
    auto tags = match_candidates(in);
    FrocCurve base = froc_curve(in, tags, 3);

    EvalInput worse = in;
    worse.candidates[2].probability = 0.99; // the s1 fp outranks everything
    FrocCurve w = froc_curve(worse, tags, 3);
    for (double f : cpm_fp_levels())
        CHECK(sensitivity_at(w, f) <= sensitivity_at(base, f) + 1e-12);

    EvalInput better = in;
    better.candidates[3].probability = 0.97; // the s2 hit moves up
    FrocCurve b = froc_curve(better, tags, 3);
    for (double f : cpm_fp_levels())
        CHECK(sensitivity_at(b, f) >= sensitivity_at(base, f) - 1e-12);
}

TEST_CASE("bootstrap of a single scan has zero-width intervals") {
    EvalInput in;
    in.scans = {"s1"};
    in.annotations = {nodule("s1", 0, 0, 0, 6)};
    in.candidates = {cand("s1", 0, 0, 0, 0.8), cand("s1", 50, 0, 0, 0.2)};
    auto tags = match_candidates(in);
    BootstrapBounds b = bootstrap_ci(in, tags, 200, 5);
    REQUIRE(b.low.size() == cpm_fp_levels().size());
    for (size_t i = 0; i < b.low.size(); ++i) CHECK(b.low[i] == b.high[i]);
}

TEST_CASE("bootstrap is deterministic and brackets the point estimate") {
    EvalInput in;
    in.scans = {"a", "b", "c"};
    in.annotations = {nodule("a", 0, 0, 0, 6), nodule("b", 0, 0, 0, 6), nodule("c", 0, 0, 0, 6)};
    in.candidates = {
        cand("a", 0, 0, 0, 0.9),  cand("a", 50, 0, 0, 0.3), cand("b", 0, 0, 0, 0.7),
        cand("b", 50, 0, 0, 0.8), cand("c", 0, 0, 0, 0.2),  cand("c", 50, 0, 0, 0.1),
    };
    auto tags = match_candidates(in);
    BootstrapBounds b1 = bootstrap_ci(in, tags, 500, 11);
    BootstrapBounds b2 = bootstrap_ci(in, tags, 500, 11);
    CHECK(b1.low == b2.low);
    CHECK(b1.high == b2.high);

    // exhaustive oracle over all 27 ordered resamples of 3 scans
    std::vector<std::vector<double>> all_sens;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                EvalInput r;
                r.scans = {"r0", "r1", "r2"};
                int pick[3] = {i, j, k};
                for (int s = 0; s < 3; ++s) {
                    std::string src(1, char('a' + pick[s]));
                    std::string dst = "r" + std::to_string(s);
                    for (const auto& c : in.candidates)
                        if (c.scan_id == src) {
                            Candidate cc = c;
                            cc.scan_id = dst;
                            r.candidates.push_back(std::move(cc));
                        }
                    for (const auto& a : in.annotations)
                        if (a.scan_id == src) {
                            NoduleAnnotation aa = a;
                            aa.scan_id = dst;
                            r.annotations.push_back(std::move(aa));
                        }
                }
                auto rt = match_candidates(r);
                FrocCurve rc = froc_curve(r, rt, int(r.annotations.size()));
                std::vector<double> sens;
                for (double f : cpm_fp_levels()) sens.push_back(sensitivity_at(rc, f));
                all_sens.push_back(std::move(sens));
            }
    // bounds must stay within the achievable range and bracket the full-sample value
    FrocCurve point = froc_curve(in, tags, 3);
    for (size_t li = 0; li < cpm_fp_levels().size(); ++li) {
        double lo = 1e300, hi = -1e300;
        for (const auto& s : all_sens) {
            lo = std::min(lo, s[li]);
            hi = std::max(hi, s[li]);
        }
        CHECK(b1.low[li] >= lo - 1e-12);
        CHECK(b1.high[li] <= hi + 1e-12);
        double estimate = sensitivity_at(point, cpm_fp_levels()[li]);
        CHECK(b1.low[li] <= estimate + 1e-12);
        CHECK(b1.high[li] >= estimate - 1e-12);
    }
}

TEST_CASE("summary and curve serializations are well formed") {
    EvalInput in = hand_scenario();
    auto tags = match_candidates(in);
    FrocCurve curve = froc_curve(in, tags, 3);
    BootstrapBounds bounds = bootstrap_ci(in, tags, 100, 3);
    std::string csv = froc_curve_csv(curve);
    CHECK(csv.find("threshold,fp_per_scan,sensitivity\n") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == int(curve.points.size()) + 1);
    std::string json = froc_summary_json(curve, bounds, cpm_fp_levels(), 2, 3, 100);
    CHECK(json.find("\"cpm\"") != std::string::npos);
    std::string svg = froc_curve_svg(curve);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("degenerate evaluation inputs are rejected") {
    EvalInput in = hand_scenario();
    auto tags = match_candidates(in);
    CHECK_THROWS_AS(froc_curve(in, tags, 0), Error);
    CHECK_THROWS_AS(bootstrap_ci(in, tags, 0, 1), Error);
    EvalInput no_scans = in;
    no_scans.scans.clear();
    CHECK_THROWS_AS(froc_curve(no_scans, tags, 3), Error);
    EvalInput missing_prob = in;
    missing_prob.candidates[0].probability.reset();
    CHECK_THROWS_AS(froc_curve(missing_prob, tags, 3), Error);
}

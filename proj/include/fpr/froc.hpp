#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpr/volume.hpp"

namespace fpr {

// Seven operating points of the competition performance metric.
inline const std::vector<double>& cpm_fp_levels() {
    static const std::vector<double> levels{0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    return levels;
}

struct EvalInput {
    std::vector<std::string> scans;
    std::vector<Candidate> candidates;          // probabilities filled
    std::vector<NoduleAnnotation> annotations;  // reference nodules
    std::vector<NoduleAnnotation> irrelevant;   // neither hits nor false positives
};

struct CandidateTag {
    enum Kind { hit, fp, ignored } kind = fp;
    int nodule = -1; // annotation index for hits
};

// A candidate hits the nearest nodule whose radius (diameter/2) contains it;
// otherwise it is ignored when inside an irrelevant finding, else a false
// positive.
std::vector<CandidateTag> match_candidates(const EvalInput& input);

struct FrocCurve {
    struct Point {
        double threshold = 0.0;
        double fp_per_scan = 0.0;
        double sensitivity = 0.0;
    };
    std::vector<Point> points; // sorted by fp_per_scan ascending
};

// One point per distinct probability threshold. total_nodules is the caller's
// denominator so nodules missed by candidate detection still count.
FrocCurve froc_curve(const EvalInput& input, const std::vector<CandidateTag>& tags,
                     int total_nodules);

// Maximum sensitivity among points with fp_per_scan <= f; 0 when none qualify.
double sensitivity_at(const FrocCurve& curve, double f);

// Mean sensitivity over the seven standard FP/scan levels.
double cpm(const FrocCurve& curve);

struct BootstrapBounds {
    std::vector<double> low, high; // one pair per FP level, 2.5th/97.5th percentile
};

// Scans resampled with replacement; per-resample sensitivities use the
// resample's own nodule multiset as denominator.
BootstrapBounds bootstrap_ci(const EvalInput& input, const std::vector<CandidateTag>& tags,
                             int resamples, uint64_t seed,
                             const std::vector<double>& fp_levels = cpm_fp_levels());

std::string froc_curve_csv(const FrocCurve& curve);
std::string froc_summary_json(const FrocCurve& curve, const BootstrapBounds& bounds,
                              const std::vector<double>& fp_levels, int scans, int total_nodules,
                              int resamples);
std::string froc_curve_svg(const FrocCurve& curve);

} // namespace fpr

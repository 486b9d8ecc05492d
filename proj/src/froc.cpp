#include "fpr/froc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fpr/error.hpp"
#include "fpr/rng.hpp"

namespace fpr {

namespace {

double sq_dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Threshold sweep shared by the full-sample curve and bootstrap resamples.
// nodule_best holds the best hit probability per nodule (unhit nodules are
// simply absent), fp_probs the probabilities of all false-positive candidates.
FrocCurve sweep_curve(std::vector<double> nodule_best, std::vector<double> fp_probs,
                      int total_nodules, int n_scans) {
    std::vector<double> thresholds;
    thresholds.reserve(nodule_best.size() + fp_probs.size());
    thresholds.insert(thresholds.end(), nodule_best.begin(), nodule_best.end());
    thresholds.insert(thresholds.end(), fp_probs.begin(), fp_probs.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::sort(nodule_best.begin(), nodule_best.end(), std::greater<>());
    std::sort(fp_probs.begin(), fp_probs.end(), std::greater<>());

    FrocCurve curve;
    size_t hi = 0, fi = 0;
    for (double tau : thresholds) {
        while (hi < nodule_best.size() && nodule_best[hi] >= tau) ++hi;
        while (fi < fp_probs.size() && fp_probs[fi] >= tau) ++fi;
        FrocCurve::Point pt;
        pt.threshold = tau;
        pt.sensitivity = double(hi) / double(total_nodules);
        pt.fp_per_scan = double(fi) / double(n_scans);
        curve.points.push_back(pt);
    }
    std::stable_sort(curve.points.begin(), curve.points.end(), [](const auto& a, const auto& b) {
        if (a.fp_per_scan != b.fp_per_scan) return a.fp_per_scan < b.fp_per_scan;
        return a.sensitivity < b.sensitivity;
    });
    return curve;
}

} // namespace

std::vector<CandidateTag> match_candidates(const EvalInput& input) {
    std::vector<CandidateTag> tags(input.candidates.size());
    for (size_t ci = 0; ci < input.candidates.size(); ++ci) {
        const Candidate& cand = input.candidates[ci];
        CandidateTag tag;
        tag.kind = CandidateTag::fp;
        double best = std::numeric_limits<double>::infinity();
        for (size_t ni = 0; ni < input.annotations.size(); ++ni) {
            const NoduleAnnotation& n = input.annotations[ni];
            if (n.scan_id != cand.scan_id) continue;
            double d2 = sq_dist3(cand.world_mm, n.center_mm);
            double r = n.diameter_mm / 2.0;
            if (d2 <= r * r && d2 < best) {
                best = d2;
                tag.kind = CandidateTag::hit;
                tag.nodule = int(ni);
            }
        }
        if (tag.kind != CandidateTag::hit) {
            for (const NoduleAnnotation& ir : input.irrelevant) {
                if (ir.scan_id != cand.scan_id) continue;
                double r = ir.diameter_mm / 2.0;
                if (sq_dist3(cand.world_mm, ir.center_mm) <= r * r) {
                    tag.kind = CandidateTag::ignored;
                    break;
                }
            }
        }
        tags[ci] = tag;
    }
    return tags;
}

FrocCurve froc_curve(const EvalInput& input, const std::vector<CandidateTag>& tags,
                     int total_nodules) {
    if (total_nodules <= 0) fail(Errc::bad_value, "total_nodules must be positive");
    if (tags.size() != input.candidates.size())
        fail(Errc::size_mismatch, "one tag per candidate required");
    if (input.scans.empty()) fail(Errc::empty_input, "scan list is empty");

    std::set<std::string> scan_set(input.scans.begin(), input.scans.end());
    std::map<int, double> nodule_best;
    std::vector<double> fp_probs;
    for (size_t ci = 0; ci < input.candidates.size(); ++ci) {
        const Candidate& cand = input.candidates[ci];
        if (!scan_set.count(cand.scan_id))
            fail(Errc::bad_value, "candidate scan " + cand.scan_id + " missing from scan list");
        if (!cand.probability)
            fail(Errc::bad_value, "candidate without probability in evaluation input");
        double p = *cand.probability;
        if (tags[ci].kind == CandidateTag::hit) {
            auto [it, fresh] = nodule_best.emplace(tags[ci].nodule, p);
            if (!fresh) it->second = std::max(it->second, p);
        } else if (tags[ci].kind == CandidateTag::fp) {
            fp_probs.push_back(p);
        }
    }
    std::vector<double> best;
    best.reserve(nodule_best.size());
    for (const auto& [nid, p] : nodule_best) best.push_back(p);
    if (int(nodule_best.size()) > total_nodules)
        fail(Errc::bad_value, "total_nodules smaller than the number of hit nodules");
    return sweep_curve(std::move(best), std::move(fp_probs), total_nodules, int(input.scans.size()));
}

double sensitivity_at(const FrocCurve& curve, double f) {
    double best = 0.0;
    for (const auto& pt : curve.points)
        if (pt.fp_per_scan <= f) best = std::max(best, pt.sensitivity);
    return best;
}

double cpm(const FrocCurve& curve) {
    double total = 0.0;
    for (double f : cpm_fp_levels()) total += sensitivity_at(curve, f);
    return total / double(cpm_fp_levels().size());
}

BootstrapBounds bootstrap_ci(const EvalInput& input, const std::vector<CandidateTag>& tags,
                             int resamples, uint64_t seed, const std::vector<double>& fp_levels) {
    if (resamples < 1) fail(Errc::bad_value, "resamples must be at least 1");
    if (input.scans.empty()) fail(Errc::empty_input, "scan list is empty");
    if (tags.size() != input.candidates.size())
        fail(Errc::size_mismatch, "one tag per candidate required");

    // per-scan summaries: nodule best-hit probabilities (quiet nodules get
    // -inf so they count in the denominator) and fp probabilities
    struct ScanData {
        std::vector<double> nodule_best;
        std::vector<double> fp_probs;
    };
    std::map<std::string, ScanData> by_scan;
    for (const auto& s : input.scans) by_scan[s];
    std::map<int, double> nodule_best;
    for (size_t ci = 0; ci < input.candidates.size(); ++ci) {
        if (tags[ci].kind == CandidateTag::hit) {
            double p = *input.candidates[ci].probability;
            auto [it, fresh] = nodule_best.emplace(tags[ci].nodule, p);
            if (!fresh) it->second = std::max(it->second, p);
        } else if (tags[ci].kind == CandidateTag::fp) {
            by_scan[input.candidates[ci].scan_id].fp_probs.push_back(
                *input.candidates[ci].probability);
        }
    }
    for (size_t ni = 0; ni < input.annotations.size(); ++ni) {
        auto it = by_scan.find(input.annotations[ni].scan_id);
        if (it == by_scan.end()) continue;
        auto hit = nodule_best.find(int(ni));
        it->second.nodule_best.push_back(hit == nodule_best.end()
                                             ? -std::numeric_limits<double>::infinity()
                                             : hit->second);
    }

    std::vector<const ScanData*> scans;
    scans.reserve(input.scans.size());
    for (const auto& s : input.scans) scans.push_back(&by_scan.at(s));

    size_t n_scans = scans.size();
    std::vector<std::vector<double>> level_samples(fp_levels.size());
    for (auto& v : level_samples) v.reserve(size_t(resamples));

    for (int r = 0; r < resamples; ++r) {
        Rng rng(derive_seed(seed, "bootstrap", uint64_t(r)));
        std::vector<double> best, fps;
        int total = 0;
        for (size_t s = 0; s < n_scans; ++s) {
            const ScanData* sd = scans[size_t(rng.uniform_index(n_scans))];
            for (double p : sd->nodule_best) {
                ++total;
                if (p >= 0.0) best.push_back(p); // -inf marks never-hit nodules
            }
            fps.insert(fps.end(), sd->fp_probs.begin(), sd->fp_probs.end());
        }
        if (total == 0) {
            for (auto& v : level_samples) v.push_back(0.0);
            continue;
        }
        FrocCurve curve = sweep_curve(std::move(best), std::move(fps), total, int(n_scans));
        for (size_t li = 0; li < fp_levels.size(); ++li)
            level_samples[li].push_back(sensitivity_at(curve, fp_levels[li]));
    }

    auto percentile = [](std::vector<double>& v, double q) {
        std::sort(v.begin(), v.end());
        double idx = q * double(v.size() - 1);
        size_t lo = size_t(idx);
        size_t hi = std::min(lo + 1, v.size() - 1);
        double frac = idx - double(lo);
        return v[lo] * (1.0 - frac) + v[hi] * frac;
    };

    BootstrapBounds bounds;
    for (auto& samples : level_samples) {
        bounds.low.push_back(percentile(samples, 0.025));
        bounds.high.push_back(percentile(samples, 0.975));
    }
    return bounds;
}

std::string froc_curve_csv(const FrocCurve& curve) {
    std::string out = "threshold,fp_per_scan,sensitivity\n";
    for (const auto& pt : curve.points)
        out += fmt(pt.threshold) + "," + fmt(pt.fp_per_scan) + "," + fmt(pt.sensitivity) + "\n";
    return out;
}

std::string froc_summary_json(const FrocCurve& curve, const BootstrapBounds& bounds,
                              const std::vector<double>& fp_levels, int scans, int total_nodules,
                              int resamples) {
    nlohmann::json j;
    j["fp_levels"] = fp_levels;
    std::vector<double> sens;
    for (double f : fp_levels) sens.push_back(sensitivity_at(curve, f));
    j["sensitivities"] = sens;
    j["cpm"] = cpm(curve);
    j["ci_low"] = bounds.low;
    j["ci_high"] = bounds.high;
    j["scans"] = scans;
    j["total_nodules"] = total_nodules;
    j["bootstrap_resamples"] = resamples;
    return j.dump(2) + "\n";
}

std::string froc_curve_svg(const FrocCurve& curve) {
    // log2 x-axis over [1/8, 8], the standard operating range
    const double W = 640, H = 480, ml = 60, mr = 20, mt = 20, mb = 50;
    auto xmap = [&](double fp) {
        double lo = std::log2(0.125), hi = std::log2(8.0);
        double v = std::log2(std::max(fp, 0.125));
        return ml + (v - lo) / (hi - lo) * (W - ml - mr);
    };
    auto ymap = [&](double s) { return mt + (1.0 - s) * (H - mt - mb); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (double f : cpm_fp_levels()) {
        double x = xmap(f);
        svg << "<line x1=\"" << x << "\" y1=\"" << mt << "\" x2=\"" << x << "\" y2=\"" << (H - mb)
            << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << x << "\" y=\"" << (H - mb + 20)
            << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt(f) << "</text>\n";
    }
    for (int i = 0; i <= 10; i += 2) {
        double y = ymap(i / 10.0);
        svg << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << (W - mr) << "\" y2=\"" << y
            << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << (ml - 8) << "\" y=\"" << (y + 4)
            << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(i / 10.0) << "</text>\n";
    }
    svg << "<text x=\"" << (W / 2) << "\" y=\"" << (H - 12)
        << "\" font-size=\"13\" text-anchor=\"middle\">false positives per scan</text>\n";
    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& pt : curve.points) {
        if (!first) svg << ' ';
        svg << xmap(pt.fp_per_scan) << ',' << ymap(pt.sensitivity);
        first = false;
    }
    svg << "\"/>\n</svg>\n";
    return svg.str();
}

} // namespace fpr

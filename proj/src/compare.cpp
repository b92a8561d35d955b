#include "pps/compare.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace pps {

ComparisonReport compare(const HistogramView& sim, const AnalyticCurve& analytic, const CompareOptions& options) {
    if (!(options.threshold > 0.0)) throw ParameterError(fmt::format("threshold must be positive, got {}", options.threshold));
    std::vector<double> jumps = analytic.discontinuities;
    jumps.insert(jumps.end(), options.discontinuities.begin(), options.discontinuities.end());

    ComparisonReport r;
    r.threshold = options.threshold;
    double sum_z2 = 0.0;
    std::size_t over_3 = 0;
    for (std::size_t b = 0; b < sim.size(); ++b) {
        BinDeviation d;
        d.lo = sim.edges[b];
        d.hi = sim.edges[b + 1];
        d.simulated = sim.values[b];
        if (d.lo < options.tau_lo || d.hi > options.tau_hi) {
            d.status = BinStatus::out_of_range;
            r.bins.push_back(d);
            continue;
        }
        const bool straddles = std::any_of(jumps.begin(), jumps.end(), [&](double t) { return d.lo < t && t < d.hi; });
        if (straddles) {
            d.status = BinStatus::excluded;
            ++r.excluded_bins;
            r.bins.push_back(d);
            continue;
        }
        const double centre = sim.center(b);
        try {
            analytic.at(centre);
            d.analytic = analytic.mean_over(d.lo, d.hi);
        } catch (const ParameterError&) {
            throw ParameterError(fmt::format("analytic curve does not cover bin centre {}", centre));
        }
        if (d.analytic == 0.0) {
            ++r.zero_bins;
            d.status = sim.counts[b] == 0 ? BinStatus::zero_match : BinStatus::zero_mismatch;
            if (d.status == BinStatus::zero_mismatch) ++r.zero_mismatches;
            r.bins.push_back(d);
            continue;
        }
        double err = sim.errors[b];
        if (!sim.count_scale.empty()) {
            // Largest of the observed, predicted and one-count Poisson spreads.
            const double scale = sim.count_scale[b];
            const double expected = d.analytic / scale;
            err = scale * std::sqrt(std::max({static_cast<double>(sim.counts[b]), expected, 1.0}));
        }
        const double diff = d.simulated - d.analytic;
        d.z = err > 0.0 ? diff / err : (diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff));
        ++r.n_bins;
        sum_z2 += d.z * d.z;
        if (std::abs(d.z) > 3.0) ++over_3;
        if (std::abs(d.z) > r.max_abs_z || r.n_bins == 1) {
            r.max_abs_z = std::abs(d.z);
            r.worst_tau = centre;
        }
        r.bins.push_back(d);
    }
    if (r.n_bins > 0) {
        r.rms_z = std::sqrt(sum_z2 / static_cast<double>(r.n_bins));
        r.fraction_over_3 = static_cast<double>(over_3) / static_cast<double>(r.n_bins);
    }
    r.pass = r.max_abs_z <= options.threshold && r.zero_mismatches == 0;
    return r;
}

nlohmann::json ComparisonReport::to_json() const {
    auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return nlohmann::json{
        {"schema", 1},
        {"verdict", pass ? "pass" : "fail"},
        {"max_abs_z", finite_or_null(max_abs_z)},
        {"worst_tau", worst_tau},
        {"rms_z", finite_or_null(rms_z)},
        {"fraction_abs_z_over_3", fraction_over_3},
        {"threshold", threshold},
        {"n_bins", n_bins},
        {"excluded_bins", excluded_bins},
        {"zero_bins", zero_bins},
        {"zero_mismatches", zero_mismatches},
        {"inputs", inputs},
    };
}

}  // namespace pps

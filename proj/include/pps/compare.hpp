#pragma once

// Per-bin agreement between a Monte-Carlo histogram and an analytic curve.
// Each bin gets z = (simulated - analytic) / stderr with the analytic curve
// averaged over the bin (the curve must cover the bin centre). When the
// histogram carries count_scale, stderr is count_scale times the square root
// of the largest of the observed count, the count the curve predicts, and
// one; sqrt(observed) alone misjudges sparse bins in either direction. Bins
// where the curve is exactly zero are not z-scored: they must hold zero
// counts. Bins straddling a discontinuity of the curve are excluded.

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pps/analytics.hpp"
#include "pps/estimators.hpp"

namespace pps {

struct CompareOptions {
    double threshold = 5.0;
    // Only bins lying entirely inside [tau_lo, tau_hi] take part.
    double tau_lo = -std::numeric_limits<double>::infinity();
    double tau_hi = std::numeric_limits<double>::infinity();
    // Extra jump locations on top of the curve's own.
    std::vector<double> discontinuities;
};

enum class BinStatus { scored, zero_match, zero_mismatch, excluded, out_of_range };

struct BinDeviation {
    double lo = 0.0;
    double hi = 0.0;
    double simulated = 0.0;
    double analytic = 0.0;
    double z = 0.0;
    BinStatus status = BinStatus::scored;
};

struct ComparisonReport {
    std::vector<BinDeviation> bins;
    double max_abs_z = 0.0;
    double worst_tau = 0.0;
    double rms_z = 0.0;
    double fraction_over_3 = 0.0;
    std::size_t n_bins = 0;  // z-scored bins
    std::size_t excluded_bins = 0;
    std::size_t zero_bins = 0;
    std::size_t zero_mismatches = 0;
    double threshold = 0.0;
    bool pass = false;
    nlohmann::json inputs = nlohmann::json::object();

    nlohmann::json to_json() const;
};

ComparisonReport compare(const HistogramView& sim, const AnalyticCurve& analytic, const CompareOptions& options = {});

}  // namespace pps

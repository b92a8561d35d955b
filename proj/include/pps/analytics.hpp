#pragma once

// Closed-form correlation and waiting-time curves for gapped, two-level,
// probabilistically gapped and pulsed streams, plus a numerical Kim-series
// oracle that rebuilds g2 from a waiting-time density by repeated
// convolution.

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pps/stream.hpp"
#include "pps/transforms.hpp"

namespace pps {

enum class FormulaId {
    constant,
    g2_gapped,
    wn_gapped,
    kim_oracle,
    g2_two_level,
    g2_prob_removal,
    // closed form inside the gap, Kim oracle beyond it
    g2_prob_removal_oracle,
    waiting_prob_removal,
    g2_pulsed,
};

std::string to_string(FormulaId id);
FormulaId formula_from_string(const std::string& name);

// A function sampled on a uniform grid. values[i] is the right limit at
// tau_grid[i]; left_limits, when non-empty, holds the left limits, which
// differ from values only at jump discontinuities (listed in
// discontinuities).
struct AnalyticCurve {
    std::vector<double> tau_grid;
    std::vector<double> values;
    std::vector<double> left_limits;
    std::vector<double> discontinuities;
    nlohmann::json params = nlohmann::json::object();
    FormulaId formula_id = FormulaId::constant;

    std::size_t size() const { return tau_grid.size(); }
    double step() const { return tau_grid.size() > 1 ? tau_grid[1] - tau_grid[0] : 0.0; }
    double left_limit(std::size_t i) const { return left_limits.empty() ? values[i] : left_limits[i]; }

    // Piecewise-linear interpolation that does not bridge jumps: between
    // nodes i and i + 1 it runs from values[i] to left_limit(i + 1).
    // Throws ParameterError outside [tau_grid.front(), tau_grid.back()].
    double at(double tau) const;
    // Mean of the same interpolant over [lo, hi], clipped to the grid.
    double mean_over(double lo, double hi) const;
};

// 0, step, 2 step, ... up to and including tau_max (rounded to the nearest
// whole number of steps).
std::vector<double> uniform_grid(double tau_max, double step);

// Throws ParameterError unless the grid starts at zero with a constant step.
void require_uniform_from_zero(const std::vector<double>& grid);

Rate gapped_rate(Rate gamma, GapSpec gap);
// gamma / (1 + p gamma t_G): the output rate of probabilistic gapping.
Rate prob_removal_rate(Rate gamma, GapSpec gap, RemovalProbability p);
// gamma gamma_exp / (gamma + gamma_exp).
Rate two_level_emission_rate(Rate gamma, Rate gamma_exp);
// gamma + gamma_exp.
Rate two_level_coherence_rate(Rate gamma, Rate gamma_exp);

AnalyticCurve constant_curve(std::vector<double> tau_grid, double value);

// g2 of the gapped coherent state: zero inside the gap, 1 + gamma t_G just
// above it, then damped oscillations towards 1. t_G = 0 gives 1.
AnalyticCurve g2_gapped(std::vector<double> tau_grid, Rate gamma, GapSpec gap);

// n-th waiting-time density, an Erlang(n, gamma) shifted by n t_G.
AnalyticCurve wn_gapped(std::vector<double> tau_grid, std::size_t n, Rate gamma, GapSpec gap);

// Convolution of two densities sampled on the same uniform grid from zero,
// trapezoidal in each cell with one-sided limits at the nodes, so jumps at
// grid nodes keep second-order accuracy.
AnalyticCurve convolve(const AnalyticCurve& a, const AnalyticCurve& b);

// (w1 + w1*w1 + ... ) / gamma_emission with n_terms terms.
AnalyticCurve kim_g2_from_w(const AnalyticCurve& w1, Rate gamma_emission, std::size_t n_terms);

AnalyticCurve g2_two_level(std::vector<double> tau_grid, Rate gamma_2ls);

// Waiting density of probabilistic gapping:
// (1 - p) gamma e^{-gamma tau} + p gamma e^{-gamma (tau - t_G)} 1[tau >= t_G].
AnalyticCurve waiting_prob_removal(std::vector<double> tau_grid, Rate gamma, GapSpec gap, RemovalProbability p);

// (1 - p)(p gamma t_G + 1) e^{-p gamma |tau|} for |tau| < t_G. Grid points at
// or beyond t_G come from the Kim oracle run on waiting_prob_removal, and the
// curve is then labelled g2_prob_removal_oracle.
AnalyticCurve g2_prob_removal(std::vector<double> tau_grid, Rate gamma, GapSpec gap, RemovalProbability p);

// Autocorrelation of a unit-mass jitter density, integrated over its whole
// support: Gaussian sigma gives a Gaussian of width sigma sqrt(2), the
// one-sided exponential gives (rate / 2) e^{-rate |tau|}.
double jitter_autocorrelation(const JitterSpec& jitter, double tau);

// period * sum over n in [-n_peaks, n_peaks], n != 0, of the jitter
// autocorrelation at tau - n period. The jitter must not be `none`.
AnalyticCurve g2_pulsed(std::vector<double> tau_grid, double period, const JitterSpec& jitter, std::size_t n_peaks);

}  // namespace pps

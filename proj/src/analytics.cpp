#include "pps/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace pps {

namespace {

constexpr std::size_t kLogSpaceOrder = 20;

// x^n e^{-x} / n!, x >= 0.
double poisson_weight(double x, std::size_t n) {
    if (n == 0) return std::exp(-x);
    if (x == 0.0) return 0.0;
    if (n <= kLogSpaceOrder) {
        double term = std::exp(-x);
        for (std::size_t k = 1; k <= n; ++k) term *= x / static_cast<double>(k);
        return term;
    }
    const auto nd = static_cast<double>(n);
    return std::exp(nd * std::log(x) - x - std::lgamma(nd + 1.0));
}

// Distance above a jump located at `edge`; nodes within `snap` of the jump
// are treated as sitting exactly on it.
double offset_from(double tau, double edge, double snap) {
    const double x = tau - edge;
    return std::abs(x) <= snap ? 0.0 : x;
}

AnalyticCurve make_curve(std::vector<double> grid, FormulaId id, nlohmann::json params) {
    AnalyticCurve c;
    c.values.assign(grid.size(), 0.0);
    c.tau_grid = std::move(grid);
    c.formula_id = id;
    c.params = std::move(params);
    return c;
}

std::size_t first_support_index(const AnalyticCurve& c) {
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.values[i] != 0.0 || c.left_limit(i) != 0.0) return i;
    }
    return c.size();
}

double max_abs_tau(const std::vector<double>& grid) {
    double m = 0.0;
    for (double t : grid) m = std::max(m, std::abs(t));
    return m;
}

}  // namespace

std::string to_string(FormulaId id) {
    switch (id) {
        case FormulaId::constant: return "constant";
        case FormulaId::g2_gapped: return "g2_gapped";
        case FormulaId::wn_gapped: return "wn_gapped";
        case FormulaId::kim_oracle: return "kim_oracle";
        case FormulaId::g2_two_level: return "g2_two_level";
        case FormulaId::g2_prob_removal: return "g2_prob_removal";
        case FormulaId::g2_prob_removal_oracle: return "g2_prob_removal_oracle";
        case FormulaId::waiting_prob_removal: return "waiting_prob_removal";
        case FormulaId::g2_pulsed: return "g2_pulsed";
    }
    return "unknown";
}

FormulaId formula_from_string(const std::string& name) {
    for (auto id : {FormulaId::constant, FormulaId::g2_gapped, FormulaId::wn_gapped, FormulaId::kim_oracle,
                    FormulaId::g2_two_level, FormulaId::g2_prob_removal, FormulaId::g2_prob_removal_oracle,
                    FormulaId::waiting_prob_removal, FormulaId::g2_pulsed}) {
        if (to_string(id) == name) return id;
    }
    throw FormatError(fmt::format("unknown formula id '{}'", name));
}

double AnalyticCurve::at(double tau) const {
    if (tau_grid.empty()) throw ParameterError("empty analytic curve");
    const double first = tau_grid.front();
    const double last = tau_grid.back();
    if (!(tau >= first && tau <= last)) {
        throw ParameterError(fmt::format("tau = {} lies outside the curve grid [{}, {}]", tau, first, last));
    }
    if (tau_grid.size() == 1) return values.front();
    auto it = std::upper_bound(tau_grid.begin(), tau_grid.end(), tau);
    std::size_t i = static_cast<std::size_t>(it - tau_grid.begin()) - 1;
    if (tau == tau_grid[i] || i + 1 == tau_grid.size()) return values[i];
    const double f = (tau - tau_grid[i]) / (tau_grid[i + 1] - tau_grid[i]);
    return values[i] + f * (left_limit(i + 1) - values[i]);
}

double AnalyticCurve::mean_over(double lo, double hi) const {
    if (!(hi > lo)) throw ParameterError(fmt::format("empty averaging interval [{}, {}]", lo, hi));
    if (tau_grid.size() < 2) return at(0.5 * (lo + hi));
    lo = std::max(lo, tau_grid.front());
    hi = std::min(hi, tau_grid.back());
    if (!(hi > lo)) throw ParameterError(fmt::format("interval [{}, {}] lies outside the curve grid", lo, hi));
    auto it = std::upper_bound(tau_grid.begin(), tau_grid.end(), lo);
    std::size_t i = static_cast<std::size_t>(it - tau_grid.begin());
    i = i == 0 ? 0 : i - 1;
    double area = 0.0;
    for (; i + 1 < tau_grid.size() && tau_grid[i] < hi; ++i) {
        const double t0 = tau_grid[i], t1 = tau_grid[i + 1];
        const double a = std::max(lo, t0), b = std::min(hi, t1);
        if (!(b > a)) continue;
        const double slope = (left_limit(i + 1) - values[i]) / (t1 - t0);
        const double fa = values[i] + slope * (a - t0);
        const double fb = values[i] + slope * (b - t0);
        area += 0.5 * (fa + fb) * (b - a);
    }
    return area / (hi - lo);
}

std::vector<double> uniform_grid(double tau_max, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw ParameterError(fmt::format("grid step must be positive, got {}", step));
    if (!(tau_max > 0.0) || !std::isfinite(tau_max)) throw ParameterError(fmt::format("tau_max must be positive, got {}", tau_max));
    const auto n = static_cast<std::size_t>(std::llround(tau_max / step));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * step;
    return grid;
}

void require_uniform_from_zero(const std::vector<double>& grid) {
    if (grid.size() < 2) throw ParameterError("grid needs at least two points");
    if (grid.front() != 0.0) throw ParameterError("grid must start at zero");
    const double h = grid[1] - grid[0];
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (std::abs(grid[i] - static_cast<double>(i) * h) > 1e-6 * h) {
            throw ParameterError(fmt::format("grid is not uniform at index {}", i));
        }
    }
}

Rate gapped_rate(Rate gamma, GapSpec gap) { return Rate(gamma.value() / (1.0 + gamma.value() * gap.t_gap())); }

Rate prob_removal_rate(Rate gamma, GapSpec gap, RemovalProbability p) {
    return Rate(gamma.value() / (1.0 + p.value() * gamma.value() * gap.t_gap()));
}

Rate two_level_emission_rate(Rate gamma, Rate gamma_exp) {
    return Rate(gamma.value() * gamma_exp.value() / (gamma.value() + gamma_exp.value()));
}

Rate two_level_coherence_rate(Rate gamma, Rate gamma_exp) { return Rate(gamma.value() + gamma_exp.value()); }

AnalyticCurve constant_curve(std::vector<double> tau_grid, double value) {
    auto c = make_curve(std::move(tau_grid), FormulaId::constant, {{"value", value}});
    std::fill(c.values.begin(), c.values.end(), value);
    return c;
}

AnalyticCurve g2_gapped(std::vector<double> tau_grid, Rate gamma, GapSpec gap) {
    const double g = gamma.value();
    const double tg = gap.t_gap();
    auto c = make_curve(std::move(tau_grid), FormulaId::g2_gapped, {{"gamma", g}, {"t_gap", tg}});
    if (tg == 0.0) {
        std::fill(c.values.begin(), c.values.end(), 1.0);
        return c;
    }
    const double snap = 1e-9 * tg;
    const double peak = 1.0 + g * tg;
    const auto n_max = static_cast<std::size_t>(std::ceil(max_abs_tau(c.tau_grid) / tg)) + 2;
    c.left_limits.assign(c.size(), 0.0);
    c.discontinuities = {tg};
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double tau = std::abs(c.tau_grid[i]);
        double sum = 0.0;
        bool on_gap_edge = false;
        for (std::size_t n = 0; n <= n_max; ++n) {
            const double x = offset_from(tau, static_cast<double>(n + 1) * tg, snap * static_cast<double>(n + 1));
            if (x < 0.0) break;
            if (n == 0 && x == 0.0) on_gap_edge = true;
            sum += poisson_weight(g * x, n);
        }
        c.values[i] = peak * sum;
        // Only the n = 0 term jumps; every other term starts from zero.
        c.left_limits[i] = on_gap_edge ? 0.0 : c.values[i];
    }
    return c;
}

AnalyticCurve wn_gapped(std::vector<double> tau_grid, std::size_t n, Rate gamma, GapSpec gap) {
    if (n < 1) throw ParameterError("waiting-time order must be at least 1");
    const double g = gamma.value();
    const double tg = gap.t_gap();
    auto c = make_curve(std::move(tau_grid), FormulaId::wn_gapped, {{"gamma", g}, {"t_gap", tg}, {"n", n}});
    const double start = static_cast<double>(n) * tg;
    const double snap = 1e-9 * std::max(tg, c.step());
    c.left_limits.assign(c.size(), 0.0);
    if (n == 1) c.discontinuities = {start};
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double x = offset_from(c.tau_grid[i], start, snap * static_cast<double>(n));
        if (x < 0.0) continue;
        // gamma^n x^{n-1} e^{-gamma x} / (n-1)! = gamma * poisson_weight(gamma x, n - 1)
        c.values[i] = g * poisson_weight(g * x, n - 1);
        c.left_limits[i] = (n == 1 && x == 0.0) ? 0.0 : c.values[i];
    }
    return c;
}

AnalyticCurve convolve(const AnalyticCurve& a, const AnalyticCurve& b) {
    require_uniform_from_zero(a.tau_grid);
    require_uniform_from_zero(b.tau_grid);
    const double h = a.step();
    if (a.size() != b.size() || std::abs(b.step() - h) > 1e-9 * h) {
        throw ParameterError("convolution operands must share the same grid");
    }
    const auto m_size = static_cast<std::ptrdiff_t>(a.size());
    const double* a_right = a.values.data();
    const double* a_left = a.left_limits.empty() ? a.values.data() : a.left_limits.data();
    const double* b_right = b.values.data();
    const double* b_left = b.left_limits.empty() ? b.values.data() : b.left_limits.data();
    const auto sa = static_cast<std::ptrdiff_t>(first_support_index(a));
    const auto sb = static_cast<std::ptrdiff_t>(first_support_index(b));

    auto out = make_curve(a.tau_grid, FormulaId::kim_oracle, nlohmann::json::object());
    for (std::ptrdiff_t m = 1; m < m_size; ++m) {
        // Cell [j, j + 1] pairs a on that cell with b on [m - j - 1, m - j].
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, sa - 1);
        const std::ptrdiff_t hi = std::min(m - 1, m - sb);
        double sum = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            sum += a_right[j] * b_left[m - j] + a_left[j + 1] * b_right[m - j - 1];
        }
        out.values[static_cast<std::size_t>(m)] = 0.5 * h * sum;
    }
    return out;
}

namespace {

// Sum of the first n_terms self-convolution powers of w1 (or fewer, once a
// term and everything after it is negligible when stop_below > 0).
AnalyticCurve kim_sum(const AnalyticCurve& w1, std::size_t n_terms, double stop_below, std::size_t min_terms,
                      std::size_t* used_terms) {
    AnalyticCurve sum = w1;
    sum.left_limits.resize(w1.size());
    for (std::size_t i = 0; i < w1.size(); ++i) sum.left_limits[i] = w1.left_limit(i);
    AnalyticCurve term = w1;
    std::size_t used = 1;
    for (std::size_t k = 2; k <= n_terms; ++k) {
        term = convolve(term, w1);
        double peak = 0.0;
        for (std::size_t i = 0; i < term.size(); ++i) {
            sum.values[i] += term.values[i];
            sum.left_limits[i] += term.values[i];
            peak = std::max(peak, term.values[i]);
        }
        used = k;
        if (stop_below > 0.0 && k >= min_terms && peak < stop_below) break;
    }
    if (used_terms) *used_terms = used;
    return sum;
}

}  // namespace

AnalyticCurve kim_g2_from_w(const AnalyticCurve& w1, Rate gamma_emission, std::size_t n_terms) {
    if (n_terms < 1) throw ParameterError("the Kim series needs at least one term");
    require_uniform_from_zero(w1.tau_grid);
    auto sum = kim_sum(w1, n_terms, 0.0, 0, nullptr);
    const double inv = 1.0 / gamma_emission.value();
    for (auto& v : sum.values) v *= inv;
    for (auto& v : sum.left_limits) v *= inv;
    sum.formula_id = FormulaId::kim_oracle;
    sum.discontinuities = w1.discontinuities;
    sum.params = {{"gamma_emission", gamma_emission.value()},
                  {"n_terms", n_terms},
                  {"w1_formula", to_string(w1.formula_id)},
                  {"w1_params", w1.params}};
    return sum;
}

AnalyticCurve g2_two_level(std::vector<double> tau_grid, Rate gamma_2ls) {
    const double g = gamma_2ls.value();
    auto c = make_curve(std::move(tau_grid), FormulaId::g2_two_level, {{"gamma_2ls", g}});
    for (std::size_t i = 0; i < c.size(); ++i) c.values[i] = -std::expm1(-g * std::abs(c.tau_grid[i]));
    return c;
}

AnalyticCurve waiting_prob_removal(std::vector<double> tau_grid, Rate gamma, GapSpec gap, RemovalProbability p) {
    const double g = gamma.value();
    const double tg = gap.t_gap();
    const double pr = p.value();
    auto c = make_curve(std::move(tau_grid), FormulaId::waiting_prob_removal, {{"gamma", g}, {"t_gap", tg}, {"p", pr}});
    const double snap = 1e-9 * std::max(tg, c.step());
    c.left_limits.assign(c.size(), 0.0);
    if (tg > 0.0 && pr > 0.0) c.discontinuities = {tg};
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double tau = c.tau_grid[i];
        if (tau < 0.0) continue;
        const double smooth = (1.0 - pr) * g * std::exp(-g * tau);
        const double x = offset_from(tau, tg, snap);
        const double gapped = x >= 0.0 ? pr * g * std::exp(-g * x) : 0.0;
        c.values[i] = smooth + gapped;
        c.left_limits[i] = (x == 0.0) ? smooth : c.values[i];
    }
    return c;
}

AnalyticCurve g2_prob_removal(std::vector<double> tau_grid, Rate gamma, GapSpec gap, RemovalProbability p) {
    const double g = gamma.value();
    const double tg = gap.t_gap();
    const double pr = p.value();
    nlohmann::json params = {{"gamma", g}, {"t_gap", tg}, {"p", pr}};
    if (tg == 0.0) {
        auto c = constant_curve(std::move(tau_grid), 1.0);
        c.formula_id = FormulaId::g2_prob_removal;
        c.params = params;
        return c;
    }
    auto c = make_curve(std::move(tau_grid), FormulaId::g2_prob_removal, params);
    const double snap = 1e-9 * tg;
    const double amplitude = (1.0 - pr) * (pr * g * tg + 1.0);
    auto inside = [&](double tau) { return amplitude * std::exp(-pr * g * tau); };
    c.left_limits.assign(c.size(), 0.0);
    double tau_far = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double tau = std::abs(c.tau_grid[i]);
        if (offset_from(tau, tg, snap) < 0.0) {
            c.values[i] = inside(tau);
            c.left_limits[i] = c.values[i];
        } else {
            tau_far = std::max(tau_far, tau);
        }
    }
    if (tau_far == 0.0) return c;

    // Oracle on a grid with t_G on a node and gamma h <= 0.01.
    const auto per_gap = static_cast<std::size_t>(std::max(100.0, std::ceil(100.0 * g * tg)));
    const double h = tg / static_cast<double>(per_gap);
    std::vector<double> fine(static_cast<std::size_t>(std::ceil(tau_far / h)) + 2);
    for (std::size_t i = 0; i < fine.size(); ++i) {
        fine[i] = (i % per_gap == 0) ? tg * static_cast<double>(i / per_gap) : static_cast<double>(i) * h;
    }
    const auto w1 = waiting_prob_removal(fine, gamma, gap, p);
    const double mean_events = g * fine.back();
    const auto max_terms = static_cast<std::size_t>(mean_events + 12.0 * std::sqrt(mean_events) + 30.0);
    std::size_t used = 0;
    auto sum = kim_sum(w1, max_terms, 1e-12, static_cast<std::size_t>(mean_events) + 2, &used);
    const double inv_rate = 1.0 / prob_removal_rate(gamma, gap, p).value();

    for (std::size_t i = 0; i < c.size(); ++i) {
        const double tau = std::abs(c.tau_grid[i]);
        const double x = offset_from(tau, tg, snap);
        if (x < 0.0) continue;
        c.values[i] = (x == 0.0 ? sum.values[per_gap] : sum.at(tau)) * inv_rate;
        c.left_limits[i] = x == 0.0 ? inside(tg) : c.values[i];
    }
    c.formula_id = FormulaId::g2_prob_removal_oracle;
    c.discontinuities = {tg};
    c.params["oracle_step"] = h;
    c.params["oracle_terms"] = used;
    return c;
}

double jitter_autocorrelation(const JitterSpec& spec, double tau) {
    validate(spec);
    if (const auto* gs = std::get_if<jitter::Gaussian>(&spec)) {
        const double s = gs->sigma;
        return std::exp(-tau * tau / (4.0 * s * s)) / (2.0 * s * std::sqrt(std::numbers::pi));
    }
    if (const auto* e = std::get_if<jitter::Exponential>(&spec)) {
        return 0.5 * e->rate * std::exp(-e->rate * std::abs(tau));
    }
    throw ParameterError("jitter 'none' has a Dirac autocorrelation that cannot be sampled");
}

AnalyticCurve g2_pulsed(std::vector<double> tau_grid, double period, const JitterSpec& spec, std::size_t n_peaks) {
    if (!(period > 0.0) || !std::isfinite(period)) throw ParameterError(fmt::format("period must be positive, got {}", period));
    if (n_peaks < 1) throw ParameterError("n_peaks must be at least 1");
    validate(spec);
    if (std::holds_alternative<jitter::None>(spec)) {
        throw ParameterError("jitter 'none' gives a Dirac comb: peaks sit at n * period with area period each");
    }
    auto c = make_curve(std::move(tau_grid), FormulaId::g2_pulsed,
                        {{"period", period}, {"jitter", to_string(spec)}, {"n_peaks", n_peaks}});
    const auto np = static_cast<long>(n_peaks);
    for (std::size_t i = 0; i < c.size(); ++i) {
        double sum = 0.0;
        for (long n = -np; n <= np; ++n) {
            if (n == 0) continue;
            sum += jitter_autocorrelation(spec, c.tau_grid[i] - static_cast<double>(n) * period);
        }
        c.values[i] = period * sum;
    }
    return c;
}

}  // namespace pps

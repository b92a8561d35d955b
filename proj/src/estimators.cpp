#include "pps/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include <fmt/format.h>

namespace pps {

namespace {

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) throw ParameterError(fmt::format("{} must be positive, got {}", what, value));
}

std::size_t bin_count(double width, double tau_max) {
    const double ratio = tau_max / width;
    auto n = static_cast<std::size_t>(std::ceil(ratio));
    // Absorb rounding when tau_max is meant as an exact multiple of width.
    if (n > 1 && std::abs(ratio - static_cast<double>(n - 1)) <= 1e-9 * ratio) --n;
    return std::max<std::size_t>(n, 1);
}

}  // namespace

BinGrid::BinGrid(std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 2) throw ParameterError("a bin grid needs at least one bin");
    if (edges_.front() != 0.0) throw ParameterError("bin grid must start at zero");
    for (std::size_t i = 1; i < edges_.size(); ++i) {
        if (!(edges_[i] > edges_[i - 1]) || !std::isfinite(edges_[i])) {
            throw ParameterError(fmt::format("bin edges must increase strictly (edge {})", i));
        }
    }
    nominal_width_ = edges_.back() / static_cast<double>(size());
    inv_width_ = 1.0 / nominal_width_;
}

BinGrid BinGrid::uniform(double width, double tau_max) {
    require_positive(width, "bin width");
    require_positive(tau_max, "tau_max");
    const std::size_t n = bin_count(width, tau_max);
    std::vector<double> edges(n + 1);
    for (std::size_t b = 0; b <= n; ++b) edges[b] = static_cast<double>(b) * width;
    return BinGrid(std::move(edges));
}

BinGrid BinGrid::aligned(double anchor, std::size_t per_anchor, double tau_max) {
    require_positive(anchor, "anchor");
    require_positive(tau_max, "tau_max");
    if (per_anchor == 0) throw ParameterError("bins per anchor must be at least 1");
    const auto k = static_cast<double>(per_anchor);
    const std::size_t n = bin_count(anchor / k, tau_max);
    std::vector<double> edges(n + 1);
    for (std::size_t b = 0; b <= n; ++b) {
        edges[b] = (b % per_anchor == 0) ? anchor * static_cast<double>(b / per_anchor)
                                         : anchor * static_cast<double>(b) / k;
    }
    return BinGrid(std::move(edges));
}

BinGrid BinGrid::from_edges(std::vector<double> edges) { return BinGrid(std::move(edges)); }

unsigned resolve_threads(unsigned requested) {
    unsigned n = requested != 0 ? requested : std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PPS_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
        } catch (const std::exception&) {
            // unparsable cap: ignored
        }
    }
    return std::max(1U, n);
}

Rate estimate_rate(const EventStream& stream) {
    if (stream.empty()) throw DegenerateInputError("cannot estimate the rate of an empty stream");
    return Rate(static_cast<double>(stream.size()) / stream.duration());
}

namespace {

void count_pairs_range(std::span<const double> times, const BinGrid& bins, std::size_t begin, std::size_t end,
                       std::vector<std::uint64_t>& counts) {
    const double upper = bins.upper();
    const std::size_t n = times.size();
    for (std::size_t i = begin; i < end; ++i) {
        const double ti = times[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = times[j] - ti;
            if (!(d < upper)) break;
            ++counts[*bins.locate(d)];
        }
    }
}

}  // namespace

std::vector<std::uint64_t> count_pairs(std::span<const double> times, const BinGrid& bins, unsigned threads) {
    const std::size_t n = times.size();
    std::vector<std::uint64_t> counts(bins.size(), 0);
    threads = std::max(1U, threads);
    if (threads == 1 || n < 4096) {
        count_pairs_range(times, bins, 0, n, counts);
        return counts;
    }
    std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(bins.size(), 0));
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (unsigned s = 0; s < threads; ++s) {
            const std::size_t begin = n * s / threads;
            const std::size_t end = n * (s + 1) / threads;
            workers.emplace_back([&, begin, end, s] { count_pairs_range(times, bins, begin, end, partial[s]); });
        }
    }
    for (const auto& p : partial) {
        for (std::size_t b = 0; b < counts.size(); ++b) counts[b] += p[b];
    }
    return counts;
}

namespace {

void normalize_g2(CorrelationHistogram& h) {
    const std::size_t nb = h.bins.size();
    h.g2.assign(nb, 0.0);
    h.std_error.assign(nb, 0.0);
    h.count_scale.assign(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        const double scale = 1.0 / (h.rate_hat * h.rate_hat * (h.duration - h.bins.center(b)) * h.bins.width(b));
        const auto c = static_cast<double>(h.pair_counts[b]);
        h.count_scale[b] = scale;
        h.g2[b] = c * scale;
        h.std_error[b] = std::sqrt(c) * scale;
    }
}

}  // namespace

CorrelationHistogram estimate_g2(const EventStream& stream, const BinGrid& bins, EstimateOptions options) {
    require_valid(stream);
    const double duration = stream.duration();
    if (bins.size() < 2) throw ParameterError("tau_max must exceed the bin width");
    if (bins.upper() > duration / 10.0) {
        throw ParameterError(fmt::format("tau_max {} exceeds duration / 10 = {}", bins.upper(), duration / 10.0));
    }
    if (stream.size() < 2) throw DegenerateInputError("g2 needs at least two events");
    CorrelationHistogram h;
    h.bins = bins;
    h.duration = duration;
    h.rate_hat = static_cast<double>(stream.size()) / duration;
    h.pair_counts = count_pairs(stream.times(), bins, resolve_threads(options.threads));
    normalize_g2(h);
    return h;
}

CorrelationHistogram estimate_g2(const EventStream& stream, double bin_width, double tau_max, EstimateOptions options) {
    require_positive(bin_width, "bin width");
    require_positive(tau_max, "tau_max");
    if (!(tau_max > bin_width)) throw ParameterError("tau_max must exceed the bin width");
    return estimate_g2(stream, BinGrid::uniform(bin_width, tau_max), options);
}

CorrelationHistogram merge_bins(const CorrelationHistogram& hist, std::size_t first, std::size_t factor) {
    if (factor == 0) throw ParameterError("merge factor must be at least 1");
    const std::size_t nb = hist.bins.size();
    if (first > nb) throw ParameterError("merge start beyond the last bin");
    const auto edges = hist.bins.edges();
    std::vector<double> new_edges(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(first) + 1);
    std::vector<std::uint64_t> counts(hist.pair_counts.begin(), hist.pair_counts.begin() + static_cast<std::ptrdiff_t>(first));
    for (std::size_t b = first; b + factor <= nb; b += factor) {
        std::uint64_t sum = 0;
        for (std::size_t k = 0; k < factor; ++k) sum += hist.pair_counts[b + k];
        counts.push_back(sum);
        new_edges.push_back(edges[b + factor]);
    }
    CorrelationHistogram out;
    out.bins = BinGrid::from_edges(std::move(new_edges));
    out.pair_counts = std::move(counts);
    out.rate_hat = hist.rate_hat;
    out.duration = hist.duration;
    normalize_g2(out);
    return out;
}

WaitingHistogram estimate_waiting(const EventStream& stream, std::size_t order, const BinGrid& bins) {
    if (order < 1) throw ParameterError("waiting-time order must be at least 1");
    require_valid(stream);
    if (stream.size() <= order) {
        throw DegenerateInputError(fmt::format("order-{} waiting times need more than {} events, got {}", order, order,
                                               stream.size()));
    }
    const auto t = stream.times();
    WaitingHistogram h;
    h.order = order;
    h.bins = bins;
    h.duration = stream.duration();
    h.total = t.size() - order;
    h.counts.assign(bins.size(), 0);
    for (std::size_t i = 0; i + order < t.size(); ++i) {
        if (auto b = bins.locate(t[i + order] - t[i])) ++h.counts[*b];
    }
    const std::size_t nb = bins.size();
    h.density.assign(nb, 0.0);
    h.std_error.assign(nb, 0.0);
    h.count_scale.assign(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        const double scale = 1.0 / (static_cast<double>(h.total) * bins.width(b));
        const auto c = static_cast<double>(h.counts[b]);
        h.count_scale[b] = scale;
        h.density[b] = c * scale;
        h.std_error[b] = std::sqrt(c) * scale;
    }
    return h;
}

WaitingHistogram estimate_waiting(const EventStream& stream, std::size_t order, double bin_width, double tau_max) {
    return estimate_waiting(stream, order, BinGrid::uniform(bin_width, tau_max));
}

namespace {

__extension__ typedef unsigned __int128 u128;

std::uint64_t binomial(std::uint64_t m, std::uint64_t r) {
    if (r > m) return 0;
    r = std::min(r, m - r);
    u128 c = 1;
    for (std::uint64_t i = 0; i < r; ++i) {
        c = c * (m - i) / (i + 1);
        if (c > std::numeric_limits<std::uint64_t>::max()) throw DegenerateInputError("coincidence count overflows 64 bits");
    }
    return static_cast<std::uint64_t>(c);
}

}  // namespace

std::uint64_t count_coincidences(const EventStream& stream, double window, std::size_t k) {
    require_positive(window, "coincidence window");
    if (k < 2) throw ParameterError("coincidence order must be at least 2");
    require_valid(stream);
    const auto t = stream.times();
    const std::size_t n = t.size();
    std::uint64_t total = 0;
    std::size_t hi = 0;  // first index with t[hi] - t[i] > window
    for (std::size_t i = 0; i < n; ++i) {
        if (hi <= i) hi = i + 1;
        while (hi < n && t[hi] - t[i] <= window) ++hi;
        const std::uint64_t add = binomial(hi - i - 1, k - 1);
        if (total > std::numeric_limits<std::uint64_t>::max() - add) throw DegenerateInputError("coincidence count overflows 64 bits");
        total += add;
    }
    return total;
}

PeakStats peak_stats(const HistogramView& hist, double lo, double hi) {
    PeakStats s;
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t b = 0; b < hist.size(); ++b) {
        if (hist.edges[b] < lo || hist.edges[b + 1] > hi) continue;
        const double w = hist.edges[b + 1] - hist.edges[b];
        const double mass = hist.values[b] * w;
        m0 += mass;
        m1 += mass * hist.center(b);
        if (s.n_bins == 0 || hist.values[b] > s.max_value) {
            s.max_value = hist.values[b];
            s.argmax = hist.center(b);
        }
        ++s.n_bins;
    }
    s.area = m0;
    if (!(m0 > 0.0)) return s;
    s.mean = m1 / m0;
    double c2 = 0.0, c3 = 0.0;
    for (std::size_t b = 0; b < hist.size(); ++b) {
        if (hist.edges[b] < lo || hist.edges[b + 1] > hi) continue;
        const double mass = hist.values[b] * (hist.edges[b + 1] - hist.edges[b]);
        const double d = hist.center(b) - s.mean;
        c2 += mass * d * d;
        c3 += mass * d * d * d;
    }
    c2 /= m0;
    c3 /= m0;
    s.stddev = std::sqrt(c2);
    s.skewness = c2 > 0.0 ? c3 / (c2 * s.stddev) : 0.0;
    return s;
}

}  // namespace pps

#pragma once

// Statistics computed directly from raw event times: rate, binned second
// order correlation g2(tau), n-th order waiting-time densities and k-fold
// coincidence counts.
//
// Normalization of the correlation estimate, per bin b of width w_b and
// centre tau_b, with rate_hat = N / T:
//
//     g2[b] = pair_counts[b] / (rate_hat^2 * (T - tau_b) * w_b)
//
// Only positive delays are histogrammed (g2 is even in tau). The error is
// the Poisson one, sqrt(pair_counts) on the same scale; correlations
// between pairs are not accounted for.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pps/stream.hpp"

namespace pps {

// Contiguous bins [edges[b], edges[b + 1]) starting at zero.
class BinGrid {
public:
    // Bins of `width` covering [0, tau_max); the last edge is the first
    // multiple of width at or above tau_max.
    static BinGrid uniform(double width, double tau_max);
    // `per_anchor` bins per `anchor`, with every multiple of `anchor`
    // landing exactly on an edge (edge per_anchor * m equals anchor * m).
    static BinGrid aligned(double anchor, std::size_t per_anchor, double tau_max);
    // Arbitrary edges; must start at 0 and increase strictly.
    static BinGrid from_edges(std::vector<double> edges);

    std::size_t size() const { return edges_.size() - 1; }
    std::span<const double> edges() const { return edges_; }
    double lo(std::size_t b) const { return edges_[b]; }
    double hi(std::size_t b) const { return edges_[b + 1]; }
    double width(std::size_t b) const { return edges_[b + 1] - edges_[b]; }
    double center(std::size_t b) const { return 0.5 * (edges_[b] + edges_[b + 1]); }
    double upper() const { return edges_.back(); }
    double nominal_width() const { return nominal_width_; }

    // Bin containing `delay`, if within [0, upper()).
    std::optional<std::size_t> locate(double delay) const {
        if (!(delay >= 0.0) || !(delay < edges_.back())) return std::nullopt;
        const std::size_t n = size();
        auto b = static_cast<std::size_t>(delay * inv_width_);
        if (b >= n) b = n - 1;
        while (b > 0 && delay < edges_[b]) --b;
        while (delay >= edges_[b + 1]) ++b;
        return b;
    }

private:
    explicit BinGrid(std::vector<double> edges);

    std::vector<double> edges_;
    double nominal_width_ = 0.0;
    double inv_width_ = 0.0;
};

// Read-only look at any binned estimate, as consumed by compare().
struct HistogramView {
    std::span<const double> edges;
    std::span<const std::uint64_t> counts;
    std::span<const double> values;
    std::span<const double> errors;
    // Value represented by a single count in each bin.
    std::span<const double> count_scale;

    std::size_t size() const { return counts.size(); }
    double center(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
};

struct CorrelationHistogram {
    BinGrid bins = BinGrid::uniform(1.0, 1.0);
    std::vector<std::uint64_t> pair_counts;
    std::vector<double> g2;
    std::vector<double> std_error;
    std::vector<double> count_scale;
    double rate_hat = 0.0;
    double duration = 0.0;

    HistogramView view() const { return {bins.edges(), pair_counts, g2, std_error, count_scale}; }
};

struct WaitingHistogram {
    std::size_t order = 1;
    BinGrid bins = BinGrid::uniform(1.0, 1.0);
    std::vector<std::uint64_t> counts;
    std::vector<double> density;
    std::vector<double> std_error;
    std::vector<double> count_scale;
    // Number of delays t[i + order] - t[i] in the stream (in range or not).
    std::uint64_t total = 0;
    double duration = 0.0;

    HistogramView view() const { return {bins.edges(), counts, density, std_error, count_scale}; }
};

struct EstimateOptions {
    // 0: use every available core, capped by the PPS_THREADS variable.
    unsigned threads = 0;
};

// Thread count after applying the PPS_THREADS cap.
unsigned resolve_threads(unsigned requested);

Rate estimate_rate(const EventStream& stream);

// Ordered-pair delay histogram (i < j, t_j - t_i in a bin). Shards the outer
// index across threads; counts are integer so the result is independent of
// the thread count.
std::vector<std::uint64_t> count_pairs(std::span<const double> times, const BinGrid& bins, unsigned threads = 1);

CorrelationHistogram estimate_g2(const EventStream& stream, const BinGrid& bins, EstimateOptions options = {});
CorrelationHistogram estimate_g2(const EventStream& stream, double bin_width, double tau_max, EstimateOptions options = {});

// Re-normalizes summed counts over coarser bins: bins before `first` are
// kept, then groups of `factor` bins are merged; a trailing partial group
// is dropped.
CorrelationHistogram merge_bins(const CorrelationHistogram& hist, std::size_t first, std::size_t factor);

WaitingHistogram estimate_waiting(const EventStream& stream, std::size_t order, const BinGrid& bins);
WaitingHistogram estimate_waiting(const EventStream& stream, std::size_t order, double bin_width, double tau_max);

// Sum over events i of C(m_i, k - 1), m_i the number of events in
// (t_i, t_i + window].
std::uint64_t count_coincidences(const EventStream& stream, double window, std::size_t k);

// Shape of a histogram over the bins lying entirely inside [lo, hi),
// treating value * width as the mass of each bin.
struct PeakStats {
    double area = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    double skewness = 0.0;
    double max_value = 0.0;
    double argmax = 0.0;
    std::size_t n_bins = 0;
};

PeakStats peak_stats(const HistogramView& hist, double lo, double hi);

}  // namespace pps

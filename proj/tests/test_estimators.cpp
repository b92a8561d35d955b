#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "pps/analytics.hpp"
#include "pps/compare.hpp"
#include "pps/error.hpp"
#include "pps/estimators.hpp"
#include "pps/rng.hpp"
#include "pps/transforms.hpp"

using namespace pps;

TEST(BinGrid, UniformEdges) {
    const auto g = BinGrid::uniform(0.1, 1.0);
    EXPECT_EQ(g.size(), 10u);
    EXPECT_DOUBLE_EQ(g.upper(), 1.0);
    const auto h = BinGrid::uniform(0.3, 1.0);
    EXPECT_EQ(h.size(), 4u);
    EXPECT_THROW(BinGrid::uniform(0.0, 1.0), ParameterError);
    EXPECT_THROW(BinGrid::from_edges({0.0, 1.0, 1.0}), ParameterError);
    EXPECT_THROW(BinGrid::from_edges({0.5, 1.0}), ParameterError);
}

TEST(BinGrid, AlignedEdgesHitMultiplesExactly) {
    for (double anchor : {1e-3, 0.1, 1.0 / 3.0, 3.0, 7.0}) {
        const auto g = BinGrid::aligned(anchor, 100, 10 * anchor);
        ASSERT_EQ(g.size(), 1000u);
        for (std::size_t m = 0; m <= 10; ++m) EXPECT_EQ(g.edges()[100 * m], anchor * static_cast<double>(m));
        // The anchor itself belongs to the bin starting there.
        EXPECT_EQ(*g.locate(anchor), 100u);
        EXPECT_EQ(*g.locate(std::nextafter(anchor, 0.0)), 99u);
    }
}

TEST(BinGrid, LocateAgreesWithBinarySearch) {
    const auto g = BinGrid::aligned(1.0 / 3.0, 7, 5.0);
    Rng rng(Seed{2});
    for (int i = 0; i < 100000; ++i) {
        const double d = rng.uniform() * g.upper();
        const auto it = std::upper_bound(g.edges().begin(), g.edges().end(), d);
        EXPECT_EQ(*g.locate(d), static_cast<std::size_t>(it - g.edges().begin()) - 1);
    }
    for (std::size_t b = 0; b < g.size(); ++b) EXPECT_EQ(*g.locate(g.lo(b)), b);
    EXPECT_FALSE(g.locate(g.upper()).has_value());
    EXPECT_FALSE(g.locate(-1e-12).has_value());
}

TEST(EstimateRate, Basic) {
    EXPECT_DOUBLE_EQ(estimate_rate(make_stream({0, .2, .4, .6, .8, 1, 1.2, 1.4, 1.6, 1.8}, 2.0)).value(), 5.0);
    EXPECT_THROW(estimate_rate(make_stream({}, 1.0)), DegenerateInputError);
}

TEST(EstimateRate, GappedAndTwoLevel) {
    const auto raw = gen_poisson(Rate(1.0), 1e6, Seed{3});
    EXPECT_NEAR(estimate_rate(gap_remove(raw, GapSpec(1.0))).value(), 0.5, 0.005);
    EXPECT_NEAR(estimate_rate(delay_insert(raw, delay::Exponential{1.0}, Seed{4})).value(), 0.5, 0.005);
}

TEST(CountPairs, MatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = gen_poisson(Rate(1.0), 1e4, Seed{100 + seed});
        for (const auto& bins : {BinGrid::uniform(0.1, 10.0), BinGrid::aligned(1.0 / 3.0, 5, 7.0)}) {
            const auto fast = count_pairs(s.times(), bins, 1);
            EXPECT_EQ(fast, oracle::brute_pairs(s.times(), bins.edges())) << "seed " << seed;
            EXPECT_EQ(count_pairs(s.times(), bins, 4), fast);
        }
    }
}

TEST(CountPairs, ThreadCountInvariant) {
    const auto s = gen_poisson(Rate(1.0), 2e5, Seed{7});
    const auto bins = BinGrid::uniform(0.05, 5.0);
    const auto ref = count_pairs(s.times(), bins, 1);
    for (unsigned t : {2u, 3u, 7u, 16u}) EXPECT_EQ(count_pairs(s.times(), bins, t), ref);
}

TEST(CountPairs, TotalIsNumberOfCloseOrderedPairs) {
    const auto s = gen_poisson(Rate(2.0), 5e3, Seed{8});
    const auto counts = count_pairs(s.times(), BinGrid::uniform(0.25, 3.0), 1);
    const auto total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    std::uint64_t direct = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = i + 1; j < s.size() && s[j] - s[i] < 3.0; ++j) ++direct;
    EXPECT_EQ(total, direct);
}

TEST(ResolveThreads, EnvironmentCap) {
    ::setenv("PPS_THREADS", "2", 1);
    EXPECT_EQ(resolve_threads(8), 2u);
    EXPECT_EQ(resolve_threads(1), 1u);
    EXPECT_LE(resolve_threads(0), 2u);
    ::setenv("PPS_THREADS", "junk", 1);
    EXPECT_EQ(resolve_threads(3), 3u);
    ::unsetenv("PPS_THREADS");
}

TEST(EstimateG2, NormalizationContract) {
    const auto s = make_stream({0.0, 0.5, 1.0, 1.75}, 40.0);
    const auto h = estimate_g2(s, 1.0, 4.0);
    // delays .5, 1, 1.75, .5, 1.25, .75
    const std::vector<std::uint64_t> expect{3, 3, 0, 0};
    EXPECT_EQ(h.pair_counts, expect);
    const double rho = 4.0 / 40.0;
    for (std::size_t b = 0; b < 4; ++b) {
        const double norm = rho * rho * (40.0 - (b + 0.5)) * 1.0;
        EXPECT_DOUBLE_EQ(h.g2[b], expect[b] / norm);
        EXPECT_DOUBLE_EQ(h.std_error[b], std::sqrt(static_cast<double>(expect[b])) / norm);
        EXPECT_DOUBLE_EQ(h.count_scale[b], 1.0 / norm);
    }
    EXPECT_DOUBLE_EQ(h.rate_hat, rho);
    EXPECT_DOUBLE_EQ(h.duration, 40.0);
}

TEST(EstimateG2, Preconditions) {
    const auto s = gen_poisson(Rate(1.0), 100.0, Seed{1});
    EXPECT_THROW(estimate_g2(s, 0.1, 20.0), ParameterError);  // tau_max > T / 10
    EXPECT_THROW(estimate_g2(s, 1.0, 1.0), ParameterError);   // single bin
    EXPECT_THROW(estimate_g2(s, -1.0, 5.0), ParameterError);
    EXPECT_THROW(estimate_g2(make_stream({1.0}, 100.0), 0.1, 5.0), DegenerateInputError);
    EXPECT_THROW(estimate_g2(EventStream({2.0, 1.0}, 100.0), 0.1, 5.0), ParameterError);
}

TEST(EstimateG2, PoissonIsFlat) {
    const auto s = gen_poisson(Rate(1.0), 1e6, Seed{22});
    const auto h = estimate_g2(s, 0.05, 5.0);
    for (std::size_t b = 0; b < h.g2.size(); ++b) {
        EXPECT_TRUE(std::isfinite(h.g2[b]));
        EXPECT_LT(std::abs(h.g2[b] - 1.0), 5.0 * h.std_error[b]) << "bin " << b;
    }
}

TEST(EstimateG2, GappedZeroRegionAndPeak) {
    const double tg = 3.0;
    const auto g = gap_remove(gen_poisson(Rate(1.0), 4e6, Seed{23}), GapSpec(tg));
    const auto h = estimate_g2(g, BinGrid::aligned(tg, 30, 4 * tg));
    for (std::size_t b = 0; b < 30; ++b) EXPECT_EQ(h.pair_counts[b], 0u);
    EXPECT_GT(h.pair_counts[30], 0u);
    EXPECT_LT(std::abs(h.g2[30] - 4.0 * std::exp(-0.05)), 5.0 * h.std_error[30]);
}

TEST(EstimateG2, InvariantUnderRandomLoss) {
    const auto g = gap_remove(gen_poisson(Rate(1.0), 2e6, Seed{24}), GapSpec(1.0));
    const auto lossy = thin(g, 0.8, Seed{25});
    const auto bins = BinGrid::aligned(1.0, 5, 6.0);
    const auto a = estimate_g2(g, bins);
    const auto b = estimate_g2(lossy, bins);
    for (std::size_t k = 0; k < bins.size(); ++k) {
        if (a.pair_counts[k] == 0) {
            EXPECT_EQ(b.pair_counts[k], 0u);
            continue;
        }
        // The thinned pairs are a subset, so errors are bounded by the smaller sample alone.
        EXPECT_LT(std::abs(a.g2[k] - b.g2[k]), 5.0 * b.std_error[k]) << "bin " << k;
    }
}

TEST(MergeBins, SumsCountsAndRenormalizes) {
    const auto s = gen_poisson(Rate(1.0), 1e5, Seed{26});
    const auto fine = estimate_g2(s, BinGrid::uniform(0.1, 5.0));
    const auto coarse = merge_bins(fine, 10, 4);
    ASSERT_EQ(coarse.bins.size(), 10u + 10u);
    for (std::size_t b = 0; b < 10; ++b) EXPECT_EQ(coarse.pair_counts[b], fine.pair_counts[b]);
    for (std::size_t m = 0; m < 10; ++m) {
        std::uint64_t sum = 0;
        for (std::size_t j = 0; j < 4; ++j) sum += fine.pair_counts[10 + 4 * m + j];
        EXPECT_EQ(coarse.pair_counts[10 + m], sum);
        EXPECT_DOUBLE_EQ(coarse.bins.lo(10 + m), fine.bins.lo(10 + 4 * m));
    }
    const auto direct = estimate_g2(s, BinGrid::from_edges(std::vector<double>(coarse.bins.edges().begin(), coarse.bins.edges().end())));
    for (std::size_t b = 0; b < coarse.g2.size(); ++b) EXPECT_NEAR(coarse.g2[b], direct.g2[b], 1e-12);
}

TEST(EstimateWaiting, PoissonOrderOneIsExponential) {
    const auto s = gen_poisson(Rate(2.0), 5e5, Seed{27});
    const auto h = estimate_waiting(s, 1, 0.02, 3.0);
    double mass = 0.0;
    for (std::size_t b = 0; b < h.density.size(); ++b) mass += h.density[b] * h.bins.width(b);
    EXPECT_LE(mass, 1.0 + 1e-12);
    const auto curve = wn_gapped(uniform_grid(3.0, 1e-3), 1, Rate(2.0), GapSpec(0.0));
    const auto rep = compare(h.view(), curve);
    EXPECT_TRUE(rep.pass) << rep.max_abs_z;
}

TEST(EstimateWaiting, GappedOrderTwoMode) {
    const auto g = gap_remove(gen_poisson(Rate(1.0), 2e6, Seed{28}), GapSpec(1.0));
    const auto h = estimate_waiting(g, 2, 0.1, 8.0);
    std::size_t arg = 0;
    for (std::size_t b = 0; b < h.density.size(); ++b)
        if (h.density[b] > h.density[arg]) arg = b;
    EXPECT_NEAR(h.bins.center(arg), 3.0, 0.3);
    for (std::size_t b = 0; b < 20; ++b) EXPECT_EQ(h.counts[b], 0u);
    EXPECT_EQ(h.total, g.size() - 2);
}

TEST(EstimateWaiting, Preconditions) {
    EXPECT_THROW(estimate_waiting(make_stream({0.5, 1.0}, 10.0), 2, 0.1, 1.0), DegenerateInputError);
    EXPECT_THROW(estimate_waiting(make_stream({0.5, 1.0}, 10.0), 0, 0.1, 1.0), ParameterError);
}

TEST(CountCoincidences, Enumeration) {
    const auto s = make_stream({0, 0.1, 0.2}, 1.0);
    EXPECT_EQ(count_coincidences(s, 0.25, 2), 3u);
    EXPECT_EQ(count_coincidences(s, 0.25, 3), 1u);
    EXPECT_EQ(count_coincidences(s, 0.25, 4), 0u);
    EXPECT_EQ(count_coincidences(s, 0.15, 3), 0u);
    EXPECT_THROW(count_coincidences(s, 0.0, 2), ParameterError);
    EXPECT_THROW(count_coincidences(s, 1.0, 1), ParameterError);
}

TEST(CountCoincidences, MatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = gen_poisson(Rate(5.0), 400.0, Seed{200 + seed});
        for (std::size_t k = 2; k <= 4; ++k) {
            EXPECT_EQ(count_coincidences(s, 0.3, k), oracle::brute_coincidences(s.times(), 0.3, k)) << seed << " " << k;
        }
    }
}

TEST(CountCoincidences, GappedStreamHasNone) {
    const auto g = gap_remove(gen_poisson(Rate(1.0), 1e6, Seed{29}), GapSpec(1.0));
    for (std::size_t k = 2; k <= 4; ++k) EXPECT_EQ(count_coincidences(g, 1.0 * (1 - 1e-9), k), 0u);
    EXPECT_GT(count_coincidences(g, 1.5, 2), 0u);
}

TEST(CountCoincidences, PoissonPairDensity) {
    const double T = 1e6, w = 0.1;
    const auto s = gen_poisson(Rate(1.0), T, Seed{30});
    const double expected = T * w;
    // Pair count variance for a Poisson process: E (1 + 2 gamma w).
    const double sigma = std::sqrt(expected * (1 + 2 * w));
    EXPECT_LT(std::abs(static_cast<double>(count_coincidences(s, w, 2)) - expected), 3 * sigma);
    // Prefix agrees with enumeration.
    const auto prefix = make_stream({s.times().begin(), s.times().begin() + 10000}, s[10000]);
    EXPECT_EQ(count_coincidences(prefix, w, 2), oracle::brute_coincidences(prefix.times(), w, 2));
}

TEST(PeakStats, GaussianShape) {
    // Sampled Gaussian of mean 2, sd 0.1 on fine bins.
    std::vector<double> edges, values, errors, scale;
    std::vector<std::uint64_t> counts;
    for (int b = 0; b <= 4000; ++b) edges.push_back(b * 1e-3);
    for (int b = 0; b < 4000; ++b) {
        const double c = (b + 0.5) * 1e-3;
        values.push_back(std::exp(-0.5 * std::pow((c - 2.0) / 0.1, 2)) / (0.1 * std::sqrt(2 * M_PI)));
        counts.push_back(1);
        errors.push_back(0);
        scale.push_back(1);
    }
    const HistogramView v{edges, counts, values, errors, scale};
    const auto st = peak_stats(v, 1.5, 2.5);
    EXPECT_NEAR(st.area, 1.0, 1e-4);
    EXPECT_NEAR(st.mean, 2.0, 1e-9);
    EXPECT_NEAR(st.stddev, 0.1, 1e-4);
    EXPECT_NEAR(st.skewness, 0.0, 1e-6);
    EXPECT_NEAR(st.argmax, 2.0, 1e-3);
}

#include "test_util.hpp"

#include "tickwarp/acf.hpp"
#include "tickwarp/error.hpp"
#include "tickwarp/numeric.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace tickwarp;

namespace {

// Direct O(N^2) evaluation of the slotting definition.
struct Brute {
    std::vector<double> values;
    std::vector<std::uint64_t> counts;
};

Brute brute_force(const MarkSeries& s, double h, double max_lag, bool per_day_mean = false) {
    const std::size_t n_slots = static_cast<std::size_t>(std::floor(max_lag / h + 1e-12)) + 1;
    double mean = 0.0;
    for (double x : s.x) mean += x;
    mean /= static_cast<double>(s.size());
    std::vector<double> sum(n_slots, 0.0);
    std::vector<std::uint64_t> cnt(n_slots, 0);
    for (std::size_t d = 0; d < s.n_days(); ++d) {
        const std::size_t lo = s.offsets[d];
        const std::size_t hi = s.offsets[d + 1];
        double m = mean;
        if (per_day_mean) {
            m = 0.0;
            for (std::size_t i = lo; i < hi; ++i) m += s.x[i];
            m /= static_cast<double>(hi - lo);
        }
        for (std::size_t i = lo; i < hi; ++i) {
            sum[0] += (s.x[i] - m) * (s.x[i] - m);
            ++cnt[0];
            for (std::size_t j = lo; j < hi; ++j) {
                if (j <= i) continue;
                const double lag = std::abs(s.t[j] - s.t[i]);
                for (std::size_t k = 1; k < n_slots; ++k) {
                    if (lag > (k - 0.5) * h && lag <= (k + 0.5) * h) {
                        sum[k] += (s.x[i] - m) * (s.x[j] - m);
                        ++cnt[k];
                    }
                }
            }
        }
    }
    Brute b;
    const double var = sum[0] / static_cast<double>(cnt[0]);
    for (std::size_t k = 0; k < n_slots; ++k) {
        b.values.push_back(cnt[k] ? sum[k] / static_cast<double>(cnt[k]) / var : std::nan(""));
        b.counts.push_back(cnt[k]);
    }
    return b;
}

MarkSeries random_series(std::size_t days, double rate, double length, std::uint64_t seed, bool integer_times) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(rate);
    std::normal_distribution<double> z;
    MarkSeries s;
    for (std::size_t d = 0; d < days; ++d) {
        std::vector<double> t, x;
        for (double u = gap(rng); u <= length; u += gap(rng)) {
            t.push_back(integer_times ? std::floor(u) : u);
            x.push_back(z(rng) + 0.3);
        }
        s.add_day(static_cast<std::int32_t>(d + 1), t, x);
    }
    return s;
}

SlotOptions options(double h, double max_lag, double length = 25200.0) {
    SlotOptions o;
    o.slot_width = h;
    o.max_lag = max_lag;
    o.session_length = length;
    return o;
}

}  // namespace

TEST(Acf, MatchesBruteForceOnFixtures) {
    // Integer times put many lags exactly on slot edges.
    for (bool integer_times : {false, true}) {
        const auto s = random_series(4, 0.1, 2000.0, integer_times ? 2 : 1, integer_times);
        ASSERT_LE(s.size(), 1000u);
        for (double h : {10.0, 7.5}) {
            const auto est = acf_slotted(s, options(h, 150.0));
            const auto ref = brute_force(s, h, 150.0);
            ASSERT_EQ(est.values.size(), ref.values.size());
            for (std::size_t k = 0; k < ref.values.size(); ++k) {
                EXPECT_EQ(est.pair_counts[k], ref.counts[k]) << "slot " << k;
                ASSERT_TRUE(est.values[k]);
                EXPECT_NEAR(*est.values[k], ref.values[k], 1e-12) << "slot " << k;
                EXPECT_EQ(est.lags[k], k * h);
            }
        }
    }
}

TEST(Acf, PerDayMeanMatchesBruteForce) {
    const auto s = random_series(5, 0.2, 1000.0, 8, false);
    auto o = options(5.0, 60.0);
    o.mean = MeanRemoval::PerDay;
    const auto est = acf_slotted(s, o);
    const auto ref = brute_force(s, 5.0, 60.0, true);
    for (std::size_t k = 0; k < ref.values.size(); ++k) {
        EXPECT_EQ(est.pair_counts[k], ref.counts[k]);
        EXPECT_NEAR(*est.values[k], ref.values[k], 1e-12);
    }
}

TEST(Acf, LagZeroIsOneAndPairsNeverCrossDays) {
    MarkSeries s;
    const std::vector<double> t{0.0, 10.0}, x1{1.0, -1.0}, x2{2.0, 0.5};
    s.add_day(1, t, x1);
    s.add_day(2, t, x2);
    const auto est = acf_slotted(s, options(10.0, 20.0));
    EXPECT_EQ(*est.values[0], 1.0);
    EXPECT_EQ(est.pair_counts[0], 4u);
    EXPECT_EQ(est.pair_counts[1], 2u);
    EXPECT_EQ(est.pair_counts[2], 0u);
    EXPECT_FALSE(est.values[2]);
}

TEST(Acf, ScaleInvariance) {
    auto s = random_series(3, 0.1, 3000.0, 4, false);
    const auto a = acf_slotted(s, options(10.0, 200.0));
    for (double& x : s.x) x *= 37.5;
    const auto b = acf_slotted(s, options(10.0, 200.0));
    for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_NEAR(*a.values[k], *b.values[k], 1e-12);
}

TEST(Acf, ConstantSeriesHasZeroVariance) {
    MarkSeries s;
    const std::vector<double> t{0.0, 1.0, 2.0}, x{3.0, 3.0, 3.0};
    s.add_day(1, t, x);
    EXPECT_THROW(acf_slotted(s, options(1.0, 2.0)), DataError);
}

TEST(Acf, OptionValidation) {
    const auto s = random_series(1, 0.1, 100.0, 1, false);
    EXPECT_THROW(acf_slotted(s, options(1.0, 25200.0)), DomainError);
    EXPECT_THROW(acf_slotted(s, options(0.0, 10.0)), DomainError);
    EXPECT_THROW(acf_slotted(MarkSeries{}, options(1.0, 10.0)), DataError);
}

TEST(Acf, WhiteNoiseIsNearZero) {
    const auto s = random_series(200, 1.0 / 25.0, 25200.0, 12, false);
    const auto est = acf_slotted(s, options(25.0, 600.0));
    for (std::size_t k = 1; k < est.values.size(); ++k) {
        EXPECT_LT(std::abs(*est.values[k]), 4.0 / std::sqrt(static_cast<double>(est.pair_counts[k])));
    }
}

// Gaussian marks with exp(-lag/300) correlation on Poisson times, generated by
// the exact AR(1) recursion for an Ornstein-Uhlenbeck process.
TEST(Acf, RecoversExponentialAcf) {
    std::mt19937_64 rng(21);
    std::exponential_distribution<double> gap(1.0 / 25.0);
    std::normal_distribution<double> z;
    MarkSeries s;
    for (int d = 0; d < 200; ++d) {
        std::vector<double> t, x;
        double prev_t = 0.0, v = z(rng);
        for (double u = gap(rng); u <= 25200.0; u += gap(rng)) {
            const double r = std::exp(-(u - prev_t) / 300.0);
            v = r * v + std::sqrt(1.0 - r * r) * z(rng);
            t.push_back(u);
            x.push_back(v);
            prev_t = u;
        }
        s.add_day(d + 1, t, x);
    }
    const SlottedAcf acc(s, options(25.0, 600.0), true);
    const auto est = acc.estimate();
    const auto se = bootstrap_se(acc, 200, 3);
    for (std::size_t k = 1; k < est.values.size(); ++k) {
        // Slot averages of exp(-lag/300) over the uniform lag spread in a slot.
        const double lag = est.lags[k];
        const double expected = 300.0 / 25.0 * (std::exp(-(lag - 12.5) / 300.0) - std::exp(-(lag + 12.5) / 300.0));
        EXPECT_NEAR(*est.values[k], expected, 3.0 * se[k]) << "lag " << lag;
    }
}

TEST(Acf, SingleThreadAndManyThreadsAgreeBitwise) {
    const auto s = random_series(100, 0.05, 25200.0, 6, false);
    numeric::set_thread_count(1);
    const auto a = acf_slotted(s, options(20.0, 600.0));
    numeric::set_thread_count(7);
    const auto b = acf_slotted(s, options(20.0, 600.0));
    numeric::set_thread_count(0);
    for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_EQ(*a.values[k], *b.values[k]);
}

TEST(Acf, UnitWeightsReproduceEstimate) {
    const auto s = random_series(10, 0.05, 25200.0, 9, false);
    const SlottedAcf acc(s, options(20.0, 300.0), true);
    const auto a = acc.estimate();
    const std::vector<double> ones(acc.n_days(), 1.0);
    const auto b = acc.estimate(ones);
    for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_NEAR(*a.values[k], *b.values[k], 1e-12);
    EXPECT_NEAR(a.mean, b.mean, 1e-15);
}

TEST(Acf, DoubledWeightsEqualDuplicatedDays) {
    const auto s = random_series(4, 0.05, 5000.0, 10, false);
    MarkSeries dup = s;
    dup.add_day(99, std::span(s.t).subspan(s.offsets[1], s.offsets[2] - s.offsets[1]),
                std::span(s.x).subspan(s.offsets[1], s.offsets[2] - s.offsets[1]));
    const SlottedAcf acc(s, options(20.0, 300.0), true);
    const auto weighted = acc.estimate(std::vector<double>{1.0, 2.0, 1.0, 1.0});
    const auto direct = acf_slotted(dup, options(20.0, 300.0));
    for (std::size_t k = 0; k < weighted.values.size(); ++k) {
        EXPECT_EQ(weighted.pair_counts[k], direct.pair_counts[k]);
        EXPECT_NEAR(*weighted.values[k], *direct.values[k], 1e-12);
    }
}

TEST(Acf, TimeUniformEqualsPairWeightingForSingleCell) {
    const auto s = random_series(5, 0.05, 5000.0, 13, false);
    auto o = options(20.0, 300.0, 5000.0);
    const auto pair = acf_slotted(s, o);
    o.weighting = PairWeighting::TimeUniform;
    o.time_cell = 5000.0;
    const auto uniform = acf_slotted(s, o);
    for (std::size_t k = 0; k < pair.values.size(); ++k) EXPECT_NEAR(*pair.values[k], *uniform.values[k], 1e-12);
}

TEST(Acf, MakeMarksTransforms) {
    const std::vector<ReturnPoint> r{{1, 1.0, -0.5, 1.0}, {1, 3.0, 0.2, 2.0}, {2, 1.0, 0.1, 0.0}, {2, 2.0, -0.4, 1.0}};
    const auto plain = make_marks(r);
    EXPECT_EQ(plain.n_days(), 2u);
    EXPECT_EQ(plain.x, (std::vector<double>{-0.5, 0.2, 0.1, -0.4}));
    const auto abs = make_marks(r, MarkTransform::Absolute);
    EXPECT_EQ(abs.x, (std::vector<double>{0.5, 0.2, 0.1, 0.4}));
    const auto vel = make_marks(r, MarkTransform::Identity, MarkKind::Velocity);
    EXPECT_EQ(vel.x, (std::vector<double>{-0.5, 0.1, -0.4}));  // zero interval skipped
}

TEST(Acf, BootstrapWeightsResampleDays) {
    const auto w = bootstrap_day_weights(7, 50, 1);
    ASSERT_EQ(w.size(), 50u);
    for (const auto& rep : w) {
        double total = 0.0;
        for (double x : rep) total += x;
        EXPECT_EQ(total, 7.0);
    }
    EXPECT_EQ(bootstrap_day_weights(7, 50, 1), w);
}

TEST(Acf, CompareCountsDirections) {
    AcfEstimate raw, warped;
    raw.slot_width = warped.slot_width = 1.0;
    raw.lags = warped.lags = {0.0, 1.0, 2.0, 3.0};
    raw.values = {1.0, 0.5, 0.2, std::nullopt};
    warped.values = {1.0, 0.6, 0.1, 0.0};
    const auto c = acf_compare(raw, warped);
    EXPECT_EQ(c.warped_above, 1u);
    EXPECT_EQ(c.warped_below, 1u);
    EXPECT_NEAR(*c.difference[1], 0.1, 1e-15);
    EXPECT_FALSE(c.difference[3]);
    const auto same = acf_compare(raw, raw);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(*same.difference[k], 0.0);
    warped.slot_width = 2.0;
    EXPECT_THROW(acf_compare(raw, warped), DataError);
}

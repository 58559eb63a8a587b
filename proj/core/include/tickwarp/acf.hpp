#pragma once

#include "tickwarp/table.hpp"
#include "tickwarp/ticks.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace tickwarp {

enum class MarkTransform { Identity, Absolute };
/// Return: plain log returns. Velocity: return divided by the preceding
/// inter-trade interval (zero intervals are skipped).
enum class MarkKind { Return, Velocity };
enum class MeanRemoval { Global, PerDay };
/// Pair: every pair in a slot counts once (the classic slotting average).
/// TimeUniform: pair products are averaged within time-of-day cells of the
/// earlier time, then the cells are averaged uniformly over [0, T - lag];
/// this estimates the uniform-in-t covariance integral even when the event
/// rate varies through the day.
enum class PairWeighting { Pair, TimeUniform };

std::string_view to_string(MarkTransform v);
std::string_view to_string(MarkKind v);
std::string_view to_string(MeanRemoval v);
std::string_view to_string(PairWeighting v);

/// Marks grouped by day; within a day, times are non-decreasing.
struct MarkSeries {
    std::vector<std::int32_t> days;
    std::vector<std::size_t> offsets{0};  ///< day d spans [offsets[d], offsets[d+1])
    std::vector<double> t;
    std::vector<double> x;

    std::size_t n_days() const noexcept { return days.size(); }
    std::size_t size() const noexcept { return t.size(); }
    void add_day(std::int32_t day, std::span<const double> times, std::span<const double> values);
};

/// Builds marks from returns (grouped by consecutive day id).
MarkSeries make_marks(std::span<const ReturnPoint> returns, MarkTransform transform = MarkTransform::Identity,
                      MarkKind kind = MarkKind::Return);

struct SlotOptions {
    double slot_width = 0.0;
    double max_lag = 600.0;
    double session_length = 25200.0;
    MeanRemoval mean = MeanRemoval::Global;
    PairWeighting weighting = PairWeighting::Pair;
    double time_cell = 300.0;  ///< cell width for TimeUniform

    void validate() const;
    /// Highest slot index: floor(max_lag / slot_width).
    std::size_t max_slot() const;
};

/// Slot k >= 1 collects same-day pairs i < j with lag in
/// ((k - 1/2) h, (k + 1/2) h]. Slot 0 holds the lag-0 self products, so the
/// normalized value there is 1. Distinct pairs closer than h/2 are not used.
struct AcfEstimate {
    double slot_width = 0.0;
    std::vector<double> lags;
    std::vector<std::optional<double>> values;
    std::vector<std::uint64_t> pair_counts;
    bool normalized = true;
    double mean = 0.0;
    double variance = 0.0;
};

/// Pair sums of one day (or one group of days), centred at the series mean.
/// For a shift d of the mean, sum (x_i - m - d)(x_j - m - d) over a slot
/// equals cross - d * linear + d^2 * count.
struct SlotSums {
    std::vector<double> cross;
    std::vector<double> linear;
    std::vector<double> count;
    double mark_sum = 0.0;  ///< sum of centred marks
    double mark_count = 0.0;

    void resize(std::size_t n);
    void merge(const SlotSums& other);
};

/// Pair accumulation over a MarkSeries. Keeps per-day sums when asked so
/// day-resampling bootstrap replicates can be evaluated without touching the
/// pairs again.
class SlottedAcf {
public:
    SlottedAcf(const MarkSeries& series, const SlotOptions& options, bool keep_days = false);

    const SlotOptions& options() const noexcept { return options_; }
    std::size_t n_days() const noexcept { return n_days_; }
    std::size_t n_cells() const noexcept { return n_cells_; }

    /// Estimate with every day weighted once.
    AcfEstimate estimate() const;
    /// Estimate with day d weighted by weights[d] (bootstrap multiplicities).
    /// Requires keep_days.
    AcfEstimate estimate(std::span<const double> weights) const;

private:
    AcfEstimate finish(const SlotSums& total, double shift) const;

    SlotOptions options_;
    std::size_t n_slots_ = 0;
    std::size_t n_cells_ = 1;
    std::size_t n_days_ = 0;
    double center_ = 0.0;
    SlotSums total_;
    std::vector<SlotSums> per_day_;
};

/// One-shot slotted ACF. Throws DataError("zero variance") for a constant
/// series and DomainError for max_lag >= T.
AcfEstimate acf_slotted(const MarkSeries& series, const SlotOptions& options);

/// Day-resampling multiplicities: reps vectors of length n_days.
std::vector<std::vector<double>> bootstrap_day_weights(std::size_t n_days, std::size_t reps,
                                                       std::uint64_t seed);

/// Standard deviation over replicates of each slot value (nan where a slot
/// was missing in any replicate).
std::vector<double> bootstrap_se(const SlottedAcf& acf, std::size_t reps, std::uint64_t seed);

struct AcfComparison {
    std::vector<double> lags;
    std::vector<std::optional<double>> raw;
    std::vector<std::optional<double>> warped;
    std::vector<std::optional<double>> difference;  ///< warped - raw
    std::size_t warped_above = 0;  ///< slots with warped > raw
    std::size_t warped_below = 0;  ///< slots with warped < raw
    std::size_t equal = 0;
};

/// Slot-by-slot comparison of clock-time and warped-time estimates on the
/// same grid. Throws DataError for mismatched grids.
AcfComparison acf_compare(const AcfEstimate& raw, const AcfEstimate& warped);

/// Columns lag,value,pair_count; metadata (slot_width, mean, variance)
/// travels as table parameters.
Table acf_to_table(const AcfEstimate& acf);

}  // namespace tickwarp

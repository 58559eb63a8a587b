#pragma once

#include "tickwarp/table.hpp"
#include "tickwarp/ticks.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace tickwarp {

struct PatternBin {
    double t_mid = 0.0;
    std::optional<double> mean_dt;     ///< missing when count == 0
    std::optional<double> std_return;  ///< missing with fewer than 2 returns
    std::size_t count = 0;             ///< inter-trade intervals in the bin
    std::size_t return_count = 0;      ///< returns whose time falls in the bin
};

/// Binned intra-day activity: average inter-trade interval and standard
/// deviation of returns per time-of-day bin.
struct IntradayPattern {
    double bin_width = 1200.0;
    double length = 25200.0;  ///< session length T
    bool normalized = false;
    std::vector<PatternBin> bins;

    std::size_t total_count() const;
    std::size_t nonempty_bins() const;
};

/// Pooled: every interval weighs the same. PerDay: per-day bin means,
/// then an equal-weight average over the days that populate the bin.
enum class DayAveraging { Pooled, PerDay };

/// Interval (t_k, t_{k+1}] goes to the bin containing its midpoint; a return
/// goes to the bin containing its time. bin_width must divide T.
IntradayPattern build_pattern(const std::vector<Day>& days, const std::vector<ReturnPoint>& returns,
                              double bin_width, const SessionSpec& spec,
                              DayAveraging averaging = DayAveraging::Pooled);

/// Divides mean_dt and std_return by their count-weighted means over bins.
/// Idempotent. Throws DataError for an all-empty pattern.
IntradayPattern normalize_pattern(const IntradayPattern& p);

/// Columns t_mid,mean_dt,std_return,count,return_count (missing = nan);
/// bin_width, T and normalized travel as table parameters.
Table pattern_to_table(const IntradayPattern& p);
IntradayPattern pattern_from_table(const Table& table);

}  // namespace tickwarp

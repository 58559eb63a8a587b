#include "tickwarp/pattern.hpp"

#include "tickwarp/error.hpp"
#include "tickwarp/numeric.hpp"
#include "tickwarp/table.hpp"

#include <algorithm>
#include <cmath>

namespace tickwarp {

namespace {

struct Moments {
    double n = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double x) {
        n += 1.0;
        sum += x;
        sum_sq += x * x;
    }
};

std::size_t bin_of(double t, double width, std::size_t n_bins) {
    const auto i = static_cast<std::size_t>(std::max(0.0, std::floor(t / width)));
    return std::min(i, n_bins - 1);
}

// Two-pass variance over values already grouped per bin keeps the result
// stable for tiny returns, where sum_sq - n*mean^2 cancels.
std::optional<double> sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return std::nullopt;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

std::size_t IntradayPattern::total_count() const {
    std::size_t n = 0;
    for (const auto& b : bins) n += b.count;
    return n;
}

std::size_t IntradayPattern::nonempty_bins() const {
    return static_cast<std::size_t>(
        std::count_if(bins.begin(), bins.end(), [](const PatternBin& b) { return b.count > 0; }));
}

IntradayPattern build_pattern(const std::vector<Day>& days, const std::vector<ReturnPoint>& returns,
                              double bin_width, const SessionSpec& spec, DayAveraging averaging) {
    spec.validate();
    if (!(bin_width > 0.0)) throw DomainError("bin width must be positive");
    const double ratio = spec.length / bin_width;
    const double n_bins_real = std::round(ratio);
    if (n_bins_real < 1.0 || std::abs(ratio - n_bins_real) > 1e-9 * ratio) {
        throw DomainError("bin width must divide the session length");
    }
    if (days.empty()) throw DataError("no ticks");
    const auto n_bins = static_cast<std::size_t>(n_bins_real);

    IntradayPattern p;
    p.bin_width = bin_width;
    p.length = spec.length;
    p.bins.resize(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        p.bins[i].t_mid = (static_cast<double>(i) + 0.5) * bin_width;
    }

    // Per-bin interval sums; per-day partial sums for the PerDay variant.
    std::vector<Moments> pooled(n_bins);
    std::vector<double> day_mean_sum(n_bins, 0.0);
    std::vector<double> day_mean_n(n_bins, 0.0);
    std::vector<Moments> day_bins(n_bins);
    for (const Day& day : days) {
        std::fill(day_bins.begin(), day_bins.end(), Moments{});
        for (std::size_t k = 1; k < day.ticks.size(); ++k) {
            const double a = day.ticks[k - 1].t;
            const double b = day.ticks[k].t;
            const std::size_t i = bin_of(0.5 * (a + b), bin_width, n_bins);
            pooled[i].add(b - a);
            day_bins[i].add(b - a);
        }
        for (std::size_t i = 0; i < n_bins; ++i) {
            if (day_bins[i].n > 0.0) {
                day_mean_sum[i] += day_bins[i].sum / day_bins[i].n;
                day_mean_n[i] += 1.0;
            }
        }
    }

    std::vector<std::vector<double>> bin_returns(n_bins);
    for (const ReturnPoint& r : returns) {
        bin_returns[bin_of(r.t, bin_width, n_bins)].push_back(r.value);
    }
    std::vector<double> day_std_sum(n_bins, 0.0);
    std::vector<double> day_std_n(n_bins, 0.0);
    if (averaging == DayAveraging::PerDay) {
        std::vector<std::vector<double>> per_day(n_bins);
        auto flush = [&] {
            for (std::size_t i = 0; i < n_bins; ++i) {
                if (auto s = sample_std(per_day[i])) {
                    day_std_sum[i] += *s;
                    day_std_n[i] += 1.0;
                }
                per_day[i].clear();
            }
        };
        for (std::size_t k = 0; k < returns.size(); ++k) {
            if (k > 0 && returns[k].day != returns[k - 1].day) flush();
            per_day[bin_of(returns[k].t, bin_width, n_bins)].push_back(returns[k].value);
        }
        flush();
    }

    for (std::size_t i = 0; i < n_bins; ++i) {
        PatternBin& bin = p.bins[i];
        bin.count = static_cast<std::size_t>(pooled[i].n);
        bin.return_count = bin_returns[i].size();
        if (averaging == DayAveraging::Pooled) {
            if (bin.count > 0) bin.mean_dt = pooled[i].sum / pooled[i].n;
            bin.std_return = sample_std(bin_returns[i]);
        } else {
            if (day_mean_n[i] > 0.0) bin.mean_dt = day_mean_sum[i] / day_mean_n[i];
            if (day_std_n[i] > 0.0) bin.std_return = day_std_sum[i] / day_std_n[i];
        }
    }
    return p;
}

IntradayPattern normalize_pattern(const IntradayPattern& p) {
    double dt_w = 0.0;
    double dt_sum = 0.0;
    double sd_w = 0.0;
    double sd_sum = 0.0;
    for (const auto& b : p.bins) {
        if (b.mean_dt) {
            dt_w += static_cast<double>(b.count);
            dt_sum += static_cast<double>(b.count) * *b.mean_dt;
        }
        if (b.std_return) {
            sd_w += static_cast<double>(b.return_count);
            sd_sum += static_cast<double>(b.return_count) * *b.std_return;
        }
    }
    if (dt_w == 0.0) throw DataError("cannot normalize an empty pattern");
    IntradayPattern out = p;
    out.normalized = true;
    const double dt_mean = dt_sum / dt_w;
    const double sd_mean = sd_w > 0.0 ? sd_sum / sd_w : 0.0;
    for (auto& b : out.bins) {
        if (b.mean_dt) b.mean_dt = *b.mean_dt / dt_mean;
        if (b.std_return) {
            if (sd_mean > 0.0) {
                b.std_return = *b.std_return / sd_mean;
            } else {
                b.std_return.reset();
            }
        }
    }
    return out;
}

Table pattern_to_table(const IntradayPattern& p) {
    Table table;
    table.command = "pattern";
    table.set_param("bin_width", numeric::exact_decimal(p.bin_width));
    table.set_param("T", numeric::exact_decimal(p.length));
    table.set_param("normalized", p.normalized ? "1" : "0");
    table.columns = {"t_mid", "mean_dt", "std_return", "count", "return_count"};
    const double nan = std::nan("");
    for (const auto& b : p.bins) {
        table.add_row({b.t_mid, b.mean_dt.value_or(nan), b.std_return.value_or(nan),
                       static_cast<double>(b.count), static_cast<double>(b.return_count)});
    }
    return table;
}

IntradayPattern pattern_from_table(const Table& table) {
    const auto t_mid = table.column("t_mid");
    const auto mean_dt = table.column("mean_dt");
    const auto std_return = table.column("std_return");
    const auto count = table.column("count");
    const auto return_count = table.column("return_count");
    if (t_mid.empty()) throw DataError("pattern table has no rows");

    IntradayPattern p;
    p.bin_width = table.param_double("bin_width", 2.0 * t_mid[0]);
    p.length = table.param_double("T", p.bin_width * static_cast<double>(t_mid.size()));
    p.normalized = table.param("normalized").value_or("0") == "1";
    for (std::size_t i = 0; i < t_mid.size(); ++i) {
        PatternBin b;
        b.t_mid = t_mid[i];
        if (!std::isnan(mean_dt[i])) b.mean_dt = mean_dt[i];
        if (!std::isnan(std_return[i])) b.std_return = std_return[i];
        if (!(count[i] >= 0.0) || !(return_count[i] >= 0.0)) {
            throw ParseError("negative count in pattern table", i + 1);
        }
        b.count = static_cast<std::size_t>(count[i]);
        b.return_count = static_cast<std::size_t>(return_count[i]);
        p.bins.push_back(b);
    }
    return p;
}

}  // namespace tickwarp

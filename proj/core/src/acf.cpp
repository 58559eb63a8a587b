#include "tickwarp/acf.hpp"

#include "tickwarp/error.hpp"
#include "tickwarp/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tickwarp {

std::string_view to_string(MarkTransform v) {
    return v == MarkTransform::Identity ? "identity" : "absolute";
}
std::string_view to_string(MarkKind v) { return v == MarkKind::Return ? "return" : "velocity"; }
std::string_view to_string(MeanRemoval v) { return v == MeanRemoval::Global ? "global" : "per_day"; }
std::string_view to_string(PairWeighting v) {
    return v == PairWeighting::Pair ? "pair" : "time_uniform";
}

void MarkSeries::add_day(std::int32_t day, std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) throw DataError("times and values differ in length");
    days.push_back(day);
    t.insert(t.end(), times.begin(), times.end());
    x.insert(x.end(), values.begin(), values.end());
    offsets.push_back(t.size());
}

MarkSeries make_marks(std::span<const ReturnPoint> returns, MarkTransform transform, MarkKind kind) {
    MarkSeries s;
    std::vector<double> times;
    std::vector<double> values;
    auto flush = [&](std::int32_t day) {
        if (!times.empty()) s.add_day(day, times, values);
        times.clear();
        values.clear();
    };
    for (std::size_t k = 0; k < returns.size(); ++k) {
        const ReturnPoint& r = returns[k];
        if (k > 0 && r.day != returns[k - 1].day) flush(returns[k - 1].day);
        double v = r.value;
        if (kind == MarkKind::Velocity) {
            if (!(r.dt > 0.0)) continue;
            v /= r.dt;
        }
        if (transform == MarkTransform::Absolute) v = std::abs(v);
        times.push_back(r.t);
        values.push_back(v);
    }
    if (!returns.empty()) flush(returns.back().day);
    return s;
}

void SlotOptions::validate() const {
    if (!(session_length > 0.0)) throw DomainError("session length must be positive");
    if (!(slot_width > 0.0) || !std::isfinite(slot_width)) throw DomainError("slot width must be positive");
    if (!(max_lag >= 0.0)) throw DomainError("max lag must be non-negative");
    if (!(max_lag < session_length)) throw DomainError("max lag must be shorter than the session");
    if (weighting == PairWeighting::TimeUniform && !(time_cell > 0.0)) {
        throw DomainError("time cell width must be positive");
    }
}

std::size_t SlotOptions::max_slot() const {
    return static_cast<std::size_t>(std::floor(max_lag / slot_width + 1e-12));
}

void SlotSums::resize(std::size_t n) {
    cross.assign(n, 0.0);
    linear.assign(n, 0.0);
    count.assign(n, 0.0);
    mark_sum = 0.0;
    mark_count = 0.0;
}

void SlotSums::merge(const SlotSums& other) {
    for (std::size_t i = 0; i < cross.size(); ++i) {
        cross[i] += other.cross[i];
        linear[i] += other.linear[i];
        count[i] += other.count[i];
    }
    mark_sum += other.mark_sum;
    mark_count += other.mark_count;
}

namespace {

void scaled_merge(SlotSums& into, const SlotSums& from, double w) {
    for (std::size_t i = 0; i < into.cross.size(); ++i) {
        into.cross[i] += w * from.cross[i];
        into.linear[i] += w * from.linear[i];
        into.count[i] += w * from.count[i];
    }
    into.mark_sum += w * from.mark_sum;
    into.mark_count += w * from.mark_count;
}

// Accumulates one day's pairs into `sums`. Marks are centred at `center`.
void accumulate_day(const MarkSeries& s, std::size_t d, double center, const SlotOptions& opt,
                    std::size_t n_slots, std::size_t n_cells, const std::vector<double>& upper,
                    SlotSums& sums) {
    const std::size_t lo = s.offsets[d];
    const std::size_t hi = s.offsets[d + 1];
    const double h = opt.slot_width;
    const double reach = upper.back();
    const bool by_cell = opt.weighting == PairWeighting::TimeUniform;
    auto cell_of = [&](double t) -> std::size_t {
        if (!by_cell) return 0;
        const auto c = static_cast<std::size_t>(std::max(0.0, std::floor(t / opt.time_cell)));
        return std::min(c, n_cells - 1);
    };

    for (std::size_t i = lo; i < hi; ++i) {
        const double ci = s.x[i] - center;
        const double ti = s.t[i];
        const std::size_t base = cell_of(ti) * n_slots;
        sums.mark_sum += ci;
        sums.mark_count += 1.0;
        sums.cross[base] += ci * ci;
        sums.linear[base] += 2.0 * ci;
        sums.count[base] += 1.0;
        for (std::size_t j = i + 1; j < hi; ++j) {
            const double lag = s.t[j] - ti;
            if (lag > reach) break;
            if (lag <= 0.5 * h) continue;
            auto k = static_cast<std::size_t>(std::ceil(lag / h - 0.5));
            k = std::clamp<std::size_t>(k, 1, n_slots - 1);
            while (k > 1 && lag <= upper[k - 1]) --k;
            while (k < n_slots - 1 && lag > upper[k]) ++k;
            const double cj = s.x[j] - center;
            sums.cross[base + k] += ci * cj;
            sums.linear[base + k] += ci + cj;
            sums.count[base + k] += 1.0;
        }
    }
}

}  // namespace

SlottedAcf::SlottedAcf(const MarkSeries& series, const SlotOptions& options, bool keep_days)
    : options_(options) {
    options_.validate();
    if (series.size() == 0) throw DataError("no marks");
    n_slots_ = options_.max_slot() + 1;
    n_days_ = series.n_days();
    if (options_.weighting == PairWeighting::TimeUniform) {
        n_cells_ = static_cast<std::size_t>(std::ceil(options_.session_length / options_.time_cell - 1e-12));
        n_cells_ = std::max<std::size_t>(n_cells_, 1);
    }
    // upper[k] = (k + 1/2) h, the inclusive upper edge of slot k.
    std::vector<double> upper(n_slots_);
    for (std::size_t k = 0; k < n_slots_; ++k) upper[k] = (static_cast<double>(k) + 0.5) * options_.slot_width;

    if (options_.mean == MeanRemoval::Global) {
        double sum = 0.0;
        for (double v : series.x) sum += v;
        center_ = sum / static_cast<double>(series.size());
    }

    const std::size_t width = n_slots_ * n_cells_;
    // Fixed grouping of days, so the floating-point merge order does not
    // depend on the number of threads.
    const std::size_t group = keep_days ? 1 : 32;
    const std::size_t n_groups = (n_days_ + group - 1) / group;
    std::vector<SlotSums> parts(n_groups);
    numeric::parallel_for(n_groups, [&](std::size_t g) {
        SlotSums& part = parts[g];
        part.resize(width);
        const std::size_t end = std::min(n_days_, (g + 1) * group);
        for (std::size_t d = g * group; d < end; ++d) {
            double center = center_;
            if (options_.mean == MeanRemoval::PerDay) {
                const std::size_t lo = series.offsets[d];
                const std::size_t hi = series.offsets[d + 1];
                double sum = 0.0;
                for (std::size_t i = lo; i < hi; ++i) sum += series.x[i];
                center = hi > lo ? sum / static_cast<double>(hi - lo) : 0.0;
            }
            accumulate_day(series, d, center, options_, n_slots_, n_cells_, upper, part);
        }
    });

    total_.resize(width);
    for (const auto& part : parts) total_.merge(part);
    if (keep_days) per_day_ = std::move(parts);
}

AcfEstimate SlottedAcf::estimate() const { return finish(total_, 0.0); }

AcfEstimate SlottedAcf::estimate(std::span<const double> weights) const {
    if (per_day_.empty()) throw Error("per-day sums were not kept");
    if (weights.size() != n_days_) throw Error("one weight per day required");
    SlotSums total;
    total.resize(total_.cross.size());
    for (std::size_t d = 0; d < n_days_; ++d) {
        if (weights[d] != 0.0) scaled_merge(total, per_day_[d], weights[d]);
    }
    if (total.mark_count == 0.0) throw DataError("bootstrap replicate has no marks");
    const double shift = options_.mean == MeanRemoval::Global ? total.mark_sum / total.mark_count : 0.0;
    return finish(total, shift);
}

AcfEstimate SlottedAcf::finish(const SlotSums& sums, double shift) const {
    const double h = options_.slot_width;
    AcfEstimate out;
    out.slot_width = h;
    out.mean = center_ + shift;
    out.lags.resize(n_slots_);
    out.values.resize(n_slots_);
    out.pair_counts.assign(n_slots_, 0);

    std::vector<double> cov(n_slots_, std::nan(""));
    for (std::size_t k = 0; k < n_slots_; ++k) {
        out.lags[k] = static_cast<double>(k) * h;
        double pairs = 0.0;
        for (std::size_t c = 0; c < n_cells_; ++c) pairs += sums.count[c * n_slots_ + k];
        out.pair_counts[k] = static_cast<std::uint64_t>(std::llround(pairs));

        auto cell_cov = [&](std::size_t idx) {
            return (sums.cross[idx] - shift * sums.linear[idx] + shift * shift * sums.count[idx]) /
                   sums.count[idx];
        };
        if (options_.weighting == PairWeighting::Pair) {
            if (pairs > 0.0) cov[k] = cell_cov(k);
            continue;
        }
        // Uniform average over pair start times in [0, T - lag].
        const double horizon = options_.session_length - out.lags[k];
        double num = 0.0;
        double den = 0.0;
        for (std::size_t c = 0; c < n_cells_; ++c) {
            const std::size_t idx = c * n_slots_ + k;
            if (sums.count[idx] == 0.0) continue;
            const double lo = static_cast<double>(c) * options_.time_cell;
            const double hi = std::min(lo + options_.time_cell, options_.session_length);
            const double w = std::max(0.0, std::min(hi, horizon) - lo);
            if (w == 0.0) continue;
            num += w * cell_cov(idx);
            den += w;
        }
        if (den > 0.0) cov[k] = num / den;
    }

    out.variance = cov[0];
    if (!(out.variance > 0.0)) throw DataError("zero variance");
    for (std::size_t k = 0; k < n_slots_; ++k) {
        if (!std::isnan(cov[k])) out.values[k] = cov[k] / out.variance;
    }
    out.values[0] = 1.0;
    return out;
}

AcfEstimate acf_slotted(const MarkSeries& series, const SlotOptions& options) {
    return SlottedAcf(series, options).estimate();
}

std::vector<std::vector<double>> bootstrap_day_weights(std::size_t n_days, std::size_t reps,
                                                       std::uint64_t seed) {
    std::vector<std::vector<double>> out(reps, std::vector<double>(n_days, 0.0));
    if (n_days == 0) return out;
    std::mt19937_64 rng(numeric::splitmix64(seed));
    std::uniform_int_distribution<std::size_t> pick(0, n_days - 1);
    for (auto& w : out) {
        for (std::size_t i = 0; i < n_days; ++i) w[pick(rng)] += 1.0;
    }
    return out;
}

std::vector<double> bootstrap_se(const SlottedAcf& acf, std::size_t reps, std::uint64_t seed) {
    const auto weights = bootstrap_day_weights(acf.n_days(), reps, seed);
    const std::size_t n = acf.options().max_slot() + 1;
    std::vector<double> sum(n, 0.0);
    std::vector<double> sum_sq(n, 0.0);
    std::vector<bool> missing(n, false);
    for (const auto& w : weights) {
        const AcfEstimate e = acf.estimate(w);
        for (std::size_t k = 0; k < n; ++k) {
            if (!e.values[k]) {
                missing[k] = true;
                continue;
            }
            sum[k] += *e.values[k];
            sum_sq[k] += *e.values[k] * *e.values[k];
        }
    }
    std::vector<double> se(n, std::nan(""));
    if (reps < 2) return se;
    const double r = static_cast<double>(reps);
    for (std::size_t k = 0; k < n; ++k) {
        if (missing[k]) continue;
        const double mean = sum[k] / r;
        se[k] = std::sqrt(std::max(0.0, (sum_sq[k] - r * mean * mean) / (r - 1.0)));
    }
    return se;
}

AcfComparison acf_compare(const AcfEstimate& raw, const AcfEstimate& warped) {
    if (raw.lags.size() != warped.lags.size() || raw.slot_width != warped.slot_width) {
        throw DataError("ACF estimates are on different slot grids");
    }
    AcfComparison out;
    out.lags = raw.lags;
    out.raw = raw.values;
    out.warped = warped.values;
    out.difference.resize(raw.lags.size());
    for (std::size_t k = 0; k < raw.lags.size(); ++k) {
        if (raw.lags[k] != warped.lags[k]) throw DataError("ACF estimates are on different slot grids");
        if (!raw.values[k] || !warped.values[k]) continue;
        const double d = *warped.values[k] - *raw.values[k];
        out.difference[k] = d;
        if (k == 0) continue;
        if (d > 0.0) {
            ++out.warped_above;
        } else if (d < 0.0) {
            ++out.warped_below;
        } else {
            ++out.equal;
        }
    }
    return out;
}

Table acf_to_table(const AcfEstimate& acf) {
    Table t;
    t.command = "acf";
    t.set_param("slot_width", numeric::exact_decimal(acf.slot_width));
    t.set_param("mean", numeric::exact_decimal(acf.mean));
    t.set_param("variance", numeric::exact_decimal(acf.variance));
    t.columns = {"lag", "value", "pair_count"};
    for (std::size_t k = 0; k < acf.lags.size(); ++k) {
        t.add_row({acf.lags[k], acf.values[k].value_or(std::nan("")),
                   static_cast<double>(acf.pair_counts[k])});
    }
    return t;
}

}  // namespace tickwarp

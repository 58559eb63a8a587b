#pragma once

#include "tickwarp/acf.hpp"
#include "tickwarp/error.hpp"
#include "tickwarp/kernel.hpp"
#include "tickwarp/theta.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace tickwarp {

/// Autocorrelation of the stationary underlying process in warped time.
///
///   PositiveExp: C(d) = exp(-d / tau_c)                 (positive, decreasing, convex)
///   NegativeExp: C(0) = 1, C(d) = -c exp(-d / tau_c)    (negative, increasing, concave for d > 0)
struct AcfKind {
    enum class Family { PositiveExp, NegativeExp };
    Family family = Family::PositiveExp;
    double c = 1.0;  ///< amplitude; ignored by PositiveExp
    double tau_c = 300.0;

    static AcfKind positive_exp(double tau_c) { return {Family::PositiveExp, 1.0, tau_c}; }
    static AcfKind negative_exp(double c, double tau_c) { return {Family::NegativeExp, c, tau_c}; }

    void validate() const;
    double operator()(double lag) const noexcept;
    /// Scale for "close to zero" comparisons: c for NegativeExp, 1 otherwise.
    double amplitude() const noexcept { return family == Family::NegativeExp ? c : 1.0; }
    StationaryAcf as_stationary(double max_lag) const;
};

struct SynthConfig {
    ThetaModel theta;
    std::size_t n_days = 100;
    AcfKind acf;
    std::uint64_t seed = 1;
};

struct SynthDay {
    std::int32_t date = 0;
    std::vector<double> t;     ///< clock event times, increasing
    std::vector<double> tau;   ///< warped event times tau(t)
    std::vector<double> mark;  ///< X(tau), unit variance
};

struct SynthData {
    std::vector<SynthDay> days;

    std::size_t n_events() const;
    MarkSeries clock_marks() const;
    MarkSeries warped_marks() const;
    /// Ticks whose log returns are `return_scale * mark` for every mark after
    /// the first of a day (the first event opens the price path).
    std::vector<Day> as_ticks(const SessionSpec& session, double return_scale = 1e-3,
                              double start_price = 100.0) const;
};

/// Raised when a day's covariance matrix has no Cholesky factor.
class SynthError : public DataError {
public:
    SynthError(const std::string& what, std::size_t day) : DataError(what), day_(day) {}
    std::size_t day() const noexcept { return day_; }

private:
    std::size_t day_;
};

/// Event times on [0, T] of an inhomogeneous Poisson process with rate
/// 1/theta(t), by thinning a homogeneous process at the peak rate.
std::vector<double> thinned_event_times(const ThetaModel& theta, std::mt19937_64& rng);

/// Synthetic date for day index i (valid yyyymmdd, strictly increasing).
std::int32_t synthetic_date(std::size_t i);

/// Seasonal days: thinned event times, then Gaussian marks sampled exactly at
/// the warped times through a dense Cholesky factor of the C_X covariance.
/// Day d uses its own generator seeded from (seed, d), so results do not
/// depend on the thread count. A non positive-definite covariance raises
/// SynthError naming the first offending day; c is never adjusted.
SynthData gen_seasonal_days(const SynthConfig& cfg);

struct ValidationOptions {
    double slot_width = 0.0;  ///< 0 selects mean_dt
    double max_lag = 600.0;
    std::size_t bootstrap = 200;
    std::uint64_t bootstrap_seed = 7;
    double time_cell = 300.0;
    std::size_t min_pairs = 100;
    double relation_sigma = 3.0;
    /// A slot may violate the expected direction by at most one SE, and on at
    /// most this fraction of slots.
    double direction_soft_fraction = 0.05;
};

struct ValidationRow {
    double lag = 0.0;
    std::uint64_t pairs = 0;
    double cy = 0.0;        ///< clock time, time-uniform slotting
    double cy_se = 0.0;
    double cy_plain = 0.0;  ///< clock time, plain pair-averaged slotting
    double cy_plain_se = 0.0;
    double cx = 0.0;        ///< warped time, plain slotting
    double cx_se = 0.0;
    double diff_se = 0.0;   ///< SE of cy - cx (paired bootstrap)
    double cy_pred = 0.0;   ///< predict_cy with the analytic C_X
    double cy_pred_event = 0.0;
    double cx_true = 0.0;
    bool relation_ok = false;        ///< |cy - cy_pred| <= k SE(cy)
    bool plain_relation_ok = false;  ///< |cy_plain - cy_pred_event| <= k SE
    bool cx_ok = false;              ///< |cx - cx_true| <= k SE(cx)
    int direction = 0;  ///< 0 ok, 1 violation within one SE, 2 larger violation
    bool predicted_direction_ok = false;
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    std::vector<std::string> notices;
    bool relation_pass = false;
    bool cx_pass = false;
    bool direction_pass = false;
    bool predicted_direction_pass = false;
    bool memory_pass = false;
    double memory_lag_cy = 0.0;
    double memory_lag_cx = 0.0;
    std::size_t soft_violations = 0;
    std::size_t hard_violations = 0;

    /// Overall verdict: relation, both direction checks and C_X recovery.
    bool passed() const noexcept {
        return relation_pass && cx_pass && direction_pass && predicted_direction_pass;
    }
};

/// Compares clock-time and warped-time slotted estimates of generated data
/// with the warp-kernel prediction and the direction implied by the shape of
/// C_X (NegativeExp: C_Y <= C_X, PositiveExp: C_Y >= C_X).
ValidationReport validate_relation(const SynthConfig& cfg, const SynthData& data,
                                   const ValidationOptions& options);

Table validation_to_table(const ValidationReport& report);

/// Key=value config for the validate command: kind, t1/t2 or p/q, mean_dt,
/// T, n_days, acf (negexp|posexp), c, tau_c, seed, slot_width, max_lag,
/// bootstrap, time_cell, dump.
struct ValidateConfig {
    SynthConfig synth;
    ValidationOptions options;
    std::string dump_path;
};
ValidateConfig read_validate_config(std::istream& in);

}  // namespace tickwarp

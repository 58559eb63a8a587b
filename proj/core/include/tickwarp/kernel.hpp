#pragma once

#include "tickwarp/table.hpp"
#include "tickwarp/warp.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace tickwarp {

/// Closed t-interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Intervals of [0, T - dt] on which t -> delta_tau(t, dt) is strictly
/// monotone. Breakpoints are the roots of theta(t + dt) = theta(t); both
/// parametric families are unimodal so there are at most two branches. A
/// constant theta yields one interval on which delta_tau is constant.
std::vector<Interval> branch_decomposition(const WarpFn& warp, double dt);

/// Distribution of warped lags delta_tau(t, dt) when t is uniform on
/// [0, T - dt]: a histogram over [min, max] of the warped lag.
struct LagDistribution {
    double dt = 0.0;
    double support_lo = 0.0;
    double support_hi = 0.0;
    double cell_width = 0.0;        ///< 0 for a degenerate (single-point) support
    std::vector<double> mass;       ///< probability per cell
    std::vector<double> density;    ///< mass / cell_width (mass itself when degenerate)

    double total_mass() const;
    double cell_center(std::size_t i) const;
    /// Mean warped lag from the histogram (cell centres).
    double mean() const;
};

/// Uniform midpoint sampling of t on [0, T - dt], histogrammed into `cells`
/// cells with weight 1/grid_n each. Requires 0 < dt < T and grid_n >= 1000.
LagDistribution lag_distribution(const WarpFn& warp, double dt, std::size_t grid_n = 100000,
                                 std::size_t cells = 512);

/// Exact probability that delta_tau(t, dt) lies in [lo, hi] for uniform t,
/// from inverting delta_tau on each monotone branch. Independent of the
/// histogram path; used to cross-check it.
double lag_mass_by_branches(const WarpFn& warp, double dt, double lo, double hi);

/// Density of the warped lag at `value`, as the branch sum
/// sum_i 1 / ((T - dt) |d delta_tau / dt|) at the preimages t_i(value).
double lag_density_by_branches(const WarpFn& warp, double dt, double value);

/// omega(dt) = E[delta_tau] / dt with t uniform on [0, T - dt], by adaptive
/// quadrature in t. Equals 1 for a constant theta.
double omega(const WarpFn& warp, double dt);

struct OmegaCurve {
    std::vector<double> dts;
    std::vector<double> omega;
};

/// omega at every dt, computed in parallel.
OmegaCurve omega_curve(const WarpFn& warp, const std::vector<double>& dts);

/// Autocorrelation of the stationary process as a function of the warped
/// lag, defined on [0, max_lag].
struct StationaryAcf {
    std::function<double(double)> fn;
    double max_lag = 0.0;

    double operator()(double lag) const { return fn(lag); }

    /// Piecewise-linear interpolation of (lag, value) rows; lags must start at
    /// 0 and increase strictly.
    static StationaryAcf from_table(std::vector<double> lags, std::vector<double> values);
};

/// Uniform-in-t average of C_X(delta_tau(t, dt)) over [0, T - dt]: the
/// clock-time estimator implied by a stationary C_X. Throws DataError when
/// the warped lags reach beyond cx.max_lag.
double predict_cy(const WarpFn& warp, const StationaryAcf& cx, double dt);

/// Same average weighted by the expected pair rate
/// theta(t)^-1 theta(t + dt)^-1: the limit of the plain pair-averaged slotting
/// estimator on events that arrive at rate 1/theta.
double predict_cy_event_weighted(const WarpFn& warp, const StationaryAcf& cx, double dt);

Table omega_to_table(const OmegaCurve& curve);
Table lag_distribution_to_table(const LagDistribution& dist);

}  // namespace tickwarp

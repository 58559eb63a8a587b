#include "tickwarp/kernel.hpp"

#include "tickwarp/error.hpp"
#include "tickwarp/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace tickwarp {

namespace {

void check_lag(const WarpFn& warp, double dt) {
    if (!(dt > 0.0 && dt < warp.length())) throw DomainError("clock lag must satisfy 0 < dt < T");
}

// Range of delta_tau(., dt) on one monotone branch.
Interval branch_range(const WarpFn& warp, const Interval& b, double dt) {
    const double u = warp.delta_tau_unchecked(b.lo, dt);
    const double v = warp.delta_tau_unchecked(b.hi, dt);
    return {std::min(u, v), std::max(u, v)};
}

// Preimage of `value` on a branch where delta_tau is monotone and spans it.
double branch_preimage(const WarpFn& warp, const Interval& b, double dt, double value) {
    const double at_lo = warp.delta_tau_unchecked(b.lo, dt);
    const double at_hi = warp.delta_tau_unchecked(b.hi, dt);
    if (value == at_lo) return b.lo;
    if (value == at_hi) return b.hi;
    return numeric::find_root([&](double t) { return warp.delta_tau_unchecked(t, dt) - value; }, b.lo,
                              b.hi, 1e-13 * warp.length());
}

Interval support(const WarpFn& warp, double dt) {
    Interval s{INFINITY, -INFINITY};
    for (const Interval& b : branch_decomposition(warp, dt)) {
        const Interval r = branch_range(warp, b, dt);
        s.lo = std::min(s.lo, r.lo);
        s.hi = std::max(s.hi, r.hi);
    }
    return s;
}

}  // namespace

std::vector<Interval> branch_decomposition(const WarpFn& warp, double dt) {
    check_lag(warp, dt);
    const ThetaModel& m = warp.model();
    const double end = warp.length() - dt;
    if (m.kind() == ThetaKind::Constant) return {{0.0, end}};
    auto gap = [&](double t) { return m.eval(t + dt) - m.eval(t); };
    const double g0 = gap(0.0);
    const double g1 = gap(end);
    if (g0 == 0.0 || g1 == 0.0 || (g0 > 0.0) == (g1 > 0.0)) return {{0.0, end}};
    const double root = numeric::find_root(gap, 0.0, end, 1e-13 * warp.length());
    return {{0.0, root}, {root, end}};
}

double LagDistribution::total_mass() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
}

double LagDistribution::cell_center(std::size_t i) const {
    return support_lo + (static_cast<double>(i) + 0.5) * cell_width;
}

double LagDistribution::mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) s += mass[i] * cell_center(i);
    return s / total_mass();
}

LagDistribution lag_distribution(const WarpFn& warp, double dt, std::size_t grid_n, std::size_t cells) {
    check_lag(warp, dt);
    if (grid_n < 1000) throw DomainError("lag distribution needs grid_n >= 1000");
    if (cells < 1) throw DomainError("lag distribution needs at least one cell");
    const Interval s = support(warp, dt);
    LagDistribution out;
    out.dt = dt;
    out.support_lo = s.lo;
    out.support_hi = s.hi;
    if (!(s.hi - s.lo > 1e-12 * s.hi)) {
        out.mass = {1.0};
        out.density = {1.0};
        return out;
    }
    out.cell_width = (s.hi - s.lo) / static_cast<double>(cells);
    out.mass.assign(cells, 0.0);
    const double end = warp.length() - dt;
    const double step = end / static_cast<double>(grid_n);
    const double weight = 1.0 / static_cast<double>(grid_n);
    for (std::size_t k = 0; k < grid_n; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * step;
        const double v = warp.delta_tau_unchecked(t, dt);
        const auto idx = static_cast<std::size_t>(std::clamp((v - s.lo) / out.cell_width, 0.0,
                                                             static_cast<double>(cells - 1)));
        out.mass[idx] += weight;
    }
    out.density.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) out.density[i] = out.mass[i] / out.cell_width;
    return out;
}

double lag_mass_by_branches(const WarpFn& warp, double dt, double lo, double hi) {
    check_lag(warp, dt);
    const double end = warp.length() - dt;
    double measure = 0.0;
    for (const Interval& b : branch_decomposition(warp, dt)) {
        const Interval r = branch_range(warp, b, dt);
        if (r.hi == r.lo) {
            if (lo <= r.lo && r.lo <= hi) measure += b.hi - b.lo;
            continue;
        }
        const double a = std::max(lo, r.lo);
        const double z = std::min(hi, r.hi);
        if (!(z > a)) continue;
        measure += std::abs(branch_preimage(warp, b, dt, z) - branch_preimage(warp, b, dt, a));
    }
    return measure / end;
}

double lag_density_by_branches(const WarpFn& warp, double dt, double value) {
    check_lag(warp, dt);
    const ThetaModel& m = warp.model();
    const double end = warp.length() - dt;
    double density = 0.0;
    for (const Interval& b : branch_decomposition(warp, dt)) {
        const Interval r = branch_range(warp, b, dt);
        if (!(value > r.lo && value < r.hi)) continue;
        const double t = branch_preimage(warp, b, dt, value);
        const double slope = m.mean_dt() * (m.rate(t + dt) - m.rate(t));
        density += 1.0 / (end * std::abs(slope));
    }
    return density;
}

double omega(const WarpFn& warp, double dt) {
    check_lag(warp, dt);
    if (warp.model().kind() == ThetaKind::Constant) return 1.0;
    const double end = warp.length() - dt;
    const double integral =
        numeric::integrate([&](double t) { return warp.delta_tau_unchecked(t, dt); }, 0.0, end, 1e-12);
    return integral / (end * dt);
}

OmegaCurve omega_curve(const WarpFn& warp, const std::vector<double>& dts) {
    OmegaCurve c;
    c.dts = dts;
    c.omega.resize(dts.size());
    numeric::parallel_for(dts.size(), [&](std::size_t i) { c.omega[i] = omega(warp, dts[i]); });
    return c;
}

StationaryAcf StationaryAcf::from_table(std::vector<double> lags, std::vector<double> values) {
    if (lags.size() != values.size() || lags.size() < 2) {
        throw DataError("C_X table needs at least two (lag, value) rows");
    }
    if (lags.front() != 0.0) throw DataError("C_X table must start at lag 0");
    for (std::size_t i = 1; i < lags.size(); ++i) {
        if (!(lags[i] > lags[i - 1])) throw DataError("C_X table lags must increase strictly");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw DataError("C_X table has a non-finite value");
    }
    const double max_lag = lags.back();
    auto fn = [lags = std::move(lags), values = std::move(values)](double x) {
        const auto it = std::upper_bound(lags.begin(), lags.end(), x);
        if (it == lags.end()) return values.back();
        if (it == lags.begin()) return values.front();
        const auto i = static_cast<std::size_t>(it - lags.begin());
        const double w = (x - lags[i - 1]) / (lags[i] - lags[i - 1]);
        return values[i - 1] + w * (values[i] - values[i - 1]);
    };
    return {std::move(fn), max_lag};
}

double predict_cy(const WarpFn& warp, const StationaryAcf& cx, double dt) {
    check_lag(warp, dt);
    const Interval s = support(warp, dt);
    if (s.hi > cx.max_lag * (1.0 + 1e-12)) {
        throw DataError("C_X is not defined up to the warped lag " + numeric::sig17(s.hi));
    }
    const double end = warp.length() - dt;
    return numeric::integrate([&](double t) { return cx(warp.delta_tau_unchecked(t, dt)); }, 0.0, end,
                              1e-10) /
           end;
}

double predict_cy_event_weighted(const WarpFn& warp, const StationaryAcf& cx, double dt) {
    check_lag(warp, dt);
    const Interval s = support(warp, dt);
    if (s.hi > cx.max_lag * (1.0 + 1e-12)) {
        throw DataError("C_X is not defined up to the warped lag " + numeric::sig17(s.hi));
    }
    const ThetaModel& m = warp.model();
    const double end = warp.length() - dt;
    auto pair_rate = [&](double t) { return m.rate(t) * m.rate(t + dt); };
    const double num = numeric::integrate(
        [&](double t) { return pair_rate(t) * cx(warp.delta_tau_unchecked(t, dt)); }, 0.0, end, 1e-10);
    const double den = numeric::integrate(pair_rate, 0.0, end, 1e-12);
    return num / den;
}

Table omega_to_table(const OmegaCurve& curve) {
    Table t;
    t.command = "omega";
    t.columns = {"dt", "omega"};
    for (std::size_t i = 0; i < curve.dts.size(); ++i) t.add_row({curve.dts[i], curve.omega[i]});
    return t;
}

Table lag_distribution_to_table(const LagDistribution& dist) {
    Table t;
    t.command = "rho";
    t.set_param("dt", numeric::exact_decimal(dist.dt));
    t.set_param("support_lo", numeric::exact_decimal(dist.support_lo));
    t.set_param("support_hi", numeric::exact_decimal(dist.support_hi));
    t.set_param("cell_width", numeric::exact_decimal(dist.cell_width));
    t.columns = {"dtau", "density", "mass"};
    for (std::size_t i = 0; i < dist.mass.size(); ++i) {
        t.add_row({dist.cell_center(i), dist.density[i], dist.mass[i]});
    }
    return t;
}

}  // namespace tickwarp

#include "tickwarp/warp.hpp"

#include "tickwarp/error.hpp"
#include "tickwarp/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace tickwarp {

double WarpFn::tau(double t) const {
    if (!(t >= 0.0 && t <= length())) throw DomainError("tau: t outside [0, T]");
    return warped_time(model_, t);
}

double WarpFn::tau_inverse(double value) const {
    const double T = length();
    if (!(value >= 0.0 && value <= T)) throw DomainError("tau_inverse: value outside [0, T]");
    if (value == 0.0) return 0.0;
    if (value == T) return T;
    if (model_.kind() == ThetaKind::Constant) return value;
    // tau' = mean_dt / theta <= mean_dt / theta_min, so an x-bracket of
    // 1e-9 T * theta_min / mean_dt bounds the residual by 1e-9 T; tighten
    // further to near machine precision.
    const double slope = model_.mean_dt() / model_.min_value();
    const double x_tol = std::max(1e-12 * T / std::max(slope, 1.0), 4.0 * T * 1e-16);
    return numeric::find_root([&](double t) { return warped_time(model_, t) - value; }, 0.0, T,
                              x_tol);
}

double WarpFn::delta_tau_unchecked(double t, double dt) const noexcept {
    const ThetaModel& m = model_;
    const auto& s = m.shape();
    switch (m.kind()) {
        case ThetaKind::Constant: return dt;
        case ThetaKind::Quadratic: {
            // ln( (t+dt-t2)(t-t1) / ((t+dt-t1)(t-t2)) )
            const double log_ratio = std::log1p(dt / (t - s.second)) - std::log1p(dt / (t - s.first));
            return m.mean_dt() / (m.a() * (s.second - s.first)) * log_ratio;
        }
        case ThetaKind::Rational: {
            // int_t^{t+dt} ((s-p)^2 + q) ds = dt ((u+dt)^2 + (u+dt)u + u^2)/3 + q dt
            const double u = t - s.first;
            const double v = u + dt;
            return m.mean_dt() * m.a() * dt * ((v * v + v * u + u * u) / 3.0 + s.second);
        }
    }
    return dt;
}

double WarpFn::delta_tau(double t, double dt) const {
    if (!(t >= 0.0 && dt >= 0.0 && t + dt <= length() * (1.0 + 1e-15))) {
        throw DomainError("delta_tau: need 0 <= t <= t + dt <= T");
    }
    return delta_tau_unchecked(t, dt);
}

std::vector<Day> WarpFn::warp_ticks(const std::vector<Day>& days) const {
    std::vector<Day> out = days;
    for (Day& day : out) {
        if (std::abs(day.session.length - length()) > 1e-9 * length()) {
            throw DataError("day " + std::to_string(day.date) + ": session length differs from the model");
        }
        for (Tick& tick : day.ticks) tick.t = tau(tick.t);
    }
    return out;
}

double tau_by_quadrature(const ThetaModel& model, double t, double rel_tol) {
    if (!(t >= 0.0 && t <= model.length())) throw DomainError("tau: t outside [0, T]");
    return model.mean_dt() * numeric::integrate([&](double s) { return model.rate(s); }, 0.0, t, rel_tol);
}

}  // namespace tickwarp

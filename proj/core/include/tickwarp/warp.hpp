#pragma once

#include "tickwarp/theta.hpp"
#include "tickwarp/ticks.hpp"

#include <vector>

namespace tickwarp {

/// Deseasonalizing time deformation tau(t) = mean_dt * int_0^t ds/theta(s).
/// Maps [0, T] onto itself, strictly increasing, tau(0) = 0, tau(T) = T.
/// Immutable; safe to share between threads.
class WarpFn {
public:
    explicit WarpFn(ThetaModel model) : model_(std::move(model)) {}

    const ThetaModel& model() const noexcept { return model_; }
    double length() const noexcept { return model_.length(); }

    /// Closed form; DomainError outside [0, T].
    double tau(double t) const;
    /// Bracketed root of tau(t) = value on [0, T]; |tau(t) - value| <= 1e-9 T.
    double tau_inverse(double value) const;
    /// tau(t + dt) - tau(t) without cancellation; requires 0 <= t <= t + dt <= T.
    double delta_tau(double t, double dt) const;
    /// delta_tau without domain checks, for inner loops.
    double delta_tau_unchecked(double t, double dt) const noexcept;

    /// Same days with every t replaced by tau(t); counts and order preserved.
    std::vector<Day> warp_ticks(const std::vector<Day>& days) const;

private:
    ThetaModel model_;
};

/// mean_dt * int_0^t ds/theta(s) by adaptive quadrature, independent of the
/// closed forms. Used for families without a closed form and as an oracle.
double tau_by_quadrature(const ThetaModel& model, double t, double rel_tol = 1e-12);

}  // namespace tickwarp

#pragma once

#include "tickwarp/error.hpp"
#include "tickwarp/pattern.hpp"
#include "tickwarp/ticks.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tickwarp {

/// Parametric families for the time-of-day average inter-trade interval.
///
///   Quadratic:  theta(t) = a (t - t1)(t - t2)
///   Rational:   theta(t) = 1 / (a ((t - p)^2 + q))
///   Constant:   theta(t) = mean_dt  (no seasonality)
enum class ThetaKind { Constant, Quadratic, Rational };

std::string_view to_string(ThetaKind kind);
ThetaKind parse_theta_kind(std::string_view text);

/// The two free shape parameters: (t1, t2) for Quadratic, (p, q) for
/// Rational, unused for Constant.
struct ThetaShape {
    double first = 0.0;
    double second = 0.0;

    friend bool operator==(const ThetaShape&, const ThetaShape&) = default;
};

/// Scale a that makes mean_dt * integral_0^T ds / theta(s) = T, from the
/// closed form of the integral. Throws InvalidModel when no a gives a
/// positive theta on [0, T].
double solve_a(ThetaKind kind, ThetaShape shape, double mean_dt, double length);

/// Activity function with its scale fixed by the mean inter-trade time
/// constraint. Every instance is positive on [0, T].
class ThetaModel {
public:
    /// Constant theta = 1 on [0, 1]; placeholder until assigned.
    ThetaModel() = default;

    /// Solves a from the constraint and validates positivity.
    static ThetaModel make(ThetaKind kind, ThetaShape shape, double mean_dt, double length);

    static ThetaModel constant(double mean_dt, double length) {
        return make(ThetaKind::Constant, {}, mean_dt, length);
    }
    static ThetaModel quadratic(double t1, double t2, double mean_dt, double length) {
        return make(ThetaKind::Quadratic, {t1, t2}, mean_dt, length);
    }
    static ThetaModel rational(double p, double q, double mean_dt, double length) {
        return make(ThetaKind::Rational, {p, q}, mean_dt, length);
    }

    /// Rebuilds a model from stored parts without re-solving a. Rejects
    /// parts that violate positivity or the constraint (1e-8 relative).
    static ThetaModel from_parts(ThetaKind kind, ThetaShape shape, double a, double mean_dt,
                                 double length);

    ThetaKind kind() const noexcept { return kind_; }
    const ThetaShape& shape() const noexcept { return shape_; }
    double a() const noexcept { return a_; }
    double mean_dt() const noexcept { return mean_dt_; }
    double length() const noexcept { return length_; }

    /// theta(t) for t in [0, T]; DomainError otherwise.
    double operator()(double t) const;
    /// theta(t) without the domain check.
    double eval(double t) const noexcept;
    /// 1 / theta(t) without the domain check.
    double rate(double t) const noexcept;

    /// Stationary point of theta (the vertex) if it lies inside (0, T).
    std::optional<double> vertex() const noexcept;
    double min_value() const noexcept;
    double max_value() const noexcept;

    friend bool operator==(const ThetaModel&, const ThetaModel&) = default;

private:
    ThetaModel(ThetaKind kind, ThetaShape shape, double a, double mean_dt, double length)
        : kind_(kind), shape_(shape), a_(a), mean_dt_(mean_dt), length_(length) {}

    void check_positive() const;

    ThetaKind kind_ = ThetaKind::Constant;
    ThetaShape shape_;
    double a_ = 0.0;
    double mean_dt_ = 1.0;
    double length_ = 1.0;
};

/// mean_dt * integral_0^t ds / theta(s), closed form. Shared by the warp and
/// by the constraint check.
double warped_time(const ThetaModel& m, double t) noexcept;

struct FitOptions {
    int max_iterations = 200;
    /// Stop when an accepted step changes the scaled parameters by less
    /// than this (relative).
    double step_tolerance = 1e-13;
};

struct FitReport {
    ThetaModel model;
    double objective = 0.0;      ///< sum_i w_i ((mean_dt_i - theta(t_i)) / mean_dt)^2, sum w = 1
    double residual_norm = 0.0;  ///< sqrt of the count-weighted SSE in seconds^2
    int iterations = 0;
    std::vector<double> objective_trace;  ///< objective after each accepted step
};

/// Raised when the optimizer hits its iteration cap; carries the best model.
class FitError : public Error {
public:
    FitError(const std::string& what, FitReport best) : Error(what), best_(std::move(best)) {}
    const FitReport& best() const noexcept { return best_; }

private:
    FitReport best_;
};

/// Weighted least squares of the raw binned mean_dt against theta(t_mid)
/// over the two shape parameters, with a re-solved at every candidate so the
/// mean_dt constraint holds throughout. Infeasible candidates are rejected.
/// Requires at least 3 nonempty bins.
FitReport fit_theta(const IntradayPattern& pattern, ThetaKind kind, const SessionStats& stats,
                    const SessionSpec& spec, const FitOptions& options = {});

/// Key=value record: kind, shape parameters (t1/t2 or p/q), a, T, mean_dt.
/// Values are written as shortest exact decimals so read_model(write_model(m))
/// == m bit for bit.
void write_model(std::ostream& out, const ThetaModel& m);
ThetaModel read_model(std::istream& in);

}  // namespace tickwarp

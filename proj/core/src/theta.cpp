#include "tickwarp/theta.hpp"

#include "tickwarp/numeric.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

namespace tickwarp {

namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

void check_common(double mean_dt, double length) {
    if (!finite_positive(length)) throw InvalidModel("session length must be positive");
    if (!finite_positive(mean_dt)) throw InvalidModel("mean inter-trade time must be positive");
}

// ln( ((t - t2) t1) / ((t - t1) t2) ), written with log1p so that t -> 0
// gives exactly 0.
double quadratic_log(double t, double t1, double t2) noexcept {
    return std::log1p(-t / t2) - std::log1p(-t / t1);
}

// integral_0^t ((s - p)^2 + q) ds = t ((t^2 - 3tp + 3p^2) / 3 + q)
double rational_poly(double t, double p, double q) noexcept {
    return t * ((t * t - 3.0 * t * p + 3.0 * p * p) / 3.0 + q);
}

}  // namespace

std::string_view to_string(ThetaKind kind) {
    switch (kind) {
        case ThetaKind::Constant: return "constant";
        case ThetaKind::Quadratic: return "quadratic";
        case ThetaKind::Rational: return "rational";
    }
    return "?";
}

ThetaKind parse_theta_kind(std::string_view text) {
    if (text == "constant") return ThetaKind::Constant;
    if (text == "quadratic") return ThetaKind::Quadratic;
    if (text == "rational") return ThetaKind::Rational;
    throw InvalidModel("unknown theta kind '" + std::string(text) + "'");
}

double solve_a(ThetaKind kind, ThetaShape shape, double mean_dt, double length) {
    check_common(mean_dt, length);
    switch (kind) {
        case ThetaKind::Constant:
            return 0.0;
        case ThetaKind::Quadratic: {
            const double t1 = shape.first;
            const double t2 = shape.second;
            if (!std::isfinite(t1) || !std::isfinite(t2) || t1 == t2) {
                throw InvalidModel("quadratic roots must be finite and distinct");
            }
            if ((t1 >= 0.0 && t1 <= length) || (t2 >= 0.0 && t2 <= length)) {
                throw InvalidModel("quadratic root inside the session makes theta vanish");
            }
            if (t1 == 0.0 || t2 == 0.0) throw InvalidModel("quadratic root at the session open");
            const double log_ratio = quadratic_log(length, t1, t2);
            if (!std::isfinite(log_ratio) || log_ratio == 0.0) {
                throw InvalidModel("log argument of the quadratic constraint is not positive");
            }
            return mean_dt * log_ratio / (length * (t2 - t1));
        }
        case ThetaKind::Rational: {
            const double p = shape.first;
            const double q = shape.second;
            if (!std::isfinite(p) || !finite_positive(q)) {
                throw InvalidModel("rational theta requires finite p and q > 0");
            }
            const double denom = length * length / 3.0 - p * length + p * p + q;
            const double a = 1.0 / (mean_dt * denom);
            if (!finite_positive(a)) throw InvalidModel("rational scale a is not positive");
            return a;
        }
    }
    throw InvalidModel("unknown theta kind");
}

ThetaModel ThetaModel::make(ThetaKind kind, ThetaShape shape, double mean_dt, double length) {
    if (kind == ThetaKind::Constant) shape = {};
    ThetaModel m(kind, shape, solve_a(kind, shape, mean_dt, length), mean_dt, length);
    m.check_positive();
    return m;
}

ThetaModel ThetaModel::from_parts(ThetaKind kind, ThetaShape shape, double a, double mean_dt,
                                  double length) {
    check_common(mean_dt, length);
    if (kind == ThetaKind::Constant) shape = {};
    // Reuses the closed-form validation of the shape parameters.
    solve_a(kind, shape, mean_dt, length);
    ThetaModel m(kind, shape, kind == ThetaKind::Constant ? 0.0 : a, mean_dt, length);
    m.check_positive();
    const double end = warped_time(m, length);
    if (!(std::abs(end - length) <= 1e-8 * length)) {
        throw InvalidModel("scale a violates the mean inter-trade time constraint");
    }
    return m;
}

void ThetaModel::check_positive() const {
    if (!finite_positive(min_value())) throw InvalidModel("theta is not positive on [0, T]");
}

double ThetaModel::eval(double t) const noexcept {
    switch (kind_) {
        case ThetaKind::Constant: return mean_dt_;
        case ThetaKind::Quadratic: return a_ * (t - shape_.first) * (t - shape_.second);
        case ThetaKind::Rational: {
            const double u = t - shape_.first;
            return 1.0 / (a_ * (u * u + shape_.second));
        }
    }
    return mean_dt_;
}

double ThetaModel::rate(double t) const noexcept {
    switch (kind_) {
        case ThetaKind::Constant: return 1.0 / mean_dt_;
        case ThetaKind::Quadratic: return 1.0 / (a_ * (t - shape_.first) * (t - shape_.second));
        case ThetaKind::Rational: {
            const double u = t - shape_.first;
            return a_ * (u * u + shape_.second);
        }
    }
    return 1.0 / mean_dt_;
}

double ThetaModel::operator()(double t) const {
    if (!(t >= 0.0 && t <= length_)) throw DomainError("theta: t outside [0, T]");
    return eval(t);
}

std::optional<double> ThetaModel::vertex() const noexcept {
    double v = 0.0;
    switch (kind_) {
        case ThetaKind::Constant: return std::nullopt;
        case ThetaKind::Quadratic: v = 0.5 * (shape_.first + shape_.second); break;
        case ThetaKind::Rational: v = shape_.first; break;
    }
    if (v > 0.0 && v < length_) return v;
    return std::nullopt;
}

double ThetaModel::min_value() const noexcept {
    double lo = std::min(eval(0.0), eval(length_));
    if (const auto v = vertex()) lo = std::min(lo, eval(*v));
    return lo;
}

double ThetaModel::max_value() const noexcept {
    double hi = std::max(eval(0.0), eval(length_));
    if (const auto v = vertex()) hi = std::max(hi, eval(*v));
    return hi;
}

double warped_time(const ThetaModel& m, double t) noexcept {
    const auto& s = m.shape();
    switch (m.kind()) {
        case ThetaKind::Constant: return t;
        case ThetaKind::Quadratic:
            return m.mean_dt() / (m.a() * (s.second - s.first)) * quadratic_log(t, s.first, s.second);
        case ThetaKind::Rational: return m.mean_dt() * m.a() * rational_poly(t, s.first, s.second);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

namespace {

// Optimizer coordinates: dimensionless and O(1) near typical shapes.
//   Quadratic: (t1 / T, t2 / T)
//   Rational:  (p / T, ln(q / T^2))  -- keeps q > 0 by construction
using Params = std::array<double, 2>;

ThetaShape to_shape(ThetaKind kind, const Params& u, double length) {
    if (kind == ThetaKind::Rational) return {u[0] * length, std::exp(u[1]) * length * length};
    return {u[0] * length, u[1] * length};
}

struct Problem {
    ThetaKind kind;
    double mean_dt;
    double length;
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> sqrt_w;

    std::optional<ThetaModel> model(const Params& u) const {
        try {
            return ThetaModel::make(kind, to_shape(kind, u, length), mean_dt, length);
        } catch (const InvalidModel&) {
            return std::nullopt;
        }
    }

    // Residuals are scaled by 1/mean_dt so the objective is dimensionless.
    std::optional<Eigen::VectorXd> residuals(const Params& u) const {
        const auto m = model(u);
        if (!m) return std::nullopt;
        Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
        for (std::size_t i = 0; i < t.size(); ++i) {
            r[static_cast<Eigen::Index>(i)] = sqrt_w[i] * (y[i] - m->eval(t[i])) / mean_dt;
        }
        return r;
    }
};

// Central differences, falling back to one-sided when a probe is infeasible.
std::optional<Eigen::MatrixXd> jacobian(const Problem& prob, const Params& u,
                                        const Eigen::VectorXd& r0) {
    Eigen::MatrixXd jac(r0.size(), 2);
    for (int j = 0; j < 2; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(u[j]));
        Params up = u;
        Params dn = u;
        up[j] += h;
        dn[j] -= h;
        const auto rp = prob.residuals(up);
        const auto rm = prob.residuals(dn);
        if (rp && rm) {
            jac.col(j) = (*rp - *rm) / (2.0 * h);
        } else if (rp) {
            jac.col(j) = (*rp - r0) / h;
        } else if (rm) {
            jac.col(j) = (r0 - *rm) / h;
        } else {
            return std::nullopt;
        }
    }
    return jac;
}

}  // namespace

FitReport fit_theta(const IntradayPattern& pattern, ThetaKind kind, const SessionStats& stats,
                    const SessionSpec& spec, const FitOptions& options) {
    spec.validate();
    if (pattern.normalized) throw DataError("fit requires a raw (un-normalized) pattern");
    if (std::abs(pattern.length - spec.length) > 1e-9 * spec.length) {
        throw DataError("pattern session length differs from the session spec");
    }
    Problem prob{kind, stats.mean_dt, spec.length, {}, {}, {}};
    double total = 0.0;
    for (const auto& b : pattern.bins) {
        if (b.count == 0 || !b.mean_dt) continue;
        prob.t.push_back(b.t_mid);
        prob.y.push_back(*b.mean_dt);
        prob.sqrt_w.push_back(static_cast<double>(b.count));
        total += static_cast<double>(b.count);
    }
    if (prob.t.size() < 3) throw DataError("fit needs at least 3 nonempty bins");
    for (double& w : prob.sqrt_w) w = std::sqrt(w / total);

    auto finish = [&](const ThetaModel& m, double objective, int iterations,
                      std::vector<double> trace) {
        double sse = 0.0;
        for (std::size_t i = 0; i < prob.t.size(); ++i) {
            const double d = prob.y[i] - m.eval(prob.t[i]);
            sse += prob.sqrt_w[i] * prob.sqrt_w[i] * total * d * d;
        }
        return FitReport{m, objective, std::sqrt(sse), iterations, std::move(trace)};
    };

    if (kind == ThetaKind::Constant) {
        const auto m = ThetaModel::constant(prob.mean_dt, prob.length);
        const Eigen::VectorXd r = *prob.residuals({0.0, 0.0});
        return finish(m, r.squaredNorm(), 0, {r.squaredNorm()});
    }

    Params u = kind == ThetaKind::Quadratic ? Params{-0.1, 1.2} : Params{0.5, std::log(0.25)};
    auto r = prob.residuals(u);
    if (!r) throw InvalidModel("initial guess is infeasible");
    double f = r->squaredNorm();
    std::vector<double> trace{f};
    double lambda = 1e-3;

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        const auto jac = jacobian(prob, u, *r);
        if (!jac) break;
        const Eigen::Matrix2d jtj = jac->transpose() * *jac;
        const Eigen::Vector2d grad = jac->transpose() * *r;

        bool accepted = false;
        Params next{};
        Eigen::VectorXd r_next;
        double f_next = f;
        while (lambda < 1e16) {
            Eigen::Matrix2d damped = jtj;
            for (int j = 0; j < 2; ++j) damped(j, j) += lambda * std::max(jtj(j, j), 1e-12);
            const Eigen::Vector2d step = damped.ldlt().solve(-grad);
            next = {u[0] + step[0], u[1] + step[1]};
            if (const auto rn = prob.residuals(next)) {
                f_next = rn->squaredNorm();
                if (f_next <= f) {
                    r_next = *rn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        // No descent direction left: the current point is a local minimum.
        if (!accepted) return finish(*prob.model(u), f, iter, std::move(trace));

        const double step_size = std::hypot(next[0] - u[0], next[1] - u[1]);
        const double scale = std::hypot(u[0], u[1]) + options.step_tolerance;
        const double decrease = f - f_next;
        // A stalled objective only counts as convergence for a (nearly)
        // undamped Gauss-Newton step.
        const bool stalled = decrease <= 1e-14 * f && lambda <= 1e-2;
        u = next;
        r = r_next;
        f = f_next;
        trace.push_back(f);
        lambda = std::max(lambda / 10.0, 1e-12);

        if (step_size <= options.step_tolerance * scale || f <= 1e-28 || stalled) {
            return finish(*prob.model(u), f, iter, std::move(trace));
        }
    }
    throw FitError("theta fit did not converge within " + std::to_string(options.max_iterations) +
                       " iterations",
                   finish(*prob.model(u), f, options.max_iterations, std::move(trace)));
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void write_model(std::ostream& out, const ThetaModel& m) {
    using numeric::exact_decimal;
    out << "# tickwarp " << TICKWARP_VERSION << " theta model\n";
    out << "kind=" << to_string(m.kind()) << '\n';
    if (m.kind() == ThetaKind::Quadratic) {
        out << "t1=" << exact_decimal(m.shape().first) << '\n';
        out << "t2=" << exact_decimal(m.shape().second) << '\n';
    } else if (m.kind() == ThetaKind::Rational) {
        out << "p=" << exact_decimal(m.shape().first) << '\n';
        out << "q=" << exact_decimal(m.shape().second) << '\n';
    }
    out << "a=" << exact_decimal(m.a()) << '\n';
    out << "T=" << exact_decimal(m.length()) << '\n';
    out << "mean_dt=" << exact_decimal(m.mean_dt()) << '\n';
}

ThetaModel read_model(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", n);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ParseError("model record lacks '" + key + "'", 0);
        return numeric::parse_double(it->second);
    };
    if (!kv.contains("kind")) throw ParseError("model record lacks 'kind'", 0);
    const ThetaKind kind = parse_theta_kind(kv["kind"]);
    ThetaShape shape;
    if (kind == ThetaKind::Quadratic) shape = {get("t1"), get("t2")};
    if (kind == ThetaKind::Rational) shape = {get("p"), get("q")};
    const double a = kv.contains("a") ? get("a") : solve_a(kind, shape, get("mean_dt"), get("T"));
    return ThetaModel::from_parts(kind, shape, a, get("mean_dt"), get("T"));
}

}  // namespace tickwarp

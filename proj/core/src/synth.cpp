#include "tickwarp/synth.hpp"

#include "tickwarp/numeric.hpp"
#include "tickwarp/warp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>

namespace tickwarp {

void AcfKind::validate() const {
    if (!(tau_c > 0.0) || !std::isfinite(tau_c)) throw DomainError("tau_c must be positive");
    if (family == Family::NegativeExp && !(c > 0.0 && c < 1.0)) {
        throw DomainError("NegativeExp amplitude c must lie in (0, 1)");
    }
}

double AcfKind::operator()(double lag) const noexcept {
    const double e = std::exp(-std::abs(lag) / tau_c);
    if (family == Family::PositiveExp) return e;
    return lag == 0.0 ? 1.0 : -c * e;
}

StationaryAcf AcfKind::as_stationary(double max_lag) const {
    return {[kind = *this](double lag) { return kind(lag); }, max_lag};
}

std::size_t SynthData::n_events() const {
    std::size_t n = 0;
    for (const auto& d : days) n += d.t.size();
    return n;
}

MarkSeries SynthData::clock_marks() const {
    MarkSeries s;
    for (const auto& d : days) s.add_day(d.date, d.t, d.mark);
    return s;
}

MarkSeries SynthData::warped_marks() const {
    MarkSeries s;
    for (const auto& d : days) s.add_day(d.date, d.tau, d.mark);
    return s;
}

std::vector<Day> SynthData::as_ticks(const SessionSpec& session, double return_scale,
                                     double start_price) const {
    std::vector<Day> out;
    out.reserve(days.size());
    for (const auto& d : days) {
        Day day;
        day.date = d.date;
        day.session = session;
        double log_price = std::log(start_price);
        for (std::size_t i = 0; i < d.t.size(); ++i) {
            if (i > 0) log_price += return_scale * d.mark[i];
            day.ticks.push_back(Tick{d.t[i], std::exp(log_price), 1});
        }
        out.push_back(std::move(day));
    }
    return out;
}

std::int32_t synthetic_date(std::size_t i) {
    const auto year = static_cast<std::int32_t>(2005 + i / 336);
    const auto month = static_cast<std::int32_t>(1 + (i / 28) % 12);
    const auto day = static_cast<std::int32_t>(1 + i % 28);
    return year * 10000 + month * 100 + day;
}

std::vector<double> thinned_event_times(const ThetaModel& theta, std::mt19937_64& rng) {
    const double T = theta.length();
    const double peak = 1.0 / theta.min_value();
    std::exponential_distribution<double> gap(peak);
    std::uniform_real_distribution<double> accept(0.0, 1.0);
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(1.2 * T / theta.mean_dt()) + 16);
    for (double t = gap(rng); t <= T; t += gap(rng)) {
        if (accept(rng) * peak < theta.rate(t)) times.push_back(t);
    }
    return times;
}

SynthData gen_seasonal_days(const SynthConfig& cfg) {
    cfg.acf.validate();
    if (cfg.n_days < 1) throw DomainError("n_days must be at least 1");
    const WarpFn warp(cfg.theta);
    SynthData data;
    data.days.resize(cfg.n_days);
    numeric::parallel_for(cfg.n_days, [&](std::size_t d) {
        std::mt19937_64 rng(numeric::splitmix64(cfg.seed ^ numeric::splitmix64(d + 1)));
        SynthDay& day = data.days[d];
        day.date = synthetic_date(d);
        day.t = thinned_event_times(cfg.theta, rng);
        day.tau.resize(day.t.size());
        for (std::size_t i = 0; i < day.t.size(); ++i) day.tau[i] = warp.tau(day.t[i]);

        const auto n = static_cast<Eigen::Index>(day.t.size());
        Eigen::MatrixXd cov(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            cov(i, i) = 1.0;
            for (Eigen::Index j = 0; j < i; ++j) {
                const double lag = day.tau[static_cast<std::size_t>(i)] - day.tau[static_cast<std::size_t>(j)];
                // Coincident warped times are the same instant: full correlation.
                cov(i, j) = lag == 0.0 ? 1.0 : cfg.acf(lag);
            }
        }
        const Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> chol(cov);
        if (chol.info() != Eigen::Success) {
            throw SynthError("covariance of day " + std::to_string(d) + " (date " +
                                 std::to_string(day.date) + ", " + std::to_string(n) +
                                 " events) is not positive definite; lower c or tau_c",
                             d);
        }
        std::normal_distribution<double> normal;
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
        const Eigen::VectorXd x = chol.matrixL() * z;
        day.mark.assign(x.data(), x.data() + n);
    });
    return data;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

struct Moments {
    std::vector<double> sum;
    std::vector<double> sum_sq;
    std::vector<bool> missing;

    explicit Moments(std::size_t n) : sum(n, 0.0), sum_sq(n, 0.0), missing(n, false) {}

    void add(std::size_t k, const std::optional<double>& v) {
        if (!v) {
            missing[k] = true;
            return;
        }
        sum[k] += *v;
        sum_sq[k] += *v * *v;
    }

    double se(std::size_t k, double reps) const {
        if (missing[k] || reps < 2.0) return std::nan("");
        const double mean = sum[k] / reps;
        return std::sqrt(std::max(0.0, (sum_sq[k] - reps * mean * mean) / (reps - 1.0)));
    }
};

// First lag of the row set where |value| falls below `threshold`.
template <typename Get>
double relaxation_lag(const std::vector<ValidationRow>& rows, double threshold, Get get) {
    for (const auto& r : rows) {
        if (r.lag > 0.0 && std::abs(get(r)) < threshold) return r.lag;
    }
    return INFINITY;
}

}  // namespace

ValidationReport validate_relation(const SynthConfig& cfg, const SynthData& data,
                                   const ValidationOptions& options) {
    const ThetaModel& theta = cfg.theta;
    const WarpFn warp(theta);
    const double T = theta.length();

    SlotOptions slots;
    slots.slot_width = options.slot_width > 0.0 ? options.slot_width : theta.mean_dt();
    slots.max_lag = options.max_lag;
    slots.session_length = T;
    slots.time_cell = options.time_cell;

    const MarkSeries clock = data.clock_marks();
    const MarkSeries warped = data.warped_marks();
    SlotOptions uniform = slots;
    uniform.weighting = PairWeighting::TimeUniform;
    const SlottedAcf cy_acc(clock, uniform, true);
    const SlottedAcf plain_acc(clock, slots, true);
    const SlottedAcf cx_acc(warped, slots, true);
    const AcfEstimate cy = cy_acc.estimate();
    const AcfEstimate plain = plain_acc.estimate();
    const AcfEstimate cx = cx_acc.estimate();

    const std::size_t n_slots = cy.lags.size();
    Moments m_cy(n_slots), m_plain(n_slots), m_cx(n_slots), m_diff(n_slots);
    const auto weights = bootstrap_day_weights(data.days.size(), options.bootstrap, options.bootstrap_seed);
    for (const auto& w : weights) {
        const AcfEstimate b_cy = cy_acc.estimate(w);
        const AcfEstimate b_plain = plain_acc.estimate(w);
        const AcfEstimate b_cx = cx_acc.estimate(w);
        for (std::size_t k = 0; k < n_slots; ++k) {
            m_cy.add(k, b_cy.values[k]);
            m_plain.add(k, b_plain.values[k]);
            m_cx.add(k, b_cx.values[k]);
            std::optional<double> d;
            if (b_cy.values[k] && b_cx.values[k]) d = *b_cy.values[k] - *b_cx.values[k];
            m_diff.add(k, d);
        }
    }
    const double reps = static_cast<double>(options.bootstrap);

    const StationaryAcf cx_true = cfg.acf.as_stationary(T);
    const double sign = cfg.acf.family == AcfKind::Family::NegativeExp ? 1.0 : -1.0;
    const double k_sigma = options.relation_sigma;

    ValidationReport report;
    for (std::size_t k = 1; k < n_slots; ++k) {
        const double lag = cy.lags[k];
        const std::uint64_t pairs = std::min(cy.pair_counts[k], cx.pair_counts[k]);
        if (pairs < options.min_pairs || !cy.values[k] || !cx.values[k] || !plain.values[k]) {
            report.notices.push_back("slot at lag " + numeric::sig17(lag) + " dropped: " +
                                     std::to_string(pairs) + " pairs");
            continue;
        }
        ValidationRow row;
        row.lag = lag;
        row.pairs = pairs;
        row.cy = *cy.values[k];
        row.cy_se = m_cy.se(k, reps);
        row.cy_plain = *plain.values[k];
        row.cy_plain_se = m_plain.se(k, reps);
        row.cx = *cx.values[k];
        row.cx_se = m_cx.se(k, reps);
        row.diff_se = m_diff.se(k, reps);
        row.cy_pred = predict_cy(warp, cx_true, lag);
        row.cy_pred_event = predict_cy_event_weighted(warp, cx_true, lag);
        row.cx_true = cx_true(lag);
        row.relation_ok = std::abs(row.cy - row.cy_pred) <= k_sigma * row.cy_se;
        row.plain_relation_ok = std::abs(row.cy_plain - row.cy_pred_event) <= k_sigma * row.cy_plain_se;
        row.cx_ok = std::abs(row.cx - row.cx_true) <= k_sigma * row.cx_se;

        const double violation = sign * (row.cy - row.cx);
        row.direction = violation <= 0.0 ? 0 : (violation <= row.diff_se ? 1 : 2);
        // Exact quantities: allow only quadrature-level noise.
        row.predicted_direction_ok = sign * (row.cy_pred - row.cx_true) <= 1e-9;
        report.rows.push_back(row);
    }

    const auto& rows = report.rows;
    auto all = [&](auto pred) { return !rows.empty() && std::all_of(rows.begin(), rows.end(), pred); };
    report.relation_pass = all([](const ValidationRow& r) { return r.relation_ok; });
    report.cx_pass = all([](const ValidationRow& r) { return r.cx_ok; });
    report.predicted_direction_pass = all([](const ValidationRow& r) { return r.predicted_direction_ok; });
    for (const auto& r : rows) {
        if (r.direction == 1) ++report.soft_violations;
        if (r.direction == 2) ++report.hard_violations;
    }
    report.direction_pass =
        !rows.empty() && report.hard_violations == 0 &&
        static_cast<double>(report.soft_violations) <=
            options.direction_soft_fraction * static_cast<double>(rows.size());

    const double threshold = 0.05 * cfg.acf.amplitude();
    report.memory_lag_cy = relaxation_lag(rows, threshold, [](const ValidationRow& r) { return r.cy_pred; });
    report.memory_lag_cx = relaxation_lag(rows, threshold, [](const ValidationRow& r) { return r.cx_true; });
    report.memory_pass = report.memory_lag_cy >= report.memory_lag_cx;
    return report;
}

Table validation_to_table(const ValidationReport& report) {
    Table t;
    t.command = "validate";
    t.set_param("relation_pass", report.relation_pass ? "1" : "0");
    t.set_param("cx_pass", report.cx_pass ? "1" : "0");
    t.set_param("direction_pass", report.direction_pass ? "1" : "0");
    t.set_param("predicted_direction_pass", report.predicted_direction_pass ? "1" : "0");
    t.set_param("memory_pass", report.memory_pass ? "1" : "0");
    t.set_param("verdict", report.passed() ? "pass" : "fail");
    t.columns = {"lag",     "pairs",      "cy",          "cy_se",         "cy_plain", "cy_plain_se",
                 "cx",      "cx_se",      "diff_se",     "cy_pred",       "cy_pred_event",
                 "cx_true", "relation_ok", "plain_relation_ok", "cx_ok", "direction"};
    for (const auto& r : report.rows) {
        t.add_row({r.lag, static_cast<double>(r.pairs), r.cy, r.cy_se, r.cy_plain, r.cy_plain_se, r.cx,
                   r.cx_se, r.diff_se, r.cy_pred, r.cy_pred_event, r.cx_true,
                   r.relation_ok ? 1.0 : 0.0, r.plain_relation_ok ? 1.0 : 0.0, r.cx_ok ? 1.0 : 0.0,
                   static_cast<double>(r.direction)});
    }
    return t;
}

ValidateConfig read_validate_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", n);
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
            return s;
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    static const char* known[] = {"kind", "t1", "t2", "p", "q", "mean_dt", "T", "n_days", "acf", "c",
                                  "tau_c", "seed", "slot_width", "max_lag", "bootstrap", "time_cell",
                                  "dump", "bootstrap_seed", "min_pairs"};
    for (const auto& [key, value] : kv) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known)) {
            throw ParseError("unknown config key '" + key + "'", 0);
        }
    }
    auto num = [&](const std::string& key, std::optional<double> fallback = std::nullopt) {
        const auto it = kv.find(key);
        if (it == kv.end()) {
            if (fallback) return *fallback;
            throw ParseError("config lacks '" + key + "'", 0);
        }
        return numeric::parse_double(it->second);
    };
    auto count = [&](const std::string& key, double fallback) {
        const double v = num(key, fallback);
        if (!(v >= 0.0) || v != std::floor(v)) throw ParseError("'" + key + "' must be a non-negative integer", 0);
        return static_cast<std::uint64_t>(v);
    };

    ValidateConfig cfg;
    const ThetaKind kind = parse_theta_kind(kv.contains("kind") ? kv["kind"] : "quadratic");
    ThetaShape shape;
    if (kind == ThetaKind::Quadratic) shape = {num("t1"), num("t2")};
    if (kind == ThetaKind::Rational) shape = {num("p"), num("q")};
    cfg.synth.theta = ThetaModel::make(kind, shape, num("mean_dt"), num("T", 25200.0));
    cfg.synth.n_days = count("n_days", 500);
    const std::string acf = kv.contains("acf") ? kv["acf"] : "negexp";
    if (acf == "negexp") {
        cfg.synth.acf = AcfKind::negative_exp(num("c"), num("tau_c"));
    } else if (acf == "posexp") {
        cfg.synth.acf = AcfKind::positive_exp(num("tau_c"));
    } else {
        throw ParseError("acf must be negexp or posexp", 0);
    }
    cfg.synth.acf.validate();
    cfg.synth.seed = count("seed", 1);
    cfg.options.slot_width = num("slot_width", 0.0);
    cfg.options.max_lag = num("max_lag", 600.0);
    cfg.options.bootstrap = count("bootstrap", 200);
    cfg.options.bootstrap_seed = count("bootstrap_seed", 7);
    cfg.options.time_cell = num("time_cell", 300.0);
    cfg.options.min_pairs = count("min_pairs", 100);
    if (kv.contains("dump")) cfg.dump_path = kv["dump"];
    return cfg;
}

}  // namespace tickwarp

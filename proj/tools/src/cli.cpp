#include "tickwarp_cli/cli.hpp"

#include "tickwarp/acf.hpp"
#include "tickwarp/error.hpp"
#include "tickwarp/kernel.hpp"
#include "tickwarp/numeric.hpp"
#include "tickwarp/pattern.hpp"
#include "tickwarp/synth.hpp"
#include "tickwarp/table.hpp"
#include "tickwarp/theta.hpp"
#include "tickwarp/ticks.hpp"
#include "tickwarp/warp.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <unistd.h>

namespace tickwarp::cli {

namespace {

namespace fs = std::filesystem;
using numeric::exact_decimal;

struct Context {
    std::ostream& out;
    std::ostream& err;
    bool json = false;
    std::string timestamp;  // empty with --no-timestamp
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Writes through a temporary file in the target directory, then renames it
// into place so readers never see a partial file. "-" writes to `stdout_`.
void write_output(const std::string& path, std::ostream& stdout_,
                  const std::function<void(std::ostream&)>& body) {
    if (path == "-") {
        body(stdout_);
        stdout_.flush();
        return;
    }
    const fs::path target(path);
    if (fs::exists(target) && !fs::is_regular_file(target)) {
        // Devices and pipes cannot be replaced by a rename.
        std::ofstream f(target, std::ios::binary);
        if (!f) throw Error("cannot open " + path + " for writing");
        body(f);
        return;
    }
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + tmp.string() + " for writing");
        body(f);
        f.flush();
        if (!f) {
            f.close();
            fs::remove(tmp);
            throw Error("write to " + tmp.string() + " failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot rename output into " + path + ": " + ec.message());
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    return f;
}

// Reads from a file, or from stdin for "-".
template <typename Fn>
auto with_input(const std::string& path, Fn&& fn) {
    if (path == "-") return fn(std::cin);
    auto f = open_input(path);
    return fn(f);
}

nlohmann::json table_header_json(const Table& t) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : t.params) params[k] = v;
    return {{"type", "header"}, {"tool", "tickwarp"},  {"version", TICKWARP_VERSION},
            {"command", t.command}, {"params", params}, {"columns", t.columns}};
}

void write_json_table(std::ostream& out, const Table& t, const std::string& timestamp) {
    auto header = table_header_json(t);
    if (!timestamp.empty()) header["generated"] = timestamp;
    out << header.dump() << '\n';
    for (const auto& row : t.rows) {
        nlohmann::json rec = nlohmann::json::object();
        rec["type"] = "row";
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (std::isfinite(row[i])) {
                rec[t.columns[i]] = row[i];
            } else {
                rec[t.columns[i]] = nullptr;
            }
        }
        out << rec.dump() << '\n';
    }
}

// A table goes to its path as text; with --json it is also mirrored as JSON
// Lines on stdout (replacing the text when the path itself is stdout).
void emit_table(Context& ctx, const std::string& path, const Table& t) {
    if (!(ctx.json && path == "-")) {
        write_output(path, ctx.out, [&](std::ostream& o) { write_table(o, t, ctx.timestamp); });
    }
    if (ctx.json) write_json_table(ctx.out, t, ctx.timestamp);
}

void emit_summary(Context& ctx, const std::string& command,
                  const std::vector<std::pair<std::string, std::string>>& fields) {
    ctx.err << command << ":";
    for (const auto& [k, v] : fields) ctx.err << ' ' << k << '=' << v;
    ctx.err << '\n';
    if (ctx.json) {
        nlohmann::json rec = {{"type", "summary"}, {"command", command}};
        for (const auto& [k, v] : fields) rec[k] = v;
        ctx.out << rec.dump() << '\n';
    }
}

std::string header_line(const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& params) {
    Table t;
    t.command = command;
    t.params = params;
    std::ostringstream ss;
    write_table(ss, t);
    return ss.str().substr(0, ss.str().find('\n') + 1);
}

// Session options shared by every command that reads tick files.
struct SessionArgs {
    std::string open = "09:00:00";
    double length = 25200.0;
    std::string calendar;

    void add(CLI::App* app) {
        app->add_option("--open", open, "Session open time of day (hh:mm:ss)")->capture_default_str();
        app->add_option("--length", length, "Session length T in seconds")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app->add_option("--calendar", calendar, "Session calendar file");
    }

    SessionCalendar build() const {
        SessionSpec spec{parse_clock(open), length};
        spec.validate();
        if (calendar.empty()) return SessionCalendar(spec);
        auto f = open_input(calendar);
        return SessionCalendar::read(f, spec);
    }

    void echo(std::vector<std::pair<std::string, std::string>>& params) const {
        params.emplace_back("open", open);
        params.emplace_back("length", exact_decimal(length));
        if (!calendar.empty()) params.emplace_back("calendar", calendar);
    }
};

std::vector<Day> read_canonical(Context& ctx, const std::string& path, const SessionArgs& session) {
    const SessionCalendar calendar = session.build();
    ParseResult r = with_input(path, [&](std::istream& in) {
        return parse_ticks(in, calendar, FormatSpec{}, ParseOptions{true});
    });
    for (const auto& d : r.diagnostics) ctx.err << "warning: " << d.message << '\n';
    if (r.dropped_out_of_session) {
        ctx.err << "warning: " << r.dropped_out_of_session << " rows outside the session dropped\n";
    }
    return std::move(r.days);
}

ThetaModel load_model(const std::string& path) {
    auto f = open_input(path);
    return read_model(f);
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Largest warped lag reached at clock lag dt.
double max_warped_lag(const WarpFn& warp, double dt) {
    double hi = 0.0;
    for (const Interval& b : branch_decomposition(warp, dt)) {
        hi = std::max({hi, warp.delta_tau_unchecked(b.lo, dt), warp.delta_tau_unchecked(b.hi, dt)});
    }
    return hi;
}

// Two numeric columns (warped lag, value); '#' lines and a leading
// non-numeric header row are skipped.
StationaryAcf read_cx_table(const std::string& path) {
    auto f = open_input(path);
    std::vector<double> lags, values;
    std::string line;
    std::size_t n = 0;
    bool seen_data = false;
    while (std::getline(f, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::string a, b;
        ss >> a >> b;
        if (b.empty()) throw ParseError("expected two columns", n);
        try {
            const double lag = numeric::parse_double(a, n);
            const double value = numeric::parse_double(b, n);
            lags.push_back(lag);
            values.push_back(value);
            seen_data = true;
        } catch (const ParseError&) {
            if (seen_data) throw;
        }
    }
    return StationaryAcf::from_table(std::move(lags), std::move(values));
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string input;
    std::string output;
    std::string format;
    SessionArgs session;
    bool fail_fast = false;
};

int cmd_ingest(Context& ctx, const IngestArgs& a) {
    FormatSpec format;
    if (!a.format.empty()) {
        auto f = open_input(a.format);
        format = FormatSpec::read(f);
    }
    const SessionCalendar calendar = a.session.build();
    const ParseResult r = with_input(a.input, [&](std::istream& in) {
        return parse_ticks(in, calendar, format, ParseOptions{a.fail_fast});
    });
    for (const auto& d : r.diagnostics) {
        ctx.err << (d.kind == Diagnostic::Kind::Malformed ? "malformed: " : "reordered: ");
        if (d.line) ctx.err << "line " << d.line << ": ";
        ctx.err << d.message << '\n';
    }
    std::vector<std::pair<std::string, std::string>> params{{"input", a.input}};
    if (!a.format.empty()) params.emplace_back("format", a.format);
    a.session.echo(params);
    write_output(a.output, ctx.out, [&](std::ostream& o) {
        o << header_line("ingest", params);
        if (!ctx.timestamp.empty()) o << "# generated " << ctx.timestamp << '\n';
        write_ticks(o, r.days);
    });
    std::size_t ticks = 0;
    for (const auto& d : r.days) ticks += d.ticks.size();
    std::size_t malformed = 0;
    for (const auto& d : r.diagnostics) malformed += d.kind == Diagnostic::Kind::Malformed;
    emit_summary(ctx, "ingest",
                 {{"rows", std::to_string(r.rows_read)},
                  {"days", std::to_string(r.days.size())},
                  {"ticks", std::to_string(ticks)},
                  {"malformed", std::to_string(malformed)},
                  {"dropped_out_of_session", std::to_string(r.dropped_out_of_session)},
                  {"dropped_closed_day", std::to_string(r.dropped_closed_day)}});
    return 0;
}

struct PatternArgs {
    std::string ticks;
    std::string output = "-";
    std::string normalized;
    double bin_width = 1200.0;
    bool per_day = false;
    SessionArgs session;
};

int cmd_pattern(Context& ctx, const PatternArgs& a) {
    const auto days = read_canonical(ctx, a.ticks, a.session);
    const SessionStats stats = session_stats(days);
    const ReturnsResult returns = compute_returns(days);
    for (const auto& w : returns.warnings) ctx.err << "warning: " << w << '\n';
    const SessionSpec spec{parse_clock(a.session.open), a.session.length};
    const auto averaging = a.per_day ? DayAveraging::PerDay : DayAveraging::Pooled;
    const IntradayPattern p = build_pattern(days, returns.points, a.bin_width, spec, averaging);

    auto decorate = [&](Table t) {
        t.set_param("input", a.ticks);
        t.set_param("averaging", a.per_day ? "per_day" : "pooled");
        t.set_param("mean_dt", exact_decimal(stats.mean_dt));
        t.set_param("n_transactions", std::to_string(stats.n_transactions));
        t.set_param("n_days", std::to_string(stats.n_days));
        return t;
    };
    emit_table(ctx, a.output, decorate(pattern_to_table(p)));
    if (!a.normalized.empty()) emit_table(ctx, a.normalized, decorate(pattern_to_table(normalize_pattern(p))));
    return 0;
}

struct FitArgs {
    std::string pattern;
    std::string kind;
    std::string output = "-";
    std::string theta_table;
    double mean_dt = 0.0;
    int max_iterations = 200;
};

int cmd_fit(Context& ctx, const FitArgs& a) {
    const Table table = with_input(a.pattern, [](std::istream& in) { return read_table(in); });
    const IntradayPattern p = pattern_from_table(table);
    if (p.normalized) throw DataError("fit needs the raw (un-normalized) pattern");
    SessionStats stats;
    stats.mean_dt = a.mean_dt > 0.0 ? a.mean_dt : table.param_double("mean_dt", 0.0);
    if (!(stats.mean_dt > 0.0)) throw DataError("pattern carries no mean_dt; pass --mean-dt");
    SessionSpec spec;
    spec.length = p.length;
    FitOptions options;
    options.max_iterations = a.max_iterations;
    const ThetaKind kind = parse_theta_kind(a.kind);

    FitReport report;
    try {
        report = fit_theta(p, kind, stats, spec, options);
    } catch (const FitError& e) {
        ctx.err << "best so far: objective=" << numeric::sig17(e.best().objective)
                << " iterations=" << e.best().iterations << '\n';
        throw;
    }
    const std::vector<std::pair<std::string, std::string>> params{
        {"pattern", a.pattern}, {"kind", std::string(to_string(kind))}, {"mean_dt", exact_decimal(stats.mean_dt)}};
    write_output(a.output, ctx.out, [&](std::ostream& o) {
        o << header_line("fit", params);
        if (!ctx.timestamp.empty()) o << "# generated " << ctx.timestamp << '\n';
        write_model(o, report.model);
    });
    if (!a.theta_table.empty()) {
        Table t;
        t.command = "fit";
        t.params = params;
        t.columns = {"t_mid", "mean_dt", "theta", "count"};
        for (const auto& b : p.bins) {
            t.add_row({b.t_mid, b.mean_dt.value_or(std::nan("")), report.model.eval(b.t_mid),
                       static_cast<double>(b.count)});
        }
        emit_table(ctx, a.theta_table, t);
    }
    emit_summary(ctx, "fit",
                 {{"kind", std::string(to_string(kind))},
                  {"first", exact_decimal(report.model.shape().first)},
                  {"second", exact_decimal(report.model.shape().second)},
                  {"a", exact_decimal(report.model.a())},
                  {"objective", numeric::sig17(report.objective)},
                  {"residual_norm", numeric::sig17(report.residual_norm)},
                  {"iterations", std::to_string(report.iterations)}});
    return 0;
}

struct WarpArgs {
    std::string model;
    std::string ticks;
    std::string output;
    SessionArgs session;
};

int cmd_warp(Context& ctx, const WarpArgs& a) {
    const WarpFn warp(load_model(a.model));
    const auto days = read_canonical(ctx, a.ticks, a.session);
    const auto warped = warp.warp_ticks(days);
    std::vector<std::pair<std::string, std::string>> params{{"model", a.model}, {"input", a.ticks}};
    a.session.echo(params);
    write_output(a.output, ctx.out, [&](std::ostream& o) {
        o << header_line("warp", params);
        if (!ctx.timestamp.empty()) o << "# generated " << ctx.timestamp << '\n';
        write_ticks(o, warped);
    });
    std::size_t n = 0;
    for (const auto& d : warped) n += d.ticks.size();
    emit_summary(ctx, "warp", {{"days", std::to_string(warped.size())}, {"ticks", std::to_string(n)}});
    return 0;
}

struct AcfArgs {
    std::string ticks;
    std::string output = "-";
    std::string model;
    std::string compare;
    double slot_width = 0.0;
    double max_lag = 600.0;
    std::string transform = "identity";
    std::string marks = "return";
    std::string mean = "global";
    std::string weighting = "pair";
    double time_cell = 300.0;
    std::size_t bootstrap = 0;
    std::uint64_t seed = 7;
    SessionArgs session;
};

int cmd_acf(Context& ctx, const AcfArgs& a) {
    const auto days = read_canonical(ctx, a.ticks, a.session);
    const SessionStats stats = session_stats(days);

    SlotOptions options;
    options.slot_width = a.slot_width > 0.0 ? a.slot_width : stats.mean_dt;
    options.max_lag = a.max_lag;
    options.session_length = a.session.length;
    options.mean = a.mean == "per-day" ? MeanRemoval::PerDay : MeanRemoval::Global;
    options.weighting = a.weighting == "time-uniform" ? PairWeighting::TimeUniform : PairWeighting::Pair;
    options.time_cell = a.time_cell;
    options.validate();
    const auto transform = a.transform == "absolute" ? MarkTransform::Absolute : MarkTransform::Identity;
    const auto kind = a.marks == "velocity" ? MarkKind::Velocity : MarkKind::Return;

    auto run_one = [&](const std::vector<Day>& input, const std::string& clock) {
        const ReturnsResult r = compute_returns(input);
        const MarkSeries marks = make_marks(r.points, transform, kind);
        const SlottedAcf acc(marks, options, a.bootstrap > 0);
        AcfEstimate est = acc.estimate();
        Table t = acf_to_table(est);
        t.set_param("input", a.ticks);
        t.set_param("clock", clock);
        t.set_param("max_lag", exact_decimal(options.max_lag));
        t.set_param("transform", std::string(to_string(transform)));
        t.set_param("marks", std::string(to_string(kind)));
        t.set_param("mean_removal", std::string(to_string(options.mean)));
        t.set_param("weighting", std::string(to_string(options.weighting)));
        if (a.bootstrap > 0) {
            t.set_param("bootstrap", std::to_string(a.bootstrap));
            t.set_param("seed", std::to_string(a.seed));
            const auto se = bootstrap_se(acc, a.bootstrap, a.seed);
            t.columns.push_back("se");
            for (std::size_t k = 0; k < t.rows.size(); ++k) t.rows[k].push_back(se[k]);
        }
        return std::pair{est, t};
    };

    const auto [raw, raw_table] = run_one(days, "clock");
    emit_table(ctx, a.output, raw_table);
    if (!a.model.empty()) {
        const WarpFn warp(load_model(a.model));
        const auto [warped, warped_table] = run_one(warp.warp_ticks(days), "warped");
        const AcfComparison cmp = acf_compare(raw, warped);
        Table t;
        t.command = "acf";
        t.params = warped_table.params;
        t.set_param("clock", "compare");
        t.set_param("model", a.model);
        t.set_param("warped_above", std::to_string(cmp.warped_above));
        t.set_param("warped_below", std::to_string(cmp.warped_below));
        t.columns = {"lag", "clock", "warped", "difference"};
        const double nan = std::nan("");
        for (std::size_t k = 0; k < cmp.lags.size(); ++k) {
            t.add_row({cmp.lags[k], cmp.raw[k].value_or(nan), cmp.warped[k].value_or(nan),
                       cmp.difference[k].value_or(nan)});
        }
        emit_table(ctx, a.compare.empty() ? "-" : a.compare, t);
        emit_summary(ctx, "acf",
                     {{"warped_above", std::to_string(cmp.warped_above)},
                      {"warped_below", std::to_string(cmp.warped_below)},
                      {"equal", std::to_string(cmp.equal)}});
    }
    return 0;
}

struct RhoArgs {
    std::string model;
    std::string output = "-";
    double dt = 0.0;
    std::size_t grid_n = 100000;
    std::size_t cells = 512;
};

int cmd_rho(Context& ctx, const RhoArgs& a) {
    const WarpFn warp(load_model(a.model));
    Table t = lag_distribution_to_table(lag_distribution(warp, a.dt, a.grid_n, a.cells));
    t.set_param("model", a.model);
    t.set_param("grid_n", std::to_string(a.grid_n));
    t.set_param("cells", std::to_string(a.cells));
    emit_table(ctx, a.output, t);
    return 0;
}

struct OmegaArgs {
    std::string model;
    std::string output = "-";
    std::size_t grid = 100;
    double lo = 0.0;
    double hi = 0.0;
    bool linear = false;
};

int cmd_omega(Context& ctx, const OmegaArgs& a) {
    const ThetaModel m = load_model(a.model);
    const WarpFn warp(m);
    const double lo = a.lo > 0.0 ? a.lo : m.mean_dt() / 10.0;
    const double hi = a.hi > 0.0 ? a.hi : m.length() / 4.0;
    if (!(lo < hi && hi < m.length())) throw DomainError("omega grid needs 0 < lo < hi < T");
    const auto dts = a.linear ? numeric::linear_grid(lo, hi, a.grid) : numeric::log_grid(lo, hi, a.grid);
    Table t = omega_to_table(omega_curve(warp, dts));
    t.set_param("model", a.model);
    t.set_param("grid", std::to_string(a.grid));
    t.set_param("lo", exact_decimal(lo));
    t.set_param("hi", exact_decimal(hi));
    t.set_param("spacing", a.linear ? "linear" : "log");
    emit_table(ctx, a.output, t);
    return 0;
}

struct PredictArgs {
    std::string model;
    std::string cx;
    std::string output = "-";
    std::size_t grid = 50;
    double lo = 0.0;
    double hi = 0.0;
};

int cmd_predict(Context& ctx, const PredictArgs& a) {
    const ThetaModel m = load_model(a.model);
    const WarpFn warp(m);
    const StationaryAcf cx = read_cx_table(a.cx);
    const double lo = a.lo > 0.0 ? a.lo : m.mean_dt();
    double hi = a.hi;
    if (!(hi > 0.0)) {
        // Largest clock lag whose warped lags all stay inside the C_X table.
        const double top = m.length() / 4.0;
        hi = max_warped_lag(warp, top) <= cx.max_lag
                 ? top
                 : numeric::find_root([&](double dt) { return max_warped_lag(warp, dt) - cx.max_lag; },
                                      1e-9 * m.length(), top, 1e-9 * m.length());
        hi *= 1.0 - 1e-9;
    }
    if (!(lo < hi && hi < m.length())) throw DomainError("predict grid needs 0 < lo < hi < T; C_X table may be too short");
    const auto dts = numeric::log_grid(lo, hi, a.grid);
    std::vector<double> cy(dts.size()), cy_event(dts.size()), om(dts.size());
    numeric::parallel_for(dts.size(), [&](std::size_t i) {
        cy[i] = predict_cy(warp, cx, dts[i]);
        cy_event[i] = predict_cy_event_weighted(warp, cx, dts[i]);
        om[i] = omega(warp, dts[i]);
    });
    Table t;
    t.command = "predict";
    t.set_param("model", a.model);
    t.set_param("cx", a.cx);
    t.set_param("grid", std::to_string(a.grid));
    t.set_param("lo", exact_decimal(lo));
    t.set_param("hi", exact_decimal(hi));
    t.columns = {"dt", "cy_pred", "cy_pred_event", "cx", "omega"};
    for (std::size_t i = 0; i < dts.size(); ++i) {
        t.add_row({dts[i], cy[i], cy_event[i], dts[i] <= cx.max_lag ? cx(dts[i]) : std::nan(""), om[i]});
    }
    emit_table(ctx, a.output, t);
    return 0;
}

struct ValidateArgs {
    std::string config;
    std::string output = "-";
    std::string dump;
};

int cmd_validate(Context& ctx, const ValidateArgs& a) {
    ValidateConfig cfg = with_input(a.config, [](std::istream& in) { return read_validate_config(in); });
    if (!a.dump.empty()) cfg.dump_path = a.dump;
    const SynthData data = gen_seasonal_days(cfg.synth);
    if (!cfg.dump_path.empty()) {
        const SessionSpec session{9.0 * 3600.0, cfg.synth.theta.length()};
        write_output(cfg.dump_path, ctx.out, [&](std::ostream& o) {
            o << header_line("validate", {{"config", a.config}, {"seed", std::to_string(cfg.synth.seed)}});
            write_ticks(o, data.as_ticks(session));
        });
    }
    const ValidationReport report = validate_relation(cfg.synth, data, cfg.options);
    for (const auto& n : report.notices) ctx.err << "notice: " << n << '\n';
    Table t = validation_to_table(report);
    t.params.insert(t.params.begin(), {{"config", a.config},
                                       {"kind", std::string(to_string(cfg.synth.theta.kind()))},
                                       {"n_days", std::to_string(cfg.synth.n_days)},
                                       {"seed", std::to_string(cfg.synth.seed)}});
    emit_table(ctx, a.output, t);
    auto flag = [](bool b) { return std::string(b ? "pass" : "fail"); };
    emit_summary(ctx, "validate",
                 {{"events", std::to_string(data.n_events())},
                  {"slots", std::to_string(report.rows.size())},
                  {"relation", flag(report.relation_pass)},
                  {"cx_recovery", flag(report.cx_pass)},
                  {"direction", flag(report.direction_pass)},
                  {"predicted_direction", flag(report.predicted_direction_pass)},
                  {"memory", flag(report.memory_pass)},
                  {"verdict", flag(report.passed())}});
    return report.passed() ? 0 : kExitChecksFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Intra-day seasonality, time deformation and slotted autocorrelation of tick data",
                 "tickwarp"};
    app.set_version_flag("--version", std::string(TICKWARP_VERSION));
    app.require_subcommand(1);
    app.fallthrough();

    bool json = false;
    bool no_timestamp = false;
    unsigned threads = 0;
    app.add_flag("--json", json, "Mirror every table as JSON Lines on stdout");
    app.add_flag("--no-timestamp", no_timestamp, "Omit the generation timestamp header line");
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Parse raw transactions into a canonical tick file");
    c_ingest->add_option("--input", ingest.input, "Raw tick file ('-' for stdin)")->required();
    c_ingest->add_option("-o,--output", ingest.output, "Canonical tick file")->required();
    c_ingest->add_option("--format", ingest.format, "Format descriptor (key=value lines)");
    c_ingest->add_flag("--fail-fast", ingest.fail_fast, "Stop at the first malformed row");
    ingest.session.add(c_ingest);

    PatternArgs pattern;
    auto* c_pattern = app.add_subcommand("pattern", "Binned intra-day pattern of intervals and return std");
    c_pattern->add_option("--ticks", pattern.ticks, "Canonical tick file")->required();
    c_pattern->add_option("-o,--output", pattern.output, "Raw pattern table")->capture_default_str();
    c_pattern->add_option("--normalized", pattern.normalized, "Also write the normalized pattern here");
    c_pattern->add_option("--bin-width", pattern.bin_width, "Bin width in seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_pattern->add_flag("--per-day", pattern.per_day, "Average per-day bin means instead of pooling");
    pattern.session.add(c_pattern);

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Fit a parametric activity function to a pattern");
    c_fit->add_option("--pattern", fit.pattern, "Raw pattern table")->required();
    c_fit->add_option("--kind", fit.kind, "quadratic | rational")
        ->required()
        ->transform(CLI::IsMember({"quadratic", "rational"}, CLI::ignore_case));
    c_fit->add_option("-o,--output", fit.output, "Model file")->capture_default_str();
    c_fit->add_option("--theta-table", fit.theta_table, "Write t_mid, observed and fitted theta here");
    c_fit->add_option("--mean-dt", fit.mean_dt, "Mean inter-trade time (default: from the pattern)")
        ->check(CLI::PositiveNumber);
    c_fit->add_option("--max-iterations", fit.max_iterations, "Optimizer iteration cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    WarpArgs warp;
    auto* c_warp = app.add_subcommand("warp", "Replace tick times by warped times tau(t)");
    c_warp->add_option("--model", warp.model, "Model file")->required();
    c_warp->add_option("--ticks", warp.ticks, "Canonical tick file")->required();
    c_warp->add_option("-o,--output", warp.output, "Warped tick file")->required();
    warp.session.add(c_warp);

    AcfArgs acf;
    auto* c_acf = app.add_subcommand("acf", "Slotted autocorrelation of returns");
    c_acf->add_option("--ticks", acf.ticks, "Canonical tick file")->required();
    c_acf->add_option("-o,--output", acf.output, "ACF table")->capture_default_str();
    c_acf->add_option("--model", acf.model, "Also estimate in warped time with this model");
    c_acf->add_option("--compare", acf.compare, "Clock vs warped comparison table (needs --model)");
    c_acf->add_option("--slot-width", acf.slot_width, "Slot width in seconds (default: mean_dt)")
        ->check(CLI::PositiveNumber);
    c_acf->add_option("--max-lag", acf.max_lag, "Largest lag in seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_acf->add_option("--transform", acf.transform, "identity | absolute")
        ->transform(CLI::IsMember({"identity", "absolute"}, CLI::ignore_case))
        ->capture_default_str();
    c_acf->add_option("--marks", acf.marks, "return | velocity")
        ->transform(CLI::IsMember({"return", "velocity"}, CLI::ignore_case))
        ->capture_default_str();
    c_acf->add_option("--mean", acf.mean, "global | per-day")
        ->transform(CLI::IsMember({"global", "per-day"}, CLI::ignore_case))
        ->capture_default_str();
    c_acf->add_option("--weighting", acf.weighting, "pair | time-uniform")
        ->transform(CLI::IsMember({"pair", "time-uniform"}, CLI::ignore_case))
        ->capture_default_str();
    c_acf->add_option("--time-cell", acf.time_cell, "Cell width for time-uniform weighting")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_acf->add_option("--bootstrap", acf.bootstrap, "Day-resampling replicates for an se column (0 = none)")
        ->capture_default_str();
    c_acf->add_option("--seed", acf.seed, "Bootstrap seed")->capture_default_str();
    acf.session.add(c_acf);

    RhoArgs rho;
    auto* c_rho = app.add_subcommand("rho", "Warped-lag distribution at a fixed clock lag");
    c_rho->add_option("--model", rho.model, "Model file")->required();
    c_rho->add_option("--dt", rho.dt, "Clock lag in seconds")->required()->check(CLI::PositiveNumber);
    c_rho->add_option("-o,--output", rho.output, "Density table")->capture_default_str();
    c_rho->add_option("--grid-n", rho.grid_n, "Sample points in t")->capture_default_str();
    c_rho->add_option("--cells", rho.cells, "Histogram cells")->capture_default_str();

    OmegaArgs om;
    auto* c_omega = app.add_subcommand("omega", "Shrinkage function omega(dt)");
    c_omega->add_option("--model", om.model, "Model file")->required();
    c_omega->add_option("-o,--output", om.output, "Omega table")->capture_default_str();
    c_omega->add_option("--grid", om.grid, "Number of dt values")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}))
        ->capture_default_str();
    c_omega->add_option("--lo", om.lo, "Smallest dt (default: mean_dt / 10)")->check(CLI::PositiveNumber);
    c_omega->add_option("--hi", om.hi, "Largest dt (default: T / 4)")->check(CLI::PositiveNumber);
    c_omega->add_flag("--linear", om.linear, "Linear instead of logarithmic spacing");

    PredictArgs pred;
    auto* c_predict = app.add_subcommand("predict", "Clock-time ACF implied by a stationary C_X");
    c_predict->add_option("--model", pred.model, "Model file")->required();
    c_predict->add_option("--cx", pred.cx, "C_X table: warped lag, value")->required();
    c_predict->add_option("-o,--output", pred.output, "Prediction table")->capture_default_str();
    c_predict->add_option("--grid", pred.grid, "Number of dt values")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}))
        ->capture_default_str();
    c_predict->add_option("--lo", pred.lo, "Smallest dt (default: mean_dt)")->check(CLI::PositiveNumber);
    c_predict->add_option("--hi", pred.hi, "Largest dt (default: as far as C_X reaches, at most T / 4)")
        ->check(CLI::PositiveNumber);

    ValidateArgs val;
    auto* c_validate = app.add_subcommand("validate", "Synthetic end-to-end check of the estimator relation");
    c_validate->add_option("--config", val.config, "Config file (key=value)")->required();
    c_validate->add_option("-o,--output", val.output, "Report table")->capture_default_str();
    c_validate->add_option("--dump", val.dump, "Write the generated ticks here");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kExitUsage;
    }
    if (!acf.compare.empty() && acf.model.empty()) {
        err << "--compare requires --model\n";
        return kExitUsage;
    }

    numeric::set_thread_count(threads);
    Context ctx{out, err, json, no_timestamp ? std::string{} : utc_now()};
    try {
        if (c_ingest->parsed()) return cmd_ingest(ctx, ingest);
        if (c_pattern->parsed()) return cmd_pattern(ctx, pattern);
        if (c_fit->parsed()) {
            fit.kind = to_lower(fit.kind);
            return cmd_fit(ctx, fit);
        }
        if (c_warp->parsed()) return cmd_warp(ctx, warp);
        if (c_acf->parsed()) return cmd_acf(ctx, acf);
        if (c_rho->parsed()) return cmd_rho(ctx, rho);
        if (c_omega->parsed()) return cmd_omega(ctx, om);
        if (c_predict->parsed()) return cmd_predict(ctx, pred);
        if (c_validate->parsed()) return cmd_validate(ctx, val);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitModuleError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitModuleError;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace tickwarp::cli

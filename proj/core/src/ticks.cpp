#include "tickwarp/ticks.hpp"

#include "tickwarp/error.hpp"
#include "tickwarp/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace tickwarp {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(trim(field));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

template <typename Int>
bool parse_int(const std::string& s, Int& out) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::int32_t parse_date(const std::string& s, std::size_t line) {
    std::int32_t d = 0;
    if (s.size() != 8 || !parse_int(s, d)) throw ParseError("bad date '" + s + "'", line);
    const int month = d / 100 % 100;
    const int day = d % 100;
    if (month < 1 || month > 12 || day < 1 || day > 31) {
        throw ParseError("bad date '" + s + "'", line);
    }
    return d;
}

}  // namespace

void SessionSpec::validate() const {
    if (!(length > 0.0) || !std::isfinite(length)) {
        throw DomainError("session length must be positive");
    }
    if (!(open_time >= 0.0) || !(open_time < 86400.0)) {
        throw DomainError("session open time must be within the day");
    }
}

double parse_clock(const std::string& text, std::size_t line) {
    const auto first = text.find(':');
    const auto second = first == std::string::npos ? std::string::npos : text.find(':', first + 1);
    if (second == std::string::npos) throw ParseError("bad time '" + text + "'", line);
    int h = 0;
    int m = 0;
    if (!parse_int(text.substr(0, first), h) ||
        !parse_int(text.substr(first + 1, second - first - 1), m) || h < 0 || h > 23 || m < 0 ||
        m > 59) {
        throw ParseError("bad time '" + text + "'", line);
    }
    const std::string sec_text = text.substr(second + 1);
    if (sec_text.empty() || !std::isdigit(static_cast<unsigned char>(sec_text[0]))) {
        throw ParseError("bad time '" + text + "'", line);
    }
    const double s = numeric::parse_double(sec_text, line);
    if (!(s >= 0.0) || !(s < 61.0)) throw ParseError("bad time '" + text + "'", line);
    return h * 3600.0 + m * 60.0 + s;
}

std::string format_clock(double seconds) {
    const double h = std::floor(seconds / 3600.0);
    const double m = std::floor((seconds - h * 3600.0) / 60.0);
    const double s = seconds - h * 3600.0 - m * 60.0;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d:", static_cast<int>(h), static_cast<int>(m));
    std::string out = buf;
    if (s < 10.0) out += '0';
    out += numeric::exact_decimal(s);
    return out;
}

FormatSpec FormatSpec::read(std::istream& in) {
    FormatSpec f;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", n);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto as_int = [&](int& out) {
            if (!parse_int(value, out)) throw ParseError("bad integer for " + key, n);
        };
        if (key == "delimiter") {
            if (value == "tab" || value == "\\t") {
                f.delimiter = '\t';
            } else if (value == "space") {
                f.delimiter = ' ';
            } else if (value.size() == 1) {
                f.delimiter = value[0];
            } else {
                throw ParseError("delimiter must be one character", n);
            }
        } else if (key == "date_col") {
            as_int(f.date_col);
        } else if (key == "time_col") {
            as_int(f.time_col);
        } else if (key == "price_col") {
            as_int(f.price_col);
        } else if (key == "volume_col") {
            as_int(f.volume_col);
        } else if (key == "time_resolution") {
            f.time_resolution = numeric::parse_double(value, n);
            if (!(f.time_resolution > 0.0)) throw ParseError("time_resolution must be > 0", n);
        } else if (key == "skip_lines") {
            int k = 0;
            as_int(k);
            if (k < 0) throw ParseError("skip_lines must be >= 0", n);
            f.skip_lines = static_cast<std::size_t>(k);
        } else {
            throw ParseError("unknown format key '" + key + "'", n);
        }
    }
    return f;
}

SessionCalendar SessionCalendar::read(std::istream& in, SessionSpec fallback) {
    SessionCalendar cal(fallback);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split(line, ',');
        const std::int32_t date = parse_date(fields.at(0), n);
        if (fields.size() == 2 && fields[1] == "closed") {
            cal.close(date);
        } else if (fields.size() == 3) {
            SessionSpec spec{parse_clock(fields[1], n), numeric::parse_double(fields[2], n)};
            try {
                spec.validate();
            } catch (const DomainError& e) {
                throw ParseError(e.what(), n);
            }
            cal.set(date, spec);
        } else {
            throw ParseError("expected 'date,open,length' or 'date,closed'", n);
        }
    }
    return cal;
}

void SessionCalendar::set(std::int32_t date, SessionSpec spec) {
    spec.validate();
    overrides_[date] = spec;
    closed_.erase(date);
}

void SessionCalendar::close(std::int32_t date) { closed_[date] = true; }

bool SessionCalendar::is_open(std::int32_t date) const { return !closed_.contains(date); }

const SessionSpec& SessionCalendar::session(std::int32_t date) const {
    const auto it = overrides_.find(date);
    return it == overrides_.end() ? fallback_ : it->second;
}

ParseResult parse_ticks(std::istream& in, const SessionCalendar& calendar, const FormatSpec& format,
                        const ParseOptions& options) {
    calendar.fallback().validate();
    ParseResult result;
    std::map<std::int32_t, Day> by_date;
    const int needed = std::max({format.date_col, format.time_col, format.price_col, format.volume_col});

    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (n <= format.skip_lines) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        ++result.rows_read;
        try {
            const auto fields = split(line, format.delimiter);
            if (static_cast<int>(fields.size()) <= needed) {
                throw ParseError("expected at least " + std::to_string(needed + 1) + " columns", n);
            }
            const std::int32_t date = parse_date(fields[format.date_col], n);
            const std::string& clock_text = fields[format.time_col];
            const double clock = clock_text.find(':') != std::string::npos
                                     ? parse_clock(clock_text, n)
                                     : numeric::parse_double(clock_text, n) * format.time_resolution;
            const double price = numeric::parse_double(fields[format.price_col], n);
            if (!(price > 0.0) || !std::isfinite(price)) throw ParseError("price must be positive", n);
            std::int64_t volume = 0;
            if (format.volume_col >= 0 && !parse_int(fields[format.volume_col], volume)) {
                throw ParseError("bad volume '" + fields[format.volume_col] + "'", n);
            }
            if (!calendar.is_open(date)) {
                ++result.dropped_closed_day;
                continue;
            }
            const SessionSpec& session = calendar.session(date);
            const double t = clock - session.open_time;
            if (t < 0.0 || t > session.length) {
                ++result.dropped_out_of_session;
                continue;
            }
            Day& day = by_date[date];
            day.date = date;
            day.session = session;
            day.ticks.push_back(Tick{t, price, volume});
        } catch (const ParseError& e) {
            if (options.fail_fast) throw;
            result.diagnostics.push_back({Diagnostic::Kind::Malformed, e.line(), e.what()});
        }
    }

    result.days.reserve(by_date.size());
    for (auto& [date, day] : by_date) {
        const bool sorted = std::is_sorted(day.ticks.begin(), day.ticks.end(),
                                           [](const Tick& a, const Tick& b) { return a.t < b.t; });
        if (!sorted) {
            std::stable_sort(day.ticks.begin(), day.ticks.end(),
                             [](const Tick& a, const Tick& b) { return a.t < b.t; });
            result.diagnostics.push_back({Diagnostic::Kind::Reordered, 0,
                                          "day " + std::to_string(date) +
                                              ": timestamps not monotone, reordered"});
        }
        result.days.push_back(std::move(day));
    }
    return result;
}

void write_ticks(std::ostream& out, const std::vector<Day>& days) {
    for (const Day& day : days) {
        for (const Tick& tick : day.ticks) {
            out << day.date << ',' << format_clock(day.session.open_time + tick.t) << ','
                << numeric::exact_decimal(tick.price) << ',' << tick.volume << '\n';
        }
    }
}

ReturnsResult compute_returns(const std::vector<Day>& days) {
    ReturnsResult result;
    for (const Day& day : days) {
        if (day.ticks.size() < 2) {
            result.warnings.push_back("day " + std::to_string(day.date) + ": fewer than 2 ticks, skipped");
            continue;
        }
        for (std::size_t k = 1; k < day.ticks.size(); ++k) {
            const Tick& prev = day.ticks[k - 1];
            const Tick& cur = day.ticks[k];
            result.points.push_back(
                {day.date, cur.t, std::log(cur.price / prev.price), cur.t - prev.t});
        }
    }
    return result;
}

SessionStats session_stats(const std::vector<Day>& days) {
    SessionStats stats;
    // Summed in date order so the result does not depend on input day order.
    std::vector<std::pair<std::int32_t, double>> spans;
    for (const Day& day : days) {
        if (day.ticks.size() < 2) continue;
        ++stats.n_days;
        stats.n_transactions += day.ticks.size();
        stats.n_intervals += day.ticks.size() - 1;
        spans.emplace_back(day.date, day.ticks.back().t - day.ticks.front().t);
    }
    if (stats.n_days == 0) throw DataError("no data");
    std::sort(spans.begin(), spans.end());
    double total = 0.0;
    for (const auto& [date, span] : spans) total += span;
    stats.mean_dt = total / static_cast<double>(stats.n_intervals);
    if (!(stats.mean_dt > 0.0)) throw DataError("no data: all ticks share one timestamp");
    return stats;
}

}  // namespace tickwarp

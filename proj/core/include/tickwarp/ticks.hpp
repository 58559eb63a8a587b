#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace tickwarp {

/// Trading session: clock time of the open (seconds after midnight) and the
/// session length T in seconds.
struct SessionSpec {
    double open_time = 9.0 * 3600.0;
    double length = 25200.0;

    void validate() const;
};

/// One transaction. t is seconds since the session open.
struct Tick {
    double t = 0.0;
    double price = 0.0;
    std::int64_t volume = 0;

    friend bool operator==(const Tick&, const Tick&) = default;
};

/// All ticks of one trading day, sorted by t.
struct Day {
    std::int32_t date = 0;  ///< yyyymmdd
    SessionSpec session;
    std::vector<Tick> ticks;

    friend bool operator==(const Day& a, const Day& b) {
        return a.date == b.date && a.session.open_time == b.session.open_time &&
               a.session.length == b.session.length && a.ticks == b.ticks;
    }
};

/// Column layout of a delimiter-separated tick file. Columns are zero-based.
struct FormatSpec {
    char delimiter = ',';
    int date_col = 0;
    int time_col = 1;
    int price_col = 2;
    int volume_col = 3;  ///< -1 when absent
    /// Seconds per unit when the time column is a plain number (units since
    /// midnight, e.g. 0.001 for milliseconds). hh:mm:ss[.fff] text is always
    /// read as clock time.
    double time_resolution = 1.0;
    std::size_t skip_lines = 0;

    /// Reads `key=value` lines: delimiter, date_col, time_col, price_col,
    /// volume_col, time_resolution, skip_lines.
    static FormatSpec read(std::istream& in);
};

/// Per-date session overrides. Dates not listed use the default session;
/// dates marked closed are dropped entirely (half days, auction-only days).
class SessionCalendar {
public:
    SessionCalendar() = default;
    explicit SessionCalendar(SessionSpec fallback) : fallback_(fallback) {}

    /// Lines `yyyymmdd,hh:mm:ss,length_seconds` or `yyyymmdd,closed`.
    static SessionCalendar read(std::istream& in, SessionSpec fallback);

    void set(std::int32_t date, SessionSpec spec);
    void close(std::int32_t date);

    bool is_open(std::int32_t date) const;
    const SessionSpec& session(std::int32_t date) const;
    const SessionSpec& fallback() const noexcept { return fallback_; }

private:
    SessionSpec fallback_;
    std::map<std::int32_t, SessionSpec> overrides_;
    std::map<std::int32_t, bool> closed_;
};

struct Diagnostic {
    enum class Kind { Malformed, Reordered };
    Kind kind;
    std::size_t line;  ///< 0 when not tied to a line
    std::string message;
};

struct ParseOptions {
    bool fail_fast = false;  ///< throw ParseError on the first malformed row
};

struct ParseResult {
    std::vector<Day> days;  ///< chronological
    std::vector<Diagnostic> diagnostics;
    std::size_t rows_read = 0;
    std::size_t dropped_out_of_session = 0;
    std::size_t dropped_closed_day = 0;
};

ParseResult parse_ticks(std::istream& in, const SessionCalendar& calendar, const FormatSpec& format,
                        const ParseOptions& options = {});

/// Writes the canonical form: `yyyymmdd,hh:mm:ss[.fff],price,volume`, one
/// row per tick in day order. Reading it back with the default FormatSpec
/// and the same calendar reproduces `days` exactly.
void write_ticks(std::ostream& out, const std::vector<Day>& days);

/// Log return between consecutive ticks of one day.
struct ReturnPoint {
    std::int32_t day = 0;
    double t = 0.0;      ///< time of the later tick
    double value = 0.0;  ///< ln(p_k) - ln(p_{k-1})
    double dt = 0.0;     ///< t_k - t_{k-1}
};

struct ReturnsResult {
    std::vector<ReturnPoint> points;
    std::vector<std::string> warnings;
};

/// N-1 returns per day of N ticks; days with fewer than 2 ticks are skipped
/// with a warning. Returns never span days.
ReturnsResult compute_returns(const std::vector<Day>& days);

struct SessionStats {
    std::size_t n_transactions = 0;
    std::size_t n_intervals = 0;
    std::size_t n_days = 0;  ///< days with at least two ticks
    double mean_dt = 0.0;    ///< pooled mean inter-trade time
};

/// Pooled statistics over all days with at least two ticks. Throws DataError
/// ("no data") when there is none.
SessionStats session_stats(const std::vector<Day>& days);

/// Formats seconds after midnight as hh:mm:ss with the shortest exact
/// fractional part.
std::string format_clock(double seconds);

/// Parses hh:mm:ss[.fff] into seconds after midnight.
double parse_clock(const std::string& text, std::size_t line = 0);

}  // namespace tickwarp

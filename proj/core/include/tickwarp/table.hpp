#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tickwarp {

/// Plot-ready numeric table with a self-describing header.
///
/// Text layout:
///
///     # tickwarp 1.0.0 omega model=m.txt grid=100
///     # generated 2026-10-17T09:00:00Z        (optional)
///     # dt,omega
///     2.4465,0.99986...
///
/// The first header line carries the tool version, the producing command
/// and every parameter as key=value (spaces in values are written as %20).
/// The last header line names the columns. Numbers use 17 significant
/// digits; a missing value is `nan`.
struct Table {
    std::string command;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void set_param(const std::string& key, const std::string& value);
    std::optional<std::string> param(const std::string& key) const;
    double param_double(const std::string& key, double fallback) const;

    /// Column values by name; throws DataError if absent.
    std::vector<double> column(const std::string& name) const;
    void add_row(std::vector<double> row);
};

void write_table(std::ostream& out, const Table& table, const std::string& timestamp = {});
Table read_table(std::istream& in);

}  // namespace tickwarp

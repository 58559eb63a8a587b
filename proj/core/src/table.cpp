#include "tickwarp/table.hpp"

#include "tickwarp/error.hpp"
#include "tickwarp/numeric.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace tickwarp {

namespace {

std::string encode(const std::string& v) {
    std::string out;
    for (char c : v) {
        if (c == ' ') {
            out += "%20";
        } else if (c == '%') {
            out += "%25";
        } else {
            out += c;
        }
    }
    return out;
}

std::string decode(const std::string& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v.compare(i, 3, "%20") == 0) {
            out += ' ';
            i += 2;
        } else if (v.compare(i, 3, "%25") == 0) {
            out += '%';
            i += 2;
        } else {
            out += v[i];
        }
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

}  // namespace

void Table::set_param(const std::string& key, const std::string& value) {
    for (auto& [k, v] : params) {
        if (k == key) {
            v = value;
            return;
        }
    }
    params.emplace_back(key, value);
}

std::optional<std::string> Table::param(const std::string& key) const {
    for (const auto& [k, v] : params) {
        if (k == key) return v;
    }
    return std::nullopt;
}

double Table::param_double(const std::string& key, double fallback) const {
    const auto v = param(key);
    return v ? numeric::parse_double(*v) : fallback;
}

std::vector<double> Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DataError("table has no column '" + name + "'");
    const auto idx = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(idx));
    return out;
}

void Table::add_row(std::vector<double> row) {
    if (row.size() != columns.size()) throw Error("row width does not match table columns");
    rows.push_back(std::move(row));
}

void write_table(std::ostream& out, const Table& table, const std::string& timestamp) {
    out << "# tickwarp " << TICKWARP_VERSION << ' ' << table.command;
    for (const auto& [k, v] : table.params) out << ' ' << k << '=' << encode(v);
    out << '\n';
    if (!timestamp.empty()) out << "# generated " << timestamp << '\n';
    out << "# ";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out << (i ? "," : "") << table.columns[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << numeric::sig17(row[i]);
        out << '\n';
    }
}

Table read_table(std::istream& in) {
    Table table;
    std::vector<std::string> header;
    std::string line;
    std::size_t n = 0;
    bool in_header = true;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!in_header) throw ParseError("comment line inside table body", n);
            header.push_back(line.substr(line.find_first_not_of("# ") == std::string::npos
                                             ? line.size()
                                             : line.find_first_not_of("# ")));
            continue;
        }
        if (in_header) {
            in_header = false;
            if (header.empty()) throw ParseError("table has no header", n);
            table.columns = split_csv(header.back());
        }
        const auto fields = split_csv(line);
        if (fields.size() != table.columns.size()) {
            throw ParseError("expected " + std::to_string(table.columns.size()) + " fields", n);
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(numeric::parse_double(f, n));
        table.rows.push_back(std::move(row));
    }
    if (in_header) {
        if (header.empty()) throw ParseError("empty table", 0);
        table.columns = split_csv(header.back());
    }
    if (!header.empty() && header.front().rfind("tickwarp ", 0) == 0) {
        std::istringstream ss(header.front());
        std::string tok;
        ss >> tok >> tok;  // "tickwarp", version
        ss >> table.command;
        while (ss >> tok) {
            const auto eq = tok.find('=');
            if (eq != std::string::npos) table.params.emplace_back(tok.substr(0, eq), decode(tok.substr(eq + 1)));
        }
    }
    return table;
}

}  // namespace tickwarp

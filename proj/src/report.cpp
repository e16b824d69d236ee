#include "unim/report.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

#include "unim/common.hpp"

namespace unim::report {

namespace {

const std::vector<std::string>& column_names() {
    static const std::vector<std::string> names = {
        "group", "n",       "tau",      "sc",      "gq",
        "sqcs_abs", "sqcs_rel", "sts_abs", "sts_rel", "les_abs",
        "les_rel",  "hc",       "sh",      "ics_abs", "ics_rel"};
    return names;
}

bool known_dimension(const std::string& dim) {
    return dim == "field" || dim == "domain" || dim == "difficulty" ||
           dim == "capability";
}

// Group values for one record along one dimension. Capability is the only
// dimension that can yield several values (or none).
std::vector<std::string> group_values(const EvalRecord& record, const std::string& dim) {
    if (dim == "field") return {dataset::field_name(record.field)};
    if (dim == "domain") return {record.domain};
    if (dim == "difficulty") return {taxonomy::difficulty_name(record.difficulty)};
    return record.capabilities;
}

// Canonical row order within a dimension.
std::vector<std::string> ordered_keys(const std::string& dim,
                                      const std::map<std::string, std::vector<size_t>>& groups) {
    std::vector<std::string> keys;
    if (dim == "field") {
        for (const char* k : {"natural_science", "social_science", "general_area"}) {
            if (groups.count(k)) keys.push_back(k);
        }
        return keys;
    }
    if (dim == "difficulty") {
        for (const char* k : {"easy", "medium", "hard"}) {
            if (groups.count(k)) keys.push_back(k);
        }
        return keys;
    }
    if (dim == "capability") {
        for (int i = 1; i <= 10; ++i) {
            std::string k = "C" + std::to_string(i);
            if (groups.count(k)) keys.push_back(k);
        }
        return keys;
    }
    for (const auto& [k, _] : groups) keys.push_back(k);  // already sorted
    return keys;
}

ReportRow build_row(const std::string& group, const std::vector<EvalRecord>& records,
                    const std::vector<size_t>& members) {
    ReportRow row;
    row.group = group;
    row.n = static_cast<int>(members.size());

    int supported = 0;
    for (size_t i : members) {
        if (records[i].supported) ++supported;
    }
    row.tau = row.n > 0 ? static_cast<double>(supported) / row.n : 0.0;

    // Mean of a judged metric over supported records where it is present.
    auto judged_mean = [&](auto getter) -> std::optional<double> {
        double sum = 0.0;
        int count = 0;
        for (size_t i : members) {
            if (!records[i].supported) continue;
            const std::optional<double>& v = getter(records[i]);
            if (!v) continue;
            sum += *v;
            ++count;
        }
        if (count == 0) return std::nullopt;
        return sum / count;
    };
    // Structural means cover every supported record, judge-complete or not.
    auto structural_mean = [&](auto getter) -> std::optional<double> {
        double sum = 0.0;
        int count = 0;
        for (size_t i : members) {
            if (!records[i].supported) continue;
            sum += getter(records[i]);
            ++count;
        }
        if (count == 0) return std::nullopt;
        return sum / count;
    };
    auto rel = [&](const std::optional<double>& abs) -> std::optional<double> {
        if (!abs) return std::nullopt;
        return row.tau * *abs;
    };

    row.sc = judged_mean([](const EvalRecord& r) -> const std::optional<double>& { return r.sc; });
    row.gq = judged_mean([](const EvalRecord& r) -> const std::optional<double>& { return r.gq; });
    row.sqcs_abs =
        judged_mean([](const EvalRecord& r) -> const std::optional<double>& { return r.sqcs; });
    row.hc = judged_mean([](const EvalRecord& r) -> const std::optional<double>& { return r.hc; });
    row.sh = judged_mean([](const EvalRecord& r) -> const std::optional<double>& { return r.sh; });
    row.ics_abs =
        judged_mean([](const EvalRecord& r) -> const std::optional<double>& { return r.ics; });
    row.sts_abs = structural_mean([](const EvalRecord& r) { return r.sts; });
    row.les_abs = structural_mean([](const EvalRecord& r) { return r.les; });

    row.sqcs_rel = rel(row.sqcs_abs);
    row.sts_rel = rel(row.sts_abs);
    row.les_rel = rel(row.les_abs);
    row.ics_rel = rel(row.ics_abs);
    return row;
}

std::string format_full(double value) {
    std::ostringstream out;
    out << std::setprecision(17) << value;
    return out.str();
}

std::string format_opt(const std::optional<double>& value) {
    return value ? format_full(*value) : "";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::optional<double> parse_opt(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    return std::stod(cell);
}

}  // namespace

AggregateReport aggregate(const std::vector<EvalRecord>& records,
                          const std::vector<std::string>& group_by) {
    for (const auto& dim : group_by) {
        if (!known_dimension(dim)) {
            throw ConfigError("unknown group-by dimension '" + dim +
                              "' (expected field, domain, difficulty, or capability)");
        }
    }

    AggregateReport report;
    if (records.empty()) return report;

    std::vector<size_t> everyone(records.size());
    for (size_t i = 0; i < records.size(); ++i) everyone[i] = i;
    report.rows.push_back(build_row("all", records, everyone));

    for (const auto& dim : group_by) {
        std::map<std::string, std::vector<size_t>> groups;
        for (size_t i = 0; i < records.size(); ++i) {
            for (const auto& value : group_values(records[i], dim)) {
                groups[value].push_back(i);
            }
        }
        for (const auto& key : ordered_keys(dim, groups)) {
            report.rows.push_back(build_row(dim + "=" + key, records, groups.at(key)));
        }
    }
    return report;
}

std::string render_machine(const AggregateReport& report) {
    std::ostringstream out;
    const auto& names = column_names();
    for (size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out << ",";
        out << names[i];
    }
    out << "\n";
    for (const auto& row : report.rows) {
        std::string group = row.group;
        std::replace(group.begin(), group.end(), ',', ';');
        out << group << "," << row.n << "," << format_full(row.tau) << ","
            << format_opt(row.sc) << "," << format_opt(row.gq) << ","
            << format_opt(row.sqcs_abs) << "," << format_opt(row.sqcs_rel) << ","
            << format_opt(row.sts_abs) << "," << format_opt(row.sts_rel) << ","
            << format_opt(row.les_abs) << "," << format_opt(row.les_rel) << ","
            << format_opt(row.hc) << "," << format_opt(row.sh) << ","
            << format_opt(row.ics_abs) << "," << format_opt(row.ics_rel) << "\n";
    }
    return out.str();
}

AggregateReport parse_machine(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw IngestError("machine report is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::ostringstream expected;
    const auto& names = column_names();
    for (size_t i = 0; i < names.size(); ++i) {
        if (i > 0) expected << ",";
        expected << names[i];
    }
    if (line != expected.str()) {
        throw IngestError("machine report header mismatch: " + line);
    }

    AggregateReport report;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != names.size()) {
            throw IngestError("machine report line " + std::to_string(line_no) +
                              ": expected " + std::to_string(names.size()) + " cells, got " +
                              std::to_string(cells.size()));
        }
        ReportRow row;
        try {
            row.group = cells[0];
            row.n = std::stoi(cells[1]);
            row.tau = std::stod(cells[2]);
            row.sc = parse_opt(cells[3]);
            row.gq = parse_opt(cells[4]);
            row.sqcs_abs = parse_opt(cells[5]);
            row.sqcs_rel = parse_opt(cells[6]);
            row.sts_abs = parse_opt(cells[7]);
            row.sts_rel = parse_opt(cells[8]);
            row.les_abs = parse_opt(cells[9]);
            row.les_rel = parse_opt(cells[10]);
            row.hc = parse_opt(cells[11]);
            row.sh = parse_opt(cells[12]);
            row.ics_abs = parse_opt(cells[13]);
            row.ics_rel = parse_opt(cells[14]);
        } catch (const std::exception& e) {
            throw IngestError("machine report line " + std::to_string(line_no) + ": " +
                              e.what());
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string percent_one_decimal(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value * 100.0);
    return buf;
}

std::string render_table(const AggregateReport& report) {
    const std::vector<std::string> headers = {
        "GROUP", "N",       "TAU",     "SC",      "GQ",
        "SQCS",  "SQCS_R",  "STS",     "STS_R",   "LES",
        "LES_R", "HC",      "SH",      "ICS",     "ICS_R"};

    auto cell = [](const std::optional<double>& v) {
        return v ? percent_one_decimal(*v) : std::string("-");
    };

    std::vector<std::vector<std::string>> rows;
    for (const auto& row : report.rows) {
        rows.push_back({row.group, std::to_string(row.n), percent_one_decimal(row.tau),
                        cell(row.sc), cell(row.gq), cell(row.sqcs_abs),
                        cell(row.sqcs_rel), cell(row.sts_abs), cell(row.sts_rel),
                        cell(row.les_abs), cell(row.les_rel), cell(row.hc), cell(row.sh),
                        cell(row.ics_abs), cell(row.ics_rel)});
    }

    std::vector<size_t> widths(headers.size());
    for (size_t c = 0; c < headers.size(); ++c) widths[c] = headers[c].size();
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }

    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out << "  ";
            if (c == 0) {
                out << std::left << std::setw(static_cast<int>(widths[c])) << row[c];
            } else {
                out << std::right << std::setw(static_cast<int>(widths[c])) << row[c];
            }
        }
        out << "\n";
    };
    emit(headers);
    std::vector<std::string> rule;
    for (size_t c = 0; c < headers.size(); ++c) rule.push_back(std::string(widths[c], '-'));
    emit(rule);
    for (const auto& row : rows) emit(row);
    return out.str();
}

}  // namespace unim::report

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unim/dataset.hpp"
#include "unim/quality.hpp"
#include "unim/taxonomy.hpp"

namespace unim::report {

// Per-instance evaluation outcome. Structural scores are always present;
// judged metrics are absent when the judge backend failed for this instance
// (judge_incomplete) or when the instance is unsupported and judging was
// skipped. Composites exist exactly when both inputs do.
struct EvalRecord {
    std::string instance_id;
    dataset::Field field = dataset::Field::GeneralArea;
    std::string domain;
    taxonomy::Difficulty difficulty = taxonomy::Difficulty::Easy;
    std::vector<std::string> capabilities;

    bool supported = false;
    bool judge_incomplete = false;

    double sts = 0.0;
    double les = 0.0;
    std::optional<double> sc, gq, sqcs, hc, sh, ics;

    std::vector<quality::QualityItem> items;  // deterministic scores survive
                                              // judge failures
    std::vector<std::string> notes;
};

// One aggregated row. Absolute means run over the supported records of the
// group (judged metrics additionally require the metric to be present);
// relativized columns are tau times the absolute column.
struct ReportRow {
    std::string group;  // "all", "field=natural_science", "capability=C3", ...
    int n = 0;          // records in the group, supported or not
    double tau = 0.0;   // supported / n
    std::optional<double> sc, gq;
    std::optional<double> sqcs_abs, sqcs_rel;
    std::optional<double> sts_abs, sts_rel;
    std::optional<double> les_abs, les_rel;
    std::optional<double> hc, sh;
    std::optional<double> ics_abs, ics_rel;
};

struct AggregateReport {
    std::vector<ReportRow> rows;
};

// Valid group_by dimensions: field, domain, difficulty, capability. The
// overall row ("all") always leads. Capability grouping counts an instance
// once per capability it is tagged with. Throws ConfigError on unknown keys.
AggregateReport aggregate(const std::vector<EvalRecord>& records,
                          const std::vector<std::string>& group_by);

// Machine format: CSV, fixed column order, full-precision floats, absent
// metrics as empty cells. Re-parsing reproduces the in-memory report.
std::string render_machine(const AggregateReport& report);
AggregateReport parse_machine(const std::string& csv);

// Human format: aligned table, metric values in percent at one decimal.
std::string render_table(const AggregateReport& report);

// Percent rendering used by the table format: 0.111 -> "11.1".
std::string percent_one_decimal(double value);

}  // namespace unim::report

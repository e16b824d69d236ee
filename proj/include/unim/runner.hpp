#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "unim/compose.hpp"
#include "unim/dataset.hpp"
#include "unim/judge.hpp"
#include "unim/report.hpp"

namespace unim::runner {

inline constexpr const char* kToolVersion = "unim-eval 1.0.0";

// Which input modalities the evaluated model can accept. Text is always
// supported and never listed.
struct SupportProfile {
    std::string model_id = "unknown";
    std::set<seq::Modality> modalities;  // non-text modalities
};

// True iff every non-text modality appearing in the instance input is in the
// profile.
bool is_supported(const dataset::Instance& instance, const SupportProfile& profile);

struct RunConfig {
    std::string dataset_root;
    std::string responses_path;
    SupportProfile support;  // defaults to all six modalities
    compose::MetricWeights weights;

    bool mock_judge = true;
    uint64_t seed = 0;                // mock determinism seed
    judge::BackendConfig backend;     // live judge/captioner settings
    bool threed_via_render = false;

    std::vector<std::string> group_by = {"field"};
    std::map<std::string, std::string> filters;  // field/domain/difficulty
    int jobs = 1;

    std::string out_dir = "out";
    std::string rubric_dir = "data/rubrics";
    std::string niqe_model_path = "data/niqe/niqe_model_v1.txt";
    bool caption_cache = true;  // cache captions under <out_dir>/caption_cache
};

// Fails fast on contradictory or out-of-range settings.
void validate_config(const RunConfig& config);

struct StageTimings {
    double ingest_ms = 0.0;
    double eval_ms = 0.0;
    double aggregate_ms = 0.0;
    double emit_ms = 0.0;
};

struct RunOutcome {
    std::vector<report::EvalRecord> records;  // instance-file order
    report::AggregateReport report;
    dataset::IngestReport ingest;

    int instances_total = 0;   // ingested instances passing the filters
    int responses_total = 0;
    int joined = 0;
    int supported = 0;         // sum of is_supported over counted instances
    int judge_incomplete = 0;

    StageTimings timings;
    double wall_ms = 0.0;
};

// Runs the full pipeline: ingest, join, per-instance evaluation (parallel
// across instances, deterministic regardless of the job count), aggregation.
// Throws ConfigError/IngestError on hard failures; per-instance judge
// failures only flag the affected records.
RunOutcome run_eval(const RunConfig& config);

// Writes report.csv (machine), report.txt (table), records.jsonl, and
// manifest.json into the output directory. All writes are atomic.
void write_outputs(const RunConfig& config, const RunOutcome& outcome);

}  // namespace unim::runner

#include "unim/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "unim/audio.hpp"
#include "unim/image.hpp"
#include "unim/structure.hpp"
#include "unim/threed.hpp"

namespace unim::runner {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_supported(const dataset::Instance& instance, const SupportProfile& profile) {
    for (auto m : seq::modality_counts(instance.input).present()) {
        if (!profile.modalities.count(m)) return false;
    }
    return true;
}

void validate_config(const RunConfig& config) {
    if (config.dataset_root.empty()) throw ConfigError("dataset root is required");
    if (config.responses_path.empty()) throw ConfigError("responses path is required");
    if (config.jobs < 1) throw ConfigError("jobs must be >= 1");
    if (config.weights.eta_sqcs < 0.0 || config.weights.eta_sqcs > 1.0) {
        throw ConfigError("eta-sqcs must lie in [0, 1]");
    }
    if (config.weights.eta_ics < 0.0 || config.weights.eta_ics > 1.0) {
        throw ConfigError("eta-ics must lie in [0, 1]");
    }
    if (config.mock_judge && !config.backend.endpoint.empty()) {
        throw ConfigError("mock judge and a live endpoint are mutually exclusive");
    }
    if (!config.mock_judge && config.backend.endpoint.empty()) {
        throw ConfigError("live judge requires --endpoint");
    }
    for (const auto& [key, value] : config.filters) {
        if (key == "field") {
            if (!dataset::field_from_name(value)) {
                throw ConfigError("filter field=" + value + " names no known field");
            }
        } else if (key == "domain") {
            if (!dataset::domain_registry().count(value)) {
                throw ConfigError("filter domain=" + value + " names no known domain");
            }
        } else if (key == "difficulty") {
            if (!taxonomy::difficulty_from_name(value)) {
                throw ConfigError("filter difficulty=" + value + " names no difficulty");
            }
        } else {
            throw ConfigError("unknown filter key '" + key +
                              "' (expected field, domain, or difficulty)");
        }
    }
    for (const auto& dim : config.group_by) {
        if (dim != "field" && dim != "domain" && dim != "difficulty" &&
            dim != "capability") {
            throw ConfigError("unknown group-by dimension '" + dim + "'");
        }
    }
}

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start)
        .count();
}

bool passes_filters(const dataset::Instance& inst,
                    const std::map<std::string, std::string>& filters) {
    for (const auto& [key, value] : filters) {
        if (key == "field" && dataset::field_name(inst.field) != value) return false;
        if (key == "domain" && inst.domain != value) return false;
        if (key == "difficulty" && taxonomy::difficulty_name(inst.difficulty) != value) {
            return false;
        }
    }
    return true;
}

std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Everything the per-instance evaluation needs, shared read-only across the
// worker threads.
struct EvalContext {
    const RunConfig* config = nullptr;
    const judge::RubricSet* rubrics = nullptr;
    judge::Captioner* captioner = nullptr;
    judge::TextBackend* judge_backend = nullptr;
    judge::TextBackend* ocr_backend = nullptr;
    const image::NiqeModel* niqe = nullptr;
    audio::AudioQualityConfig audio_config;
    threed::ThreeDQualityConfig threed_config;
};

// Scores one deterministic asset item; never throws.
quality::QualityItem deterministic_item(const EvalContext& ctx, const std::string& key,
                                        seq::Modality modality, const std::string& path) {
    quality::QualityItem item{key, modality, 0.0, false, ""};
    try {
        switch (modality) {
            case seq::Modality::Image: {
                auto result = image::image_quality_file(path, *ctx.niqe);
                item.score = result.score;
                item.note = "niqe";
                break;
            }
            case seq::Modality::Audio: {
                auto result = audio::audio_quality_file(path, ctx.audio_config);
                item.score = result.score;
                item.note = "audio pipeline";
                break;
            }
            case seq::Modality::ThreeD: {
                auto result = threed::threed_quality_file(path, ctx.threed_config);
                item.score = result.final_score;
                item.note = "nr3d-q";
                break;
            }
            default:
                item.note = "no deterministic metric";
                break;
        }
    } catch (const Error& e) {
        item.score = 0.0;
        item.note = std::string("unscorable: ") + e.what();
    }
    return item;
}

report::EvalRecord evaluate_pair(const EvalContext& ctx, const dataset::Instance& inst,
                                 const dataset::ModelResponse& resp) {
    const RunConfig& config = *ctx.config;
    report::EvalRecord record;
    record.instance_id = inst.id;
    record.field = inst.field;
    record.domain = inst.domain;
    record.difficulty = inst.difficulty;
    record.capabilities = inst.capabilities;

    for (const auto& violation : seq::validate_uniqueness(resp.output)) {
        record.notes.push_back("response uniqueness: " + violation.message);
    }

    auto breakdown = structure::score_structure(inst.ground_truth, resp.output);
    record.sts = breakdown.strict;
    record.les = breakdown.lenient;

    record.supported = is_supported(inst, config.support);
    if (!record.supported) {
        record.notes.push_back("unsupported input modality; judged metrics skipped");
        return record;
    }

    // Input and ground truth are transcribed first: their captions feed the
    // semantic-correctness and coherence prompts. Their assets were validated
    // at ingest, so failures here are backend failures.
    auto input_t = ctx.captioner->transcribe(inst.input, inst.input_assets,
                                             inst.question_raw);
    auto gt_t = ctx.captioner->transcribe(inst.ground_truth, inst.gt_assets,
                                          inst.question_raw);
    auto resp_t = ctx.captioner->transcribe(resp.output, resp.assets, inst.question_raw);
    bool reference_side_ok = input_t.complete && gt_t.complete;
    if (!reference_side_ok) {
        record.judge_incomplete = true;
        for (const auto& e : input_t.errors) record.notes.push_back("input caption: " + e);
        for (const auto& e : gt_t.errors) record.notes.push_back("gt caption: " + e);
    }
    for (const auto& e : resp_t.errors) record.notes.push_back("response caption: " + e);

    // Generation-quality items: the text body plus one item per emitted tag.
    bool judged_item_failed = false;
    std::string text_body = trimmed(resp.output.text_content());
    if (!text_body.empty()) {
        quality::QualityItem item{"text", seq::Modality::Text, 0.0, true, "judged text"};
        try {
            item.score = judge::judged_quality(seq::Modality::Text, text_body, {},
                                               *ctx.rubrics, *ctx.judge_backend);
        } catch (const judge::BackendError& e) {
            judged_item_failed = true;
            record.notes.push_back("text gq: " + std::string(e.what()));
        }
        record.items.push_back(std::move(item));
    }
    for (const auto& tag : resp.output.tags()) {
        std::string key = judge::tag_key(tag);
        auto asset = resp.assets.find(key);
        if (asset == resp.assets.end() || !fs::exists(asset->second)) {
            record.items.push_back({key, tag.modality, 0.0, false, "missing asset"});
            continue;
        }
        const std::string& path = asset->second;
        switch (tag.modality) {
            case seq::Modality::Image:
            case seq::Modality::Audio:
            case seq::Modality::ThreeD:
                record.items.push_back(deterministic_item(ctx, key, tag.modality, path));
                break;
            case seq::Modality::Code: {
                quality::QualityItem item{key, tag.modality, 0.0, true, "judged code"};
                try {
                    std::ifstream in(path, std::ios::binary);
                    std::ostringstream buf;
                    buf << in.rdbuf();
                    item.score = judge::judged_quality(seq::Modality::Code, buf.str(), {},
                                                       *ctx.rubrics, *ctx.judge_backend);
                } catch (const judge::BackendError& e) {
                    judged_item_failed = true;
                    record.notes.push_back(key + " gq: " + std::string(e.what()));
                }
                record.items.push_back(std::move(item));
                break;
            }
            case seq::Modality::Document: {
                quality::QualityItem item{key, tag.modality, 0.0, true, "judged document"};
                try {
                    auto table = judge::ocr_to_markdown_table(path, ctx.ocr_backend);
                    item.score = judge::judged_quality(seq::Modality::Document,
                                                       table.markdown, table.hints,
                                                       *ctx.rubrics, *ctx.judge_backend);
                } catch (const judge::BackendError& e) {
                    judged_item_failed = true;
                    record.notes.push_back(key + " gq: " + std::string(e.what()));
                } catch (const Error& e) {
                    item.score = 0.0;
                    item.note = std::string("unscorable: ") + e.what();
                }
                record.items.push_back(std::move(item));
                break;
            }
            case seq::Modality::Video: {
                // No deterministic video metric exists; the caption of the
                // clip is judged with the text rubric instead.
                quality::QualityItem item{key, tag.modality, 0.0, true,
                                          "judged via caption"};
                try {
                    std::string caption =
                        ctx.captioner->caption_asset(tag, path, inst.question_raw);
                    item.score = judge::judged_quality(seq::Modality::Text, caption, {},
                                                       *ctx.rubrics, *ctx.judge_backend);
                } catch (const judge::BackendError& e) {
                    judged_item_failed = true;
                    record.notes.push_back(key + " gq: " + std::string(e.what()));
                }
                record.items.push_back(std::move(item));
                break;
            }
            default:
                break;
        }
    }
    if (judged_item_failed) {
        record.judge_incomplete = true;
    } else if (record.items.empty()) {
        record.gq = 0.0;
        record.notes.push_back("empty response: gq defined as 0");
    } else {
        record.gq = quality::instance_gq(record.items);
    }

    if (reference_side_ok) {
        try {
            record.sc = judge::semantic_correctness(resp_t, gt_t, input_t.flattened,
                                                    ctx.rubrics->sc, *ctx.judge_backend);
        } catch (const judge::BackendError& e) {
            record.judge_incomplete = true;
            record.notes.push_back("sc: " + std::string(e.what()));
        }
        try {
            auto coherence = judge::coherence_scores(input_t.flattened, resp_t,
                                                     *ctx.rubrics, *ctx.judge_backend);
            record.hc = coherence.hc;
            record.sh = coherence.sh;
        } catch (const judge::BackendError& e) {
            record.judge_incomplete = true;
            record.notes.push_back("coherence: " + std::string(e.what()));
        }
    }

    if (record.sc && record.gq) {
        record.sqcs = compose::sqcs(*record.sc, *record.gq, config.weights.eta_sqcs);
    }
    if (record.hc && record.sh) {
        record.ics = compose::ics(*record.hc, *record.sh, config.weights.eta_ics);
    }
    return record;
}

json record_to_json(const report::EvalRecord& record) {
    json items = json::array();
    for (const auto& item : record.items) {
        items.push_back({{"id", item.item_id},
                         {"modality", seq::modality_name(item.modality)},
                         {"score", item.score},
                         {"judged", item.judged},
                         {"note", item.note}});
    }
    json doc = {{"instance_id", record.instance_id},
                {"field", dataset::field_name(record.field)},
                {"domain", record.domain},
                {"difficulty", taxonomy::difficulty_name(record.difficulty)},
                {"capabilities", record.capabilities},
                {"supported", record.supported},
                {"judge_incomplete", record.judge_incomplete},
                {"sts", record.sts},
                {"les", record.les},
                {"items", items},
                {"notes", record.notes}};
    auto put = [&doc](const char* key, const std::optional<double>& v) {
        if (v) doc[key] = *v;
    };
    put("sc", record.sc);
    put("gq", record.gq);
    put("sqcs", record.sqcs);
    put("hc", record.hc);
    put("sh", record.sh);
    put("ics", record.ics);
    return doc;
}

}  // namespace

RunOutcome run_eval(const RunConfig& config) {
    validate_config(config);
    auto wall_start = std::chrono::steady_clock::now();

    RunOutcome outcome;
    auto stage_start = wall_start;
    auto instances = dataset::load_instances(config.dataset_root, &outcome.ingest.warnings);
    auto responses = dataset::load_responses(config.responses_path,
                                             &outcome.ingest.warnings);
    auto pairs = dataset::join_pairs(instances, responses, outcome.ingest);
    outcome.responses_total = static_cast<int>(responses.size());

    std::vector<dataset::JoinedPair> selected;
    for (const auto& pair : pairs) {
        if (passes_filters(*pair.instance, config.filters)) selected.push_back(pair);
    }
    for (const auto& inst : instances) {
        if (!passes_filters(inst, config.filters)) continue;
        ++outcome.instances_total;
        if (is_supported(inst, config.support)) ++outcome.supported;
    }
    outcome.joined = static_cast<int>(selected.size());
    outcome.timings.ingest_ms = ms_since(stage_start);

    // Fail fast on configuration problems before any judging starts.
    judge::RubricSet rubrics = judge::load_rubrics(config.rubric_dir);
    image::NiqeModel niqe;
    try {
        niqe = image::load_niqe_model(config.niqe_model_path);
    } catch (const Error& e) {
        throw ConfigError(std::string("cannot load niqe model: ") + e.what());
    }

    std::shared_ptr<judge::TextBackend> shared_backend;
    if (config.mock_judge) {
        shared_backend = std::make_shared<judge::MockBackend>(config.seed);
    } else {
        shared_backend = std::make_shared<judge::HttpBackend>(config.backend);
    }
    judge::BackendSet backends;
    backends.general = shared_backend;
    backends.omni = shared_backend;
    backends.pointcloud = shared_backend;

    judge::CaptionerConfig captioner_config;
    if (config.caption_cache && !config.out_dir.empty()) {
        captioner_config.cache_dir = (fs::path(config.out_dir) / "caption_cache").string();
    }
    captioner_config.threed_via_render = config.threed_via_render;
    judge::Captioner captioner(backends, captioner_config);

    EvalContext ctx;
    ctx.config = &config;
    ctx.rubrics = &rubrics;
    ctx.captioner = &captioner;
    ctx.judge_backend = shared_backend.get();
    ctx.ocr_backend = shared_backend.get();
    ctx.niqe = &niqe;

    stage_start = std::chrono::steady_clock::now();
    outcome.records.resize(selected.size());
    std::atomic<size_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            size_t index = cursor.fetch_add(1);
            if (index >= selected.size()) break;
            try {
                outcome.records[index] = evaluate_pair(ctx, *selected[index].instance,
                                                       *selected[index].response);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    int thread_count =
        std::min(config.jobs, static_cast<int>(std::max<size_t>(selected.size(), 1)));
    std::vector<std::thread> threads;
    for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    outcome.timings.eval_ms = ms_since(stage_start);

    for (const auto& record : outcome.records) {
        if (record.judge_incomplete) ++outcome.judge_incomplete;
    }

    stage_start = std::chrono::steady_clock::now();
    outcome.report = report::aggregate(outcome.records, config.group_by);
    outcome.timings.aggregate_ms = ms_since(stage_start);
    outcome.wall_ms = ms_since(wall_start);
    return outcome;
}

void write_outputs(const RunConfig& config, const RunOutcome& outcome) {
    auto stage_start = std::chrono::steady_clock::now();
    fs::create_directories(config.out_dir);
    fs::path out(config.out_dir);

    write_file_atomic((out / "report.csv").string(),
                      report::render_machine(outcome.report));
    write_file_atomic((out / "report.txt").string(), report::render_table(outcome.report));

    std::ostringstream records;
    for (const auto& record : outcome.records) {
        records << record_to_json(record).dump() << "\n";
    }
    write_file_atomic((out / "records.jsonl").string(), records.str());

    std::vector<std::string> support_names;
    for (auto m : config.support.modalities) support_names.push_back(seq::modality_name(m));
    json manifest = {
        {"version", kToolVersion},
        {"config",
         {{"dataset", config.dataset_root},
          {"responses", config.responses_path},
          {"model_id", config.support.model_id},
          {"support", support_names},
          {"eta_sqcs", config.weights.eta_sqcs},
          {"eta_ics", config.weights.eta_ics},
          {"judge", config.mock_judge ? "mock" : "live"},
          {"endpoint", config.backend.endpoint},
          {"model", config.backend.model},
          // Only the variable name is recorded; the credential itself never
          // reaches disk.
          {"credential_env", config.backend.credential_env},
          {"group_by", config.group_by},
          {"filters", config.filters},
          {"jobs", config.jobs},
          {"seed", config.seed},
          {"threed_via_render", config.threed_via_render},
          {"out_dir", config.out_dir}}},
        {"counts",
         {{"instances", outcome.instances_total},
          {"responses", outcome.responses_total},
          {"joined", outcome.joined},
          {"supported", outcome.supported},
          {"judge_incomplete", outcome.judge_incomplete},
          {"orphan_responses", outcome.ingest.orphan_responses.size()},
          {"uncovered_instances", outcome.ingest.uncovered_instances.size()}}},
        {"notes",
         {"video gq is judged from the omni caption (no deterministic video metric)",
          "coherence prompts carry the transcribed question and response"}},
        {"timings_ms",
         {{"ingest", outcome.timings.ingest_ms},
          {"eval", outcome.timings.eval_ms},
          {"aggregate", outcome.timings.aggregate_ms},
          {"emit", ms_since(stage_start)},
          {"wall", outcome.wall_ms}}},
    };
    write_file_atomic((out / "manifest.json").string(), manifest.dump(2) + "\n");
}

}  // namespace unim::runner

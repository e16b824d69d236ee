#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "unim/common.hpp"
#include "unim/seq.hpp"

namespace unim::judge {

// Raised when a backend call fails after exhausting its retry budget, or when
// a required asset cannot be read. Judge failures are recoverable: callers
// flag the affected instance instead of aborting the run.
class BackendError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Rubrics
// ---------------------------------------------------------------------------

struct RubricLevel {
    int grade = 0;  // 5 (best) down to 1 (worst)
    std::string text;
};

struct RubricExemplar {
    int grade = 0;
    std::string subject;
};

struct Rubric {
    std::string metric;  // stable id: sc, gq_text, gq_code, gq_document, hc, sh
    std::string name;    // human-readable title
    int version = 0;
    std::vector<RubricLevel> levels;  // descending grade order
    std::vector<RubricExemplar> exemplars;
};

// Loads one rubric from its JSON file. Throws ConfigError when the file is
// missing, malformed, or does not define exactly the grades 5 through 1.
Rubric load_rubric(const std::string& path);

struct RubricSet {
    Rubric sc;           // semantic correctness
    Rubric gq_text;      // generation quality, judged text
    Rubric gq_code;      // generation quality, code
    Rubric gq_document;  // generation quality, documents
    Rubric hc;           // holistic coherence
    Rubric sh;           // stylistic harmony
};

// Loads all six rubric files (<id>.json) from a directory.
RubricSet load_rubrics(const std::string& dir);

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

struct BackendConfig {
    std::string id = "mock";     // cache/manifest identifier
    std::string endpoint;        // live backend URL
    std::string model;           // live backend model name
    std::string credential_env;  // name of the env var holding the API key;
                                 // the key itself is never stored or logged
    double timeout_seconds = 60.0;
    int retries = 2;  // additional attempts after the first
    double retry_backoff_seconds = 0.2;
    int max_concurrent = 4;
    uint64_t seed = 0;  // mock backends only
};

struct BackendRequest {
    std::string prompt;
    std::string asset_path;  // optional binary attachment (captioning)
};

class TextBackend {
public:
    virtual ~TextBackend() = default;
    virtual const std::string& id() const = 0;
    // Returns the raw completion text. Throws BackendError on failure.
    virtual std::string complete(const BackendRequest& request) = 0;
};

// Grade bands for the deterministic mock judge. The mock compares the
// candidate block against the reference block by token overlap (Jaccard) and
// maps the overlap onto a grade; exact matches always grade 5.
struct MockRules {
    // Overlap thresholds for grades 4, 3, 2 when a reference is present.
    double band4 = 0.75;
    double band3 = 0.45;
    double band2 = 0.15;
    // Coherence prompts compare loosely related texts, so their bands sit
    // lower than the reference-match bands.
    double coh5 = 0.50;
    double coh4 = 0.30;
    double coh3 = 0.15;
    double coh2 = 0.05;
    // Forced verdicts by rubric metric id, overriding the heuristics.
    std::map<std::string, int> forced_grades;
};

// Offline stand-in for a live judge or captioner. Deterministic for a fixed
// (prompt, asset digest, seed) triple.
class MockBackend : public TextBackend {
public:
    explicit MockBackend(uint64_t seed = 0, MockRules rules = {});

    const std::string& id() const override { return id_; }
    std::string complete(const BackendRequest& request) override;

    // Number of completions served; lets cache tests detect re-captioning.
    int calls() const { return calls_; }

private:
    std::string id_;
    uint64_t seed_;
    MockRules rules_;
    int calls_ = 0;
};

// Minimal JSON-over-HTTP client for a live judge or captioner. Reads the API
// key from the environment variable named in the config at call time.
class HttpBackend : public TextBackend {
public:
    explicit HttpBackend(BackendConfig config);

    const std::string& id() const override { return config_.id; }
    std::string complete(const BackendRequest& request) override;

private:
    BackendConfig config_;
};

std::unique_ptr<TextBackend> make_mock_backend(uint64_t seed, MockRules rules = {});
std::unique_ptr<TextBackend> make_http_backend(const BackendConfig& config);

// ---------------------------------------------------------------------------
// Prompt assembly and grade extraction
// ---------------------------------------------------------------------------

// (section label, section body) pairs rendered as delimited blocks.
using PromptSections = std::vector<std::pair<std::string, std::string>>;

// Renders the grading prompt: versioned header, rubric levels, exemplars,
// delimited subject sections, and the fenced-grade reply instruction.
// Distinct rubric ids always yield distinct prompts.
std::string assemble_judge_prompt(const Rubric& rubric, const PromptSections& sections);

// Returns the value of the last well-formed fenced single-integer line, or
// nullopt when no such line exists.
std::optional<int> extract_grade(const std::string& completion);

// Maps a 1..5 grade onto [0, 1] linearly. Throws std::invalid_argument for
// grades outside 1..5.
double normalize_grade(int grade);

struct JudgeVerdict {
    int grade = 0;
    std::string rationale;  // completion text before the final fenced grade
    std::string raw;        // full completion
};

// One graded call: assemble the prompt, query the backend, extract the grade.
// Throws BackendError when the backend fails or returns no usable grade.
JudgeVerdict judge_grade(const Rubric& rubric, const PromptSections& sections,
                         TextBackend& backend);

// ---------------------------------------------------------------------------
// Captioning and transcription
// ---------------------------------------------------------------------------

// Maps a tag key ("image1", "audio2", ...) to an asset path.
using AssetMap = std::map<std::string, std::string>;

// Key under which a tag's asset is looked up: keyword plus index.
std::string tag_key(const seq::PlaceholderTag& tag);

enum class CaptionerKind {
    Identity,    // text, code: content passes through verbatim
    General,     // images, documents
    Omni,        // audio, video
    PointCloud,  // 3d assets captioned natively
};

// Which captioner family serves a modality. The 3d route is configurable:
// native point-cloud captioning, or multi-view renders pushed through the
// general captioner.
CaptionerKind caption_route(seq::Modality modality, bool threed_via_render);

struct CaptionerConfig {
    std::string cache_dir;  // empty disables the on-disk cache
    bool threed_via_render = false;
};

struct BackendSet {
    std::shared_ptr<TextBackend> general;
    std::shared_ptr<TextBackend> omni;
    std::shared_ptr<TextBackend> pointcloud;

    std::shared_ptr<TextBackend> for_kind(CaptionerKind kind) const;
};

// A sequence flattened into judge-readable text: every placeholder tag is
// replaced by a caption of its asset, preserving segment order.
struct TranscribedSequence {
    seq::InterleavedSequence original;
    // (tag, caption) in sequence order.
    std::vector<std::pair<seq::PlaceholderTag, std::string>> captions;
    std::string flattened;
    bool complete = true;             // false when any caption failed
    std::vector<std::string> errors;  // one entry per failed caption
};

class Captioner {
public:
    Captioner(BackendSet backends, CaptionerConfig config);

    // Captions one asset in the context of the instance question. Identity
    // routes read the file verbatim. Results are cached on disk keyed by the
    // asset digest plus a context discriminator; cache writes go through a
    // temp file and an atomic rename. Throws BackendError on failure.
    std::string caption_asset(const seq::PlaceholderTag& tag, const std::string& path,
                              const std::string& task_context);

    // Flattens a whole sequence. Caption failures are recorded on the result
    // instead of thrown, so deterministic metrics stay unaffected.
    TranscribedSequence transcribe(const seq::InterleavedSequence& sequence,
                                   const AssetMap& assets,
                                   const std::string& task_context);

private:
    BackendSet backends_;
    CaptionerConfig config_;
};

// ---------------------------------------------------------------------------
// Judged metrics
// ---------------------------------------------------------------------------

// Semantic correctness of a transcribed response against the transcribed
// ground truth, in [0, 1].
double semantic_correctness(const TranscribedSequence& response,
                            const TranscribedSequence& ground_truth,
                            const std::string& question, const Rubric& rubric,
                            TextBackend& backend, JudgeVerdict* verdict = nullptr);

struct CoherencePair {
    double hc = 0.0;  // holistic coherence
    double sh = 0.0;  // stylistic harmony
    JudgeVerdict hc_verdict;
    JudgeVerdict sh_verdict;
};

// Both coherence scores for one instance. The prompts carry the original
// question together with the transcribed response.
CoherencePair coherence_scores(const std::string& question,
                               const TranscribedSequence& response,
                               const RubricSet& rubrics, TextBackend& backend);

// Generation quality of one judged item (text passage, code block, or
// rendered document), in [0, 1]. `hints` carries document layout hints.
double judged_quality(seq::Modality modality, const std::string& content,
                      const std::vector<std::string>& hints, const RubricSet& rubrics,
                      TextBackend& backend, JudgeVerdict* verdict = nullptr);

// ---------------------------------------------------------------------------
// Document rendering
// ---------------------------------------------------------------------------

struct DocumentTable {
    std::string markdown;            // pipe table, possibly empty
    std::vector<std::string> hints;  // layout observations passed to the judge
};

// Renders raw extracted text (or CSV content) as a markdown pipe table using
// column-split heuristics, and collects layout hints.
DocumentTable text_to_markdown_table(const std::string& raw);

// Renders a document asset as a markdown table. CSV and plain-text files
// convert directly; image-backed documents run through the OCR backend first
// (nullptr means OCR is unavailable, which yields an error hint).
DocumentTable ocr_to_markdown_table(const std::string& path, TextBackend* ocr);

}  // namespace unim::judge

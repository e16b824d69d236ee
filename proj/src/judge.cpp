#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "unim/judge.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "unim/digest.hpp"

namespace unim::judge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kJudgePromptHeader = "=== UNIM JUDGE PROMPT v1 ===";
constexpr const char* kCaptionPromptHeader = "=== UNIM CAPTION PROMPT v1 ===";
constexpr const char* kOcrPromptHeader = "=== UNIM OCR PROMPT v1 ===";

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Lowercased alphanumeric token runs; the unit the mock judge compares in.
std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::set<std::string> sa(a.begin(), a.end());
    std::set<std::string> sb(b.begin(), b.end());
    size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Extracts the body between "[LABEL]\n" and "\n[/LABEL]". Returns "" when the
// block is absent.
std::string extract_block(const std::string& text, const std::string& label) {
    std::string open = "[" + label + "]\n";
    std::string close = "\n[/" + label + "]";
    size_t b = text.find(open);
    if (b == std::string::npos) return "";
    b += open.size();
    size_t e = text.find(close, b);
    if (e == std::string::npos) return "";
    return text.substr(b, e - b);
}

// Reads an attribute like digest=<value> from a bracketed header line.
std::string extract_attr(const std::string& text, const std::string& key) {
    std::string needle = key + "=";
    size_t b = text.find(needle);
    if (b == std::string::npos) return "";
    b += needle.size();
    size_t e = b;
    while (e < text.size() && text[e] != ' ' && text[e] != ']' && text[e] != '\n') ++e;
    return text.substr(b, e - b);
}

bool is_fence_line(const std::string& line) { return trim(line) == "```"; }

std::optional<int> parse_int_line(const std::string& line) {
    std::string t = trim(line);
    if (t.empty()) return std::nullopt;
    size_t i = (t[0] == '-') ? 1 : 0;
    if (i == t.size() || t.size() - i > 9) return std::nullopt;
    for (size_t j = i; j < t.size(); ++j) {
        if (!std::isdigit(static_cast<unsigned char>(t[j]))) return std::nullopt;
    }
    return std::stoi(t);
}

struct FencedInt {
    int value = 0;
    size_t offset = 0;  // byte offset of the opening fence line
};

std::optional<FencedInt> find_last_fenced_int(const std::string& text) {
    std::vector<std::pair<std::string, size_t>> lines;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            lines.emplace_back(text.substr(pos), pos);
            break;
        }
        lines.emplace_back(text.substr(pos, nl - pos), pos);
        pos = nl + 1;
    }
    std::optional<FencedInt> found;
    for (size_t i = 0; i + 2 < lines.size(); ++i) {
        if (!is_fence_line(lines[i].first) || !is_fence_line(lines[i + 2].first)) continue;
        auto v = parse_int_line(lines[i + 1].first);
        if (!v) continue;
        found = FencedInt{*v, lines[i].second};
    }
    return found;
}

std::string hex16(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string basename_of(const std::string& path) {
    return fs::path(path).filename().string();
}

const char* kind_name(CaptionerKind kind) {
    switch (kind) {
        case CaptionerKind::Identity: return "identity";
        case CaptionerKind::General: return "general";
        case CaptionerKind::Omni: return "omni";
        case CaptionerKind::PointCloud: return "pointcloud";
    }
    return "unknown";
}

}  // namespace

// ---------------------------------------------------------------------------
// Rubrics
// ---------------------------------------------------------------------------

Rubric load_rubric(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open rubric file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed rubric JSON in " + path + ": " + e.what());
    }

    Rubric rubric;
    try {
        rubric.metric = doc.at("metric").get<std::string>();
        rubric.name = doc.at("name").get<std::string>();
        rubric.version = doc.at("version").get<int>();
        for (const auto& level : doc.at("levels")) {
            rubric.levels.push_back(
                {level.at("grade").get<int>(), level.at("text").get<std::string>()});
        }
        for (const auto& ex : doc.value("exemplars", json::array())) {
            rubric.exemplars.push_back(
                {ex.at("grade").get<int>(), ex.at("subject").get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw ConfigError("rubric " + path + " missing required field: " + e.what());
    }

    // load_rubrics binds slots by filename, so a mismatched metric field would
    // silently grade against the wrong rubric.
    std::string stem = fs::path(path).stem().string();
    if (stem != rubric.metric) {
        throw ConfigError("rubric " + path + " declares metric '" + rubric.metric +
                          "' but the file is named for '" + stem + "'");
    }

    std::sort(rubric.levels.begin(), rubric.levels.end(),
              [](const RubricLevel& a, const RubricLevel& b) { return a.grade > b.grade; });
    if (rubric.levels.size() != 5) {
        throw ConfigError("rubric " + path + " must define exactly 5 levels");
    }
    for (int i = 0; i < 5; ++i) {
        if (rubric.levels[i].grade != 5 - i) {
            throw ConfigError("rubric " + path + " must cover grades 5 through 1");
        }
        if (trim(rubric.levels[i].text).empty()) {
            throw ConfigError("rubric " + path + " has an empty level description");
        }
    }
    for (const auto& ex : rubric.exemplars) {
        if (ex.grade < 1 || ex.grade > 5) {
            throw ConfigError("rubric " + path + " exemplar grade out of range");
        }
    }
    return rubric;
}

RubricSet load_rubrics(const std::string& dir) {
    auto path_for = [&dir](const char* id) {
        return (fs::path(dir) / (std::string(id) + ".json")).string();
    };
    RubricSet set;
    set.sc = load_rubric(path_for("sc"));
    set.gq_text = load_rubric(path_for("gq_text"));
    set.gq_code = load_rubric(path_for("gq_code"));
    set.gq_document = load_rubric(path_for("gq_document"));
    set.hc = load_rubric(path_for("hc"));
    set.sh = load_rubric(path_for("sh"));

    const Rubric* all[] = {&set.sc, &set.gq_text, &set.gq_code,
                           &set.gq_document, &set.hc, &set.sh};
    const char* ids[] = {"sc", "gq_text", "gq_code", "gq_document", "hc", "sh"};
    for (int i = 0; i < 6; ++i) {
        if (all[i]->metric != ids[i]) {
            throw ConfigError(std::string("rubric file ") + ids[i] +
                              ".json declares metric '" + all[i]->metric + "'");
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Prompt assembly and grade extraction
// ---------------------------------------------------------------------------

std::string assemble_judge_prompt(const Rubric& rubric, const PromptSections& sections) {
    std::ostringstream out;
    out << kJudgePromptHeader << "\n";
    out << "[RUBRIC metric=" << rubric.metric << " version=" << rubric.version
        << " name=" << rubric.name << "]\n";
    for (const auto& level : rubric.levels) {
        out << "Grade " << level.grade << ":\n" << level.text << "\n\n";
    }
    out << "[/RUBRIC]\n";
    for (const auto& ex : rubric.exemplars) {
        out << "[EXEMPLAR grade=" << ex.grade << "]\n" << ex.subject << "\n[/EXEMPLAR]\n";
    }
    for (const auto& [label, body] : sections) {
        out << "[" << label << "]\n" << body << "\n[/" << label << "]\n";
    }
    out << "Grade strictly by the rubric above. Reply with a brief rationale, then\n"
           "end with the final grade in a fenced block: a line containing ``` alone,\n"
           "a line containing only the integer grade from 1 to 5, and a line\n"
           "containing ``` alone.\n";
    return out.str();
}

std::optional<int> extract_grade(const std::string& completion) {
    auto found = find_last_fenced_int(completion);
    if (!found) return std::nullopt;
    return found->value;
}

double normalize_grade(int grade) {
    if (grade < 1 || grade > 5) {
        throw std::invalid_argument("grade out of range 1..5: " + std::to_string(grade));
    }
    return (grade - 1) / 4.0;
}

JudgeVerdict judge_grade(const Rubric& rubric, const PromptSections& sections,
                         TextBackend& backend) {
    std::string prompt = assemble_judge_prompt(rubric, sections);
    std::string completion = backend.complete({prompt, ""});
    auto found = find_last_fenced_int(completion);
    if (!found) {
        throw BackendError("judge completion for metric '" + rubric.metric +
                           "' carries no fenced grade");
    }
    if (found->value < 1 || found->value > 5) {
        throw BackendError("judge grade out of range for metric '" + rubric.metric +
                           "': " + std::to_string(found->value));
    }
    JudgeVerdict verdict;
    verdict.grade = found->value;
    verdict.rationale = trim(completion.substr(0, found->offset));
    verdict.raw = completion;
    return verdict;
}

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

MockBackend::MockBackend(uint64_t seed, MockRules rules)
    : id_("mock-" + std::to_string(seed)), seed_(seed), rules_(std::move(rules)) {}

namespace {

int grade_from_bands(double value, double b5, double b4, double b3, double b2) {
    if (value >= b5) return 5;
    if (value >= b4) return 4;
    if (value >= b3) return 3;
    if (value >= b2) return 2;
    return 1;
}

}  // namespace

std::string MockBackend::complete(const BackendRequest& request) {
    ++calls_;
    const std::string& prompt = request.prompt;

    if (prompt.find("[CAPTION ") != std::string::npos) {
        std::string modality = extract_attr(prompt, "modality");
        std::string digest = extract_attr(prompt, "digest");
        std::string task = trim(extract_block(prompt, "TASK"));
        uint64_t ctx = fnv1a64(task);
        std::ostringstream out;
        out << "Deterministic mock caption for the " << modality << " asset "
            << digest.substr(0, 16) << ": a placeholder description generated "
            << "offline for context " << hex16(ctx).substr(8) << " (seed " << seed_
            << ").";
        return out.str();
    }

    if (prompt.find(kOcrPromptHeader) != std::string::npos) {
        std::string digest = extract_attr(prompt, "digest");
        std::ostringstream out;
        out << "item  value\n"
            << "alpha  1.25\n"
            << "beta  2.50\n"
            << "checksum  " << digest.substr(0, 12) << "\n";
        return out.str();
    }

    std::string metric = extract_attr(prompt, "metric");
    int grade;
    double signal = 0.0;

    auto forced = rules_.forced_grades.find(metric);
    if (forced != rules_.forced_grades.end()) {
        grade = forced->second;
    } else if (metric == "sc") {
        std::string resp = trim(extract_block(prompt, "RESPONSE"));
        std::string ref = trim(extract_block(prompt, "REFERENCE"));
        if (resp == ref) {
            grade = 5;
            signal = 1.0;
        } else {
            signal = jaccard(tokenize(resp), tokenize(ref));
            grade = grade_from_bands(signal, 1.0, rules_.band4, rules_.band3, rules_.band2);
        }
    } else if (metric == "hc") {
        std::string question = extract_block(prompt, "QUESTION");
        std::string resp = extract_block(prompt, "RESPONSE");
        signal = jaccard(tokenize(question), tokenize(resp));
        grade = grade_from_bands(signal, rules_.coh5, rules_.coh4, rules_.coh3, rules_.coh2);
    } else if (metric == "sh") {
        auto tokens = tokenize(extract_block(prompt, "RESPONSE"));
        if (tokens.empty()) {
            grade = 1;
        } else {
            std::set<std::string> uniq(tokens.begin(), tokens.end());
            signal = static_cast<double>(uniq.size()) / static_cast<double>(tokens.size());
            grade = grade_from_bands(signal, 0.70, 0.50, 0.35, 0.20);
        }
    } else {
        // Generation-quality rubrics grade a single subject block.
        std::string subject = trim(extract_block(prompt, "SUBJECT"));
        std::string hints = to_lower(extract_block(prompt, "HINTS"));
        auto tokens = tokenize(subject);
        signal = static_cast<double>(tokens.size());
        if (subject.empty() || hints.find("no content") != std::string::npos) {
            grade = 1;
        } else if (tokens.size() < 5) {
            grade = 2;
        } else if (tokens.size() >= 40 || subject.find('|') != std::string::npos ||
                   subject.find("```") != std::string::npos) {
            grade = 4;
        } else {
            grade = 3;
        }
    }

    std::ostringstream out;
    out << "Deterministic mock verdict for metric=" << metric << " (seed=" << seed_
        << "): signal=" << signal << ".\n```\n" << grade << "\n```\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

namespace {

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // leading slash, defaults to /
};

Endpoint parse_endpoint(const std::string& url) {
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("backend endpoint must start with http:// or https://: " + url);
    }
    size_t path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    if (path_start == std::string::npos) {
        ep.base = url;
        ep.path = "/";
    } else {
        ep.base = url.substr(0, path_start);
        ep.path = url.substr(path_start);
    }
    return ep;
}

std::string base64_encode(const std::string& bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= bytes.size()) {
        uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                     static_cast<unsigned char>(bytes[i + 2]);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
        i += 3;
    }
    size_t rem = bytes.size() - i;
    if (rem == 1) {
        uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out += "==";
    } else if (rem == 2) {
        uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

// Pulls the completion text out of the common response shapes.
std::optional<std::string> completion_text(const json& doc) {
    if (doc.contains("text") && doc["text"].is_string()) {
        return doc["text"].get<std::string>();
    }
    if (doc.contains("completion") && doc["completion"].is_string()) {
        return doc["completion"].get<std::string>();
    }
    if (doc.contains("output") && doc["output"].is_string()) {
        return doc["output"].get<std::string>();
    }
    if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
        const json& choice = doc["choices"][0];
        if (choice.contains("text") && choice["text"].is_string()) {
            return choice["text"].get<std::string>();
        }
        if (choice.contains("message") && choice["message"].contains("content") &&
            choice["message"]["content"].is_string()) {
            return choice["message"]["content"].get<std::string>();
        }
    }
    return std::nullopt;
}

// Bounds in-flight requests to the configured cap, shared per backend.
class Gate {
public:
    explicit Gate(int limit) : limit_(std::max(1, limit)) {}

    void enter() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [this] { return active_ < limit_; });
        ++active_;
    }
    void leave() {
        std::lock_guard<std::mutex> lock(mu_);
        --active_;
        cv_.notify_one();
    }

private:
    int limit_;
    int active_ = 0;
    std::mutex mu_;
    std::condition_variable cv_;
};

std::shared_ptr<Gate> gate_for(const std::string& base, int limit) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<Gate>> gates;
    std::lock_guard<std::mutex> lock(mu);
    auto it = gates.find(base);
    if (it == gates.end()) {
        it = gates.emplace(base, std::make_shared<Gate>(limit)).first;
    }
    return it->second;
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw ConfigError("live backend requires an endpoint URL");
    }
    parse_endpoint(config_.endpoint);  // validate eagerly
}

std::string HttpBackend::complete(const BackendRequest& request) {
    Endpoint ep = parse_endpoint(config_.endpoint);

    httplib::Headers headers;
    if (!config_.credential_env.empty()) {
        const char* key = std::getenv(config_.credential_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw BackendError("credential environment variable is not set: " +
                               config_.credential_env);
        }
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body = {
        {"model", config_.model},
        {"prompt", request.prompt},
        {"temperature", 0.0},
        {"max_tokens", 1024},
    };
    if (!request.asset_path.empty()) {
        body["asset_name"] = basename_of(request.asset_path);
        body["asset_b64"] = base64_encode(read_text_file(request.asset_path));
    }
    std::string payload = body.dump();

    auto gate = gate_for(ep.base, config_.max_concurrent);
    std::string last_error;
    int attempts = 1 + std::max(0, config_.retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            auto delay = config_.retry_backoff_seconds * static_cast<double>(1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        httplib::Client client(ep.base);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_write_timeout(std::chrono::duration<double>(config_.timeout_seconds));

        gate->enter();
        auto res = client.Post(ep.path, headers, payload, "application/json");
        gate->leave();

        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "server status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError("backend '" + config_.id + "' rejected the request with status " +
                               std::to_string(res->status));
        }
        json doc;
        try {
            doc = json::parse(res->body);
        } catch (const json::exception& e) {
            throw BackendError("backend '" + config_.id + "' returned malformed JSON: " +
                               std::string(e.what()));
        }
        auto text = completion_text(doc);
        if (!text) {
            throw BackendError("backend '" + config_.id +
                               "' response carries no completion text field");
        }
        return *text;
    }
    throw BackendError("backend '" + config_.id + "' failed after " +
                       std::to_string(attempts) + " attempts; last error: " + last_error);
}

std::unique_ptr<TextBackend> make_mock_backend(uint64_t seed, MockRules rules) {
    return std::make_unique<MockBackend>(seed, std::move(rules));
}

std::unique_ptr<TextBackend> make_http_backend(const BackendConfig& config) {
    return std::make_unique<HttpBackend>(config);
}

// ---------------------------------------------------------------------------
// Captioning and transcription
// ---------------------------------------------------------------------------

std::string tag_key(const seq::PlaceholderTag& tag) {
    return seq::tag_keyword(tag.modality) + std::to_string(tag.index);
}

CaptionerKind caption_route(seq::Modality modality, bool threed_via_render) {
    switch (modality) {
        case seq::Modality::Text:
        case seq::Modality::Code:
            return CaptionerKind::Identity;
        case seq::Modality::Image:
        case seq::Modality::Document:
            return CaptionerKind::General;
        case seq::Modality::Audio:
        case seq::Modality::Video:
            return CaptionerKind::Omni;
        case seq::Modality::ThreeD:
            return threed_via_render ? CaptionerKind::General : CaptionerKind::PointCloud;
    }
    throw Error("unreachable modality in caption_route");
}

std::shared_ptr<TextBackend> BackendSet::for_kind(CaptionerKind kind) const {
    switch (kind) {
        case CaptionerKind::Identity: return nullptr;
        case CaptionerKind::General: return general;
        case CaptionerKind::Omni: return omni;
        case CaptionerKind::PointCloud: return pointcloud;
    }
    return nullptr;
}

Captioner::Captioner(BackendSet backends, CaptionerConfig config)
    : backends_(std::move(backends)), config_(std::move(config)) {}

std::string Captioner::caption_asset(const seq::PlaceholderTag& tag, const std::string& path,
                                     const std::string& task_context) {
    CaptionerKind kind = caption_route(tag.modality, config_.threed_via_render);
    if (kind == CaptionerKind::Identity) {
        try {
            // Code and text content passes through with its original format.
            return read_text_file(path);
        } catch (const Error& e) {
            throw BackendError(e.what());
        }
    }

    auto backend = backends_.for_kind(kind);
    if (!backend) {
        throw BackendError(std::string("no captioner configured for route '") +
                           kind_name(kind) + "'");
    }

    std::string asset_digest;
    try {
        asset_digest = digest::sha256_file(path);
    } catch (const Error& e) {
        throw BackendError(e.what());
    }

    // Same asset bytes under a different question, backend, or route must not
    // reuse a cached caption, so the digest is extended with a context hash.
    uint64_t ctx = fnv1a64(task_context + "\x1f" + backend->id() + "\x1f" + kind_name(kind));
    std::string cache_path;
    if (!config_.cache_dir.empty()) {
        cache_path = (fs::path(config_.cache_dir) / (asset_digest + "-" + hex16(ctx) + ".txt"))
                         .string();
        std::ifstream cached(cache_path, std::ios::binary);
        if (cached) {
            std::ostringstream buf;
            buf << cached.rdbuf();
            return buf.str();
        }
    }

    const char* route = config_.threed_via_render && tag.modality == seq::Modality::ThreeD
                            ? "render"
                            : kind_name(kind);
    std::string keyword = seq::tag_keyword(tag.modality);
    std::ostringstream prompt;
    prompt << kCaptionPromptHeader << "\n";
    prompt << "[CAPTION modality=" << keyword << " route=" << route << "]\n";
    prompt << "[TASK]\n" << task_context << "\n[/TASK]\n";
    prompt << "[ASSET modality=" << keyword << " digest=" << asset_digest
           << " name=" << basename_of(path) << "]\n";
    if (std::string(route) == "render") {
        prompt << "Multi-view renders of the 3d asset accompany this request.\n";
    } else {
        prompt << "The asset bytes accompany this request.\n";
    }
    prompt << "[/ASSET]\n";
    prompt << "Describe the asset accurately and completely so a text-only judge can\n"
              "evaluate it: content, structure or layout, and any details relevant to\n"
              "the task.\n";

    std::string caption = backend->complete({prompt.str(), path});
    if (!cache_path.empty()) write_file_atomic(cache_path, caption);
    return caption;
}

TranscribedSequence Captioner::transcribe(const seq::InterleavedSequence& sequence,
                                          const AssetMap& assets,
                                          const std::string& task_context) {
    TranscribedSequence out;
    out.original = sequence;
    std::ostringstream flat;
    for (const auto& segment : sequence.segments) {
        if (segment.is_text()) {
            flat << segment.text();
            continue;
        }
        const seq::PlaceholderTag& tag = segment.tag();
        std::string key = tag_key(tag);
        std::string caption;
        auto it = assets.find(key);
        if (it == assets.end()) {
            out.complete = false;
            out.errors.push_back("no asset registered for tag " + key);
            caption = "caption unavailable";
        } else {
            try {
                caption = caption_asset(tag, it->second, task_context);
            } catch (const Error& e) {
                out.complete = false;
                out.errors.push_back(key + ": " + e.what());
                caption = "caption unavailable";
            }
        }
        out.captions.emplace_back(tag, caption);
        flat << "[" << key << ": " << caption << "]";
    }
    out.flattened = flat.str();
    return out;
}

// ---------------------------------------------------------------------------
// Judged metrics
// ---------------------------------------------------------------------------

double semantic_correctness(const TranscribedSequence& response,
                            const TranscribedSequence& ground_truth,
                            const std::string& question, const Rubric& rubric,
                            TextBackend& backend, JudgeVerdict* verdict) {
    PromptSections sections = {
        {"QUESTION", question},
        {"RESPONSE", response.flattened},
        {"REFERENCE", ground_truth.flattened},
    };
    JudgeVerdict v = judge_grade(rubric, sections, backend);
    if (verdict != nullptr) *verdict = v;
    return normalize_grade(v.grade);
}

CoherencePair coherence_scores(const std::string& question,
                               const TranscribedSequence& response,
                               const RubricSet& rubrics, TextBackend& backend) {
    CoherencePair pair;
    pair.hc_verdict = judge_grade(
        rubrics.hc, {{"QUESTION", question}, {"RESPONSE", response.flattened}}, backend);
    pair.hc = normalize_grade(pair.hc_verdict.grade);
    pair.sh_verdict =
        judge_grade(rubrics.sh, {{"RESPONSE", response.flattened}}, backend);
    pair.sh = normalize_grade(pair.sh_verdict.grade);
    return pair;
}

double judged_quality(seq::Modality modality, const std::string& content,
                      const std::vector<std::string>& hints, const RubricSet& rubrics,
                      TextBackend& backend, JudgeVerdict* verdict) {
    const Rubric* rubric = &rubrics.gq_text;
    if (modality == seq::Modality::Code) rubric = &rubrics.gq_code;
    if (modality == seq::Modality::Document) rubric = &rubrics.gq_document;

    PromptSections sections = {{"SUBJECT", content}};
    if (!hints.empty()) {
        std::ostringstream joined;
        for (size_t i = 0; i < hints.size(); ++i) {
            if (i > 0) joined << "\n";
            joined << hints[i];
        }
        sections.emplace_back("HINTS", joined.str());
    }
    JudgeVerdict v = judge_grade(*rubric, sections, backend);
    if (verdict != nullptr) *verdict = v;
    return normalize_grade(v.grade);
}

// ---------------------------------------------------------------------------
// Document rendering
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_columns(const std::string& line) {
    std::vector<std::string> cells;
    if (line.find('|') != std::string::npos) {
        std::string cur;
        for (char c : line) {
            if (c == '|') {
                cells.push_back(trim(cur));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        cells.push_back(trim(cur));
        // A leading or trailing pipe produces empty edge cells; drop them.
        if (!cells.empty() && cells.front().empty()) cells.erase(cells.begin());
        if (!cells.empty() && cells.back().empty()) cells.pop_back();
        return cells;
    }
    if (line.find('\t') != std::string::npos) {
        std::string cur;
        for (char c : line) {
            if (c == '\t') {
                cells.push_back(trim(cur));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        cells.push_back(trim(cur));
        return cells;
    }
    // Two or more consecutive spaces separate columns in plain OCR text.
    size_t i = 0;
    while (i < line.size()) {
        size_t run = line.find("  ", i);
        if (run == std::string::npos) {
            cells.push_back(trim(line.substr(i)));
            break;
        }
        cells.push_back(trim(line.substr(i, run - i)));
        i = run;
        while (i < line.size() && line[i] == ' ') ++i;
    }
    std::vector<std::string> kept;
    for (auto& c : cells) {
        if (!c.empty()) kept.push_back(std::move(c));
    }
    return kept;
}

std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

struct NumericShape {
    bool numeric = false;
    int decimals = 0;
    bool has_unit = false;
};

NumericShape classify_cell(const std::string& cell) {
    NumericShape shape;
    size_t i = 0;
    if (i < cell.size() && (cell[i] == '-' || cell[i] == '+')) ++i;
    size_t digits = 0;
    while (i < cell.size() && (std::isdigit(static_cast<unsigned char>(cell[i])) ||
                               cell[i] == ',')) {
        if (std::isdigit(static_cast<unsigned char>(cell[i]))) ++digits;
        ++i;
    }
    if (digits == 0) return shape;
    if (i < cell.size() && cell[i] == '.') {
        ++i;
        while (i < cell.size() && std::isdigit(static_cast<unsigned char>(cell[i]))) {
            ++shape.decimals;
            ++i;
        }
    }
    // Whatever trails the number, if alphabetic or %, reads as a unit.
    std::string rest = trim(cell.substr(i));
    shape.numeric = rest.size() <= 8;
    for (unsigned char c : rest) {
        if (std::isalpha(c) || c == '%') {
            shape.has_unit = true;
            break;
        }
    }
    return shape;
}

std::string escape_cell(const std::string& cell) {
    std::string out;
    for (char c : cell) {
        if (c == '|') out += "\\|";
        else out.push_back(c);
    }
    return out;
}

DocumentTable rows_to_table(const std::vector<std::vector<std::string>>& rows) {
    DocumentTable table;
    if (rows.empty()) {
        table.hints.push_back("no content");
        return table;
    }
    size_t cols = 0;
    bool ragged = false;
    for (const auto& row : rows) cols = std::max(cols, row.size());
    for (const auto& row : rows) {
        if (row.size() != cols) ragged = true;
    }
    if (cols == 0) {
        table.hints.push_back("no content");
        return table;
    }

    std::ostringstream md;
    for (size_t r = 0; r < rows.size(); ++r) {
        md << "|";
        for (size_t c = 0; c < cols; ++c) {
            md << " " << (c < rows[r].size() ? escape_cell(rows[r][c]) : "") << " |";
        }
        md << "\n";
        if (r == 0) {
            md << "|";
            for (size_t c = 0; c < cols; ++c) md << " --- |";
            md << "\n";
        }
    }
    table.markdown = md.str();

    table.hints.push_back(std::to_string(rows.size()) + " rows, " + std::to_string(cols) +
                          " columns" + (ragged ? " (ragged)" : ""));

    // Column-wise numeric formatting: consistent decimal places read as a
    // faithful extraction, mixed ones suggest OCR noise.
    bool any_numeric = false;
    bool consistent = true;
    bool any_unit = false;
    for (size_t c = 0; c < cols; ++c) {
        std::set<int> decimals;
        for (size_t r = 1; r < rows.size(); ++r) {
            if (c >= rows[r].size()) continue;
            NumericShape shape = classify_cell(rows[r][c]);
            if (!shape.numeric) continue;
            any_numeric = true;
            decimals.insert(shape.decimals);
            if (shape.has_unit) any_unit = true;
        }
        if (decimals.size() > 1) consistent = false;
    }
    if (any_numeric) {
        table.hints.push_back(consistent ? "numeric formatting is consistent within columns"
                                         : "numeric formatting varies within columns");
        table.hints.push_back(any_unit ? "numeric cells carry explicit units"
                                       : "no units detected on numeric cells");
    }
    return table;
}

}  // namespace

DocumentTable text_to_markdown_table(const std::string& raw) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cells = split_columns(line);
        if (!cells.empty()) rows.push_back(std::move(cells));
    }
    return rows_to_table(rows);
}

DocumentTable ocr_to_markdown_table(const std::string& path, TextBackend* ocr) {
    std::string ext = to_lower(fs::path(path).extension().string());

    if (ext == ".csv") {
        std::string content = read_text_file(path);
        std::vector<std::vector<std::string>> rows;
        std::istringstream in(content);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            rows.push_back(parse_csv_line(line));
        }
        return rows_to_table(rows);
    }

    if (ext == ".txt" || ext == ".md" || ext == ".markdown" || ext == ".tsv" ||
        ext.empty()) {
        return text_to_markdown_table(read_text_file(path));
    }

    // Image-backed documents need OCR before layout heuristics apply.
    if (ocr == nullptr) {
        DocumentTable table;
        table.hints.push_back("ocr unavailable for " + basename_of(path));
        return table;
    }
    std::string asset_digest = digest::sha256_file(path);
    std::ostringstream prompt;
    prompt << kOcrPromptHeader << "\n";
    prompt << "[OCR]\n";
    prompt << "[ASSET modality=document digest=" << asset_digest
           << " name=" << basename_of(path) << "]\n";
    prompt << "The asset bytes accompany this request.\n";
    prompt << "[/ASSET]\n";
    prompt << "Extract the textual content of this document, one table row per line,\n"
              "with columns separated by two or more spaces.\n";
    std::string text = ocr->complete({prompt.str(), path});
    return text_to_markdown_table(text);
}

}  // namespace unim::judge

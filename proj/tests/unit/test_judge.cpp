#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

// Must match the define in src/judge.cpp: mixing SSL and non-SSL builds of
// httplib in one binary breaks the one-definition rule.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "unim/judge.hpp"
#include "unim/seq.hpp"

using namespace unim;
using namespace unim::judge;

namespace fs = std::filesystem;

namespace {

fs::path temp_root() {
    auto dir = fs::temp_directory_path() / "unim_judge_test";
    fs::create_directories(dir);
    return dir;
}

std::string write_temp(const std::string& name, const std::string& body) {
    std::string path = (temp_root() / name).string();
    std::ofstream f(path, std::ios::binary);
    f << body;
    return path;
}

std::string read_all(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

Rubric tiny_rubric(const std::string& metric) {
    Rubric r;
    r.metric = metric;
    r.name = "Test Rubric " + metric;
    r.version = 1;
    for (int g = 5; g >= 1; --g)
        r.levels.push_back({g, "Grade " + std::to_string(g) + " description."});
    return r;
}

// Backend returning a canned completion, for grade-extraction error paths.
class CannedBackend : public TextBackend {
public:
    explicit CannedBackend(std::string text) : text_(std::move(text)) {}
    const std::string& id() const override { return id_; }
    std::string complete(const BackendRequest&) override { return text_; }

private:
    std::string id_ = "canned";
    std::string text_;
};

seq::PlaceholderTag tag_of(const std::string& raw) {
    return seq::parse_sequence(raw, seq::Direction::Output).tags().at(0);
}

}  // namespace

TEST_CASE("shipped rubrics load with the expected identities") {
    auto set = load_rubrics("data/rubrics");
    CHECK(set.sc.metric == "sc");
    CHECK(set.gq_text.metric == "gq_text");
    CHECK(set.gq_code.metric == "gq_code");
    CHECK(set.gq_document.metric == "gq_document");
    CHECK(set.hc.metric == "hc");
    CHECK(set.sh.metric == "sh");
    CHECK(set.hc.name == "Holistic Coherence");
    CHECK(set.sh.name == "Stylistic Harmony");
    for (const Rubric* r : {&set.sc, &set.gq_text, &set.gq_code,
                            &set.gq_document, &set.hc, &set.sh}) {
        REQUIRE(r->levels.size() == 5);
        for (int i = 0; i < 5; ++i) {
            CHECK(r->levels[i].grade == 5 - i);
            CHECK(!r->levels[i].text.empty());
        }
        CHECK(r->version >= 1);
    }
}

TEST_CASE("rubric loading rejects malformed files") {
    CHECK_THROWS_AS(load_rubric("data/rubrics/nope.json"), ConfigError);
    CHECK_THROWS_AS(load_rubric(write_temp("bad.json", "{ not json")),
                    ConfigError);
    // Four levels instead of five.
    CHECK_THROWS_AS(
        load_rubric(write_temp(
            "sc.json",
            R"({"metric":"sc","name":"x","version":1,"levels":[
                {"grade":5,"text":"a"},{"grade":4,"text":"b"},
                {"grade":3,"text":"c"},{"grade":2,"text":"d"}]})")),
        ConfigError);
    // Metric id disagrees with the filename.
    CHECK_THROWS_AS(
        load_rubric(write_temp(
            "hc.json",
            R"({"metric":"sh","name":"x","version":1,"levels":[
                {"grade":5,"text":"a"},{"grade":4,"text":"b"},
                {"grade":3,"text":"c"},{"grade":2,"text":"d"},
                {"grade":1,"text":"e"}]})")),
        ConfigError);
}

TEST_CASE("prompt assembly is deterministic and keyed by rubric") {
    auto rubric = tiny_rubric("sc");
    PromptSections sections = {{"QUESTION", "What is 2+2?"},
                               {"RESPONSE", "4"},
                               {"REFERENCE", "4"}};
    std::string a = assemble_judge_prompt(rubric, sections);
    std::string b = assemble_judge_prompt(rubric, sections);
    CHECK(a == b);
    CHECK(a.find("=== UNIM JUDGE PROMPT v1 ===") == 0);
    CHECK(a.find("metric=sc") != std::string::npos);
    CHECK(a.find("version=1") != std::string::npos);
    CHECK(a.find("[QUESTION]") != std::string::npos);
    CHECK(a.find("[/QUESTION]") != std::string::npos);
    CHECK(a.find("What is 2+2?") != std::string::npos);
    // Sections appear in caller order.
    CHECK(a.find("[QUESTION]") < a.find("[RESPONSE]"));
    CHECK(a.find("[RESPONSE]") < a.find("[REFERENCE]"));
    // All five grade levels are spelled out.
    for (int g = 1; g <= 5; ++g)
        CHECK(a.find("Grade " + std::to_string(g)) != std::string::npos);

    // Different metric, same sections: different prompt.
    CHECK(assemble_judge_prompt(tiny_rubric("hc"), sections) != a);

    // The reply instruction itself must not parse as a fenced grade.
    CHECK(!extract_grade(a).has_value());
}

TEST_CASE("prompt format snapshot") {
    auto rubric = tiny_rubric("sc");
    rubric.exemplars.push_back({5, "An exemplary subject."});
    PromptSections sections = {{"QUESTION", "Q body"}, {"RESPONSE", "R body"}};
    std::string prompt = assemble_judge_prompt(rubric, sections);
    std::string snap_path = "tests/fixtures/prompts/judge_sc_v1.txt";
    if (std::getenv("UNIM_UPDATE_SNAPSHOTS") != nullptr) {
        fs::create_directories("tests/fixtures/prompts");
        std::ofstream out(snap_path, std::ios::binary);
        out << prompt;
    }
    REQUIRE_MESSAGE(fs::exists(snap_path),
                    "run once with UNIM_UPDATE_SNAPSHOTS=1 to seed snapshots");
    CHECK(prompt == read_all(snap_path));
}

TEST_CASE("grade extraction takes the last well-formed fenced integer") {
    CHECK(!extract_grade("").has_value());
    CHECK(!extract_grade("no fences at all").has_value());
    CHECK(extract_grade("text\n```\n4\n```\n") == 4);
    CHECK(extract_grade("```\n2\n```\nmore\n```\n5\n```\n") == 5);
    CHECK(extract_grade("```\n 3 \n```") == 3);          // padded digit line
    CHECK(extract_grade("```  \n1\n   ```\n") == 1);     // padded fences
    CHECK(extract_grade("```\n-2\n```\n") == -2);        // extraction is raw
    CHECK(!extract_grade("```\n4\n5\n```\n").has_value());  // two-line block
    CHECK(!extract_grade("```\nfour\n```\n").has_value());
    CHECK(!extract_grade("```\n4.0\n```\n").has_value());
    CHECK(!extract_grade("```\n\n```\n").has_value());
    // A later malformed block does not erase an earlier good one.
    CHECK(extract_grade("```\n4\n```\n```\njunk\n```\n") == 4);
}

TEST_CASE("grade normalization") {
    CHECK(normalize_grade(1) == doctest::Approx(0.0));
    CHECK(normalize_grade(2) == doctest::Approx(0.25));
    CHECK(normalize_grade(3) == doctest::Approx(0.5));
    CHECK(normalize_grade(4) == doctest::Approx(0.75));
    CHECK(normalize_grade(5) == doctest::Approx(1.0));
    CHECK_THROWS_AS(normalize_grade(0), std::invalid_argument);
    CHECK_THROWS_AS(normalize_grade(6), std::invalid_argument);
}

TEST_CASE("judge_grade surfaces unusable completions as backend errors") {
    auto rubric = tiny_rubric("sc");
    PromptSections sections = {{"RESPONSE", "x"}, {"REFERENCE", "y"}};

    CannedBackend no_grade("I refuse to commit to a number.");
    CHECK_THROWS_AS(judge_grade(rubric, sections, no_grade), BackendError);

    CannedBackend out_of_range("```\n9\n```\n");
    CHECK_THROWS_AS(judge_grade(rubric, sections, out_of_range), BackendError);

    CannedBackend good("reasoning here\n```\n4\n```\n");
    auto verdict = judge_grade(rubric, sections, good);
    CHECK(verdict.grade == 4);
    CHECK(verdict.rationale == "reasoning here");
    CHECK(verdict.raw.find("```") != std::string::npos);
}

TEST_CASE("mock backend is deterministic per seed") {
    auto rubric = tiny_rubric("sc");
    PromptSections sections = {{"QUESTION", "Name the planet we live on."},
                               {"RESPONSE", "Earth is our home planet."},
                               {"REFERENCE", "We live on planet Earth."}};
    std::string prompt = assemble_judge_prompt(rubric, sections);

    MockBackend a(7), b(7), c(8);
    std::string ra = a.complete({prompt, ""});
    CHECK(ra == b.complete({prompt, ""}));
    CHECK(ra != c.complete({prompt, ""}));
    CHECK(a.id() == b.id());
    CHECK(a.id() != c.id());
    CHECK(a.calls() == 1);

    // Exact reference match always grades 5.
    PromptSections exact = {{"QUESTION", "q"},
                            {"RESPONSE", "the very same words"},
                            {"REFERENCE", "the very same words"}};
    auto vd = judge_grade(rubric, exact, a);
    CHECK(vd.grade == 5);

    // Disjoint tokens fall to the bottom band.
    PromptSections disjoint = {{"QUESTION", "q"},
                               {"RESPONSE", "alpha beta gamma"},
                               {"REFERENCE", "delta epsilon zeta"}};
    CHECK(judge_grade(rubric, disjoint, a).grade == 1);
}

TEST_CASE("mock rules can force verdicts per metric") {
    MockRules rules;
    rules.forced_grades["sc"] = 2;
    rules.forced_grades["hc"] = 5;
    MockBackend mock(0, rules);
    PromptSections sections = {{"RESPONSE", "whatever"}, {"REFERENCE", "whatever"}};
    CHECK(judge_grade(tiny_rubric("sc"), sections, mock).grade == 2);
    CHECK(judge_grade(tiny_rubric("hc"), sections, mock).grade == 5);
    // Metrics without a forced grade keep the heuristic (exact match -> 5).
    CHECK(judge_grade(tiny_rubric("gq_text"), sections, mock).grade != 2);
}

TEST_CASE("caption routes per modality") {
    using seq::Modality;
    CHECK(caption_route(Modality::Text, false) == CaptionerKind::Identity);
    CHECK(caption_route(Modality::Code, false) == CaptionerKind::Identity);
    CHECK(caption_route(Modality::Image, false) == CaptionerKind::General);
    CHECK(caption_route(Modality::Document, false) == CaptionerKind::General);
    CHECK(caption_route(Modality::Audio, false) == CaptionerKind::Omni);
    CHECK(caption_route(Modality::Video, false) == CaptionerKind::Omni);
    CHECK(caption_route(Modality::ThreeD, false) == CaptionerKind::PointCloud);
    CHECK(caption_route(Modality::ThreeD, true) == CaptionerKind::General);
}

TEST_CASE("tag keys name keyword plus index") {
    CHECK(tag_key(tag_of("<image3>")) == "image3");
    CHECK(tag_key(tag_of("<3d1>")) == "3d1");
    CHECK(tag_key(tag_of("<document12>")) == "document12");
}

TEST_CASE("identity captions read the file verbatim without a backend call") {
    std::string code_path = write_temp("snippet.md", "```python\nprint(1)\n```\n");
    auto mock = std::make_shared<MockBackend>(0);
    BackendSet backends;
    backends.general = mock;
    backends.omni = mock;
    backends.pointcloud = mock;
    Captioner captioner(backends, {});

    std::string caption =
        captioner.caption_asset(tag_of("<code1>"), code_path, "task");
    CHECK(caption == "```python\nprint(1)\n```\n");
    CHECK(mock->calls() == 0);
}

TEST_CASE("caption cache hits on identical context and misses otherwise") {
    auto cache_dir = temp_root() / "caption_cache";
    fs::remove_all(cache_dir);
    std::string img = write_temp("pic.png", "not really a png but bytes");

    auto mock = std::make_shared<MockBackend>(3);
    BackendSet backends;
    backends.general = mock;
    backends.omni = mock;
    backends.pointcloud = mock;
    CaptionerConfig config;
    config.cache_dir = cache_dir.string();
    Captioner captioner(backends, config);

    auto tag = tag_of("<image1>");
    std::string first = captioner.caption_asset(tag, img, "question A");
    CHECK(mock->calls() == 1);
    std::string second = captioner.caption_asset(tag, img, "question A");
    CHECK(second == first);
    CHECK(mock->calls() == 1);  // served from disk

    // A different question context must not reuse the caption.
    captioner.caption_asset(tag, img, "question B");
    CHECK(mock->calls() == 2);

    // The cache directory holds one file per (digest, context) pair.
    int files = 0;
    for (const auto& entry : fs::directory_iterator(cache_dir)) {
        ++files;
        CHECK(entry.path().extension() == ".txt");
        CHECK(entry.path().filename().string().find(".tmp.") ==
              std::string::npos);
    }
    CHECK(files == 2);

    // A fresh captioner over the same cache directory reuses the files.
    Captioner reopened(backends, config);
    CHECK(reopened.caption_asset(tag, img, "question A") == first);
    CHECK(mock->calls() == 2);

    // Disabling the cache makes every call hit the backend.
    Captioner uncached(backends, {});
    uncached.caption_asset(tag, img, "question A");
    uncached.caption_asset(tag, img, "question A");
    CHECK(mock->calls() == 4);
}

TEST_CASE("transcription flattens tags and records failures") {
    std::string wav = write_temp("beep.wav", "wav-ish bytes");
    auto mock = std::make_shared<MockBackend>(1);
    BackendSet backends;
    backends.general = mock;
    backends.omni = mock;
    backends.pointcloud = mock;
    Captioner captioner(backends, {});

    auto sequence =
        seq::parse_sequence("Listen: <audio1> then decide.", seq::Direction::Input);
    AssetMap assets = {{"audio1", wav}};
    auto t = captioner.transcribe(sequence, assets, "the task");
    CHECK(t.complete);
    CHECK(t.errors.empty());
    REQUIRE(t.captions.size() == 1);
    CHECK(t.flattened.find("Listen: ") == 0);
    CHECK(t.flattened.find("[audio1: ") != std::string::npos);
    CHECK(t.flattened.find("then decide.") != std::string::npos);

    // Missing asset: flagged, not thrown.
    auto bad = captioner.transcribe(sequence, {}, "the task");
    CHECK(!bad.complete);
    REQUIRE(bad.errors.size() == 1);
    CHECK(bad.errors[0].find("audio1") != std::string::npos);
    CHECK(bad.flattened.find("caption unavailable") != std::string::npos);
}

TEST_CASE("judged metrics run on transcribed content") {
    auto rubrics = load_rubrics("data/rubrics");
    MockBackend mock(0);

    TranscribedSequence resp, gt;
    resp.flattened = "The answer is 42.";
    gt.flattened = "The answer is 42.";
    JudgeVerdict verdict;
    double sc = semantic_correctness(resp, gt, "What is the answer?",
                                     rubrics.sc, mock, &verdict);
    CHECK(sc == doctest::Approx(1.0));
    CHECK(verdict.grade == 5);

    auto pair = coherence_scores(
        "Describe the morning routine of a lighthouse keeper.", resp, rubrics,
        mock);
    CHECK(pair.hc >= 0.0);
    CHECK(pair.hc <= 1.0);
    CHECK(pair.sh >= 0.0);
    CHECK(pair.sh <= 1.0);
    CHECK(pair.hc_verdict.raw.find("metric=hc") != std::string::npos);
    CHECK(pair.sh_verdict.raw.find("metric=sh") != std::string::npos);

    JudgeVerdict code_verdict;
    double q = judged_quality(seq::Modality::Code,
                              "```python\ndef add(a, b):\n    return a + b\n```",
                              {}, rubrics, mock, &code_verdict);
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
    CHECK(code_verdict.raw.find("metric=gq_code") != std::string::npos);

    JudgeVerdict doc_verdict;
    judged_quality(seq::Modality::Document, "| a | b |", {"2 rows, 2 columns"},
                   rubrics, mock, &doc_verdict);
    CHECK(doc_verdict.raw.find("metric=gq_document") != std::string::npos);

    // Empty content bottoms out at grade 1.
    JudgeVerdict empty_verdict;
    double zero = judged_quality(seq::Modality::Text, "", {}, rubrics, mock,
                                 &empty_verdict);
    CHECK(zero == doctest::Approx(0.0));
}

TEST_CASE("document text renders as a markdown table with layout hints") {
    auto table = text_to_markdown_table(
        "item  value\nalpha  1.25\nbeta  2.50\n");
    CHECK(table.markdown.find("| item | value |") != std::string::npos);
    CHECK(table.markdown.find("| alpha | 1.25 |") != std::string::npos);
    std::string joined;
    for (const auto& h : table.hints) joined += h + "\n";
    CHECK(joined.find("3 rows, 2 columns") != std::string::npos);
    CHECK(joined.find("numeric formatting is consistent") != std::string::npos);

    auto ragged = text_to_markdown_table("a  b  c\nd  e\n");
    std::string rj;
    for (const auto& h : ragged.hints) rj += h + "\n";
    CHECK(rj.find("(ragged)") != std::string::npos);

    auto units = text_to_markdown_table("mass  12 kg\nlength  3 m\n");
    std::string uj;
    for (const auto& h : units.hints) uj += h + "\n";
    CHECK(uj.find("explicit units") != std::string::npos);

    auto varied = text_to_markdown_table("x  1.5\ny  2\nz  3.25\n");
    std::string vj;
    for (const auto& h : varied.hints) vj += h + "\n";
    CHECK(vj.find("varies within columns") != std::string::npos);

    auto empty = text_to_markdown_table("");
    CHECK(empty.markdown.empty());
    std::string ej;
    for (const auto& h : empty.hints) ej += h + "\n";
    CHECK(ej.find("no content") != std::string::npos);
}

TEST_CASE("document assets convert by extension") {
    std::string csv = write_temp(
        "t.csv", "name,score\n\"Smith, Jane\",9.5\nBrown,7.0\n");
    auto from_csv = ocr_to_markdown_table(csv, nullptr);
    CHECK(from_csv.markdown.find("| name | score |") != std::string::npos);
    CHECK(from_csv.markdown.find("| Smith, Jane | 9.5 |") != std::string::npos);

    std::string txt = write_temp("t.txt", "k  v\na  1\n");
    auto from_txt = ocr_to_markdown_table(txt, nullptr);
    CHECK(from_txt.markdown.find("| k | v |") != std::string::npos);

    // Image-backed document without an OCR backend degrades to a hint.
    std::string pdf = write_temp("t.pdf", "%PDF-1.4 pretend");
    auto no_ocr = ocr_to_markdown_table(pdf, nullptr);
    CHECK(no_ocr.markdown.empty());
    REQUIRE(!no_ocr.hints.empty());
    CHECK(no_ocr.hints[0].find("ocr unavailable") != std::string::npos);
    CHECK(no_ocr.hints[0].find("t.pdf") != std::string::npos);

    // With a backend the OCR text goes through the layout heuristics.
    MockBackend mock(0);
    auto with_ocr = ocr_to_markdown_table(pdf, &mock);
    CHECK(!with_ocr.markdown.empty());
    CHECK(with_ocr.markdown.find("|") != std::string::npos);
}

TEST_CASE("http backend round trip with bearer auth") {
    httplib::Server server;
    std::atomic<int> attempts{0};
    std::string seen_auth, seen_model;
    server.Post("/v1/complete", [&](const httplib::Request& req,
                                    httplib::Response& res) {
        ++attempts;
        seen_auth = req.get_header_value("Authorization");
        auto model_pos = req.body.find("\"model\"");
        seen_model = model_pos != std::string::npos ? "present" : "absent";
        res.set_content("{\"text\": \"fine answer\\n```\\n4\\n```\\n\"}",
                        "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread runner([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("UNIM_TEST_KEY", "testkey-123", 1);
    BackendConfig config;
    config.id = "live-test";
    config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/complete";
    config.model = "judge-model-x";
    config.credential_env = "UNIM_TEST_KEY";
    config.retries = 0;
    HttpBackend backend(config);

    std::string completion = backend.complete({"grade this please", ""});
    CHECK(extract_grade(completion) == 4);
    CHECK(seen_auth == "Bearer testkey-123");
    CHECK(seen_model == "present");
    CHECK(attempts == 1);

    server.stop();
    runner.join();
}

TEST_CASE("http backend retries transient failures and honors hard ones") {
    httplib::Server server;
    std::atomic<int> attempts{0};
    server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
        int n = ++attempts;
        if (n < 3) {
            res.status = 500;
            res.set_content("overloaded", "text/plain");
        } else {
            res.set_content("{\"text\": \"```\\n5\\n```\"}", "application/json");
        }
    });
    std::atomic<int> notfound_attempts{0};
    server.Post("/missing", [&](const httplib::Request&, httplib::Response& res) {
        ++notfound_attempts;
        res.status = 404;
        res.set_content("no such route", "text/plain");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread runner([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("UNIM_TEST_KEY", "k", 1);
    BackendConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/flaky";
    config.credential_env = "UNIM_TEST_KEY";
    config.retries = 2;
    config.retry_backoff_seconds = 0.01;
    HttpBackend backend(config);
    CHECK(extract_grade(backend.complete({"p", ""})) == 5);
    CHECK(attempts == 3);

    config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/missing";
    HttpBackend hard(config);
    CHECK_THROWS_AS(hard.complete({"p", ""}), BackendError);
    CHECK(notfound_attempts == 1);  // client errors are not retried

    server.stop();
    runner.join();
}

TEST_CASE("missing credential env names the variable, never a value") {
    unsetenv("UNIM_ABSENT_KEY");
    BackendConfig config;
    config.endpoint = "http://127.0.0.1:1/unreachable";
    config.credential_env = "UNIM_ABSENT_KEY";
    HttpBackend backend(config);
    try {
        backend.complete({"p", ""});
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        std::string msg = e.what();
        CHECK(msg.find("UNIM_ABSENT_KEY") != std::string::npos);
    }
}

TEST_CASE("alternate completion field names are accepted") {
    httplib::Server server;
    server.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            "{\"choices\": [{\"message\": {\"content\": \"ok\\n```\\n3\\n```\"}}]}",
            "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread runner([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("UNIM_TEST_KEY", "k", 1);
    BackendConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/chat";
    config.credential_env = "UNIM_TEST_KEY";
    config.retries = 0;
    HttpBackend backend(config);
    CHECK(extract_grade(backend.complete({"p", ""})) == 3);

    server.stop();
    runner.join();
}

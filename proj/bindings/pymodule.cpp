#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "unim/audio.hpp"
#include "unim/compose.hpp"
#include "unim/image.hpp"
#include "unim/judge.hpp"
#include "unim/quality.hpp"
#include "unim/rationality.hpp"
#include "unim/runner.hpp"
#include "unim/seq.hpp"
#include "unim/structure.hpp"
#include "unim/taxonomy.hpp"
#include "unim/threed.hpp"

namespace py = pybind11;

namespace {

unim::seq::Direction direction_from(const std::string& name) {
    if (name == "input") return unim::seq::Direction::Input;
    if (name == "output") return unim::seq::Direction::Output;
    throw unim::ConfigError("direction must be 'input' or 'output', got '" + name + "'");
}

py::list parse_tags(const std::string& raw, const std::string& direction) {
    auto sequence = unim::seq::parse_sequence(raw, direction_from(direction));
    py::list out;
    for (const auto& tag : sequence.tags()) {
        py::dict entry;
        entry["modality"] = unim::seq::modality_name(tag.modality);
        entry["keyword"] = unim::seq::tag_keyword(tag.modality);
        entry["index"] = tag.index;
        out.append(entry);
    }
    return out;
}

std::string round_trip(const std::string& raw) {
    return unim::seq::render_sequence(
        unim::seq::parse_sequence(raw, unim::seq::Direction::Output));
}

py::dict structure_scores(const std::string& gt_raw, const std::string& resp_raw) {
    auto gt = unim::seq::parse_sequence(gt_raw, unim::seq::Direction::Output);
    auto resp = unim::seq::parse_sequence(resp_raw, unim::seq::Direction::Output);
    auto breakdown = unim::structure::score_structure(gt, resp);
    py::dict out;
    out["strict"] = breakdown.strict;
    out["lenient"] = breakdown.lenient;
    return out;
}

py::dict audio_quality(const std::string& path) {
    auto result = unim::audio::audio_quality_file(path, {});
    py::dict out;
    out["q_audio"] = result.score;
    out["q_base"] = result.q_base;
    out["snr_eff"] = result.snr.eff;
    out["q_snr"] = result.q_snr;
    out["q_struct"] = result.q_struct;
    out["q_dr"] = result.q_dr;
    out["q_lufs"] = result.q_lufs;
    out["q_crest"] = result.q_crest;
    out["q_bw"] = result.q_bw;
    out["q_chroma"] = result.q_chroma;
    out["q_contrast"] = result.q_contrast;
    out["q_periodic"] = result.q_periodic;
    out["crest"] = result.crest_db;
    out["sf_g"] = result.sf_g;
    out["f95"] = result.f95_hz;
    return out;
}

py::dict image_quality(const std::string& path, const std::string& model_path) {
    auto model = unim::image::load_niqe_model(model_path);
    auto result = unim::image::image_quality_file(path, model);
    py::dict out;
    out["distance"] = result.distance;
    out["score"] = result.score;
    out["patches"] = result.patches;
    return out;
}

py::dict threed_quality(const std::string& path) {
    auto result = unim::threed::threed_quality_file(path, {});
    py::dict out;
    out["topology"] = result.topology;
    out["geometry"] = result.geometry;
    out["sampling"] = result.sampling;
    out["final"] = result.final_score;
    return out;
}

std::string classify_difficulty(const std::string& question, const std::string& ground_truth,
                                const std::string& task_type,
                                std::optional<int> reasoning_level,
                                std::optional<int> task_level) {
    auto input = unim::seq::parse_sequence(question, unim::seq::Direction::Input);
    auto gt = unim::seq::parse_sequence(ground_truth, unim::seq::Direction::Output);
    unim::taxonomy::Annotations notes;
    notes.task_type = task_type;
    notes.reasoning_level = reasoning_level;
    notes.task_level = task_level;
    auto profile = unim::taxonomy::derive_profile(unim::seq::modality_counts(input),
                                                  unim::seq::modality_counts(gt), notes);
    return unim::taxonomy::difficulty_name(unim::taxonomy::classify_difficulty(profile));
}

double instance_gq_scores(const std::vector<double>& scores) {
    std::vector<unim::quality::QualityItem> items;
    for (size_t i = 0; i < scores.size(); ++i) {
        items.push_back({"item" + std::to_string(i), unim::seq::Modality::Text, scores[i],
                         false, ""});
    }
    return unim::quality::instance_gq(items);
}

}  // namespace

PYBIND11_MODULE(_unim_eval, m) {
    m.doc() = "Evaluation metrics for any-to-any interleaved multimodal responses";
    m.attr("__version__") = unim::runner::kToolVersion;

    py::register_exception<unim::Error>(m, "UnimError");

    m.def("parse_tags", &parse_tags, py::arg("raw"), py::arg("direction") = "output",
          "Placeholder tags of a raw sequence, in order");
    m.def("round_trip", &round_trip, py::arg("raw"),
          "render(parse(raw)); equals raw for well-formed tag text");
    m.def("structure_scores", &structure_scores, py::arg("ground_truth"),
          py::arg("response"), "Strict and lenient structure scores of raw sequences");

    m.def("sqcs", &unim::compose::sqcs, py::arg("sc"), py::arg("gq"),
          py::arg("eta") = unim::compose::kDefaultEtaSqcs);
    m.def("ics", &unim::compose::ics, py::arg("hc"), py::arg("sh"),
          py::arg("eta") = unim::compose::kDefaultEtaIcs);
    m.def("relativize", &unim::compose::relativize, py::arg("absolute"), py::arg("tau"));
    m.def("supporting_rate", &unim::compose::supporting_rate, py::arg("supported"),
          py::arg("total"));

    m.def("audio_quality", &audio_quality, py::arg("path"),
          "No-reference audio quality of a WAV file");
    m.def("image_quality", &image_quality, py::arg("path"), py::arg("model_path"),
          "NIQE-based image quality against a reference model");
    m.def("threed_quality", &threed_quality, py::arg("path"),
          "No-reference mesh / point-cloud quality");
    m.def("instance_gq", &instance_gq_scores, py::arg("scores"),
          "Mean generation quality over item scores");

    m.def("classify_difficulty", &classify_difficulty, py::arg("question"),
          py::arg("ground_truth"), py::arg("task_type") = "",
          py::arg("reasoning_level") = std::nullopt, py::arg("task_level") = std::nullopt);

    m.def("pearson", &unim::rationality::pearson, py::arg("x"), py::arg("y"));

    m.def(
        "extract_grade",
        [](const std::string& completion) { return unim::judge::extract_grade(completion); },
        py::arg("completion"), "Last well-formed fenced integer, or None");
    m.def("normalize_grade", &unim::judge::normalize_grade, py::arg("grade"));
}

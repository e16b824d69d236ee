#include "unim/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

namespace unim::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

std::string field_name(Field f) {
    switch (f) {
        case Field::NaturalScience: return "natural_science";
        case Field::SocialScience: return "social_science";
        case Field::GeneralArea: return "general_area";
    }
    return "general_area";
}

std::optional<Field> field_from_name(const std::string& name) {
    if (name == "natural_science") return Field::NaturalScience;
    if (name == "social_science") return Field::SocialScience;
    if (name == "general_area") return Field::GeneralArea;
    return std::nullopt;
}

const std::map<std::string, Field>& domain_registry() {
    static const std::map<std::string, Field> registry = {
        {"math", Field::NaturalScience},
        {"physics", Field::NaturalScience},
        {"chemistry", Field::NaturalScience},
        {"biology", Field::NaturalScience},
        {"computer_science", Field::NaturalScience},
        {"programming", Field::NaturalScience},
        {"engineering", Field::NaturalScience},
        {"medicine", Field::NaturalScience},
        {"earth_science", Field::NaturalScience},
        {"environmental_science", Field::NaturalScience},
        {"finance", Field::SocialScience},
        {"law", Field::SocialScience},
        {"linguistics", Field::SocialScience},
        {"psychology", Field::SocialScience},
        {"education", Field::SocialScience},
        {"history", Field::SocialScience},
        {"art", Field::SocialScience},
        {"sociology", Field::SocialScience},
        {"politics", Field::SocialScience},
        {"philosophy", Field::SocialScience},
        {"sports", Field::GeneralArea},
        {"news", Field::GeneralArea},
        {"culture", Field::GeneralArea},
        {"entertainment", Field::GeneralArea},
        {"food", Field::GeneralArea},
        {"architecture", Field::GeneralArea},
        {"tourism", Field::GeneralArea},
        {"fashion", Field::GeneralArea},
        {"health", Field::GeneralArea},
        {"pets", Field::GeneralArea},
    };
    return registry;
}

namespace {

std::string lower_ext(const std::string& path) {
    std::string ext = fs::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// Legal on-disk formats per modality. Audio and video are restricted to the
// containers the toolchain handles natively; anything else is rejected with
// a conversion hint instead of being silently skipped.
void check_asset_format(seq::Modality modality, const std::string& path,
                        const std::string& where) {
    std::string ext = lower_ext(path);
    auto fail = [&](const std::string& expected) {
        throw IngestError(where + ": asset '" + path + "' has format '" + ext +
                          "', expected " + expected);
    };
    switch (modality) {
        case seq::Modality::Image:
            if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") fail("png/jpg/jpeg");
            break;
        case seq::Modality::Audio:
            if (ext == ".mp3" || ext == ".flac" || ext == ".ogg" || ext == ".m4a") {
                throw IngestError(where + ": audio asset '" + path +
                                  "' is not PCM WAV; convert it first (e.g. ffmpeg -i in" +
                                  ext + " out.wav)");
            }
            if (ext != ".wav") fail("wav");
            break;
        case seq::Modality::Video:
            if (ext == ".avi" || ext == ".mov" || ext == ".mkv") {
                throw IngestError(where + ": video asset '" + path +
                                  "' is not mp4/webm; convert it first (e.g. ffmpeg -i in" +
                                  ext + " out.mp4)");
            }
            if (ext != ".mp4" && ext != ".webm") fail("mp4/webm");
            break;
        case seq::Modality::Document:
            if (ext != ".pdf" && ext != ".doc" && ext != ".csv" && ext != ".txt")
                fail("pdf/doc/csv/txt");
            break;
        case seq::Modality::Code:
            if (ext != ".md") fail("md (markdown block)");
            break;
        case seq::Modality::ThreeD:
            if (ext != ".obj" && ext != ".off" && ext != ".ply") fail("obj/off/ply");
            break;
        case seq::Modality::Text:
            break;
    }
}

std::vector<std::string> read_capabilities(const json& record, const std::string& where) {
    std::vector<std::string> caps;
    if (!record.contains("capabilities")) return caps;
    std::set<int> seen;
    for (const auto& cap : record.at("capabilities")) {
        std::string name = cap.get<std::string>();
        if (name.size() < 2 || name[0] != 'C') {
            throw IngestError(where + ": unknown capability '" + name + "'");
        }
        int num = 0;
        try {
            num = std::stoi(name.substr(1));
        } catch (const std::exception&) {
            num = 0;
        }
        if (num < 1 || num > 10) {
            throw IngestError(where + ": unknown capability '" + name +
                              "' (expected C1..C10)");
        }
        seen.insert(num);
    }
    for (int num : seen) caps.push_back("C" + std::to_string(num));
    return caps;
}

judge::AssetMap read_asset_map(const json& record, const std::string& key,
                               const fs::path& base, const std::string& where) {
    judge::AssetMap assets;
    if (!record.contains(key)) return assets;
    const json& obj = record.at(key);
    if (!obj.is_object()) {
        throw IngestError(where + ": '" + key + "' must be an object of tag -> path");
    }
    for (const auto& [tag, value] : obj.items()) {
        assets[tag] = (base / value.get<std::string>()).string();
    }
    return assets;
}

// Checks that every tag resolves to a legally formatted asset entry. When
// require_files is set the files must also exist on disk.
void check_sequence_assets(const seq::InterleavedSequence& sequence,
                           const judge::AssetMap& assets, bool require_files,
                           const std::string& where,
                           std::vector<std::string>* warnings) {
    std::set<std::string> used;
    for (const auto& tag : sequence.tags()) {
        std::string key = judge::tag_key(tag);
        used.insert(key);
        auto it = assets.find(key);
        if (it == assets.end()) {
            if (require_files) {
                throw IngestError(where + ": tag <" + key + "> has no asset entry");
            }
            continue;
        }
        check_asset_format(tag.modality, it->second, where);
        if (require_files && !fs::exists(it->second)) {
            throw IngestError(where + ": asset file for <" + key +
                              "> does not exist: " + it->second);
        }
    }
    if (warnings != nullptr) {
        for (const auto& [key, path] : assets) {
            if (!used.count(key)) {
                warnings->push_back(where + ": asset entry '" + key +
                                    "' matches no tag in the sequence");
            }
        }
    }
}

void check_unique_tags(const seq::InterleavedSequence& sequence, const std::string& where) {
    auto violations = seq::validate_uniqueness(sequence);
    if (!violations.empty()) {
        throw IngestError(where + ": " + violations.front().message);
    }
}

// Iterates a line-delimited file, parsing each nonblank line as JSON and
// reporting failures with their line number.
template <typename Fn>
void for_each_record(const std::string& path, const std::string& label, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + label + " file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw IngestError(label + " line " + std::to_string(line_no) +
                              ": malformed JSON: " + e.what());
        }
        try {
            fn(record, line_no);
        } catch (const json::exception& e) {
            throw IngestError(label + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace

std::vector<Instance> load_instances(const std::string& dataset_root,
                                     std::vector<std::string>* warnings) {
    fs::path root(dataset_root);
    std::string file = (root / "instances.jsonl").string();
    std::vector<Instance> instances;
    std::set<std::string> ids;

    for_each_record(file, "instances", [&](const json& record, int line_no) {
        std::string where = "instances line " + std::to_string(line_no);
        Instance inst;
        inst.id = record.at("id").get<std::string>();
        if (inst.id.empty()) throw IngestError(where + ": empty id");
        if (!ids.insert(inst.id).second) {
            throw IngestError(where + ": duplicate instance id '" + inst.id + "'");
        }

        std::string field_str = record.at("field").get<std::string>();
        auto field = field_from_name(field_str);
        if (!field) throw IngestError(where + ": unknown field '" + field_str + "'");
        inst.field = *field;

        inst.domain = record.at("domain").get<std::string>();
        auto domain_it = domain_registry().find(inst.domain);
        if (domain_it == domain_registry().end()) {
            throw IngestError(where + ": unknown domain '" + inst.domain + "'");
        }
        if (domain_it->second != inst.field) {
            throw IngestError(where + ": domain '" + inst.domain +
                              "' does not belong to field '" + field_str + "'");
        }

        inst.capabilities = read_capabilities(record, where);
        inst.question_raw = record.at("question").get<std::string>();
        inst.ground_truth_raw = record.at("ground_truth").get<std::string>();
        inst.input = seq::parse_sequence(inst.question_raw, seq::Direction::Input);
        inst.ground_truth =
            seq::parse_sequence(inst.ground_truth_raw, seq::Direction::Output);
        check_unique_tags(inst.input, where + " (question)");
        check_unique_tags(inst.ground_truth, where + " (ground_truth)");

        inst.input_assets = read_asset_map(record, "input_assets", root, where);
        inst.gt_assets = read_asset_map(record, "gt_assets", root, where);
        check_sequence_assets(inst.input, inst.input_assets, true,
                              where + " (question)", warnings);
        check_sequence_assets(inst.ground_truth, inst.gt_assets, true,
                              where + " (ground_truth)", warnings);

        inst.task_type = record.value("task_type", std::string());

        if (record.contains("difficulty")) {
            std::string diff_str = record.at("difficulty").get<std::string>();
            auto diff = taxonomy::difficulty_from_name(diff_str);
            if (!diff) throw IngestError(where + ": unknown difficulty '" + diff_str + "'");
            inst.difficulty = *diff;
        } else {
            taxonomy::Annotations notes;
            if (record.contains("reasoning_level")) {
                notes.reasoning_level = record.at("reasoning_level").get<int>();
            }
            if (record.contains("task_level")) {
                notes.task_level = record.at("task_level").get<int>();
            }
            notes.task_type = inst.task_type;
            auto profile = taxonomy::derive_profile(seq::modality_counts(inst.input),
                                                    seq::modality_counts(inst.ground_truth),
                                                    notes);
            inst.difficulty = taxonomy::classify_difficulty(profile);
        }

        instances.push_back(std::move(inst));
    });
    return instances;
}

std::vector<ModelResponse> load_responses(const std::string& path,
                                          std::vector<std::string>* warnings) {
    fs::path base = fs::path(path).parent_path();
    std::vector<ModelResponse> responses;
    std::set<std::string> ids;

    for_each_record(path, "responses", [&](const json& record, int line_no) {
        std::string where = "responses line " + std::to_string(line_no);
        ModelResponse resp;
        resp.instance_id = record.at("instance_id").get<std::string>();
        if (resp.instance_id.empty()) throw IngestError(where + ": empty instance_id");
        if (!ids.insert(resp.instance_id).second) {
            throw IngestError(where + ": duplicate response for instance '" +
                              resp.instance_id + "'");
        }
        resp.output_raw = record.at("output").get<std::string>();
        resp.output = seq::parse_sequence(resp.output_raw, seq::Direction::Output);
        resp.assets = read_asset_map(record, "output_assets", base, where);
        // Responses may violate uniqueness (scored as-is) and may omit asset
        // files, but declared assets must still use legal formats.
        check_sequence_assets(resp.output, resp.assets, false, where, warnings);
        responses.push_back(std::move(resp));
    });
    return responses;
}

std::vector<JoinedPair> join_pairs(const std::vector<Instance>& instances,
                                   const std::vector<ModelResponse>& responses,
                                   IngestReport& report) {
    std::map<std::string, const ModelResponse*> by_id;
    for (const auto& resp : responses) by_id[resp.instance_id] = &resp;

    std::set<std::string> instance_ids;
    for (const auto& inst : instances) instance_ids.insert(inst.id);
    for (const auto& resp : responses) {
        if (!instance_ids.count(resp.instance_id)) {
            report.orphan_responses.push_back(resp.instance_id);
        }
    }

    std::vector<JoinedPair> pairs;
    for (const auto& inst : instances) {
        auto it = by_id.find(inst.id);
        if (it == by_id.end()) {
            report.uncovered_instances.push_back(inst.id);
            continue;
        }
        pairs.push_back({&inst, it->second});
    }
    return pairs;
}

}  // namespace unim::dataset

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "unim/judge.hpp"
#include "unim/seq.hpp"
#include "unim/taxonomy.hpp"

namespace unim::dataset {

enum class Field { NaturalScience, SocialScience, GeneralArea };

std::string field_name(Field f);
std::optional<Field> field_from_name(const std::string& name);

// The thirty recognized domains and the field each belongs to. Ingest rejects
// records whose domain is unknown or filed under the wrong field.
const std::map<std::string, Field>& domain_registry();

struct Instance {
    std::string id;
    Field field = Field::GeneralArea;
    std::string domain;
    std::vector<std::string> capabilities;  // subset of C1..C10, sorted
    taxonomy::Difficulty difficulty = taxonomy::Difficulty::Easy;

    std::string question_raw;
    std::string ground_truth_raw;
    seq::InterleavedSequence input;         // parsed with direction=input
    seq::InterleavedSequence ground_truth;  // parsed with direction=output
    judge::AssetMap input_assets;           // tag key -> resolved path
    judge::AssetMap gt_assets;

    std::string task_type;  // annotation feeding the difficulty taxonomy
};

struct ModelResponse {
    std::string instance_id;
    std::string output_raw;
    seq::InterleavedSequence output;  // parsed with direction=output
    judge::AssetMap assets;           // files may be absent for tags the model
                                      // declared but did not produce
};

// Ingest-time observations that do not abort the run.
struct IngestReport {
    std::vector<std::string> orphan_responses;    // response ids with no instance
    std::vector<std::string> uncovered_instances; // instances with no response
    std::vector<std::string> warnings;
};

// Reads <root>/instances.jsonl. Asset paths resolve against the root. Throws
// IngestError with the offending line number on malformed records, duplicate
// ids, unknown domains/capabilities, unresolvable ground-truth assets, or
// illegal asset formats.
std::vector<Instance> load_instances(const std::string& dataset_root,
                                     std::vector<std::string>* warnings = nullptr);

// Reads a line-delimited response file. Asset paths resolve against the
// file's directory. Response asset files may be missing on disk (they score
// 0 later), but non-native audio/video container formats are rejected here
// with a conversion hint.
std::vector<ModelResponse> load_responses(const std::string& path,
                                          std::vector<std::string>* warnings = nullptr);

struct JoinedPair {
    const Instance* instance = nullptr;
    const ModelResponse* response = nullptr;
};

// Joins responses to instances by id. Orphans and uncovered instances are
// reported, not fatal. Pair order follows instance file order.
std::vector<JoinedPair> join_pairs(const std::vector<Instance>& instances,
                                   const std::vector<ModelResponse>& responses,
                                   IngestReport& report);

}  // namespace unim::dataset

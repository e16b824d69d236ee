#pragma once

#include <optional>
#include <set>
#include <string>

#include "unim/seq.hpp"

namespace unim::taxonomy {

// Difficulty levels per criterion dimension. Levels are cumulative: an
// instance is rated at the highest level whose conditions it meets.
enum class Level : int { Easy = 1, Medium = 2, Hard = 3 };

enum class Difficulty { Easy, Medium, Hard };

// One rating per criterion dimension.
struct CriterionProfile {
    Level comprehension = Level::Easy;
    Level generation = Level::Easy;
    Level reasoning = Level::Easy;
    Level task = Level::Easy;
};

// Task-type tag sets that trigger structured-generation levels. Instances
// carry a free-form task_type annotation; membership here is matched after
// lowercasing and trimming.
struct TaxonomyConfig {
    // Complex structured generation: rates the generation dimension Hard.
    std::set<std::string> hard_generation_tasks = {
        "3d completion", "video editing", "code translation"};
    // Localized editing / limited structured generation: rates it Medium.
    std::set<std::string> medium_generation_tasks = {
        "image editing", "object detection"};
};

// Per-instance annotations that cannot be derived from the sequences.
// reasoning/task levels default to Easy when missing.
struct Annotations {
    std::optional<int> reasoning_level;  // 1..3
    std::optional<int> task_level;       // 1..3
    std::string task_type;
};

// Comprehension from the input side: Hard for highly complex modalities
// (3D, code, video) or >=5 interleavings, Medium for moderately complex
// modalities (document, audio) or 3-4 interleavings, Easy otherwise.
Level comprehension_level(const seq::ModalityCounts& input_counts);

// Generation from the expected output side: Hard for complex structured
// generation task types or >=4 interleavings, Medium for editing / limited
// structured generation or 2-3 interleavings, Easy otherwise.
Level generation_level(const seq::ModalityCounts& output_counts,
                       const std::string& task_type,
                       const TaxonomyConfig& config = {});

CriterionProfile derive_profile(const seq::ModalityCounts& input_counts,
                                const seq::ModalityCounts& output_counts,
                                const Annotations& annotations,
                                const TaxonomyConfig& config = {});

// Top-down overall rating: Hard if at least two dimensions are Hard, else
// Medium if at least two dimensions are Medium or above, else Easy.
Difficulty classify_difficulty(const CriterionProfile& profile);

std::string difficulty_name(Difficulty d);
std::optional<Difficulty> difficulty_from_name(const std::string& name);

}  // namespace unim::taxonomy

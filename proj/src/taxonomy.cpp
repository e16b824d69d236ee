#include "unim/taxonomy.hpp"

#include <algorithm>
#include <cctype>

namespace unim::taxonomy {

namespace {

std::string normalize_task_type(const std::string& s) {
    std::string out;
    for (char c : s) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    size_t b = out.find_first_not_of(" \t");
    size_t e = out.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return out.substr(b, e - b + 1);
}

Level clamp_level(int v) {
    if (v <= 1) return Level::Easy;
    if (v >= 3) return Level::Hard;
    return Level::Medium;
}

}  // namespace

Level comprehension_level(const seq::ModalityCounts& input_counts) {
    using seq::Modality;
    int tags = input_counts.total();
    bool highly_complex = input_counts.get(Modality::ThreeD) > 0 ||
                          input_counts.get(Modality::Code) > 0 ||
                          input_counts.get(Modality::Video) > 0;
    if (highly_complex || tags >= 5) return Level::Hard;
    bool moderately_complex = input_counts.get(Modality::Document) > 0 ||
                              input_counts.get(Modality::Audio) > 0;
    if (moderately_complex || tags >= 3) return Level::Medium;
    return Level::Easy;
}

Level generation_level(const seq::ModalityCounts& output_counts,
                       const std::string& task_type,
                       const TaxonomyConfig& config) {
    std::string task = normalize_task_type(task_type);
    int tags = output_counts.total();
    if (config.hard_generation_tasks.count(task) || tags >= 4) return Level::Hard;
    if (config.medium_generation_tasks.count(task) || tags >= 2) return Level::Medium;
    return Level::Easy;
}

CriterionProfile derive_profile(const seq::ModalityCounts& input_counts,
                                const seq::ModalityCounts& output_counts,
                                const Annotations& annotations,
                                const TaxonomyConfig& config) {
    CriterionProfile profile;
    profile.comprehension = comprehension_level(input_counts);
    profile.generation =
        generation_level(output_counts, annotations.task_type, config);
    profile.reasoning = clamp_level(annotations.reasoning_level.value_or(1));
    profile.task = clamp_level(annotations.task_level.value_or(1));
    return profile;
}

Difficulty classify_difficulty(const CriterionProfile& profile) {
    const Level dims[] = {profile.comprehension, profile.generation,
                          profile.reasoning, profile.task};
    int hard = 0;
    int medium_or_up = 0;
    for (Level l : dims) {
        if (l == Level::Hard) ++hard;
        if (l != Level::Easy) ++medium_or_up;
    }
    if (hard >= 2) return Difficulty::Hard;
    if (medium_or_up >= 2) return Difficulty::Medium;
    return Difficulty::Easy;
}

std::string difficulty_name(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        case Difficulty::Hard: return "hard";
    }
    return "easy";
}

std::optional<Difficulty> difficulty_from_name(const std::string& name) {
    if (name == "easy") return Difficulty::Easy;
    if (name == "medium") return Difficulty::Medium;
    if (name == "hard") return Difficulty::Hard;
    return std::nullopt;
}

}  // namespace unim::taxonomy

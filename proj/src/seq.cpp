#include "unim/seq.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace unim::seq {

namespace {

const std::map<std::string, Modality> kKeywordMap = {
    {"image", Modality::Image}, {"audio", Modality::Audio},
    {"video", Modality::Video}, {"document", Modality::Document},
    {"code", Modality::Code},   {"3d", Modality::ThreeD},
};

}  // namespace

const std::string& tag_keyword(Modality m) {
    static const std::string names[] = {"text",     "image", "audio", "video",
                                        "document", "code",  "3d"};
    return names[static_cast<size_t>(m)];
}

std::string modality_name(Modality m) {
    static const std::string names[] = {"text",     "image", "audio", "video",
                                        "document", "code",  "threed"};
    return names[static_cast<size_t>(m)];
}

std::optional<Modality> modality_from_keyword(const std::string& kw) {
    auto it = kKeywordMap.find(kw);
    if (it == kKeywordMap.end()) return std::nullopt;
    return it->second;
}

std::optional<Modality> modality_from_name(const std::string& name) {
    if (name == "text") return Modality::Text;
    if (name == "threed" || name == "3d") return Modality::ThreeD;
    return modality_from_keyword(name);
}

std::vector<PlaceholderTag> InterleavedSequence::tags() const {
    std::vector<PlaceholderTag> out;
    for (const auto& seg : segments)
        if (!seg.is_text()) out.push_back(seg.tag());
    return out;
}

std::string InterleavedSequence::text_content() const {
    std::string out;
    for (const auto& seg : segments)
        if (seg.is_text()) out += seg.text();
    return out;
}

namespace {

void append_text(InterleavedSequence& seq, const std::string& text) {
    if (text.empty()) return;
    if (!seq.segments.empty() && seq.segments.back().is_text()) {
        std::get<std::string>(seq.segments.back().value) += text;
    } else {
        seq.segments.push_back(Segment{text});
    }
}

// Attempts to read a valid tag starting at raw[pos] (which is '<').
// On success returns the tag and advances pos past '>'.
bool try_parse_tag(const std::string& raw, size_t& pos, Direction direction,
                   PlaceholderTag& out) {
    size_t i = pos + 1;
    // Longest keyword is "document" (8 chars); "3d" starts with a digit, so
    // keywords are matched against the closed set rather than [a-z]+.
    size_t best_len = 0;
    Modality best_mod = Modality::Image;
    for (const auto& [kw, mod] : kKeywordMap) {
        if (raw.compare(i, kw.size(), kw) == 0 && kw.size() > best_len) {
            best_len = kw.size();
            best_mod = mod;
        }
    }
    if (best_len == 0) return false;
    size_t digits_begin = i + best_len;
    size_t j = digits_begin;
    while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) ++j;
    if (j == digits_begin || j >= raw.size() || raw[j] != '>') return false;
    // Index is a positive decimal without leading zeros.
    if (raw[digits_begin] == '0') return false;
    if (j - digits_begin > 9) return false;  // avoid overflow; absurd anyway
    int index = std::stoi(raw.substr(digits_begin, j - digits_begin));
    out = PlaceholderTag{best_mod, index, direction};
    pos = j + 1;
    return true;
}

// Something bracket-shaped that failed the grammar. Only flags short
// alphanumeric spans so ordinary prose with '<' is not spammed.
bool looks_tag_shaped(const std::string& raw, size_t pos, size_t& end) {
    size_t i = pos + 1;
    size_t n = 0;
    while (i < raw.size() && n <= 24 &&
           (std::isalnum(static_cast<unsigned char>(raw[i])) || raw[i] == '_')) {
        ++i;
        ++n;
    }
    if (n == 0 || n > 24 || i >= raw.size() || raw[i] != '>') return false;
    end = i + 1;
    return true;
}

}  // namespace

InterleavedSequence parse_sequence(const std::string& raw, Direction direction,
                                   std::vector<ParseDiagnostic>* diagnostics) {
    InterleavedSequence seq;
    std::string pending;
    size_t pos = 0;
    while (pos < raw.size()) {
        if (raw[pos] == '<') {
            PlaceholderTag tag;
            size_t tag_pos = pos;
            if (try_parse_tag(raw, pos, direction, tag)) {
                append_text(seq, pending);
                pending.clear();
                seq.segments.push_back(Segment{tag});
                continue;
            }
            size_t end = 0;
            if (diagnostics && looks_tag_shaped(raw, tag_pos, end)) {
                diagnostics->push_back(ParseDiagnostic{
                    tag_pos, raw.substr(tag_pos, end - tag_pos),
                    "tag-shaped span does not match <keyword><index>"});
            }
        }
        pending += raw[pos];
        ++pos;
    }
    append_text(seq, pending);
    return seq;
}

std::string render_tag(const PlaceholderTag& tag) {
    return "<" + tag_keyword(tag.modality) + std::to_string(tag.index) + ">";
}

std::string render_sequence(const InterleavedSequence& sequence) {
    std::string out;
    for (const auto& seg : sequence.segments) {
        if (seg.is_text())
            out += seg.text();
        else
            out += render_tag(seg.tag());
    }
    return out;
}

std::vector<Violation> validate_directionality(const InterleavedSequence& input,
                                               const InterleavedSequence& output) {
    std::vector<Violation> out;
    for (const auto& tag : input.tags()) {
        if (tag.direction == Direction::Output)
            out.push_back({tag, "output-direction tag " + render_tag(tag) +
                                    " appears in the input sequence"});
    }
    for (const auto& tag : output.tags()) {
        if (tag.direction == Direction::Input)
            out.push_back({tag, "input-direction tag " + render_tag(tag) +
                                    " appears in the output sequence"});
    }
    return out;
}

std::vector<Violation> validate_uniqueness(const InterleavedSequence& sequence) {
    std::map<std::tuple<Modality, int, Direction>, int> counts;
    for (const auto& tag : sequence.tags())
        counts[{tag.modality, tag.index, tag.direction}]++;
    std::vector<Violation> out;
    for (const auto& tag : sequence.tags()) {
        auto key = std::tuple{tag.modality, tag.index, tag.direction};
        auto it = counts.find(key);
        if (it != counts.end() && it->second > 1) {
            out.push_back({tag, render_tag(tag) + " occurs " +
                                    std::to_string(it->second) + " times"});
            counts.erase(it);  // one violation per duplicated triple
        }
    }
    return out;
}

int ModalityCounts::total() const {
    int t = 0;
    for (Modality m : kTagModalities) t += get(m);
    return t;
}

int ModalityCounts::distinct_types() const {
    int t = 0;
    for (Modality m : kTagModalities) t += get(m) > 0 ? 1 : 0;
    return t;
}

std::vector<Modality> ModalityCounts::present() const {
    std::vector<Modality> out;
    for (Modality m : kTagModalities)
        if (get(m) > 0) out.push_back(m);
    return out;
}

ModalityCounts modality_counts(const InterleavedSequence& sequence) {
    ModalityCounts counts;
    for (const auto& tag : sequence.tags()) counts.add(tag.modality);
    return counts;
}

}  // namespace unim::seq

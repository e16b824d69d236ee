#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace unim::seq {

// The seven content modalities. Text is the connective narrative; the other
// six appear in sequences only through placeholder tags.
enum class Modality { Text, Image, Audio, Video, Document, Code, ThreeD };

constexpr std::array<Modality, 7> kAllModalities = {
    Modality::Text,    Modality::Image, Modality::Audio, Modality::Video,
    Modality::Document, Modality::Code, Modality::ThreeD};

constexpr std::array<Modality, 6> kTagModalities = {
    Modality::Image,    Modality::Audio, Modality::Video,
    Modality::Document, Modality::Code,  Modality::ThreeD};

// Keyword used inside placeholder tags, e.g. "image" in "<image2>".
const std::string& tag_keyword(Modality m);
std::string modality_name(Modality m);
std::optional<Modality> modality_from_keyword(const std::string& kw);
std::optional<Modality> modality_from_name(const std::string& name);

// Which side of the exchange a tag belongs to. Assigned when a sequence is
// parsed and carried along so cross-side reuse can be detected.
enum class Direction { Input, Output };

struct PlaceholderTag {
    Modality modality = Modality::Image;
    int index = 1;  // 1-based, per modality
    Direction direction = Direction::Input;

    bool operator==(const PlaceholderTag&) const = default;
};

// A segment is either a run of literal text or one placeholder tag.
struct Segment {
    std::variant<std::string, PlaceholderTag> value;

    bool is_text() const { return value.index() == 0; }
    const std::string& text() const { return std::get<std::string>(value); }
    const PlaceholderTag& tag() const { return std::get<PlaceholderTag>(value); }

    bool operator==(const Segment&) const = default;
};

struct InterleavedSequence {
    std::vector<Segment> segments;

    bool empty() const { return segments.empty(); }
    std::vector<PlaceholderTag> tags() const;
    // Concatenation of all text runs, in order.
    std::string text_content() const;

    bool operator==(const InterleavedSequence&) const = default;
};

// A near-miss found during parsing: something tag-shaped that is not a valid
// placeholder (unknown keyword, bad index, wrong case). The text is kept as
// literal content; the diagnostic lets callers surface the suspect span.
struct ParseDiagnostic {
    size_t offset = 0;     // byte offset in the raw string
    std::string span;      // the suspect substring, including brackets
    std::string message;
};

// Total function: any raw string parses. Adjacent text runs are merged and no
// empty text run is emitted. Diagnostics, when requested, report tag-shaped
// spans that failed the grammar.
InterleavedSequence parse_sequence(const std::string& raw, Direction direction,
                                   std::vector<ParseDiagnostic>* diagnostics = nullptr);

// Inverse of parse_sequence for sequences that came from it:
// render_sequence(parse_sequence(s, d)) == s for every string s.
std::string render_sequence(const InterleavedSequence& sequence);

std::string render_tag(const PlaceholderTag& tag);

// One constraint violation, with the offending tag and a human-readable note.
struct Violation {
    PlaceholderTag tag;
    std::string message;
};

// Tags parsed from the input side must not appear in the output sequence and
// vice versa. Same (modality, index) on both sides with their own directions
// is legal; reuse of the very tag object across sides is not.
std::vector<Violation> validate_directionality(const InterleavedSequence& input,
                                               const InterleavedSequence& output);

// Each (modality, index, direction) triple may occur at most once in a
// sequence. One violation is reported per duplicated triple.
std::vector<Violation> validate_uniqueness(const InterleavedSequence& sequence);

// Per-modality tag counts over the six non-text modalities. Absent modalities
// read as zero.
class ModalityCounts {
public:
    int get(Modality m) const { return counts_[idx(m)]; }
    void set(Modality m, int v) { counts_[idx(m)] = v; }
    void add(Modality m, int v = 1) { counts_[idx(m)] += v; }

    int total() const;
    int distinct_types() const;  // modalities with a nonzero count
    std::vector<Modality> present() const;

    bool operator==(const ModalityCounts&) const = default;

private:
    static size_t idx(Modality m) { return static_cast<size_t>(m); }
    std::array<int, 7> counts_{};  // Text slot stays zero
};

ModalityCounts modality_counts(const InterleavedSequence& sequence);

}  // namespace unim::seq

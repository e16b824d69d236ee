#include "doctest.h"

#include <string>
#include <vector>

#include "unim/common.hpp"
#include "unim/seq.hpp"

using namespace unim;
using namespace unim::seq;

namespace {

const char* kKeywords[] = {"image", "audio", "video", "document", "code", "3d"};

// Raw strings biased toward the tricky corners of the grammar: valid tags,
// near-miss spans, stray brackets, digits glued to prose.
std::string random_raw(SplitMix64& rng) {
    std::string out;
    int pieces = 1 + static_cast<int>(rng.next() % 8);
    for (int p = 0; p < pieces; ++p) {
        switch (rng.next() % 10) {
            case 0:
            case 1:
            case 2: {  // valid tag
                const char* kw = kKeywords[rng.next() % 6];
                out += "<" + std::string(kw) +
                       std::to_string(1 + rng.next() % 30) + ">";
                break;
            }
            case 3:  // near-miss: zero or zero-padded index
                out += (rng.next() % 2) ? "<image0>" : "<audio012>";
                break;
            case 4:  // near-miss: unknown or miscased keyword
                out += (rng.next() % 2) ? "<img7>" : "<Image2>";
                break;
            case 5:  // unterminated bracket
                out += "<video3";
                break;
            case 6:  // stray brackets around prose
                out += "a < b > c";
                break;
            case 7:  // digits in prose
                out += "count 42 ";
                break;
            default: {  // plain words
                int words = 1 + static_cast<int>(rng.next() % 4);
                for (int w = 0; w < words; ++w)
                    out += (w ? " plot" : "plot");
                out += " ";
            }
        }
    }
    return out;
}

InterleavedSequence parse_out(const std::string& raw) {
    return parse_sequence(raw, Direction::Output);
}

}  // namespace

TEST_CASE("tag keywords round-trip through the keyword map") {
    for (Modality m : kTagModalities) {
        auto back = modality_from_keyword(tag_keyword(m));
        REQUIRE(back.has_value());
        CHECK(*back == m);
    }
    CHECK(!modality_from_keyword("text").has_value());
    CHECK(!modality_from_keyword("img").has_value());
    CHECK(modality_from_name("threed") == Modality::ThreeD);
    CHECK(modality_from_name("3d") == Modality::ThreeD);
    CHECK(modality_from_name("text") == Modality::Text);
}

TEST_CASE("parse accepts the tag grammar and assigns direction") {
    auto s = parse_sequence("a <image1> b <3d12>", Direction::Input);
    REQUIRE(s.segments.size() == 4);
    CHECK(s.segments[0].text() == "a ");
    CHECK(s.segments[1].tag() ==
          PlaceholderTag{Modality::Image, 1, Direction::Input});
    CHECK(s.segments[2].text() == " b ");
    CHECK(s.segments[3].tag() ==
          PlaceholderTag{Modality::ThreeD, 12, Direction::Input});

    auto o = parse_out("<document3>");
    REQUIRE(o.tags().size() == 1);
    CHECK(o.tags()[0].direction == Direction::Output);
    CHECK(o.tags()[0].index == 3);
}

TEST_CASE("near misses stay literal text") {
    const char* cases[] = {"<image0>", "<image01>", "<Image1>", "<img1>",
                           "<image>",  "<image 1>", "<image1",  "image1>",
                           "<3D1>",    "< image1>", "<image-1>"};
    for (const char* raw : cases) {
        CAPTURE(raw);
        auto s = parse_out(raw);
        CHECK(s.tags().empty());
        CHECK(s.text_content() == raw);
    }
}

TEST_CASE("diagnostics flag tag-shaped near misses only") {
    std::vector<ParseDiagnostic> diags;
    parse_sequence("x <image0> y", Direction::Output, &diags);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].offset == 2);
    CHECK(diags[0].span == "<image0>");
    CHECK(!diags[0].message.empty());

    diags.clear();
    parse_sequence("a < b and 2 <image 1> c", Direction::Output, &diags);
    CHECK(diags.empty());  // spaces break the tag shape

    diags.clear();
    parse_sequence("<img3> <Audio2>", Direction::Output, &diags);
    CHECK(diags.size() == 2);
}

TEST_CASE("adjacent text runs merge and no empty run is emitted") {
    auto s = parse_out("<image1><image2>");
    REQUIRE(s.segments.size() == 2);
    CHECK(!s.segments[0].is_text());
    CHECK(!s.segments[1].is_text());

    CHECK(parse_out("").segments.empty());

    // The failed tag span merges with the following literal.
    auto t = parse_out("<img1>tail");
    REQUIRE(t.segments.size() == 1);
    CHECK(t.segments[0].text() == "<img1>tail");
}

TEST_CASE("render inverts parse on a generated corpus") {
    SplitMix64 rng(20240817);
    for (int i = 0; i < 2000; ++i) {
        std::string raw = random_raw(rng);
        CAPTURE(raw);
        CHECK(render_sequence(parse_out(raw)) == raw);
    }
}

TEST_CASE("render_tag emits the grammar form") {
    CHECK(render_tag({Modality::Image, 3, Direction::Input}) == "<image3>");
    CHECK(render_tag({Modality::ThreeD, 7, Direction::Output}) == "<3d7>");
    CHECK(render_tag({Modality::Document, 11, Direction::Output}) ==
          "<document11>");
}

TEST_CASE("uniqueness reports one violation per duplicated triple") {
    CHECK(validate_uniqueness(parse_out("<image1> <audio1> <image2>")).empty());

    auto one = validate_uniqueness(parse_out("<image1> x <image1> y <image1>"));
    REQUIRE(one.size() == 1);
    CHECK(one[0].tag.modality == Modality::Image);
    CHECK(one[0].message.find("3 times") != std::string::npos);

    auto two = validate_uniqueness(
        parse_out("<image1> <image1> <audio2> <audio2>"));
    CHECK(two.size() == 2);

    // Same index on different modalities is distinct.
    CHECK(validate_uniqueness(parse_out("<image1> <audio1>")).empty());
}

TEST_CASE("directionality catches cross-side tag reuse") {
    auto in = parse_sequence("see <image1>", Direction::Input);
    auto out = parse_sequence("made <image1>", Direction::Output);
    // Same (modality, index) on both sides, each with its own direction.
    CHECK(validate_directionality(in, out).empty());

    // Splicing the parsed input tag into the output side is the violation.
    InterleavedSequence bad = out;
    bad.segments.push_back(Segment{in.tags()[0]});
    auto v = validate_directionality(in, bad);
    REQUIRE(v.size() == 1);
    CHECK(v[0].tag.direction == Direction::Input);
    CHECK(v[0].message.find("<image1>") != std::string::npos);

    auto w = validate_directionality(bad, in);
    CHECK(w.size() == 2);  // both sides now hold wrong-direction tags
}

TEST_CASE("modality_counts matches a naive tally") {
    SplitMix64 rng(7);
    for (int i = 0; i < 400; ++i) {
        auto s = parse_out(random_raw(rng));
        ModalityCounts naive;
        int total = 0;
        for (const auto& tag : s.tags()) {
            naive.add(tag.modality);
            ++total;
        }
        auto counts = modality_counts(s);
        CHECK(counts == naive);
        CHECK(counts.total() == total);

        int distinct = 0;
        for (Modality m : kTagModalities)
            distinct += counts.get(m) > 0 ? 1 : 0;
        CHECK(counts.distinct_types() == distinct);
        CHECK(static_cast<int>(counts.present().size()) == distinct);
    }
}

TEST_CASE("text content concatenates literal runs in order") {
    auto s = parse_out("alpha <image1> beta <audio2> gamma");
    CHECK(s.text_content() == "alpha  beta  gamma");
    CHECK(parse_out("no tags here").text_content() == "no tags here");
    CHECK(parse_out("<image1>").text_content().empty());
}

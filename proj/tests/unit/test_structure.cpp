#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "unim/common.hpp"
#include "unim/seq.hpp"
#include "unim/structure.hpp"

using namespace unim;
using namespace unim::seq;
using namespace unim::structure;

namespace {

// Independent re-derivation of both scores straight from their definitions,
// structured differently from the library (set-based, no shared helpers).
double oracle_strict(const ModalityCounts& gt, const ModalityCounts& resp) {
    double sum = 0.0;
    int active = 0;
    for (Modality m : kTagModalities) {
        int g = gt.get(m), r = resp.get(m);
        if (g == 0 && r == 0) continue;
        ++active;
        int n = g < r ? g : r;
        double p = r > 0 ? static_cast<double>(n) / r : 0.0;
        double rec = g > 0 ? static_cast<double>(n) / g : 0.0;
        if (p + rec > 0.0) sum += 2.0 * p * rec / (p + rec);
    }
    return active == 0 ? 1.0 : sum / active;
}

double oracle_lenient(const ModalityCounts& gt, const ModalityCounts& resp) {
    std::set<Modality> gt_types, resp_types;
    for (Modality m : kTagModalities) {
        if (gt.get(m) > 0) gt_types.insert(m);
        if (resp.get(m) > 0) resp_types.insert(m);
    }
    if (gt_types.empty()) return resp_types.empty() ? 1.0 : 0.0;
    int hit = 0;
    for (Modality m : gt_types) hit += resp_types.count(m) ? 1 : 0;
    return static_cast<double>(hit) / gt_types.size();
}

ModalityCounts random_counts(SplitMix64& rng, int max_per_modality) {
    ModalityCounts c;
    for (Modality m : kTagModalities) {
        // Zero-heavy distribution so empty modalities stay common.
        if (rng.next() % 3 == 0)
            c.set(m, 1 + static_cast<int>(rng.next() % max_per_modality));
    }
    return c;
}

ModalityCounts counts_of(const char* raw) {
    return modality_counts(parse_sequence(raw, Direction::Output));
}

}  // namespace

TEST_CASE("hand-computed structure cases") {
    // gt {image:2, audio:1}, resp {image:1}:
    // image n=1, P=1, R=1/2, F1=2/3; audio F1=0 -> StS=1/3; LeS=1/2.
    auto b = score_structure(counts_of("<image1> <image2> <audio1>"),
                             counts_of("<image1>"));
    CHECK(b.strict == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(b.lenient == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE(b.per_modality.size() == 2);

    // Exact match on every modality.
    auto eq = score_structure(counts_of("<image1> <3d1>"),
                              counts_of("<image1> <3d1>"));
    CHECK(eq.strict == doctest::Approx(1.0));
    CHECK(eq.lenient == doctest::Approx(1.0));

    // Spurious modality in the response only dilutes StS, not LeS.
    auto sp = score_structure(counts_of("<image1>"),
                              counts_of("<image1> <audio1>"));
    CHECK(sp.strict == doctest::Approx(0.5));
    CHECK(sp.lenient == doctest::Approx(1.0));

    // Count mismatch inside one modality.
    auto cm = score_structure(counts_of("<image1> <image2> <image3>"),
                              counts_of("<image1> <image2>"));
    // n=2, P=1, R=2/3 -> F1=0.8
    CHECK(cm.strict == doctest::Approx(0.8));
    CHECK(cm.lenient == doctest::Approx(1.0));
}

TEST_CASE("empty-side conventions") {
    ModalityCounts none;
    CHECK(strict_structure_score(none, none) == doctest::Approx(1.0));
    CHECK(lenient_structure_score(none, none) == doctest::Approx(1.0));

    auto resp_only = counts_of("<audio1>");
    CHECK(strict_structure_score(none, resp_only) == doctest::Approx(0.0));
    CHECK(lenient_structure_score(none, resp_only) == doctest::Approx(0.0));

    auto gt_only = counts_of("<audio1> <image1>");
    CHECK(strict_structure_score(gt_only, none) == doctest::Approx(0.0));
    CHECK(lenient_structure_score(gt_only, none) == doctest::Approx(0.0));
}

TEST_CASE("library matches the oracle over random count pairs") {
    SplitMix64 rng(424242);
    for (int i = 0; i < 20000; ++i) {
        auto gt = random_counts(rng, 6);
        auto resp = random_counts(rng, 6);
        double strict = strict_structure_score(gt, resp);
        double lenient = lenient_structure_score(gt, resp);
        CHECK(strict == doctest::Approx(oracle_strict(gt, resp)).epsilon(1e-12));
        CHECK(lenient ==
              doctest::Approx(oracle_lenient(gt, resp)).epsilon(1e-12));
    }
}

TEST_CASE("lenient dominates strict whenever ground truth has tags") {
    SplitMix64 rng(99);
    for (int i = 0; i < 20000; ++i) {
        auto gt = random_counts(rng, 5);
        if (gt.total() == 0) continue;
        auto resp = random_counts(rng, 5);
        double strict = strict_structure_score(gt, resp);
        double lenient = lenient_structure_score(gt, resp);
        CHECK(lenient >= strict - 1e-12);
        CHECK(strict >= 0.0);
        CHECK(strict <= 1.0);
        CHECK(lenient <= 1.0);
    }
}

TEST_CASE("breakdown rows cover exactly the active modalities") {
    auto b = score_structure(counts_of("<image1> <video1>"),
                             counts_of("<video1> <code1>"));
    std::set<Modality> seen;
    for (const auto& row : b.per_modality) {
        seen.insert(row.modality);
        int n = row.gt_count < row.resp_count ? row.gt_count : row.resp_count;
        double p = row.resp_count > 0 ? double(n) / row.resp_count : 0.0;
        double r = row.gt_count > 0 ? double(n) / row.gt_count : 0.0;
        CHECK(row.precision == doctest::Approx(p));
        CHECK(row.recall == doctest::Approx(r));
    }
    CHECK(seen == std::set<Modality>{Modality::Image, Modality::Video,
                                     Modality::Code});
}

#include "doctest.h"

#include <algorithm>
#include <stdexcept>

#include "unim/common.hpp"
#include "unim/compose.hpp"

using namespace unim;
using namespace unim::compose;

namespace {

double unit(SplitMix64& rng) {
    return (rng.next() >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace

TEST_CASE("composite anchor values") {
    CHECK(std::abs(sqcs(0.137, 0.379, 0.7) - 0.111) < 0.0005);

    CHECK(std::abs(ics(0.684, 0.719, 0.8) - 0.691) < 0.001);
    CHECK(std::abs(ics(0.731, 0.765, 0.8) - 0.738) < 0.001);

    CHECK(std::abs(relativize(0.155, 0.947) - 0.147) < 0.0005);
}

TEST_CASE("default weights") {
    MetricWeights w;
    CHECK(w.eta_sqcs == 0.7);
    CHECK(w.eta_ics == 0.8);
    CHECK(sqcs(0.5, 0.5) == doctest::Approx(sqcs(0.5, 0.5, kDefaultEtaSqcs)));
    CHECK(ics(0.5, 0.5) == doctest::Approx(ics(0.5, 0.5, kDefaultEtaIcs)));
}

TEST_CASE("sqcs is gated by sc and bounded by it") {
    SplitMix64 rng(1);
    for (int i = 0; i < 5000; ++i) {
        double sc = unit(rng), gq = unit(rng), eta = unit(rng);
        double v = sqcs(sc, gq, eta);
        CHECK(v >= eta * sc - 1e-12);  // gq = 0 floor
        CHECK(v <= sc + 1e-12);        // gq = 1 ceiling
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(sqcs(0.0, 1.0, 0.7) == doctest::Approx(0.0));  // sc gates everything
    CHECK(sqcs(1.0, 1.0, 0.7) == doctest::Approx(1.0));
    CHECK(sqcs(1.0, 0.0, 0.7) == doctest::Approx(0.7));
}

TEST_CASE("sqcs is monotone in both inputs") {
    SplitMix64 rng(2);
    for (int i = 0; i < 2000; ++i) {
        double sc = unit(rng) * 0.9, gq = unit(rng) * 0.9, eta = unit(rng);
        CHECK(sqcs(sc + 0.1, gq, eta) >= sqcs(sc, gq, eta) - 1e-12);
        CHECK(sqcs(sc, gq + 0.1, eta) >= sqcs(sc, gq, eta) - 1e-12);
    }
}

TEST_CASE("ics interpolates between its inputs") {
    SplitMix64 rng(3);
    for (int i = 0; i < 5000; ++i) {
        double hc = unit(rng), sh = unit(rng), eta = unit(rng);
        double v = ics(hc, sh, eta);
        CHECK(v >= std::min(hc, sh) - 1e-12);
        CHECK(v <= std::max(hc, sh) + 1e-12);
    }
    CHECK(ics(0.3, 0.9, 1.0) == doctest::Approx(0.3));  // eta = 1 is pure hc
    CHECK(ics(0.3, 0.9, 0.0) == doctest::Approx(0.9));
}

TEST_CASE("relativize discounts by the supporting rate") {
    SplitMix64 rng(4);
    for (int i = 0; i < 5000; ++i) {
        double abs = unit(rng), tau = unit(rng);
        double rel = relativize(abs, tau);
        CHECK(rel <= abs + 1e-12);
        CHECK(rel == doctest::Approx(tau * abs));
    }
    CHECK(relativize(0.8, 1.0) == doctest::Approx(0.8));
    CHECK(relativize(0.8, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("supporting_rate basics and errors") {
    CHECK(supporting_rate(3, 4) == doctest::Approx(0.75));
    CHECK(supporting_rate(0, 10) == doctest::Approx(0.0));
    CHECK(supporting_rate(10, 10) == doctest::Approx(1.0));
    CHECK_THROWS_AS(supporting_rate(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(supporting_rate(-1, 5), std::invalid_argument);
    CHECK_THROWS_AS(supporting_rate(6, 5), std::invalid_argument);
}

TEST_CASE("out-of-range inputs are rejected") {
    CHECK_THROWS_AS(sqcs(1.2, 0.5, 0.7), std::invalid_argument);
    CHECK_THROWS_AS(sqcs(0.5, -0.1, 0.7), std::invalid_argument);
    CHECK_THROWS_AS(sqcs(0.5, 0.5, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(ics(2.0, 0.5, 0.8), std::invalid_argument);
    CHECK_THROWS_AS(relativize(0.5, -0.2), std::invalid_argument);
}

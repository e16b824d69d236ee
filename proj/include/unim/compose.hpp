#pragma once

namespace unim::compose {

// Default mixing weights for the two composed scores.
inline constexpr double kDefaultEtaSqcs = 0.7;
inline constexpr double kDefaultEtaIcs = 0.8;

struct MetricWeights {
    double eta_sqcs = kDefaultEtaSqcs;
    double eta_ics = kDefaultEtaIcs;
};

// Semantic-quality composite: gates generation quality by semantic
// correctness, SQCS = SC * (eta + (1 - eta) * GQ). Inputs and result in [0,1].
double sqcs(double sc, double gq, double eta = kDefaultEtaSqcs);

// Interleaved-coherence composite of holistic coherence and stylistic
// harmony: ICS = eta * HC + (1 - eta) * SH.
double ics(double hc, double sh, double eta = kDefaultEtaIcs);

// Support-discounted variant of any absolute metric: X_rel = tau * X_abs,
// with tau the supporting rate in [0,1].
double relativize(double absolute, double tau);

// Supporting rate over a batch: supported / total. Total must be positive.
double supporting_rate(int supported, int total);

}  // namespace unim::compose

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unim/seq.hpp"

namespace unim::rationality {

// Pearson correlation coefficient. Throws std::invalid_argument on length
// mismatch, fewer than two points, or zero variance in either vector.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

enum class PerturbKind { Type, Count };

// Shift the set of modality types in a ground-truth sequence by k.
// k > 0 appends one fresh tag for each of k modality types absent from the
// sequence; k < 0 removes all tags of |k| randomly chosen present types;
// k == 0 returns the sequence unchanged. Deterministic given (sequence
// contents, k, seed). Throws unim::Error when infeasible: removal that would
// leave no types, or addition beyond the six tag modalities.
seq::InterleavedSequence perturb_types(const seq::InterleavedSequence& gt, int k,
                                       uint64_t seed);

// Shift the total tag count by k while preserving the set of types.
// k > 0 appends k fresh tags of randomly chosen present types; k < 0 removes
// k tags, never exhausting a type. Throws unim::Error when infeasible.
seq::InterleavedSequence perturb_counts(const seq::InterleavedSequence& gt, int k,
                                        uint64_t seed);

// A ground truth qualifies for the perturbation study when it interleaves at
// least two non-text modality types and at least one modality contributes
// more than two tags.
bool is_eligible(const seq::ModalityCounts& gt_counts);

struct EligibleInstance {
    std::string id;
    seq::InterleavedSequence gt;
};

// Sampled subset of eligible instances, deterministic given seed. Returns at
// most sample_size instances, preserving none of the input order (seeded
// Fisher-Yates over the eligible pool).
std::vector<EligibleInstance> select_eligible(
    const std::vector<EligibleInstance>& pool, size_t sample_size, uint64_t seed);

struct CurvePoint {
    PerturbKind kind = PerturbKind::Type;
    int k = 0;
    double mean_strict = 0.0;
    double mean_lenient = 0.0;
    int n = 0;  // instances scored at this offset (infeasible ones are skipped)
};

struct RationalityCurves {
    std::vector<CurvePoint> points;  // kind-major, k ascending
    int eligible = 0;
    int sampled = 0;
};

// Scores perturbed ground truths against the originals for every offset in
// [-span, span] and both perturbation kinds.
RationalityCurves run_rationality(const std::vector<EligibleInstance>& instances,
                                  int span, uint64_t seed);

// One calibration record: component scores plus a human rating.
struct SweepRecord {
    double a = 0.0;  // SC or HC
    double b = 0.0;  // GQ or SH
    double human = 0.0;
};

enum class SweepMetric { Sqcs, Ics };

struct SweepResult {
    double best_eta = 0.0;
    std::vector<std::pair<double, double>> correlations;  // (eta, pearson r)
};

// Recomposes the metric at each candidate weight and picks the one whose
// composite correlates best with the human ratings.
SweepResult weight_sweep(const std::vector<SweepRecord>& records,
                         const std::vector<double>& candidates,
                         SweepMetric metric);

}  // namespace unim::rationality

#pragma once

#include <vector>

#include "unim/seq.hpp"

namespace unim::structure {

// Per-modality precision/recall/F1 between ground-truth and response tag
// counts. Conventions for empty sides follow the score definitions: a ratio
// with a zero denominator is 0, and F1 is 0 when P + R = 0.
struct ModalityF1 {
    seq::Modality modality = seq::Modality::Image;
    int gt_count = 0;
    int resp_count = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct StructureBreakdown {
    std::vector<ModalityF1> per_modality;  // only modalities present on either side
    double strict = 0.0;                   // StS: mean F1 over those modalities
    double lenient = 0.0;                  // LeS: coverage of ground-truth types
};

// Strict structure score. Over M' = {m : g_m > 0 or r_m > 0}, per-modality
// F1 with n_m = min(g_m, r_m), averaged. Both sides empty scores 1.
double strict_structure_score(const seq::ModalityCounts& gt,
                              const seq::ModalityCounts& resp);

// Lenient structure score: |types(gt) ∩ types(resp)| / |types(gt)|.
// Empty ground truth scores 1 against an empty response, else 0.
double lenient_structure_score(const seq::ModalityCounts& gt,
                               const seq::ModalityCounts& resp);

StructureBreakdown score_structure(const seq::ModalityCounts& gt,
                                   const seq::ModalityCounts& resp);

inline StructureBreakdown score_structure(const seq::InterleavedSequence& gt,
                                          const seq::InterleavedSequence& resp) {
    return score_structure(seq::modality_counts(gt), seq::modality_counts(resp));
}

}  // namespace unim::structure

#include "unim/structure.hpp"

#include <algorithm>

namespace unim::structure {

StructureBreakdown score_structure(const seq::ModalityCounts& gt,
                                   const seq::ModalityCounts& resp) {
    StructureBreakdown out;
    double f1_sum = 0.0;
    int gt_types = 0;
    int covered_types = 0;
    for (seq::Modality m : seq::kTagModalities) {
        int g = gt.get(m);
        int r = resp.get(m);
        if (g == 0 && r == 0) continue;
        ModalityF1 row;
        row.modality = m;
        row.gt_count = g;
        row.resp_count = r;
        int n = std::min(g, r);
        row.precision = r > 0 ? static_cast<double>(n) / r : 0.0;
        row.recall = g > 0 ? static_cast<double>(n) / g : 0.0;
        double pr = row.precision + row.recall;
        row.f1 = pr > 0.0 ? 2.0 * row.precision * row.recall / pr : 0.0;
        f1_sum += row.f1;
        if (g > 0) {
            ++gt_types;
            if (r > 0) ++covered_types;
        }
        out.per_modality.push_back(row);
    }
    if (out.per_modality.empty()) {
        // No tags expected and none produced.
        out.strict = 1.0;
    } else {
        out.strict = f1_sum / static_cast<double>(out.per_modality.size());
    }
    if (gt_types == 0) {
        out.lenient = resp.total() == 0 ? 1.0 : 0.0;
    } else {
        out.lenient = static_cast<double>(covered_types) / gt_types;
    }
    return out;
}

double strict_structure_score(const seq::ModalityCounts& gt,
                              const seq::ModalityCounts& resp) {
    return score_structure(gt, resp).strict;
}

double lenient_structure_score(const seq::ModalityCounts& gt,
                               const seq::ModalityCounts& resp) {
    return score_structure(gt, resp).lenient;
}

}  // namespace unim::structure

#include "unim/rationality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "unim/common.hpp"
#include "unim/compose.hpp"
#include "unim/structure.hpp"

namespace unim::rationality {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("pearson: length mismatch");
    size_t n = x.size();
    if (n < 2) throw std::invalid_argument("pearson: need at least two points");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw std::invalid_argument("pearson: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

namespace {

// Seed that depends on the sequence contents as well as the caller's seed,
// so the same ground truth perturbs identically across runs.
uint64_t sequence_seed(const seq::InterleavedSequence& s, int k, uint64_t seed,
                       uint64_t salt) {
    uint64_t h = fnv1a64(seq::render_sequence(s));
    h = mix_seed(h, static_cast<uint64_t>(static_cast<int64_t>(k)));
    h = mix_seed(h, seed);
    return mix_seed(h, salt);
}

int next_free_index(const seq::InterleavedSequence& s, seq::Modality m) {
    int max_idx = 0;
    for (const auto& tag : s.tags())
        if (tag.modality == m) max_idx = std::max(max_idx, tag.index);
    return max_idx + 1;
}

void append_tag(seq::InterleavedSequence& s, seq::Modality m,
                seq::Direction dir) {
    seq::PlaceholderTag tag{m, next_free_index(s, m), dir};
    if (!s.segments.empty() && s.segments.back().is_text())
        s.segments.push_back(seq::Segment{tag});
    else {
        s.segments.push_back(seq::Segment{std::string(" ")});
        s.segments.push_back(seq::Segment{tag});
    }
}

seq::Direction sequence_direction(const seq::InterleavedSequence& s) {
    auto tags = s.tags();
    return tags.empty() ? seq::Direction::Output : tags.front().direction;
}

seq::InterleavedSequence drop_modalities(
    const seq::InterleavedSequence& s, const std::set<seq::Modality>& drop) {
    seq::InterleavedSequence out;
    for (const auto& segment : s.segments) {
        if (!segment.is_text() && drop.count(segment.tag().modality)) continue;
        if (segment.is_text() && !out.segments.empty() &&
            out.segments.back().is_text()) {
            std::get<std::string>(out.segments.back().value) += segment.text();
        } else {
            out.segments.push_back(segment);
        }
    }
    return out;
}

}  // namespace

seq::InterleavedSequence perturb_types(const seq::InterleavedSequence& gt, int k,
                                       uint64_t seed) {
    if (k == 0) return gt;
    auto counts = seq::modality_counts(gt);
    auto present = counts.present();
    SplitMix64 rng(sequence_seed(gt, k, seed, /*salt=*/0x7479u));
    if (k < 0) {
        size_t remove = static_cast<size_t>(-k);
        if (remove >= present.size())
            throw Error("perturb_types: removal would leave no modality types");
        std::set<seq::Modality> drop;
        while (drop.size() < remove)
            drop.insert(present[rng.bounded(present.size())]);
        return drop_modalities(gt, drop);
    }
    std::vector<seq::Modality> absent;
    for (seq::Modality m : seq::kTagModalities)
        if (counts.get(m) == 0) absent.push_back(m);
    if (static_cast<size_t>(k) > absent.size())
        throw Error("perturb_types: not enough absent modality types to add");
    seq::InterleavedSequence out = gt;
    seq::Direction dir = sequence_direction(gt);
    for (int i = 0; i < k; ++i) {
        size_t pick = rng.bounded(absent.size());
        append_tag(out, absent[pick], dir);
        absent.erase(absent.begin() + static_cast<long>(pick));
    }
    return out;
}

seq::InterleavedSequence perturb_counts(const seq::InterleavedSequence& gt, int k,
                                        uint64_t seed) {
    if (k == 0) return gt;
    auto counts = seq::modality_counts(gt);
    auto present = counts.present();
    SplitMix64 rng(sequence_seed(gt, k, seed, /*salt=*/0x636eu));
    if (present.empty())
        throw Error("perturb_counts: sequence has no placeholder tags");
    if (k < 0) {
        int remove = -k;
        if (counts.total() - remove < static_cast<int>(present.size()))
            throw Error("perturb_counts: removal would exhaust a modality type");
        seq::InterleavedSequence out = gt;
        for (int i = 0; i < remove; ++i) {
            auto cur = seq::modality_counts(out);
            // Positions of tags whose modality keeps at least one tag left.
            std::vector<size_t> removable;
            for (size_t pos = 0; pos < out.segments.size(); ++pos) {
                const auto& segment = out.segments[pos];
                if (!segment.is_text() && cur.get(segment.tag().modality) > 1)
                    removable.push_back(pos);
            }
            size_t pos = removable[rng.bounded(removable.size())];
            out.segments.erase(out.segments.begin() + static_cast<long>(pos));
        }
        // Re-merge text runs that removal may have made adjacent.
        return seq::parse_sequence(seq::render_sequence(out),
                                   sequence_direction(gt));
    }
    seq::InterleavedSequence out = gt;
    seq::Direction dir = sequence_direction(gt);
    for (int i = 0; i < k; ++i)
        append_tag(out, present[rng.bounded(present.size())], dir);
    return out;
}

bool is_eligible(const seq::ModalityCounts& gt_counts) {
    if (gt_counts.distinct_types() < 2) return false;
    for (seq::Modality m : seq::kTagModalities)
        if (gt_counts.get(m) > 2) return true;
    return false;
}

std::vector<EligibleInstance> select_eligible(
    const std::vector<EligibleInstance>& pool, size_t sample_size,
    uint64_t seed) {
    std::vector<EligibleInstance> eligible;
    for (const auto& inst : pool)
        if (is_eligible(seq::modality_counts(inst.gt))) eligible.push_back(inst);
    SplitMix64 rng(mix_seed(seed, 0x73656cu));
    for (size_t i = eligible.size(); i > 1; --i)
        std::swap(eligible[i - 1], eligible[rng.bounded(i)]);
    if (eligible.size() > sample_size) eligible.resize(sample_size);
    return eligible;
}

RationalityCurves run_rationality(const std::vector<EligibleInstance>& instances,
                                  int span, uint64_t seed) {
    RationalityCurves curves;
    curves.eligible = static_cast<int>(instances.size());
    curves.sampled = static_cast<int>(instances.size());
    for (PerturbKind kind : {PerturbKind::Type, PerturbKind::Count}) {
        for (int k = -span; k <= span; ++k) {
            CurvePoint point;
            point.kind = kind;
            point.k = k;
            double strict_sum = 0.0;
            double lenient_sum = 0.0;
            for (const auto& inst : instances) {
                uint64_t inst_seed = mix_seed(seed, fnv1a64(inst.id));
                seq::InterleavedSequence perturbed;
                try {
                    perturbed = kind == PerturbKind::Type
                                    ? perturb_types(inst.gt, k, inst_seed)
                                    : perturb_counts(inst.gt, k, inst_seed);
                } catch (const Error&) {
                    continue;  // infeasible offset for this instance
                }
                auto breakdown = structure::score_structure(inst.gt, perturbed);
                strict_sum += breakdown.strict;
                lenient_sum += breakdown.lenient;
                ++point.n;
            }
            if (point.n > 0) {
                point.mean_strict = strict_sum / point.n;
                point.mean_lenient = lenient_sum / point.n;
            }
            curves.points.push_back(point);
        }
    }
    return curves;
}

SweepResult weight_sweep(const std::vector<SweepRecord>& records,
                         const std::vector<double>& candidates,
                         SweepMetric metric) {
    if (records.size() < 2)
        throw std::invalid_argument("weight_sweep: need at least two records");
    if (candidates.empty())
        throw std::invalid_argument("weight_sweep: no candidate weights");
    std::vector<double> human;
    human.reserve(records.size());
    for (const auto& r : records) human.push_back(r.human);
    SweepResult result;
    double best_r = -2.0;
    for (double eta : candidates) {
        std::vector<double> composed;
        composed.reserve(records.size());
        for (const auto& r : records) {
            composed.push_back(metric == SweepMetric::Sqcs
                                   ? compose::sqcs(r.a, r.b, eta)
                                   : compose::ics(r.a, r.b, eta));
        }
        double r = pearson(composed, human);
        result.correlations.emplace_back(eta, r);
        if (r > best_r) {
            best_r = r;
            result.best_eta = eta;
        }
    }
    return result;
}

}  // namespace unim::rationality

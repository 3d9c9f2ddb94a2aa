#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "insight/errors.hpp"
#include "insight/model.hpp"
#include "insight/rng.hpp"

namespace insight {

constexpr int kBlockSize = 100;

enum class PhaseKind { Training, Motion, MotionAndColour };

inline const char* to_string(PhaseKind p) {
    switch (p) {
        case PhaseKind::Training: return "training";
        case PhaseKind::Motion: return "motion";
        case PhaseKind::MotionAndColour: return "motion_and_colour";
    }
    return "?";
}

struct Phase {
    PhaseKind kind;
    int block_count;
    std::vector<int> coherence_labels;  // active levels, by percent label
};

// Per-100-trial frequency weights. In blocks with all five levels:
// 5% -> 30 trials, the rest 10/20/20/20. Training blocks run only the
// three highest levels, renormalised to 34/33/33.
inline std::map<int, int> block_frequencies(const std::vector<int>& labels) {
    static const std::map<int, int> full{{5, 30}, {10, 10}, {20, 20}, {30, 20}, {45, 20}};
    if (labels.size() == kCoherenceLabels.size()) return full;
    if (labels == std::vector<int>{20, 30, 45}) return {{20, 34}, {30, 33}, {45, 33}};
    // Generic renormalisation: scale the canonical weights to fill 100.
    int total = 0;
    std::map<int, int> out;
    for (int lab : labels) {
        auto it = full.find(lab);
        if (it == full.end())
            throw config_error("unknown coherence label " + std::to_string(lab));
        out[lab] = it->second;
        total += it->second;
    }
    int assigned = 0;
    std::map<int, int> scaled;
    int i = 0;
    for (auto& [lab, w] : out) {
        int share = (i + 1 == static_cast<int>(out.size()))
                        ? kBlockSize - assigned
                        : (w * kBlockSize + total / 2) / total;
        scaled[lab] = share;
        assigned += share;
        ++i;
    }
    return scaled;
}

// Default network curriculum: 6 training blocks on the three highest
// levels, 2 motion blocks and 5 motion-and-colour blocks on all five.
inline std::vector<Phase> default_curriculum() {
    const std::vector<int> all(kCoherenceLabels.begin(), kCoherenceLabels.end());
    return {
        {PhaseKind::Training, 6, {20, 30, 45}},
        {PhaseKind::Motion, 2, all},
        {PhaseKind::MotionAndColour, 5, all},
    };
}

struct TrialSkeleton {
    std::int32_t index;
    PhaseKind phase;
    int coherence;         // percent label
    int y;                 // correct label, +1 / -1
    int colour_sign;       // random sign used when colour is not predictive
    bool colour_predictive;
};

inline int coherence_index(int label) {
    for (int i = 0; i < kNumCoherenceLevels; ++i)
        if (kCoherenceLabels[i] == label) return i;
    throw config_error("unknown coherence label " + std::to_string(label));
}

// Builds the trial skeletons (phase, coherence, label, colour-mean sign).
// Blocks are assembled as two stratified 50-trial half-blocks so each
// half-block carries exactly half of every level's frequency weight; under
// the default table that puts 15 lowest-coherence trials in every
// half-block, aligning analysis bins 1:1 with half-blocks.
// control = true keeps the colour sign independent of y in all phases.
inline std::vector<TrialSkeleton> build_curriculum(const std::vector<Phase>& phases,
                                                   Rng& rng, bool control) {
    if (phases.empty()) throw config_error("curriculum has no phases");
    std::vector<TrialSkeleton> out;
    std::int32_t index = 0;
    for (const auto& ph : phases) {
        const auto freq = block_frequencies(ph.coherence_labels);
        int sum = 0;
        for (auto& [lab, w] : freq) sum += w;
        if (sum != kBlockSize)
            throw config_error("frequency weights sum to " + std::to_string(sum) +
                               ", expected " + std::to_string(kBlockSize));
        for (int b = 0; b < ph.block_count; ++b) {
            for (int half = 0; half < 2; ++half) {
                std::vector<int> labels;
                for (auto& [lab, w] : freq) {
                    const int n = w / 2 + (half == 0 ? w % 2 : 0);
                    labels.insert(labels.end(), n, lab);
                }
                shuffle(labels, rng);
                for (int lab : labels) {
                    TrialSkeleton t;
                    t.index = index++;
                    t.phase = ph.kind;
                    t.coherence = lab;
                    t.y = rng.sign();
                    t.colour_sign = rng.sign();
                    t.colour_predictive =
                        ph.kind == PhaseKind::MotionAndColour && !control;
                    out.push_back(t);
                }
            }
        }
    }
    return out;
}

struct Inputs {
    double x_m;
    double x_c;
};

// x_m ~ N(y * M_m[coherence], sigma_m); x_c ~ N(c * M_c, sigma_c) where c
// is y when colour is predictive and the skeleton's random sign otherwise.
inline Inputs sample_inputs(const TrialSkeleton& t, const Hyperparameters& hyp,
                            Rng& rng) {
    const double m = hyp.m_m[static_cast<std::size_t>(coherence_index(t.coherence))];
    if (!std::isfinite(m))
        throw config_error("no calibrated motion mean for coherence level " +
                           std::to_string(t.coherence));
    const int c = t.colour_predictive ? t.y : t.colour_sign;
    return {rng.normal(t.y * m, hyp.sigma_m), rng.normal(c * hyp.m_c, hyp.sigma_c)};
}

inline std::size_t curriculum_length(const std::vector<Phase>& phases) {
    std::size_t n = 0;
    for (const auto& p : phases) n += static_cast<std::size_t>(p.block_count) * kBlockSize;
    return n;
}

// Canonical seeded construction. The rng consumption is identical for
// control and non-control builds (the flag only changes bookkeeping), so
// both cohorts of a run share trial skeletons exactly.
inline std::vector<TrialSkeleton> build_curriculum_seeded(
    const std::vector<Phase>& phases, std::uint64_t sequence_seed, bool control) {
    Rng rng(sequence_seed);
    return build_curriculum(phases, rng, control);
}

}  // namespace insight

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "insight/errors.hpp"
#include "insight/trainer.hpp"

namespace insight {

// Accuracy on the lowest-coherence trials, chunked chronologically into
// bins of bin_size trials. t_origin is the bin index at which the
// motion-and-colour phase begins; y_min is the agent's mean accuracy on
// lowest-coherence trials during the motion phase.
struct AccuracySeries {
    std::vector<double> bins;
    int bin_size = 15;
    int t_origin = 0;
    double y_min = 0.5;

    int post_onset_bins() const { return static_cast<int>(bins.size()) - t_origin; }
};

inline AccuracySeries bin_series(const std::vector<TrialRecord>& trials,
                                 int bin_size = 15) {
    if (bin_size <= 0) throw config_error("bin_size must be positive");
    int lowest = 0;
    bool any = false;
    for (const auto& t : trials) {
        if (t.phase == PhaseKind::Training) continue;
        if (!any || t.coherence < lowest) {
            lowest = t.coherence;
            any = true;
        }
    }
    if (!any) throw data_error("bin_series: no trials outside the training phase");

    std::vector<std::uint8_t> correct;
    std::vector<std::uint8_t> in_motion;
    correct.reserve(trials.size() / 3);
    for (const auto& t : trials) {
        if (t.phase == PhaseKind::Training || t.coherence != lowest) continue;
        correct.push_back(t.correct);
        in_motion.push_back(t.phase == PhaseKind::Motion ? 1 : 0);
    }
    const auto n = static_cast<int>(correct.size());
    if (n < 2 * bin_size)
        throw data_error("bin_series: need at least " + std::to_string(2 * bin_size) +
                         " lowest-coherence trials, got " + std::to_string(n));

    AccuracySeries s;
    s.bin_size = bin_size;
    double motion_hits = 0.0, motion_count = 0.0;
    int pre_onset = 0;
    bool onset_seen = false;
    for (int i = 0; i < n; ++i) {
        if (in_motion[i]) {
            motion_hits += correct[i];
            motion_count += 1.0;
        }
        if (!onset_seen) {
            if (in_motion[i])
                ++pre_onset;
            else
                onset_seen = true;
        }
    }
    s.y_min = motion_count > 0.0 ? motion_hits / motion_count : 0.5;
    s.t_origin = pre_onset / bin_size;

    const int nbins = n / bin_size;  // trailing partial bin dropped
    s.bins.resize(static_cast<std::size_t>(nbins));
    for (int b = 0; b < nbins; ++b) {
        double acc = 0.0;
        for (int i = 0; i < bin_size; ++i) acc += correct[static_cast<std::size_t>(b * bin_size + i)];
        s.bins[static_cast<std::size_t>(b)] = acc / bin_size;
    }
    return s;
}

}  // namespace insight

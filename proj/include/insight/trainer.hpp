#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "insight/deep.hpp"
#include "insight/model.hpp"
#include "insight/task.hpp"

namespace insight {

struct TrialRecord {
    std::int32_t agent_id = 0;
    std::int32_t trial = 0;
    PhaseKind phase = PhaseKind::Training;
    std::int16_t coherence = 0;
    std::int8_t y = 0;
    std::int8_t decision = 0;
    std::uint8_t correct = 0;
    // parameters entering the trial (pre-update) and the applied deltas
    double w_m = 0, w_c = 0, g_m = 0, g_c = 0;
    double d_w_m = 0, d_w_c = 0, d_g_m = 0, d_g_c = 0;
    // memory-only extras, not part of the CSV schema
    double x_m = 0, x_c = 0, eta = 0;
    double xi_w_m = 0, xi_w_c = 0, xi_g_m = 0, xi_g_c = 0;
};

// Called once per trial before the forward pass; used by the
// weight-transplant experiment at the first motion-and-colour trial.
using Intervention = std::function<void(std::int32_t trial, NetworkState&)>;

struct AgentRun {
    std::vector<TrialRecord> records;
    NetworkState onset_state;   // state entering the first motion-and-colour trial
    NetworkState final_state;
    bool diverged = false;
    long diverged_trial = -1;
    double cumulative_eta = 0.0;
    double cumulative_xi = 0.0;
};

// Trains one agent through the full skeleton sequence with per-trial
// logging. Noise stream: x_m, x_c, eta, then xi draws, in that order, so
// experimental and control cohorts with equal seeds consume identical
// random numbers and differ only through the colour-mean sign.
inline AgentRun train_agent(std::int32_t agent_id,
                            const std::vector<TrialSkeleton>& skeletons,
                            const Hyperparameters& hyp, std::uint64_t seed,
                            bool keep_records = true,
                            const Intervention& intervene = nullptr) {
    AgentRun run;
    Rng rng(seed);
    NetworkState state = initial_state(seed, hyp.regulariser);
    if (keep_records) run.records.reserve(skeletons.size());
    bool onset_seen = false;

    for (const auto& t : skeletons) {
        if (intervene && !onset_seen && t.phase == PhaseKind::MotionAndColour)
            intervene(t.index, state);
        if (!onset_seen && t.phase == PhaseKind::MotionAndColour) {
            run.onset_state = state;
            onset_seen = true;
        }
        const Inputs in = sample_inputs(t, hyp, rng);
        const double eta = hyp.sigma_eta > 0.0 ? rng.normal(0.0, hyp.sigma_eta) : 0.0;
        const ForwardResult fwd = forward(state, in.x_m, in.x_c, eta);

        TrialRecord rec;
        rec.agent_id = agent_id;
        rec.trial = t.index;
        rec.phase = t.phase;
        rec.coherence = static_cast<std::int16_t>(t.coherence);
        rec.y = static_cast<std::int8_t>(t.y);
        rec.decision = static_cast<std::int8_t>(fwd.decision);
        rec.correct = fwd.decision == t.y ? 1 : 0;
        rec.w_m = state.w_m;
        rec.w_c = state.w_c;
        rec.g_m = state.g_m;
        rec.g_c = state.g_c;
        rec.x_m = in.x_m;
        rec.x_c = in.x_c;
        rec.eta = eta;

        try {
            auto [next, snap] = sgd_step_with_eta(state, in.x_m, in.x_c, eta, t.y, hyp, rng);
            rec.d_w_m = snap.d_w_m;
            rec.d_w_c = snap.d_w_c;
            rec.d_g_m = snap.d_g_m;
            rec.d_g_c = snap.d_g_c;
            rec.xi_w_m = snap.xi_w_m;
            rec.xi_w_c = snap.xi_w_c;
            rec.xi_g_m = snap.xi_g_m;
            rec.xi_g_c = snap.xi_g_c;
            run.cumulative_eta += eta;
            run.cumulative_xi += snap.xi_w_m + snap.xi_w_c + snap.xi_g_m + snap.xi_g_c;
            state = next;
        } catch (const divergence_error& e) {
            run.diverged = true;
            run.diverged_trial = t.index;
            if (keep_records) run.records.push_back(rec);
            break;
        }
        if (keep_records) run.records.push_back(rec);
    }
    if (!onset_seen) run.onset_state = state;
    run.final_state = state;
    return run;
}

// Lean training pass for calibration: runs the given skeletons and tallies
// per-coherence-level accuracy over motion-phase trials only.
inline std::array<double, kNumCoherenceLevels> motion_phase_accuracy(
    const std::vector<TrialSkeleton>& skeletons, const Hyperparameters& hyp,
    std::uint64_t seed) {
    Rng rng(seed);
    NetworkState state = initial_state(seed, hyp.regulariser);
    std::array<double, kNumCoherenceLevels> hits{}, count{};
    for (const auto& t : skeletons) {
        if (t.phase == PhaseKind::MotionAndColour) break;
        const Inputs in = sample_inputs(t, hyp, rng);
        const double eta = hyp.sigma_eta > 0.0 ? rng.normal(0.0, hyp.sigma_eta) : 0.0;
        const ForwardResult fwd = forward(state, in.x_m, in.x_c, eta);
        if (t.phase == PhaseKind::Motion) {
            const auto li = static_cast<std::size_t>(coherence_index(t.coherence));
            hits[li] += fwd.decision == t.y ? 1.0 : 0.0;
            count[li] += 1.0;
        }
        try {
            state = sgd_step_with_eta(state, in.x_m, in.x_c, eta, t.y, hyp, rng).first;
        } catch (const divergence_error&) {
            break;  // treat as chance performance for the remaining trials
        }
    }
    std::array<double, kNumCoherenceLevels> acc{};
    for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i] = count[i] > 0.0 ? hits[i] / count[i] : 0.5;
    return acc;
}

struct DeepAgentRun {
    std::vector<TrialRecord> records;
    DeepNetworkState final_state;
    bool diverged = false;
    long diverged_trial = -1;
};

namespace detail {
inline double mean_abs_row(const std::array<std::array<double, DeepNetworkState::kHidden>, 2>& m,
                           int row) {
    double s = 0.0;
    for (int j = 0; j < DeepNetworkState::kHidden; ++j) s += std::fabs(m[row][j]);
    return s / DeepNetworkState::kHidden;
}
}  // namespace detail

// Deep-variant trainer. Parameter columns in the records carry per-row
// mean absolute magnitudes (motion/colour rows of W1 and the gates), which
// keeps the downstream analyses meaningful for the hidden-layer model.
inline DeepAgentRun train_deep_agent(std::int32_t agent_id,
                                     const std::vector<TrialSkeleton>& skeletons,
                                     const Hyperparameters& hyp, std::uint64_t seed,
                                     bool keep_records = true) {
    DeepAgentRun run;
    Rng rng(seed);
    DeepNetworkState state = deep_initial_state(seed);
    if (keep_records) run.records.reserve(skeletons.size());
    for (const auto& t : skeletons) {
        const Inputs in = sample_inputs(t, hyp, rng);
        const auto fwd = deep_forward(state, in.x_m, in.x_c);

        TrialRecord rec;
        rec.agent_id = agent_id;
        rec.trial = t.index;
        rec.phase = t.phase;
        rec.coherence = static_cast<std::int16_t>(t.coherence);
        rec.y = static_cast<std::int8_t>(t.y);
        rec.decision = static_cast<std::int8_t>(fwd.decision);
        rec.correct = fwd.decision == t.y ? 1 : 0;
        rec.w_m = detail::mean_abs_row(state.w1, 0);
        rec.w_c = detail::mean_abs_row(state.w1, 1);
        rec.g_m = detail::mean_abs_row(state.gates, 0);
        rec.g_c = detail::mean_abs_row(state.gates, 1);

        try {
            DeepNetworkState next = deep_sgd_step(state, in.x_m, in.x_c, t.y, hyp, rng);
            rec.d_w_m = detail::mean_abs_row(next.w1, 0) - rec.w_m;
            rec.d_w_c = detail::mean_abs_row(next.w1, 1) - rec.w_c;
            rec.d_g_m = detail::mean_abs_row(next.gates, 0) - rec.g_m;
            rec.d_g_c = detail::mean_abs_row(next.gates, 1) - rec.g_c;
            state = next;
        } catch (const divergence_error&) {
            run.diverged = true;
            run.diverged_trial = t.index;
            if (keep_records) run.records.push_back(rec);
            break;
        }
        if (keep_records) run.records.push_back(rec);
    }
    run.final_state = state;
    return run;
}

inline std::array<double, kNumCoherenceLevels> deep_motion_phase_accuracy(
    const std::vector<TrialSkeleton>& skeletons, const Hyperparameters& hyp,
    std::uint64_t seed) {
    Rng rng(seed);
    DeepNetworkState state = deep_initial_state(seed);
    std::array<double, kNumCoherenceLevels> hits{}, count{};
    for (const auto& t : skeletons) {
        if (t.phase == PhaseKind::MotionAndColour) break;
        const Inputs in = sample_inputs(t, hyp, rng);
        const auto fwd = deep_forward(state, in.x_m, in.x_c);
        if (t.phase == PhaseKind::Motion) {
            const auto li = static_cast<std::size_t>(coherence_index(t.coherence));
            hits[li] += fwd.decision == t.y ? 1.0 : 0.0;
            count[li] += 1.0;
        }
        try {
            state = deep_sgd_step(state, in.x_m, in.x_c, t.y, hyp, rng);
        } catch (const divergence_error&) {
            break;
        }
    }
    std::array<double, kNumCoherenceLevels> acc{};
    for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i] = count[i] > 0.0 ? hits[i] / count[i] : 0.5;
    return acc;
}

}  // namespace insight

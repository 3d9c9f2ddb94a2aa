#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "insight/bms.hpp"
#include "insight/calibration.hpp"
#include "insight/classify.hpp"
#include "insight/curvefit.hpp"
#include "insight/parallel.hpp"
#include "insight/series.hpp"
#include "insight/stats.hpp"
#include "insight/task.hpp"
#include "insight/trainer.hpp"

namespace insight {

// Seed-stream tags: agents, shared input sequences, calibration replicates
// and sweep repetitions never collide.
namespace streams {
constexpr std::uint64_t kAgent = 1;
constexpr std::uint64_t kSequence = 2;
constexpr std::uint64_t kCalibration = 3;
constexpr std::uint64_t kSweep = 4;
}  // namespace streams

enum class Variant { ShallowL1, ShallowL2, ShallowNone, NoGate, DeepL1 };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::ShallowL1: return "shallow_l1";
        case Variant::ShallowL2: return "shallow_l2";
        case Variant::ShallowNone: return "shallow_none";
        case Variant::NoGate: return "no_gate";
        case Variant::DeepL1: return "deep_l1";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "shallow_l1") return Variant::ShallowL1;
    if (s == "shallow_l2") return Variant::ShallowL2;
    if (s == "shallow_none") return Variant::ShallowNone;
    if (s == "no_gate") return Variant::NoGate;
    if (s == "deep_l1") return Variant::DeepL1;
    throw config_error("unknown variant: " + s);
}

// Variant-specific hyperparameter defaults. The deep net trains with a
// smaller rate and regulariser and tolerates less gradient noise.
inline Hyperparameters variant_hyperparameters(Variant v) {
    Hyperparameters h;
    switch (v) {
        case Variant::ShallowL1:
            h.regulariser = Regulariser::L1;
            break;
        case Variant::ShallowL2:
            h.regulariser = Regulariser::L2;
            break;
        case Variant::ShallowNone:
            h.regulariser = Regulariser::None;
            break;
        case Variant::NoGate:
            h.regulariser = Regulariser::NoGate;
            break;
        case Variant::DeepL1:
            h.regulariser = Regulariser::L1;
            h.alpha = 0.1;
            h.lambda = 0.002;
            h.sigma_xi = 0.01;
            break;
    }
    return h;
}

struct CohortSpec {
    int n_agents = 99;
    std::uint64_t master_seed = 1;
    Variant variant = Variant::ShallowL1;
    Hyperparameters hyp = variant_hyperparameters(Variant::ShallowL1);
    std::vector<Phase> curriculum = default_curriculum();
    bool control = false;          // colour never becomes predictive
    int sequence_groups = 10;      // K shared input sequences
    AccuracyTarget targets = default_targets();
    CalibrationOptions calibration;
    bool per_agent_calibration = false;
    int bin_size = 15;
    SigmoidFitOptions sigmoid_fit;
    bool keep_trial_logs = true;
    unsigned threads = 0;

    void validate() const {
        if (n_agents < 1) throw config_error("n_agents must be >= 1");
        if (sequence_groups < 1) throw config_error("sequence_groups must be >= 1");
        hyp.validate();
        targets.validate();
    }

    std::uint64_t agent_seed(int i) const {
        return derive_seed(master_seed, streams::kAgent, static_cast<std::uint64_t>(i));
    }
    std::uint64_t sequence_seed(int i) const {
        return derive_seed(master_seed, streams::kSequence,
                           static_cast<std::uint64_t>(i % sequence_groups));
    }
};

struct AgentSummary {
    int agent_id = 0;
    bool diverged = false;
    long diverged_trial = -1;
    AccuracySeries series;
    CurveFit sigmoid_fit, linear_fit, step_fit;
    double corrected = 0.0;
    double onset_abs_w_m = 0, onset_abs_w_c = 0, onset_abs_g_m = 0, onset_abs_g_c = 0;
    double final_abs_w_m = 0, final_abs_w_c = 0, final_abs_g_m = 0, final_abs_g_c = 0;
    double cumulative_eta = 0, cumulative_xi = 0;
    std::vector<TrialRecord> log;  // empty when trial logs are not retained
};

struct CohortResult {
    std::vector<AgentSummary> experimental;
    std::vector<AgentSummary> control_group;
    std::vector<InsightClassification> classes;  // one per non-diverged experimental agent
    double threshold = 0.0;
    int insight_count = 0;
    double insight_fraction = 0.0;
    std::vector<double> delays;  // per insight agent, in bins
    double mean_delay_bins = 0.0;
    double sd_delay_bins = 0.0;
    std::optional<KsResult> ks_delays;
    ModelComparison comparison_all;
    std::optional<ModelComparison> comparison_insight;
    SwitchAligned aligned;
    int diverged_count = 0;
    std::vector<CalibrationResult> calibrations;  // one per sequence group (or agent)
    int post_onset_bins = 0;
};

namespace detail {

inline void analyse_agent(AgentSummary& s, int bin_size, const SigmoidFitOptions& fopts) {
    s.series = bin_series(s.log, bin_size);
    s.sigmoid_fit = fit_sigmoid(s.series, fopts);
    s.linear_fit = fit_linear(s.series);
    s.step_fit = fit_step(s.series);
    s.corrected = corrected_steepness(s.sigmoid_fit, s.series);
}

inline AgentSummary summarize_shallow(int id, AgentRun&& run) {
    AgentSummary s;
    s.agent_id = id;
    s.diverged = run.diverged;
    s.diverged_trial = run.diverged_trial;
    s.onset_abs_w_m = std::fabs(run.onset_state.w_m);
    s.onset_abs_w_c = std::fabs(run.onset_state.w_c);
    s.onset_abs_g_m = std::fabs(run.onset_state.g_m);
    s.onset_abs_g_c = std::fabs(run.onset_state.g_c);
    s.final_abs_w_m = std::fabs(run.final_state.w_m);
    s.final_abs_w_c = std::fabs(run.final_state.w_c);
    s.final_abs_g_m = std::fabs(run.final_state.g_m);
    s.final_abs_g_c = std::fabs(run.final_state.g_c);
    s.cumulative_eta = run.cumulative_eta;
    s.cumulative_xi = run.cumulative_xi;
    s.log = std::move(run.records);
    return s;
}

inline AgentSummary summarize_deep(int id, DeepAgentRun&& run) {
    AgentSummary s;
    s.agent_id = id;
    s.diverged = run.diverged;
    s.diverged_trial = run.diverged_trial;
    bool onset_seen = false;
    for (const auto& r : run.records) {
        if (!onset_seen && r.phase == PhaseKind::MotionAndColour) {
            s.onset_abs_w_m = r.w_m;
            s.onset_abs_w_c = r.w_c;
            s.onset_abs_g_m = r.g_m;
            s.onset_abs_g_c = r.g_c;
            onset_seen = true;
        }
    }
    if (!run.records.empty()) {
        const auto& last = run.records.back();
        s.final_abs_w_m = last.w_m + last.d_w_m;
        s.final_abs_w_c = last.w_c + last.d_w_c;
        s.final_abs_g_m = last.g_m + last.d_g_m;
        s.final_abs_g_c = last.g_c + last.d_g_c;
    }
    s.log = std::move(run.records);
    return s;
}

inline CohortResult run_cohort_impl(const CohortSpec& spec, const Intervention& intervene) {
    spec.validate();
    CohortResult out;

    const int n_cal = spec.per_agent_calibration ? spec.n_agents
                                                 : std::min(spec.sequence_groups, spec.n_agents);
    out.calibrations.resize(static_cast<std::size_t>(n_cal));
    parallel_for(static_cast<std::size_t>(n_cal), [&](std::size_t c) {
        const int idx = static_cast<int>(c);
        const std::uint64_t cal_seed =
            derive_seed(spec.master_seed, streams::kCalibration, static_cast<std::uint64_t>(idx));
        const std::uint64_t skel_seed = spec.sequence_seed(idx);
        out.calibrations[c] =
            spec.variant == Variant::DeepL1
                ? calibrate_deep(spec.targets, spec.hyp, cal_seed, spec.curriculum,
                                 spec.calibration, skel_seed)
                : calibrate(spec.targets, spec.hyp, cal_seed, spec.curriculum,
                            spec.calibration, skel_seed);
    }, spec.threads);
    auto means_for = [&](int agent) -> const MotionMeans& {
        const int idx = spec.per_agent_calibration ? agent : agent % spec.sequence_groups;
        return out.calibrations[static_cast<std::size_t>(std::min(idx, n_cal - 1))].fitted;
    };

    out.experimental.resize(static_cast<std::size_t>(spec.n_agents));
    out.control_group.resize(static_cast<std::size_t>(spec.n_agents));
    const bool deep = spec.variant == Variant::DeepL1;

    parallel_for(static_cast<std::size_t>(spec.n_agents), [&](std::size_t a) {
        const int id = static_cast<int>(a);
        Hyperparameters hyp = spec.hyp;
        hyp.m_m = means_for(id);
        const std::uint64_t seed = spec.agent_seed(id);
        const auto skel_exp =
            build_curriculum_seeded(spec.curriculum, spec.sequence_seed(id), spec.control);
        const auto skel_ctl =
            build_curriculum_seeded(spec.curriculum, spec.sequence_seed(id), true);
        if (deep) {
            out.experimental[a] = summarize_deep(id, train_deep_agent(id, skel_exp, hyp, seed));
            out.control_group[a] = summarize_deep(id, train_deep_agent(id, skel_ctl, hyp, seed));
        } else {
            out.experimental[a] =
                summarize_shallow(id, train_agent(id, skel_exp, hyp, seed, true, intervene));
            out.control_group[a] = summarize_shallow(id, train_agent(id, skel_ctl, hyp, seed));
        }
        for (AgentSummary* s : {&out.experimental[a], &out.control_group[a]})
            if (!s->diverged) analyse_agent(*s, spec.bin_size, spec.sigmoid_fit);
    }, spec.threads);

    std::vector<double> control_corrected;
    std::vector<const AgentSummary*> live;
    for (auto& s : out.control_group)
        if (!s.diverged) control_corrected.push_back(s.corrected);
    for (auto& s : out.experimental) {
        if (s.diverged)
            ++out.diverged_count;
        else
            live.push_back(&s);
    }
    if (control_corrected.empty())
        throw data_error("run_cohort: entire control cohort diverged");

    std::vector<CurveFit> fits;
    std::vector<AccuracySeries> series;
    std::vector<std::vector<double>> bics;
    for (const auto* s : live) {
        fits.push_back(s->sigmoid_fit);
        series.push_back(s->series);
        bics.push_back({s->sigmoid_fit.bic_value, s->linear_fit.bic_value, s->step_fit.bic_value});
    }
    out.classes = classify_cohort(fits, series, control_corrected);
    for (std::size_t i = 0; i < out.classes.size(); ++i)
        out.classes[i].agent_id = live[i]->agent_id;
    out.threshold = out.classes.empty() ? 0.0 : out.classes.front().threshold;

    for (const auto& c : out.classes)
        if (c.is_insight) {
            ++out.insight_count;
            out.delays.push_back(static_cast<double>(c.delay_bins));
        }
    out.insight_fraction = static_cast<double>(out.insight_count) / spec.n_agents;
    out.mean_delay_bins = mean_of(out.delays);
    out.sd_delay_bins = sd_of(out.delays);
    out.post_onset_bins = series.empty() ? 0 : series.front().post_onset_bins();
    if (!out.delays.empty())
        out.ks_delays = ks_uniform_delays(out.delays, static_cast<double>(out.post_onset_bins));

    if (bics.size() >= 2) out.comparison_all = group_model_comparison(bics);
    std::vector<std::vector<double>> insight_bics;
    for (std::size_t i = 0; i < out.classes.size(); ++i)
        if (out.classes[i].is_insight) insight_bics.push_back(bics[i]);
    if (insight_bics.size() >= 2)
        out.comparison_insight = group_model_comparison(insight_bics);

    out.aligned = switch_align(series, out.classes);

    if (!spec.keep_trial_logs) {
        for (auto& s : out.experimental) s.log.clear();
        for (auto& s : out.control_group) s.log.clear();
    }
    return out;
}

}  // namespace detail

// Trains the experimental cohort plus its paired control (same master
// seed, same shared input sequences, same private noise streams; the two
// differ only in whether the colour mean follows the label after onset),
// fits and classifies every agent, and aggregates the group statistics.
inline CohortResult run_cohort(const CohortSpec& spec) {
    return detail::run_cohort_impl(spec, nullptr);
}

// Fresh cohort in which every agent's |w_c| and |w_m| are set to the given
// targets (signs preserved, gates untouched) at the first trial of the
// motion-and-colour phase. The paired control group is left untouched.
inline CohortResult weight_transplant(const CohortSpec& spec, double w_c_target,
                                      double w_m_target) {
    if (w_c_target < 0.0 || w_m_target < 0.0)
        throw config_error("weight_transplant: targets must be >= 0");
    if (spec.variant == Variant::DeepL1)
        throw config_error("weight_transplant: shallow variants only");
    Intervention transplant = [=](std::int32_t, NetworkState& st) {
        st.w_c = (st.w_c >= 0.0 ? 1.0 : -1.0) * w_c_target;
        st.w_m = (st.w_m >= 0.0 ? 1.0 : -1.0) * w_m_target;
    };
    return detail::run_cohort_impl(spec, transplant);
}

// Per-agent transplant hook, used e.g. for the self-target no-op check.
inline CohortResult run_cohort_with_intervention(const CohortSpec& spec,
                                                 const Intervention& intervene) {
    return detail::run_cohort_impl(spec, intervene);
}

struct SweepPoint {
    double axis_value = 0.0;
    std::string mask_label;
    int repetition = 0;
    int insight_count = 0;
    double mean_delay_bins = 0.0;
};

struct SweepSummaryRow {
    double axis_value = 0.0;
    std::string mask_label;
    double mean_insight = 0.0;
    double sd_insight = 0.0;
    double mean_delay = 0.0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::vector<SweepSummaryRow> summary;
};

struct SweepSpec {
    std::vector<double> axis;
    int repetitions = 10;

    void validate(double lo, double hi) const {
        if (axis.empty()) throw config_error("sweep axis is empty");
        if (repetitions < 1) throw config_error("sweep repetitions must be >= 1");
        double prev = -std::numeric_limits<double>::infinity();
        for (double v : axis) {
            if (v <= prev) throw config_error("sweep axis must be strictly increasing");
            if (v < lo || v > hi)
                throw config_error("sweep axis value outside [" + std::to_string(lo) +
                                   ", " + std::to_string(hi) + "]");
            prev = v;
        }
    }
};

namespace detail {
inline SweepResult finalize_sweep(std::vector<SweepPoint>&& points,
                                  const std::vector<double>& axis,
                                  const std::vector<std::string>& labels) {
    SweepResult out;
    out.points = std::move(points);
    for (const auto& lab : labels)
        for (double v : axis) {
            SweepSummaryRow row;
            row.axis_value = v;
            row.mask_label = lab;
            std::vector<double> counts, delays;
            for (const auto& p : out.points)
                if (p.mask_label == lab && p.axis_value == v) {
                    counts.push_back(p.insight_count);
                    if (p.insight_count > 0) delays.push_back(p.mean_delay_bins);
                }
            row.mean_insight = mean_of(counts);
            row.sd_insight = sd_of(counts);
            row.mean_delay = mean_of(delays);
            out.summary.push_back(row);
        }
    return out;
}
}  // namespace detail

// Gradient-noise magnitude / targeting sweep: for every (mask, sigma_xi)
// point, `repetitions` cohorts run with distinct master seeds. Each cohort
// classifies against its own matched control.
inline SweepResult sweep_noise(const CohortSpec& base, const SweepSpec& sweep,
                               const std::vector<std::pair<std::string, NoiseMask>>& masks) {
    sweep.validate(0.0, 0.5);
    if (masks.empty()) throw config_error("sweep_noise: no masks given");
    std::vector<SweepPoint> points;
    std::vector<std::string> labels;
    for (std::size_t m = 0; m < masks.size(); ++m) {
        labels.push_back(masks[m].first);
        for (std::size_t p = 0; p < sweep.axis.size(); ++p)
            for (int r = 0; r < sweep.repetitions; ++r) {
                CohortSpec spec = base;
                spec.keep_trial_logs = false;
                spec.hyp.sigma_xi = sweep.axis[p];
                spec.hyp.noise_mask = masks[m].second;
                spec.master_seed = derive_seed(
                    base.master_seed, streams::kSweep,
                    (m * 1000 + p) * 1000 + static_cast<std::uint64_t>(r));
                const auto res = run_cohort(spec);
                SweepPoint pt;
                pt.axis_value = sweep.axis[p];
                pt.mask_label = masks[m].first;
                pt.repetition = r;
                pt.insight_count = res.insight_count;
                pt.mean_delay_bins = res.mean_delay_bins;
                points.push_back(pt);
            }
    }
    return detail::finalize_sweep(std::move(points), sweep.axis, labels);
}

// Regularisation-strength sweep; reports counts and mean switch delay.
inline SweepResult sweep_lambda(const CohortSpec& base, const SweepSpec& sweep) {
    sweep.validate(0.0, 0.3);
    std::vector<SweepPoint> points;
    for (std::size_t p = 0; p < sweep.axis.size(); ++p)
        for (int r = 0; r < sweep.repetitions; ++r) {
            CohortSpec spec = base;
            spec.keep_trial_logs = false;
            spec.hyp.lambda = sweep.axis[p];
            spec.master_seed = derive_seed(base.master_seed, streams::kSweep,
                                           900000 + p * 1000 + static_cast<std::uint64_t>(r));
            const auto res = run_cohort(spec);
            SweepPoint pt;
            pt.axis_value = sweep.axis[p];
            pt.mask_label = "lambda";
            pt.repetition = r;
            pt.insight_count = res.insight_count;
            pt.mean_delay_bins = res.mean_delay_bins;
            points.push_back(pt);
        }
    return detail::finalize_sweep(std::move(points), sweep.axis, {"lambda"});
}

struct VariantSummary {
    Variant variant = Variant::ShallowL1;
    int insight_count = 0;
    double insight_fraction = 0.0;
    double mean_delay_bins = 0.0;
    double sd_delay_bins = 0.0;
    std::vector<double> corrected_steepness;
    double steepness_dip = 0.0;
};

// Runs each variant cohort with matched seeds; variant differences are
// then not confounded by trial-sequence differences.
inline std::vector<VariantSummary> compare_variants(const CohortSpec& base,
                                                    const std::vector<Variant>& variants) {
    if (variants.size() < 2) throw config_error("compare_variants: need >= 2 variants");
    std::vector<VariantSummary> out;
    for (Variant v : variants) {
        CohortSpec spec = base;
        spec.variant = v;
        Hyperparameters hv = variant_hyperparameters(v);
        hv.sigma_eta = base.hyp.sigma_eta;
        hv.sigma_m = base.hyp.sigma_m;
        hv.sigma_c = base.hyp.sigma_c;
        hv.m_c = base.hyp.m_c;
        hv.noise_mask = base.hyp.noise_mask;
        if (v != Variant::DeepL1) {
            hv.alpha = base.hyp.alpha;
            hv.sigma_xi = base.hyp.sigma_xi;
            if (v == Variant::ShallowL1 || v == Variant::ShallowL2) hv.lambda = base.hyp.lambda;
        }
        spec.hyp = hv;
        spec.keep_trial_logs = false;
        const auto res = run_cohort(spec);
        VariantSummary s;
        s.variant = v;
        s.insight_count = res.insight_count;
        s.insight_fraction = res.insight_fraction;
        s.mean_delay_bins = res.mean_delay_bins;
        s.sd_delay_bins = res.sd_delay_bins;
        for (const auto& c : res.classes) s.corrected_steepness.push_back(c.corrected_steepness);
        if (s.corrected_steepness.size() >= 4)
            s.steepness_dip = dip_statistic(s.corrected_steepness);
        out.push_back(std::move(s));
    }
    return out;
}

// Insight-group mean sign-aligned error-gradient of the colour gate per
// trial, reconstructed from the logged pre-update parameters. Positive
// values mean the gradient pushes the gate toward opening the colour path.
inline std::vector<double> colour_gate_drive_trace(const CohortResult& result,
                                                   int from_trial, int to_trial) {
    std::vector<double> trace(static_cast<std::size_t>(to_trial - from_trial), 0.0);
    std::vector<int> counts(trace.size(), 0);
    std::vector<bool> insight(result.experimental.size(), false);
    for (const auto& c : result.classes)
        if (c.is_insight && c.agent_id >= 0 &&
            c.agent_id < static_cast<int>(insight.size()))
            insight[static_cast<std::size_t>(c.agent_id)] = true;
    for (const auto& agent : result.experimental) {
        if (!insight[static_cast<std::size_t>(agent.agent_id)] || agent.log.empty()) continue;
        for (const auto& r : agent.log) {
            if (r.trial < from_trial || r.trial >= to_trial) continue;
            const double resid = r.g_m * r.w_m * r.x_m + r.g_c * r.w_c * r.x_c + r.eta - r.y;
            const double grad = -r.x_c * r.w_c * resid;  // loss-gradient units
            const double aligned = grad * (r.w_c >= 0.0 ? 1.0 : -1.0);
            trace[static_cast<std::size_t>(r.trial - from_trial)] += aligned;
            counts[static_cast<std::size_t>(r.trial - from_trial)] += 1;
        }
    }
    for (std::size_t i = 0; i < trace.size(); ++i)
        if (counts[i] > 0) trace[i] /= counts[i];
    return trace;
}

}  // namespace insight

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "insight/config.hpp"
#include "insight/csvio.hpp"
#include "insight/experiments.hpp"

namespace insight {

using ordered_json = nlohmann::ordered_json;

// The summary is reproducible from the classification CSVs alone (plus the
// config snapshot for the bin window), so `report` can regenerate it
// bit-identically.
inline ordered_json summary_json_from_rows(
    const std::vector<std::vector<double>>& exp_bics,
    const std::vector<double>& exp_corrected, const std::vector<int>& delay_bins,
    const std::vector<int>& is_insight, const std::vector<double>& control_corrected,
    int n_agents, int post_onset_bins, int diverged) {
    ordered_json j;
    const double thr = control_threshold(control_corrected);
    int count = 0;
    std::vector<double> delays;
    for (std::size_t i = 0; i < is_insight.size(); ++i)
        if (is_insight[i]) {
            ++count;
            delays.push_back(static_cast<double>(delay_bins[i]));
        }
    j["n_agents"] = n_agents;
    j["diverged"] = diverged;
    j["threshold"] = thr;
    j["insight_count"] = count;
    j["insight_fraction"] = static_cast<double>(count) / n_agents;
    j["mean_delay_bins"] = mean_of(delays);
    j["sd_delay_bins"] = sd_of(delays);
    j["post_onset_bins"] = post_onset_bins;
    if (!delays.empty()) {
        const auto ks = ks_uniform_delays(delays, static_cast<double>(post_onset_bins));
        j["ks_delays"] = {{"d", ks.d}, {"p", ks.p}, {"n", ks.n}};
    } else {
        j["ks_delays"] = nullptr;
    }
    if (exp_bics.size() >= 2) {
        const auto cmp = group_model_comparison(exp_bics);
        j["mean_bic"] = {{"sigmoid", cmp.mean_bic[0]},
                         {"linear", cmp.mean_bic[1]},
                         {"step", cmp.mean_bic[2]}};
        j["protected_exceedance"] = {{"sigmoid", cmp.protected_exceedance[0]},
                                     {"linear", cmp.protected_exceedance[1]},
                                     {"step", cmp.protected_exceedance[2]}};
        j["bor"] = cmp.bor;
    }
    (void)exp_corrected;
    return j;
}

inline ordered_json summary_json(const CohortResult& res, int n_agents) {
    std::vector<std::vector<double>> bics;
    std::vector<double> corrected, control_corrected;
    std::vector<int> delays, flags;
    std::size_t ci = 0;
    for (const auto& a : res.experimental) {
        if (a.diverged) continue;
        bics.push_back({a.sigmoid_fit.bic_value, a.linear_fit.bic_value, a.step_fit.bic_value});
        const auto& c = res.classes.at(ci++);
        corrected.push_back(c.corrected_steepness);
        delays.push_back(c.delay_bins);
        flags.push_back(c.is_insight ? 1 : 0);
    }
    for (const auto& a : res.control_group)
        if (!a.diverged) control_corrected.push_back(a.corrected);
    return summary_json_from_rows(bics, corrected, delays, flags, control_corrected,
                                  n_agents, res.post_onset_bins, res.diverged_count);
}

struct ClassificationRows {
    std::vector<int> agent_id;
    std::vector<std::vector<double>> bics;
    std::vector<double> steepness, corrected;
    std::vector<int> is_insight, switch_bin, delay_bins;
};

inline ClassificationRows read_classification_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open classification CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty classification CSV: " + path);
    ClassificationRows rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() < 9) throw data_error("classification CSV: short row in " + path);
        rows.agent_id.push_back(std::stoi(f[0]));
        rows.bics.push_back({std::stod(f[1]), std::stod(f[2]), std::stod(f[3])});
        rows.steepness.push_back(std::stod(f[4]));
        rows.corrected.push_back(std::stod(f[5]));
        rows.is_insight.push_back(std::stoi(f[6]));
        rows.switch_bin.push_back(std::stoi(f[7]));
        rows.delay_bins.push_back(std::stoi(f[8]));
    }
    return rows;
}

inline std::vector<double> read_control_corrected_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open control CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty control CSV: " + path);
    std::vector<double> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() < 6) throw data_error("control CSV: short row in " + path);
        out.push_back(std::stod(f[5]));
    }
    return out;
}

// Writes the standard cohort run directory: config snapshot, per-policy
// trial logs, classification CSVs, plot-ready curves and the summary JSON.
inline void write_cohort_outputs(const std::filesystem::path& dir, const CohortSpec& spec,
                                 const CohortResult& res, const std::string& experiment) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "config.snapshot.cfg", std::ios::binary);
        out << config_from_cohort_spec(spec, experiment).snapshot();
    }
    {
        std::ofstream out(dir / "classification.csv", std::ios::binary);
        write_classification_csv(out, res.experimental, res.classes);
    }
    {
        std::ofstream out(dir / "classification_control.csv", std::ios::binary);
        write_control_csv(out, res.control_group);
    }
    {
        std::ofstream out(dir / "calibration.csv", std::ios::binary);
        write_calibration_csv(out, res.calibrations);
    }
    {
        std::ofstream out(dir / "curves_accuracy.csv", std::ios::binary);
        write_accuracy_curves_csv(out, res);
    }
    if (spec.keep_trial_logs) {
        std::vector<TrialRecord> all;
        for (const auto& a : res.experimental)
            all.insert(all.end(), a.log.begin(), a.log.end());
        write_trial_log((dir / "trials.csv").string(), all);
        std::vector<TrialRecord> ctl;
        for (const auto& a : res.control_group)
            ctl.insert(ctl.end(), a.log.begin(), a.log.end());
        write_trial_log((dir / "trials_control.csv").string(), ctl);
        std::ofstream out(dir / "curves_params.csv", std::ios::binary);
        write_parameter_curves_csv(out, res);
    }
    {
        std::ofstream out(dir / "summary.json", std::ios::binary);
        out << summary_json(res, spec.n_agents).dump(2) << "\n";
    }
}

// Regenerates summary.json from the CSVs in a run directory.
inline ordered_json regenerate_summary(const std::filesystem::path& dir) {
    const Config cfg = Config::load((dir / "config.snapshot.cfg").string());
    const CohortSpec spec = cohort_spec_from_config(cfg);
    const auto rows = read_classification_csv((dir / "classification.csv").string());
    const auto control = read_control_corrected_csv((dir / "classification_control.csv").string());
    int post_onset_bins = 0;
    for (const auto& ph : spec.curriculum)
        if (ph.kind == PhaseKind::MotionAndColour) {
            // 30-per-100 lowest-coherence frequency, bins of bin_size trials
            const auto freq = block_frequencies(ph.coherence_labels);
            const int lowest = freq.begin()->second;
            post_onset_bins = ph.block_count * lowest / spec.bin_size;
        }
    const int n = spec.n_agents;
    const int diverged = n - static_cast<int>(rows.agent_id.size());
    return summary_json_from_rows(rows.bics, rows.corrected, rows.delay_bins,
                                  rows.is_insight, control, n, post_onset_bins, diverged);
}

}  // namespace insight

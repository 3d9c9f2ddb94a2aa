// Command-line driver for the gated-network insight simulations: cohort
// runs, calibration, sweeps, the weight-transplant experiment, variant
// comparisons and re-analysis of stored trial logs.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "insight/config.hpp"
#include "insight/csvio.hpp"
#include "insight/experiments.hpp"
#include "insight/report.hpp"

namespace fs = std::filesystem;
using namespace insight;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int agents = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "master seed override")
        ->each([&](const std::string&) { args.seed_set = true; });
    cmd->add_option("--agents", args.agents, "agent count override");
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

Config load_config(const CommonArgs& args) {
    Config cfg = args.config_path.empty() ? Config() : Config::load(args.config_path);
    if (args.seed_set) cfg.set("cohort.seed", std::to_string(args.seed));
    if (args.agents > 0) cfg.set("cohort.agents", std::to_string(args.agents));
    return cfg;
}

void note(const CommonArgs& args, const std::string& msg) {
    if (!args.quiet) std::cout << msg << "\n";
}

int divergence_exit_code(const CohortResult& res, int n_agents) {
    return res.diverged_count * 10 > n_agents ? 2 : 0;
}

int run_cohort_cmd(const CommonArgs& args) {
    Config cfg = load_config(args);
    CohortSpec spec = cohort_spec_from_config(cfg);
    cfg.reject_unknown();
    DirectoryLock lock(args.out_dir);
    note(args, "running cohort: " + std::to_string(spec.n_agents) + " agents, seed " +
                   std::to_string(spec.master_seed));
    const CohortResult res = run_cohort(spec);
    write_cohort_outputs(args.out_dir, spec, res, "cohort");
    note(args, "insight " + std::to_string(res.insight_count) + "/" +
                   std::to_string(spec.n_agents) + ", mean delay " +
                   std::to_string(res.mean_delay_bins) + " bins -> " + args.out_dir);
    return divergence_exit_code(res, spec.n_agents);
}

int run_calibrate_cmd(const CommonArgs& args) {
    Config cfg = load_config(args);
    CohortSpec spec = cohort_spec_from_config(cfg);
    cfg.reject_unknown();
    DirectoryLock lock(args.out_dir);
    const int n_cal = spec.per_agent_calibration ? spec.n_agents
                                                 : std::min(spec.sequence_groups, spec.n_agents);
    std::vector<CalibrationResult> cals(static_cast<std::size_t>(n_cal));
    parallel_for(static_cast<std::size_t>(n_cal), [&](std::size_t c) {
        const int idx = static_cast<int>(c);
        const auto cal_seed =
            derive_seed(spec.master_seed, streams::kCalibration, static_cast<std::uint64_t>(idx));
        cals[c] = spec.variant == Variant::DeepL1
                      ? calibrate_deep(spec.targets, spec.hyp, cal_seed, spec.curriculum,
                                       spec.calibration, spec.sequence_seed(idx))
                      : calibrate(spec.targets, spec.hyp, cal_seed, spec.curriculum,
                                  spec.calibration, spec.sequence_seed(idx));
    }, spec.threads);
    fs::create_directories(args.out_dir);
    {
        std::ofstream out(fs::path(args.out_dir) / "config.snapshot.cfg", std::ios::binary);
        out << config_from_cohort_spec(spec, "calibrate").snapshot();
    }
    {
        std::ofstream out(fs::path(args.out_dir) / "calibration.csv", std::ios::binary);
        write_calibration_csv(out, cals);
    }
    int converged = 0;
    for (const auto& c : cals) converged += c.converged ? 1 : 0;
    note(args, "calibrated " + std::to_string(cals.size()) + " groups (" +
                   std::to_string(converged) + " converged) -> " + args.out_dir);
    return 0;
}

int run_analyze_cmd(const CommonArgs& args, const std::string& in_path,
                    const std::string& control_path) {
    Config cfg = load_config(args);
    CohortSpec spec = cohort_spec_from_config(cfg);
    cfg.reject_unknown();

    auto analyse_log = [&](const std::string& path) {
        const auto records = read_trial_log(path);
        std::map<int, std::vector<TrialRecord>> by_agent;
        for (const auto& r : records) by_agent[r.agent_id].push_back(r);
        std::vector<AgentSummary> agents;
        for (auto& [id, recs] : by_agent) {
            AgentSummary s;
            s.agent_id = id;
            s.log = std::move(recs);
            detail::analyse_agent(s, spec.bin_size, spec.sigmoid_fit);
            agents.push_back(std::move(s));
        }
        return agents;
    };

    auto experimental = analyse_log(in_path);
    std::vector<double> control_corrected;
    if (!control_path.empty()) {
        for (const auto& a : analyse_log(control_path)) control_corrected.push_back(a.corrected);
    }

    fs::create_directories(args.out_dir);
    std::vector<CurveFit> fits;
    std::vector<AccuracySeries> series;
    for (const auto& a : experimental) {
        fits.push_back(a.sigmoid_fit);
        series.push_back(a.series);
    }
    std::vector<InsightClassification> classes;
    if (!control_corrected.empty()) {
        classes = classify_cohort(fits, series, control_corrected);
        for (std::size_t i = 0; i < classes.size(); ++i)
            classes[i].agent_id = experimental[i].agent_id;
    } else {
        // no control: report fits and steepness without insight flags
        for (std::size_t i = 0; i < fits.size(); ++i) {
            InsightClassification c;
            c.agent_id = experimental[i].agent_id;
            c.raw_steepness = slope_at_inflection(fits[i]);
            c.fit_correction = fits[i].rmse();
            c.corrected_steepness = c.raw_steepness - c.fit_correction;
            c.threshold = std::numeric_limits<double>::quiet_NaN();
            c.is_insight = false;
            c.switch_bin = static_cast<int>(std::lround(fits[i].t_s));
            c.delay_bins = -1;
            classes.push_back(c);
        }
    }
    {
        std::ofstream out(fs::path(args.out_dir) / "classification.csv", std::ios::binary);
        write_classification_csv(out, experimental, classes);
    }
    note(args, "analyzed " + std::to_string(experimental.size()) + " agents -> " + args.out_dir);
    return 0;
}

int run_sweep_cmd(const CommonArgs& args, bool lambda_sweep) {
    Config cfg = load_config(args);
    CohortSpec spec = cohort_spec_from_config(cfg);
    SweepSpec sweep;
    sweep.axis = cfg.get_doubles("sweep.axis",
                                 lambda_sweep
                                     ? std::vector<double>{0.01, 0.03, 0.05, 0.07, 0.09, 0.11, 0.13, 0.15}
                                     : std::vector<double>{0.0, 0.01, 0.02, 0.05, 0.1});
    sweep.repetitions = static_cast<int>(cfg.get_int("sweep.repetitions", 10));
    std::vector<std::string> mask_names =
        cfg.get_strings("sweep.masks", {"all"});
    cfg.reject_unknown();

    DirectoryLock lock(args.out_dir);
    SweepResult result;
    std::string axis_name;
    if (lambda_sweep) {
        axis_name = "lambda";
        result = sweep_lambda(spec, sweep);
    } else {
        axis_name = "sigma_xi";
        std::vector<std::pair<std::string, NoiseMask>> masks;
        for (const auto& name : mask_names) masks.emplace_back(name, parse_noise_mask(name));
        result = sweep_noise(spec, sweep, masks);
    }
    fs::create_directories(args.out_dir);
    {
        std::ofstream out(fs::path(args.out_dir) / "config.snapshot.cfg", std::ios::binary);
        Config snap = config_from_cohort_spec(spec, lambda_sweep ? "sweep-lambda" : "sweep-noise");
        std::string axis;
        for (double v : sweep.axis) axis += (axis.empty() ? "" : ",") + fmt17(v);
        snap.set("sweep.axis", axis);
        snap.set("sweep.repetitions", std::to_string(sweep.repetitions));
        if (!lambda_sweep) {
            std::string ms;
            for (const auto& m : mask_names) ms += (ms.empty() ? "" : ",") + m;
            snap.set("sweep.masks", ms);
        }
        out << snap.snapshot();
    }
    {
        std::ofstream out(fs::path(args.out_dir) / "sweep.csv", std::ios::binary);
        write_sweep_csv(out, result, axis_name);
    }
    {
        std::ofstream out(fs::path(args.out_dir) / "sweep_summary.csv", std::ios::binary);
        write_sweep_summary_csv(out, result, axis_name);
    }
    note(args, "sweep complete: " + std::to_string(result.points.size()) + " cohorts -> " +
                   args.out_dir);
    return 0;
}

int run_transplant_cmd(const CommonArgs& args) {
    Config cfg = load_config(args);
    CohortSpec spec = cohort_spec_from_config(cfg);
    const std::string wc_str = cfg.get_string("transplant.w_c", "auto");
    const std::string wm_str = cfg.get_string("transplant.w_m", "auto");
    cfg.reject_unknown();

    DirectoryLock lock(args.out_dir);
    note(args, "reference cohort for transplant targets...");
    CohortSpec ref = spec;
    ref.keep_trial_logs = false;
    const CohortResult baseline = run_cohort(ref);

    double wc_target, wm_target;
    if (wc_str == "auto" || wm_str == "auto") {
        // mean absolute onset weights over the insight group of the baseline
        double wc = 0, wm = 0;
        int n = 0;
        std::vector<bool> insight(static_cast<std::size_t>(spec.n_agents), false);
        for (const auto& c : baseline.classes)
            if (c.is_insight) insight[static_cast<std::size_t>(c.agent_id)] = true;
        for (const auto& a : baseline.experimental)
            if (!a.diverged && insight[static_cast<std::size_t>(a.agent_id)]) {
                wc += a.onset_abs_w_c;
                wm += a.onset_abs_w_m;
                ++n;
            }
        if (n == 0) throw data_error("transplant: baseline cohort has no insight agents");
        wc_target = wc / n;
        wm_target = wm / n;
    }
    if (wc_str != "auto") wc_target = std::stod(wc_str);
    if (wm_str != "auto") wm_target = std::stod(wm_str);

    note(args, "transplanting |w_c|=" + std::to_string(wc_target) + ", |w_m|=" +
                   std::to_string(wm_target));
    const CohortResult res = weight_transplant(spec, wc_target, wm_target);
    write_cohort_outputs(args.out_dir, spec, res, "transplant");
    {
        ordered_json j;
        j["w_c_target"] = wc_target;
        j["w_m_target"] = wm_target;
        j["baseline_insight_fraction"] = baseline.insight_fraction;
        j["transplant_insight_fraction"] = res.insight_fraction;
        std::ofstream out(fs::path(args.out_dir) / "transplant.json", std::ios::binary);
        out << j.dump(2) << "\n";
    }
    note(args, "insight fraction " + std::to_string(baseline.insight_fraction) + " -> " +
                   std::to_string(res.insight_fraction));
    return divergence_exit_code(res, spec.n_agents);
}

int run_compare_cmd(const CommonArgs& args) {
    Config cfg = load_config(args);
    CohortSpec spec = cohort_spec_from_config(cfg);
    const auto names = cfg.get_strings(
        "compare.variants", {"shallow_l1", "shallow_l2", "shallow_none", "no_gate"});
    cfg.reject_unknown();
    std::vector<Variant> variants;
    for (const auto& n : names) variants.push_back(variant_from_string(n));

    DirectoryLock lock(args.out_dir);
    const auto rows = compare_variants(spec, variants);
    fs::create_directories(args.out_dir);
    {
        std::ofstream out(fs::path(args.out_dir) / "config.snapshot.cfg", std::ios::binary);
        out << config_from_cohort_spec(spec, "compare").snapshot();
    }
    {
        std::ofstream out(fs::path(args.out_dir) / "variants.csv", std::ios::binary);
        out << "variant,insight_count,insight_fraction,mean_delay_bins,sd_delay_bins,steepness_dip\n";
        for (const auto& r : rows)
            out << to_string(r.variant) << ',' << r.insight_count << ','
                << fmt17(r.insight_fraction) << ',' << fmt17(r.mean_delay_bins) << ','
                << fmt17(r.sd_delay_bins) << ',' << fmt17(r.steepness_dip) << "\n";
    }
    note(args, "compared " + std::to_string(rows.size()) + " variants -> " + args.out_dir);
    return 0;
}

int run_report_cmd(const CommonArgs& args) {
    const auto j = regenerate_summary(args.out_dir);
    std::ofstream out(fs::path(args.out_dir) / "summary.json", std::ios::binary);
    out << j.dump(2) << "\n";
    note(args, "summary regenerated -> " + args.out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gated-network insight simulation toolkit"};
    app.require_subcommand(1);

    CommonArgs cohort_args, cal_args, analyze_args, sweep_n_args, sweep_l_args,
        transplant_args, compare_args, report_args;
    std::string analyze_in, analyze_control;

    add_common(app.add_subcommand("cohort", "train a cohort and classify switches"), cohort_args);
    add_common(app.add_subcommand("calibrate", "fit motion input means"), cal_args);
    auto* analyze = app.add_subcommand("analyze", "re-analyze stored trial logs");
    add_common(analyze, analyze_args);
    analyze->add_option("--in", analyze_in, "trial log CSV")->required();
    analyze->add_option("--control", analyze_control, "control trial log CSV");
    add_common(app.add_subcommand("sweep-noise", "gradient-noise sweep"), sweep_n_args);
    add_common(app.add_subcommand("sweep-lambda", "regularisation sweep"), sweep_l_args);
    add_common(app.add_subcommand("transplant", "weight transplant experiment"), transplant_args);
    add_common(app.add_subcommand("compare", "compare model variants"), compare_args);
    add_common(app.add_subcommand("report", "regenerate summaries from stored CSVs"), report_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("cohort")) return run_cohort_cmd(cohort_args);
        if (app.got_subcommand("calibrate")) return run_calibrate_cmd(cal_args);
        if (app.got_subcommand("analyze"))
            return run_analyze_cmd(analyze_args, analyze_in, analyze_control);
        if (app.got_subcommand("sweep-noise")) return run_sweep_cmd(sweep_n_args, false);
        if (app.got_subcommand("sweep-lambda")) return run_sweep_cmd(sweep_l_args, true);
        if (app.got_subcommand("transplant")) return run_transplant_cmd(transplant_args);
        if (app.got_subcommand("compare")) return run_compare_cmd(compare_args);
        if (app.got_subcommand("report")) return run_report_cmd(report_args);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

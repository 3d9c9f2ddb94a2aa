#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "insight/errors.hpp"
#include "insight/experiments.hpp"

namespace insight {

// Flat `key = value` text with dotted sections and '#' comments. Keys are
// consumed by typed getters; anything left unconsumed is rejected so
// misspelled settings fail loudly.
class Config {
  public:
    Config() = default;

    static Config parse(const std::string& text) {
        Config c;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(lineno) +
                                   ": expected key = value");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
            c.values_[key] = value;
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& dflt) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? dflt : it->second;
    }

    double get_double(const std::string& key, double dflt) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw config_error("config key " + key + ": not a number: " + it->second);
        }
    }

    long long get_int(const std::string& key, long long dflt) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw config_error("config key " + key + ": not an integer: " + it->second);
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        try {
            std::size_t pos = 0;
            const std::uint64_t v = std::stoull(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw config_error("config key " + key + ": not an unsigned integer: " + it->second);
        }
    }

    bool get_bool(const std::string& key, bool dflt) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw config_error("config key " + key + ": expected true/false: " + it->second);
    }

    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& dflt) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        std::vector<double> out;
        std::istringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                out.push_back(std::stod(trim(tok)));
            } catch (...) {
                throw config_error("config key " + key + ": bad list entry: " + tok);
            }
        }
        return out;
    }

    std::vector<std::string> get_strings(const std::string& key,
                                         const std::vector<std::string>& dflt) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        std::vector<std::string> out;
        std::istringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
        return out;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    void reject_unknown() const {
        std::vector<std::string> unknown;
        for (const auto& [k, v] : values_)
            if (!consumed_.count(k)) unknown.push_back(k);
        if (!unknown.empty()) {
            std::string list;
            for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
            throw config_error("unknown config keys: " + list);
        }
    }

    // Canonical snapshot: sorted keys, one per line. Re-parsing the
    // snapshot reproduces the configuration exactly.
    std::string snapshot() const {
        std::ostringstream out;
        for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
        return out.str();
    }

  private:
    static std::string trim(const std::string& s) {
        auto b = s.begin(), e = s.end();
        while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
        while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
        return std::string(b, e);
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

inline NoiseMask parse_noise_mask(const std::string& s) {
    if (s == "all") return NoiseMask::all();
    if (s == "none") return NoiseMask::none();
    if (s == "weights") return NoiseMask::weights_only();
    if (s == "gates") return NoiseMask::gates_only();
    if (s == "colour") return NoiseMask::colour_only();
    if (s == "motion") return NoiseMask::motion_only();
    NoiseMask m = NoiseMask::none();
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "w_m") m.w_m = true;
        else if (tok == "w_c") m.w_c = true;
        else if (tok == "g_m") m.g_m = true;
        else if (tok == "g_c") m.g_c = true;
        else throw config_error("noise_mask: unknown parameter: " + tok);
    }
    return m;
}

inline std::string noise_mask_string(const NoiseMask& m) {
    if (m.w_m && m.w_c && m.g_m && m.g_c) return "all";
    if (!m.w_m && !m.w_c && !m.g_m && !m.g_c) return "none";
    std::string s;
    auto add = [&](bool on, const char* name) {
        if (on) s += (s.empty() ? "" : ",") + std::string(name);
    };
    add(m.w_m, "w_m");
    add(m.w_c, "w_c");
    add(m.g_m, "g_m");
    add(m.g_c, "g_c");
    return s;
}

inline Regulariser regulariser_from_string(const std::string& s) {
    if (s == "l1") return Regulariser::L1;
    if (s == "l2") return Regulariser::L2;
    if (s == "none") return Regulariser::None;
    if (s == "no_gate") return Regulariser::NoGate;
    throw config_error("unknown regulariser: " + s);
}

// Builds the cohort spec from a parsed config; CLI flags pre-populate the
// overridden keys before this is called.
inline CohortSpec cohort_spec_from_config(const Config& cfg) {
    CohortSpec spec;
    spec.variant = variant_from_string(cfg.get_string("cohort.variant", "shallow_l1"));
    spec.hyp = variant_hyperparameters(spec.variant);
    spec.n_agents = static_cast<int>(cfg.get_int("cohort.agents", spec.n_agents));
    spec.master_seed = cfg.get_u64("cohort.seed", spec.master_seed);
    spec.control = cfg.get_bool("cohort.control", spec.control);
    spec.sequence_groups = static_cast<int>(cfg.get_int("cohort.sequence_groups", spec.sequence_groups));
    spec.bin_size = static_cast<int>(cfg.get_int("cohort.bin_size", spec.bin_size));
    spec.threads = static_cast<unsigned>(cfg.get_int("cohort.threads", 0));
    spec.keep_trial_logs = cfg.get_string("cohort.retention", "full") != "summary";

    spec.hyp.alpha = cfg.get_double("model.alpha", spec.hyp.alpha);
    spec.hyp.lambda = cfg.get_double("model.lambda", spec.hyp.lambda);
    spec.hyp.sigma_eta = cfg.get_double("model.sigma_eta", spec.hyp.sigma_eta);
    spec.hyp.sigma_xi = cfg.get_double("model.sigma_xi", spec.hyp.sigma_xi);
    spec.hyp.sigma_m = cfg.get_double("model.sigma_m", spec.hyp.sigma_m);
    spec.hyp.sigma_c = cfg.get_double("model.sigma_c", spec.hyp.sigma_c);
    spec.hyp.m_c = cfg.get_double("model.m_c", spec.hyp.m_c);
    spec.hyp.noise_mask =
        parse_noise_mask(cfg.get_string("model.noise_mask", noise_mask_string(spec.hyp.noise_mask)));
    if (cfg.has("model.regulariser"))
        spec.hyp.regulariser = regulariser_from_string(cfg.get_string("model.regulariser", ""));

    const int tb = static_cast<int>(cfg.get_int("task.training_blocks", 6));
    const int mb = static_cast<int>(cfg.get_int("task.motion_blocks", 2));
    const int cb = static_cast<int>(cfg.get_int("task.motion_and_colour_blocks", 5));
    const std::vector<int> all(kCoherenceLabels.begin(), kCoherenceLabels.end());
    spec.curriculum = {{PhaseKind::Training, tb, {20, 30, 45}},
                       {PhaseKind::Motion, mb, all},
                       {PhaseKind::MotionAndColour, cb, all}};

    const auto t = cfg.get_doubles(
        "calibration.targets",
        std::vector<double>(spec.targets.accuracy.begin(), spec.targets.accuracy.end()));
    if (t.size() != spec.targets.accuracy.size())
        throw config_error("calibration.targets: need exactly 5 values");
    std::copy(t.begin(), t.end(), spec.targets.accuracy.begin());
    spec.targets.tolerance = cfg.get_double("calibration.tolerance", spec.targets.tolerance);
    spec.calibration.budget = static_cast<int>(cfg.get_int("calibration.budget", spec.calibration.budget));
    spec.calibration.replicates =
        static_cast<int>(cfg.get_int("calibration.replicates", spec.calibration.replicates));
    spec.per_agent_calibration = cfg.get_bool("calibration.per_agent", spec.per_agent_calibration);

    spec.sigmoid_fit.m_max = cfg.get_double("fit.m_max", spec.sigmoid_fit.m_max);
    spec.sigmoid_fit.ts_margin = static_cast<int>(cfg.get_int("fit.ts_margin", spec.sigmoid_fit.ts_margin));
    return spec;
}

// Canonical effective-settings dump; together with the experiment kind it
// re-executes to identical outputs.
inline Config config_from_cohort_spec(const CohortSpec& spec, const std::string& experiment) {
    Config c;
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    c.set("experiment", experiment);
    c.set("cohort.variant", to_string(spec.variant));
    c.set("cohort.agents", std::to_string(spec.n_agents));
    c.set("cohort.seed", std::to_string(spec.master_seed));
    c.set("cohort.control", spec.control ? "true" : "false");
    c.set("cohort.sequence_groups", std::to_string(spec.sequence_groups));
    c.set("cohort.bin_size", std::to_string(spec.bin_size));
    c.set("cohort.retention", spec.keep_trial_logs ? "full" : "summary");
    c.set("model.alpha", num(spec.hyp.alpha));
    c.set("model.lambda", num(spec.hyp.lambda));
    c.set("model.sigma_eta", num(spec.hyp.sigma_eta));
    c.set("model.sigma_xi", num(spec.hyp.sigma_xi));
    c.set("model.sigma_m", num(spec.hyp.sigma_m));
    c.set("model.sigma_c", num(spec.hyp.sigma_c));
    c.set("model.m_c", num(spec.hyp.m_c));
    c.set("model.noise_mask", noise_mask_string(spec.hyp.noise_mask));
    c.set("model.regulariser", to_string(spec.hyp.regulariser));
    for (const auto& ph : spec.curriculum) {
        if (ph.kind == PhaseKind::Training) c.set("task.training_blocks", std::to_string(ph.block_count));
        if (ph.kind == PhaseKind::Motion) c.set("task.motion_blocks", std::to_string(ph.block_count));
        if (ph.kind == PhaseKind::MotionAndColour)
            c.set("task.motion_and_colour_blocks", std::to_string(ph.block_count));
    }
    std::string targets;
    for (double v : spec.targets.accuracy) targets += (targets.empty() ? "" : ",") + num(v);
    c.set("calibration.targets", targets);
    c.set("calibration.tolerance", num(spec.targets.tolerance));
    c.set("calibration.budget", std::to_string(spec.calibration.budget));
    c.set("calibration.replicates", std::to_string(spec.calibration.replicates));
    c.set("calibration.per_agent", spec.per_agent_calibration ? "true" : "false");
    c.set("fit.m_max", num(spec.sigmoid_fit.m_max));
    c.set("fit.ts_margin", std::to_string(spec.sigmoid_fit.ts_margin));
    return c;
}

}  // namespace insight

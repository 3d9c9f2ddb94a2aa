#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "insight/errors.hpp"
#include "insight/experiments.hpp"

namespace insight {

// %.17g: doubles survive a write/read round trip bit-exactly.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline PhaseKind phase_from_string(const std::string& s) {
    if (s == "training") return PhaseKind::Training;
    if (s == "motion") return PhaseKind::Motion;
    if (s == "motion_and_colour") return PhaseKind::MotionAndColour;
    throw data_error("unknown phase: " + s);
}

}  // namespace detail

inline const char* kTrialLogHeader =
    "agent_id,trial,phase,coherence,y,decision,correct,w_m,w_c,g_m,g_c,"
    "d_w_m,d_w_c,d_g_m,d_g_c";

inline void write_trial_log(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << kTrialLogHeader << "\n";
    for (const auto& r : records) {
        out << r.agent_id << ',' << r.trial << ',' << to_string(r.phase) << ','
            << r.coherence << ',' << static_cast<int>(r.y) << ','
            << static_cast<int>(r.decision) << ',' << static_cast<int>(r.correct) << ','
            << fmt17(r.w_m) << ',' << fmt17(r.w_c) << ',' << fmt17(r.g_m) << ','
            << fmt17(r.g_c) << ',' << fmt17(r.d_w_m) << ',' << fmt17(r.d_w_c) << ','
            << fmt17(r.d_g_m) << ',' << fmt17(r.d_g_c) << "\n";
    }
}

inline void write_trial_log(const std::string& path, const std::vector<TrialRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write trial log: " + path);
    write_trial_log(out, records);
}

inline std::vector<TrialRecord> read_trial_log(std::istream& in, const std::string& origin = "") {
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty trial log" + (origin.empty() ? "" : ": " + origin));
    const auto header = detail::split_csv_line(line);
    const std::vector<std::string> expected = detail::split_csv_line(kTrialLogHeader);
    for (const auto& col : expected) {
        bool found = false;
        for (const auto& h : header)
            if (h == col) found = true;
        if (!found) throw data_error("trial log missing column: " + col);
    }
    std::vector<int> pos(expected.size(), -1);
    for (std::size_t e = 0; e < expected.size(); ++e)
        for (std::size_t h = 0; h < header.size(); ++h)
            if (header[h] == expected[e]) pos[e] = static_cast<int>(h);

    std::vector<TrialRecord> records;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() < header.size())
            throw data_error("trial log line " + std::to_string(lineno) + ": too few fields");
        auto field = [&](std::size_t e) -> const std::string& {
            return f[static_cast<std::size_t>(pos[e])];
        };
        TrialRecord r;
        r.agent_id = std::stoi(field(0));
        r.trial = std::stoi(field(1));
        r.phase = detail::phase_from_string(field(2));
        r.coherence = static_cast<std::int16_t>(std::stoi(field(3)));
        r.y = static_cast<std::int8_t>(std::stoi(field(4)));
        r.decision = static_cast<std::int8_t>(std::stoi(field(5)));
        r.correct = static_cast<std::uint8_t>(std::stoi(field(6)));
        r.w_m = std::stod(field(7));
        r.w_c = std::stod(field(8));
        r.g_m = std::stod(field(9));
        r.g_c = std::stod(field(10));
        r.d_w_m = std::stod(field(11));
        r.d_w_c = std::stod(field(12));
        r.d_g_m = std::stod(field(13));
        r.d_g_c = std::stod(field(14));
        records.push_back(r);
    }
    if (records.empty()) throw data_error("trial log has no records" + (origin.empty() ? "" : ": " + origin));
    return records;
}

inline std::vector<TrialRecord> read_trial_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open trial log: " + path);
    return read_trial_log(in, path);
}

inline const char* kClassificationHeader =
    "agent_id,bic_sigmoid,bic_linear,bic_step,steepness,corrected,is_insight,"
    "switch_bin,delay_bins";

inline void write_classification_csv(std::ostream& out,
                                     const std::vector<AgentSummary>& agents,
                                     const std::vector<InsightClassification>& classes) {
    out << kClassificationHeader << "\n";
    std::size_t ci = 0;
    for (const auto& a : agents) {
        if (a.diverged) continue;
        const auto& c = classes.at(ci++);
        out << a.agent_id << ',' << fmt17(a.sigmoid_fit.bic_value) << ','
            << fmt17(a.linear_fit.bic_value) << ',' << fmt17(a.step_fit.bic_value) << ','
            << fmt17(c.raw_steepness) << ',' << fmt17(c.corrected_steepness) << ','
            << (c.is_insight ? 1 : 0) << ',' << c.switch_bin << ',' << c.delay_bins << "\n";
    }
}

// Control cohorts carry no classification row; emit their fits and
// corrected steepness so the threshold is reconstructable.
inline void write_control_csv(std::ostream& out, const std::vector<AgentSummary>& agents) {
    out << "agent_id,bic_sigmoid,bic_linear,bic_step,steepness,corrected\n";
    for (const auto& a : agents) {
        if (a.diverged) continue;
        out << a.agent_id << ',' << fmt17(a.sigmoid_fit.bic_value) << ','
            << fmt17(a.linear_fit.bic_value) << ',' << fmt17(a.step_fit.bic_value) << ','
            << fmt17(slope_at_inflection(a.sigmoid_fit)) << ',' << fmt17(a.corrected) << "\n";
    }
}

inline void write_calibration_csv(std::ostream& out,
                                  const std::vector<CalibrationResult>& cals) {
    out << "group,m5,m10,m20,m30,m45,a5,a10,a20,a30,a45,converged,evaluations\n";
    for (std::size_t g = 0; g < cals.size(); ++g) {
        out << g;
        for (double v : cals[g].fitted) out << ',' << fmt17(v);
        for (double v : cals[g].achieved) out << ',' << fmt17(v);
        out << ',' << (cals[g].converged ? 1 : 0) << ',' << cals[g].evaluations << "\n";
    }
}

inline void write_skeleton_csv(std::ostream& out, const std::vector<TrialSkeleton>& skel) {
    out << "index,phase,coherence,y,colour_sign\n";
    for (const auto& t : skel)
        out << t.index << ',' << to_string(t.phase) << ',' << t.coherence << ','
            << t.y << ',' << t.colour_sign << "\n";
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& sweep,
                            const std::string& axis_name) {
    out << axis_name << ",mask,repetition,insight_count,mean_delay_bins\n";
    for (const auto& p : sweep.points)
        out << fmt17(p.axis_value) << ',' << p.mask_label << ',' << p.repetition << ','
            << p.insight_count << ',' << fmt17(p.mean_delay_bins) << "\n";
}

inline void write_sweep_summary_csv(std::ostream& out, const SweepResult& sweep,
                                    const std::string& axis_name) {
    out << axis_name << ",mask,mean_insight,sd_insight,mean_delay_bins\n";
    for (const auto& r : sweep.summary)
        out << fmt17(r.axis_value) << ',' << r.mask_label << ',' << fmt17(r.mean_insight)
            << ',' << fmt17(r.sd_insight) << ',' << fmt17(r.mean_delay) << "\n";
}

// Long-format per-agent accuracy curves (lowest-coherence bins).
inline void write_accuracy_curves_csv(std::ostream& out, const CohortResult& res) {
    out << "agent_id,bin,accuracy,is_insight\n";
    std::size_t ci = 0;
    for (const auto& a : res.experimental) {
        if (a.diverged) continue;
        const bool ins = res.classes.at(ci++).is_insight;
        for (std::size_t b = 0; b < a.series.bins.size(); ++b)
            out << a.agent_id << ',' << b << ',' << fmt17(a.series.bins[b]) << ','
                << (ins ? 1 : 0) << "\n";
    }
}

// Group-mean |parameter| trajectories, split by insight classification.
inline void write_parameter_curves_csv(std::ostream& out, const CohortResult& res) {
    out << "trial,group,mean_abs_w_m,mean_abs_w_c,mean_abs_g_m,mean_abs_g_c\n";
    std::size_t n_trials = 0;
    for (const auto& a : res.experimental) n_trials = std::max(n_trials, a.log.size());
    if (n_trials == 0) return;
    std::vector<bool> insight(res.experimental.size(), false);
    std::size_t ci = 0;
    for (const auto& a : res.experimental) {
        if (a.diverged) continue;
        insight[static_cast<std::size_t>(a.agent_id)] = res.classes.at(ci++).is_insight;
    }
    for (int grp = 0; grp < 2; ++grp) {
        for (std::size_t t = 0; t < n_trials; ++t) {
            double wm = 0, wc = 0, gm = 0, gc = 0;
            int n = 0;
            for (const auto& a : res.experimental) {
                if (a.diverged || t >= a.log.size()) continue;
                if (insight[static_cast<std::size_t>(a.agent_id)] != (grp == 0)) continue;
                wm += std::fabs(a.log[t].w_m);
                wc += std::fabs(a.log[t].w_c);
                gm += std::fabs(a.log[t].g_m);
                gc += std::fabs(a.log[t].g_c);
                ++n;
            }
            if (n == 0) continue;
            out << t << ',' << (grp == 0 ? "insight" : "no_insight") << ','
                << fmt17(wm / n) << ',' << fmt17(wc / n) << ',' << fmt17(gm / n) << ','
                << fmt17(gc / n) << "\n";
        }
    }
}

// Exclusive-create lock file; concurrent runs must use distinct output
// directories.
class DirectoryLock {
  public:
    explicit DirectoryLock(const std::filesystem::path& dir) : path_(dir / "LOCK") {
        std::filesystem::create_directories(dir);
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0)
            throw config_error("output directory is locked by another run: " + dir.string());
        ::close(fd);
    }
    ~DirectoryLock() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

  private:
    std::filesystem::path path_;
};

}  // namespace insight

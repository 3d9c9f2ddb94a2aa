#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "insight/curvefit.hpp"
#include "insight/errors.hpp"
#include "insight/series.hpp"

namespace insight {

struct InsightClassification {
    int agent_id = 0;
    double raw_steepness = 0.0;
    double fit_correction = 0.0;       // RMSE of the sigmoid fit
    double corrected_steepness = 0.0;
    double threshold = 0.0;            // control-cohort maximum
    bool is_insight = false;
    int switch_bin = 0;                // t_s rounded
    int delay_bins = -1;               // switch_bin - t_origin; only for insight agents
};

// Threshold = max over the control cohort; insight requires strictly
// exceeding it ("outside the 100th percentile").
inline double control_threshold(const std::vector<double>& control_corrected) {
    if (control_corrected.empty()) throw data_error("classify: empty control cohort");
    return *std::max_element(control_corrected.begin(), control_corrected.end());
}

inline std::vector<InsightClassification> classify_cohort(
    const std::vector<double>& experimental_corrected,
    const std::vector<double>& control_corrected) {
    const double thr = control_threshold(control_corrected);
    std::vector<InsightClassification> out;
    out.reserve(experimental_corrected.size());
    for (std::size_t i = 0; i < experimental_corrected.size(); ++i) {
        InsightClassification c;
        c.agent_id = static_cast<int>(i);
        c.corrected_steepness = experimental_corrected[i];
        c.threshold = thr;
        c.is_insight = experimental_corrected[i] > thr;
        out.push_back(c);
    }
    return out;
}

// Full classification from fits: attaches raw/corrected steepness, switch
// bins and delays. Delays are floored at zero (rounding can place the
// inflection a fraction of a bin before the phase onset).
inline std::vector<InsightClassification> classify_cohort(
    const std::vector<CurveFit>& exp_fits, const std::vector<AccuracySeries>& exp_series,
    const std::vector<double>& control_corrected) {
    if (exp_fits.size() != exp_series.size())
        throw data_error("classify: fits and series counts differ");
    const double thr = control_threshold(control_corrected);
    std::vector<InsightClassification> out;
    out.reserve(exp_fits.size());
    for (std::size_t i = 0; i < exp_fits.size(); ++i) {
        InsightClassification c;
        c.agent_id = static_cast<int>(i);
        c.raw_steepness = slope_at_inflection(exp_fits[i]);
        c.fit_correction = exp_fits[i].rmse();
        c.corrected_steepness = c.raw_steepness - c.fit_correction;
        c.threshold = thr;
        c.is_insight = c.corrected_steepness > thr;
        c.switch_bin = static_cast<int>(std::lround(exp_fits[i].t_s));
        c.delay_bins = c.is_insight
                           ? std::max(0, c.switch_bin - exp_series[i].t_origin)
                           : -1;
        out.push_back(c);
    }
    return out;
}

struct SwitchAligned {
    // aligned[agent][column]; column offset 0 corresponds to the switch bin
    std::vector<std::vector<double>> aligned;
    int columns = 0;
    int zero_column = 0;  // column index of the switch bin
    double pre_mean = 0.0;
    double post_mean = 0.0;
    bool empty = true;
};

// Re-indexes each insight agent's series so its switch bin lands at a
// common column; reports mean accuracy in the bin before vs at/after the
// switch. Agents whose switch sits at a series edge contribute only to
// the side that exists. NaN pads missing cells.
inline SwitchAligned switch_align(const std::vector<AccuracySeries>& series,
                                  const std::vector<InsightClassification>& classes) {
    if (series.size() != classes.size())
        throw data_error("switch_align: series and classification counts differ");
    SwitchAligned out;
    int max_pre = 0, max_post = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!classes[i].is_insight) continue;
        const int n = static_cast<int>(series[i].bins.size());
        const int sb = std::clamp(classes[i].switch_bin, 0, n);
        max_pre = std::max(max_pre, sb);
        max_post = std::max(max_post, n - sb);
        out.empty = false;
    }
    if (out.empty) return out;

    out.zero_column = max_pre;
    out.columns = max_pre + max_post;
    double pre_sum = 0.0, post_sum = 0.0;
    int pre_n = 0, post_n = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!classes[i].is_insight) continue;
        const int n = static_cast<int>(series[i].bins.size());
        const int sb = std::clamp(classes[i].switch_bin, 0, n);
        std::vector<double> row(static_cast<std::size_t>(out.columns),
                                std::numeric_limits<double>::quiet_NaN());
        for (int b = 0; b < n; ++b) {
            const int col = b - sb + out.zero_column;
            if (col >= 0 && col < out.columns) row[static_cast<std::size_t>(col)] = series[i].bins[static_cast<std::size_t>(b)];
        }
        out.aligned.push_back(std::move(row));
        if (sb - 1 >= 0 && sb - 1 < n) {
            pre_sum += series[i].bins[static_cast<std::size_t>(sb - 1)];
            ++pre_n;
        }
        if (sb >= 0 && sb < n) {
            post_sum += series[i].bins[static_cast<std::size_t>(sb)];
            ++post_n;
        }
    }
    out.pre_mean = pre_n ? pre_sum / pre_n : std::numeric_limits<double>::quiet_NaN();
    out.post_mean = post_n ? post_sum / post_n : std::numeric_limits<double>::quiet_NaN();
    return out;
}

}  // namespace insight

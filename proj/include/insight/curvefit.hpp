#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "insight/errors.hpp"
#include "insight/optim.hpp"
#include "insight/series.hpp"

namespace insight {

enum class CurveFamily { Sigmoid, Linear, Step };

inline const char* to_string(CurveFamily f) {
    switch (f) {
        case CurveFamily::Sigmoid: return "sigmoid";
        case CurveFamily::Linear: return "linear";
        case CurveFamily::Step: return "step";
    }
    return "?";
}

// Gaussian-residual BIC for a least-squares fit.
inline double bic(int n, int k, double sse) {
    if (n <= k) throw data_error("bic undefined for n <= k");
    if (sse < 0.0) throw data_error("bic: negative sse");
    const double floored = std::max(sse, 1e-12);
    return n * std::log(floored / n) + k * std::log(static_cast<double>(n));
}

struct CurveFit {
    CurveFamily family = CurveFamily::Sigmoid;
    // sigmoid: m, t_s, y_max; linear: m, y0; step: t_s, s, y_max
    double m = 0.0;
    double t_s = 0.0;
    double y_max = 0.0;
    double y0 = 0.0;
    double s = 0.0;
    double y_min = 0.0;  // fixed floor used by the sigmoid family
    double sse = 0.0;
    int n = 0;
    int k = 0;
    double bic_value = 0.0;
    bool degenerate = false;

    double rmse() const { return n > 0 ? std::sqrt(sse / n) : 0.0; }
};

inline double sigmoid_value(double t, double m, double t_s, double y_max, double y_min) {
    const double z = std::clamp(m * (t - t_s), -500.0, 500.0);
    return (y_max - y_min) / (1.0 + std::exp(-z)) + y_min;
}

struct SigmoidFitOptions {
    double m_max = 4.0;       // transitions narrower than ~1/4 bin are unresolvable
    int ts_margin = 2;        // inflection keeps this many bins of post support
    std::vector<double> m_starts{0.5, 2.0, 4.0};
    int ts_grid = 8;          // coarse multi-start grid over t_s
    int evals_per_start = 60;
};

// Least-squares sigmoid with fixed floor y_min: multi-start bounded local
// search over (m, t_s, y_max). Falls back to a degenerate m = 0 fit when
// no start improves on the constant-y_min model.
inline CurveFit fit_sigmoid(const AccuracySeries& series,
                            const SigmoidFitOptions& opts = {}) {
    const auto& b = series.bins;
    const int n = static_cast<int>(b.size());
    if (n < 4) throw data_error("fit_sigmoid: need at least 4 bins");
    const double y_min = series.y_min;

    auto sse_of = [&](double m, double ts, double ymax) {
        double sse = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = sigmoid_value(i, m, ts, ymax, y_min) - b[static_cast<std::size_t>(i)];
            sse += r * r;
        }
        return sse;
    };

    double const_sse = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = b[static_cast<std::size_t>(i)] - y_min;
        const_sse += r * r;
    }

    const double ts_hi = std::max(0.0, static_cast<double>(n - opts.ts_margin));
    const std::vector<double> lo{0.0, 0.0, y_min};
    const std::vector<double> hi{opts.m_max, ts_hi, 1.0};

    double tail = y_min;
    for (int i = std::max(0, n - 3); i < n; ++i) tail = std::max(tail, b[static_cast<std::size_t>(i)]);
    const double ymax0 = std::clamp(tail, y_min, 1.0);

    CurveFit best;
    best.family = CurveFamily::Sigmoid;
    best.y_min = y_min;
    best.n = n;
    best.k = 3;
    best.sse = const_sse;
    best.degenerate = true;
    best.y_max = y_min;

    NelderMeadOptions nm;
    nm.max_evals = opts.evals_per_start;
    for (int gi = 0; gi <= opts.ts_grid; ++gi) {
        const double ts0 = ts_hi * gi / std::max(opts.ts_grid, 1);
        for (double m0 : opts.m_starts) {
            m0 = std::min(m0, opts.m_max);
            auto obj = [&](const std::vector<double>& x) {
                return sse_of(x[0], x[1], x[2]);
            };
            const auto r = nelder_mead(obj, {m0, ts0, ymax0},
                                       {0.5, 1.0, 0.05}, lo, hi, nm);
            if (r.f < best.sse - 1e-12) {
                best.m = r.x[0];
                best.t_s = r.x[1];
                best.y_max = r.x[2];
                best.sse = r.f;
                best.degenerate = false;
            }
        }
    }
    if (best.degenerate) {
        best.m = 0.0;
        best.t_s = 0.0;
        best.y_max = y_min;
    }
    best.bic_value = bic(best.n, best.k, best.sse);
    return best;
}

// Ordinary least squares, y = m t + y0.
inline CurveFit fit_linear(const AccuracySeries& series) {
    const auto& b = series.bins;
    const int n = static_cast<int>(b.size());
    if (n < 3) throw data_error("fit_linear: need at least 3 bins");
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (int i = 0; i < n; ++i) {
        st += i;
        sy += b[static_cast<std::size_t>(i)];
        stt += static_cast<double>(i) * i;
        sty += i * b[static_cast<std::size_t>(i)];
    }
    const double denom = n * stt - st * st;
    CurveFit fit;
    fit.family = CurveFamily::Linear;
    fit.y_min = series.y_min;
    fit.n = n;
    fit.k = 2;
    fit.m = (n * sty - st * sy) / denom;
    fit.y0 = (sy - fit.m * st) / n;
    for (int i = 0; i < n; ++i) {
        const double r = fit.m * i + fit.y0 - b[static_cast<std::size_t>(i)];
        fit.sse += r * r;
    }
    fit.bic_value = bic(fit.n, fit.k, fit.sse);
    return fit;
}

// Step model: y = y_max - s for t < t_s, y_max for t >= t_s. Exhaustive
// integer t_s with closed-form (s, y_max) per split.
inline CurveFit fit_step(const AccuracySeries& series) {
    const auto& b = series.bins;
    const int n = static_cast<int>(b.size());
    if (n < 4) throw data_error("fit_step: need at least 4 bins");
    std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)];

    CurveFit fit;
    fit.family = CurveFamily::Step;
    fit.y_min = series.y_min;
    fit.n = n;
    fit.k = 3;
    fit.sse = std::numeric_limits<double>::infinity();
    for (int ts = 1; ts < n; ++ts) {
        const double mean_lo = prefix[static_cast<std::size_t>(ts)] / ts;
        const double mean_hi = (prefix[static_cast<std::size_t>(n)] - prefix[static_cast<std::size_t>(ts)]) / (n - ts);
        double sse = 0.0;
        for (int i = 0; i < n; ++i) {
            const double pred = i < ts ? mean_lo : mean_hi;
            const double r = pred - b[static_cast<std::size_t>(i)];
            sse += r * r;
        }
        if (sse < fit.sse) {
            fit.sse = sse;
            fit.t_s = ts;
            fit.y_max = mean_hi;
            fit.s = mean_hi - mean_lo;
        }
    }
    fit.bic_value = bic(fit.n, fit.k, fit.sse);
    return fit;
}

// Rate of change of the fitted sigmoid at its inflection point.
inline double slope_at_inflection(const CurveFit& fit) {
    if (fit.family != CurveFamily::Sigmoid)
        throw data_error("slope_at_inflection requires a sigmoid fit");
    return 0.25 * fit.m * (fit.y_max - fit.y_min);
}

// Steepness corrected by the general fit quality (RMSE shares the
// accuracy units of the slope numerator and penalises spurious-jump fits).
inline double corrected_steepness(const CurveFit& fit, const AccuracySeries& series) {
    if (static_cast<int>(series.bins.size()) != fit.n)
        throw data_error("corrected_steepness: fit and series sizes differ");
    return slope_at_inflection(fit) - fit.rmse();
}

}  // namespace insight

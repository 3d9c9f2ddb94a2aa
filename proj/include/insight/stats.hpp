#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "insight/errors.hpp"
#include "insight/rng.hpp"

namespace insight {

// P(D_n < d) for the two-sided one-sample KS statistic, exact
// (Marsaglia-Tsang-Wang matrix method). n stays cohort-sized here, so
// plain repeated multiplication with decimal rescaling is plenty.
inline double ks_cdf_exact(int n, double d) {
    if (d <= 1.0 / (2.0 * n)) return 0.0;
    if (d >= 1.0) return 1.0;
    const int k = static_cast<int>(std::ceil(n * d - 1e-12));
    const int m = 2 * k - 1;
    const double h = k - n * d;

    std::vector<double> H(static_cast<std::size_t>(m) * m, 0.0);
    auto at = [&](std::vector<double>& M, int i, int j) -> double& {
        return M[static_cast<std::size_t>(i) * m + j];
    };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i - j + 1 >= 0) at(H, i, j) = 1.0;
    for (int i = 0; i < m; ++i) {
        at(H, i, 0) -= std::pow(h, i + 1);
        at(H, m - 1, i) -= std::pow(h, m - i);
    }
    if (2.0 * h - 1.0 > 0.0) at(H, m - 1, 0) += std::pow(2.0 * h - 1.0, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i - j + 1 > 0) {
                double fact = 1.0;
                for (int g = 1; g <= i - j + 1; ++g) fact *= g;
                at(H, i, j) /= fact;
            }

    std::vector<double> P(H), tmp(H.size());
    int exponent = 0;
    for (int step = 1; step < n; ++step) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double s = 0.0;
                for (int l = 0; l < m; ++l) s += at(P, i, l) * at(H, l, j);
                tmp[static_cast<std::size_t>(i) * m + j] = s;
            }
        P.swap(tmp);
        if (at(P, k - 1, k - 1) > 1e140) {
            for (double& v : P) v *= 1e-140;
            exponent += 140;
        }
    }

    double s = at(P, k - 1, k - 1);
    for (int i = 1; i <= n; ++i) {
        s *= static_cast<double>(i) / n;
        if (s < 1e-140) {
            s *= 1e140;
            exponent -= 140;
        }
    }
    return std::clamp(s * std::pow(10.0, exponent), 0.0, 1.0);
}

struct KsResult {
    double d = 0.0;
    double p = 1.0;
    int n = 0;
};

// Exact two-sided one-sample KS test of the delays against the continuous
// uniform distribution on [0, window].
inline KsResult ks_uniform_delays(const std::vector<double>& delays, double window) {
    if (delays.empty()) throw data_error("ks_uniform_delays: no delays");
    if (!(window > 0.0)) throw data_error("ks_uniform_delays: window must be positive");
    std::vector<double> x(delays);
    for (double v : x)
        if (v < 0.0 || v > window)
            throw data_error("ks_uniform_delays: delay outside [0, window]");
    std::sort(x.begin(), x.end());
    const int n = static_cast<int>(x.size());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = x[static_cast<std::size_t>(i)] / window;
        d = std::max(d, (i + 1.0) / n - f);
        d = std::max(d, f - static_cast<double>(i) / n);
    }
    KsResult r;
    r.d = d;
    r.n = n;
    r.p = 1.0 - ks_cdf_exact(n, d);
    r.p = std::clamp(r.p, 0.0, 1.0);
    return r;
}

// Two-segment Gaussian log-likelihood with segment-specific mean and
// variance; variances floored at 1e-12.
namespace detail {
inline double segment_ll(const std::vector<double>& x, int lo, int hi) {
    const int n = hi - lo;
    double mean = 0.0;
    for (int i = lo; i < hi; ++i) mean += x[static_cast<std::size_t>(i)];
    mean /= n;
    double var = 0.0;
    for (int i = lo; i < hi; ++i) {
        const double dd = x[static_cast<std::size_t>(i)] - mean;
        var += dd * dd;
    }
    var = std::max(var / n, 1e-12);
    return -0.5 * n * (std::log(2.0 * M_PI * var) + 1.0);
}
}  // namespace detail

struct ChangePointResult {
    std::optional<int> index;  // empty when the gain is below the null threshold
    double gain = 0.0;
    double threshold = 0.0;
};

// Single change point maximising the two-segment likelihood. Significance
// is calibrated on permutations of the series: the change is reported only
// when the observed gain exceeds the 95th percentile of permuted gains.
inline ChangePointResult change_point(const std::vector<double>& series,
                                      int permutations = 199,
                                      std::uint64_t seed = 0xC0FFEEULL) {
    const int n = static_cast<int>(series.size());
    if (n < 8) throw data_error("change_point: series too short (need >= 8)");
    const int min_seg = 2;

    auto best_gain = [&](const std::vector<double>& x, int* arg) {
        const double ll0 = detail::segment_ll(x, 0, n);
        double best = -1e300;
        int bi = min_seg;
        for (int tau = min_seg; tau <= n - min_seg; ++tau) {
            const double ll = detail::segment_ll(x, 0, tau) + detail::segment_ll(x, tau, n);
            if (ll > best) {
                best = ll;
                bi = tau;
            }
        }
        if (arg) *arg = bi;
        return best - ll0;
    };

    ChangePointResult out;
    int arg = 0;
    out.gain = best_gain(series, &arg);

    Rng rng(seed);
    std::vector<double> perm(series);
    std::vector<double> gains;
    gains.reserve(static_cast<std::size_t>(permutations));
    for (int p = 0; p < permutations; ++p) {
        shuffle(perm, rng);
        gains.push_back(best_gain(perm, nullptr));
    }
    std::sort(gains.begin(), gains.end());
    const auto q = static_cast<std::size_t>(std::floor(0.95 * (gains.size() - 1)));
    out.threshold = gains[q];
    if (out.gain > out.threshold) out.index = arg;
    return out;
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    const auto n = xs.size();
    if (n != ys.size() || n < 2) throw data_error("spearman: need two equal series, n >= 2");
    auto ranks = [](const std::vector<double>& v) {
        const auto n = v.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * (i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(xs), ry = ranks(ys);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// Hartigan's dip statistic: max distance between the empirical CDF and the
// closest unimodal CDF. Simplified O(n^2) greatest-convex-minorant /
// least-concave-majorant search, adequate for cohort-sized samples.
inline double dip_statistic(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const int n = static_cast<int>(x.size());
    if (n < 4) throw data_error("dip_statistic: need at least 4 samples");

    // ECDF at sorted points: F(x_i) = (i+1)/n; candidate modal interval
    // [lo, hi]: fit convex minorant below lo, concave majorant above hi.
    auto convex_dev = [&](int lo, int hi) {
        // max |ECDF - chord hull| for the convex part on [0..lo] and the
        // concave part on [hi..n-1], plus the flat bridge across the mode.
        double dev = 0.0;
        // convex minorant over [0, lo]
        int i = 0;
        while (i < lo) {
            int j_best = i + 1;
            double slope_best = 1e300;
            for (int j = i + 1; j <= lo; ++j) {
                const double dx = x[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(i)];
                const double slope = dx > 0 ? (static_cast<double>(j - i) / n) / dx : 1e300;
                if (slope <= slope_best) {
                    slope_best = slope;
                    j_best = j;
                }
            }
            for (int t = i; t <= j_best; ++t) {
                const double dx = x[static_cast<std::size_t>(j_best)] - x[static_cast<std::size_t>(i)];
                const double frac = dx > 0 ? (x[static_cast<std::size_t>(t)] - x[static_cast<std::size_t>(i)]) / dx : 1.0;
                const double hull = (static_cast<double>(i + 1) + frac * (j_best - i)) / n;
                dev = std::max(dev, std::fabs(static_cast<double>(t + 1) / n - hull));
            }
            i = j_best;
        }
        // concave majorant over [hi, n-1]
        i = hi;
        while (i < n - 1) {
            int j_best = i + 1;
            double slope_best = -1e300;
            for (int j = i + 1; j < n; ++j) {
                const double dx = x[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(i)];
                const double slope = dx > 0 ? (static_cast<double>(j - i) / n) / dx : -1e300;
                if (slope >= slope_best) {
                    slope_best = slope;
                    j_best = j;
                }
            }
            for (int t = i; t <= j_best; ++t) {
                const double dx = x[static_cast<std::size_t>(j_best)] - x[static_cast<std::size_t>(i)];
                const double frac = dx > 0 ? (x[static_cast<std::size_t>(t)] - x[static_cast<std::size_t>(i)]) / dx : 1.0;
                const double hull = (static_cast<double>(i + 1) + frac * (j_best - i)) / n;
                dev = std::max(dev, std::fabs(static_cast<double>(t + 1) / n - hull));
            }
            i = j_best;
        }
        return dev;
    };

    double best = 1e300;
    const int stride = n > 150 ? n / 75 : 1;
    for (int lo = 0; lo < n - 1; lo += stride)
        for (int hi = lo; hi < n; hi += stride)
            best = std::min(best, convex_dev(lo, hi));
    return 0.5 * best;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (static_cast<double>(v.size()) - 1.0));
}

}  // namespace insight

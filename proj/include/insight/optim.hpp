#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace insight {

struct NelderMeadOptions {
    int max_evals = 200;
    double f_tol = 1e-12;
    double x_tol = 1e-9;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int evals = 0;
    bool converged = false;
};

// Bound-constrained Nelder-Mead; iterates are clamped to [lo, hi]
// componentwise. Small dimension, derivative-free, evaluation-budgeted --
// the optimizer contract the calibration and curve fitting need.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0,
                                    const std::vector<double>& step,
                                    const std::vector<double>& lo,
                                    const std::vector<double>& hi,
                                    const NelderMeadOptions& opts = {}) {
    const std::size_t n = x0.size();
    auto clamp = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    };
    clamp(x0);

    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(x);
    };

    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> fx(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += step[i] != 0.0 ? step[i] : 0.1;
        clamp(simplex[i + 1]);
        if (simplex[i + 1] == simplex[0]) simplex[i + 1][i] -= 2.0 * step[i];
        clamp(simplex[i + 1]);
    }
    for (std::size_t i = 0; i <= n; ++i) fx[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    while (evals < opts.max_evals) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];

        double spread = 0.0, xspread = 0.0;
        for (std::size_t i = 0; i <= n; ++i) spread = std::max(spread, std::fabs(fx[i] - fx[best]));
        for (std::size_t i = 0; i < n; ++i)
            xspread = std::max(xspread, std::fabs(simplex[worst][i] - simplex[best][i]));
        if (spread < opts.f_tol || xspread < opts.x_tol) {
            return {simplex[best], fx[best], evals, true};
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t d = 0; d < n; ++d)
                x[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
            clamp(x);
            return x;
        };

        auto xr = blend(-1.0);
        const double fr = eval(xr);
        if (fr < fx[best]) {
            auto xe = blend(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = std::move(xe);
                fx[worst] = fe;
            } else {
                simplex[worst] = std::move(xr);
                fx[worst] = fr;
            }
        } else if (fr < fx[second]) {
            simplex[worst] = std::move(xr);
            fx[worst] = fr;
        } else {
            const bool outside = fr < fx[worst];
            auto xc = blend(outside ? -0.5 : 0.5);
            const double fc = eval(xc);
            if (fc < std::min(fr, fx[worst])) {
                simplex[worst] = std::move(xc);
                fx[worst] = fc;
            } else {
                // shrink toward the best vertex
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < n; ++d)
                        simplex[i][d] = simplex[best][d] +
                                        0.5 * (simplex[i][d] - simplex[best][d]);
                    clamp(simplex[i]);
                    fx[i] = eval(simplex[i]);
                    if (evals >= opts.max_evals) break;
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fx[i] < fx[best]) best = i;
    return {simplex[best], fx[best], evals, false};
}

}  // namespace insight

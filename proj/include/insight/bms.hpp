#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "insight/errors.hpp"
#include "insight/rng.hpp"

namespace insight {

namespace detail {

inline double digamma(double x) {
    // recurrence to x >= 6, then the asymptotic series
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
    return result;
}

// Marsaglia-Tsang gamma sampler, shape >= 1 (posterior counts are >= 1).
inline double gamma_draw(Rng& rng, double shape) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace detail

struct ModelComparison {
    std::vector<double> mean_bic;              // per family
    std::vector<double> expected_frequency;    // posterior Dirichlet mean
    std::vector<double> exceedance;            // P(family most frequent)
    std::vector<double> protected_exceedance;  // BOR-corrected
    double bor = 1.0;                          // Bayes omnibus risk
    bool degenerate = false;                   // all evidences identical
};

// Random-effects Bayesian model selection over per-agent BIC scores.
// Log model evidence is approximated as -BIC/2; a variational Dirichlet
// scheme estimates family frequencies, exceedance probabilities come from
// Dirichlet sampling, and the omnibus-risk correction shrinks them toward
// uniform when the frequencies are indistinguishable. The scheme is the
// standard group-BMS machinery, not specific to this project.
inline ModelComparison group_model_comparison(
    const std::vector<std::vector<double>>& bics, std::uint64_t mc_seed = 0x5eedULL,
    int mc_samples = 200000) {
    const auto n_agents = bics.size();
    if (n_agents < 2) throw data_error("group_model_comparison: need >= 2 agents");
    const auto k = bics.front().size();
    if (k < 2) throw data_error("group_model_comparison: need >= 2 families");
    for (const auto& row : bics)
        if (row.size() != k) throw data_error("group_model_comparison: ragged BIC matrix");

    ModelComparison out;
    out.mean_bic.assign(k, 0.0);
    for (const auto& row : bics)
        for (std::size_t j = 0; j < k; ++j) out.mean_bic[j] += row[j] / static_cast<double>(n_agents);

    std::vector<std::vector<double>> lme(n_agents, std::vector<double>(k));
    bool all_equal = true;
    for (std::size_t i = 0; i < n_agents; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            lme[i][j] = -0.5 * bics[i][j];
            if (std::fabs(bics[i][j] - bics[i][0]) > 1e-12) all_equal = false;
        }
    if (all_equal) {
        out.degenerate = true;
        out.expected_frequency.assign(k, 1.0 / static_cast<double>(k));
        out.exceedance.assign(k, 1.0 / static_cast<double>(k));
        out.protected_exceedance.assign(k, 1.0 / static_cast<double>(k));
        out.bor = 1.0;
        return out;
    }

    // variational updates
    const double alpha0 = 1.0;
    std::vector<double> alpha(k, alpha0);
    std::vector<std::vector<double>> u(n_agents, std::vector<double>(k, 1.0 / static_cast<double>(k)));
    for (int iter = 0; iter < 500; ++iter) {
        double alpha_sum = 0.0;
        for (double a : alpha) alpha_sum += a;
        const double dg_sum = detail::digamma(alpha_sum);
        std::vector<double> e_ln_r(k);
        for (std::size_t j = 0; j < k; ++j) e_ln_r[j] = detail::digamma(alpha[j]) - dg_sum;

        std::vector<double> counts(k, 0.0);
        for (std::size_t i = 0; i < n_agents; ++i) {
            double zmax = -1e300;
            for (std::size_t j = 0; j < k; ++j) zmax = std::max(zmax, lme[i][j] + e_ln_r[j]);
            double z = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                u[i][j] = std::exp(lme[i][j] + e_ln_r[j] - zmax);
                z += u[i][j];
            }
            for (std::size_t j = 0; j < k; ++j) {
                u[i][j] /= z;
                counts[j] += u[i][j];
            }
        }
        double delta = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double next = alpha0 + counts[j];
            delta = std::max(delta, std::fabs(next - alpha[j]));
            alpha[j] = next;
        }
        if (delta < 1e-8) break;
    }

    double alpha_sum = 0.0;
    for (double a : alpha) alpha_sum += a;
    out.expected_frequency.resize(k);
    for (std::size_t j = 0; j < k; ++j) out.expected_frequency[j] = alpha[j] / alpha_sum;

    // exceedance probabilities by Dirichlet sampling
    out.exceedance.assign(k, 0.0);
    Rng rng(mc_seed);
    std::vector<double> g(k);
    for (int s = 0; s < mc_samples; ++s) {
        std::size_t arg = 0;
        for (std::size_t j = 0; j < k; ++j) {
            g[j] = detail::gamma_draw(rng, alpha[j]);
            if (g[j] > g[arg]) arg = j;
        }
        out.exceedance[arg] += 1.0;
    }
    for (double& e : out.exceedance) e /= mc_samples;

    // Bayes omnibus risk: F0 (equal frequencies) vs F1 (variational fit)
    double f0 = 0.0;
    for (std::size_t i = 0; i < n_agents; ++i) {
        double zmax = -1e300;
        for (std::size_t j = 0; j < k; ++j) zmax = std::max(zmax, lme[i][j]);
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += std::exp(lme[i][j] - zmax);
        f0 += zmax + std::log(acc / static_cast<double>(k));
    }
    const double dg_sum = detail::digamma(alpha_sum);
    double f1 = 0.0;
    for (std::size_t i = 0; i < n_agents; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (u[i][j] <= 0.0) continue;
            const double e_ln_rj = detail::digamma(alpha[j]) - dg_sum;
            f1 += u[i][j] * (lme[i][j] + e_ln_rj - std::log(u[i][j]));
        }
    // minus KL(Dir(alpha) || Dir(alpha0))
    double kl = std::lgamma(alpha_sum) - std::lgamma(alpha0 * static_cast<double>(k));
    for (std::size_t j = 0; j < k; ++j) {
        kl -= std::lgamma(alpha[j]) - std::lgamma(alpha0);
        kl += (alpha[j] - alpha0) * (detail::digamma(alpha[j]) - dg_sum);
    }
    f1 -= kl;
    out.bor = 1.0 / (1.0 + std::exp(f1 - f0));

    out.protected_exceedance.resize(k);
    for (std::size_t j = 0; j < k; ++j)
        out.protected_exceedance[j] =
            out.exceedance[j] * (1.0 - out.bor) + out.bor / static_cast<double>(k);
    return out;
}

}  // namespace insight

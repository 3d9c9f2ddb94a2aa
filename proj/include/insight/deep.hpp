#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "insight/errors.hpp"
#include "insight/model.hpp"
#include "insight/rng.hpp"

namespace insight {

// Two inputs -> 48 relu units -> two outputs; every first-layer weight has
// a multiplicative gate under L1 regularisation. Trained on softmax
// cross-entropy. Class 0 encodes y = +1, class 1 encodes y = -1.
struct DeepNetworkState {
    static constexpr int kHidden = 48;

    std::array<std::array<double, kHidden>, 2> w1{};     // input x hidden
    std::array<std::array<double, kHidden>, 2> gates{};  // same shape as w1
    std::array<std::array<double, 2>, kHidden> w2{};     // hidden x output
    std::uint64_t rng_seed = 0;

    bool finite() const {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < kHidden; ++j)
                if (!std::isfinite(w1[i][j]) || !std::isfinite(gates[i][j]))
                    return false;
        for (int j = 0; j < kHidden; ++j)
            for (int c = 0; c < 2; ++c)
                if (!std::isfinite(w2[j][c])) return false;
        return true;
    }
};

// Weights uniform in [-0.1, 0.1], gates at 0.01 to mirror the shallow init.
inline DeepNetworkState deep_initial_state(std::uint64_t seed) {
    DeepNetworkState s;
    s.rng_seed = seed;
    Rng rng(derive_seed(seed, 0xD11DULL, 0));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < DeepNetworkState::kHidden; ++j) {
            s.w1[i][j] = (rng.uniform() * 2.0 - 1.0) * 0.1;
            s.gates[i][j] = 0.01;
        }
    for (int j = 0; j < DeepNetworkState::kHidden; ++j)
        for (int c = 0; c < 2; ++c) s.w2[j][c] = (rng.uniform() * 2.0 - 1.0) * 0.1;
    return s;
}

struct DeepForwardResult {
    std::array<double, 2> logits;
    int decision;  // +1 / -1; ties resolve to the first class (+1)
};

inline DeepForwardResult deep_forward(const DeepNetworkState& s, double x_m,
                                      double x_c) {
    detail::require_finite(x_m, "x_m");
    detail::require_finite(x_c, "x_c");
    if (!s.finite()) throw std::invalid_argument("non-finite input: state");
    std::array<double, 2> logits{0.0, 0.0};
    for (int j = 0; j < DeepNetworkState::kHidden; ++j) {
        const double pre = s.gates[0][j] * s.w1[0][j] * x_m +
                           s.gates[1][j] * s.w1[1][j] * x_c;
        if (pre > 0.0) {
            logits[0] += s.w2[j][0] * pre;
            logits[1] += s.w2[j][1] * pre;
        }
    }
    return {logits, logits[1] > logits[0] ? -1 : +1};
}

// Cross-entropy of the softmax plus L1 penalty on all gate entries.
inline double deep_loss(const DeepNetworkState& s, double x_m, double x_c, int y,
                        double lambda) {
    const auto f = deep_forward(s, x_m, x_c);
    const int cls = (y == 1) ? 0 : 1;
    const double zmax = std::fmax(f.logits[0], f.logits[1]);
    const double lse = zmax + std::log(std::exp(f.logits[0] - zmax) +
                                       std::exp(f.logits[1] - zmax));
    double pen = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < DeepNetworkState::kHidden; ++j)
            pen += std::fabs(s.gates[i][j]);
    return lse - f.logits[cls] + lambda * pen;
}

// One online step. Noise-mask semantics generalise to parameter classes:
// w_m/w_c jointly gate "all weights" (both layers), g_m/g_c jointly gate
// "all gates". Gates take the clipped L1 step, as in the shallow model.
inline DeepNetworkState deep_sgd_step(const DeepNetworkState& s, double x_m,
                                      double x_c, int y,
                                      const Hyperparameters& hyp, Rng& rng) {
    if (y != 1 && y != -1) throw std::invalid_argument("y must be +1 or -1");
    const int cls = (y == 1) ? 0 : 1;
    const double a = hyp.alpha;
    const bool noise_w = hyp.sigma_xi > 0.0 && (hyp.noise_mask.w_m || hyp.noise_mask.w_c);
    const bool noise_g = hyp.sigma_xi > 0.0 && (hyp.noise_mask.g_m || hyp.noise_mask.g_c);

    const double in[2] = {x_m, x_c};
    std::array<double, DeepNetworkState::kHidden> pre{};
    std::array<double, 2> logits{0.0, 0.0};
    for (int j = 0; j < DeepNetworkState::kHidden; ++j) {
        pre[j] = s.gates[0][j] * s.w1[0][j] * x_m + s.gates[1][j] * s.w1[1][j] * x_c;
        if (pre[j] > 0.0) {
            logits[0] += s.w2[j][0] * pre[j];
            logits[1] += s.w2[j][1] * pre[j];
        }
    }
    const double zmax = std::fmax(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - zmax), e1 = std::exp(logits[1] - zmax);
    const double z = e0 + e1;
    double dlogit[2] = {e0 / z, e1 / z};
    dlogit[cls] -= 1.0;

    DeepNetworkState out = s;
    const double shrink = a * hyp.lambda;
    for (int j = 0; j < DeepNetworkState::kHidden; ++j) {
        const double h = pre[j] > 0.0 ? pre[j] : 0.0;
        for (int c = 0; c < 2; ++c) {
            double dw2 = -a * h * dlogit[c];
            if (noise_w) dw2 += rng.normal(0.0, hyp.sigma_xi);
            out.w2[j][c] = s.w2[j][c] + dw2;
            detail::check_overflow(out.w2[j][c], "w2");
        }
        const double dh = pre[j] > 0.0
                              ? s.w2[j][0] * dlogit[0] + s.w2[j][1] * dlogit[1]
                              : 0.0;
        for (int i = 0; i < 2; ++i) {
            double dw1 = -a * s.gates[i][j] * in[i] * dh;
            if (noise_w) dw1 += rng.normal(0.0, hyp.sigma_xi);
            out.w1[i][j] = s.w1[i][j] + dw1;
            detail::check_overflow(out.w1[i][j], "w1");

            const double err_step = -a * s.w1[i][j] * in[i] * dh;
            const double xi = noise_g ? rng.normal(0.0, hyp.sigma_xi) : 0.0;
            out.gates[i][j] = detail::l1_gate_step(s.gates[i][j], err_step, xi, shrink);
            detail::check_overflow(out.gates[i][j], "gate");
        }
    }
    return out;
}

}  // namespace insight

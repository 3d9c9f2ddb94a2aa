#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "insight/errors.hpp"
#include "insight/rng.hpp"

namespace insight {

enum class Regulariser { L1, L2, None, NoGate };

inline const char* to_string(Regulariser r) {
    switch (r) {
        case Regulariser::L1: return "l1";
        case Regulariser::L2: return "l2";
        case Regulariser::None: return "none";
        case Regulariser::NoGate: return "no_gate";
    }
    return "?";
}

// Which parameters receive gradient noise xi.
struct NoiseMask {
    bool w_m = true;
    bool w_c = true;
    bool g_m = true;
    bool g_c = true;

    static NoiseMask all() { return {true, true, true, true}; }
    static NoiseMask none() { return {false, false, false, false}; }
    static NoiseMask weights_only() { return {true, true, false, false}; }
    static NoiseMask gates_only() { return {false, false, true, true}; }
    static NoiseMask colour_only() { return {false, true, false, true}; }
    static NoiseMask motion_only() { return {true, false, true, false}; }
};

constexpr int kNumCoherenceLevels = 5;
constexpr std::array<int, kNumCoherenceLevels> kCoherenceLabels{5, 10, 20, 30, 45};

// Motion input mean shift per coherence level; NaN marks "not calibrated yet".
using MotionMeans = std::array<double, kNumCoherenceLevels>;

inline MotionMeans uncalibrated_means() {
    MotionMeans m;
    m.fill(std::numeric_limits<double>::quiet_NaN());
    return m;
}

struct Hyperparameters {
    double alpha = 0.6;
    double lambda = 0.07;
    double sigma_eta = 0.25;   // output noise SD (the paper leaves it unstated)
    double sigma_xi = 0.05;    // gradient noise SD
    NoiseMask noise_mask = NoiseMask::all();
    Regulariser regulariser = Regulariser::L1;
    double m_c = 0.22;         // colour input mean shift
    double sigma_c = 0.01;     // colour input SD
    double sigma_m = 0.01;     // motion input SD
    MotionMeans m_m = uncalibrated_means();

    void validate() const {
        if (!(alpha > 0.0)) throw config_error("alpha must be > 0");
        if (lambda < 0.0) throw config_error("lambda must be >= 0");
        if (sigma_eta < 0.0) throw config_error("sigma_eta must be >= 0");
        if (sigma_xi < 0.0) throw config_error("sigma_xi must be >= 0");
        if (sigma_c < 0.0 || sigma_m < 0.0) throw config_error("input SDs must be >= 0");
    }
};

struct NetworkState {
    double w_m = 0.01;
    double w_c = 0.01;
    double g_m = 0.01;
    double g_c = 0.01;
    std::uint64_t rng_seed = 0;

    bool finite() const {
        return std::isfinite(w_m) && std::isfinite(w_c) && std::isfinite(g_m) &&
               std::isfinite(g_c);
    }
};

// All four learnable parameters start at 0.01. The no-gate variant has no
// gate parameters; they are represented as fixed 1.0 so the shared forward
// rule reduces to w_m x_m + w_c x_c + eta.
inline NetworkState initial_state(std::uint64_t seed, Regulariser reg) {
    NetworkState s;
    s.rng_seed = seed;
    if (reg == Regulariser::NoGate) {
        s.g_m = 1.0;
        s.g_c = 1.0;
    }
    return s;
}

// Per-trial applied deltas and their noise components. The deterministic
// part of each delta is delta - xi, exactly.
struct GradientSnapshot {
    double d_w_m = 0, d_w_c = 0, d_g_m = 0, d_g_c = 0;
    double xi_w_m = 0, xi_w_c = 0, xi_g_m = 0, xi_g_c = 0;

    double det_w_m() const { return d_w_m - xi_w_m; }
    double det_w_c() const { return d_w_c - xi_w_c; }
    double det_g_m() const { return d_g_m - xi_g_m; }
    double det_g_c() const { return d_g_c - xi_g_c; }
};

namespace detail {
inline void require_finite(double v, const char* field) {
    if (!std::isfinite(v))
        throw std::invalid_argument(std::string("non-finite input: ") + field);
}
}  // namespace detail

struct ForwardResult {
    double activation;
    int decision;  // +1 or -1; sign(0) defined as +1
};

inline ForwardResult forward(const NetworkState& s, double x_m, double x_c,
                             double eta) {
    detail::require_finite(x_m, "x_m");
    detail::require_finite(x_c, "x_c");
    detail::require_finite(eta, "eta");
    if (!s.finite()) throw std::invalid_argument("non-finite input: state");
    const double act = s.g_m * s.w_m * x_m + s.g_c * s.w_c * x_c + eta;
    return {act, act >= 0.0 ? +1 : -1};
}

inline double loss(const NetworkState& s, double x_m, double x_c, double eta,
                   int y, const Hyperparameters& hyp) {
    if (y != 1 && y != -1) throw std::invalid_argument("y must be +1 or -1");
    switch (hyp.regulariser) {
        case Regulariser::L1: {
            const double r = s.g_m * s.w_m * x_m + s.g_c * s.w_c * x_c + eta - y;
            return 0.5 * r * r + hyp.lambda * (std::fabs(s.g_m) + std::fabs(s.g_c));
        }
        case Regulariser::L2: {
            const double r = s.g_m * s.w_m * x_m + s.g_c * s.w_c * x_c + eta - y;
            const double p = std::fabs(s.g_m) + std::fabs(s.g_c);
            return 0.5 * r * r + 0.5 * hyp.lambda * p * p;
        }
        case Regulariser::None: {
            const double r = s.g_m * s.w_m * x_m + s.g_c * s.w_c * x_c + eta - y;
            return 0.5 * r * r;
        }
        case Regulariser::NoGate: {
            const double r = s.w_m * x_m + s.w_c * x_c + eta - y;
            return 0.5 * r * r;
        }
    }
    return 0.0;
}

namespace detail {

// One clipped (proximal) L1 step for a gate: the error-gradient and noise
// move the gate first; the penalty then pulls it toward zero and pins it
// there if the pull overshoots. Identical to the plain
// -alpha*lambda*sign(g) delta whenever no zero crossing occurs, but a
// pinned gate stays exactly at zero under zero noise, which is what makes
// the no-noise cohort structurally free of insight-like switches.
inline double l1_gate_step(double g, double err_step, double xi, double shrink) {
    const double moved = g + err_step + xi;
    const double mag = std::fabs(moved) - shrink;
    return mag > 0.0 ? (moved > 0.0 ? mag : -mag) : 0.0;
}

inline void check_overflow(double v, const char* name) {
    if (!(std::fabs(v) <= 1e6))
        throw divergence_error(name, v);
}

}  // namespace detail

// One online step with the trial's eta supplied by the caller (the trainer
// shares it between the decision and the update). Independent xi per
// parameter listed in the noise mask; deltas are computed from the
// pre-update state and applied simultaneously.
inline std::pair<NetworkState, GradientSnapshot> sgd_step_with_eta(
    const NetworkState& s, double x_m, double x_c, double eta, int y,
    const Hyperparameters& hyp, Rng& rng) {
    detail::require_finite(x_m, "x_m");
    detail::require_finite(x_c, "x_c");
    detail::require_finite(eta, "eta");
    if (!s.finite()) throw std::invalid_argument("non-finite input: state");

    const bool gated = hyp.regulariser != Regulariser::NoGate;
    const double act = s.g_m * s.w_m * x_m + s.g_c * s.w_c * x_c + eta;
    const double resid = act - static_cast<double>(y);
    const double a = hyp.alpha;

    GradientSnapshot snap;
    if (hyp.sigma_xi > 0.0) {
        if (hyp.noise_mask.w_m) snap.xi_w_m = rng.normal(0.0, hyp.sigma_xi);
        if (hyp.noise_mask.w_c) snap.xi_w_c = rng.normal(0.0, hyp.sigma_xi);
        if (gated && hyp.noise_mask.g_m) snap.xi_g_m = rng.normal(0.0, hyp.sigma_xi);
        if (gated && hyp.noise_mask.g_c) snap.xi_g_c = rng.normal(0.0, hyp.sigma_xi);
    }

    NetworkState out = s;
    snap.d_w_m = -a * x_m * s.g_m * resid + snap.xi_w_m;
    snap.d_w_c = -a * x_c * s.g_c * resid + snap.xi_w_c;
    out.w_m = s.w_m + snap.d_w_m;
    out.w_c = s.w_c + snap.d_w_c;

    switch (hyp.regulariser) {
        case Regulariser::L1: {
            const double shrink = a * hyp.lambda;
            out.g_m = detail::l1_gate_step(s.g_m, -a * x_m * s.w_m * resid,
                                           snap.xi_g_m, shrink);
            out.g_c = detail::l1_gate_step(s.g_c, -a * x_c * s.w_c * resid,
                                           snap.xi_g_c, shrink);
            snap.d_g_m = out.g_m - s.g_m;
            snap.d_g_c = out.g_c - s.g_c;
            break;
        }
        case Regulariser::L2: {
            snap.d_g_m = -a * x_m * s.w_m * resid - a * hyp.lambda * s.g_m + snap.xi_g_m;
            snap.d_g_c = -a * x_c * s.w_c * resid - a * hyp.lambda * s.g_c + snap.xi_g_c;
            out.g_m = s.g_m + snap.d_g_m;
            out.g_c = s.g_c + snap.d_g_c;
            break;
        }
        case Regulariser::None: {
            snap.d_g_m = -a * x_m * s.w_m * resid + snap.xi_g_m;
            snap.d_g_c = -a * x_c * s.w_c * resid + snap.xi_g_c;
            out.g_m = s.g_m + snap.d_g_m;
            out.g_c = s.g_c + snap.d_g_c;
            break;
        }
        case Regulariser::NoGate: {
            // No gate parameters; weight gradients lose the gate factor
            // because the loss is (w_m x_m + w_c x_c + eta - y)^2 / 2.
            snap.d_w_m = -a * x_m * resid + snap.xi_w_m;
            snap.d_w_c = -a * x_c * resid + snap.xi_w_c;
            out.w_m = s.w_m + snap.d_w_m;
            out.w_c = s.w_c + snap.d_w_c;
            snap.d_g_m = snap.d_g_c = 0.0;
            break;
        }
    }

    detail::check_overflow(out.w_m, "w_m");
    detail::check_overflow(out.w_c, "w_c");
    detail::check_overflow(out.g_m, "g_m");
    detail::check_overflow(out.g_c, "g_c");
    return {out, snap};
}

// Draws eta ~ N(0, sigma_eta) once and reuses it in all four gradients.
inline std::pair<NetworkState, GradientSnapshot> sgd_step(
    const NetworkState& s, double x_m, double x_c, int y,
    const Hyperparameters& hyp, Rng& rng) {
    const double eta = hyp.sigma_eta > 0.0 ? rng.normal(0.0, hyp.sigma_eta) : 0.0;
    return sgd_step_with_eta(s, x_m, x_c, eta, y, hyp, rng);
}

// Probability of a correct decision under the input distributions,
// P = (1 + erf(signal / sqrt(2 var))) / 2.
inline double analytic_accuracy(const NetworkState& s, double m_m, double sigma_m,
                                double m_c, double sigma_c, double sigma_eta) {
    const double sm = s.g_m * s.w_m;
    const double sc = s.g_c * s.w_c;
    const double var = sm * sm * sigma_m * sigma_m + sc * sc * sigma_c * sigma_c +
                       sigma_eta * sigma_eta;
    if (!(var > 0.0))
        throw data_error("analytic_accuracy: degenerate distribution (zero variance)");
    const double signal = sm * m_m + sc * m_c;
    return 0.5 * (1.0 + std::erf(signal / std::sqrt(2.0 * var)));
}

}  // namespace insight

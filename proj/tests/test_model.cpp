#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "insight/model.hpp"

using namespace insight;
using Catch::Approx;

namespace {

NetworkState state_of(double w_m, double w_c, double g_m, double g_c) {
    NetworkState s;
    s.w_m = w_m;
    s.w_c = w_c;
    s.g_m = g_m;
    s.g_c = g_c;
    return s;
}

Hyperparameters quiet_hyp(Regulariser reg, double lambda = 0.07) {
    Hyperparameters h;
    h.regulariser = reg;
    h.lambda = lambda;
    h.sigma_eta = 0.0;
    h.sigma_xi = 0.0;
    return h;
}

}  // namespace

TEST_CASE("forward rule and sign convention", "[model]") {
    const auto zero = state_of(0, 0, 0, 0);
    auto r = forward(zero, 1.0, 1.0, 0.3);
    REQUIRE(r.activation == Approx(0.3));
    REQUIRE(r.decision == 1);

    auto r2 = forward(state_of(1, 0, 1, 0), 0.5, 0.0, 0.0);
    REQUIRE(r2.activation == Approx(0.5));
    REQUIRE(r2.decision == 1);

    auto r3 = forward(state_of(0.01, 0, 0.01, 0), 1.0, 0.0, 0.0);
    REQUIRE(r3.activation == Approx(1e-4));
    REQUIRE(r3.decision == 1);

    // sign(0) := +1
    REQUIRE(forward(zero, 1.0, 1.0, 0.0).decision == 1);

    REQUIRE_THROWS_WITH(forward(zero, std::nan(""), 0.0, 0.0),
                        Catch::Matchers::ContainsSubstring("x_m"));
    REQUIRE_THROWS_WITH(forward(zero, 0.0, 0.0, std::nan("")),
                        Catch::Matchers::ContainsSubstring("eta"));
}

TEST_CASE("loss values for each regulariser", "[model]") {
    const auto zero = state_of(0, 0, 0, 0);
    REQUIRE(loss(zero, 0, 0, 0, 1, quiet_hyp(Regulariser::L1)) == Approx(0.5));

    const auto small_gates = state_of(0, 0, 0.01, 0.01);
    REQUIRE(loss(small_gates, 0, 0, 0, 1, quiet_hyp(Regulariser::L1)) == Approx(0.5014));
    REQUIRE(loss(small_gates, 0, 0, 0, 1, quiet_hyp(Regulariser::L2)) == Approx(0.500014));
    REQUIRE(loss(small_gates, 0, 0, 0, 1, quiet_hyp(Regulariser::None)) == Approx(0.5));

    // no-gate variant ignores gates entirely
    const auto s = state_of(0.5, 0.25, 123.0, -7.0);
    const double r = 0.5 * 1.0 + 0.25 * 2.0 + 0.1 - 1.0;
    REQUIRE(loss(s, 1.0, 2.0, 0.1, 1, quiet_hyp(Regulariser::NoGate)) == Approx(0.5 * r * r));

    REQUIRE_THROWS(loss(zero, 0, 0, 0, 2, quiet_hyp(Regulariser::L1)));
}

TEST_CASE("sgd step hand values at the initial state", "[model]") {
    Rng rng(1);
    const auto init = state_of(0.01, 0.01, 0.01, 0.01);
    auto hyp = quiet_hyp(Regulariser::L1, 0.07);

    auto [next, snap] = sgd_step_with_eta(init, 1.0, 0.0, 0.0, 1, hyp, rng);
    // error gradient on w_m: -0.6 * 1 * 0.01 * (1e-4 - 1) = +0.00599994
    REQUIRE(snap.d_w_m == Approx(0.00599994).epsilon(1e-12));
    // the gate's error step (+0.00599994) moves it to 0.01599994; the L1
    // pull (alpha*lambda = 0.042) overshoots zero, so the gate pins at 0
    REQUIRE(next.g_m == 0.0);
    REQUIRE(snap.d_g_m == Approx(-0.01).epsilon(1e-12));

    // with a small penalty there is no crossing; the applied delta equals
    // the stated subgradient form err - alpha*lambda*sign(g) exactly
    hyp.lambda = 0.002;
    auto [next2, snap2] = sgd_step_with_eta(init, 1.0, 0.0, 0.0, 1, hyp, rng);
    REQUIRE(snap2.d_g_m == Approx(0.00599994 - 0.6 * 0.002).epsilon(1e-12));
    REQUIRE(next2.g_m == Approx(0.01 + 0.00599994 - 0.0012).epsilon(1e-12));
}

TEST_CASE("zero-noise steps are deterministic", "[model]") {
    auto hyp = quiet_hyp(Regulariser::L1);
    Rng r1(7), r2(8);  // different rngs must not matter with all noise off
    NetworkState a = state_of(0.3, -0.2, 0.5, 0.4), b = a;
    for (int i = 0; i < 50; ++i) {
        a = sgd_step_with_eta(a, 0.4, -0.2, 0.0, i % 2 ? 1 : -1, hyp, r1).first;
        b = sgd_step_with_eta(b, 0.4, -0.2, 0.0, i % 2 ? 1 : -1, hyp, r2).first;
    }
    REQUIRE(a.w_m == b.w_m);
    REQUIRE(a.w_c == b.w_c);
    REQUIRE(a.g_m == b.g_m);
    REQUIRE(a.g_c == b.g_c);
}

TEST_CASE("noise mask soundness", "[model]") {
    Hyperparameters hyp = quiet_hyp(Regulariser::L1);
    hyp.sigma_xi = 0.05;
    hyp.noise_mask = NoiseMask::colour_only();
    Rng rng(3);
    const auto s = state_of(0.5, 0.5, 0.5, 0.5);
    bool saw_colour_noise = false;
    for (int i = 0; i < 20; ++i) {
        auto [next, snap] = sgd_step_with_eta(s, 0.2, 0.2, 0.0, 1, hyp, rng);
        REQUIRE(snap.xi_w_m == 0.0);
        REQUIRE(snap.xi_g_m == 0.0);
        saw_colour_noise |= snap.xi_w_c != 0.0 && snap.xi_g_c != 0.0;
        // applied delta = deterministic part + noise part, exactly
        REQUIRE(snap.d_w_c == snap.det_w_c() + snap.xi_w_c);
    }
    REQUIRE(saw_colour_noise);
}

namespace {

// central finite differences of the loss wrt each parameter
double fd_gradient(const NetworkState& s, double x_m, double x_c, double eta, int y,
                   const Hyperparameters& hyp, int param) {
    const double h = 1e-6;
    auto perturbed = [&](double d) {
        NetworkState p = s;
        (param == 0 ? p.w_m : param == 1 ? p.w_c : param == 2 ? p.g_m : p.g_c) += d;
        return loss(p, x_m, x_c, eta, y, hyp);
    };
    return (perturbed(h) - perturbed(-h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("deterministic deltas match finite differences", "[model][oracle]") {
    // Gates sampled away from zero so the clipped L1 step takes its smooth
    // branch, where it coincides with -alpha * dL/dtheta.
    Rng rng(2024);
    for (Regulariser reg : {Regulariser::L1, Regulariser::L2, Regulariser::None,
                            Regulariser::NoGate}) {
        int checked = 0;
        while (checked < 100) {
            Hyperparameters hyp = quiet_hyp(reg);
            hyp.alpha = 0.1 + 0.9 * rng.uniform();
            hyp.lambda = reg == Regulariser::None || reg == Regulariser::NoGate
                             ? 0.0
                             : 0.01 + 0.15 * rng.uniform();
            NetworkState s;
            s.w_m = (0.3 + 1.7 * rng.uniform()) * rng.sign();
            s.w_c = (0.3 + 1.7 * rng.uniform()) * rng.sign();
            if (reg == Regulariser::NoGate) {
                s.g_m = s.g_c = 1.0;
            } else {
                s.g_m = (0.3 + 1.7 * rng.uniform()) * rng.sign();
                s.g_c = (0.3 + 1.7 * rng.uniform()) * rng.sign();
            }
            const double x_m = (0.3 + 0.7 * rng.uniform()) * rng.sign();
            const double x_c = (0.3 + 0.7 * rng.uniform()) * rng.sign();
            const double eta = 0.2 * rng.normal();
            const int y = rng.sign();

            Rng step_rng(1);
            auto [next, snap] = sgd_step_with_eta(s, x_m, x_c, eta, y, hyp, step_rng);
            if (reg == Regulariser::L1 &&
                (next.g_m == 0.0 || next.g_c == 0.0 ||
                 (next.g_m > 0) != (s.g_m > 0) || (next.g_c > 0) != (s.g_c > 0)))
                continue;  // crossed the pin; not the smooth branch

            const double deltas[4] = {snap.d_w_m, snap.d_w_c, snap.d_g_m, snap.d_g_c};
            const int n_params = reg == Regulariser::NoGate ? 2 : 4;
            for (int p = 0; p < n_params; ++p) {
                const double fd = -hyp.alpha * fd_gradient(s, x_m, x_c, eta, y, hyp, p);
                REQUIRE(deltas[p] == Approx(fd).epsilon(1e-6).margin(1e-9));
            }
            if (reg == Regulariser::NoGate) {
                REQUIRE(snap.d_g_m == 0.0);
                REQUIRE(snap.d_g_c == 0.0);
            }
            ++checked;
        }
    }
}

TEST_CASE("L1 penalty pull exceeds L2 for small gates", "[model][property]") {
    Rng rng(55);
    for (int i = 0; i < 100; ++i) {
        const double g = (0.09 + 0.9 * rng.uniform()) * rng.sign();  // |g| in (alpha*lambda, 1)
        NetworkState s = state_of(0.5, 0.5, g, g);
        Hyperparameters none = quiet_hyp(Regulariser::None);
        Hyperparameters l1 = quiet_hyp(Regulariser::L1, 0.07);
        Hyperparameters l2 = quiet_hyp(Regulariser::L2, 0.07);
        Rng r(1);
        const double base = sgd_step_with_eta(s, 0.05, 0.05, 0.0, 1, none, r).second.d_g_m;
        const double d1 = sgd_step_with_eta(s, 0.05, 0.05, 0.0, 1, l1, r).second.d_g_m;
        const double d2 = sgd_step_with_eta(s, 0.05, 0.05, 0.0, 1, l2, r).second.d_g_m;
        const double pull1 = std::fabs(d1 - base);
        const double pull2 = std::fabs(d2 - base);
        REQUIRE(pull1 == Approx(0.6 * 0.07).margin(1e-12));
        REQUIRE(pull2 == Approx(0.6 * 0.07 * std::fabs(g)).margin(1e-12));
        REQUIRE(pull1 > pull2);
    }
}

TEST_CASE("divergence guard flags parameter overflow", "[model]") {
    Rng rng(1);
    NetworkState s = state_of(9.9e5, 0, 1.0, 0);
    Hyperparameters hyp = quiet_hyp(Regulariser::None);
    hyp.alpha = 1.0;
    REQUIRE_THROWS_AS(sgd_step_with_eta(s, -200.0, 0.0, 0.0, 1, hyp, rng),
                      divergence_error);
}

TEST_CASE("analytic accuracy base cases", "[model]") {
    // all gates zero: only output noise, accuracy is chance
    REQUIRE(analytic_accuracy(state_of(1, 1, 0, 0), 0.5, 0.1, 0.5, 0.1, 0.2) == Approx(0.5));
    // overwhelming signal saturates the erf
    REQUIRE(analytic_accuracy(state_of(100, 0, 100, 0), 10.0, 0.001, 0, 0.001, 0.001) ==
            Approx(1.0).margin(1e-12));
    // degenerate: no noise and no gated signal
    REQUIRE_THROWS_AS(analytic_accuracy(state_of(1, 1, 0, 0), 0.1, 0.1, 0.1, 0.1, 0.0),
                      data_error);
}

TEST_CASE("analytic accuracy matches Monte-Carlo decisions", "[model][oracle]") {
    const auto s = state_of(1.0, 0.0, 1.0, 0.0);
    const double m_m = 0.1, sigma_m = 0.1, sigma_eta = 0.1;
    const double predicted = analytic_accuracy(s, m_m, sigma_m, 0.0, 0.0, sigma_eta);
    Rng rng(99);
    int correct = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const int y = rng.sign();
        const double x_m = rng.normal(y * m_m, sigma_m);
        const double eta = rng.normal(0.0, sigma_eta);
        if (forward(s, x_m, 0.0, eta).decision == y) ++correct;
    }
    REQUIRE(static_cast<double>(correct) / n == Approx(predicted).margin(0.01));
}

TEST_CASE("analytic accuracy is monotone in the motion mean", "[model][property]") {
    const auto s = state_of(0.8, 0.3, 0.6, 0.2);
    double prev = 0.0;
    for (double m = 0.0; m <= 1.0; m += 0.05) {
        const double a = analytic_accuracy(s, m, 0.05, 0.1, 0.01, 0.1);
        REQUIRE(a >= prev - 1e-12);
        prev = a;
    }
}

TEST_CASE("no-gate variant initialises gates at one", "[model]") {
    const auto s = initial_state(1, Regulariser::NoGate);
    REQUIRE(s.g_m == 1.0);
    REQUIRE(s.g_c == 1.0);
    REQUIRE(s.w_m == 0.01);
    const auto l1 = initial_state(1, Regulariser::L1);
    REQUIRE(l1.g_m == 0.01);
}

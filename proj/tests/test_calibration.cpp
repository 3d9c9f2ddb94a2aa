#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "insight/calibration.hpp"
#include "insight/optim.hpp"

using namespace insight;
using Catch::Approx;

TEST_CASE("nelder-mead minimises bounded quadratics", "[optim]") {
    auto f = [](const std::vector<double>& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - 0.3 * static_cast<double>(i + 1);
            s += d * d;
        }
        return s;
    };
    const auto r = nelder_mead(f, {1.0, 1.0, 1.0}, {0.2, 0.2, 0.2},
                               {0.0, 0.0, 0.0}, {2.0, 2.0, 2.0}, {400, 1e-14, 1e-10});
    REQUIRE(r.f < 1e-8);
    REQUIRE(r.x[0] == Approx(0.3).margin(1e-3));
    REQUIRE(r.x[2] == Approx(0.9).margin(1e-3));
}

TEST_CASE("nelder-mead respects bounds", "[optim]") {
    auto f = [](const std::vector<double>& x) { return -x[0]; };  // wants x large
    const auto r = nelder_mead(f, {0.2}, {0.1}, {0.0}, {1.0}, {200, 1e-14, 1e-12});
    REQUIRE(r.x[0] <= 1.0 + 1e-12);
    REQUIRE(r.x[0] == Approx(1.0).margin(1e-6));
}

namespace {

// analytic stand-in: accuracy rises with M through a probit link, plus a
// deterministic replicate wobble to exercise the averaging
AccuracyEvaluator synthetic_evaluator() {
    return [](const MotionMeans& m, int rep) {
        std::array<double, kNumCoherenceLevels> acc{};
        for (std::size_t i = 0; i < acc.size(); ++i) {
            const double z = m[i] / 0.1;
            acc[i] = 0.5 * (1.0 + std::erf(z / std::sqrt(2.0)));
            acc[i] += 0.001 * ((rep % 2 == 0) ? 1 : -1);
            acc[i] = std::clamp(acc[i], 0.0, 1.0);
        }
        return acc;
    };
}

}  // namespace

TEST_CASE("calibration converges on the synthetic objective", "[calibration][oracle]") {
    AccuracyTarget targets;
    targets.tolerance = 0.01;
    CalibrationOptions opts;
    opts.budget = 200;
    opts.replicates = 2;
    const auto r = calibrate_with(synthetic_evaluator(), targets, opts);
    REQUIRE(r.converged);
    for (std::size_t i = 0; i < 5; ++i)
        REQUIRE(r.achieved[i] == Approx(targets.accuracy[i]).margin(0.01));
    // the probit link is invertible: fitted means must be strictly increasing
    for (std::size_t i = 1; i < 5; ++i) REQUIRE(r.fitted[i] > r.fitted[i - 1]);
    REQUIRE(r.evaluations <= opts.budget + 1);
}

TEST_CASE("chance target needs no signal", "[calibration]") {
    // a 0.5 target at the lowest level is met by a vanishing mean shift
    AccuracyTarget targets;
    targets.accuracy = {0.5, 0.63, 0.85, 0.88, 0.91};
    targets.tolerance = 0.02;
    CalibrationOptions opts;
    opts.replicates = 20;
    opts.budget = 260;
    const auto r = calibrate(targets, Hyperparameters{}, 42);
    REQUIRE(std::fabs(r.achieved[0] - 0.5) <= 0.02);
    REQUIRE(r.fitted[0] <= 0.02);
}

TEST_CASE("default targets quote the anchored accuracies", "[calibration]") {
    const auto t = default_targets();
    REQUIRE(t.accuracy[0] == Approx(0.60));
    REQUIRE(t.accuracy[1] == Approx(0.63));
    REQUIRE(t.accuracy[2] == Approx(0.85));  // interpolated stand-in
    REQUIRE(t.accuracy[4] == Approx(0.91));
    REQUIRE_NOTHROW(t.validate());
    AccuracyTarget bad = t;
    bad.accuracy[0] = 0.4;
    REQUIRE_THROWS_AS(bad.validate(), config_error);
    bad = t;
    bad.accuracy[3] = 0.7;  // breaks monotonicity
    REQUIRE_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("simulated calibration hits monotone targets", "[calibration][slow]") {
    const auto r = calibrate(default_targets(), Hyperparameters{}, 7);
    // fitted motion means are finite, non-negative, and strictly increasing
    for (double m : r.fitted) {
        REQUIRE(std::isfinite(m));
        REQUIRE(m >= 0.0);
    }
    for (std::size_t i = 1; i < 5; ++i) REQUIRE(r.fitted[i] > r.fitted[i - 1]);

    // identical call reproduces the result exactly
    const auto r2 = calibrate(default_targets(), Hyperparameters{}, 7);
    for (std::size_t i = 0; i < 5; ++i) REQUIRE(r.fitted[i] == r2.fitted[i]);
    REQUIRE(r.objective == r2.objective);

    // re-evaluating the achieved accuracies with 10x replicates stays close
    const auto skel = build_curriculum_seeded(default_curriculum(), 7, true);
    std::array<double, kNumCoherenceLevels> acc10{};
    const int reps = 50;
    for (int rep = 0; rep < reps; ++rep) {
        Hyperparameters h;
        h.m_m = r.fitted;
        const auto a = motion_phase_accuracy(skel, h, derive_seed(7, 12, 1000 + rep));
        for (std::size_t i = 0; i < 5; ++i) acc10[i] += a[i] / reps;
    }
    for (std::size_t i = 0; i < 5; ++i)
        REQUIRE(acc10[i] == Approx(r.achieved[i]).margin(0.03));
}

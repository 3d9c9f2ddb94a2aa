#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "insight/curvefit.hpp"
#include "insight/rng.hpp"

using namespace insight;
using Catch::Approx;

namespace {

AccuracySeries series_of(std::vector<double> bins, double y_min, int t_origin = 4) {
    AccuracySeries s;
    s.bins = std::move(bins);
    s.y_min = y_min;
    s.t_origin = t_origin;
    return s;
}

AccuracySeries synthetic_sigmoid(double m, double ts, double ymax, double ymin, int n) {
    std::vector<double> b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] = sigmoid_value(i, m, ts, ymax, ymin);
    return series_of(std::move(b), ymin);
}

}  // namespace

TEST_CASE("bic formula and properties", "[curvefit]") {
    // 16 ln(0.0001) + 3 ln 16 = -139.047...
    REQUIRE(bic(16, 3, 0.0016) == Approx(16.0 * std::log(0.0001) + 3.0 * std::log(16.0)));
    REQUIRE(bic(16, 3, 0.0016) == Approx(-139.0466).margin(0.001));
    // larger k at equal sse is strictly penalised
    REQUIRE(bic(16, 3, 0.01) > bic(16, 2, 0.01));
    // sse floor keeps the result finite
    REQUIRE(std::isfinite(bic(16, 3, 0.0)));
    REQUIRE_THROWS_AS(bic(3, 3, 0.1), data_error);
    REQUIRE_THROWS_AS(bic(10, 2, -1.0), data_error);
}

TEST_CASE("bic ranking is invariant under common sse scaling", "[curvefit][property]") {
    Rng rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 10 + static_cast<int>(rng.bounded(20));
        const double sse_a = 0.001 + rng.uniform();
        const double sse_b = 0.001 + rng.uniform();
        const double scale = 0.01 + 10.0 * rng.uniform();
        const int ka = 2, kb = 3;
        const bool base = bic(n, ka, sse_a) < bic(n, kb, sse_b);
        const bool scaled = bic(n, ka, sse_a * scale) < bic(n, kb, sse_b * scale);
        REQUIRE(base == scaled);
    }
}

TEST_CASE("linear fit recovers collinear points exactly", "[curvefit]") {
    const auto fit = fit_linear(series_of({0.5, 0.6, 0.7, 0.8}, 0.5));
    REQUIRE(fit.m == Approx(0.1).margin(1e-12));
    REQUIRE(fit.y0 == Approx(0.5).margin(1e-12));
    REQUIRE(fit.sse == Approx(0.0).margin(1e-20));
    REQUIRE(fit.k == 2);
}

TEST_CASE("step fit recovers a perfect step", "[curvefit]") {
    const auto fit = fit_step(series_of({0.5, 0.5, 0.9, 0.9}, 0.5));
    REQUIRE(fit.t_s == Approx(2.0));
    REQUIRE(fit.s == Approx(0.4));
    REQUIRE(fit.y_max == Approx(0.9));
    REQUIRE(fit.sse == Approx(0.0).margin(1e-20));
    REQUIRE(fit.k == 3);

    const auto flat = fit_step(series_of({0.6, 0.6, 0.6, 0.6, 0.6}, 0.6));
    REQUIRE(flat.s == Approx(0.0).margin(1e-12));
}

TEST_CASE("sigmoid fit on flat data degenerates to m = 0", "[curvefit]") {
    std::vector<double> flat(14, 0.57);
    const auto fit = fit_sigmoid(series_of(std::move(flat), 0.57));
    REQUIRE(fit.degenerate);
    REQUIRE(fit.m == 0.0);
    REQUIRE(fit.sse == Approx(0.0).margin(1e-12));
}

TEST_CASE("sigmoid recovery, noiseless", "[curvefit][oracle]") {
    const auto truth = synthetic_sigmoid(2.0, 4.0, 0.9, 0.55, 16);
    SigmoidFitOptions opts;
    opts.evals_per_start = 220;
    const auto fit = fit_sigmoid(truth, opts);
    REQUIRE(fit.m == Approx(2.0).margin(1e-3));
    REQUIRE(fit.t_s == Approx(4.0).margin(1e-3));
    REQUIRE(fit.y_max == Approx(0.9).margin(1e-3));
}

TEST_CASE("sigmoid recovery with bin noise", "[curvefit][oracle]") {
    Rng rng(404);
    std::vector<double> ts_err;
    for (int rep = 0; rep < 100; ++rep) {
        auto s = synthetic_sigmoid(2.0, 6.0, 0.9, 0.55, 16);
        for (auto& b : s.bins) b = std::clamp(b + rng.normal(0.0, 0.03), 0.0, 1.0);
        const auto fit = fit_sigmoid(s);
        ts_err.push_back(std::fabs(fit.t_s - 6.0));
    }
    std::sort(ts_err.begin(), ts_err.end());
    REQUIRE(ts_err[50] <= 0.5);  // median within half a bin
}

TEST_CASE("slope at inflection", "[curvefit]") {
    CurveFit fit;
    fit.family = CurveFamily::Sigmoid;
    fit.m = 1.0;
    fit.y_max = 1.0;
    fit.y_min = 0.5;
    fit.t_s = 3.0;
    REQUIRE(slope_at_inflection(fit) == Approx(0.125));
    fit.m = 0.0;
    REQUIRE(slope_at_inflection(fit) == 0.0);

    // matches the numerical derivative of the fitted curve at t_s
    fit.m = 1.7;
    fit.y_max = 0.88;
    const double h = 1e-6;
    const double num = (sigmoid_value(fit.t_s + h, fit.m, fit.t_s, fit.y_max, fit.y_min) -
                        sigmoid_value(fit.t_s - h, fit.m, fit.t_s, fit.y_max, fit.y_min)) /
                       (2.0 * h);
    REQUIRE(slope_at_inflection(fit) == Approx(num).margin(1e-9));

    CurveFit lin;
    lin.family = CurveFamily::Linear;
    REQUIRE_THROWS_AS(slope_at_inflection(lin), data_error);
}

TEST_CASE("corrected steepness subtracts the fit RMSE", "[curvefit]") {
    auto s = synthetic_sigmoid(2.0, 4.0, 0.9, 0.55, 16);
    auto fit = fit_sigmoid(s);
    // perfect fit: correction is (numerically) zero
    REQUIRE(corrected_steepness(fit, s) ==
            Approx(slope_at_inflection(fit)).margin(1e-5));

    // hand arithmetic: raw 0.125, rmse 0.03 -> 0.095
    CurveFit hand;
    hand.family = CurveFamily::Sigmoid;
    hand.m = 1.0;
    hand.y_max = 1.0;
    hand.y_min = 0.5;
    hand.n = 16;
    hand.sse = 0.03 * 0.03 * 16;
    AccuracySeries dummy;
    dummy.bins.assign(16, 0.5);
    dummy.y_min = 0.5;
    REQUIRE(corrected_steepness(hand, dummy) == Approx(0.125 - 0.03).margin(1e-12));

    // a flat-fit degenerate sigmoid on noisy data goes negative
    Rng rng(9);
    std::vector<double> noisy(14);
    for (auto& b : noisy) b = 0.57 + rng.normal(0.0, 0.05);
    AccuracySeries ns = s;
    ns.bins = noisy;
    ns.y_min = 0.57;
    auto nfit = fit_sigmoid(ns);
    if (nfit.degenerate) REQUIRE(corrected_steepness(nfit, ns) < 0.0);
}

TEST_CASE("sigmoid fit respects its bounds", "[curvefit][property]") {
    Rng rng(77);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> bins(14);
        for (auto& b : bins) b = std::clamp(0.6 + rng.normal(0.0, 0.13), 0.0, 1.0);
        AccuracySeries s = series_of(std::move(bins), 0.6);
        SigmoidFitOptions opts;
        const auto fit = fit_sigmoid(s, opts);
        REQUIRE(fit.m >= 0.0);
        REQUIRE(fit.m <= opts.m_max + 1e-12);
        REQUIRE(fit.t_s >= 0.0);
        REQUIRE(fit.t_s <= 14.0 - opts.ts_margin + 1e-12);
        REQUIRE(fit.y_max >= s.y_min - 1e-12);
        REQUIRE(fit.y_max <= 1.0 + 1e-12);
    }
}

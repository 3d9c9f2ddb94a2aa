#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "insight/rng.hpp"
#include "insight/stats.hpp"

using namespace insight;
using Catch::Approx;

TEST_CASE("ks statistic geometry", "[stats]") {
    // points at the uniform quantiles 0.125, 0.375, 0.625, 0.875 of the window
    const auto r = ks_uniform_delays({1.25, 3.75, 6.25, 8.75}, 10.0);
    REQUIRE(r.d == Approx(0.125).margin(1e-12));
    REQUIRE(r.n == 4);

    // a point mass: D approaches max(F, 1-F) at the atom, p collapses
    std::vector<double> same(12, 3.0);
    const auto pm = ks_uniform_delays(same, 10.0);
    REQUIRE(pm.d == Approx(0.7).margin(1e-12));  // 1 - 3/10
    REQUIRE(pm.p < 1e-6);
}

TEST_CASE("exact ks p-values match an independent implementation", "[stats][oracle]") {
    // reference values computed with scipy.stats.kstwo.sf
    REQUIRE(1.0 - ks_cdf_exact(46, 0.13) == Approx(0.3853055543893189).margin(1e-9));
    REQUIRE(1.0 - ks_cdf_exact(10, 0.4) == Approx(0.05898924519999926).margin(1e-9));
    REQUIRE(1.0 - ks_cdf_exact(46, 0.2) == Approx(0.04342218742251702).margin(1e-9));
    REQUIRE(1.0 - ks_cdf_exact(20, 0.15) == Approx(0.7044671549442872).margin(1e-9));
    REQUIRE(1.0 - ks_cdf_exact(46, 0.0999) == Approx(0.7106498240322732).margin(1e-9));
    // degenerate edges
    REQUIRE(ks_cdf_exact(4, 0.125) == Approx(0.0));  // D <= 1/(2n) is impossible
    REQUIRE(ks_cdf_exact(5, 1.0) == 1.0);
}

TEST_CASE("ks input validation", "[stats]") {
    REQUIRE_THROWS_AS(ks_uniform_delays({}, 10.0), data_error);
    REQUIRE_THROWS_AS(ks_uniform_delays({11.0}, 10.0), data_error);
    REQUIRE_THROWS_AS(ks_uniform_delays({-0.1}, 10.0), data_error);
}

TEST_CASE("ks p-values are uniform under the null", "[stats][property]") {
    // 500 synthetic uniform samples of n = 46; their p-values must
    // themselves pass a KS test against uniform at the 1% level
    Rng rng(2718);
    std::vector<double> pvals;
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<double> d(46);
        for (auto& v : d) v = 10.0 * rng.uniform();
        pvals.push_back(ks_uniform_delays(d, 10.0).p);
    }
    std::sort(pvals.begin(), pvals.end());
    double dmax = 0.0;
    const int n = static_cast<int>(pvals.size());
    for (int i = 0; i < n; ++i) {
        dmax = std::max(dmax, (i + 1.0) / n - pvals[static_cast<std::size_t>(i)]);
        dmax = std::max(dmax, pvals[static_cast<std::size_t>(i)] - static_cast<double>(i) / n);
    }
    REQUIRE(dmax < 1.63 / std::sqrt(500.0));  // 1% critical value
}

TEST_CASE("change point finds a constructed break", "[stats]") {
    Rng rng(5);
    std::vector<double> series;
    for (int i = 0; i < 4; ++i) series.push_back(0.0 + 0.01 * rng.normal());
    for (int i = 0; i < 4; ++i) series.push_back(5.0 + 0.01 * rng.normal());
    const auto r = change_point(series);
    REQUIRE(r.index.has_value());
    REQUIRE(*r.index == 4);
}

TEST_CASE("change point stays silent on stationary noise", "[stats][oracle]") {
    // i.i.d. constant-mean series: the permutation-calibrated gain
    // threshold should reject in the vast majority of draws
    Rng rng(99);
    int detections = 0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> series(60);
        for (auto& v : series) v = rng.normal();
        if (change_point(series, 199, derive_seed(1, 2, static_cast<std::uint64_t>(rep))).index)
            ++detections;
    }
    REQUIRE(detections <= reps / 4);  // nominal 5% level, generous bound

    REQUIRE_THROWS_AS(change_point({1.0, 2.0, 3.0}), data_error);
}

TEST_CASE("change point reacts to variance-only shifts", "[stats]") {
    Rng rng(123);
    std::vector<double> series;
    for (int i = 0; i < 30; ++i) series.push_back(0.05 * rng.normal());
    for (int i = 0; i < 30; ++i) series.push_back(2.0 * rng.normal());
    const auto r = change_point(series);
    REQUIRE(r.index.has_value());
    REQUIRE(std::abs(*r.index - 30) <= 2);
}

TEST_CASE("spearman rank correlation", "[stats]") {
    REQUIRE(spearman({1, 2, 3, 4}, {10, 20, 25, 80}) == Approx(1.0));
    REQUIRE(spearman({1, 2, 3, 4}, {8, 6, 4, 2}) == Approx(-1.0));
    // ties get average ranks
    const double r = spearman({1, 2, 2, 3}, {1, 2, 2, 3});
    REQUIRE(r == Approx(1.0));
    REQUIRE_THROWS_AS(spearman({1.0}, {1.0}), data_error);
}

TEST_CASE("dip statistic separates bimodal from unimodal", "[stats]") {
    Rng rng(7);
    std::vector<double> unimodal, bimodal;
    for (int i = 0; i < 99; ++i) {
        unimodal.push_back(rng.normal());
        bimodal.push_back(rng.normal() * 0.25 + (i % 2 ? 4.0 : -4.0));
    }
    const double du = dip_statistic(unimodal);
    const double db = dip_statistic(bimodal);
    REQUIRE(db > 2.0 * du);
    REQUIRE(du >= 0.0);
}

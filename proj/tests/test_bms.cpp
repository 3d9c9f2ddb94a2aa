#include <catch2/catch_amalgamated.hpp>

#include "insight/bms.hpp"
#include "insight/rng.hpp"

using namespace insight;
using Catch::Approx;

TEST_CASE("a dominant family wins the protected exceedance", "[bms][oracle]") {
    // family 0 better than the others by >= 10 BIC for every agent
    Rng rng(8);
    std::vector<std::vector<double>> bics;
    for (int i = 0; i < 30; ++i) {
        const double base = -40.0 + 5.0 * rng.normal();
        bics.push_back({base - 12.0 - 3.0 * rng.uniform(), base, base + 1.0});
    }
    const auto r = group_model_comparison(bics);
    REQUIRE(r.protected_exceedance[0] > 0.95);
    REQUIRE(r.mean_bic[0] < r.mean_bic[1]);
    REQUIRE_FALSE(r.degenerate);
}

TEST_CASE("identical evidence columns split evenly", "[bms]") {
    std::vector<std::vector<double>> two;
    Rng rng(3);
    for (int i = 0; i < 24; ++i) {
        const double b = -30.0 + rng.normal();
        two.push_back({b, b});
    }
    const auto r2 = group_model_comparison(two);
    REQUIRE(r2.degenerate);  // per-agent evidences are identical across families
    REQUIRE(r2.exceedance[0] == Approx(0.5));
    REQUIRE(r2.exceedance[1] == Approx(0.5));

    std::vector<std::vector<double>> three;
    for (int i = 0; i < 24; ++i) {
        const double b = -30.0 + rng.normal();
        three.push_back({b, b, b});
    }
    const auto r3 = group_model_comparison(three);
    REQUIRE(r3.protected_exceedance[0] == Approx(1.0 / 3).margin(1e-9));
    REQUIRE(r3.protected_exceedance[2] == Approx(1.0 / 3).margin(1e-9));
}

TEST_CASE("near-equal noisy evidences shrink toward uniform", "[bms]") {
    // distinct values but no real family differences: the omnibus risk
    // should push the protected exceedance toward 1/K
    Rng rng(14);
    std::vector<std::vector<double>> bics;
    for (int i = 0; i < 40; ++i) {
        const double b = -25.0 + rng.normal();
        bics.push_back({b + 0.05 * rng.normal(), b + 0.05 * rng.normal(),
                        b + 0.05 * rng.normal()});
    }
    const auto r = group_model_comparison(bics);
    REQUIRE(r.bor > 0.5);
    for (double p : r.protected_exceedance) {
        REQUIRE(p > 0.15);
        REQUIRE(p < 0.55);
    }
}

TEST_CASE("bms input validation", "[bms]") {
    REQUIRE_THROWS_AS(group_model_comparison({{1.0, 2.0}}), data_error);
    REQUIRE_THROWS_AS(group_model_comparison({{1.0}, {2.0}}), data_error);
    REQUIRE_THROWS_AS(group_model_comparison({{1.0, 2.0}, {1.0}}), data_error);
}

TEST_CASE("bms is deterministic", "[bms]") {
    Rng rng(21);
    std::vector<std::vector<double>> bics;
    for (int i = 0; i < 12; ++i)
        bics.push_back({-20.0 + rng.normal(), -21.0 + rng.normal(), -19.0 + rng.normal()});
    const auto a = group_model_comparison(bics);
    const auto b = group_model_comparison(bics);
    for (std::size_t k = 0; k < 3; ++k) {
        REQUIRE(a.exceedance[k] == b.exceedance[k]);
        REQUIRE(a.protected_exceedance[k] == b.protected_exceedance[k]);
    }
}

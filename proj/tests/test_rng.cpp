#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "insight/rng.hpp"

using namespace insight;

TEST_CASE("rng determinism and stream independence", "[rng]") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    bool any_diff = false;
    Rng a2(42);
    for (int i = 0; i < 100; ++i) any_diff |= a2.next_u64() != c.next_u64();
    REQUIRE(any_diff);

    std::set<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 4; ++s)
        for (std::uint64_t i = 0; i < 64; ++i) seeds.insert(derive_seed(7, s, i));
    REQUIRE(seeds.size() == 4 * 64);
}

TEST_CASE("normal draws have the right moments", "[rng]") {
    Rng rng(123);
    const int n = 1000000;
    double sum = 0, sum2 = 0, sum3 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum2 += z * z;
        sum3 += z * z * z;
    }
    REQUIRE(std::fabs(sum / n) < 0.005);
    REQUIRE(std::fabs(sum2 / n - 1.0) < 0.01);
    REQUIRE(std::fabs(sum3 / n) < 0.02);
}

TEST_CASE("uniform and bounded draws stay in range", "[rng]") {
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    int counts[7] = {0};
    for (int i = 0; i < 70000; ++i) ++counts[rng.bounded(7)];
    for (int k = 0; k < 7; ++k) REQUIRE(std::fabs(counts[k] - 10000.0) < 500.0);
}

TEST_CASE("shuffle is a permutation and deterministic", "[rng]") {
    std::vector<int> v(100);
    for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = i;
    Rng r1(9), r2(9);
    auto a = v, b = v;
    shuffle(a, r1);
    shuffle(b, r2);
    REQUIRE(a == b);
    std::set<int> seen(a.begin(), a.end());
    REQUIRE(seen.size() == 100);
    REQUIRE(a != v);  // astronomically unlikely to be identity
}

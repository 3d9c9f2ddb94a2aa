#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "insight/classify.hpp"
#include "insight/rng.hpp"

using namespace insight;
using Catch::Approx;

TEST_CASE("classification uses a strict threshold", "[classify]") {
    const std::vector<double> control{0.01, 0.05, 0.08, 0.02};
    auto classes = classify_cohort(std::vector<double>{0.12, 0.08, 0.079}, control);
    REQUIRE(classes[0].is_insight);        // 0.12 > 0.08
    REQUIRE_FALSE(classes[1].is_insight);  // exactly the control max
    REQUIRE_FALSE(classes[2].is_insight);
    REQUIRE(classes[0].threshold == Approx(0.08));

    REQUIRE_THROWS_AS(classify_cohort(std::vector<double>{0.1}, {}), data_error);
}

TEST_CASE("classification is invariant under monotone transforms", "[classify][property]") {
    Rng rng(64);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> exp(40), ctl(25);
        for (auto& v : exp) v = rng.normal(0.05, 0.1);
        for (auto& v : ctl) v = rng.normal(0.0, 0.05);
        const auto base = classify_cohort(exp, ctl);

        auto transform = [&](double v) { return std::atan(3.0 * v) + v * v * v * 0.1 + 2.0; };
        // atan + cubic-with-small-coefficient is strictly increasing here
        std::vector<double> exp_t, ctl_t;
        for (double v : exp) exp_t.push_back(transform(v));
        for (double v : ctl) ctl_t.push_back(transform(v));
        const auto mapped = classify_cohort(exp_t, ctl_t);
        for (std::size_t i = 0; i < base.size(); ++i)
            REQUIRE(base[i].is_insight == mapped[i].is_insight);
    }
}

namespace {

AccuracySeries step_series(int ts, int n = 14, double lo = 0.6, double hi = 0.9) {
    AccuracySeries s;
    s.y_min = lo;
    s.t_origin = 4;
    for (int i = 0; i < n; ++i) s.bins.push_back(i < ts ? lo : hi);
    return s;
}

InsightClassification insight_at(int agent, int sb) {
    InsightClassification c;
    c.agent_id = agent;
    c.is_insight = true;
    c.switch_bin = sb;
    c.delay_bins = sb - 4;
    return c;
}

}  // namespace

TEST_CASE("switch alignment puts every jump at column zero", "[classify]") {
    std::vector<AccuracySeries> series{step_series(5), step_series(7), step_series(9)};
    std::vector<InsightClassification> classes{insight_at(0, 5), insight_at(1, 7),
                                               insight_at(2, 9)};
    const auto a = switch_align(series, classes);
    REQUIRE_FALSE(a.empty);
    REQUIRE(a.aligned.size() == 3);
    for (const auto& row : a.aligned) {
        const double at = row[static_cast<std::size_t>(a.zero_column)];
        const double before = row[static_cast<std::size_t>(a.zero_column - 1)];
        REQUIRE(at == Approx(0.9));
        REQUIRE(before == Approx(0.6));
    }
    REQUIRE(a.pre_mean == Approx(0.6));
    REQUIRE(a.post_mean == Approx(0.9));
}

TEST_CASE("switch alignment is translation-equivariant", "[classify][property]") {
    // shifting a series and its switch bin by k leaves the aligned row the same
    const int k = 3;
    std::vector<AccuracySeries> s1{step_series(5, 14)};
    std::vector<AccuracySeries> s2{step_series(5 + k, 14 + k)};
    const auto a1 = switch_align(s1, {insight_at(0, 5)});
    const auto a2 = switch_align(s2, {insight_at(0, 5 + k)});
    // compare the overlap around the switch column
    for (int off = -4; off <= 4; ++off) {
        const auto c1 = static_cast<std::size_t>(a1.zero_column + off);
        const auto c2 = static_cast<std::size_t>(a2.zero_column + off);
        if (c1 < a1.aligned[0].size() && c2 < a2.aligned[0].size()) {
            const double v1 = a1.aligned[0][c1];
            const double v2 = a2.aligned[0][c2];
            if (!std::isnan(v1) && !std::isnan(v2)) REQUIRE(v1 == Approx(v2));
        }
    }
    REQUIRE(a1.pre_mean == Approx(a2.pre_mean));
    REQUIRE(a1.post_mean == Approx(a2.post_mean));
}

TEST_CASE("switch alignment with no insight agents flags empty", "[classify]") {
    std::vector<AccuracySeries> series{step_series(5)};
    InsightClassification c;
    c.is_insight = false;
    const auto a = switch_align(series, {c});
    REQUIRE(a.empty);
    REQUIRE(a.aligned.empty());
}

TEST_CASE("edge switches contribute one-sidedly", "[classify]") {
    // switch at bin 0: no pre-switch bin exists
    auto s = step_series(0);
    const auto a = switch_align({s}, {insight_at(0, 0)});
    REQUIRE_FALSE(a.empty);
    REQUIRE(a.post_mean == Approx(0.9));
    REQUIRE(std::isnan(a.pre_mean));
}

#include <cmath>
#include <vector>

#include "doctest.h"

#include "mcsim/errors.hpp"
#include "mcsim/rng.hpp"
#include "mcsim/stats.hpp"

using namespace mcsim;

namespace {

std::vector<std::vector<double>> random_groups(Rng& rng) {
    const std::size_t k = 2 + rng.uniform_index(4);
    std::vector<std::vector<double>> groups(k);
    for (auto& g : groups) {
        const std::size_t n = 2 + rng.uniform_index(8);
        for (std::size_t i = 0; i < n; ++i) g.push_back(rng.uniform(-5.0, 5.0));
    }
    return groups;
}

} // namespace

TEST_CASE("anova reproduces hand-computed textbook cases") {
    // Case 1: three overlapping arithmetic runs. Group means 2,3,4, grand 3;
    // SSB = 3*(1+0+1) = 6, SSW = 3*2 = 6, F = (6/2)/(6/6) = 3. For df_between
    // = 2 the survival function is (1 + 2F/df_within)^(-df_within/2) = 1/8.
    {
        const AnovaResult r = one_way_anova({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}});
        CHECK(std::abs(r.f_statistic - 3.0) < 1e-9);
        CHECK(r.df_between == 2);
        CHECK(r.df_within == 6);
        CHECK(std::abs(r.p_value - 0.125) < 1e-10);
    }
    // Case 2: two groups of four. Means 13 and 16, grand 14.5; SSB =
    // 4*(1.5^2)*2 = 18, SSW = 20+20 = 40, F = 18/(40/6) = 2.7.
    {
        const AnovaResult r = one_way_anova({{10, 12, 14, 16}, {13, 15, 17, 19}});
        CHECK(std::abs(r.f_statistic - 2.7) < 1e-9);
        CHECK(r.df_between == 1);
        CHECK(r.df_within == 6);
        CHECK(std::abs(r.p_value - 0.15145400164755017) < 1e-10);
    }
    // Case 3: three groups of six. Means 5, 9, 10, grand 8; SSB = 6*(9+1+4)
    // = 84, SSW = 16+24+28 = 68, F = (84/2)/(68/15) = 630/68.
    {
        const AnovaResult r = one_way_anova(
            {{6, 8, 4, 5, 3, 4}, {8, 12, 9, 11, 6, 8}, {13, 9, 11, 8, 7, 12}});
        CHECK(std::abs(r.f_statistic - 630.0 / 68.0) < 1e-9);
        CHECK(r.df_between == 2);
        CHECK(r.df_within == 15);
        CHECK(std::abs(r.p_value - 0.0023987773293929083) < 1e-10);
    }
}

TEST_CASE("identical groups give F = 0 and p = 1") {
    const AnovaResult r = one_way_anova({{1, 2, 3, 4}, {1, 2, 3, 4}});
    CHECK(r.f_statistic == 0.0);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("five groups of twenty give the F(4,95) shape") {
    Rng rng(42);
    std::vector<std::vector<double>> groups(5);
    for (auto& g : groups)
        for (int i = 0; i < 20; ++i) g.push_back(rng.gaussian(0.0, 1.0));
    const AnovaResult r = one_way_anova(groups);
    CHECK(r.df_between == 4);
    CHECK(r.df_within == 95);
    CHECK(r.f_statistic >= 0.0);
    CHECK(r.p_value > 0.0);
    CHECK(r.p_value < 1.0);
}

TEST_CASE("anova is invariant under shift and positive scaling") {
    Rng rng(777);
    for (int rep = 0; rep < 20; ++rep) {
        const auto groups = random_groups(rng);
        const AnovaResult base = one_way_anova(groups);

        const double shift = rng.uniform(-100.0, 100.0);
        const double scale = rng.uniform(0.1, 50.0);
        auto shifted = groups;
        auto scaled = groups;
        for (auto& g : shifted)
            for (double& v : g) v += shift;
        for (auto& g : scaled)
            for (double& v : g) v *= scale;

        CHECK(std::abs(one_way_anova(shifted).f_statistic - base.f_statistic) < 1e-9);
        CHECK(std::abs(one_way_anova(scaled).f_statistic - base.f_statistic) < 1e-9);
    }
}

TEST_CASE("anova input validation") {
    CHECK_THROWS_AS(one_way_anova({}), OutOfRangeError);
    CHECK_THROWS_AS(one_way_anova({{1, 2, 3}}), OutOfRangeError);
    CHECK_THROWS_AS(one_way_anova({{1, 2}, {3}}), OutOfRangeError);
    // All groups constant, equal means: the F ratio is 0/0.
    CHECK_THROWS_AS(one_way_anova({{5, 5, 5}, {5, 5, 5}}), DegenerateInputError);
    // All groups constant, distinct means: infinite F, certain difference.
    const AnovaResult r = one_way_anova({{5, 5}, {6, 6}});
    CHECK(std::isinf(r.f_statistic));
    CHECK(r.p_value == 0.0);
}

TEST_CASE("regularized incomplete beta endpoints and symmetry") {
    CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    // I_x(a,b) = 1 - I_{1-x}(b,a)
    for (double x : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double lhs = regularized_incomplete_beta(2.5, 4.0, x);
        const double rhs = 1.0 - regularized_incomplete_beta(4.0, 2.5, 1.0 - x);
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }
    // I_x(1,1) = x (uniform distribution)
    for (double x : {0.2, 0.6, 0.95})
        CHECK(std::abs(regularized_incomplete_beta(1.0, 1.0, x) - x) < 1e-12);
    CHECK_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), OutOfRangeError);
}

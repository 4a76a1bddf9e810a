#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "persuasion/lp.hpp"
#include "persuasion/rng.hpp"

using namespace persuasion;

TEST_CASE("box corner maximum") {
    auto lp = LinearProgram::with_variables(2);
    lp.sense = Sense::Maximize;
    lp.cost = {1.0, 1.0};
    lp.add_row({1.0, 0.0}, Relation::LessEq, 1.0);
    lp.add_row({0.0, 1.0}, Relation::LessEq, 1.0);
    auto sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE_THAT(sol.objective, Catch::Matchers::WithinAbs(2.0, 1e-9));
    REQUIRE_THAT(sol.x[0], Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE_THAT(sol.x[1], Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE(sol.weak_duality_ok);
}

TEST_CASE("single lower bound") {
    auto lp = LinearProgram::with_variables(1);
    lp.cost = {1.0};
    lp.add_row({1.0}, Relation::GreaterEq, 3.0);
    auto sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE_THAT(sol.objective, Catch::Matchers::WithinAbs(3.0, 1e-9));
    REQUIRE_THAT(sol.x[0], Catch::Matchers::WithinAbs(3.0, 1e-9));
}

TEST_CASE("equality rows") {
    auto lp = LinearProgram::with_variables(2);
    lp.cost = {1.0, 2.0};
    lp.add_row({1.0, 1.0}, Relation::Eq, 1.0);
    auto sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE_THAT(sol.objective, Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE_THAT(sol.x[0], Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("infeasible and unbounded detection") {
    auto inf = LinearProgram::with_variables(1);
    inf.cost = {1.0};
    inf.add_row({1.0}, Relation::LessEq, 1.0);
    inf.add_row({1.0}, Relation::GreaterEq, 2.0);
    REQUIRE(solve(inf).status == LpStatus::Infeasible);

    auto unb = LinearProgram::with_variables(1);
    unb.sense = Sense::Maximize;
    unb.cost = {1.0};
    unb.add_row({-1.0}, Relation::LessEq, 0.0);
    REQUIRE(solve(unb).status == LpStatus::Unbounded);
}

TEST_CASE("negative lower bounds and finite upper bounds") {
    auto lp = LinearProgram::with_variables(2);
    lp.lower = {-2.0, -1.0};
    lp.upper = {0.5, 3.0};
    lp.cost = {1.0, 1.0};
    lp.add_row({1.0, -1.0}, Relation::LessEq, 1.0);
    auto sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE_THAT(sol.x[0], Catch::Matchers::WithinAbs(-2.0, 1e-9));
    REQUIRE_THAT(sol.x[1], Catch::Matchers::WithinAbs(-1.0, 1e-9));
}

TEST_CASE("degenerate vertices still terminate") {
    // many redundant constraints through the same corner
    auto lp = LinearProgram::with_variables(2);
    lp.sense = Sense::Maximize;
    lp.cost = {1.0, 1.0};
    for (int k = 1; k <= 8; ++k)
        lp.add_row({1.0, static_cast<double>(k)}, Relation::LessEq, static_cast<double>(k));
    lp.add_row({1.0, 0.0}, Relation::LessEq, 1.0);
    auto sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE(sol.weak_duality_ok);
}

TEST_CASE("row permutation invariance of the optimum") {
    CounterRng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        auto rs = rng.split(trial);
        const std::size_t n = 4, m = 6;
        auto lp = LinearProgram::with_variables(n);
        lp.sense = Sense::Maximize;
        for (auto& c : lp.cost) c = rs.uniform(0.1, 1.0);
        for (std::size_t i = 0; i < m; ++i) {
            Vec row(n);
            for (auto& v : row) v = rs.uniform(0.0, 1.0);
            lp.add_row(row, Relation::LessEq, rs.uniform(1.0, 2.0));
        }
        auto base = solve(lp);
        REQUIRE(base.status == LpStatus::Optimal);
        REQUIRE(base.weak_duality_ok);

        auto permuted = lp;
        std::reverse(permuted.rows.begin(), permuted.rows.end());
        auto again = solve(permuted);
        REQUIRE(again.status == LpStatus::Optimal);
        REQUIRE_THAT(again.objective, Catch::Matchers::WithinAbs(base.objective, 1e-8));
    }
}

TEST_CASE("determinism: identical input gives identical output") {
    auto lp = LinearProgram::with_variables(3);
    lp.sense = Sense::Maximize;
    lp.cost = {1.0, 2.0, 0.5};
    lp.add_row({1.0, 1.0, 1.0}, Relation::LessEq, 2.0);
    lp.add_row({1.0, -1.0, 0.0}, Relation::GreaterEq, -1.0);
    auto a = solve(lp);
    auto b = solve(lp);
    REQUIRE(a.x == b.x);
    REQUIRE(a.objective == b.objective);
}

TEST_CASE("validation errors") {
    LinearProgram empty;
    REQUIRE_THROWS_AS(solve(empty), ConfigError);

    auto lp = LinearProgram::with_variables(2);
    lp.cost = {1.0, 1.0};
    lp.add_row({1.0}, Relation::LessEq, 1.0);
    REQUIRE_THROWS_AS(solve(lp), DimensionMismatch);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "persuasion/obp/game.hpp"

using namespace persuasion;
using namespace persuasion::obp;

namespace {

// judge-prosecutor mean game: utilities are losses (negated matrices)
ObpGame mean_game() {
    ObpGame g;
    g.n_outcomes = 2;
    g.n_actions = 2;
    g.n_types = 2;
    g.prior = {0.2, 0.8};
    g.sender_utility = Matrix(2, 2);
    g.sender_utility(0, 0) = -0.7;
    g.sender_utility(0, 1) = -0.3;
    g.sender_utility(1, 0) = -0.7;
    g.sender_utility(1, 1) = -0.3;
    Matrix u1(2, 2), u2(2, 2);
    u1(0, 0) = -0.7; u1(0, 1) = -0.3; u1(1, 0) = -0.3; u1(1, 1) = -0.7;
    u2(0, 0) = -0.8; u2(0, 1) = -0.2; u2(1, 0) = -0.2; u2(1, 1) = -0.8;
    g.receiver_utility = {u1, u2};
    g.validate();
    return g;
}

// fully revealing scheme recommending each type its best action per outcome
DirectScheme fully_revealing(const ObpGame& g) {
    DirectScheme s;
    for (std::size_t w = 0; w < g.n_outcomes; ++w) {
        Vec rho(g.n_outcomes, 0.0);
        rho[w] = 1.0;
        std::size_t signal = 0, mult = 1;
        for (std::size_t k = 0; k < g.n_types; ++k) {
            signal += mult * best_response(g, k, rho).pick;
            mult *= g.n_actions;
        }
        Vec row(g.n_signals(), 0.0);
        row[signal] = 1.0;
        s.phi.push_back(std::move(row));
    }
    return s;
}

}  // namespace

TEST_CASE("posterior: revelation, no information, hand Bayes") {
    auto g = mean_game();

    auto rev = fully_revealing(g);
    bool saw_point_mass = false;
    for (std::size_t s = 0; s < g.n_signals(); ++s) {
        if (signal_marginal(g, rev, s) <= 1e-12) continue;
        auto rho = posterior(g, rev, s);
        // fully revealing: posterior is a point mass on some outcome
        for (double p : rho) REQUIRE((p < 1e-12 || std::fabs(p - 1.0) < 1e-12));
        saw_point_mass = true;
    }
    REQUIRE(saw_point_mass);

    DirectScheme uninformative;
    uninformative.phi = {Vec{1.0, 0.0, 0.0, 0.0}, Vec{1.0, 0.0, 0.0, 0.0}};
    auto rho = posterior(g, uninformative, 0);
    REQUIRE(norm_inf(rho - g.prior) < 1e-12);

    // phi_{w1}(s) = 1, phi_{w2}(s) = 0.25 -> rho = (0.2, 0.2)/0.4
    DirectScheme partial;
    partial.phi = {Vec{1.0, 0.0, 0.0, 0.0}, Vec{0.25, 0.75, 0.0, 0.0}};
    auto mixed = posterior(g, partial, 0);
    REQUIRE_THAT(mixed[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(mixed[1], Catch::Matchers::WithinAbs(0.5, 1e-12));

    DirectScheme zero;
    zero.phi = {Vec{1.0, 0.0, 0.0, 0.0}, Vec{1.0, 0.0, 0.0, 0.0}};
    REQUIRE_THROWS_AS(posterior(g, zero, 3), Error);
}

TEST_CASE("best response hand arithmetic") {
    auto g = mean_game();

    // type 1 at the prior: a1 value -0.38, a2 value -0.62
    auto br = best_response(g, 0, g.prior);
    REQUIRE(br.tied == std::vector<std::size_t>{0});
    REQUIRE(br.pick == 0);

    // point mass on outcome 1, type 2: row (-0.8, -0.2) -> a2
    auto br2 = best_response(g, 1, {1.0, 0.0});
    REQUIRE(br2.pick == 1);

    // all-zero receiver utility: every action tied, sender-best picked
    ObpGame flat = g;
    flat.receiver_utility[0] = Matrix(2, 2);
    auto tied = best_response(flat, 0, flat.prior);
    REQUIRE(tied.tied.size() == 2);
    REQUIRE(tied.pick == 1);  // sender value -0.3 beats -0.7
}

TEST_CASE("persuasiveness checks") {
    auto g = mean_game();
    REQUIRE(is_persuasive(g, fully_revealing(g)));

    // strict-preference game where the recommended action is always worst
    ObpGame strict = g;
    DirectScheme worst;
    {
        Vec rho0(2, 0.0);
        rho0[0] = 1.0;
        // recommend a1 to both types always; under the prior both prefer a2
        worst.phi = {Vec{1.0, 0.0, 0.0, 0.0}, Vec{1.0, 0.0, 0.0, 0.0}};
    }
    // type 1 at the prior strictly prefers a1 (-0.38 > -0.62), so use the
    // flipped recommendation to build the violating scheme: always (a2, a2).
    DirectScheme always_a2;
    always_a2.phi = {Vec{0.0, 0.0, 0.0, 1.0}, Vec{0.0, 0.0, 0.0, 1.0}};
    REQUIRE_FALSE(is_persuasive(strict, always_a2));

    // uninformative (a1, a1) on the mean game: type 1 obeys, fine
    REQUIRE(is_persuasive(g, worst));
}

TEST_CASE("scheme enumeration: counts, retention, normalization") {
    auto g = mean_game();

    // grid 1.0 -> 4 point-mass rows per outcome, 16 candidates
    auto deterministic = enumerate_schemes(g, 1.0);
    REQUIRE(!deterministic.schemes.empty());

    auto set = enumerate_schemes(g, 0.25);
    REQUIRE(!set.schemes.empty());
    // every retained scheme is persuasive by construction
    for (const auto& s : set.schemes) REQUIRE(is_persuasive(g, s));
    // normalized losses live in [0,1]^K
    for (const auto& z : set.losses.points)
        for (double v : z) {
            REQUIRE(v >= -1e-12);
            REQUIRE(v <= 1.0 + 1e-12);
        }
    // the fully revealing obedient scheme survives the filter
    REQUIRE(is_persuasive(g, fully_revealing(g)));
    // losses denormalize back to raw values
    for (std::size_t j = 0; j < set.losses.points.size(); ++j) {
        Vec raw = set.map.denormalize(set.losses.points[j]);
        for (std::size_t k = 0; k < g.n_types; ++k) {
            const double expect = -sender_utility_for_type(g, set.schemes[j], k);
            REQUIRE_THAT(raw[k], Catch::Matchers::WithinAbs(expect, 1e-12));
        }
    }
    REQUIRE_THROWS_AS(enumerate_schemes(g, 0.3), ConfigError);
}

TEST_CASE("loss recomputation is bit-for-bit repeatable") {
    auto g = mean_game();
    auto a = enumerate_schemes(g, 0.25);
    auto b = enumerate_schemes(g, 0.25);
    REQUIRE(a.losses.points.size() == b.losses.points.size());
    for (std::size_t j = 0; j < a.losses.points.size(); ++j)
        REQUIRE(a.losses.points[j] == b.losses.points[j]);
}

TEST_CASE("mixture expectation matches the mixed point") {
    auto g = mean_game();
    auto set = enumerate_schemes(g, 0.25);
    REQUIRE(set.losses.points.size() >= 2);
    const Vec& za = set.losses.points[0];
    const Vec& zb = set.losses.points[1];
    const double lam = 0.3;
    Vec mix = lam * za + ((1.0 - lam) * zb);

    CounterRng rng(17);
    const int n = 10000;
    Vec mean(2, 0.0);
    Vec sumsq(2, 0.0);
    for (int i = 0; i < n; ++i) {
        const Vec& draw = rng.next_double() < lam ? za : zb;
        for (int k = 0; k < 2; ++k) {
            mean[k] += draw[k];
            sumsq[k] += draw[k] * draw[k];
        }
    }
    for (int k = 0; k < 2; ++k) {
        mean[k] /= n;
        const double var = sumsq[k] / n - mean[k] * mean[k];
        const double se = std::sqrt(std::max(var, 1e-12) / n);
        REQUIRE(std::fabs(mean[k] - mix[k]) <= 3.0 * se + 1e-9);
    }
}

TEST_CASE("task sampling stays in the tau1 box") {
    ObpStreamConfig cfg;
    cfg.mean_game = mean_game();
    cfg.tau1 = 0.05;
    cfg.horizon = 5;
    CounterRng rng(2);
    for (int t = 0; t < 200; ++t) {
        auto rs = rng.split(t);
        auto task = sample_obp_task(cfg, rs);
        task.game.validate();
        for (double p : task.game.prior) REQUIRE(p > 0.0);
        for (std::size_t w = 0; w < 2; ++w)
            for (std::size_t a = 0; a < 2; ++a) {
                REQUIRE(std::fabs(task.game.sender_utility(w, a) -
                                  cfg.mean_game.sender_utility(w, a)) <= cfg.tau1 + 1e-12);
                for (std::size_t k = 0; k < 2; ++k)
                    REQUIRE(std::fabs(task.game.receiver_utility[k](w, a) -
                                      cfg.mean_game.receiver_utility[k](w, a)) <=
                            cfg.tau1 + 1e-12);
            }
        REQUIRE(task.types.size() == 5);
        for (auto k : task.types) REQUIRE(k < 2);
    }
}

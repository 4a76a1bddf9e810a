#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "persuasion/common.hpp"
#include "persuasion/dense.hpp"
#include "persuasion/lp.hpp"
#include "persuasion/mpp/estimation.hpp"
#include "persuasion/mpp/model.hpp"
#include "persuasion/rng.hpp"

// Optimistic persuasive policy search with shrinkage meta-estimators: the
// Meta-Opt-Opt linear program over occupancy measures with estimator-anchored
// dynamics and optimistic incentive compatibility, the full-feedback loop,
// and the partial-feedback loop with its round-robin exploration phase.

namespace persuasion::mpp {

// Snapshot of estimates and radii the LP is built from.
struct BankSnapshot {
    std::vector<std::vector<std::vector<Vec>>> p_hat;  // [s][w][a] -> next layer
    std::vector<Vec> mu_hat;                           // [s][w]
    std::vector<std::vector<Vec>> us_hat, ur_hat;      // [s][w][a]
    ConfidenceRadii radii;

    static BankSnapshot take(const EstimatorBank& bank, const MppSpec& spec, double delta) {
        BankSnapshot snap;
        const std::size_t nd = spec.n_decision_states();
        snap.p_hat.resize(nd);
        snap.mu_hat.resize(nd);
        snap.us_hat.assign(nd, std::vector<Vec>(spec.n_outcomes, Vec(spec.n_actions, 0.0)));
        snap.ur_hat = snap.us_hat;
        for (std::size_t s = 0; s < nd; ++s) {
            snap.mu_hat[s] = bank.mu_hat(s);
            snap.p_hat[s].assign(spec.n_outcomes, std::vector<Vec>(spec.n_actions));
            for (std::size_t w = 0; w < spec.n_outcomes; ++w)
                for (std::size_t a = 0; a < spec.n_actions; ++a) {
                    snap.p_hat[s][w][a] = bank.p_hat(s, w, a);
                    snap.us_hat[s][w][a] = bank.us_hat(s, w, a);
                    snap.ur_hat[s][w][a] = bank.ur_hat(s, w, a);
                }
        }
        snap.radii = bank.radii(delta);
        return snap;
    }
};

struct ExploreTarget {
    std::size_t state = 0, outcome = 0, action = 0;
};

// Variable layout of the Meta-Opt-Opt program: occupancy quadruples, then
// one epsilon variable per quadruple, then one zeta variable per (s, w).
struct MetaOptOptLayout {
    const MppSpec* spec = nullptr;
    std::vector<std::size_t> q_offset;  // per decision state
    std::size_t n_q = 0, n_eps = 0, n_zeta = 0;

    explicit MetaOptOptLayout(const MppSpec& s) : spec(&s) {
        const std::size_t nd = s.n_decision_states();
        q_offset.assign(nd + 1, 0);
        for (std::size_t st = 0; st < nd; ++st) {
            const std::size_t next = s.layers[s.layer_of(st) + 1].size();
            q_offset[st + 1] = q_offset[st] + s.n_outcomes * s.n_actions * next;
        }
        n_q = q_offset.back();
        n_eps = n_q;
        n_zeta = nd * s.n_outcomes;
    }
    std::size_t total() const { return n_q + n_eps + n_zeta; }
    std::size_t q(std::size_t s, std::size_t w, std::size_t a, std::size_t nx) const {
        const std::size_t next = spec->layers[spec->layer_of(s) + 1].size();
        return q_offset[s] + (w * spec->n_actions + a) * next + nx;
    }
    std::size_t eps(std::size_t s, std::size_t w, std::size_t a, std::size_t nx) const {
        return n_q + q(s, w, a, nx);
    }
    std::size_t zeta(std::size_t s, std::size_t w) const {
        return n_q + n_eps + s * spec->n_outcomes + w;
    }
};

// Builds the optimistic occupancy LP. Reward mode maximizes the optimistic
// sender value; explore mode maximizes the reach probability of one
// (x, omega, a) triple (an all-zero objective when the triple belongs to the
// terminal state, which has no occupancy variables).
inline LinearProgram build_meta_opt_opt(const MppSpec& spec, const BankSnapshot& snap,
                                        std::optional<ExploreTarget> explore = {}) {
    const MetaOptOptLayout lay(spec);
    auto lp = LinearProgram::with_variables(lay.total());
    lp.sense = Sense::Maximize;
    const std::size_t nd = spec.n_decision_states();
    const std::size_t L = spec.n_layer_steps();

    auto next_size = [&](std::size_t s) { return spec.layers[spec.layer_of(s) + 1].size(); };

    if (explore) {
        if (!spec.is_terminal(explore->state)) {
            for (std::size_t nx = 0; nx < next_size(explore->state); ++nx)
                lp.cost[lay.q(explore->state, explore->outcome, explore->action, nx)] = 1.0;
        }
    } else {
        for (std::size_t s = 0; s < nd; ++s)
            for (std::size_t w = 0; w < spec.n_outcomes; ++w)
                for (std::size_t a = 0; a < spec.n_actions; ++a) {
                    const double coeff = snap.us_hat[s][w][a] + snap.radii.xi_s[s][w][a];
                    for (std::size_t nx = 0; nx < next_size(s); ++nx)
                        lp.cost[lay.q(s, w, a, nx)] = coeff;
                }
    }

    // (2b) layer totals
    for (std::size_t k = 0; k < L; ++k) {
        Vec row(lay.total(), 0.0);
        const std::size_t off = spec.layer_offset(k);
        for (std::size_t i = 0; i < spec.layers[k].size(); ++i) {
            const std::size_t s = off + i;
            for (std::size_t w = 0; w < spec.n_outcomes; ++w)
                for (std::size_t a = 0; a < spec.n_actions; ++a)
                    for (std::size_t nx = 0; nx < next_size(s); ++nx)
                        row[lay.q(s, w, a, nx)] = 1.0;
        }
        lp.add_row(row, Relation::Eq, 1.0);
    }
    // (2c) flow conservation at internal layers
    for (std::size_t k = 1; k < L; ++k) {
        const std::size_t off = spec.layer_offset(k);
        for (std::size_t i = 0; i < spec.layers[k].size(); ++i) {
            const std::size_t s = off + i;
            Vec row(lay.total(), 0.0);
            const std::size_t prev_off = spec.layer_offset(k - 1);
            for (std::size_t pi = 0; pi < spec.layers[k - 1].size(); ++pi)
                for (std::size_t w = 0; w < spec.n_outcomes; ++w)
                    for (std::size_t a = 0; a < spec.n_actions; ++a)
                        row[lay.q(prev_off + pi, w, a, i)] += 1.0;
            for (std::size_t w = 0; w < spec.n_outcomes; ++w)
                for (std::size_t a = 0; a < spec.n_actions; ++a)
                    for (std::size_t nx = 0; nx < next_size(s); ++nx)
                        row[lay.q(s, w, a, nx)] -= 1.0;
            lp.add_row(row, Relation::Eq, 0.0);
        }
    }
    // (2d)/(2e) two-sided transition anchoring, (2f) epsilon budgets
    for (std::size_t s = 0; s < nd; ++s) {
        for (std::size_t w = 0; w < spec.n_outcomes; ++w)
            for (std::size_t a = 0; a < spec.n_actions; ++a) {
                const std::size_t next = next_size(s);
                for (std::size_t nx = 0; nx < next; ++nx) {
                    Vec row(lay.total(), 0.0);
                    row[lay.q(s, w, a, nx)] += 1.0;
                    for (std::size_t ox = 0; ox < next; ++ox)
                        row[lay.q(s, w, a, ox)] -= snap.p_hat[s][w][a][nx];
                    row[lay.eps(s, w, a, nx)] = -1.0;
                    lp.add_row(row, Relation::LessEq, 0.0);
                    for (double& v : row) v = -v;
                    row[lay.eps(s, w, a, nx)] = -1.0;
                    lp.add_row(row, Relation::LessEq, 0.0);
                }
                Vec budget(lay.total(), 0.0);
                for (std::size_t nx = 0; nx < next; ++nx) {
                    budget[lay.eps(s, w, a, nx)] = 1.0;
                    budget[lay.q(s, w, a, nx)] = -snap.radii.eps[s][w][a];
                }
                lp.add_row(budget, Relation::LessEq, 0.0);
            }
        // (2g)/(2h) prior anchoring, (2i) zeta budget
        for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
            Vec row(lay.total(), 0.0);
            for (std::size_t a = 0; a < spec.n_actions; ++a)
                for (std::size_t nx = 0; nx < next_size(s); ++nx)
                    row[lay.q(s, w, a, nx)] += 1.0;
            for (std::size_t ow = 0; ow < spec.n_outcomes; ++ow)
                for (std::size_t a = 0; a < spec.n_actions; ++a)
                    for (std::size_t nx = 0; nx < next_size(s); ++nx)
                        row[lay.q(s, ow, a, nx)] -= snap.mu_hat[s][w];
            row[lay.zeta(s, w)] = -1.0;
            lp.add_row(row, Relation::LessEq, 0.0);
            for (double& v : row) v = -v;
            row[lay.zeta(s, w)] = -1.0;
            lp.add_row(row, Relation::LessEq, 0.0);
        }
        Vec zbudget(lay.total(), 0.0);
        for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
            zbudget[lay.zeta(s, w)] = 1.0;
            for (std::size_t a = 0; a < spec.n_actions; ++a)
                for (std::size_t nx = 0; nx < next_size(s); ++nx)
                    zbudget[lay.q(s, w, a, nx)] -= snap.radii.zeta[s];
        }
        lp.add_row(zbudget, Relation::LessEq, 0.0);
        // (2j) optimistic incentive compatibility
        for (std::size_t a = 0; a < spec.n_actions; ++a)
            for (std::size_t dev = 0; dev < spec.n_actions; ++dev) {
                if (dev == a) continue;
                Vec row(lay.total(), 0.0);
                for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
                    const double coeff = snap.ur_hat[s][w][a] + snap.radii.xi_r[s][w][a] -
                                         snap.ur_hat[s][w][dev] + snap.radii.xi_r[s][w][dev];
                    for (std::size_t nx = 0; nx < next_size(s); ++nx)
                        row[lay.q(s, w, a, nx)] = coeff;
                }
                lp.add_row(row, Relation::GreaterEq, 0.0);
            }
    }
    return lp;
}

// Extracts the induced policy phi^q from a Meta-Opt-Opt solution.
inline MppPolicy policy_from_solution(const MppSpec& spec, const Vec& x) {
    const MetaOptOptLayout lay(spec);
    MppPolicy pol;
    for (std::size_t s = 0; s < spec.n_decision_states(); ++s) {
        Matrix p(spec.n_outcomes, spec.n_actions, 0.0);
        const std::size_t next = spec.layers[spec.layer_of(s) + 1].size();
        for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
            double mass = 0.0;
            Vec action_mass(spec.n_actions, 0.0);
            for (std::size_t a = 0; a < spec.n_actions; ++a) {
                for (std::size_t nx = 0; nx < next; ++nx)
                    action_mass[a] += x[lay.q(s, w, a, nx)];
                mass += action_mass[a];
            }
            for (std::size_t a = 0; a < spec.n_actions; ++a)
                p(w, a) = mass <= 1e-12 ? 1.0 / spec.n_actions : action_mass[a] / mass;
        }
        pol.phi.push_back(std::move(p));
    }
    return pol;
}

// Smallest-count index, lowest index on ties: the round-robin exploration
// order of the partial-feedback phase.
inline std::size_t least_visited_index(const std::vector<std::size_t>& counter) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < counter.size(); ++c)
        if (counter[c] < counter[best]) best = c;
    return best;
}

struct OppsConfig {
    Feedback mode = Feedback::Full;
    double delta = 0.1;
    double explore_alpha = 0.5;       // partial feedback: N = ceil(m^alpha)
    std::size_t refresh_every = 1;    // estimator/LP refresh cadence
    ShrinkageParams shrink;           // kappa = 0 gives the OPPS baseline
    bool record_episodes = false;     // keep per-episode series (diagnostics)
};

struct MppSeriesResult {
    std::vector<double> per_task_regret;     // sum over episodes of OPT - value
    std::vector<double> per_task_violation;  // sum over episodes of violation mass
    std::vector<Vec> episode_violation;      // per task, when recording
    std::vector<Vec> episode_regret;
};

// Full- and Partial-Meta-OPPS. Per episode: refresh estimators and radii,
// solve Meta-Opt-Opt (exploration episodes target the least-visited triple),
// commit to phi^q, roll out, ingest the feedback. Metrics are measured
// against the true task parameters.
inline MppSeriesResult run_meta_opps(const MppSpec& spec, const OppsConfig& cfg,
                                     CounterRng env_rng, CounterRng alg_rng) {
    if (cfg.mode == Feedback::Partial &&
        (cfg.explore_alpha < 0.5 || cfg.explore_alpha > 1.0))
        throw ConfigError("opps: exploration exponent must lie in [1/2, 1]");
    if (cfg.refresh_every == 0) throw ConfigError("opps: refresh cadence must be >= 1");
    MppSeriesResult out;
    EstimatorBank bank(spec, cfg.mode, cfg.shrink);
    const std::size_t n_triples = spec.n_states() * spec.n_outcomes * spec.n_actions;
    const std::size_t explore_len =
        cfg.mode == Feedback::Partial
            ? std::min<std::size_t>(
                  spec.m, static_cast<std::size_t>(
                              std::ceil(std::pow(static_cast<double>(spec.m),
                                                 cfg.explore_alpha))) *
                              n_triples)
            : 0;

    for (std::size_t t = 0; t < spec.T; ++t) {
        auto env_task = env_rng.split(t);
        auto alg_task = alg_rng.split(t);
        auto param_rng = env_task.split(0);
        const MppTask task = sample_task(spec, t, param_rng);
        const Benchmark bench = benchmark_opt(task);

        std::vector<std::size_t> explore_counter(n_triples, 0);
        double task_regret = 0.0, task_violation = 0.0;
        Vec ep_viol, ep_reg;
        MppPolicy policy = MppPolicy::uniform(spec);
        for (std::size_t i = 0; i < spec.m; ++i) {
            const bool exploring = cfg.mode == Feedback::Partial && i < explore_len;
            std::optional<ExploreTarget> target;
            if (exploring) {
                const std::size_t best = least_visited_index(explore_counter);
                ExploreTarget et;
                et.state = best / (spec.n_outcomes * spec.n_actions);
                et.outcome = (best / spec.n_actions) % spec.n_outcomes;
                et.action = best % spec.n_actions;
                target = et;
                ++explore_counter[best];
            }
            if (i % cfg.refresh_every == 0) {
                auto snap = BankSnapshot::take(bank, spec, cfg.delta);
                auto lp = build_meta_opt_opt(spec, snap, target);
                auto sol = solve(lp);
                if (sol.status != LpStatus::Optimal)
                    throw RunError("opps: Meta-Opt-Opt infeasible at task " +
                                   std::to_string(t) + " episode " + std::to_string(i));
                policy = policy_from_solution(spec, sol.x);
            }
            const double reg =
                bench.opt_value - occupancy_of(task, policy).sender_value(task);
            const double viol = violation_of(task, policy);
            task_regret += reg;
            task_violation += viol;
            if (cfg.record_episodes) {
                ep_reg.push_back(reg);
                ep_viol.push_back(viol);
            }
            auto env_ep = env_task.split(1 + i);
            auto alg_ep = alg_task.split(1 + i);
            bank.ingest(rollout(task, policy, cfg.mode, env_ep, alg_ep));
        }
        bank.end_task();
        out.per_task_regret.push_back(task_regret);
        out.per_task_violation.push_back(task_violation);
        if (cfg.record_episodes) {
            out.episode_regret.push_back(std::move(ep_reg));
            out.episode_violation.push_back(std::move(ep_viol));
        }
    }
    return out;
}

}  // namespace persuasion::mpp

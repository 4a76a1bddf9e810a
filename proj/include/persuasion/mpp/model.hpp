#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "persuasion/common.hpp"
#include "persuasion/dense.hpp"
#include "persuasion/lp.hpp"
#include "persuasion/rng.hpp"

// Loop-free episodic Markov persuasion processes: layered state space,
// across-task parameter sampling, episode rollout under full or partial
// feedback, occupancy measures, the offline benchmark LP, and the
// regret/violation metrics measured with simulator-side true parameters.

namespace persuasion::mpp {

enum class Feedback { Full, Partial };

// Across-task global means plus the experiment widths. States carry global
// ids in layer order; only non-terminal states hold parameters.
struct MppSpec {
    std::vector<std::vector<std::string>> layers;  // layers[0] and layers.back() singleton
    std::size_t n_outcomes = 0;
    std::size_t n_actions = 0;
    // indexed [state][outcome][action]; transition rows over the next layer
    std::vector<std::vector<std::vector<Vec>>> p_global;
    std::vector<Vec> mu_global;                       // [state][outcome]
    std::vector<std::vector<Vec>> us_global;          // [state][outcome][action]
    std::vector<std::vector<Vec>> ur_global;
    double tau2 = 0.01;
    double tau3 = 0.1;
    std::size_t m = 200;
    std::size_t T = 1000;
    std::uint64_t seed = 1;
    // negative entries mean "derive from the widths"
    double kappa_p = -1.0, kappa_mu = -1.0, kappa_us = -1.0, kappa_ur = -1.0;

    std::size_t n_layer_steps() const { return layers.size() - 1; }  // L
    std::size_t n_states() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.size();
        return n;
    }
    std::size_t layer_offset(std::size_t k) const {
        std::size_t off = 0;
        for (std::size_t i = 0; i < k; ++i) off += layers[i].size();
        return off;
    }
    std::size_t layer_of(std::size_t state) const {
        std::size_t k = 0;
        while (state >= layers[k].size()) {
            state -= layers[k].size();
            ++k;
        }
        return k;
    }
    bool is_terminal(std::size_t state) const {
        return layer_of(state) == n_layer_steps();
    }
    std::size_t n_decision_states() const { return n_states() - layers.back().size(); }

    void validate() const {
        if (layers.size() < 2) throw ConfigError("mpp spec: needs at least two layers");
        if (layers.front().size() != 1 || layers.back().size() != 1)
            throw ConfigError("mpp spec: first and last layers must be singletons");
        if (n_outcomes == 0 || n_actions == 0)
            throw ConfigError("mpp spec: empty outcome or action set");
        const std::size_t nd = n_decision_states();
        if (p_global.size() != nd || mu_global.size() != nd || us_global.size() != nd ||
            ur_global.size() != nd)
            throw ConfigError("mpp spec: parameter tables must cover decision states");
        for (std::size_t s = 0; s < nd; ++s) {
            const std::size_t next = layers[layer_of(s) + 1].size();
            double total = 0.0;
            for (double v : mu_global[s]) {
                if (v < 0.0) throw ConfigError("mpp spec: negative prior entry");
                total += v;
            }
            if (std::fabs(total - 1.0) > 1e-9)
                throw ConfigError("mpp spec: prior rows must sum to 1");
            for (std::size_t w = 0; w < n_outcomes; ++w)
                for (std::size_t a = 0; a < n_actions; ++a) {
                    const Vec& row = p_global[s][w][a];
                    if (row.size() != next)
                        throw ConfigError("mpp spec: transition row must match next layer");
                    double pt = 0.0;
                    for (double v : row) {
                        if (v < 0.0) throw ConfigError("mpp spec: negative transition entry");
                        pt += v;
                    }
                    if (std::fabs(pt - 1.0) > 1e-9)
                        throw ConfigError("mpp spec: transition rows must sum to 1");
                    const double us = us_global[s][w][a], ur = ur_global[s][w][a];
                    if (us < 0.0 || us > 1.0 || ur < 0.0 || ur > 1.0)
                        throw ConfigError("mpp spec: reward means must lie in [0,1]");
                }
        }
    }
};

// Task-level realized means.
struct MppTask {
    const MppSpec* spec = nullptr;
    std::size_t index = 0;
    std::vector<std::vector<std::vector<Vec>>> p;  // [state][outcome][action] -> next layer
    std::vector<Vec> mu;
    std::vector<std::vector<Vec>> us, ur;  // [state][outcome] -> per action mean
};

// Signaling policy phi(a | x, omega) for every decision state.
struct MppPolicy {
    std::vector<Matrix> phi;  // [state](outcome, action)

    void validate() const {
        for (const auto& p : phi)
            for (std::size_t w = 0; w < p.rows(); ++w) {
                double total = 0.0;
                for (std::size_t a = 0; a < p.cols(); ++a) {
                    if (p(w, a) < -1e-15) throw ConfigError("policy: negative probability");
                    total += p(w, a);
                }
                if (std::fabs(total - 1.0) > 1e-12)
                    throw ConfigError("policy: rows must sum to 1");
            }
    }

    static MppPolicy uniform(const MppSpec& spec) {
        MppPolicy pol;
        for (std::size_t s = 0; s < spec.n_decision_states(); ++s) {
            Matrix p(spec.n_outcomes, spec.n_actions, 1.0 / spec.n_actions);
            pol.phi.push_back(std::move(p));
        }
        return pol;
    }
};

inline Vec clip_renormalize(Vec row, double floor = 1e-6) {
    double total = 0.0;
    for (double& v : row) {
        v = std::max(v, floor);
        total += v;
    }
    for (double& v : row) v /= total;
    return row;
}

// Scalars uniform in [mean - tau2, mean + tau2]; probability rows clipped at
// 1e-6 and renormalized, reward means clipped to [0,1].
inline MppTask sample_task(const MppSpec& spec, std::size_t index, CounterRng& rng) {
    MppTask task;
    task.spec = &spec;
    task.index = index;
    const double tau = spec.tau2;
    for (std::size_t s = 0; s < spec.n_decision_states(); ++s) {
        Vec mu_row(spec.n_outcomes);
        for (std::size_t w = 0; w < spec.n_outcomes; ++w)
            mu_row[w] = spec.mu_global[s][w] + rng.uniform(-tau, tau);
        task.mu.push_back(clip_renormalize(std::move(mu_row)));

        std::vector<std::vector<Vec>> p_s(spec.n_outcomes);
        std::vector<Vec> us_s(spec.n_outcomes), ur_s(spec.n_outcomes);
        for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
            p_s[w].resize(spec.n_actions);
            us_s[w].assign(spec.n_actions, 0.0);
            ur_s[w].assign(spec.n_actions, 0.0);
            for (std::size_t a = 0; a < spec.n_actions; ++a) {
                Vec row = spec.p_global[s][w][a];
                for (double& v : row) v += rng.uniform(-tau, tau);
                p_s[w][a] = clip_renormalize(std::move(row));
                us_s[w][a] = std::clamp(spec.us_global[s][w][a] + rng.uniform(-tau, tau), 0.0, 1.0);
                ur_s[w][a] = std::clamp(spec.ur_global[s][w][a] + rng.uniform(-tau, tau), 0.0, 1.0);
            }
        }
        task.p.push_back(std::move(p_s));
        task.us.push_back(std::move(us_s));
        task.ur.push_back(std::move(ur_s));
    }
    return task;
}

struct EpisodeStep {
    std::size_t state = 0, outcome = 0, action = 0, next_state = 0;
    // full feedback: one entry per action; partial: a single entry for the
    // action actually taken
    Vec sender_rewards;
    Vec receiver_rewards;
};

struct EpisodeRecord {
    Feedback feedback = Feedback::Full;
    std::vector<EpisodeStep> steps;
    double sender_return = 0.0;  // realized drawn rewards along the trajectory
};

// Protocol rollout. Episode reward draws are uniform in [mean - tau3,
// mean + tau3] clipped to [0,1] and are drawn for the whole table up front
// from the environment stream; the policy's action draws come from the
// algorithm stream.
inline EpisodeRecord rollout(const MppTask& task, const MppPolicy& policy, Feedback mode,
                             CounterRng& env_rng, CounterRng& alg_rng) {
    const MppSpec& spec = *task.spec;
    EpisodeRecord rec;
    rec.feedback = mode;
    const double tau = spec.tau3;
    // per-episode reward tables
    std::vector<std::vector<Vec>> us_draw(spec.n_decision_states()),
        ur_draw(spec.n_decision_states());
    for (std::size_t s = 0; s < spec.n_decision_states(); ++s) {
        us_draw[s].resize(spec.n_outcomes);
        ur_draw[s].resize(spec.n_outcomes);
        for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
            us_draw[s][w].assign(spec.n_actions, 0.0);
            ur_draw[s][w].assign(spec.n_actions, 0.0);
            for (std::size_t a = 0; a < spec.n_actions; ++a) {
                us_draw[s][w][a] =
                    std::clamp(task.us[s][w][a] + env_rng.uniform(-tau, tau), 0.0, 1.0);
                ur_draw[s][w][a] =
                    std::clamp(task.ur[s][w][a] + env_rng.uniform(-tau, tau), 0.0, 1.0);
            }
        }
    }

    std::size_t x = 0;  // initial state
    for (std::size_t k = 0; k < spec.n_layer_steps(); ++k) {
        EpisodeStep step;
        step.state = x;
        step.outcome = env_rng.categorical(task.mu[x]);
        Vec action_probs(spec.n_actions);
        for (std::size_t a = 0; a < spec.n_actions; ++a)
            action_probs[a] = policy.phi[x](step.outcome, a);
        step.action = alg_rng.categorical(action_probs);
        const std::size_t next_local = env_rng.categorical(task.p[x][step.outcome][step.action]);
        step.next_state = spec.layer_offset(k + 1) + next_local;
        if (mode == Feedback::Full) {
            step.sender_rewards = us_draw[x][step.outcome];
            step.receiver_rewards = ur_draw[x][step.outcome];
        } else {
            step.sender_rewards = {us_draw[x][step.outcome][step.action]};
            step.receiver_rewards = {ur_draw[x][step.outcome][step.action]};
        }
        rec.sender_return += us_draw[x][step.outcome][step.action];
        rec.steps.push_back(std::move(step));
        x = rec.steps.back().next_state;
    }
    return rec;
}

// Occupancy measure over (x, omega, a, x') quadruples, stored per decision
// state. Marginals follow the forward recursion from q(x0) = 1.
struct OccupancyMeasure {
    const MppSpec* spec = nullptr;
    std::vector<std::vector<std::vector<Vec>>> q;  // [state][outcome][action] -> next layer

    double q3(std::size_t s, std::size_t w, std::size_t a) const {
        double total = 0.0;
        for (double v : q[s][w][a]) total += v;
        return total;
    }
    double q2(std::size_t s, std::size_t w) const {
        double total = 0.0;
        for (std::size_t a = 0; a < spec->n_actions; ++a) total += q3(s, w, a);
        return total;
    }
    double q1(std::size_t s) const {
        double total = 0.0;
        for (std::size_t w = 0; w < spec->n_outcomes; ++w) total += q2(s, w);
        return total;
    }

    double sender_value(const MppTask& task) const {
        double total = 0.0;
        for (std::size_t s = 0; s < spec->n_decision_states(); ++s)
            for (std::size_t w = 0; w < spec->n_outcomes; ++w)
                for (std::size_t a = 0; a < spec->n_actions; ++a)
                    total += q3(s, w, a) * task.us[s][w][a];
        return total;
    }

    // induced policy phi^q with the uniform fallback on zero-mass cells
    MppPolicy induced_policy() const {
        MppPolicy pol;
        for (std::size_t s = 0; s < spec->n_decision_states(); ++s) {
            Matrix p(spec->n_outcomes, spec->n_actions, 0.0);
            for (std::size_t w = 0; w < spec->n_outcomes; ++w) {
                const double mass = q2(s, w);
                if (mass <= 1e-12) {
                    for (std::size_t a = 0; a < spec->n_actions; ++a)
                        p(w, a) = 1.0 / spec->n_actions;
                } else {
                    for (std::size_t a = 0; a < spec->n_actions; ++a)
                        p(w, a) = q3(s, w, a) / mass;
                }
            }
            pol.phi.push_back(std::move(p));
        }
        return pol;
    }
};

// Forward recursion q(x0) = 1, q(x,w) = q(x) mu(w|x), q(x,w,a) = q(x,w)
// phi(a|x,w), q(x,w,a,x') = q(x,w,a) P(x'|x,w,a).
inline OccupancyMeasure occupancy_of(const MppTask& task, const MppPolicy& policy) {
    const MppSpec& spec = *task.spec;
    OccupancyMeasure occ;
    occ.spec = &spec;
    occ.q.resize(spec.n_decision_states());
    Vec state_mass(spec.n_states(), 0.0);
    state_mass[0] = 1.0;
    for (std::size_t k = 0; k < spec.n_layer_steps(); ++k) {
        const std::size_t off = spec.layer_offset(k);
        const std::size_t next_off = spec.layer_offset(k + 1);
        for (std::size_t i = 0; i < spec.layers[k].size(); ++i) {
            const std::size_t s = off + i;
            occ.q[s].resize(spec.n_outcomes);
            for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
                occ.q[s][w].resize(spec.n_actions);
                for (std::size_t a = 0; a < spec.n_actions; ++a) {
                    const double mass = state_mass[s] * task.mu[s][w] * policy.phi[s](w, a);
                    const Vec& row = task.p[s][w][a];
                    occ.q[s][w][a].resize(row.size());
                    for (std::size_t nx = 0; nx < row.size(); ++nx) {
                        occ.q[s][w][a][nx] = mass * row[nx];
                        state_mass[next_off + nx] += mass * row[nx];
                    }
                }
            }
        }
    }
    return occ;
}

// Receiver best response to recommendation a at state x: argmax over a' of
// sum_w mu(w|x) phi(a|x,w) u^r(x,w,a'), lowest index on ties; recommendations
// with zero probability mass return themselves.
inline std::size_t best_response_mpp(const MppTask& task, const MppPolicy& policy,
                                     std::size_t x, std::size_t a) {
    const MppSpec& spec = *task.spec;
    double mass = 0.0;
    for (std::size_t w = 0; w < spec.n_outcomes; ++w)
        mass += task.mu[x][w] * policy.phi[x](w, a);
    if (mass <= 1e-12) return a;
    std::size_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t cand = 0; cand < spec.n_actions; ++cand) {
        double val = 0.0;
        for (std::size_t w = 0; w < spec.n_outcomes; ++w)
            val += task.mu[x][w] * policy.phi[x](w, a) * task.ur[x][w][cand];
        if (val > best_val + 1e-15) {
            best_val = val;
            best = cand;
        }
    }
    return best;
}

// Persuasiveness-violation mass of one policy under the true task means.
inline double violation_of(const MppTask& task, const MppPolicy& policy) {
    const MppSpec& spec = *task.spec;
    const auto occ = occupancy_of(task, policy);
    double total = 0.0;
    for (std::size_t s = 0; s < spec.n_decision_states(); ++s)
        for (std::size_t a = 0; a < spec.n_actions; ++a) {
            const std::size_t b = best_response_mpp(task, policy, s, a);
            if (b == a) continue;
            for (std::size_t w = 0; w < spec.n_outcomes; ++w)
                total += occ.q3(s, w, a) * (task.ur[s][w][b] - task.ur[s][w][a]);
        }
    return total;
}

struct Benchmark {
    double opt_value = 0.0;
    OccupancyMeasure occupancy;
    MppPolicy policy;
};

// Offline benchmark: maximize expected sender reward over valid occupancy
// measures anchored to the true (P, mu), subject to exact persuasiveness.
inline Benchmark benchmark_opt(const MppTask& task) {
    const MppSpec& spec = *task.spec;
    // variable layout: flattened quadruples per decision state
    std::vector<std::size_t> var_offset(spec.n_decision_states() + 1, 0);
    for (std::size_t s = 0; s < spec.n_decision_states(); ++s) {
        const std::size_t next = spec.layers[spec.layer_of(s) + 1].size();
        var_offset[s + 1] = var_offset[s] + spec.n_outcomes * spec.n_actions * next;
    }
    const std::size_t n_vars = var_offset.back();
    auto vid = [&](std::size_t s, std::size_t w, std::size_t a, std::size_t nx) {
        const std::size_t next = spec.layers[spec.layer_of(s) + 1].size();
        return var_offset[s] + (w * spec.n_actions + a) * next + nx;
    };
    auto lp = LinearProgram::with_variables(n_vars);
    lp.sense = Sense::Maximize;
    for (std::size_t s = 0; s < spec.n_decision_states(); ++s) {
        const std::size_t next = spec.layers[spec.layer_of(s) + 1].size();
        for (std::size_t w = 0; w < spec.n_outcomes; ++w)
            for (std::size_t a = 0; a < spec.n_actions; ++a)
                for (std::size_t nx = 0; nx < next; ++nx)
                    lp.cost[vid(s, w, a, nx)] = task.us[s][w][a];
    }
    const std::size_t L = spec.n_layer_steps();
    // layer totals
    for (std::size_t k = 0; k < L; ++k) {
        Vec row(n_vars, 0.0);
        const std::size_t off = spec.layer_offset(k);
        for (std::size_t i = 0; i < spec.layers[k].size(); ++i) {
            const std::size_t s = off + i;
            const std::size_t next = spec.layers[k + 1].size();
            for (std::size_t w = 0; w < spec.n_outcomes; ++w)
                for (std::size_t a = 0; a < spec.n_actions; ++a)
                    for (std::size_t nx = 0; nx < next; ++nx) row[vid(s, w, a, nx)] = 1.0;
        }
        lp.add_row(row, Relation::Eq, 1.0);
    }
    // flow conservation at internal layers
    for (std::size_t k = 1; k < L; ++k) {
        const std::size_t off = spec.layer_offset(k);
        for (std::size_t i = 0; i < spec.layers[k].size(); ++i) {
            const std::size_t s = off + i;
            Vec row(n_vars, 0.0);
            const std::size_t prev_off = spec.layer_offset(k - 1);
            for (std::size_t pi = 0; pi < spec.layers[k - 1].size(); ++pi) {
                const std::size_t ps = prev_off + pi;
                for (std::size_t w = 0; w < spec.n_outcomes; ++w)
                    for (std::size_t a = 0; a < spec.n_actions; ++a)
                        row[vid(ps, w, a, i)] += 1.0;
            }
            const std::size_t next = spec.layers[k + 1].size();
            for (std::size_t w = 0; w < spec.n_outcomes; ++w)
                for (std::size_t a = 0; a < spec.n_actions; ++a)
                    for (std::size_t nx = 0; nx < next; ++nx) row[vid(s, w, a, nx)] -= 1.0;
            lp.add_row(row, Relation::Eq, 0.0);
        }
    }
    // transition anchoring: q(x,w,a,x') = P(x'|x,w,a) q(x,w,a)
    for (std::size_t s = 0; s < spec.n_decision_states(); ++s) {
        const std::size_t next = spec.layers[spec.layer_of(s) + 1].size();
        for (std::size_t w = 0; w < spec.n_outcomes; ++w)
            for (std::size_t a = 0; a < spec.n_actions; ++a)
                for (std::size_t nx = 0; nx < next; ++nx) {
                    Vec row(n_vars, 0.0);
                    row[vid(s, w, a, nx)] = 1.0;
                    for (std::size_t ox = 0; ox < next; ++ox)
                        row[vid(s, w, a, ox)] -= task.p[s][w][a][nx];
                    lp.add_row(row, Relation::Eq, 0.0);
                }
    }
    // prior anchoring: q(x,w) = mu(w|x) q(x)
    for (std::size_t s = 0; s < spec.n_decision_states(); ++s) {
        const std::size_t next = spec.layers[spec.layer_of(s) + 1].size();
        for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
            Vec row(n_vars, 0.0);
            for (std::size_t a = 0; a < spec.n_actions; ++a)
                for (std::size_t nx = 0; nx < next; ++nx) row[vid(s, w, a, nx)] = 1.0;
            for (std::size_t ow = 0; ow < spec.n_outcomes; ++ow)
                for (std::size_t a = 0; a < spec.n_actions; ++a)
                    for (std::size_t nx = 0; nx < next; ++nx)
                        row[vid(s, ow, a, nx)] -= task.mu[s][w];
            lp.add_row(row, Relation::Eq, 0.0);
        }
    }
    // exact persuasiveness
    for (std::size_t s = 0; s < spec.n_decision_states(); ++s) {
        const std::size_t next = spec.layers[spec.layer_of(s) + 1].size();
        for (std::size_t a = 0; a < spec.n_actions; ++a)
            for (std::size_t dev = 0; dev < spec.n_actions; ++dev) {
                if (dev == a) continue;
                Vec row(n_vars, 0.0);
                for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
                    const double coeff = task.ur[s][w][a] - task.ur[s][w][dev];
                    for (std::size_t nx = 0; nx < next; ++nx) row[vid(s, w, a, nx)] = coeff;
                }
                lp.add_row(row, Relation::GreaterEq, 0.0);
            }
    }
    auto sol = solve(lp);
    if (sol.status != LpStatus::Optimal)
        throw RunError("benchmark: LP infeasible (the obedient uninformative policy "
                       "should always be feasible)");
    Benchmark bench;
    bench.opt_value = sol.objective;
    bench.occupancy.spec = &spec;
    bench.occupancy.q.resize(spec.n_decision_states());
    for (std::size_t s = 0; s < spec.n_decision_states(); ++s) {
        const std::size_t next = spec.layers[spec.layer_of(s) + 1].size();
        bench.occupancy.q[s].resize(spec.n_outcomes);
        for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
            bench.occupancy.q[s][w].resize(spec.n_actions);
            for (std::size_t a = 0; a < spec.n_actions; ++a) {
                bench.occupancy.q[s][w][a].resize(next);
                for (std::size_t nx = 0; nx < next; ++nx)
                    bench.occupancy.q[s][w][a][nx] = sol.x[vid(s, w, a, nx)];
            }
        }
    }
    bench.policy = bench.occupancy.induced_policy();
    return bench;
}

// Per-episode regret against the benchmark plus the violation mass; metric
// series are accumulated per task by the learner loops.
inline double episode_regret(const MppTask& task, const Benchmark& bench,
                             const MppPolicy& policy) {
    return bench.opt_value - occupancy_of(task, policy).sender_value(task);
}

}  // namespace persuasion::mpp

#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "persuasion/barrier.hpp"
#include "persuasion/common.hpp"
#include "persuasion/dense.hpp"
#include "persuasion/geometry.hpp"
#include "persuasion/lp.hpp"
#include "persuasion/obp/full_meta.hpp"
#include "persuasion/obp/game.hpp"
#include "persuasion/rng.hpp"

// Bandit-feedback meta-persuasion: barrier mirror descent with Dikin-axis
// exploration and a one-point loss estimator (CTOMD), the b-restricted
// optima OPT_b, the per-task meta-loss, and the experts layer that learns
// (eta, b) across tasks.
//
// Task hulls can be rank-deficient in the loss space, so each task runs in
// the orthonormal coordinates of its affine hull; estimators, barriers and
// OPT_b all live in those reduced coordinates, and iterates are mapped back
// to ambient loss coordinates between tasks.

namespace persuasion::obp {

// Mirror-descent step: minimize <step, z> + D_R(z, from) by damped Newton on
// grad R(z) = grad R(from) - step. Throws after 200 iterations (the step
// size is too large for the barrier).
inline Vec omd_step(const BarrierDomain& dom, const Vec& from, const Vec& step) {
    const Vec target = dom.eval(from).gradient - step;
    Vec z = from;
    for (int it = 0; it < 200; ++it) {
        const auto ev = dom.eval(z);
        const Vec resid = ev.gradient - target;
        if (norm_inf(resid) <= 1e-10) return z;
        auto delta = gauss_solve(ev.hessian, resid);
        if (!delta) throw NumericalBreakdown("omd: singular Hessian");
        // Newton decrement squared; affine-invariant convergence measure
        const double lambda_sq = dot(resid, *delta);
        if (lambda_sq <= 1e-20) return z;
        auto value = [&](const Vec& p) { return dom.eval(p).value - dot(target, p); };
        const double base = value(z);
        const double fp_slack = 1e-15 * (1.0 + std::fabs(base));
        double t = 1.0;
        bool moved = false;
        for (int half = 0; half < 60; ++half) {
            Vec cand = z;
            axpy(-t, *delta, cand);
            if (dom.is_interior(cand) &&
                value(cand) <= base - 1e-4 * t * lambda_sq + fp_slack) {
                z = std::move(cand);
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved)
            throw NumericalBreakdown("omd: line search stalled");
    }
    throw ConfigError("omd: Newton did not converge in 200 iterations (eta too large)");
}

// b-restricted optimum of a linear loss: closed form on the ball, an LP over
// the gauge-shrunk facets on polytopes. Zero loss returns the anchor.
inline Vec opt_b(const BarrierDomain& dom, const Vec& anchor, double b, const Vec& loss) {
    if (b <= 0.0 || b >= 1.0) throw ConfigError("opt_b: b must be in (0,1)");
    if (norm2(loss) < 1e-12) return anchor;
    if (dom.kind() == BarrierDomain::Kind::UnitBall) {
        return (-(1.0 - b) / norm2(loss)) * loss;
    }
    const auto facets = dom.restricted_facets(anchor, b);
    // bounding box of the restricted set from the facet system via the
    // anchor: every restricted point z satisfies |z - anchor| <= diam of the
    // full domain, and the LP only needs any finite enclosing box.
    Vec lo = anchor, hi = anchor;
    for (const auto& f : dom.facets()) {
        const double reach = std::fabs(f.rhs) + norm2(anchor) + 1.0;
        for (std::size_t d = 0; d < dom.dim(); ++d) {
            lo[d] = std::min(lo[d], -reach);
            hi[d] = std::max(hi[d], reach);
        }
    }
    auto lp = LinearProgram::with_variables(dom.dim());
    lp.cost = loss;
    lp.lower = lo;
    lp.upper = hi;
    for (const auto& f : facets) lp.add_row(f.normal, Relation::LessEq, f.rhs);
    auto sol = solve(lp);
    if (sol.status != LpStatus::Optimal)
        throw NumericalBreakdown("opt_b: restricted LP not optimal");
    return sol.x;
}

// Pulls z to minimum slack `floor` by blending toward the analytic center
// (binary search on the blend, slack is concave along the segment).
inline Vec interiorize(const BarrierDomain& dom, Vec z, double floor = 1e-7) {
    if (dom.min_slack(z) >= floor) return z;
    const Vec& c = dom.analytic_center();
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        Vec cand = z + mid * (c - z);
        if (dom.min_slack(cand) >= floor)
            hi = mid;
        else
            lo = mid;
    }
    return z + hi * (c - z);
}

// Task-level meta loss U^t(z, g) = D_R(OPT_b(l~) || z)/eta + (32 K^2 eta + b) m.
// The OPT_b output is nudged inward along (anchor - opt) when it sits on the
// domain boundary.
inline double meta_loss(const BarrierDomain& dom, const Vec& init, const Vec& opt_point,
                        double eta, double b, std::size_t K, std::size_t m) {
    Vec opt = opt_point;
    if (dom.min_slack(opt) <= 1e-12) {
        Vec dir = dom.analytic_center() - opt;
        opt = opt + 1e-9 * dir;
        if (dom.min_slack(opt) <= 1e-12) opt = interiorize(dom, opt, 1e-10);
    }
    const double div = dom.bregman(opt, init);
    return div / eta + (32.0 * K * K * eta + b) * static_cast<double>(m);
}

// Per-task environment in reduced coordinates. `trivial` marks hulls that
// collapse to a single point (nothing to learn).
struct BanditTaskEnv {
    SchemeSet set;
    AffineFrame frame;
    PointSet reduced;
    BarrierDomain domain;
    std::vector<std::size_t> types;
    bool trivial = false;
};

inline BanditTaskEnv make_bandit_env(SchemeSet set, std::vector<std::size_t> types) {
    BanditTaskEnv env;
    env.set = std::move(set);
    env.types = std::move(types);
    env.frame = AffineFrame::of(env.set.losses);
    const std::size_t d = env.frame.reduced_dim();
    if (d == 0) {
        env.trivial = true;
        return env;
    }
    env.reduced = env.frame.reduce(env.set.losses);
    if (d == 1) {
        double lo = env.reduced.points[0][0], hi = lo;
        for (const auto& p : env.reduced.points) {
            lo = std::min(lo, p[0]);
            hi = std::max(hi, p[0]);
        }
        env.domain = BarrierDomain::interval(lo, hi);
    } else if (d == 2) {
        env.domain = BarrierDomain::from_points_2d(env.reduced);
    } else {
        throw ConfigError("bandit env: facet enumeration only implemented for K <= 2 hulls");
    }
    return env;
}

struct CtomdRound {
    DikinSample sample;
    std::size_t scheme_index = 0;
    double scalar_loss = 0.0;
    Vec estimator;  // reduced coordinates
};

// One exploration-and-estimate round at iterate z: Dikin sample, map the
// sampled point to a real scheme through Caratheodory, observe the scalar
// loss of the played point, and form l~ = d * loss * sign * sqrt(v) * axis.
inline CtomdRound ctomd_play(const BarrierDomain& dom, const PointSet& reduced,
                             const Vec& z, const Vec& point_losses, CounterRng& rng) {
    CtomdRound out;
    out.sample = dom.dikin_sample(z, rng);
    auto dec = caratheodory(reduced, out.sample.point);
    const std::size_t draw = rng.categorical(dec.weights);
    out.scheme_index = dec.indices[draw];
    out.scalar_loss = point_losses[out.scheme_index];
    out.estimator = (static_cast<double>(dom.dim()) * out.scalar_loss * out.sample.sign *
                     std::sqrt(out.sample.eigenvalue)) *
                    out.sample.axis;
    return out;
}

struct CtomdTaskResult {
    Vec cumulative_estimator;      // reduced coordinates, sum over rounds
    double expected_regret = 0.0;  // ambient expected-iterate losses vs task optimum
    double realized_regret = 0.0;
    std::vector<std::size_t> played;
};

// Runs m CTOMD rounds from the given interior start. Enforces the step-size
// feasibility condition eta * d <= 1/4 at entry.
inline CtomdTaskResult run_ctomd_task(const BanditTaskEnv& env, Vec z, double eta,
                                      CounterRng& rng) {
    CtomdTaskResult out;
    if (env.trivial) {
        out.cumulative_estimator = Vec{};
        double loss = 0.0, best = 0.0;
        for (std::size_t k : env.types) {
            loss += env.set.losses.points[0][k];
            best += env.set.losses.points[0][k];
            out.played.push_back(0);
        }
        out.expected_regret = loss - best;
        out.realized_regret = loss - best;
        return out;
    }
    const std::size_t d = env.domain.dim();
    if (eta * static_cast<double>(d) > 0.25 + 1e-12)
        throw ConfigError("ctomd: eta * K must stay below 1/4");
    out.cumulative_estimator.assign(d, 0.0);
    Vec counts(env.set.losses.dimension, 0.0);
    double expected_loss = 0.0, realized_loss = 0.0;
    for (std::size_t k : env.types) {
        Vec point_losses(env.set.losses.points.size());
        for (std::size_t j = 0; j < point_losses.size(); ++j)
            point_losses[j] = env.set.losses.points[j][k];
        auto round = ctomd_play(env.domain, env.reduced, z, point_losses, rng);
        out.played.push_back(round.scheme_index);
        expected_loss += env.frame.to_ambient(z)[k];
        realized_loss += round.scalar_loss;
        counts[k] += 1.0;
        z = omd_step(env.domain, z, eta * round.estimator);
        out.cumulative_estimator = out.cumulative_estimator + round.estimator;
    }
    const std::size_t opt = per_task_optimum(counts, env.set.losses);
    const double opt_loss = dot(counts, env.set.losses.points[opt]);
    out.expected_regret = expected_loss - opt_loss;
    out.realized_regret = realized_loss - opt_loss;
    return out;
}

struct ExpertGrid {
    std::vector<std::pair<double, double>> experts;  // (eta, b)
    std::size_t n_eta = 0, n_b = 0;

    static Vec log_spaced(double lo, double hi, std::size_t n) {
        Vec out(n);
        if (n == 1) {
            out[0] = std::sqrt(lo * hi);
            return out;
        }
        const double llo = std::log(lo), lhi = std::log(hi);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
        return out;
    }

    // eta bracket around the single-task tuning sqrt(K ln m) / (4 K sqrt(m)),
    // capped at the mirror-descent feasibility bound 1/(4K); b spans
    // [1/m, 1/sqrt(m)].
    static ExpertGrid defaults(std::size_t K, std::size_t m, std::size_t n_eta = 5,
                               std::size_t n_b = 4) {
        const double eta_star =
            std::sqrt(static_cast<double>(K) * std::log(static_cast<double>(m))) /
            (4.0 * K * std::sqrt(static_cast<double>(m)));
        const double cap = 0.25 / static_cast<double>(K);
        const double hi = std::min(2.0 * eta_star, cap);
        const double lo = std::min(0.5 * eta_star, hi);
        ExpertGrid g;
        g.n_eta = n_eta;
        g.n_b = n_b;
        const Vec etas = log_spaced(lo, hi, n_eta);
        const Vec bs = log_spaced(1.0 / static_cast<double>(m),
                                  std::min(1.0 / std::sqrt(static_cast<double>(m)), 0.99),
                                  n_b);
        for (double e : etas)
            for (double b : bs) g.experts.emplace_back(e, b);
        return g;
    }

    std::pair<double, double> midpoint() const {
        double eta_lo = experts.front().first, eta_hi = eta_lo;
        double b_lo = experts.front().second, b_hi = b_lo;
        for (const auto& [e, b] : experts) {
            eta_lo = std::min(eta_lo, e);
            eta_hi = std::max(eta_hi, e);
            b_lo = std::min(b_lo, b);
            b_hi = std::max(b_hi, b);
        }
        return {std::sqrt(eta_lo * eta_hi), std::sqrt(b_lo * b_hi)};
    }
};

struct BanditMetaResult {
    std::vector<double> per_task_regret;
    std::vector<double> per_task_regret_realized;
    std::vector<std::size_t> chosen_expert;
    std::vector<Vec> expert_probs;  // p^t before the task's draw
};

// p(g) <- p(g) exp(-alpha u(g)), renormalized. The exponent is shifted by
// min(u), which leaves the update invariant to adding a constant to all
// losses and avoids underflow.
inline Vec multiplicative_weights_update(Vec probs, const Vec& losses, double alpha) {
    double min_u = losses[0];
    for (double u : losses) min_u = std::min(min_u, u);
    double total = 0.0;
    for (std::size_t g = 0; g < probs.size(); ++g) {
        probs[g] *= std::exp(-alpha * (losses[g] - min_u));
        total += probs[g];
    }
    if (total <= 0.0) throw NumericalBreakdown("experts: all weights vanished");
    for (double& p : probs) p /= total;
    return probs;
}

// Experts meta-layer: sample an expert, run CTOMD from its warm start, then
// update every expert's running-average initialization with OPT_b of the
// task's cumulative loss estimate and reweight by exp(-alpha U^t).
inline BanditMetaResult run_bandit_meta(const std::vector<BanditTaskEnv>& tasks,
                                        const ExpertGrid& grid, double alpha,
                                        CounterRng alg_rng) {
    if (grid.experts.empty()) throw ConfigError("bandit meta: empty expert grid");
    if (alpha <= 0.0) throw ConfigError("bandit meta: alpha must be positive");
    const std::size_t n_experts = grid.experts.size();
    BanditMetaResult out;
    Vec probs(n_experts, 1.0 / n_experts);
    // per-expert ambient-coordinate sums of past OPT_b outputs
    std::vector<Vec> opt_sums(n_experts);
    bool have_init = false;
    std::vector<Vec> init_ambient(n_experts);

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& env = tasks[t];
        auto task_rng = alg_rng.split(t);
        out.expert_probs.push_back(probs);
        auto draw_rng = task_rng.split(0);
        const std::size_t g_idx = draw_rng.categorical(probs);
        out.chosen_expert.push_back(g_idx);

        if (env.trivial) {
            out.per_task_regret.push_back(0.0);
            out.per_task_regret_realized.push_back(0.0);
            continue;
        }
        if (!have_init) {
            // argmin of the barrier over the first usable domain
            const Vec center = env.frame.to_ambient(env.domain.analytic_center());
            for (auto& v : init_ambient) v = center;
            have_init = true;
        }

        // Map an ambient warm start into the task frame and pull it into the
        // expert's b-restricted set; the gauge is positively homogeneous
        // about the anchor, so the pull factor is exact.
        const Vec& anchor_pre = env.domain.analytic_center();
        auto to_start = [&](const Vec& ambient, double b) {
            Vec local = env.frame.to_local(project(env.set.losses, ambient));
            const double cap = (1.0 - 1e-6) / (1.0 + b);
            const double g_val = env.domain.gauge(anchor_pre, local);
            if (g_val > cap) {
                const double s = cap / g_val;
                local = anchor_pre + s * (local - anchor_pre);
            }
            if (!env.domain.is_interior(local, 1e-12))
                local = interiorize(env.domain, std::move(local), 1e-9);
            return local;
        };
        const Vec start = to_start(init_ambient[g_idx], grid.experts[g_idx].second);
        auto play_rng = task_rng.split(1);
        auto res = run_ctomd_task(env, start, grid.experts[g_idx].first, play_rng);
        out.per_task_regret.push_back(res.expected_regret);
        out.per_task_regret_realized.push_back(res.realized_regret);

        // meta updates for every expert
        const Vec& anchor = env.domain.analytic_center();
        Vec u_values(n_experts, 0.0);
        for (std::size_t g = 0; g < n_experts; ++g) {
            const auto& [eta_g, b_g] = grid.experts[g];
            const Vec opt_local = opt_b(env.domain, anchor, b_g, res.cumulative_estimator);
            const Vec init_local = to_start(init_ambient[g], b_g);
            u_values[g] = meta_loss(env.domain, init_local, opt_local, eta_g, b_g,
                                    env.domain.dim(), env.types.size());
            const Vec opt_amb = env.frame.to_ambient(opt_local);
            if (opt_sums[g].empty()) opt_sums[g].assign(opt_amb.size(), 0.0);
            opt_sums[g] = opt_sums[g] + opt_amb;
            init_ambient[g] = (1.0 / (t + 1.0)) * opt_sums[g];
        }
        probs = multiplicative_weights_update(std::move(probs), u_values, alpha);
    }
    return out;
}

// Baseline arm: CTOMD restarted from the analytic center with fixed
// grid-midpoint hyperparameters.
inline BanditMetaResult run_bandit_baseline(const std::vector<BanditTaskEnv>& tasks,
                                            double eta, CounterRng alg_rng) {
    BanditMetaResult out;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& env = tasks[t];
        auto task_rng = alg_rng.split(t);
        task_rng.split(0);  // keep the stream layout aligned with the meta arm
        if (env.trivial) {
            out.per_task_regret.push_back(0.0);
            out.per_task_regret_realized.push_back(0.0);
            continue;
        }
        auto play_rng = task_rng.split(1);
        auto res = run_ctomd_task(env, env.domain.analytic_center(), eta, play_rng);
        out.per_task_regret.push_back(res.expected_regret);
        out.per_task_regret_realized.push_back(res.realized_regret);
    }
    return out;
}

}  // namespace persuasion::obp

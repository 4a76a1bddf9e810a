#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "persuasion/common.hpp"
#include "persuasion/dense.hpp"
#include "persuasion/geometry.hpp"
#include "persuasion/obp/game.hpp"
#include "persuasion/rng.hpp"

// Full-feedback meta-persuasion: per-task online gradient descent over the
// lifted loss hull with Caratheodory sampling, running-average warm starts,
// and step-size tuning by epsilon-EWOO over an interval of learning rates.

namespace persuasion::obp {

// Fixed-node Gauss-Legendre rule on [-1, 1]; nodes by Newton iteration on
// the Legendre polynomial, so the rule is deterministic across platforms.
struct GaussLegendre {
    Vec nodes;
    Vec weights;

    static const GaussLegendre& rule256() {
        static const GaussLegendre rule = make(256);
        return rule;
    }

    static GaussLegendre make(std::size_t n) {
        GaussLegendre g;
        g.nodes.resize(n);
        g.weights.resize(n);
        const std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i < half; ++i) {
            double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (std::size_t k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::fabs(dx) < 1e-15) break;
            }
            g.nodes[i] = -x;
            g.nodes[n - 1 - i] = x;
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            g.weights[i] = w;
            g.weights[n - 1 - i] = w;
        }
        return g;
    }
};

// One task's contribution to the EWOO objective:
//   U~(eta) = ((b_squared + offset_sq) / eta + eta) * gamma.
struct EwooLoss {
    double b_squared = 0.0;   // ||z* - z1||^2 / m
    double offset_sq = 0.0;   // rho^2 A^2
    double gamma = 0.0;       // m / 2
};

// Ratio-of-integrals update over [lo, hi] with weights exp(-beta sum U~);
// empty history (or beta that weighs nothing) returns the interval midpoint.
// The exponent is shifted by its minimum over the nodes before
// exponentiation, so the weights never underflow to all-zero.
inline double ewoo_update(const std::vector<EwooLoss>& history, double beta, double lo,
                          double hi) {
    if (hi <= lo) throw ConfigError("ewoo: empty step-size interval");
    if (history.empty()) return 0.5 * (lo + hi);
    if (beta < 0.0) throw ConfigError("ewoo: beta must be positive");
    const auto& rule = GaussLegendre::rule256();
    const std::size_t n = rule.nodes.size();
    const double mid = 0.5 * (lo + hi), halfwidth = 0.5 * (hi - lo);
    Vec exponent(n, 0.0);
    double shift = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double eta = mid + halfwidth * rule.nodes[i];
        double total = 0.0;
        for (const auto& u : history)
            total += ((u.b_squared + u.offset_sq) / eta + eta) * u.gamma;
        exponent[i] = beta * total;
        shift = std::min(shift, exponent[i]);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double eta = mid + halfwidth * rule.nodes[i];
        const double w = std::exp(-(exponent[i] - shift)) * rule.weights[i];
        num += w * eta;
        den += w;
    }
    if (den <= 0.0) throw NumericalBreakdown("ewoo: quadrature weights underflowed");
    return std::clamp(num / den, lo, hi);
}

// Meta parameters from the task sizes: eps = rho A, rho = T^{-1/4},
// A = sqrt(K/m), beta = 4/(mA) * min(eps^2/A^2, 1). The step-size interval
// defaults to [eps, sqrt(A^2 + eps^2)] and may be overridden by the
// experiment configuration.
struct FullMetaParams {
    std::size_t K = 2, m = 5, T = 25;
    double rho = 0.0, A = 0.0, eps = 0.0, beta = 0.0;
    double eta_lo = 0.0, eta_hi = 0.0;

    static FullMetaParams derive(std::size_t K, std::size_t m, std::size_t T,
                                 std::optional<std::pair<double, double>> eta_interval = {}) {
        FullMetaParams p;
        p.K = K;
        p.m = m;
        p.T = T;
        p.A = std::sqrt(static_cast<double>(K) / static_cast<double>(m));
        p.rho = std::pow(static_cast<double>(T), -0.25);
        p.eps = p.rho * p.A;
        p.beta = 4.0 / (m * p.A) * std::min(p.rho * p.rho, 1.0);
        if (eta_interval) {
            p.eta_lo = eta_interval->first;
            p.eta_hi = eta_interval->second;
        } else {
            p.eta_lo = p.eps;
            p.eta_hi = std::sqrt(p.A * p.A + p.eps * p.eps);
        }
        if (p.eta_lo <= 0.0 || p.eta_hi <= p.eta_lo)
            throw ConfigError("full meta: invalid eta interval");
        return p;
    }
};

// Linear objectives over a hull attain their optimum at a retained point;
// ties resolve to the lexicographically smallest point.
inline std::size_t per_task_optimum(const Vec& type_counts, const PointSet& ps) {
    std::size_t best = 0;
    double best_val = dot(type_counts, ps.points[0]);
    for (std::size_t j = 1; j < ps.points.size(); ++j) {
        const double v = dot(type_counts, ps.points[j]);
        if (v < best_val - 1e-12 ||
            (v < best_val + 1e-12 && ps.points[j] < ps.points[best])) {
            best = j;
            best_val = v;
        }
    }
    return best;
}

struct OgdTaskResult {
    std::size_t optimum_index = 0;
    Vec z_star;
    Vec initial;               // start iterate actually used (in hull)
    double eta = 0.0;
    double expected_regret = 0.0;  // sum_i <1_k, zbar_i> - m-round optimum
    double realized_regret = 0.0;  // with the sampled schemes' losses
    std::vector<std::size_t> played;  // scheme indices
};

// One task of OGD over conv(nu(P)): decompose the iterate, sample a scheme,
// observe the adversary's type, and step z <- project(z - eta * e_k).
inline OgdTaskResult run_ogd_task(const SchemeSet& set, const std::vector<std::size_t>& types,
                                  Vec z1, double eta, CounterRng& alg_rng) {
    const PointSet& ps = set.losses;
    OgdTaskResult out;
    out.initial = z1;
    out.eta = eta;
    Vec z = std::move(z1);
    Vec counts(ps.dimension, 0.0);
    double expected_loss = 0.0, realized_loss = 0.0;
    for (std::size_t k : types) {
        auto dec = caratheodory(ps, z);
        const std::size_t draw = alg_rng.categorical(dec.weights);
        const std::size_t scheme_idx = dec.indices[draw];
        out.played.push_back(scheme_idx);
        expected_loss += z[k];
        realized_loss += ps.points[scheme_idx][k];
        counts[k] += 1.0;
        Vec target = z;
        target[k] -= eta;
        z = project(ps, target);
    }
    out.optimum_index = per_task_optimum(counts, ps);
    out.z_star = ps.points[out.optimum_index];
    const double opt_loss = dot(counts, out.z_star);
    out.expected_regret = expected_loss - opt_loss;
    out.realized_regret = realized_loss - opt_loss;
    return out;
}

struct ObpTaskData {
    SchemeSet set;
    std::vector<std::size_t> types;
};

struct ObpSeriesResult {
    std::vector<double> per_task_regret;           // expected-iterate, primary
    std::vector<double> per_task_regret_realized;
    std::vector<double> eta_trace;                 // full-meta arm only
    std::vector<double> warm_start_distance_sq;    // ||z* - z1||^2 per task
};

// Algorithm: per-task OGD with the running average of past optima as the
// next initialization (projected into the current hull) and epsilon-EWOO
// step-size updates from the recorded U~ parameters.
inline ObpSeriesResult run_full_meta(const std::vector<ObpTaskData>& tasks,
                                     const FullMetaParams& params, CounterRng alg_rng) {
    ObpSeriesResult out;
    std::vector<EwooLoss> history;
    Vec optima_sum;
    double eta = ewoo_update({}, params.beta, params.eta_lo, params.eta_hi);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        auto task_rng = alg_rng.split(t);
        Vec init;
        if (t == 0) {
            init = project(task.set.losses, Vec(task.set.losses.dimension, 0.0));
        } else {
            init = project(task.set.losses, (1.0 / t) * optima_sum);
        }
        auto res = run_ogd_task(task.set, task.types, init, eta, task_rng);
        out.per_task_regret.push_back(res.expected_regret);
        out.per_task_regret_realized.push_back(res.realized_regret);
        out.eta_trace.push_back(eta);
        const double dist_sq = norm2_sq(res.z_star - res.initial);
        out.warm_start_distance_sq.push_back(dist_sq);

        if (optima_sum.empty()) optima_sum.assign(res.z_star.size(), 0.0);
        optima_sum = optima_sum + res.z_star;
        history.push_back(EwooLoss{dist_sq / params.m, params.eps * params.eps,
                                   0.5 * static_cast<double>(params.m)});
        eta = ewoo_update(history, params.beta, params.eta_lo, params.eta_hi);
    }
    return out;
}

// Baseline arm: OGD restarted each task from the minimum-norm point with a
// fixed step size.
inline ObpSeriesResult run_full_baseline(const std::vector<ObpTaskData>& tasks, double eta,
                                         CounterRng alg_rng) {
    ObpSeriesResult out;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        auto task_rng = alg_rng.split(t);
        Vec init = project(task.set.losses, Vec(task.set.losses.dimension, 0.0));
        auto res = run_ogd_task(task.set, task.types, init, eta, task_rng);
        out.per_task_regret.push_back(res.expected_regret);
        out.per_task_regret_realized.push_back(res.realized_regret);
        out.eta_trace.push_back(eta);
        out.warm_start_distance_sq.push_back(norm2_sq(res.z_star - res.initial));
    }
    return out;
}

}  // namespace persuasion::obp

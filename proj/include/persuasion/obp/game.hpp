#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "persuasion/common.hpp"
#include "persuasion/dense.hpp"
#include "persuasion/geometry.hpp"
#include "persuasion/rng.hpp"

// Online Bayesian persuasion instances: priors, sender/receiver utilities
// over (outcome, action), direct signaling schemes over action-recommendation
// profiles, persuasiveness checks, and the grid enumeration that lifts
// retained schemes into the loss space.

namespace persuasion::obp {

struct ObpGame {
    std::size_t n_outcomes = 0;
    std::size_t n_actions = 0;
    std::size_t n_types = 0;
    Vec prior;                              // strictly positive, sums to 1
    Matrix sender_utility;                  // (outcome, action), values in [-1, 1]
    std::vector<Matrix> receiver_utility;   // one (outcome, action) table per type

    std::size_t n_signals() const {
        std::size_t s = 1;
        for (std::size_t k = 0; k < n_types; ++k) s *= n_actions;
        return s;
    }

    void validate() const {
        if (n_outcomes == 0 || n_actions == 0 || n_types == 0)
            throw ConfigError("obp game: empty outcome/action/type set");
        if (prior.size() != n_outcomes) throw ConfigError("obp game: prior size");
        double total = 0.0;
        for (double p : prior) {
            if (p <= 0.0) throw ConfigError("obp game: prior must be strictly positive");
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-12)
            throw ConfigError("obp game: prior must sum to 1");
        if (sender_utility.rows() != n_outcomes || sender_utility.cols() != n_actions)
            throw ConfigError("obp game: sender utility shape");
        if (receiver_utility.size() != n_types)
            throw ConfigError("obp game: receiver utility count");
        for (const auto& u : receiver_utility)
            if (u.rows() != n_outcomes || u.cols() != n_actions)
                throw ConfigError("obp game: receiver utility shape");
    }
};

// Direct scheme: one distribution over signal profiles per outcome. A signal
// profile packs one recommendation per type in base `n_actions`, type 0 in
// the lowest digit.
struct DirectScheme {
    std::vector<Vec> phi;  // phi[outcome][signal]

    void validate() const {
        for (const auto& row : phi) {
            double total = 0.0;
            for (double p : row) {
                if (p < 0.0) throw ConfigError("scheme: negative signal probability");
                total += p;
            }
            if (std::fabs(total - 1.0) > 1e-12)
                throw ConfigError("scheme: outcome row must sum to 1");
        }
    }
};

inline std::size_t signal_action(std::size_t signal, std::size_t type, std::size_t n_actions) {
    for (std::size_t k = 0; k < type; ++k) signal /= n_actions;
    return signal % n_actions;
}

inline double signal_marginal(const ObpGame& game, const DirectScheme& scheme, std::size_t s) {
    double m = 0.0;
    for (std::size_t w = 0; w < game.n_outcomes; ++w) m += game.prior[w] * scheme.phi[w][s];
    return m;
}

// Bayes posterior over outcomes given signal s. The signal must have
// marginal probability above 1e-12.
inline Vec posterior(const ObpGame& game, const DirectScheme& scheme, std::size_t s) {
    const double marginal = signal_marginal(game, scheme, s);
    if (marginal <= 1e-12) throw Error("posterior: zero-marginal signal");
    Vec rho(game.n_outcomes);
    for (std::size_t w = 0; w < game.n_outcomes; ++w)
        rho[w] = game.prior[w] * scheme.phi[w][s] / marginal;
    return rho;
}

struct BestResponse {
    std::vector<std::size_t> tied;  // receiver-optimal actions within 1e-10
    std::size_t pick = 0;           // sender-favored among them, lowest index on ties
};

inline BestResponse best_response(const ObpGame& game, std::size_t type, const Vec& rho) {
    const auto& ur = game.receiver_utility[type];
    Vec value(game.n_actions, 0.0);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < game.n_actions; ++a) {
        for (std::size_t w = 0; w < game.n_outcomes; ++w) value[a] += rho[w] * ur(w, a);
        best = std::max(best, value[a]);
    }
    BestResponse out;
    double sender_best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < game.n_actions; ++a) {
        if (value[a] >= best - 1e-10) {
            out.tied.push_back(a);
            double sv = 0.0;
            for (std::size_t w = 0; w < game.n_outcomes; ++w)
                sv += rho[w] * game.sender_utility(w, a);
            if (sv > sender_best + 1e-12) {
                sender_best = sv;
                out.pick = a;
            }
        }
    }
    return out;
}

// Aggregate persuasiveness: obeying the recommendation weakly dominates any
// fixed deviation for every type.
inline bool is_persuasive(const ObpGame& game, const DirectScheme& scheme, double tol = 1e-10) {
    const std::size_t ns = game.n_signals();
    for (std::size_t k = 0; k < game.n_types; ++k) {
        const auto& ur = game.receiver_utility[k];
        for (std::size_t dev = 0; dev < game.n_actions; ++dev) {
            double margin = 0.0;
            for (std::size_t s = 0; s < ns; ++s) {
                const std::size_t ak = signal_action(s, k, game.n_actions);
                for (std::size_t w = 0; w < game.n_outcomes; ++w)
                    margin += game.prior[w] * scheme.phi[w][s] * (ur(w, ak) - ur(w, dev));
            }
            if (margin < -tol) return false;
        }
    }
    return true;
}

// Sender expected utility against type k with the tie-broken best response
// to each positive-probability signal.
inline double sender_utility_for_type(const ObpGame& game, const DirectScheme& scheme,
                                      std::size_t type) {
    const std::size_t ns = game.n_signals();
    double value = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
        if (signal_marginal(game, scheme, s) <= 1e-12) continue;
        const Vec rho = posterior(game, scheme, s);
        const std::size_t a = best_response(game, type, rho).pick;
        for (std::size_t w = 0; w < game.n_outcomes; ++w)
            value += game.prior[w] * scheme.phi[w][s] * game.sender_utility(w, a);
    }
    return value;
}

// Coordinate-wise affine normalization of the loss space onto [0,1]^K,
// recorded so reports can be mapped back to raw loss units.
struct LossMap {
    Vec lo;
    Vec range;  // coordinates with no spread store range 1

    Vec normalize(const Vec& raw) const {
        Vec z(raw.size());
        for (std::size_t k = 0; k < raw.size(); ++k) z[k] = (raw[k] - lo[k]) / range[k];
        return z;
    }
    Vec denormalize(const Vec& z) const {
        Vec raw(z.size());
        for (std::size_t k = 0; k < z.size(); ++k) raw[k] = lo[k] + range[k] * z[k];
        return raw;
    }
};

// nu(P) for the grid-enumerated persuasive schemes: normalized loss points
// plus the inverse map back to playable schemes.
struct SchemeSet {
    PointSet losses;                    // in [0,1]^K after normalization
    std::vector<DirectScheme> schemes;  // schemes[j] realizes losses.points[j]
    LossMap map;
};

namespace detail {

inline void grid_distributions(std::size_t cells, std::size_t units, Vec prefix,
                               double step, std::vector<Vec>& out) {
    if (cells == 1) {
        prefix.push_back(units * step);
        out.push_back(std::move(prefix));
        return;
    }
    for (std::size_t u = 0; u <= units; ++u) {
        Vec next = prefix;
        next.push_back(u * step);
        grid_distributions(cells - 1, units - u, std::move(next), step, out);
    }
}

}  // namespace detail

// Enumerates every scheme whose outcome rows live on the probability grid
// with the given step, keeps the persuasive ones, and lifts them through
// nu(phi)_k = -u^s(phi, k) normalized into [0,1]^K. Duplicate loss points
// keep their first scheme. Throws when nothing survives the filter.
inline SchemeSet enumerate_schemes(const ObpGame& game, double grid_step) {
    game.validate();
    const double units_f = 1.0 / grid_step;
    const auto units = static_cast<std::size_t>(std::llround(units_f));
    if (std::fabs(units_f - static_cast<double>(units)) > 1e-9)
        throw ConfigError("enumerate_schemes: grid step must divide 1");

    std::vector<Vec> rows;
    detail::grid_distributions(game.n_signals(), units, {}, grid_step, rows);

    std::vector<DirectScheme> retained;
    std::vector<Vec> raw_losses;
    std::vector<std::size_t> cursor(game.n_outcomes, 0);
    while (true) {
        DirectScheme scheme;
        for (std::size_t w = 0; w < game.n_outcomes; ++w) scheme.phi.push_back(rows[cursor[w]]);
        if (is_persuasive(game, scheme)) {
            Vec loss(game.n_types);
            for (std::size_t k = 0; k < game.n_types; ++k)
                loss[k] = -sender_utility_for_type(game, scheme, k);
            raw_losses.push_back(std::move(loss));
            retained.push_back(std::move(scheme));
        }
        std::size_t w = 0;
        while (w < game.n_outcomes && ++cursor[w] == rows.size()) cursor[w++] = 0;
        if (w == game.n_outcomes) break;
    }
    if (retained.empty())
        throw Error("enumerate_schemes: no persuasive scheme on the grid");

    SchemeSet out;
    out.map.lo.assign(game.n_types, std::numeric_limits<double>::infinity());
    Vec hi(game.n_types, -std::numeric_limits<double>::infinity());
    for (const auto& l : raw_losses)
        for (std::size_t k = 0; k < game.n_types; ++k) {
            out.map.lo[k] = std::min(out.map.lo[k], l[k]);
            hi[k] = std::max(hi[k], l[k]);
        }
    out.map.range.resize(game.n_types);
    for (std::size_t k = 0; k < game.n_types; ++k) {
        const double r = hi[k] - out.map.lo[k];
        out.map.range[k] = r > 1e-12 ? r : 1.0;
    }

    out.losses.dimension = game.n_types;
    for (std::size_t j = 0; j < raw_losses.size(); ++j) {
        Vec z = out.map.normalize(raw_losses[j]);
        bool dup = false;
        for (const auto& seen : out.losses.points)
            if (norm_inf(seen - z) < 1e-12) { dup = true; break; }
        if (!dup) {
            out.losses.points.push_back(std::move(z));
            out.schemes.push_back(retained[j]);
        }
    }
    return out;
}

// One task of the stream: a game sampled in the tau1 box around the mean
// game plus the adversary's type sequence for its m rounds.
struct ObpTask {
    ObpGame game;
    std::vector<std::size_t> types;
};

struct ObpStreamConfig {
    ObpGame mean_game;
    double tau1 = 0.05;
    std::size_t horizon = 5;   // m
    bool cyclic_types = false; // default: i.i.d. uniform adversary
};

inline ObpTask sample_obp_task(const ObpStreamConfig& cfg, CounterRng& rng) {
    ObpTask task;
    task.game = cfg.mean_game;
    auto& g = task.game;
    const double tau = cfg.tau1;
    for (std::size_t w = 0; w < g.n_outcomes; ++w)
        g.prior[w] = std::max(1e-6, cfg.mean_game.prior[w] + rng.uniform(-tau, tau));
    double total = 0.0;
    for (double p : g.prior) total += p;
    for (double& p : g.prior) p /= total;
    auto sample_table = [&](const Matrix& mean) {
        Matrix t(mean.rows(), mean.cols());
        for (std::size_t w = 0; w < mean.rows(); ++w)
            for (std::size_t a = 0; a < mean.cols(); ++a)
                t(w, a) = std::clamp(mean(w, a) + rng.uniform(-tau, tau), -1.0, 1.0);
        return t;
    };
    g.sender_utility = sample_table(cfg.mean_game.sender_utility);
    for (std::size_t k = 0; k < g.n_types; ++k)
        g.receiver_utility[k] = sample_table(cfg.mean_game.receiver_utility[k]);
    g.validate();

    task.types.resize(cfg.horizon);
    for (std::size_t i = 0; i < cfg.horizon; ++i)
        task.types[i] = cfg.cyclic_types ? i % g.n_types : rng.next_index(g.n_types);
    return task;
}

}  // namespace persuasion::obp

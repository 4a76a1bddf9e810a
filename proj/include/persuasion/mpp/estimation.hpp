#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "persuasion/common.hpp"
#include "persuasion/dense.hpp"
#include "persuasion/mpp/model.hpp"

// Shrinkage meta-estimators for the MPP primitives. Every coordinate blends
// its within-task empirical mean with the across-task average of terminal
// task means, weighted by w_kappa(n) = n / (n + kappa); the confidence radii
// pair a within-task concentration term with an across-task term plus the
// task-dispersion allowance Psi. Full feedback conditions reward counters on
// (x, omega) and updates every action's sum on a visit; partial feedback
// conditions on (x, omega, a).

namespace persuasion::mpp {

// (w, w_bar): kappa = 0 collapses to the pure within-task estimator.
inline std::pair<double, double> shrink_weight(double kappa, double n) {
    if (kappa < 0.0) throw ConfigError("shrinkage: kappa must be nonnegative");
    if (kappa == 0.0) return {1.0, 0.0};
    return {n / (n + kappa), kappa / (n + kappa)};
}

// Generic scalar meta-estimate for one coordinate.
inline double shrink_blend(double kappa, double n, double within_mean, double across_mean) {
    if (kappa == 0.0) return within_mean;
    const auto [w, wbar] = shrink_weight(kappa, n);
    return w * within_mean + wbar * across_mean;
}

struct ShrinkageParams {
    double kappa_p = 0.0, kappa_mu = 0.0, kappa_us = 0.0, kappa_ur = 0.0;
    double psi = 0.0;

    // Widths give the variance proxies: indicators have within-task variance
    // 1/4, uniform-width rewards tau3^2/3, and the across-task variance is
    // tau2^2/3. Psi bounds the l1 deviation of any sampled task parameter
    // from its global mean, 2 * n_max * tau2 covering renormalization slack.
    static ShrinkageParams from_widths(const MppSpec& spec) {
        ShrinkageParams p;
        const double iota_sq = spec.tau2 * spec.tau2 / 3.0;
        const double sigma_sq = spec.tau3 * spec.tau3 / 3.0;
        const double cap = 1e12;
        const double kappa_ind = iota_sq > 0.0 ? std::min(0.25 / iota_sq, cap) : cap;
        const double kappa_rew = iota_sq > 0.0 ? std::min(sigma_sq / iota_sq, cap) : cap;
        p.kappa_p = spec.kappa_p >= 0.0 ? spec.kappa_p : kappa_ind;
        p.kappa_mu = spec.kappa_mu >= 0.0 ? spec.kappa_mu : kappa_ind;
        p.kappa_us = spec.kappa_us >= 0.0 ? spec.kappa_us : kappa_rew;
        p.kappa_ur = spec.kappa_ur >= 0.0 ? spec.kappa_ur : kappa_rew;
        std::size_t n_max = spec.n_outcomes;
        for (std::size_t k = 1; k < spec.layers.size(); ++k)
            n_max = std::max(n_max, spec.layers[k].size());
        p.psi = 2.0 * static_cast<double>(n_max) * spec.tau2;
        return p;
    }

    static ShrinkageParams baseline() { return ShrinkageParams{}; }  // all kappa = 0
};

struct ConfidenceRadii {
    // same shapes as the estimators they certify
    std::vector<std::vector<Vec>> eps;   // [s][w][a] transition l1 radius
    Vec zeta;                            // [s] prior l1 radius
    std::vector<std::vector<Vec>> xi_s;  // [s][w][a] sender reward radius
    std::vector<std::vector<Vec>> xi_r;  // [s][w][a] receiver reward radius
};

class EstimatorBank {
  public:
    EstimatorBank(const MppSpec& spec, Feedback mode, ShrinkageParams params)
        : spec_(&spec), mode_(mode), params_(params) {
        const std::size_t nd = spec.n_decision_states();
        auto cell_shape = [&](auto& field, auto init) {
            field.assign(nd, {});
            for (std::size_t s = 0; s < nd; ++s) {
                field[s].assign(spec.n_outcomes, {});
                for (std::size_t w = 0; w < spec.n_outcomes; ++w)
                    field[s][w].assign(spec.n_actions, init);
            }
        };
        cell_shape(trans_n_, 0.0);
        cell_shape(trans_m_, 0.0);
        trans_counts_.assign(nd, {});
        trans_g_.assign(nd, {});
        for (std::size_t s = 0; s < nd; ++s) {
            const std::size_t next = spec.layers[spec.layer_of(s) + 1].size();
            trans_counts_[s].assign(spec.n_outcomes,
                                    std::vector<Vec>(spec.n_actions, Vec(next, 0.0)));
            trans_g_[s] = trans_counts_[s];
        }
        prior_n_.assign(nd, 0.0);
        prior_m_.assign(nd, 0.0);
        prior_counts_.assign(nd, Vec(spec.n_outcomes, 0.0));
        prior_g_.assign(nd, Vec(spec.n_outcomes, 0.0));

        cell_shape(us_sum_, 0.0);
        cell_shape(ur_sum_, 0.0);
        cell_shape(us_g_, 0.0);
        cell_shape(ur_g_, 0.0);
        cell_shape(rew_n3_, 0.0);
        cell_shape(rew_m3_, 0.0);
        rew_n2_.assign(nd, Vec(spec.n_outcomes, 0.0));
        rew_m2_.assign(nd, Vec(spec.n_outcomes, 0.0));
    }

    Feedback feedback() const { return mode_; }
    const ShrinkageParams& params() const { return params_; }
    std::size_t completed_tasks() const { return completed_tasks_; }

    // Protocol feedback for one episode.
    void ingest(const EpisodeRecord& rec) {
        for (const auto& step : rec.steps) {
            const std::size_t s = step.state, w = step.outcome, a = step.action;
            const std::size_t local_next = step.next_state - spec_->layer_offset(spec_->layer_of(s) + 1);
            trans_n_[s][w][a] += 1.0;
            trans_counts_[s][w][a][local_next] += 1.0;
            prior_n_[s] += 1.0;
            prior_counts_[s][w] += 1.0;
            if (rec.feedback == Feedback::Full) {
                rew_n2_[s][w] += 1.0;
                for (std::size_t act = 0; act < spec_->n_actions; ++act) {
                    us_sum_[s][w][act] += step.sender_rewards[act];
                    ur_sum_[s][w][act] += step.receiver_rewards[act];
                }
            } else {
                rew_n3_[s][w][a] += 1.0;
                us_sum_[s][w][a] += step.sender_rewards[0];
                ur_sum_[s][w][a] += step.receiver_rewards[0];
            }
        }
    }

    // Folds the task's terminal means into the across-task aggregates and
    // resets the within-task counters.
    void end_task() {
        const std::size_t nd = spec_->n_decision_states();
        for (std::size_t s = 0; s < nd; ++s) {
            for (std::size_t w = 0; w < spec_->n_outcomes; ++w)
                for (std::size_t a = 0; a < spec_->n_actions; ++a) {
                    if (trans_n_[s][w][a] > 0.0) {
                        trans_m_[s][w][a] += 1.0;
                        for (std::size_t nx = 0; nx < trans_counts_[s][w][a].size(); ++nx)
                            trans_g_[s][w][a][nx] +=
                                trans_counts_[s][w][a][nx] / trans_n_[s][w][a];
                    }
                    trans_n_[s][w][a] = 0.0;
                    std::fill(trans_counts_[s][w][a].begin(), trans_counts_[s][w][a].end(), 0.0);
                }
            if (prior_n_[s] > 0.0) {
                prior_m_[s] += 1.0;
                for (std::size_t w = 0; w < spec_->n_outcomes; ++w)
                    prior_g_[s][w] += prior_counts_[s][w] / prior_n_[s];
            }
            prior_n_[s] = 0.0;
            std::fill(prior_counts_[s].begin(), prior_counts_[s].end(), 0.0);

            for (std::size_t w = 0; w < spec_->n_outcomes; ++w) {
                if (mode_ == Feedback::Full) {
                    if (rew_n2_[s][w] > 0.0) {
                        rew_m2_[s][w] += 1.0;
                        for (std::size_t a = 0; a < spec_->n_actions; ++a) {
                            us_g_[s][w][a] += us_sum_[s][w][a] / rew_n2_[s][w];
                            ur_g_[s][w][a] += ur_sum_[s][w][a] / rew_n2_[s][w];
                        }
                    }
                    rew_n2_[s][w] = 0.0;
                } else {
                    for (std::size_t a = 0; a < spec_->n_actions; ++a) {
                        if (rew_n3_[s][w][a] > 0.0) {
                            rew_m3_[s][w][a] += 1.0;
                            us_g_[s][w][a] += us_sum_[s][w][a] / rew_n3_[s][w][a];
                            ur_g_[s][w][a] += ur_sum_[s][w][a] / rew_n3_[s][w][a];
                        }
                        rew_n3_[s][w][a] = 0.0;
                    }
                }
                for (std::size_t a = 0; a < spec_->n_actions; ++a) {
                    us_sum_[s][w][a] = 0.0;
                    ur_sum_[s][w][a] = 0.0;
                }
            }
        }
        ++completed_tasks_;
    }

    // ----- meta-estimates -----

    Vec p_hat(std::size_t s, std::size_t w, std::size_t a) const {
        const double n = trans_n_[s][w][a];
        const double m_cnt = trans_m_[s][w][a];
        const std::size_t next = trans_counts_[s][w][a].size();
        Vec out(next, 0.0);
        for (std::size_t nx = 0; nx < next; ++nx) {
            const double within = trans_counts_[s][w][a][nx] / std::max(1.0, n);
            const double across = trans_g_[s][w][a][nx] / std::max(1.0, m_cnt);
            out[nx] = shrink_blend(params_.kappa_p, n, within, across);
        }
        return out;
    }

    Vec mu_hat(std::size_t s) const {
        const double n = prior_n_[s];
        const double m_cnt = prior_m_[s];
        Vec out(spec_->n_outcomes, 0.0);
        for (std::size_t w = 0; w < spec_->n_outcomes; ++w) {
            const double within = prior_counts_[s][w] / std::max(1.0, n);
            const double across = prior_g_[s][w] / std::max(1.0, m_cnt);
            out[w] = shrink_blend(params_.kappa_mu, n, within, across);
        }
        return out;
    }

    double reward_count(std::size_t s, std::size_t w, std::size_t a) const {
        return mode_ == Feedback::Full ? rew_n2_[s][w] : rew_n3_[s][w][a];
    }
    double reward_tasks(std::size_t s, std::size_t w, std::size_t a) const {
        return mode_ == Feedback::Full ? rew_m2_[s][w] : rew_m3_[s][w][a];
    }

    double us_hat(std::size_t s, std::size_t w, std::size_t a) const {
        const double n = reward_count(s, w, a);
        const double within = us_sum_[s][w][a] / std::max(1.0, n);
        const double across = us_g_[s][w][a] / std::max(1.0, reward_tasks(s, w, a));
        return shrink_blend(params_.kappa_us, n, within, across);
    }
    double ur_hat(std::size_t s, std::size_t w, std::size_t a) const {
        const double n = reward_count(s, w, a);
        const double within = ur_sum_[s][w][a] / std::max(1.0, n);
        const double across = ur_g_[s][w][a] / std::max(1.0, reward_tasks(s, w, a));
        return shrink_blend(params_.kappa_ur, n, within, across);
    }

    // ----- confidence radii -----

    ConfidenceRadii radii(double delta) const {
        if (delta <= 0.0 || delta >= 1.0) throw ConfigError("radii: delta must be in (0,1)");
        const auto& spec = *spec_;
        const double m = static_cast<double>(spec.m);
        const double T = static_cast<double>(spec.T);
        const double X = static_cast<double>(spec.n_states());
        const double W = static_cast<double>(spec.n_outcomes);
        const double A = static_cast<double>(spec.n_actions);
        const double psi = params_.psi;
        ConfidenceRadii out;
        const std::size_t nd = spec.n_decision_states();
        out.eps.assign(nd, std::vector<Vec>(spec.n_outcomes, Vec(spec.n_actions, 0.0)));
        out.xi_s = out.eps;
        out.xi_r = out.eps;
        out.zeta.assign(nd, 0.0);
        const double ln_p_within = std::log(m * X * W * A / delta);
        const double ln_p_across = std::log(X * W * A * T / delta);
        const double ln_mu_within = std::log(m * X / delta);
        const double ln_mu_across = std::log(X * T / delta);
        const bool full = mode_ == Feedback::Full;
        const double ln_r_within =
            full ? std::log(3.0 * m * X * W / delta) : std::log(3.0 * m * X * W * A / delta);
        const double ln_r_across =
            full ? std::log(3.0 * X * W * T / delta) : std::log(3.0 * X * W * A * T / delta);

        for (std::size_t s = 0; s < nd; ++s) {
            const double next = static_cast<double>(spec.layers[spec.layer_of(s) + 1].size());
            for (std::size_t w = 0; w < spec.n_outcomes; ++w) {
                for (std::size_t a = 0; a < spec.n_actions; ++a) {
                    {
                        const double n = trans_n_[s][w][a];
                        const auto [wk, wb] = shrink_weight(params_.kappa_p, n);
                        const double within =
                            std::sqrt(2.0 * next * ln_p_within / std::max(1.0, n));
                        const double across = std::sqrt(
                            2.0 * next * ln_p_across / std::max(1.0, trans_m_[s][w][a]));
                        out.eps[s][w][a] = wk * within + wb * (across + psi);
                    }
                    {
                        const double n = reward_count(s, w, a);
                        const double mt = reward_tasks(s, w, a);
                        const auto [wk, wb] = shrink_weight(params_.kappa_us, n);
                        const double within = std::sqrt(ln_r_within / std::max(1.0, n));
                        const double across = std::sqrt(ln_r_across / std::max(1.0, mt));
                        out.xi_s[s][w][a] = std::min(1.0, wk * within + wb * (across + psi));
                        const auto [wk_r, wb_r] = shrink_weight(params_.kappa_ur, n);
                        out.xi_r[s][w][a] =
                            std::min(1.0, wk_r * within + wb_r * (across + psi));
                    }
                }
            }
            const auto [wk, wb] = shrink_weight(params_.kappa_mu, prior_n_[s]);
            const double within = std::sqrt(2.0 * W * ln_mu_within / std::max(1.0, prior_n_[s]));
            const double across =
                std::sqrt(2.0 * W * ln_mu_across / std::max(1.0, prior_m_[s]));
            out.zeta[s] = wk * within + wb * (across + psi);
        }
        return out;
    }

    // exposed for the estimator test suite
    double transition_count(std::size_t s, std::size_t w, std::size_t a) const {
        return trans_n_[s][w][a];
    }
    double prior_count(std::size_t s) const { return prior_n_[s]; }
    double transition_tasks(std::size_t s, std::size_t w, std::size_t a) const {
        return trans_m_[s][w][a];
    }

  private:
    const MppSpec* spec_;
    Feedback mode_;
    ShrinkageParams params_;
    std::size_t completed_tasks_ = 0;

    // within-task state
    std::vector<std::vector<Vec>> trans_n_;                   // [s][w][a]
    std::vector<std::vector<std::vector<Vec>>> trans_counts_; // [s][w][a][next]
    Vec prior_n_;                                             // [s]
    std::vector<Vec> prior_counts_;                           // [s][w]
    std::vector<std::vector<Vec>> us_sum_, ur_sum_;           // [s][w][a]
    std::vector<Vec> rew_n2_;                                 // [s][w] (full feedback)
    std::vector<std::vector<Vec>> rew_n3_;                    // [s][w][a] (partial)

    // across-task aggregates (sums of terminal means and active-task counts)
    std::vector<std::vector<Vec>> trans_m_;                   // [s][w][a]
    std::vector<std::vector<std::vector<Vec>>> trans_g_;      // [s][w][a][next]
    Vec prior_m_;
    std::vector<Vec> prior_g_;
    std::vector<std::vector<Vec>> us_g_, ur_g_;
    std::vector<Vec> rew_m2_;
    std::vector<std::vector<Vec>> rew_m3_;
};

}  // namespace persuasion::mpp

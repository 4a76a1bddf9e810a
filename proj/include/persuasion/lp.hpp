#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "persuasion/common.hpp"
#include "persuasion/dense.hpp"

// Dense linear programming on a two-phase primal simplex tableau.
//
// Problem sizes in this library stay small (at most a few hundred cells), so
// the tableau is kept dense and pricing favors robustness: Dantzig's rule
// with an automatic switch to Bland's rule after 2*(n+m) degenerate pivots.
// Equality rows are handled internally as a pair of inequalities.

namespace persuasion {

enum class Relation { LessEq, Eq, GreaterEq };
enum class Sense { Minimize, Maximize };
enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpRow {
    Vec coeffs;
    Relation rel = Relation::LessEq;
    double rhs = 0.0;
};

struct LinearProgram {
    Sense sense = Sense::Minimize;
    Vec cost;                  // length n
    std::vector<LpRow> rows;
    Vec lower;                 // finite lower bounds, length n
    Vec upper;                 // entry may be +inf, length n

    static LinearProgram with_variables(std::size_t n) {
        LinearProgram lp;
        lp.cost.assign(n, 0.0);
        lp.lower.assign(n, 0.0);
        lp.upper.assign(n, std::numeric_limits<double>::infinity());
        return lp;
    }

    std::size_t num_vars() const { return cost.size(); }

    void add_row(Vec coeffs, Relation rel, double rhs) {
        rows.push_back(LpRow{std::move(coeffs), rel, rhs});
    }

    void validate() const {
        if (cost.empty()) throw ConfigError("lp: needs at least one variable");
        if (lower.size() != cost.size() || upper.size() != cost.size())
            throw ConfigError("lp: bound vectors must match variable count");
        for (const auto& r : rows) {
            if (r.coeffs.size() != cost.size())
                throw DimensionMismatch("lp: row length mismatch");
            if (!std::isfinite(r.rhs)) throw ConfigError("lp: rhs must be finite");
        }
        for (std::size_t j = 0; j < cost.size(); ++j) {
            if (!std::isfinite(lower[j])) throw ConfigError("lp: lower bounds must be finite");
            if (upper[j] < lower[j]) throw ConfigError("lp: empty variable bound");
        }
    }
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Vec x;                      // original variables
    double objective = 0.0;     // in the original sense
    // Multipliers per original row for the internal minimization problem;
    // <= rows carry nonpositive duals, >= rows nonnegative, = rows free.
    Vec row_duals;
    double dual_bound = 0.0;    // certified dual objective (internal min sense)
    bool weak_duality_ok = false;
    double max_row_violation = 0.0;
};

namespace detail {

class SimplexTableau {
  public:
    // min c.x  s.t.  A x <= b, x >= 0   (already standardized by the caller)
    SimplexTableau(const Matrix& a, const Vec& b, const Vec& c)
        : m_(a.rows()), n_(a.cols()) {
        n_total_ = n_ + m_;  // structural + slack
        art_base_ = n_total_;
        rows_.assign(m_, Vec());
        rhs_.resize(m_);
        basis_.resize(m_);
        row_sign_.assign(m_, 1.0);
        std::size_t n_art = 0;
        for (std::size_t i = 0; i < m_; ++i)
            if (b[i] < 0) ++n_art;
        n_art_ = n_art;
        std::size_t art = 0;
        for (std::size_t i = 0; i < m_; ++i) {
            Vec row(n_total_ + n_art_, 0.0);
            double s = (b[i] < 0) ? -1.0 : 1.0;
            row_sign_[i] = s;
            for (std::size_t j = 0; j < n_; ++j) row[j] = s * a(i, j);
            row[n_ + i] = s;  // slack
            rhs_[i] = s * b[i];
            if (s < 0) {
                row[art_base_ + art] = 1.0;
                basis_[i] = art_base_ + art;
                ++art;
            } else {
                basis_[i] = n_ + i;
            }
            rows_[i] = std::move(row);
        }
        cost_ = c;
    }

    LpStatus run() {
        if (n_art_ > 0) {
            // Phase 1: minimize the sum of artificials.
            obj_.assign(n_total_ + n_art_ + 1, 0.0);
            for (std::size_t j = 0; j < n_art_; ++j) obj_[art_base_ + j] = 1.0;
            price_out_basis();
            LpStatus st = iterate(/*phase1=*/true);
            if (st != LpStatus::Optimal) return LpStatus::Infeasible;
            if (obj_.back() < -kFeasTol) return LpStatus::Infeasible;
            purge_artificials();
        }
        // Phase 2. Artificial columns are barred from entering; any still
        // basic sit at level zero in redundant rows after the purge.
        obj_.assign(n_total_ + n_art_ + 1, 0.0);
        for (std::size_t j = 0; j < n_; ++j) obj_[j] = cost_[j];
        price_out_basis();
        return iterate(/*phase1=*/false);
    }

    Vec primal() const {
        Vec x(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) x[basis_[i]] = rhs_[i];
        return x;
    }

    // Multiplier y_i of internal row i (A_i x <= b_i orientation): the
    // reduced cost of slack i equals -y_i regardless of phase-1 negation,
    // because the slack column is negated together with the row.
    Vec duals() const {
        Vec y(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) y[i] = -obj_[n_ + i];
        return y;
    }

  private:
    static constexpr double kFeasTol = 1e-8;
    static constexpr double kPivotTol = 1e-12;
    static constexpr double kRatioTol = 1e-9;

    void price_out_basis() {
        double shift = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = obj_[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < rows_[i].size(); ++j) obj_[j] -= cb * rows_[i][j];
            shift -= cb * rhs_[i];
        }
        obj_.back() = shift;  // stores -objective value
    }

    void purge_artificials() {
        // Drive basic artificials out where possible; rows that stay
        // artificial at level ~0 are redundant and pivoting skips them.
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < art_base_) continue;
            std::size_t enter = n_total_;
            for (std::size_t j = 0; j < n_total_; ++j) {
                if (std::fabs(rows_[i][j]) > kRatioTol) { enter = j; break; }
            }
            if (enter < n_total_) pivot(i, enter);
        }
    }

    LpStatus iterate(bool phase1) {
        const std::size_t total_cols = n_total_ + n_art_;
        const std::size_t degen_switch = 2 * (n_ + m_);
        std::size_t degen_count = 0;
        bool bland = false;
        const std::size_t hard_cap = 2000 + 400 * (n_ + m_);
        for (std::size_t iter = 0; iter < hard_cap; ++iter) {
            // entering column; artificials never re-enter
            std::size_t enter = total_cols;
            if (!bland) {
                double best = -1e-9;
                for (std::size_t j = 0; j < art_base_; ++j)
                    if (obj_[j] < best) { best = obj_[j]; enter = j; }
            } else {
                for (std::size_t j = 0; j < art_base_; ++j)
                    if (obj_[j] < -1e-9) { enter = j; break; }
            }
            if (enter == total_cols) return LpStatus::Optimal;

            // ratio test; ties resolved by smallest basis index
            std::size_t leave = m_;
            double best_ratio = std::numeric_limits<double>::infinity();
            double best_pivot = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double aij = rows_[i][enter];
                if (aij <= kRatioTol) continue;
                const double ratio = rhs_[i] / aij;
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 &&
                     (leave == m_ || basis_[i] < basis_[leave]))) {
                    best_ratio = ratio;
                    leave = i;
                    best_pivot = aij;
                }
            }
            if (leave == m_) {
                // no eligible pivot above the ratio tolerance
                double max_entry = 0.0;
                for (std::size_t i = 0; i < m_; ++i)
                    max_entry = std::max(max_entry, rows_[i][enter]);
                if (max_entry > kPivotTol && !bland) { bland = true; continue; }
                if (max_entry > kPivotTol)
                    throw NumericalBreakdown("lp: pivot below 1e-12 persists under Bland's rule");
                return phase1 ? LpStatus::Infeasible : LpStatus::Unbounded;
            }
            if (std::fabs(best_pivot) < kPivotTol) {
                if (!bland) { bland = true; continue; }
                throw NumericalBreakdown("lp: pivot below 1e-12 persists under Bland's rule");
            }
            if (rhs_[leave] <= 1e-10 && ++degen_count >= degen_switch) bland = true;
            pivot(leave, enter);
        }
        throw NumericalBreakdown("lp: iteration cap exceeded");
    }

    void pivot(std::size_t r, std::size_t col) {
        const double piv = rows_[r][col];
        const std::size_t width = rows_[r].size();
        for (std::size_t j = 0; j < width; ++j) rows_[r][j] /= piv;
        rhs_[r] /= piv;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            const double f = rows_[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) rows_[i][j] -= f * rows_[r][j];
            rhs_[i] -= f * rhs_[r];
            if (std::fabs(rhs_[i]) < 1e-13) rhs_[i] = 0.0;
        }
        const double f = obj_[col];
        if (f != 0.0) {
            for (std::size_t j = 0; j < width; ++j) obj_[j] -= f * rows_[r][j];
            obj_.back() -= f * rhs_[r];
        }
        basis_[r] = col;
    }

    std::size_t m_, n_, n_total_ = 0, art_base_ = 0, n_art_ = 0;
    std::vector<Vec> rows_;
    Vec rhs_;
    Vec cost_;
    Vec obj_;  // reduced-cost row; obj_.back() = -(current objective)
    std::vector<std::size_t> basis_;
    Vec row_sign_;
};

}  // namespace detail

// Solves the LP. Deterministic given identical input. Throws
// NumericalBreakdown when pivots below 1e-12 persist after the Bland
// fallback; otherwise reports optimal/infeasible/unbounded status.
inline LpSolution solve(const LinearProgram& lp) {
    lp.validate();
    const std::size_t n = lp.num_vars();
    const bool maximize = lp.sense == Sense::Maximize;

    // Standard form: shift x' = x - lower, split equalities, negate >= rows,
    // append finite upper bounds as rows.
    struct RowRef { std::size_t orig; double sign; };
    std::vector<RowRef> refs;
    std::vector<Vec> arows;
    Vec brhs;
    auto push = [&](const Vec& coeffs, double rhs, std::size_t orig, double sign) {
        Vec r = coeffs;
        double b = rhs;
        for (std::size_t j = 0; j < n; ++j) b -= coeffs[j] * lp.lower[j];
        if (sign < 0) {
            for (double& v : r) v = -v;
            b = -b;
        }
        arows.push_back(std::move(r));
        brhs.push_back(b);
        refs.push_back(RowRef{orig, sign});
    };
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
        const auto& row = lp.rows[i];
        switch (row.rel) {
            case Relation::LessEq: push(row.coeffs, row.rhs, i, +1.0); break;
            case Relation::GreaterEq: push(row.coeffs, row.rhs, i, -1.0); break;
            case Relation::Eq:
                push(row.coeffs, row.rhs, i, +1.0);
                push(row.coeffs, row.rhs, i, -1.0);
                break;
        }
    }
    const std::size_t bound_row_marker = lp.rows.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isfinite(lp.upper[j])) {
            Vec r(n, 0.0);
            r[j] = 1.0;
            arows.push_back(std::move(r));
            brhs.push_back(lp.upper[j] - lp.lower[j]);
            refs.push_back(RowRef{bound_row_marker, +1.0});
        }
    }

    const std::size_t m = arows.size();
    Matrix a(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = arows[i][j];
    Vec c(n);
    for (std::size_t j = 0; j < n; ++j) c[j] = maximize ? -lp.cost[j] : lp.cost[j];

    detail::SimplexTableau tab(a, brhs, c);
    LpSolution sol;
    sol.status = tab.run();
    if (sol.status != LpStatus::Optimal) return sol;

    Vec xs = tab.primal();
    sol.x.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) sol.x[j] = xs[j] + lp.lower[j];
    double cx = dot(lp.cost, sol.x);
    sol.objective = cx;

    // feasibility audit at 1e-8
    double viol = 0.0;
    for (const auto& row : lp.rows) {
        const double ax = dot(row.coeffs, sol.x);
        switch (row.rel) {
            case Relation::LessEq: viol = std::max(viol, ax - row.rhs); break;
            case Relation::GreaterEq: viol = std::max(viol, row.rhs - ax); break;
            case Relation::Eq: viol = std::max(viol, std::fabs(ax - row.rhs)); break;
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        viol = std::max(viol, lp.lower[j] - sol.x[j]);
        if (std::isfinite(lp.upper[j])) viol = std::max(viol, sol.x[j] - lp.upper[j]);
    }
    sol.max_row_violation = viol;
    if (viol > 1e-8)
        throw NumericalBreakdown("lp: optimal solution violates feasibility tolerance");

    // Weak-duality audit on the internal min problem: the dual bound from the
    // final multipliers must bracket the primal value within 1e-6.
    Vec y = tab.duals();
    sol.row_duals.assign(lp.rows.size(), 0.0);
    double dual_obj = dot(c, lp.lower);  // objective shift from x = x' + lower
    for (std::size_t i = 0; i < m; ++i) {
        dual_obj += y[i] * brhs[i];
        if (refs[i].orig < lp.rows.size())
            sol.row_duals[refs[i].orig] += refs[i].sign * y[i];
    }
    const double internal_primal = dot(c, sol.x);
    sol.dual_bound = dual_obj;
    sol.weak_duality_ok =
        std::fabs(internal_primal - dual_obj) <= 1e-6 * (1.0 + std::fabs(internal_primal));
    return sol;
}

}  // namespace persuasion

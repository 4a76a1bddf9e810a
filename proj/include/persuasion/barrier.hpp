#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "persuasion/common.hpp"
#include "persuasion/dense.hpp"
#include "persuasion/geometry.hpp"
#include "persuasion/lp.hpp"
#include "persuasion/rng.hpp"

// Self-concordant log-barriers over the two domain kinds the learners use:
// H-represented polytopes and the unit Euclidean ball. Provides values,
// gradients and Hessians, Minkowski gauges, b-restricted sets, analytic
// centers, and Dikin-ellipsoid axis sampling.

namespace persuasion {

struct BarrierEval {
    double value = 0.0;
    Vec gradient;
    Matrix hessian;
};

struct DikinSample {
    Vec point;        // z + sign * v^{-1/2} * axis
    std::size_t axis_index = 0;
    double sign = 1.0;
    double eigenvalue = 0.0;
    Vec axis;         // unit eigenvector
};

// Affine map used when ball geometry is requested for a general hull:
// center at the vertex centroid, radius 1.05 times the max vertex distance,
// so every hull point lands strictly inside the unit ball. Linear losses
// transform as <l, z> = <l, c> + r <l, w>; argmins are preserved and regret
// values convert back through the scale.
struct BallNormalization {
    Vec center;
    double radius = 1.0;

    static BallNormalization of(const PointSet& ps) {
        BallNormalization m;
        m.center.assign(ps.dimension, 0.0);
        for (const auto& p : ps.points) axpy(1.0 / ps.points.size(), p, m.center);
        double maxd = 0.0;
        for (const auto& p : ps.points) maxd = std::max(maxd, norm2(p - m.center));
        m.radius = 1.05 * std::max(maxd, 1e-12);
        return m;
    }

    Vec to_ball(const Vec& z) const { return (1.0 / radius) * (z - center); }
    Vec from_ball(const Vec& w) const { return center + radius * w; }
    Vec loss_to_ball(const Vec& loss) const { return radius * loss; }
};

class BarrierDomain {
  public:
    enum class Kind { Polytope, UnitBall };

    static BarrierDomain unit_ball(std::size_t dim) {
        BarrierDomain d;
        d.kind_ = Kind::UnitBall;
        d.dim_ = dim;
        d.theta_ = 1.0;
        d.center_.assign(dim, 0.0);
        return d;
    }

    // The facets must carry unit normals (facets_2d emits them that way);
    // box_lo/box_hi is any finite box containing the polytope, used to seed
    // the interior-point search. Throws when the interior is empty.
    static BarrierDomain polytope(std::vector<Facet> facets, Vec box_lo, Vec box_hi) {
        BarrierDomain d;
        d.kind_ = Kind::Polytope;
        d.dim_ = box_lo.size();
        for (auto& f : facets) {
            const double len = norm2(f.normal);
            if (len < 1e-14) throw ConfigError("barrier: zero facet normal");
            for (double& v : f.normal) v /= len;
            f.rhs /= len;
        }
        d.facets_ = std::move(facets);
        d.theta_ = static_cast<double>(d.facets_.size());
        d.center_ = d.solve_analytic_center(box_lo, box_hi);
        return d;
    }

    static BarrierDomain from_points_2d(const PointSet& ps) {
        auto facets = facets_2d(ps);
        Vec lo = ps.points[0], hi = ps.points[0];
        for (const auto& p : ps.points)
            for (std::size_t d = 0; d < 2; ++d) {
                lo[d] = std::min(lo[d], p[d]);
                hi[d] = std::max(hi[d], p[d]);
            }
        return polytope(std::move(facets), std::move(lo), std::move(hi));
    }

    // 1-D interval domain [lo, hi]; used when a task hull is a segment.
    static BarrierDomain interval(double lo, double hi) {
        if (hi - lo < 1e-12) throw DegenerateHull("barrier: empty interval");
        std::vector<Facet> fs(2);
        fs[0].normal = {1.0};
        fs[0].rhs = hi;
        fs[1].normal = {-1.0};
        fs[1].rhs = -lo;
        return polytope(std::move(fs), {lo}, {hi});
    }

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    double self_concordance() const { return theta_; }
    const Vec& analytic_center() const { return center_; }
    const std::vector<Facet>& facets() const {
        return facets_;
    }

    // Smallest slack (polytope) or boundary distance surrogate 1 - |z|
    // (ball); positive iff strictly interior.
    double min_slack(const Vec& z) const {
        if (kind_ == Kind::UnitBall) return 1.0 - norm2(z);
        double s = std::numeric_limits<double>::infinity();
        for (const auto& f : facets_) s = std::min(s, f.rhs - dot(f.normal, z));
        return s;
    }

    bool is_interior(const Vec& z, double tol = 1e-12) const { return min_slack(z) > tol; }

    BarrierEval eval(const Vec& z) const {
        if (z.size() != dim_) throw DimensionMismatch("barrier: point dimension");
        BarrierEval out;
        out.gradient.assign(dim_, 0.0);
        out.hessian = Matrix(dim_, dim_);
        if (kind_ == Kind::UnitBall) {
            const double s = 1.0 - norm2_sq(z);
            if (norm2(z) >= 1.0 - 1e-12) throw BoundaryError("barrier: point on ball boundary");
            out.value = -std::log(s);
            out.gradient = (2.0 / s) * z;
            out.hessian = Matrix::identity(dim_, 2.0 / s);
            out.hessian.add_outer(4.0 / (s * s), z);
            return out;
        }
        out.value = 0.0;
        for (const auto& f : facets_) {
            const double slack = f.rhs - dot(f.normal, z);
            if (slack <= 1e-12) throw BoundaryError("barrier: facet slack below 1e-12");
            out.value -= std::log(slack);
            axpy(1.0 / slack, f.normal, out.gradient);
            out.hessian.add_outer(1.0 / (slack * slack), f.normal);
        }
        return out;
    }

    double bregman(const Vec& u, const Vec& z) const {
        const auto at_z = eval(z);
        const auto at_u = eval(u);
        return at_u.value - at_z.value - dot(at_z.gradient, u - z);
    }

    // Minkowski gauge pi_anchor(z): smallest lambda > 0 such that
    // anchor + (z - anchor)/lambda stays in the domain; 0 at z = anchor.
    double gauge(const Vec& anchor, const Vec& z) const {
        const Vec d = z - anchor;
        const double dn = norm2(d);
        if (dn < 1e-15) return 0.0;
        if (kind_ == Kind::UnitBall) {
            // solve |anchor + t d| = 1 for t > 0; gauge = 1/t
            const double ad = dot(anchor, d);
            const double a2 = norm2_sq(anchor);
            const double d2 = norm2_sq(d);
            const double t = (-ad + std::sqrt(ad * ad + d2 * (1.0 - a2))) / d2;
            return 1.0 / t;
        }
        double g = 0.0;
        for (const auto& f : facets_) {
            const double denom = f.rhs - dot(f.normal, anchor);
            const double num = dot(f.normal, d);
            if (num > 0.0) g = std::max(g, num / denom);
        }
        return g;
    }

    bool in_restricted(const Vec& anchor, double b, const Vec& z, double tol = 1e-10) const {
        return gauge(anchor, z) <= 1.0 / (1.0 + b) + tol;
    }

    // H-representation of the b-restricted set {pi_anchor(z) <= 1/(1+b)}
    // (polytope domains): a.z <= (rhs + b * a.anchor) / (1 + b).
    std::vector<Facet> restricted_facets(const Vec& anchor, double b) const {
        if (kind_ != Kind::Polytope)
            throw ConfigError("barrier: restricted facets need a polytope domain");
        std::vector<Facet> out = facets_;
        for (auto& f : out) f.rhs = (f.rhs + b * dot(f.normal, anchor)) / (1.0 + b);
        return out;
    }

    // One Dikin-ellipsoid axis step: eigendecompose the Hessian at z, pick a
    // uniformly random axis and sign, move one unit in the local norm.
    DikinSample dikin_sample(const Vec& z, CounterRng& rng) const {
        const auto ev = eval(z);
        const auto eig = jacobi_eigen(ev.hessian);
        for (double v : eig.values)
            if (v <= 0.0)
                throw NumericalBreakdown("barrier: Hessian not positive definite");
        DikinSample s;
        s.axis_index = rng.next_index(dim_);
        s.sign = rng.next_sign() ? 1.0 : -1.0;
        s.eigenvalue = eig.values[s.axis_index];
        s.axis = eig.vectors[s.axis_index];
        s.point = z;
        axpy(s.sign / std::sqrt(s.eigenvalue), s.axis, s.point);
        return s;
    }

    // Local norms induced by the Hessian at z.
    double local_norm(const Vec& z, const Vec& h) const {
        const auto ev = eval(z);
        return std::sqrt(dot(h, ev.hessian.mul(h)));
    }

    double dual_local_norm(const Vec& z, const Vec& g) const {
        const auto ev = eval(z);
        auto sol = gauss_solve(ev.hessian, g);
        if (!sol) throw NumericalBreakdown("barrier: singular Hessian");
        return std::sqrt(std::max(0.0, dot(g, *sol)));
    }

  private:
    Vec solve_analytic_center(const Vec& box_lo, const Vec& box_hi) const {
        // Chebyshev center LP gives a strictly interior start.
        auto lp = LinearProgram::with_variables(dim_ + 1);
        double diam = 1.0;
        for (std::size_t d = 0; d < dim_; ++d) diam = std::max(diam, box_hi[d] - box_lo[d]);
        for (std::size_t d = 0; d < dim_; ++d) {
            lp.lower[d] = box_lo[d] - 1.0;
            lp.upper[d] = box_hi[d] + 1.0;
        }
        lp.lower[dim_] = 0.0;
        lp.upper[dim_] = 2.0 * diam;
        lp.sense = Sense::Maximize;
        lp.cost[dim_] = 1.0;
        for (const auto& f : facets_) {
            Vec row = f.normal;
            row.push_back(1.0);  // unit normals
            lp.add_row(row, Relation::LessEq, f.rhs);
        }
        auto sol = solve(lp);
        if (sol.status != LpStatus::Optimal || sol.x[dim_] <= 1e-10)
            throw DegenerateHull("barrier: polytope has empty interior");
        Vec z(sol.x.begin(), sol.x.begin() + dim_);

        // Damped Newton on the barrier.
        for (int it = 0; it < 200; ++it) {
            const auto ev = eval(z);
            auto step = gauss_solve(ev.hessian, ev.gradient);
            if (!step) throw NumericalBreakdown("barrier: singular Hessian at center solve");
            const double decrement = dot(ev.gradient, *step);
            if (decrement <= 1e-18) break;
            double t = 1.0;
            bool moved = false;
            for (int half = 0; half < 60; ++half) {
                Vec cand = z;
                axpy(-t, *step, cand);
                if (is_interior(cand) && eval(cand).value <= ev.value - 0.25 * t * decrement) {
                    z = std::move(cand);
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved) break;
        }
        return z;
    }

    Kind kind_ = Kind::UnitBall;
    std::size_t dim_ = 0;
    double theta_ = 1.0;
    std::vector<Facet> facets_;
    Vec center_;
};

}  // namespace persuasion

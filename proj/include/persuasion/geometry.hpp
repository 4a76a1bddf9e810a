#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "persuasion/common.hpp"
#include "persuasion/dense.hpp"
#include "persuasion/lp.hpp"

// Convex geometry over finite point sets in R^K: hull membership with
// certificates, Euclidean projection via Wolfe's minimum-norm-point
// algorithm, Caratheodory decompositions with support <= K+1, and convex
// hull facets for K = 2.

namespace persuasion {

struct PointSet {
    std::size_t dimension = 0;
    std::vector<Vec> points;

    void validate() const {
        if (points.empty()) throw ConfigError("point set: must be nonempty");
        for (const auto& p : points) {
            if (p.size() != dimension)
                throw DimensionMismatch("point set: inconsistent dimension");
            for (double v : p)
                if (!std::isfinite(v)) throw ConfigError("point set: non-finite coordinate");
        }
    }

    double coordinate_scale() const {
        double s = 1.0;
        for (const auto& p : points)
            for (double v : p) s = std::max(s, std::fabs(v));
        return s;
    }
};

struct CaratheodoryDecomposition {
    std::vector<std::size_t> indices;  // into the point set, size <= K+1
    Vec weights;                       // same length, nonnegative, sums to 1

    Vec reconstruct(const PointSet& ps) const {
        Vec z(ps.dimension, 0.0);
        for (std::size_t j = 0; j < indices.size(); ++j)
            axpy(weights[j], ps.points[indices[j]], z);
        return z;
    }
};

struct SeparatingHyperplane {
    Vec normal;       // g
    double offset;    // c with <g, p> <= c for hull points, <g, z> > c for the query
};

struct MembershipResult {
    bool inside = false;
    CaratheodoryDecomposition weights;           // set when inside
    std::optional<SeparatingHyperplane> separator;  // set when outside
};

namespace detail {

// Wolfe's minimum-norm-point algorithm over conv{p_1..p_n}. Returns the
// minimizer x and convex weights over an affinely independent corral, so
// the support size never exceeds dim+1. Major-cycle cap 10*n per the
// tolerance contract of the projection operation.
struct WolfeResult {
    Vec point;
    std::vector<std::size_t> support;
    Vec weights;
};

inline WolfeResult wolfe_min_norm(const std::vector<Vec>& pts) {
    const std::size_t n = pts.size();
    const std::size_t dim = pts[0].size();
    double z2 = 1.0;
    for (const auto& p : pts) z2 = std::max(z2, norm2_sq(p));
    const double eps_gap = 1e-14 * z2;

    // affine minimizer over the corral: min ||sum a_j p_j||, sum a_j = 1
    auto affine_minimizer = [&](const std::vector<std::size_t>& s) -> std::optional<Vec> {
        const std::size_t k = s.size();
        Matrix sys(k + 1, k + 1);
        Vec rhs(k + 1, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) sys(i, j) = dot(pts[s[i]], pts[s[j]]);
            sys(i, k) = 1.0;
            sys(k, i) = 1.0;
        }
        rhs[k] = 1.0;
        auto sol = gauss_solve(sys, rhs, 1e-12 * z2);
        if (!sol) return std::nullopt;
        sol->pop_back();
        return sol;
    };

    std::size_t start = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (norm2_sq(pts[j]) < norm2_sq(pts[start])) start = j;

    std::vector<std::size_t> support{start};
    Vec lambda{1.0};
    Vec x = pts[start];

    const std::size_t max_major = 10 * std::max<std::size_t>(n, 4);
    for (std::size_t major = 0; major < max_major; ++major) {
        std::size_t best = 0;
        double best_ip = dot(x, pts[0]);
        for (std::size_t j = 1; j < n; ++j) {
            const double ip = dot(x, pts[j]);
            if (ip < best_ip - 1e-15) { best = j; best_ip = ip; }
        }
        if (best_ip >= norm2_sq(x) - eps_gap) break;
        if (std::find(support.begin(), support.end(), best) != support.end()) break;

        support.push_back(best);
        lambda.push_back(0.0);

        for (std::size_t minor = 0; minor < 2 * (dim + 2); ++minor) {
            auto alpha = affine_minimizer(support);
            if (!alpha) {
                // affinely dependent corral: drop the smallest-weight member
                std::size_t drop = 0;
                for (std::size_t j = 1; j < support.size(); ++j)
                    if (lambda[j] < lambda[drop]) drop = j;
                support.erase(support.begin() + drop);
                lambda.erase(lambda.begin() + drop);
                continue;
            }
            bool interior = true;
            for (double a : *alpha)
                if (a <= 1e-12) { interior = false; break; }
            if (interior) {
                lambda = *alpha;
                break;
            }
            // step toward alpha until the first weight hits zero
            double theta = 1.0;
            std::size_t hit = support.size();
            for (std::size_t j = 0; j < support.size(); ++j) {
                if ((*alpha)[j] < lambda[j]) {
                    const double t = lambda[j] / (lambda[j] - (*alpha)[j]);
                    if (t < theta) { theta = t; hit = j; }
                }
            }
            for (std::size_t j = 0; j < support.size(); ++j)
                lambda[j] = (1.0 - theta) * lambda[j] + theta * (*alpha)[j];
            if (hit < support.size()) {
                support.erase(support.begin() + hit);
                lambda.erase(lambda.begin() + hit);
            } else {
                // numerical stall: clamp tiny negatives and stop the minor loop
                for (double& l : lambda) l = std::max(l, 0.0);
                break;
            }
        }

        double total = 0.0;
        for (double l : lambda) total += l;
        for (double& l : lambda) l /= total;
        Vec nx(dim, 0.0);
        for (std::size_t j = 0; j < support.size(); ++j) axpy(lambda[j], pts[support[j]], nx);
        x = std::move(nx);
    }

    // polish: re-solve the affine system on the final corral when interior
    if (support.size() > 1) {
        auto alpha = affine_minimizer(support);
        if (alpha) {
            bool ok = true;
            for (double a : *alpha)
                if (a < -1e-10) { ok = false; break; }
            if (ok) {
                double total = 0.0;
                for (double& a : *alpha) {
                    a = std::max(a, 0.0);
                    total += a;
                }
                for (double& a : *alpha) a /= total;
                Vec nx(dim, 0.0);
                for (std::size_t j = 0; j < support.size(); ++j)
                    axpy((*alpha)[j], pts[support[j]], nx);
                if (norm2_sq(nx) <= norm2_sq(x) + 1e-18) {
                    lambda = *alpha;
                    x = std::move(nx);
                }
            }
        }
    }

    WolfeResult out;
    out.point = std::move(x);
    out.support = std::move(support);
    out.weights = std::move(lambda);
    return out;
}

inline WolfeResult wolfe_translated(const PointSet& ps, const Vec& target) {
    std::vector<Vec> shifted(ps.points.size());
    for (std::size_t j = 0; j < ps.points.size(); ++j) shifted[j] = ps.points[j] - target;
    return wolfe_min_norm(shifted);
}

}  // namespace detail

// Hull membership via the feasibility LP {lambda >= 0, sum lambda = 1,
// sum lambda z_j = z} at tolerance 1e-8. When the point is outside, the
// certificate hyperplane is built from the minimum-norm vector of the
// translated hull, which witnesses the separation directly.
inline MembershipResult membership(const PointSet& ps, const Vec& z) {
    ps.validate();
    if (z.size() != ps.dimension) throw DimensionMismatch("membership: dimension mismatch");
    const std::size_t n = ps.points.size();
    auto lp = LinearProgram::with_variables(n);
    Vec ones(n, 1.0);
    lp.add_row(ones, Relation::Eq, 1.0);
    for (std::size_t d = 0; d < ps.dimension; ++d) {
        Vec row(n);
        for (std::size_t j = 0; j < n; ++j) row[j] = ps.points[j][d];
        lp.add_row(row, Relation::Eq, z[d]);
    }
    auto sol = solve(lp);

    MembershipResult out;
    if (sol.status == LpStatus::Optimal) {
        out.inside = true;
        for (std::size_t j = 0; j < n; ++j) {
            if (sol.x[j] > 1e-12) {
                out.weights.indices.push_back(j);
                out.weights.weights.push_back(sol.x[j]);
            }
        }
        return out;
    }
    out.inside = false;
    auto w = detail::wolfe_translated(ps, z);
    // hull - z lies in the halfspace <w.point, .> >= ||w.point||^2
    SeparatingHyperplane sep;
    sep.normal = -1.0 * w.point;
    double max_hull = dot(sep.normal, ps.points[0]);
    for (const auto& p : ps.points) max_hull = std::max(max_hull, dot(sep.normal, p));
    sep.offset = max_hull + 0.5 * norm2_sq(w.point);
    out.separator = sep;
    return out;
}

// Euclidean projection of x onto conv(ps) by Wolfe's algorithm on the
// translated set, tolerance 1e-9.
inline Vec project(const PointSet& ps, const Vec& x) {
    ps.validate();
    if (x.size() != ps.dimension) throw DimensionMismatch("project: dimension mismatch");
    auto w = detail::wolfe_translated(ps, x);
    return x + w.point;
}

// Caratheodory decomposition of a hull point: at most K+1 points with
// convex weights reconstructing z to l_inf 1e-9. Throws InfeasibleTarget
// when z is not in the hull at that tolerance.
inline CaratheodoryDecomposition caratheodory(const PointSet& ps, const Vec& z) {
    ps.validate();
    if (z.size() != ps.dimension) throw DimensionMismatch("caratheodory: dimension mismatch");
    auto w = detail::wolfe_translated(ps, z);
    CaratheodoryDecomposition dec;
    dec.indices = w.support;
    dec.weights = w.weights;
    // drop zero weights, renormalize
    CaratheodoryDecomposition pruned;
    double total = 0.0;
    for (std::size_t j = 0; j < dec.indices.size(); ++j) {
        if (dec.weights[j] > 1e-14) {
            pruned.indices.push_back(dec.indices[j]);
            pruned.weights.push_back(dec.weights[j]);
            total += dec.weights[j];
        }
    }
    for (double& l : pruned.weights) l /= total;
    const Vec rec = pruned.reconstruct(ps);
    if (norm_inf(rec - z) > 1e-9 * std::max(1.0, ps.coordinate_scale()))
        throw InfeasibleTarget("caratheodory: target outside the hull");
    return pruned;
}

// Orthonormal coordinates for the affine hull of a point set. Task hulls can
// be lower-dimensional than the ambient loss space (all loss vectors on a
// line, for instance), and barrier methods need full-dimensional domains, so
// learners work in frame coordinates and map back for scheme lookups.
struct AffineFrame {
    Vec origin;                  // centroid of the defining points
    std::vector<Vec> basis;      // orthonormal, one entry per reduced axis

    std::size_t ambient_dim() const { return origin.size(); }
    std::size_t reduced_dim() const { return basis.size(); }

    Vec to_local(const Vec& z) const {
        Vec w(basis.size(), 0.0);
        const Vec d = z - origin;
        for (std::size_t j = 0; j < basis.size(); ++j) w[j] = dot(basis[j], d);
        return w;
    }

    Vec to_ambient(const Vec& w) const {
        Vec z = origin;
        for (std::size_t j = 0; j < basis.size(); ++j) axpy(w[j], basis[j], z);
        return z;
    }

    // Linear-loss coefficients in frame coordinates: <l, z> = <l, origin> +
    // <project(l), w>.
    Vec project_loss(const Vec& loss) const {
        Vec g(basis.size(), 0.0);
        for (std::size_t j = 0; j < basis.size(); ++j) g[j] = dot(basis[j], loss);
        return g;
    }

    static AffineFrame of(const PointSet& ps, double rank_tol = 1e-9) {
        ps.validate();
        AffineFrame f;
        f.origin.assign(ps.dimension, 0.0);
        for (const auto& p : ps.points) axpy(1.0 / ps.points.size(), p, f.origin);
        const double scale = std::max(1.0, ps.coordinate_scale());
        for (const auto& p : ps.points) {
            Vec r = p - f.origin;
            for (const auto& b : f.basis) axpy(-dot(b, r), b, r);
            const double len = norm2(r);
            if (len > rank_tol * scale) {
                for (double& v : r) v /= len;
                f.basis.push_back(std::move(r));
                if (f.basis.size() == ps.dimension) break;
            }
        }
        return f;
    }

    PointSet reduce(const PointSet& ps) const {
        PointSet out;
        out.dimension = reduced_dim();
        out.points.reserve(ps.points.size());
        for (const auto& p : ps.points) out.points.push_back(to_local(p));
        return out;
    }
};

struct Facet {
    Vec normal;   // a
    double rhs;   // b, interior satisfies a.z <= b
};

// Convex hull facets for K = 2 via Andrew's monotone chain. Facets are
// oriented with the interior on the <= side; duplicate points are merged.
// Throws DegenerateHull when all points are collinear.
inline std::vector<Facet> facets_2d(const PointSet& ps) {
    ps.validate();
    if (ps.dimension != 2) throw DimensionMismatch("facets_2d: requires K = 2");
    std::vector<Vec> pts = ps.points;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec& a, const Vec& b) {
                              return std::fabs(a[0] - b[0]) < 1e-12 &&
                                     std::fabs(a[1] - b[1]) < 1e-12;
                          }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) throw DegenerateHull("facets_2d: fewer than 3 distinct points");

    auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<Vec> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-12) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-12) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);  // last point repeats the first
    if (hull.size() < 3) throw DegenerateHull("facets_2d: collinear point set");

    // counter-clockwise hull: outward normal of edge p->q is (qy-py, px-qx)
    std::vector<Facet> out;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec& p = hull[i];
        const Vec& q = hull[(i + 1) % hull.size()];
        Facet f;
        f.normal = {q[1] - p[1], p[0] - q[0]};
        const double len = norm2(f.normal);
        f.normal[0] /= len;
        f.normal[1] /= len;
        f.rhs = dot(f.normal, p);
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace persuasion

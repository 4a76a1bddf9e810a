#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "persuasion/barrier.hpp"

using namespace persuasion;

namespace {

PointSet unit_square() {
    PointSet ps;
    ps.dimension = 2;
    ps.points = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    return ps;
}

// central finite differences of the barrier value / gradient
void check_derivatives(const BarrierDomain& dom, const Vec& z) {
    const double h = 1e-5;
    const auto ev = dom.eval(z);
    for (std::size_t d = 0; d < dom.dim(); ++d) {
        Vec zp = z, zm = z;
        zp[d] += h;
        zm[d] -= h;
        const double fd_grad = (dom.eval(zp).value - dom.eval(zm).value) / (2 * h);
        REQUIRE_THAT(ev.gradient[d],
                     Catch::Matchers::WithinRel(fd_grad, 1e-5) ||
                         Catch::Matchers::WithinAbs(fd_grad, 1e-7));
        for (std::size_t e = 0; e < dom.dim(); ++e) {
            const double fd_hess =
                (dom.eval(zp).gradient[e] - dom.eval(zm).gradient[e]) / (2 * h);
            REQUIRE_THAT(ev.hessian(e, d),
                         Catch::Matchers::WithinRel(fd_hess, 1e-5) ||
                             Catch::Matchers::WithinAbs(fd_hess, 1e-6));
        }
    }
}

}  // namespace

TEST_CASE("ball barrier closed forms at the center") {
    auto ball = BarrierDomain::unit_ball(3);
    auto ev = ball.eval({0.0, 0.0, 0.0});
    REQUIRE_THAT(ev.value, Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE(norm_inf(ev.gradient) < 1e-12);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            REQUIRE_THAT(ev.hessian(i, j),
                         Catch::Matchers::WithinAbs(i == j ? 2.0 : 0.0, 1e-12));
    REQUIRE(ball.self_concordance() == 1.0);
}

TEST_CASE("polytope barrier at the square center") {
    auto dom = BarrierDomain::from_points_2d(unit_square());
    auto ev = dom.eval({0.5, 0.5});
    REQUIRE_THAT(ev.value, Catch::Matchers::WithinAbs(-4.0 * std::log(0.5), 1e-10));
    REQUIRE(norm_inf(ev.gradient) < 1e-10);
    REQUIRE(dom.self_concordance() == 4.0);
    // analytic center of the square is its midpoint
    REQUIRE(norm_inf(dom.analytic_center() - Vec{0.5, 0.5}) < 1e-6);
}

TEST_CASE("barrier boundary errors") {
    auto ball = BarrierDomain::unit_ball(2);
    REQUIRE_THROWS_AS(ball.eval({1.0, 0.0}), BoundaryError);
    auto dom = BarrierDomain::from_points_2d(unit_square());
    REQUIRE_THROWS_AS(dom.eval({0.0, 0.5}), BoundaryError);
}

TEST_CASE("gradients and Hessians match finite differences") {
    CounterRng rng(99);
    auto ball = BarrierDomain::unit_ball(2);
    auto square = BarrierDomain::from_points_2d(unit_square());
    for (int trial = 0; trial < 100; ++trial) {
        auto rs = rng.split(trial);
        Vec zb(2);
        const double r = 0.8 * rs.next_double();
        const double phi = 6.28318530717958647 * rs.next_double();
        zb[0] = r * std::cos(phi);
        zb[1] = r * std::sin(phi);
        check_derivatives(ball, zb);
        Vec zs = {0.1 + 0.8 * rs.next_double(), 0.1 + 0.8 * rs.next_double()};
        check_derivatives(square, zs);
    }
}

TEST_CASE("minkowski gauge examples and homogeneity") {
    auto ball = BarrierDomain::unit_ball(2);
    Vec origin = {0.0, 0.0};
    REQUIRE(ball.gauge(origin, origin) == 0.0);
    REQUIRE_THAT(ball.gauge(origin, {0.5, 0.0}), Catch::Matchers::WithinAbs(0.5, 1e-12));

    auto square = BarrierDomain::from_points_2d(unit_square());
    Vec anchor = {0.5, 0.5};
    REQUIRE_THAT(square.gauge(anchor, {1.0, 0.5}), Catch::Matchers::WithinAbs(1.0, 1e-12));

    CounterRng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        auto rs = rng.split(trial);
        Vec z = {rs.next_double(), rs.next_double()};
        const double t = 0.05 + 0.95 * rs.next_double();
        Vec zt = anchor + t * (z - anchor);
        REQUIRE_THAT(square.gauge(anchor, zt),
                     Catch::Matchers::WithinAbs(t * square.gauge(anchor, z), 1e-9));
    }
}

TEST_CASE("b-restricted facets shrink toward the anchor") {
    auto square = BarrierDomain::from_points_2d(unit_square());
    Vec anchor = {0.5, 0.5};
    auto shrunk = square.restricted_facets(anchor, 1.0);
    // at b = 1 the restricted square is [0.25, 0.75]^2
    for (const auto& f : shrunk) {
        REQUIRE_THAT(f.rhs - dot(f.normal, anchor), Catch::Matchers::WithinAbs(0.25, 1e-12));
    }
    // gauge-membership agrees with the facet representation
    REQUIRE(square.in_restricted(anchor, 1.0, {0.7, 0.5}));
    REQUIRE_FALSE(square.in_restricted(anchor, 1.0, {0.9, 0.5}));
}

TEST_CASE("dikin samples at the ball center") {
    auto ball = BarrierDomain::unit_ball(2);
    CounterRng rng(12);
    Vec z = {0.0, 0.0};
    for (int i = 0; i < 100; ++i) {
        auto s = ball.dikin_sample(z, rng);
        REQUIRE_THAT(s.eigenvalue, Catch::Matchers::WithinAbs(2.0, 1e-12));
        REQUIRE_THAT(norm2(s.point), Catch::Matchers::WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
    }
}

TEST_CASE("dikin samples have unit local norm and stay interior") {
    auto square = BarrierDomain::from_points_2d(unit_square());
    auto ball = BarrierDomain::unit_ball(2);
    CounterRng rng(345);
    for (int trial = 0; trial < 1000; ++trial) {
        auto rs = rng.split(trial);
        Vec zs = {0.05 + 0.9 * rs.next_double(), 0.05 + 0.9 * rs.next_double()};
        auto s = square.dikin_sample(zs, rs);
        REQUIRE_THAT(square.local_norm(zs, s.point - zs),
                     Catch::Matchers::WithinAbs(1.0, 1e-8));
        REQUIRE(square.is_interior(s.point));

        const double r = 0.95 * rs.next_double();
        const double phi = 6.28318530717958647 * rs.next_double();
        Vec zb = {r * std::cos(phi), r * std::sin(phi)};
        auto sb = ball.dikin_sample(zb, rs);
        REQUIRE_THAT(ball.local_norm(zb, sb.point - zb),
                     Catch::Matchers::WithinAbs(1.0, 1e-8));
        REQUIRE(ball.is_interior(sb.point));
    }
}

TEST_CASE("interval domain for one-dimensional hulls") {
    auto dom = BarrierDomain::interval(-1.0, 3.0);
    REQUIRE(dom.dim() == 1);
    REQUIRE_THAT(dom.analytic_center()[0], Catch::Matchers::WithinAbs(1.0, 1e-6));
    CounterRng rng(8);
    auto s = dom.dikin_sample({0.0}, rng);
    REQUIRE(dom.is_interior(s.point));
}

TEST_CASE("ball normalization wraps a hull inside the unit ball") {
    PointSet sq = unit_square();
    auto map = BallNormalization::of(sq);
    for (const auto& p : sq.points) {
        REQUIRE(norm2(map.to_ball(p)) < 1.0 / 1.049);
        REQUIRE(norm_inf(map.from_ball(map.to_ball(p)) - p) < 1e-12);
    }
    // linear losses keep their ordering under the map
    Vec loss = {1.0, -0.5};
    Vec lb = map.loss_to_ball(loss);
    for (const auto& p : sq.points)
        for (const auto& q : sq.points) {
            const double dz = dot(loss, p) - dot(loss, q);
            const double dw = dot(lb, map.to_ball(p)) - dot(lb, map.to_ball(q));
            REQUIRE(dz * dw >= -1e-12);
        }
}

// Geometry layer: node data against closed-form and independently quadratured
// references, point classification, gap finding, and the band-limited
// resampling used for near-boundary evaluation.

#include "doctest.h"

#include "impbond/geometry.hpp"

#include <cmath>
#include <numbers>

using namespace impbond;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("circle components carry exact node metrics") {
    const Vec2<double> c(0.2, -0.1);
    const double R = 0.7;
    const int n = 64;
    const auto bc = build_component(Curve<double>::circle(c, R), n);

    CHECK(bc.n == n);
    CHECK(std::abs(bc.arclength - 2 * pi * R) <= 1e-12);
    CHECK(std::abs(bc.weights.sum() - bc.arclength) <= 1e-14);
    for (int k = 0; k < n; ++k) {
        CHECK(std::abs(bc.t[k] - 2 * pi * k / double(n)) <= 1e-15);
        CHECK(std::abs(bc.jacobian[k] - R) <= 1e-13);
        CHECK(std::abs(bc.curvature[k] - 1.0 / R) <= 1e-12);
        // outward radial normal, unit tangent orthogonal to it
        const Vec2<double> radial = (bc.points.col(k) - c).normalized();
        CHECK((bc.normals.col(k) - radial).norm() <= 1e-13);
        CHECK(std::abs(bc.normals.col(k).dot(bc.tangents.col(k))) <= 1e-14);
        CHECK(std::abs(bc.tangents.col(k).norm() - 1.0) <= 1e-14);
    }

    // trapezoid rule on the circle integrates x1^2 exactly:
    // oint x1^2 ds = R (2 pi c1^2 + pi R^2)
    double acc = 0;
    for (int k = 0; k < n; ++k) acc += bc.weights[k] * bc.points(0, k) * bc.points(0, k);
    CHECK(std::abs(acc - R * (2 * pi * c[0] * c[0] + pi * R * R)) <= 1e-12);
}

TEST_CASE("reversed traversal flips the normal and the curvature sign") {
    const double R = 0.4;
    const auto fwd = build_component(Curve<double>::circle({0, 0}, R), 32);
    const auto rev = build_component(Curve<double>::circle({0, 0}, R, true), 32);
    CHECK(std::abs(rev.arclength - fwd.arclength) <= 1e-13);
    // same first node, opposite orientation data
    CHECK((rev.points.col(0) - fwd.points.col(0)).norm() <= 1e-14);
    CHECK((rev.normals.col(0) + fwd.normals.col(0)).norm() <= 1e-13);
    CHECK(std::abs(rev.curvature[0] + 1.0 / R) <= 1e-12);
}

TEST_CASE("ellipse arclength matches the complete elliptic integral") {
    const double a = 0.6, b = 0.35;
    const auto bc = build_component(Curve<double>::ellipse({0.1, 0.2}, a, b, 0.7), 128);
    // perimeter = 4 a E(e), e^2 = 1 - (b/a)^2 (independent special-function oracle)
    const double ecc = std::sqrt(1.0 - (b * b) / (a * a));
    const double perimeter = 4 * a * std::comp_ellint_2(ecc);
    CHECK(std::abs(bc.arclength - perimeter) / perimeter <= 1e-12);
}

TEST_CASE("kite arclength agrees with dense finite-difference quadrature") {
    const double s = 0.3;
    const auto bc = build_component(Curve<double>::kite({-0.2, 0.1}, s), 128);
    // independent oracle: position-only sampling of the kite shape
    // x(t) = s (cos t + 0.65 cos 2t - 0.65, 1.5 sin t), derivative by central
    // differences, trapezoid in t; error O(h^2)
    auto pos = [&](double t) {
        return Vec2<double>(s * (std::cos(t) + 0.65 * std::cos(2 * t) - 0.65),
                            s * 1.5 * std::sin(t));
    };
    const int N = 1 << 15;
    const double h = 2 * pi / N;
    double len = 0;
    for (int k = 0; k < N; ++k) {
        const double t = h * k;
        len += ((pos(t + h) - pos(t - h)) / (2 * h)).norm() * h;
    }
    CHECK(std::abs(bc.arclength - len) / len <= 1e-6);
}

TEST_CASE("star curves follow the polar profile") {
    const double base = 0.4, amp = 0.1;
    const int lobes = 5;
    const auto bc = build_component(Curve<double>::star({0, 0}, base, amp, lobes), 160);
    // t = 0 sits on a lobe crest, t = pi/lobes in a valley
    CHECK(std::abs(bc.points.col(0).norm() - (base + amp)) <= 1e-12);
    const int valley = bc.n / (2 * lobes);  // node exactly at t = pi/lobes
    CHECK(std::abs(bc.points.col(valley).norm() - (base - amp)) <= 1e-12);
}

TEST_CASE("curve and sampling validation rejects bad parameters") {
    CHECK_THROWS_AS(build_component(Curve<double>::circle({0, 0}, 0.5), 14),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_component(Curve<double>::circle({0, 0}, 0.5), 17),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_component(Curve<double>::circle({0, 0}, 0.0), 32),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_component(Curve<double>::ellipse({0, 0}, 0.3, -0.1), 32),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_component(Curve<double>::kite({0, 0}, -1.0), 32),
                    std::invalid_argument);
    // amp >= base degenerates the polar profile
    CHECK_THROWS_AS(build_component(Curve<double>::star({0, 0}, 0.3, 0.3, 4), 64),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_component(Curve<double>::star({0, 0}, 0.3, 0.1, 0), 64),
                    std::invalid_argument);
}

TEST_CASE("assemblies index components contiguously") {
    auto c1 = build_component(Curve<double>::circle({-0.4, 0}, 0.25), 32);
    auto c2 = build_component(Curve<double>::circle({0.4, 0}, 0.2), 48);
    const auto a = assemble<double>({c1, c2});
    CHECK(a.component_count() == 2);
    CHECK(a.num_nodes == 80);
    CHECK(a.num_regions == 2);
    CHECK(a.offset[0] == 0);
    CHECK(a.offset[1] == 32);
    CHECK(a.component_of_node(31) == 0);
    CHECK(a.component_of_node(32) == 1);
    CHECK((a.weights.segment(32, 48) - c2.weights).norm() == 0.0);
    CHECK(std::abs(a.region_arclength(1) - c2.arclength) <= 1e-14);

    // region grouping: both curves bound one inclusion
    const auto grouped = assemble<double>({c1, c2}, {0, 0});
    CHECK(grouped.num_regions == 1);
    VecX<double> ones = VecX<double>::Ones(grouped.num_nodes);
    CHECK(std::abs(grouped.region_integral(0, ones) - (c1.arclength + c2.arclength)) <= 1e-12);

    CHECK_THROWS_AS(assemble<double>({c1, c2}, {0, 2}), std::invalid_argument);
    CHECK_THROWS_AS(assemble<double>({c1, c2}, {0}), std::invalid_argument);
    CHECK_THROWS_AS(assemble<double>({c1, c2}, {0, -1}), std::invalid_argument);
    CHECK_THROWS_AS(assemble<double>({}), std::invalid_argument);
}

TEST_CASE("assembly rejects touching components") {
    auto outer = build_component(Curve<double>::circle({0, 0}, 0.301), 64);
    auto inner = build_component(Curve<double>::circle({0, 0}, 0.300), 64);
    CHECK_THROWS_WITH_AS(assemble<double>({outer, inner}), doctest::Contains("overlap"),
                         std::invalid_argument);
}

TEST_CASE("winding numbers classify points against regions") {
    const auto circ = build_component(Curve<double>::circle({0.1, 0}, 0.5), 32);
    CHECK(winding_number(circ, Vec2<double>(0.1, 0)) == 1);
    CHECK(winding_number(circ, Vec2<double>(0.9, 0)) == 0);
    const auto rev = build_component(Curve<double>::circle({0.1, 0}, 0.5, true), 32);
    CHECK(winding_number(rev, Vec2<double>(0.1, 0)) == -1);

    // annulus: the hole counts as outside the region
    auto shell_outer = build_component(Curve<double>::circle({0, 0}, 0.5), 64);
    auto shell_inner = build_component(Curve<double>::circle({0, 0}, 0.2, true), 64);
    const auto shell = assemble<double>({shell_outer, shell_inner}, {0, 0});
    CHECK(point_in_region(shell, 0, Vec2<double>(0.35, 0)));
    CHECK(!point_in_region(shell, 0, Vec2<double>(0, 0)));
    CHECK(region_of_point(shell, Vec2<double>(0.35, 0)) == 0);
    CHECK(region_of_point(shell, Vec2<double>(0, 0)) == -1);
    CHECK(region_of_point(shell, Vec2<double>(0.8, 0)) == -1);
}

TEST_CASE("minimum gap is polished beyond node resolution") {
    auto left = build_component(Curve<double>::circle({-0.40, 0}, 0.30), 48);
    auto right = build_component(Curve<double>::circle({0.45, 0}, 0.25), 48);
    const auto a = assemble<double>({left, right});
    // centers 0.85 apart, radii sum 0.55: continuous gap exactly 0.30
    const auto gap = min_gap_info(a);
    CHECK(std::abs(gap.distance - 0.30) <= 1e-10);
    CHECK(std::abs(min_gap(a) - 0.30) <= 1e-10);
    CHECK((gap.point_a - Vec2<double>(-0.10, 0)).norm() <= 1e-8);
    CHECK((gap.point_b - Vec2<double>(0.20, 0)).norm() <= 1e-8);
    CHECK_THROWS_AS(min_gap(assemble<double>({left})), std::invalid_argument);
}

TEST_CASE("clearance ratio counts local node spacings") {
    const double R = 0.5;
    const int n = 64;
    const auto a = assemble<double>({build_component(Curve<double>::circle({0, 0}, R), n)});
    const double w = 2 * pi * R / n;  // uniform spacing, node at (R, 0)
    const double d = 3.7 * w;
    CHECK(std::abs(clearance_ratio(a, Vec2<double>(R + d, 0)) - 3.7) <= 1e-12);
}

TEST_CASE("refinement re-evaluates the exact parametrization") {
    auto kite = build_component(Curve<double>::kite({-0.3, 0}, 0.3), 32);
    auto disk = build_component(Curve<double>::circle({0.5, 0}, 0.25), 48);
    const auto a = assemble<double>({kite, disk});
    const int q = 8;
    const auto f = refine_assembly(a, q);
    CHECK(f.num_nodes == a.num_nodes * q);
    CHECK(f.components[0].n == 32 * q);
    CHECK(f.offset[1] == 32 * q);
    CHECK(f.region == a.region);
    for (int c = 0; c < 2; ++c) {
        const auto& src = a.components[c];
        const auto& dst = f.components[c];
        // arclength is recomputed on the fine grid, so it converges toward the
        // true length instead of copying the coarse quadrature value
        const double ref = build_component(src.curve, 2048).arclength;
        CHECK(std::abs(dst.arclength - ref) / ref <= 1e-12);
        CHECK(std::abs(src.arclength - ref) / ref <= 1e-3);
        // every q-th fine node is the coarse node, re-evaluated identically
        for (int k = 0; k < src.n; ++k)
            CHECK((dst.points.col(k * q) - src.points.col(k)).norm() <= 1e-15);
        Vec2<double> x, dx, ddx;
        dst.curve.eval(dst.t[3], x, dx, ddx);
        CHECK((dst.points.col(3) - x).norm() == 0.0);
    }
    CHECK_THROWS_AS(refine_assembly(a, 0), std::invalid_argument);
}

#pragma once

// Closed analytic plane curves sampled at equispaced parameters, the raw
// material for Nystrom discretizations with the periodic trapezoid rule.
// A boundary component carries nodes x(t_k), unit tangents/normals, the
// parametrization Jacobian J = |x'|, signed curvature and the quadrature
// weights w_k = (2*pi/n) J_k, so that  sum_k w_k f(x_k) ~ \oint f ds  with
// spectral accuracy.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace impbond {

template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar> using Mat2X = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

template <typename Scalar>
inline constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;

enum class CurveKind { Circle, Ellipse, Kite, Star };

// Traversal is counterclockwise by default, which makes the normal
// (x2', -x1')/J point out of the enclosed region. Reversed traversal flips
// the normal (and the sign of the curvature); it is used when a curve bounds
// a region that lies outside it, e.g. the inner circle of an annulus.
template <typename Scalar>
struct Curve {
    CurveKind kind = CurveKind::Circle;
    Vec2<Scalar> center = Vec2<Scalar>::Zero();
    Scalar radius = 0;                            // circle
    Scalar semi_axis_a = 0, semi_axis_b = 0;      // ellipse
    Scalar rotation = 0;                          // ellipse
    Scalar scale = 0;                             // kite
    Scalar base_radius = 0, amplitude = 0;        // star
    int lobes = 0;                                // star
    bool reversed = false;

    static Curve circle(Vec2<Scalar> c, Scalar r, bool reversed = false) {
        Curve q;
        q.kind = CurveKind::Circle;
        q.center = std::move(c);
        q.radius = r;
        q.reversed = reversed;
        return q;
    }

    static Curve ellipse(Vec2<Scalar> c, Scalar a, Scalar b, Scalar rot = 0,
                         bool reversed = false) {
        Curve q;
        q.kind = CurveKind::Ellipse;
        q.center = std::move(c);
        q.semi_axis_a = a;
        q.semi_axis_b = b;
        q.rotation = rot;
        q.reversed = reversed;
        return q;
    }

    static Curve kite(Vec2<Scalar> c, Scalar s, bool reversed = false) {
        Curve q;
        q.kind = CurveKind::Kite;
        q.center = std::move(c);
        q.scale = s;
        q.reversed = reversed;
        return q;
    }

    static Curve star(Vec2<Scalar> c, Scalar base, Scalar amp, int lobes,
                      bool reversed = false) {
        Curve q;
        q.kind = CurveKind::Star;
        q.center = std::move(c);
        q.base_radius = base;
        q.amplitude = amp;
        q.lobes = lobes;
        q.reversed = reversed;
        return q;
    }

    void validate() const {
        switch (kind) {
        case CurveKind::Circle:
            if (!(radius > Scalar(0)))
                throw std::invalid_argument("curve: circle radius must be positive");
            break;
        case CurveKind::Ellipse:
            if (!(semi_axis_a > Scalar(0)) || !(semi_axis_b > Scalar(0)))
                throw std::invalid_argument("curve: ellipse semi-axes must be positive");
            break;
        case CurveKind::Kite:
            if (!(scale > Scalar(0)))
                throw std::invalid_argument("curve: kite scale must be positive");
            break;
        case CurveKind::Star:
            if (!(base_radius > Scalar(0)))
                throw std::invalid_argument("curve: star base radius must be positive");
            if (amplitude < Scalar(0) || !(amplitude < base_radius))
                throw std::invalid_argument(
                    "curve: star amplitude must satisfy 0 <= amplitude < base_radius "
                    "(otherwise the radial profile vanishes and the curve degenerates)");
            if (lobes < 1)
                throw std::invalid_argument("curve: star lobe count must be >= 1");
            break;
        }
    }

    // Position and the first two parameter derivatives at t in [0, 2*pi).
    void eval(Scalar t, Vec2<Scalar>& x, Vec2<Scalar>& dx, Vec2<Scalar>& ddx) const {
        const Scalar u = reversed ? two_pi<Scalar> - t : t;
        Vec2<Scalar> p, dp, ddp;
        switch (kind) {
        case CurveKind::Circle: {
            const Scalar c = std::cos(u), s = std::sin(u);
            p = {radius * c, radius * s};
            dp = {-radius * s, radius * c};
            ddp = {-radius * c, -radius * s};
            break;
        }
        case CurveKind::Ellipse: {
            const Scalar c = std::cos(u), s = std::sin(u);
            const Scalar cr = std::cos(rotation), sr = std::sin(rotation);
            Eigen::Matrix<Scalar, 2, 2> q;
            q << cr, -sr, sr, cr;
            p = q * Vec2<Scalar>(semi_axis_a * c, semi_axis_b * s);
            dp = q * Vec2<Scalar>(-semi_axis_a * s, semi_axis_b * c);
            ddp = q * Vec2<Scalar>(-semi_axis_a * c, -semi_axis_b * s);
            break;
        }
        case CurveKind::Kite: {
            // x(u) = scale * (cos u + 0.65 cos 2u - 0.65, 1.5 sin u)
            const Scalar c = std::cos(u), s = std::sin(u);
            const Scalar c2 = std::cos(2 * u), s2 = std::sin(2 * u);
            p = {scale * (c + Scalar(0.65) * c2 - Scalar(0.65)), scale * Scalar(1.5) * s};
            dp = {scale * (-s - Scalar(1.3) * s2), scale * Scalar(1.5) * c};
            ddp = {scale * (-c - Scalar(2.6) * c2), scale * Scalar(-1.5) * s};
            break;
        }
        case CurveKind::Star: {
            // polar profile rho(u) = base + amp * cos(lobes * u)
            const Scalar c = std::cos(u), s = std::sin(u);
            const Scalar L = Scalar(lobes);
            const Scalar rho = base_radius + amplitude * std::cos(L * u);
            const Scalar drho = -amplitude * L * std::sin(L * u);
            const Scalar ddrho = -amplitude * L * L * std::cos(L * u);
            const Vec2<Scalar> e(c, s), de(-s, c);
            p = rho * e;
            dp = drho * e + rho * de;
            ddp = (ddrho - rho) * e + 2 * drho * de;
            break;
        }
        }
        x = center + p;
        if (reversed) {
            dx = -dp;
            ddx = ddp;
        } else {
            dx = dp;
            ddx = ddp;
        }
    }
};

template <typename Scalar>
struct BoundaryComponent {
    Curve<Scalar> curve;
    int n = 0;
    VecX<Scalar> t;           // parameter nodes 2*pi*k/n
    Mat2X<Scalar> points;
    Mat2X<Scalar> tangents;   // unit, along traversal
    Mat2X<Scalar> normals;    // unit, (x2', -x1')/J
    VecX<Scalar> jacobian;    // |x'(t_k)|
    VecX<Scalar> curvature;   // (x1' x2'' - x2' x1'') / J^3
    VecX<Scalar> weights;     // (2*pi/n) J_k
    Scalar arclength = 0;
};

// Nystrom sampling of a closed curve. n must be even (the singular quadrature
// below needs paired modes) and large enough that neighboring nodes resolve
// the curve; the node-separation check rejects parameters that fold the curve
// onto itself.
template <typename Scalar>
BoundaryComponent<Scalar> build_component(const Curve<Scalar>& curve, int n) {
    curve.validate();
    if (n < 16)
        throw std::invalid_argument("build_component: need n >= 16 nodes, got " +
                                    std::to_string(n));
    if (n % 2 != 0)
        throw std::invalid_argument("build_component: node count must be even, got " +
                                    std::to_string(n));

    BoundaryComponent<Scalar> bc;
    bc.curve = curve;
    bc.n = n;
    bc.t.resize(n);
    bc.points.resize(2, n);
    bc.tangents.resize(2, n);
    bc.normals.resize(2, n);
    bc.jacobian.resize(n);
    bc.curvature.resize(n);
    bc.weights.resize(n);

    const Scalar h = two_pi<Scalar> / Scalar(n);
    for (int k = 0; k < n; ++k) {
        const Scalar tk = h * Scalar(k);
        Vec2<Scalar> x, dx, ddx;
        curve.eval(tk, x, dx, ddx);
        const Scalar jac = dx.norm();
        if (!(jac > Scalar(0)))
            throw std::invalid_argument("build_component: degenerate parametrization, |x'| = 0");
        bc.t[k] = tk;
        bc.points.col(k) = x;
        bc.tangents.col(k) = dx / jac;
        bc.normals.col(k) = Vec2<Scalar>(dx[1], -dx[0]) / jac;
        bc.jacobian[k] = jac;
        bc.curvature[k] = (dx[0] * ddx[1] - dx[1] * ddx[0]) / (jac * jac * jac);
        bc.weights[k] = h * jac;
    }
    bc.arclength = bc.weights.sum();

    // Non-adjacent nodes of a simple curve stay at least a fraction of the
    // local arc spacing apart; collapse signals self-intersection.
    const Scalar floor = Scalar(0.1) * bc.weights.minCoeff();
    for (int i = 0; i < n; ++i)
        for (int j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // cyclic neighbors
            if ((bc.points.col(i) - bc.points.col(j)).norm() < floor)
                throw std::invalid_argument(
                    "build_component: curve is not simple (nodes " + std::to_string(i) +
                    " and " + std::to_string(j) + " nearly coincide)");
        }
    return bc;
}

// A collection of boundary components with contiguous global node indexing.
// `region[c]` assigns component c to a connected inclusion D_j; by default
// every component bounds its own inclusion. Multi-curve regions occur when an
// inclusion has holes (annulus-type boundaries).
template <typename Scalar>
struct Assembly {
    std::vector<BoundaryComponent<Scalar>> components;
    std::vector<int> region;
    std::vector<int> offset;   // first global node index per component
    int num_nodes = 0;
    int num_regions = 0;
    VecX<Scalar> weights;      // global quadrature weights

    int component_count() const { return static_cast<int>(components.size()); }

    int component_of_node(int k) const {
        for (int c = component_count() - 1; c >= 0; --c)
            if (k >= offset[c]) return c;
        return 0;
    }

    // \oint_{partial D_j} v ds restricted to region j.
    Scalar region_integral(int j, const VecX<Scalar>& values) const {
        Scalar acc = 0;
        for (int c = 0; c < component_count(); ++c) {
            if (region[c] != j) continue;
            const auto& bc = components[c];
            acc += bc.weights.dot(values.segment(offset[c], bc.n));
        }
        return acc;
    }

    Scalar region_arclength(int j) const {
        Scalar acc = 0;
        for (int c = 0; c < component_count(); ++c)
            if (region[c] == j) acc += components[c].arclength;
        return acc;
    }

    // max_k |x_k| over all nodes, used by the capacity guard.
    Scalar enclosing_radius() const {
        Scalar r = 0;
        for (const auto& bc : components)
            r = std::max(r, bc.points.colwise().norm().maxCoeff());
        return r;
    }
};

template <typename Scalar>
Assembly<Scalar> assemble(std::vector<BoundaryComponent<Scalar>> components,
                          std::vector<int> region = {}) {
    if (components.empty())
        throw std::invalid_argument("assemble: need at least one boundary component");
    const int nc = static_cast<int>(components.size());
    if (region.empty()) {
        region.resize(nc);
        for (int c = 0; c < nc; ++c) region[c] = c;
    }
    if (static_cast<int>(region.size()) != nc)
        throw std::invalid_argument("assemble: region map size must match component count");
    int nr = 0;
    for (int r : region) {
        if (r < 0) throw std::invalid_argument("assemble: region ids must be non-negative");
        nr = std::max(nr, r + 1);
    }
    for (int j = 0; j < nr; ++j)
        if (std::find(region.begin(), region.end(), j) == region.end())
            throw std::invalid_argument("assemble: region ids must be contiguous from 0");

    Assembly<Scalar> a;
    a.components = std::move(components);
    a.region = std::move(region);
    a.num_regions = nr;
    a.offset.resize(nc);
    a.num_nodes = 0;
    for (int c = 0; c < nc; ++c) {
        a.offset[c] = a.num_nodes;
        a.num_nodes += a.components[c].n;
    }
    a.weights.resize(a.num_nodes);
    for (int c = 0; c < nc; ++c)
        a.weights.segment(a.offset[c], a.components[c].n) = a.components[c].weights;

    // Distinct curves must not touch; nodes sit on the curves, so the node
    // floor bounds the true separation from above and a zero here is fatal.
    for (int c = 0; c < nc; ++c)
        for (int d = c + 1; d < nc; ++d) {
            Scalar best = std::numeric_limits<Scalar>::max();
            for (int i = 0; i < a.components[c].n; ++i) {
                const auto diff =
                    (a.components[d].points.colwise() - a.components[c].points.col(i))
                        .colwise()
                        .norm();
                best = std::min(best, diff.minCoeff());
            }
            const Scalar touch_floor =
                Scalar(0.5) * std::min(a.components[c].weights.minCoeff(),
                                       a.components[d].weights.minCoeff());
            if (best < touch_floor)
                throw std::invalid_argument(
                    "assemble: components " + std::to_string(c) + " and " +
                    std::to_string(d) + " overlap or touch (node gap " +
                    std::to_string(static_cast<double>(best)) + ")");
        }
    return a;
}

// Re-evaluates the parametrization on a factor-q finer node set. The source
// component has already passed the simplicity and overlap checks, so this
// skips them; the result is meant for near-boundary field evaluation, not for
// operator assembly.
template <typename Scalar>
Assembly<Scalar> refine_assembly(const Assembly<Scalar>& a, int q) {
    if (q < 1) throw std::invalid_argument("refine_assembly: factor must be >= 1");
    Assembly<Scalar> f;
    f.region = a.region;
    f.num_regions = a.num_regions;
    f.components.reserve(a.components.size());
    for (const auto& src : a.components) {
        BoundaryComponent<Scalar> bc;
        bc.curve = src.curve;
        bc.n = src.n * q;
        bc.t.resize(bc.n);
        bc.points.resize(2, bc.n);
        bc.tangents.resize(2, bc.n);
        bc.normals.resize(2, bc.n);
        bc.jacobian.resize(bc.n);
        bc.curvature.resize(bc.n);
        bc.weights.resize(bc.n);
        const Scalar h = two_pi<Scalar> / Scalar(bc.n);
        for (int k = 0; k < bc.n; ++k) {
            const Scalar tk = h * Scalar(k);
            Vec2<Scalar> x, dx, ddx;
            bc.curve.eval(tk, x, dx, ddx);
            const Scalar jac = dx.norm();
            bc.t[k] = tk;
            bc.points.col(k) = x;
            bc.tangents.col(k) = dx / jac;
            bc.normals.col(k) = Vec2<Scalar>(dx[1], -dx[0]) / jac;
            bc.jacobian[k] = jac;
            bc.curvature[k] = (dx[0] * ddx[1] - dx[1] * ddx[0]) / (jac * jac * jac);
            bc.weights[k] = h * jac;
        }
        bc.arclength = bc.weights.sum();
        f.components.push_back(std::move(bc));
    }
    const int nc = static_cast<int>(f.components.size());
    f.offset.resize(nc);
    f.num_nodes = 0;
    for (int c = 0; c < nc; ++c) {
        f.offset[c] = f.num_nodes;
        f.num_nodes += f.components[c].n;
    }
    f.weights.resize(f.num_nodes);
    for (int c = 0; c < nc; ++c)
        f.weights.segment(f.offset[c], f.components[c].n) = f.components[c].weights;
    return f;
}

namespace detail {

// Golden-section minimization of a smooth 1-D function on [lo, hi].
template <typename Scalar, typename F>
Scalar golden_min(F&& f, Scalar lo, Scalar hi, int iters = 80) {
    const Scalar invphi = (std::sqrt(Scalar(5)) - 1) / 2;
    Scalar a = lo, b = hi;
    Scalar c = b - invphi * (b - a);
    Scalar d = a + invphi * (b - a);
    Scalar fc = f(c), fd = f(d);
    for (int it = 0; it < iters; ++it) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return (fc < fd) ? c : d;
}

template <typename Scalar>
Vec2<Scalar> curve_point(const Curve<Scalar>& q, Scalar t) {
    Vec2<Scalar> x, dx, ddx;
    q.eval(t, x, dx, ddx);
    return x;
}

}  // namespace detail

// Closest approach between two distinct boundary curves.
template <typename Scalar>
struct GapInfo {
    Scalar distance = 0;
    int comp_a = 0, comp_b = 0;
    Vec2<Scalar> point_a, point_b;   // realizing points on each curve
    Scalar spacing_a = 0, spacing_b = 0;  // local node spacing near the gap
};

// Minimal distance between distinct boundary curves. Seeds with the best node
// pair and polishes by alternating golden-section sweeps in each parameter;
// on analytic curves this nails the continuous gap far beyond node spacing.
template <typename Scalar>
GapInfo<Scalar> min_gap_info(const Assembly<Scalar>& a) {
    const int nc = a.component_count();
    if (nc < 2)
        throw std::invalid_argument("min_gap: need at least two components");
    GapInfo<Scalar> out;
    out.distance = std::numeric_limits<Scalar>::max();
    for (int c = 0; c < nc; ++c)
        for (int d = c + 1; d < nc; ++d) {
            const auto& A = a.components[c];
            const auto& B = a.components[d];
            int bi = 0, bj = 0;
            Scalar best = std::numeric_limits<Scalar>::max();
            for (int i = 0; i < A.n; ++i) {
                const auto diff = (B.points.colwise() - A.points.col(i)).colwise().norm();
                int j;
                const Scalar v = diff.minCoeff(&j);
                if (v < best) { best = v; bi = i; bj = j; }
            }
            Scalar ta = A.t[bi], tb = B.t[bj];
            const Scalar wa = 4 * two_pi<Scalar> / Scalar(A.n);
            const Scalar wb = 4 * two_pi<Scalar> / Scalar(B.n);
            for (int round = 0; round < 8; ++round) {
                ta = detail::golden_min<Scalar>(
                    [&](Scalar s) {
                        return (detail::curve_point(A.curve, s) -
                                detail::curve_point(B.curve, tb)).norm();
                    },
                    ta - wa, ta + wa);
                tb = detail::golden_min<Scalar>(
                    [&](Scalar s) {
                        return (detail::curve_point(B.curve, s) -
                                detail::curve_point(A.curve, ta)).norm();
                    },
                    tb - wb, tb + wb);
            }
            const Vec2<Scalar> pa = detail::curve_point(A.curve, ta);
            const Vec2<Scalar> pb = detail::curve_point(B.curve, tb);
            best = (pa - pb).norm();
            if (best < out.distance) {
                out.distance = best;
                out.comp_a = c;
                out.comp_b = d;
                out.point_a = pa;
                out.point_b = pb;
                out.spacing_a = A.weights[bi];
                out.spacing_b = B.weights[bj];
            }
        }
    return out;
}

template <typename Scalar>
Scalar min_gap(const Assembly<Scalar>& a) {
    return min_gap_info(a).distance;
}

// Winding number of a closed node polygon around p; +-1 inside (sign follows
// traversal), 0 outside. Analytic curves at n >= 16 make the polygon faithful
// for any p that respects the evaluation clearance.
template <typename Scalar>
int winding_number(const BoundaryComponent<Scalar>& bc, const Vec2<Scalar>& p) {
    Scalar total = 0;
    for (int k = 0; k < bc.n; ++k) {
        const Vec2<Scalar> v = bc.points.col(k) - p;
        const Vec2<Scalar> w = bc.points.col((k + 1) % bc.n) - p;
        total += std::atan2(v[0] * w[1] - v[1] * w[0], v.dot(w));
    }
    return static_cast<int>(std::lround(total / two_pi<Scalar>));
}

// True when p lies inside inclusion j (sum of curve windings, so annulus
// holes count as outside).
template <typename Scalar>
bool point_in_region(const Assembly<Scalar>& a, int j, const Vec2<Scalar>& p) {
    int w = 0;
    for (int c = 0; c < a.component_count(); ++c)
        if (a.region[c] == j) w += winding_number(a.components[c], p);
    return w != 0;
}

// Index of the inclusion containing p, or -1 when p is exterior.
template <typename Scalar>
int region_of_point(const Assembly<Scalar>& a, const Vec2<Scalar>& p) {
    for (int j = 0; j < a.num_regions; ++j)
        if (point_in_region(a, j, p)) return j;
    return -1;
}

// Distance from p to the nearest node, in units of the local node spacing.
// Field evaluation refuses points below a configured multiple of this.
template <typename Scalar>
Scalar clearance_ratio(const Assembly<Scalar>& a, const Vec2<Scalar>& p) {
    Scalar worst = std::numeric_limits<Scalar>::max();
    for (const auto& bc : a.components)
        for (int k = 0; k < bc.n; ++k) {
            const Scalar dist = (bc.points.col(k) - p).norm();
            worst = std::min(worst, dist / bc.weights[k]);
        }
    return worst;
}

}  // namespace impbond

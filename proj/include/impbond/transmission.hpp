#pragma once

// Exterior transmission solver for imperfectly bonded inclusions.
//
// The field is represented as u = h + S[phi] - gamma D[phi] with a single
// density phi on the interface. Matching the exterior trace and flux against
// a locally constant interior state gives, for the perfect-bond limit,
//
//     (1/2 I - K*) phi0 = dh/dnu,   integral of phi0 over each dD_j = 0,
//
// a rank-deficient system closed by borrowing the equilibrium densities e_j
// as kernel columns and the per-inclusion mean constraints as extra rows.
// For gamma > 0 the density solves (I + gamma Lambda) phi = phi0 + sum a_j e_j
// where the interior offsets a_j are fixed by the zero-mean (flux balance)
// conditions, i.e. by one small dense solve against the resistive
// capacitance matrix.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "impbond/background.hpp"
#include "impbond/boundary_ops.hpp"
#include "impbond/capacitance.hpp"
#include "impbond/dtn.hpp"
#include "impbond/geometry.hpp"

namespace impbond {

// Probe evaluations sit this many local mesh widths inside the inclusion;
// quadrature error at that depth is ~exp(-2*pi*3) of the field scale.
inline constexpr double probe_clearance = 3.0;

namespace detail {

// Best interior probe point for region j: try the node centroid plus a fan of
// inward normal offsets, keep the admissible point with the largest clearance.
// Interiority is confirmed by winding number, never assumed from construction.
template <typename Scalar>
Vec2<Scalar> interior_probe(const Assembly<Scalar>& a, int j) {
    std::vector<Vec2<Scalar>> candidates;
    Vec2<Scalar> centroid = Vec2<Scalar>::Zero();
    Scalar total = 0;
    for (int c = 0; c < a.component_count(); ++c) {
        if (a.region[c] != j) continue;
        const auto& comp = a.components[c];
        for (int k = 0; k < comp.n; ++k) {
            centroid += comp.weights[k] * comp.points.col(k);
            total += comp.weights[k];
        }
    }
    candidates.push_back(centroid / total);
    for (int c = 0; c < a.component_count(); ++c) {
        if (a.region[c] != j) continue;
        const auto& comp = a.components[c];
        const Scalar scale = comp.arclength / two_pi<Scalar>;
        const int stride = std::max(1, comp.n / 16);
        for (int k = 0; k < comp.n; k += stride)
            for (Scalar f : {Scalar(0.15), Scalar(0.3), Scalar(0.5), Scalar(0.75)})
                candidates.push_back(comp.points.col(k) - f * scale * comp.normals.col(k));
    }
    Vec2<Scalar> best = candidates.front();
    Scalar best_ratio = -1;
    for (const auto& p : candidates) {
        if (!point_in_region(a, j, p)) continue;
        const Scalar ratio = clearance_ratio(a, p);
        if (ratio > best_ratio) { best_ratio = ratio; best = p; }
    }
    if (best_ratio < Scalar(probe_clearance))
        throw guard_error("interior probe for region " + std::to_string(j) +
                          " has clearance ratio " + std::to_string(double(best_ratio)) +
                          " < 3; refine the mesh to probe this inclusion");
    return best;
}

}  // namespace detail

// Perfect-bond interface density: solves the exterior Neumann-type system
// with one mean constraint per inclusion. The bordered matrix is invertible
// even though 1/2 I - K* alone is not.
template <typename Scalar>
Density<Scalar> solve_perfect(const Assembly<Scalar>& a,
                              const BoundaryOperator<Scalar>& kstar,
                              const DtnOperator<Scalar>& dtn,
                              const HarmonicBackground<Scalar>& h) {
    if (kstar.kind != OperatorKind::AdjointDoubleLayerTrace)
        throw std::invalid_argument("solve_perfect: operator must be the adjoint double layer");
    const int m = a.num_nodes;
    const int nr = a.num_regions;
    const VecX<Scalar> rhs_density = h.normal_derivative(a);

    MatX<Scalar> big = MatX<Scalar>::Zero(m + nr, m + nr);
    big.topLeftCorner(m, m) = Scalar(0.5) * MatX<Scalar>::Identity(m, m) - kstar.matrix;
    for (int j = 0; j < nr; ++j) {
        big.block(0, m + j, m, 1) = dtn.indicators.col(j);
        for (int c = 0; c < a.component_count(); ++c) {
            if (a.region[c] != j) continue;
            const auto& comp = a.components[c];
            big.block(m + j, a.offset[c], 1, comp.n) = comp.weights.transpose();
        }
    }
    VecX<Scalar> rhs = VecX<Scalar>::Zero(m + nr);
    rhs.head(m) = rhs_density;

    Eigen::PartialPivLU<MatX<Scalar>> lu(big);
    const VecX<Scalar> sol = lu.solve(rhs);
    const Scalar residual = (big * sol - rhs).norm();
    if (!(residual <= Scalar(1e-8) * (Scalar(1) + rhs.norm())))
        throw std::runtime_error("solve_perfect: bordered system solve failed");

    Density<Scalar> phi0;
    phi0.assembly = &a;
    phi0.values = sol.head(m);
    return phi0;
}

// Everything about a configuration that does not depend on gamma.
template <typename Scalar>
struct TransmissionSetup {
    const Assembly<Scalar>* assembly = nullptr;
    const BoundaryOperator<Scalar>* single_layer = nullptr;
    const DtnOperator<Scalar>* dtn = nullptr;
    HarmonicBackground<Scalar> background;
    Density<Scalar> phi0;        // perfect-bond density
    VecX<Scalar> u0_interior;    // perfect-bond interior constants
    Mat2X<Scalar> probes;        // one verified interior point per region
};

template <typename Scalar>
struct TransmissionSolution {
    Scalar gamma = 0;
    Density<Scalar> phi;         // density at this gamma
    Density<Scalar> phi0;        // perfect-bond density (shared reference data)
    VecX<Scalar> offsets;        // a_j: interior constants are u0_interior - a_j
    VecX<Scalar> u0_interior;
    Mat2X<Scalar> probes;
    HarmonicBackground<Scalar> background;
    const Assembly<Scalar>* assembly = nullptr;
    const BoundaryOperator<Scalar>* single_layer = nullptr;

    VecX<Scalar> interior_values() const { return u0_interior - offsets; }
};

template <typename Scalar>
TransmissionSetup<Scalar> make_setup(const Assembly<Scalar>& a,
                                     const BoundaryOperator<Scalar>& single_layer,
                                     const BoundaryOperator<Scalar>& kstar,
                                     const DtnOperator<Scalar>& dtn,
                                     const HarmonicBackground<Scalar>& h) {
    TransmissionSetup<Scalar> setup;
    setup.assembly = &a;
    setup.single_layer = &single_layer;
    setup.dtn = &dtn;
    setup.background = h;
    setup.phi0 = solve_perfect(a, kstar, dtn, h);

    setup.probes.resize(2, a.num_regions);
    for (int j = 0; j < a.num_regions; ++j)
        setup.probes.col(j) = detail::interior_probe(a, j);

    // Perfect-bond interior constants: u0 is continuous across the interface,
    // so its interior value is h + S[phi0] sampled anywhere inside.
    const FieldSamples<Scalar> s =
        eval_single_layer(a, setup.phi0.values, setup.probes, false, Scalar(probe_clearance));
    setup.u0_interior = h.values_at(setup.probes) + s.values;
    return setup;
}

// Imperfect-bond solve at one gamma. The resolvent is applied to the perfect
// density and to each equilibrium density; the interior offsets then solve
//   C^gamma a = -(mean of resolvent applied to phi0 over each inclusion).
template <typename Scalar>
TransmissionSolution<Scalar> solve_with(const TransmissionSetup<Scalar>& setup, Scalar gamma) {
    const Assembly<Scalar>& a = *setup.assembly;
    const int nr = a.num_regions;

    const Resolvent<Scalar> res = make_resolvent(*setup.dtn, gamma);
    const VecX<Scalar> r = res.apply(setup.phi0.values);
    MatX<Scalar> q(a.num_nodes, nr);
    for (int j = 0; j < nr; ++j)
        q.col(j) = res.apply(setup.dtn->indicators.col(j));

    MatX<Scalar> cap(nr, nr);
    VecX<Scalar> rhs(nr);
    for (int i = 0; i < nr; ++i) {
        rhs[i] = -a.region_integral(i, r);
        for (int j = 0; j < nr; ++j) cap(i, j) = a.region_integral(i, q.col(j));
    }
    const VecX<Scalar> offs = Eigen::PartialPivLU<MatX<Scalar>>(cap).solve(rhs);

    TransmissionSolution<Scalar> sol;
    sol.gamma = gamma;
    sol.phi0 = setup.phi0;
    sol.offsets = offs;
    sol.u0_interior = setup.u0_interior;
    sol.probes = setup.probes;
    sol.background = setup.background;
    sol.assembly = setup.assembly;
    sol.single_layer = setup.single_layer;
    sol.phi.assembly = setup.assembly;
    sol.phi.values = r + q * offs;
    return sol;
}

template <typename Scalar>
TransmissionSolution<Scalar> solve_imperfect(const Assembly<Scalar>& a,
                                             const BoundaryOperator<Scalar>& single_layer,
                                             const BoundaryOperator<Scalar>& kstar,
                                             const DtnOperator<Scalar>& dtn,
                                             const HarmonicBackground<Scalar>& h,
                                             Scalar gamma) {
    return solve_with(make_setup(a, single_layer, kstar, dtn, h), gamma);
}

// Field evaluation. Interior points get the locally constant state; exterior
// points get h + S[phi] - gamma D[phi]. Points too close to the interface for
// plain quadrature are refused, not silently mis-evaluated; refine > 1
// resamples the boundary data onto a refine-times finer grid first, which
// divides the usable distance-to-boundary by the same factor (the clearance
// parameter then counts fine spacings).
template <typename Scalar>
FieldSamples<Scalar> eval_field(const TransmissionSolution<Scalar>& sol,
                                const Mat2X<Scalar>& points,
                                bool want_gradient = false,
                                Scalar clearance = Scalar(5),
                                int refine = 1) {
    const Assembly<Scalar>& a = *sol.assembly;
    const int np = int(points.cols());
    FieldSamples<Scalar> out;
    out.values.resize(np);
    if (want_gradient) out.gradients.resize(2, np);

    std::vector<int> exterior_idx;
    const VecX<Scalar> inner = sol.interior_values();
    for (int p = 0; p < np; ++p) {
        const Vec2<Scalar> xp = points.col(p);
        const int region = region_of_point(a, xp);
        if (region >= 0) {
            out.values[p] = inner[region];
            if (want_gradient) out.gradients.col(p).setZero();
        } else {
            exterior_idx.push_back(p);
        }
    }
    if (exterior_idx.empty()) return out;

    Mat2X<Scalar> ext(2, exterior_idx.size());
    for (size_t k = 0; k < exterior_idx.size(); ++k) ext.col(int(k)) = points.col(exterior_idx[k]);

    const Assembly<Scalar>* eval_a = &a;
    VecX<Scalar> phi_eval = sol.phi.values;
    Assembly<Scalar> fine;
    if (refine > 1) {
        fine = refine_assembly(a, refine);
        phi_eval = upsample_density(a, sol.phi.values, refine);
        eval_a = &fine;
    }
    const FieldSamples<Scalar> s =
        eval_single_layer(*eval_a, phi_eval, ext, want_gradient, clearance);
    FieldSamples<Scalar> d;
    if (sol.gamma != Scalar(0))
        d = eval_double_layer(*eval_a, phi_eval, ext, want_gradient, clearance);
    for (size_t k = 0; k < exterior_idx.size(); ++k) {
        const int p = exterior_idx[k];
        const Vec2<Scalar> x = points.col(p);
        out.values[p] = sol.background.value(x) + s.values[int(k)];
        if (sol.gamma != Scalar(0)) out.values[p] -= sol.gamma * d.values[int(k)];
        if (want_gradient) {
            out.gradients.col(p) = sol.background.gradient(x) + s.gradients.col(int(k));
            if (sol.gamma != Scalar(0)) out.gradients.col(p) -= sol.gamma * d.gradients.col(int(k));
        }
    }
    return out;
}

// First-order expansion of the solution in gamma:
//   u^gamma = u0 + gamma v1 + o(gamma),  phi^gamma = phi0 + gamma psi1 + o(gamma).
// v1 is the single layer of delta = S^-1 phi0 minus its equilibrium projection
// outside, and the constant beta_i inside inclusion i.
template <typename Scalar>
struct FirstOrderTerm {
    Density<Scalar> phi_tilde;   // S^-1 phi0
    VecX<Scalar> beta;           // interior values of v1
    Density<Scalar> delta;       // phi_tilde minus equilibrium projection
    Density<Scalar> psi1;        // d phi^gamma / d gamma at gamma = 0
    const Assembly<Scalar>* assembly = nullptr;
};

template <typename Scalar>
FirstOrderTerm<Scalar> first_order_term(const Assembly<Scalar>& a,
                                        const DtnOperator<Scalar>& dtn,
                                        const Density<Scalar>& phi0) {
    FirstOrderTerm<Scalar> term;
    term.assembly = &a;
    term.phi_tilde.assembly = &a;
    term.phi_tilde.values = dtn.solve_single_layer(phi0.values);

    const int nr = a.num_regions;
    MatX<Scalar> cap0(nr, nr);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nr; ++j)
            cap0(i, j) = a.region_integral(i, dtn.indicators.col(j));
    VecX<Scalar> mu(nr);
    for (int j = 0; j < nr; ++j) mu[j] = a.region_integral(j, term.phi_tilde.values);
    Eigen::PartialPivLU<MatX<Scalar>> cap_lu(cap0);
    term.beta = cap_lu.solve(mu);

    term.delta.assembly = &a;
    term.delta.values = term.phi_tilde.values - dtn.indicators * term.beta;

    // psi1 = -Lambda phi0 + sum_i (C0^-1 m)_i e_i with m_j the inclusion means
    // of Lambda phi0; the means of psi1 then vanish, as flux balance demands.
    const VecX<Scalar> lam_phi0 = dtn.apply(phi0.values);
    VecX<Scalar> means(nr);
    for (int j = 0; j < nr; ++j) means[j] = a.region_integral(j, lam_phi0);
    const VecX<Scalar> coeff = cap_lu.solve(means);
    term.psi1.assembly = &a;
    term.psi1.values = -lam_phi0 + dtn.indicators * coeff;
    return term;
}

// Evaluate v1 at points: beta_i inside inclusion i, S[delta] outside.
template <typename Scalar>
FieldSamples<Scalar> eval_first_order(const FirstOrderTerm<Scalar>& term,
                                      const Mat2X<Scalar>& points,
                                      bool want_gradient = false,
                                      Scalar clearance = Scalar(5)) {
    const Assembly<Scalar>& a = *term.assembly;
    const int np = int(points.cols());
    FieldSamples<Scalar> out;
    out.values.resize(np);
    if (want_gradient) out.gradients.resize(2, np);

    std::vector<int> exterior_idx;
    for (int p = 0; p < np; ++p) {
        const Vec2<Scalar> xp = points.col(p);
        const int region = region_of_point(a, xp);
        if (region >= 0) {
            out.values[p] = term.beta[region];
            if (want_gradient) out.gradients.col(p).setZero();
        } else {
            exterior_idx.push_back(p);
        }
    }
    if (exterior_idx.empty()) return out;
    Mat2X<Scalar> ext(2, exterior_idx.size());
    for (size_t k = 0; k < exterior_idx.size(); ++k) ext.col(int(k)) = points.col(exterior_idx[k]);
    const FieldSamples<Scalar> s = eval_single_layer(a, term.delta.values, ext, want_gradient, clearance);
    for (size_t k = 0; k < exterior_idx.size(); ++k) {
        out.values[exterior_idx[k]] = s.values[int(k)];
        if (want_gradient) out.gradients.col(exterior_idx[k]) = s.gradients.col(int(k));
    }
    return out;
}

namespace detail {

// Polynomial extrapolation to 0 through (xs, ys), Neville's scheme.
template <typename Scalar>
Scalar extrapolate_to_zero(std::vector<Scalar> xs, std::vector<Scalar> ys) {
    const int n = int(xs.size());
    for (int lev = 1; lev < n; ++lev)
        for (int i = 0; i + lev < n; ++i)
            ys[i] = (xs[i + lev] * ys[i] - xs[i] * ys[i + 1]) / (xs[i + lev] - xs[i]);
    return ys[0];
}

}  // namespace detail

// Residual of the interface condition u|+ - gamma du/dnu|+ = u|- measured
// from off-boundary samples only. Plain quadrature is only trustworthy a few
// node spacings away from the boundary, so the boundary data is resampled
// onto a factor-q finer grid (exact curve re-evaluation, band-limited
// density interpolation); traces are then extrapolated to the boundary from
// offsets mult * (fine spacing) along +/-nu. Offsets below ~4 fine spacings
// would hit quadrature noise; wider offset spans raise the extrapolation
// truncation, which scales like span^(#offsets). Both sides go through the
// raw layer representation (not the interior-constant shortcut), so the check
// exercises the solved density end to end.
template <typename Scalar>
struct BoundaryResidual {
    Scalar max_residual = 0;
    Scalar scale = 0;    // max sampled |u|, for relative comparison
    int samples = 0;
};

template <typename Scalar>
BoundaryResidual<Scalar> boundary_residual(const TransmissionSolution<Scalar>& sol,
                                           int stride = 8, int q = 32,
                                           std::vector<Scalar> mult = {4, 5, 6, 7, 8}) {
    const Assembly<Scalar>& a = *sol.assembly;
    const Assembly<Scalar> fine = refine_assembly(a, q);
    const VecX<Scalar> phi_fine = upsample_density(a, sol.phi.values, q);
    // grad D[phi] = rot(grad S[d_tau phi]) with rot(v) = (v2, -v1); routing
    // the double-layer gradient through the single-layer kernel keeps the
    // near-boundary quadrature noise at the single-layer level.
    const VecX<Scalar> dtau_fine =
        upsample_density(a, tangential_derivative(a, sol.phi).values, q);

    const int nm = int(mult.size());
    BoundaryResidual<Scalar> out;
    out.scale = sol.interior_values().cwiseAbs().maxCoeff();

    for (int c = 0; c < a.component_count(); ++c) {
        const auto& comp = fine.components[c];
        const int region = a.region[c];
        for (int k = 0; k < comp.n; k += stride * q) {
            const Vec2<Scalar> x = comp.points.col(k);
            const Vec2<Scalar> nu = comp.normals.col(k);
            const Scalar w = comp.weights[k];
            Mat2X<Scalar> outer(2, nm), inner(2, nm);
            for (int m = 0; m < nm; ++m) {
                outer.col(m) = x + mult[size_t(m)] * w * nu;
                inner.col(m) = x - mult[size_t(m)] * w * nu;
            }
            // skip nodes whose inward ray leaves the inclusion (thin shapes)
            if (!point_in_region(a, region, Vec2<Scalar>(inner.col(nm - 1)))) continue;

            const FieldSamples<Scalar> sl_out =
                eval_single_layer(fine, phi_fine, outer, true, Scalar(3.5));
            const FieldSamples<Scalar> sl_in =
                eval_single_layer(fine, phi_fine, inner, false, Scalar(3.5));
            VecX<Scalar> u_out = sol.background.values_at(outer) + sl_out.values;
            VecX<Scalar> u_in = sol.background.values_at(inner) + sl_in.values;
            Mat2X<Scalar> g_out = sol.background.gradients_at(outer) + sl_out.gradients;
            if (sol.gamma != Scalar(0)) {
                const FieldSamples<Scalar> dl_out =
                    eval_double_layer(fine, phi_fine, outer, false, Scalar(3.5));
                const FieldSamples<Scalar> dl_in =
                    eval_double_layer(fine, phi_fine, inner, false, Scalar(3.5));
                const FieldSamples<Scalar> rot =
                    eval_single_layer(fine, dtau_fine, outer, true, Scalar(3.5));
                u_out -= sol.gamma * dl_out.values;
                u_in -= sol.gamma * dl_in.values;
                g_out.row(0) -= sol.gamma * rot.gradients.row(1);
                g_out.row(1) += sol.gamma * rot.gradients.row(0);
            }

            std::vector<Scalar> xs(mult.begin(), mult.end());
            std::vector<Scalar> u_plus(mult.size()), flux_plus(mult.size()), u_minus(mult.size());
            for (int m = 0; m < nm; ++m) {
                u_plus[size_t(m)] = u_out[m];
                flux_plus[size_t(m)] = g_out.col(m).dot(nu);
                u_minus[size_t(m)] = u_in[m];
            }
            const Scalar lhs = detail::extrapolate_to_zero(xs, u_plus) -
                               sol.gamma * detail::extrapolate_to_zero(xs, flux_plus);
            const Scalar rhs = detail::extrapolate_to_zero(xs, u_minus);
            out.max_residual = std::max(out.max_residual, std::abs(lhs - rhs));
            out.scale = std::max(out.scale, std::abs(u_plus[0]));
            ++out.samples;
        }
    }
    return out;
}

// Far-field decay of the perturbation u^a - u^b between two solutions of the
// same configuration. Formed directly from the density difference,
//   u^a - u^b = S[phi^a - phi^b] - D[gamma_a phi^a - gamma_b phi^b],
// so there is no cancellation of the shared background at large radius.
template <typename Scalar>
struct DecayRow {
    Scalar radius;
    Scalar value_scaled;     // max over the circle of |u^a - u^b| * r
    Scalar gradient_scaled;  // max over the circle of |grad(u^a - u^b)| * r^2
};

template <typename Scalar>
std::vector<DecayRow<Scalar>> decay_at_infinity(const TransmissionSolution<Scalar>& sa,
                                                const TransmissionSolution<Scalar>& sb,
                                                const std::vector<Scalar>& radii,
                                                int n_angles = 64) {
    if (sa.assembly != sb.assembly)
        throw std::invalid_argument("decay_at_infinity: solutions use different assemblies");
    const Assembly<Scalar>& a = *sa.assembly;
    const VecX<Scalar> dphi = sa.phi.values - sb.phi.values;
    const VecX<Scalar> dl_density = sa.gamma * sa.phi.values - sb.gamma * sb.phi.values;

    std::vector<DecayRow<Scalar>> rows;
    for (Scalar r : radii) {
        Mat2X<Scalar> pts(2, n_angles);
        for (int k = 0; k < n_angles; ++k) {
            const Scalar th = two_pi<Scalar> * Scalar(k) / Scalar(n_angles);
            pts.col(k) = Vec2<Scalar>(r * std::cos(th), r * std::sin(th));
        }
        const FieldSamples<Scalar> s = eval_single_layer(a, dphi, pts, true, Scalar(5));
        const FieldSamples<Scalar> d = eval_double_layer(a, dl_density, pts, true, Scalar(5));
        DecayRow<Scalar> row;
        row.radius = r;
        row.value_scaled = ((s.values - d.values).cwiseAbs() * r).maxCoeff();
        row.gradient_scaled = (s.gradients - d.gradients).colwise().norm().maxCoeff() * r * r;
        rows.push_back(row);
    }
    return rows;
}

// Largest field gradient over a point set, skipping interior points (where
// the gradient vanishes identically). Used as the blow-up metric.
template <typename Scalar>
Scalar gradient_sup(const TransmissionSolution<Scalar>& sol,
                    const Mat2X<Scalar>& points,
                    Scalar clearance = Scalar(5), int refine = 1) {
    const FieldSamples<Scalar> s = eval_field(sol, points, true, clearance, refine);
    return s.gradients.colwise().norm().maxCoeff();
}

// Uniform segment between two points, endpoints included.
template <typename Scalar>
Mat2X<Scalar> segment_grid(const Vec2<Scalar>& p0, const Vec2<Scalar>& p1, int n) {
    if (n < 2) throw std::invalid_argument("segment_grid: need at least 2 points");
    Mat2X<Scalar> pts(2, n);
    for (int k = 0; k < n; ++k)
        pts.col(k) = p0 + (Scalar(k) / Scalar(n - 1)) * (p1 - p0);
    return pts;
}

// Polar grid of nr radii by nt angles, radii uniformly spaced in [r0, r1].
template <typename Scalar>
Mat2X<Scalar> annulus_grid(Scalar r0, Scalar r1, int nr, int nt,
                           const Vec2<Scalar>& center = Vec2<Scalar>::Zero()) {
    if (nr < 1 || nt < 1) throw std::invalid_argument("annulus_grid: empty grid");
    Mat2X<Scalar> pts(2, nr * nt);
    for (int i = 0; i < nr; ++i) {
        const Scalar r = nr == 1 ? r0 : r0 + (r1 - r0) * Scalar(i) / Scalar(nr - 1);
        for (int k = 0; k < nt; ++k) {
            const Scalar th = two_pi<Scalar> * Scalar(k) / Scalar(nt);
            pts.col(i * nt + k) = center + Vec2<Scalar>(r * std::cos(th), r * std::sin(th));
        }
    }
    return pts;
}

// Sample segment across the narrowest gap between two curves, pulled in from
// each endpoint by gap_clearance local mesh widths so plain quadrature stays
// accurate. Refuses geometries where the safety offsets would swallow the gap.
template <typename Scalar>
Mat2X<Scalar> midgap_segment(const Assembly<Scalar>& a, int n_points,
                             Scalar gap_clearance = Scalar(0.5)) {
    const GapInfo<Scalar> gap = min_gap_info(a);
    const Vec2<Scalar> dir = (gap.point_b - gap.point_a).normalized();
    const Vec2<Scalar> p0 = gap.point_a + gap_clearance * gap.spacing_a * dir;
    const Vec2<Scalar> p1 = gap.point_b - gap_clearance * gap.spacing_b * dir;
    if ((p1 - p0).dot(dir) <= Scalar(0))
        throw guard_error("midgap_segment: clearance offsets exceed the gap; refine the mesh");
    return segment_grid(p0, p1, n_points);
}

}  // namespace impbond

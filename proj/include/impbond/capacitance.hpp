#pragma once

// Resistive capacitance matrices
//
//   C^gamma_ij = \oint_{partial D_i} (I + gamma*Lambda)^{-1}[e_j] ds,
//
// symmetric positive-definite for gamma >= 0, reducing to the classical
// capacitance matrix at gamma = 0. Closed forms for the disk and the ball,
// the excision-invariance comparison (a domain and the annular shell between
// its boundary and an excised interior hole carry the same capacitance), and
// the small-gamma moment expansion C^gamma ~ sum_l (-gamma)^l m_l with
// m_l(i,j) = \oint_{partial D_i} Lambda^l[e_j] ds.

#include "boundary_ops.hpp"
#include "dtn.hpp"
#include "fit.hpp"
#include "geometry.hpp"

#include <optional>

namespace impbond {

template <typename Scalar>
struct ResistiveCapacitanceMatrix {
    Scalar gamma = 0;
    MatX<Scalar> matrix;  // num_regions x num_regions
};

template <typename Scalar>
ResistiveCapacitanceMatrix<Scalar> capacitance_matrix(const Assembly<Scalar>& a,
                                                      const DtnOperator<Scalar>& dtn,
                                                      Scalar gamma) {
    const int N = a.num_regions;
    ResistiveCapacitanceMatrix<Scalar> cap;
    cap.gamma = gamma;
    cap.matrix.resize(N, N);
    const Resolvent<Scalar> res = make_resolvent(dtn, gamma);
    for (int j = 0; j < N; ++j) {
        const VecX<Scalar> q = res.apply(dtn.indicators.col(j));
        for (int i = 0; i < N; ++i) cap.matrix(i, j) = a.region_integral(i, q);
    }
    return cap;
}

// Disk of radius R < 1 (so the planar capacity condition holds):
//   C^gamma = 2 pi R / (-R log R + gamma).
template <typename Scalar>
Scalar analytic_disk_capacitance(Scalar radius, Scalar gamma) {
    if (!(radius > Scalar(0)))
        throw std::invalid_argument("disk capacitance: radius must be positive");
    if (!(radius < Scalar(1)))
        throw guard_error("disk capacitance: radius must be below 1 (capacity condition; "
                          "-R log R vanishes at R = 1)");
    if (gamma < Scalar(0))
        throw std::invalid_argument("disk capacitance: gamma must be nonnegative");
    return two_pi<Scalar> * radius / (-radius * std::log(radius) + gamma);
}

// Ball in dimension d >= 3:
//   C^gamma = (d-2) omega_d R^{d-1} / (R^{d-2} + (d-2) gamma),
// with omega_d the surface area of the unit sphere.
template <typename Scalar>
Scalar analytic_ball_capacitance(int dim, Scalar radius, Scalar gamma) {
    if (dim < 3)
        throw std::invalid_argument("ball capacitance: requires dimension >= 3 "
                                    "(use the disk formula in the plane)");
    if (!(radius > Scalar(0)))
        throw std::invalid_argument("ball capacitance: radius must be positive");
    if (gamma < Scalar(0))
        throw std::invalid_argument("ball capacitance: gamma must be nonnegative");
    const Scalar omega = 2 * std::pow(std::numbers::pi_v<Scalar>, Scalar(dim) / 2) /
                         std::tgamma(Scalar(dim) / 2);
    return Scalar(dim - 2) * omega * std::pow(radius, Scalar(dim - 1)) /
           (std::pow(radius, Scalar(dim - 2)) + Scalar(dim - 2) * gamma);
}

template <typename Scalar>
struct ExcisionCheck {
    Scalar c_domain = 0;   // capacitance of the full region
    Scalar c_excised = 0;  // capacitance of the shell between outer and inner curve
    Scalar rel_gap = 0;
};

// Capacitance is unchanged when an interior hole is excised from the region:
// compare the region bounded by `outer` against the shell between `outer` and
// `inner`. The shell is one connected region with a two-curve boundary; the
// inner curve is traversed reversed so its normal points out of the shell.
template <typename Scalar>
ExcisionCheck<Scalar> excision_invariance_check(const Curve<Scalar>& outer,
                                                const Curve<Scalar>& inner, Scalar gamma,
                                                int n, const DtnOptions& opt = {}) {
    auto outer_bc = build_component(outer, n);
    Curve<Scalar> inner_rev = inner;
    inner_rev.reversed = !inner_rev.reversed;
    auto inner_bc = build_component(inner_rev, n);

    for (int k = 0; k < inner_bc.n; ++k)
        if (winding_number(outer_bc, Vec2<Scalar>(inner_bc.points.col(k))) == 0)
            throw std::invalid_argument(
                "excision check: inner curve is not strictly inside the outer curve");

    ExcisionCheck<Scalar> out;
    {
        auto a = assemble<Scalar>({outer_bc});
        const auto S = assemble_single_layer(a);
        const auto [K, Kstar] = assemble_np(a);
        const auto dtn = build_dtn(a, S, Kstar, opt);
        out.c_domain = capacitance_matrix(a, dtn, gamma).matrix(0, 0);
    }
    {
        auto a = assemble<Scalar>({outer_bc, inner_bc}, {0, 0});
        if (min_gap(a) <= Scalar(0))
            throw std::invalid_argument("excision check: curves intersect");
        const auto S = assemble_single_layer(a);
        const auto [K, Kstar] = assemble_np(a);
        const auto dtn = build_dtn(a, S, Kstar, opt);
        out.c_excised = capacitance_matrix(a, dtn, gamma).matrix(0, 0);
    }
    out.rel_gap = std::abs(out.c_excised - out.c_domain) / std::abs(out.c_domain);
    return out;
}

template <typename Scalar>
struct CapacitanceExpansion {
    std::vector<MatX<Scalar>> moments;   // m_l, l = 0..K
    VecX<Scalar> residuals;              // ||C^gamma - sum_l (-gamma)^l m_l||_F per gamma
    std::optional<FitResult<Scalar>> residual_slope;  // log-log fit vs gamma
};

template <typename Scalar>
CapacitanceExpansion<Scalar> capacitance_expansion(const Assembly<Scalar>& a,
                                                   const DtnOperator<Scalar>& dtn,
                                                   const std::vector<Scalar>& gammas,
                                                   int order) {
    if (order < 0 || order > 1)
        throw std::invalid_argument("capacitance expansion: order must be 0 or 1");
    const int N = a.num_regions;
    CapacitanceExpansion<Scalar> out;

    std::vector<VecX<Scalar>> powers;  // Lambda^l[e_j] stacked per l
    powers.reserve(order + 1);
    for (int l = 0; l <= order; ++l) {
        MatX<Scalar> m(N, N);
        for (int j = 0; j < N; ++j) {
            VecX<Scalar> v = dtn.indicators.col(j);
            for (int p = 0; p < l; ++p) v = dtn.map * v;
            for (int i = 0; i < N; ++i) m(i, j) = a.region_integral(i, v);
        }
        out.moments.push_back(std::move(m));
    }

    out.residuals.resize(static_cast<int>(gammas.size()));
    std::vector<Scalar> xs, ys;
    for (size_t g = 0; g < gammas.size(); ++g) {
        const auto cap = capacitance_matrix(a, dtn, gammas[g]);
        MatX<Scalar> approx = MatX<Scalar>::Zero(N, N);
        Scalar coeff = 1;
        for (int l = 0; l <= order; ++l) {
            approx += coeff * out.moments[l];
            coeff *= -gammas[g];
        }
        const Scalar r = (cap.matrix - approx).norm();
        out.residuals[static_cast<int>(g)] = r;
        // Only gammas where the first correction is subdominant sit in the
        // asymptotic regime the slope fit is about.
        const bool small = order == 0 ||
                           gammas[g] * out.moments[1].norm() <= out.moments[0].norm() / 2;
        if (gammas[g] > Scalar(0) && r > Scalar(0) && small) {
            xs.push_back(gammas[g]);
            ys.push_back(r);
        }
    }
    out.residual_slope = fit_loglog(xs, ys);
    return out;
}

}  // namespace impbond

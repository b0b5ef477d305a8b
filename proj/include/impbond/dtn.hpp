#pragma once

// Exterior Dirichlet-to-Neumann map on an assembly of closed curves and the
// resolvent family (I + gamma*Lambda)^{-1}.
//
//   Lambda = -(1/2 I + K*) S^{-1}
//
// maps Dirichlet data on the boundary to minus the normal derivative of its
// decaying harmonic extension into the exterior. Nonnegative in L^2(ds) when
// the logarithmic capacity condition holds (operationally: the geometry sits
// well inside the unit disk, so the Robin constant c_0 is negative and
// bounded away from zero). The resolvent is then a contraction for every
// gamma >= 0.
//
// Also built here: the equilibrium density phi_0 (unit mass, S[phi_0] = c_0
// constant on the whole boundary) and the indicator densities
// e_j = -S^{-1}[1_{partial D_j}], which satisfy K* e_j = e_j / 2 and
// Lambda[1_{partial D_j}] = e_j.

#include "boundary_ops.hpp"
#include "geometry.hpp"

#include <Eigen/LU>

namespace impbond {

// Raised when a validity guard rejects the configuration (as opposed to a
// malformed argument).
struct guard_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct EquilibriumData {
    Density<Scalar> phi0;  // unit mass, S[phi0] constant
    Scalar c0 = 0;         // the constant (Robin constant)
};

// Unit-mass density with constant single-layer trace, via the bordered system
//   [ S   -1 ] [phi]   [0]
//   [ w^T  0 ] [ c ] = [1].
// The bordered matrix stays invertible even where S itself degenerates
// (capacity exactly one), which lets the guard measure c_0 before any
// factorization of S is attempted.
template <typename Scalar>
EquilibriumData<Scalar> equilibrium(const Assembly<Scalar>& a,
                                    const BoundaryOperator<Scalar>& S) {
    const int M = a.num_nodes;
    MatX<Scalar> B(M + 1, M + 1);
    B.topLeftCorner(M, M) = S.matrix;
    B.topRightCorner(M, 1).setConstant(Scalar(-1));
    B.bottomLeftCorner(1, M) = a.weights.transpose();
    B(M, M) = 0;
    VecX<Scalar> rhs = VecX<Scalar>::Zero(M + 1);
    rhs[M] = 1;
    Eigen::PartialPivLU<MatX<Scalar>> lu(B);
    const VecX<Scalar> sol = lu.solve(rhs);
    EquilibriumData<Scalar> eq;
    eq.phi0 = {sol.head(M), &a};
    eq.c0 = sol[M];
    return eq;
}

struct DtnOptions {
    double robin_floor = 1e-3;       // reject |c_0| below this
    double condition_limit = 1e12;   // reject S with 1-norm condition above this
};

template <typename Scalar>
struct DtnOperator {
    const Assembly<Scalar>* assembly = nullptr;
    MatX<Scalar> map;                           // Lambda
    Eigen::PartialPivLU<MatX<Scalar>> s_lu;     // factorization of S
    EquilibriumData<Scalar> eq;
    MatX<Scalar> indicators;                    // column j: e_j = -S^{-1} 1_{dD_j}
    Scalar condition_estimate = 0;

    VecX<Scalar> apply(const VecX<Scalar>& f) const { return map * f; }

    // Solve S x = b with the cached factorization.
    VecX<Scalar> solve_single_layer(const VecX<Scalar>& b) const { return s_lu.solve(b); }
};

template <typename Scalar>
DtnOperator<Scalar> build_dtn(const Assembly<Scalar>& a, const BoundaryOperator<Scalar>& S,
                              const BoundaryOperator<Scalar>& Kstar,
                              const DtnOptions& opt = {}) {
    DtnOperator<Scalar> dtn;
    dtn.assembly = &a;
    dtn.eq = equilibrium(a, S);
    if (std::abs(dtn.eq.c0) < Scalar(opt.robin_floor))
        throw guard_error(
            "dtn: Robin constant |c0| = " + std::to_string(static_cast<double>(dtn.eq.c0)) +
            " is below the floor " + std::to_string(opt.robin_floor) +
            "; the boundary's logarithmic capacity is too close to one. Rescale the "
            "geometry so it sits well inside the unit disk (or well outside it).");

    dtn.s_lu.compute(S.matrix);
    const MatX<Scalar> s_inv = dtn.s_lu.inverse();
    const Scalar cond = S.matrix.template lpNorm<1>() * s_inv.template lpNorm<1>();
    dtn.condition_estimate = cond;
    if (!(cond < Scalar(opt.condition_limit)))
        throw guard_error("dtn: single-layer matrix is numerically singular "
                          "(1-norm condition estimate " +
                          std::to_string(static_cast<double>(cond)) + ")");

    MatX<Scalar> half = Scalar(0.5) * MatX<Scalar>::Identity(a.num_nodes, a.num_nodes);
    dtn.map = -((half + Kstar.matrix) * s_inv);

    dtn.indicators.resize(a.num_nodes, a.num_regions);
    for (int j = 0; j < a.num_regions; ++j) {
        VecX<Scalar> one_j = VecX<Scalar>::Zero(a.num_nodes);
        for (int c = 0; c < a.component_count(); ++c)
            if (a.region[c] == j)
                one_j.segment(a.offset[c], a.components[c].n).setOnes();
        dtn.indicators.col(j) = -dtn.s_lu.solve(one_j);
    }
    return dtn;
}

template <typename Scalar>
Density<Scalar> indicator_density(const DtnOperator<Scalar>& dtn, int j) {
    if (j < 0 || j >= int(dtn.indicators.cols()))
        throw std::out_of_range("indicator_density: no such region");
    return {dtn.indicators.col(j), dtn.assembly};
}

// Factorized (I + gamma*Lambda)^{-1} for reuse across right-hand sides.
template <typename Scalar>
struct Resolvent {
    Scalar gamma = 0;
    const DtnOperator<Scalar>* dtn = nullptr;
    Eigen::PartialPivLU<MatX<Scalar>> lu;

    VecX<Scalar> apply(const VecX<Scalar>& f) const {
        if (gamma == Scalar(0)) return f;  // exact identity branch
        return lu.solve(f);
    }
    Density<Scalar> apply(const Density<Scalar>& f) const {
        return {apply(f.values), dtn->assembly};
    }
};

template <typename Scalar>
Resolvent<Scalar> make_resolvent(const DtnOperator<Scalar>& dtn, Scalar gamma) {
    if (gamma < Scalar(0))
        throw std::invalid_argument("resolvent: gamma must be nonnegative");
    Resolvent<Scalar> r;
    r.gamma = gamma;
    r.dtn = &dtn;
    if (gamma != Scalar(0)) {
        const int M = dtn.assembly->num_nodes;
        r.lu.compute(MatX<Scalar>::Identity(M, M) + gamma * dtn.map);
    }
    return r;
}

template <typename Scalar>
Density<Scalar> resolvent_apply(const DtnOperator<Scalar>& dtn, Scalar gamma,
                                const Density<Scalar>& f) {
    return make_resolvent(dtn, gamma).apply(f);
}

// || (I+gamma*Lambda)^{-1} f  -  sum_{l=0}^{K} (-gamma)^l Lambda^l f ||_{L^2(ds)}.
// The Neumann tail is O(gamma^{K+1}) on smooth geometry.
template <typename Scalar>
Scalar resolvent_expansion_residual(const DtnOperator<Scalar>& dtn, Scalar gamma,
                                    const Density<Scalar>& f, int order) {
    if (order < 0) throw std::invalid_argument("resolvent expansion: order must be >= 0");
    const VecX<Scalar> exact = resolvent_apply(dtn, gamma, f).values;
    VecX<Scalar> term = f.values;
    VecX<Scalar> acc = term;
    for (int l = 1; l <= order; ++l) {
        term = -gamma * (dtn.map * term);
        acc += term;
    }
    return weighted_norm(*dtn.assembly, VecX<Scalar>(exact - acc));
}

// 2-norm of diag(sqrt(w)) M diag(1/sqrt(w)): the discrete L^2(ds) operator
// norm used by the contraction checks.
template <typename Scalar>
Scalar weighted_operator_norm(const Assembly<Scalar>& a, const MatX<Scalar>& m) {
    const VecX<Scalar> sq = a.weights.cwiseSqrt();
    const MatX<Scalar> scaled = sq.asDiagonal() * m * sq.cwiseInverse().asDiagonal();
    return Eigen::BDCSVD<MatX<Scalar>>(scaled).singularValues()(0);
}

}  // namespace impbond

#pragma once

// Nystrom matrices for the logarithmic single layer and the double-layer
// trace pair on assemblies of closed analytic curves.
//
// With Gamma(x) = (1/2pi) log|x| the single layer on one curve is split
// Kussmaul-Martensen style,
//
//   log|x(t)-x(s)| = (1/2) log(4 sin^2((t-s)/2))
//                  + log( |x(t)-x(s)| / (2 |sin((t-s)/2)|) ),
//
// the first part integrated by the exact trigonometric rule with weights
//
//   R_n(d) = -(4pi/n) sum_{m=1}^{n/2-1} cos(2pi m d/n)/m - (4pi/n^2)(-1)^d,
//
// the smooth remainder (diagonal limit log J) by the plain trapezoid rule.
// Cross-curve blocks are smooth and use the trapezoid rule directly. The
// resulting matrix is exact on trigonometric densities of degree < n/2, which
// on a circle reproduces the Fourier symbols -R/(2|m|) and R log R.
//
// The double-layer trace K has the continuous kernel
//   -(1/2pi) (x-y).nu_y / |x-y|^2,  diagonal limit  kappa(x)/(4pi),
// and its L^2(ds) adjoint is formed as K* = W^{-1} K^T W with W = diag(w_k),
// making <K phi, psi>_W = <phi, K* psi>_W exact by construction.

#include "geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace impbond {

// Node samples of a density on an assembly's boundary.
template <typename Scalar>
struct Density {
    VecX<Scalar> values;
    const Assembly<Scalar>* assembly = nullptr;

    Scalar region_integral(int j) const { return assembly->region_integral(j, values); }

    // Member of the zero-mean-per-inclusion subspace?
    bool is_tilde(Scalar tol = Scalar(1e-10)) const {
        for (int j = 0; j < assembly->num_regions; ++j)
            if (std::abs(region_integral(j)) > tol) return false;
        return true;
    }
};

template <typename Scalar>
Scalar weighted_dot(const Assembly<Scalar>& a, const VecX<Scalar>& u, const VecX<Scalar>& v) {
    return (a.weights.array() * u.array() * v.array()).sum();
}

// Discrete L^2(ds) norm, sqrt(sum_k w_k v_k^2).
template <typename Scalar>
Scalar weighted_norm(const Assembly<Scalar>& a, const VecX<Scalar>& v) {
    return std::sqrt(weighted_dot(a, v, v));
}

enum class OperatorKind {
    SingleLayer,
    DoubleLayerTrace,         // K
    AdjointDoubleLayerTrace,  // K*
    DirichletToNeumann,
    Composite,
};

template <typename Scalar>
struct BoundaryOperator {
    OperatorKind kind = OperatorKind::Composite;
    MatX<Scalar> matrix;
    const Assembly<Scalar>* assembly = nullptr;

    Density<Scalar> apply(const Density<Scalar>& d) const {
        return {matrix * d.values, assembly};
    }
    VecX<Scalar> apply(const VecX<Scalar>& v) const { return matrix * v; }
};

namespace detail {

// Weights of the exact rule for f -> int_0^{2pi} f(s) log(4 sin^2((t_i-s)/2)) ds
// as a function of the index offset d = i - j mod n.
template <typename Scalar>
VecX<Scalar> log_rule_weights(int n) {
    VecX<Scalar> r(n);
    const Scalar pi = std::numbers::pi_v<Scalar>;
    for (int d = 0; d < n; ++d) {
        Scalar acc = 0;
        for (int m = 1; m < n / 2; ++m)
            acc += std::cos(two_pi<Scalar> * Scalar(m) * Scalar(d) / Scalar(n)) / Scalar(m);
        const Scalar parity = (d % 2 == 0) ? Scalar(1) : Scalar(-1);
        r[d] = -(4 * pi / Scalar(n)) * acc - (4 * pi / (Scalar(n) * Scalar(n))) * parity;
    }
    return r;
}

}  // namespace detail

template <typename Scalar>
BoundaryOperator<Scalar> assemble_single_layer(const Assembly<Scalar>& a) {
    const int M = a.num_nodes;
    MatX<Scalar> g(M, M);  // symmetric kernel factor, S = g * diag(w)
    const Scalar inv2pi = Scalar(1) / two_pi<Scalar>;

    for (int c = 0; c < a.component_count(); ++c) {
        const auto& bc = a.components[c];
        const int n = bc.n, off = a.offset[c];
        const VecX<Scalar> rw = detail::log_rule_weights<Scalar>(n);
        const Scalar trap = two_pi<Scalar> / Scalar(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                Scalar smooth;
                if (i == j) {
                    smooth = std::log(bc.jacobian[i]);
                } else {
                    const Scalar dist = (bc.points.col(i) - bc.points.col(j)).norm();
                    const Scalar half = std::abs(std::sin((bc.t[i] - bc.t[j]) / 2));
                    smooth = std::log(dist / (2 * half));
                }
                const int d = (i - j + n) % n;
                // trapezoid weight divided out so the column scaling by w_j
                // restores it; keeps g exactly symmetric.
                g(off + i, off + j) = inv2pi * (rw[d] / (2 * trap) * Scalar(1) + smooth);
            }
        }
        // different curves: plain trapezoid on the smooth kernel
        for (int c2 = 0; c2 < a.component_count(); ++c2) {
            if (c2 == c) continue;
            const auto& bd = a.components[c2];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < bd.n; ++j)
                    g(off + i, a.offset[c2] + j) =
                        inv2pi * std::log((bc.points.col(i) - bd.points.col(j)).norm());
        }
    }

    BoundaryOperator<Scalar> op;
    op.kind = OperatorKind::SingleLayer;
    op.assembly = &a;
    op.matrix = g * a.weights.asDiagonal();
    return op;
}

// K and its discrete L^2(ds) adjoint K*.
template <typename Scalar>
std::pair<BoundaryOperator<Scalar>, BoundaryOperator<Scalar>>
assemble_np(const Assembly<Scalar>& a) {
    const int M = a.num_nodes;
    MatX<Scalar> K(M, M);
    const Scalar inv2pi = Scalar(1) / two_pi<Scalar>;

    for (int c = 0; c < a.component_count(); ++c) {
        const auto& bc = a.components[c];
        const int off = a.offset[c];
        for (int i = 0; i < bc.n; ++i) {
            const Vec2<Scalar> xi = bc.points.col(i);
            for (int c2 = 0; c2 < a.component_count(); ++c2) {
                const auto& bd = a.components[c2];
                const int off2 = a.offset[c2];
                for (int j = 0; j < bd.n; ++j) {
                    if (c2 == c && i == j) {
                        K(off + i, off + i) = bc.curvature[i] / (4 * std::numbers::pi_v<Scalar>) *
                                              bc.weights[i];
                        continue;
                    }
                    const Vec2<Scalar> diff = xi - bd.points.col(j);
                    const Scalar r2 = diff.squaredNorm();
                    K(off + i, off2 + j) =
                        -inv2pi * diff.dot(bd.normals.col(j)) / r2 * bd.weights[j];
                }
            }
        }
    }

    BoundaryOperator<Scalar> k_op{OperatorKind::DoubleLayerTrace, K, &a};
    MatX<Scalar> Kstar = a.weights.cwiseInverse().asDiagonal() * K.transpose() *
                         a.weights.asDiagonal();
    BoundaryOperator<Scalar> kstar_op{OperatorKind::AdjointDoubleLayerTrace, std::move(Kstar),
                                      &a};
    return {std::move(k_op), std::move(kstar_op)};
}

// Values (and optionally gradients) of potentials off the boundary.
template <typename Scalar>
struct FieldSamples {
    VecX<Scalar> values;
    Mat2X<Scalar> gradients;  // empty unless requested
};

namespace detail {

template <typename Scalar>
void check_clearance(const Assembly<Scalar>& a, const Mat2X<Scalar>& pts, Scalar clearance) {
    for (int p = 0; p < pts.cols(); ++p) {
        const Scalar ratio = clearance_ratio(a, Vec2<Scalar>(pts.col(p)));
        if (ratio < clearance)
            throw std::invalid_argument(
                "field evaluation: point (" + std::to_string(static_cast<double>(pts(0, p))) +
                ", " + std::to_string(static_cast<double>(pts(1, p))) +
                ") is closer than " + std::to_string(static_cast<double>(clearance)) +
                " node spacings to the boundary (ratio " +
                std::to_string(static_cast<double>(ratio)) +
                "); refine the mesh or move the point");
    }
}

}  // namespace detail

// Band-limited interpolation of n equispaced periodic samples onto the
// factor-q finer equispaced grid, via the Dirichlet kernel
//   f(t) = (1/n) sum_k f_k sin(n(t-t_k)/2) cot((t-t_k)/2)      (n even),
// exact for trigonometric polynomials of degree < n/2.
template <typename Scalar>
VecX<Scalar> upsample_periodic(const VecX<Scalar>& f, int q) {
    const int n = static_cast<int>(f.size());
    const int m = n * q;
    VecX<Scalar> out(m);
    const Scalar h = two_pi<Scalar> / Scalar(m);
    for (int l = 0; l < m; ++l) {
        if (l % q == 0) {
            out[l] = f[l / q];
            continue;
        }
        const Scalar t = h * Scalar(l);
        Scalar acc = 0;
        for (int k = 0; k < n; ++k) {
            const Scalar d = (t - two_pi<Scalar> * Scalar(k) / Scalar(n)) / 2;
            acc += f[k] * std::sin(Scalar(n) * d) / std::tan(d);
        }
        out[l] = acc / Scalar(n);
    }
    return out;
}

// Global density resampled component-by-component onto refine_assembly(a, q).
template <typename Scalar>
VecX<Scalar> upsample_density(const Assembly<Scalar>& a, const VecX<Scalar>& values, int q) {
    if (values.size() != a.num_nodes)
        throw std::invalid_argument("upsample_density: length mismatch");
    VecX<Scalar> out(a.num_nodes * q);
    int fine_off = 0;
    for (int c = 0; c < a.component_count(); ++c) {
        const int n = a.components[c].n;
        out.segment(fine_off, n * q) = upsample_periodic<Scalar>(values.segment(a.offset[c], n), q);
        fine_off += n * q;
    }
    return out;
}

// S[phi](x) = (1/2pi) sum_k w_k phi_k log|x - x_k|, gradient by kernel
// differentiation. Spectrally accurate at clearance-respecting points.
template <typename Scalar>
FieldSamples<Scalar> eval_single_layer(const Assembly<Scalar>& a, const VecX<Scalar>& phi,
                                       const Mat2X<Scalar>& pts, bool with_gradient = false,
                                       Scalar clearance = Scalar(5)) {
    detail::check_clearance(a, pts, clearance);
    FieldSamples<Scalar> out;
    out.values.setZero(pts.cols());
    if (with_gradient) out.gradients.setZero(2, pts.cols());
    const Scalar inv2pi = Scalar(1) / two_pi<Scalar>;
    for (int p = 0; p < pts.cols(); ++p) {
        const Vec2<Scalar> x = pts.col(p);
        Scalar val = 0;
        Vec2<Scalar> grad = Vec2<Scalar>::Zero();
        for (int c = 0; c < a.component_count(); ++c) {
            const auto& bc = a.components[c];
            const int off = a.offset[c];
            for (int k = 0; k < bc.n; ++k) {
                const Vec2<Scalar> diff = x - bc.points.col(k);
                const Scalar r2 = diff.squaredNorm();
                const Scalar q = bc.weights[k] * phi[off + k];
                val += q * std::log(r2);
                if (with_gradient) grad += q / r2 * diff;
            }
        }
        out.values[p] = inv2pi * val / 2;  // log r = log(r^2)/2
        if (with_gradient) out.gradients.col(p) = inv2pi * grad;
    }
    return out;
}

// D[psi](x) = -(1/2pi) sum_k w_k psi_k (x-x_k).nu_k / |x-x_k|^2. By the
// divergence theorem D[1] = 1 inside an inclusion and 0 outside.
template <typename Scalar>
FieldSamples<Scalar> eval_double_layer(const Assembly<Scalar>& a, const VecX<Scalar>& psi,
                                       const Mat2X<Scalar>& pts, bool with_gradient = false,
                                       Scalar clearance = Scalar(5)) {
    detail::check_clearance(a, pts, clearance);
    FieldSamples<Scalar> out;
    out.values.setZero(pts.cols());
    if (with_gradient) out.gradients.setZero(2, pts.cols());
    const Scalar inv2pi = Scalar(1) / two_pi<Scalar>;
    for (int p = 0; p < pts.cols(); ++p) {
        const Vec2<Scalar> x = pts.col(p);
        Scalar val = 0;
        Vec2<Scalar> grad = Vec2<Scalar>::Zero();
        for (int c = 0; c < a.component_count(); ++c) {
            const auto& bc = a.components[c];
            const int off = a.offset[c];
            for (int k = 0; k < bc.n; ++k) {
                const Vec2<Scalar> diff = x - bc.points.col(k);
                const Vec2<Scalar> nu = bc.normals.col(k);
                const Scalar r2 = diff.squaredNorm();
                const Scalar q = bc.weights[k] * psi[off + k];
                val += q * diff.dot(nu) / r2;
                if (with_gradient)
                    grad += q * (nu / r2 - 2 * diff.dot(nu) / (r2 * r2) * diff);
            }
        }
        out.values[p] = -inv2pi * val;
        if (with_gradient) out.gradients.col(p) = -inv2pi * grad;
    }
    return out;
}

// Relative symmetrization defect ||S K* - K S|| / ||S|| in the operator
// 2-norm; the continuous identity S K* = K S makes this a sharp consistency
// probe of the whole discretization.
template <typename Scalar>
Scalar plemelj_residual(const BoundaryOperator<Scalar>& S, const BoundaryOperator<Scalar>& K,
                        const BoundaryOperator<Scalar>& Kstar) {
    const MatX<Scalar> defect = S.matrix * Kstar.matrix - K.matrix * S.matrix;
    const Scalar s_norm = Eigen::BDCSVD<MatX<Scalar>>(S.matrix).singularValues()(0);
    const Scalar d_norm = Eigen::BDCSVD<MatX<Scalar>>(defect).singularValues()(0);
    return d_norm / s_norm;
}

// Arclength derivative, exact on per-curve trigonometric polynomials of
// degree < n/2: spectral differentiation in the parameter, then division by
// the Jacobian. The matrix is antisymmetric, so with the (2pi/n) parameter
// weights <d_tau phi, psi>_W = -<phi, d_tau psi>_W holds to machine
// precision (the arclength factors cancel).
template <typename Scalar>
Density<Scalar> tangential_derivative(const Assembly<Scalar>& a, const Density<Scalar>& d) {
    VecX<Scalar> out(a.num_nodes);
    for (int c = 0; c < a.component_count(); ++c) {
        const auto& bc = a.components[c];
        const int n = bc.n, off = a.offset[c];
        for (int i = 0; i < n; ++i) {
            Scalar acc = 0;
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const Scalar sign = ((i - j) % 2 == 0) ? Scalar(1) : Scalar(-1);
                acc += sign / (2 * std::tan((bc.t[i] - bc.t[j]) / 2)) * d.values[off + j];
            }
            out[off + i] = acc / bc.jacobian[i];
        }
    }
    return {std::move(out), &a};
}

}  // namespace impbond

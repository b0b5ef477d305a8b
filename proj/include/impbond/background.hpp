#pragma once

// Harmonic background fields h driving the transmission solves: linear
// fields g.x, real or imaginary parts of (x1 + i x2)^m, or user callables.

#include "geometry.hpp"

#include <functional>

namespace impbond {

template <typename Scalar>
struct HarmonicBackground {
    enum class Kind { Linear, HarmonicPoly, Custom };

    Kind kind = Kind::Linear;
    Vec2<Scalar> direction = Vec2<Scalar>::UnitX();  // linear
    int degree = 1;                                  // harmonic_poly
    bool imaginary_part = false;                     // harmonic_poly
    std::function<Scalar(const Vec2<Scalar>&)> value_fn;
    std::function<Vec2<Scalar>(const Vec2<Scalar>&)> gradient_fn;

    static HarmonicBackground linear(Vec2<Scalar> g) {
        HarmonicBackground h;
        h.kind = Kind::Linear;
        h.direction = std::move(g);
        return h;
    }

    static HarmonicBackground harmonic_poly(int m, bool imaginary) {
        if (m < 1)
            throw std::invalid_argument("background: polynomial degree must be >= 1");
        HarmonicBackground h;
        h.kind = Kind::HarmonicPoly;
        h.degree = m;
        h.imaginary_part = imaginary;
        return h;
    }

    static HarmonicBackground custom(std::function<Scalar(const Vec2<Scalar>&)> f,
                                     std::function<Vec2<Scalar>(const Vec2<Scalar>&)> grad) {
        HarmonicBackground h;
        h.kind = Kind::Custom;
        h.value_fn = std::move(f);
        h.gradient_fn = std::move(grad);
        return h;
    }

    Scalar value(const Vec2<Scalar>& x) const {
        switch (kind) {
        case Kind::Linear:
            return direction.dot(x);
        case Kind::HarmonicPoly: {
            Scalar re, im;
            complex_power(x, degree, re, im);
            return imaginary_part ? im : re;
        }
        case Kind::Custom:
            return value_fn(x);
        }
        return 0;
    }

    Vec2<Scalar> gradient(const Vec2<Scalar>& x) const {
        switch (kind) {
        case Kind::Linear:
            return direction;
        case Kind::HarmonicPoly: {
            // d/dx Re z^m = Re(m z^{m-1}), d/dy Re z^m = -Im(m z^{m-1});
            // for the imaginary part the roles swap with a sign.
            Scalar re, im;
            complex_power(x, degree - 1, re, im);
            const Scalar m = Scalar(degree);
            if (imaginary_part) return {m * im, m * re};
            return {m * re, -m * im};
        }
        case Kind::Custom:
            return gradient_fn(x);
        }
        return Vec2<Scalar>::Zero();
    }

    // Normal derivative nu . grad h at every node of the assembly.
    VecX<Scalar> normal_derivative(const Assembly<Scalar>& a) const {
        VecX<Scalar> out(a.num_nodes);
        for (int c = 0; c < a.component_count(); ++c) {
            const auto& bc = a.components[c];
            for (int k = 0; k < bc.n; ++k)
                out[a.offset[c] + k] =
                    bc.normals.col(k).dot(gradient(Vec2<Scalar>(bc.points.col(k))));
        }
        return out;
    }

    VecX<Scalar> values_at(const Mat2X<Scalar>& pts) const {
        VecX<Scalar> out(pts.cols());
        for (int p = 0; p < pts.cols(); ++p) out[p] = value(Vec2<Scalar>(pts.col(p)));
        return out;
    }

    Mat2X<Scalar> gradients_at(const Mat2X<Scalar>& pts) const {
        Mat2X<Scalar> out(2, pts.cols());
        for (int p = 0; p < pts.cols(); ++p) out.col(p) = gradient(Vec2<Scalar>(pts.col(p)));
        return out;
    }

private:
    static void complex_power(const Vec2<Scalar>& x, int m, Scalar& re, Scalar& im) {
        re = 1;
        im = 0;
        for (int i = 0; i < m; ++i) {
            const Scalar r = re * x[0] - im * x[1];
            im = re * x[1] + im * x[0];
            re = r;
        }
    }
};

}  // namespace impbond

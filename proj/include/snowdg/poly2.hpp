#pragma once
// Dense bivariate polynomials in graded-lexicographic monomial order
// [1; x, y; x^2, xy, y^2; ...]. This ordering fixes the local basis of the
// DG space and the layout of every matrix block.

#include <cassert>
#include <stdexcept>
#include <vector>

#include "snowdg/geometry.hpp"

namespace snowdg::poly {

using geom::Similarity;
using geom::Vec2;

/// Flat index of monomial x^a y^b: block of total degree a+b, offset b.
inline int monomial_index(int a, int b) {
    const int d = a + b;
    return d * (d + 1) / 2 + b;
}

inline int coeff_count(int deg) { return (deg + 1) * (deg + 2) / 2; }

struct Poly2 {
    int deg = 0;
    std::vector<double> c; // coeff_count(deg) entries, graded lex

    Poly2() : c(1, 0.0) {}
    explicit Poly2(int d) : deg(d), c(static_cast<std::size_t>(coeff_count(d)), 0.0) {}

    static Poly2 constant(double v) {
        Poly2 p(0);
        p.c[0] = v;
        return p;
    }
    static Poly2 monomial(int a, int b, double v = 1.0) {
        Poly2 p(a + b);
        p.c[static_cast<std::size_t>(monomial_index(a, b))] = v;
        return p;
    }

    double coeff(int a, int b) const {
        if (a < 0 || b < 0 || a + b > deg) return 0.0;
        return c[static_cast<std::size_t>(monomial_index(a, b))];
    }
    double& at(int a, int b) { return c[static_cast<std::size_t>(monomial_index(a, b))]; }

    double evaluate(const Vec2& pt) const {
        // running powers, one block of total degree at a time
        std::vector<double> px(static_cast<std::size_t>(deg + 1), 1.0), py(static_cast<std::size_t>(deg + 1), 1.0);
        for (int k = 1; k <= deg; ++k) {
            px[static_cast<std::size_t>(k)] = px[static_cast<std::size_t>(k - 1)] * pt.x;
            py[static_cast<std::size_t>(k)] = py[static_cast<std::size_t>(k - 1)] * pt.y;
        }
        double s = 0.0;
        int idx = 0;
        for (int d = 0; d <= deg; ++d)
            for (int b = 0; b <= d; ++b, ++idx) s += c[static_cast<std::size_t>(idx)] * px[static_cast<std::size_t>(d - b)] * py[static_cast<std::size_t>(b)];
        return s;
    }
};

inline Poly2 operator+(const Poly2& p, const Poly2& q) {
    Poly2 r(std::max(p.deg, q.deg));
    for (int a = 0; a <= r.deg; ++a)
        for (int b = 0; a + b <= r.deg; ++b) r.at(a, b) = p.coeff(a, b) + q.coeff(a, b);
    return r;
}

inline Poly2 operator-(const Poly2& p, const Poly2& q) {
    Poly2 r(std::max(p.deg, q.deg));
    for (int a = 0; a <= r.deg; ++a)
        for (int b = 0; a + b <= r.deg; ++b) r.at(a, b) = p.coeff(a, b) - q.coeff(a, b);
    return r;
}

inline Poly2 operator*(double s, const Poly2& p) {
    Poly2 r = p;
    for (auto& v : r.c) v *= s;
    return r;
}

inline Poly2 multiply(const Poly2& p, const Poly2& q) {
    Poly2 r(p.deg + q.deg);
    for (int a = 0; a <= p.deg; ++a)
        for (int b = 0; a + b <= p.deg; ++b) {
            const double pv = p.coeff(a, b);
            if (pv == 0.0) continue;
            for (int u = 0; u <= q.deg; ++u)
                for (int v = 0; u + v <= q.deg; ++v) r.at(a + u, b + v) += pv * q.coeff(u, v);
        }
    return r;
}

/// Partial derivatives as exact coefficient shifts.
inline Poly2 dx(const Poly2& p) {
    Poly2 r(std::max(0, p.deg - 1));
    for (int a = 1; a <= p.deg; ++a)
        for (int b = 0; a + b <= p.deg; ++b) r.at(a - 1, b) = a * p.coeff(a, b);
    return r;
}
inline Poly2 dy(const Poly2& p) {
    Poly2 r(std::max(0, p.deg - 1));
    for (int a = 0; a <= p.deg; ++a)
        for (int b = 1; a + b <= p.deg; ++b) r.at(a, b - 1) = b * p.coeff(a, b);
    return r;
}
inline std::pair<Poly2, Poly2> gradient(const Poly2& p) { return {dx(p), dy(p)}; }
inline Poly2 laplacian(const Poly2& p) { return dx(dx(p)) + dy(dy(p)); }

/// Exact affine substitution: result(x) = p(map(x)). Degree is preserved.
inline Poly2 pullback(const Poly2& p, const Similarity& map) {
    const double c = geom::rot_cos(map.rot), s = geom::rot_sin(map.rot);
    Poly2 X(1), Y(1);
    X.at(0, 0) = map.shift.x;
    X.at(1, 0) = map.scale * c;
    X.at(0, 1) = -map.scale * s;
    Y.at(0, 0) = map.shift.y;
    Y.at(1, 0) = map.scale * s;
    Y.at(0, 1) = map.scale * c;

    std::vector<Poly2> xp(static_cast<std::size_t>(p.deg + 1)), yp(static_cast<std::size_t>(p.deg + 1));
    xp[0] = Poly2::constant(1.0);
    yp[0] = Poly2::constant(1.0);
    for (int k = 1; k <= p.deg; ++k) {
        xp[static_cast<std::size_t>(k)] = multiply(xp[static_cast<std::size_t>(k - 1)], X);
        yp[static_cast<std::size_t>(k)] = multiply(yp[static_cast<std::size_t>(k - 1)], Y);
    }
    Poly2 r(p.deg);
    for (int a = 0; a <= p.deg; ++a)
        for (int b = 0; a + b <= p.deg; ++b) {
            const double pv = p.coeff(a, b);
            if (pv == 0.0) continue;
            const Poly2 term = multiply(xp[static_cast<std::size_t>(a)], yp[static_cast<std::size_t>(b)]);
            for (int u = 0; u <= term.deg; ++u)
                for (int v = 0; u + v <= term.deg; ++v) r.at(u, v) += pv * term.coeff(u, v);
        }
    return r;
}

} // namespace snowdg::poly

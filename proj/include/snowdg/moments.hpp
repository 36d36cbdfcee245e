#pragma once
// Exact monomial moments of the self-similar reference regions: the
// snowflake (area measure), the six boundary wedges, the equilateral
// triangle inside W_1, and the Koch curve (Hausdorff measure H^d,
// normalised so H^d(Gamma) = 1).
//
// Snowflake and Koch tables are obtained degree by degree from the
// self-similarity relations induced by their iterated function systems:
// the degree-D unknowns satisfy a small linear system whose matrix is a
// perturbation of the identity by contraction factors < 1, hence uniquely
// solvable. Wedge tables hold the degree-two closed forms for W_1 and the
// pi/3 rotation recursion for the others.

#include <array>
#include <string>
#include <vector>

#include "snowdg/errors.hpp"
#include "snowdg/poly2.hpp"

namespace snowdg::moments {

using geom::Similarity;
using geom::kSqrt3;
using poly::Poly2;

struct MomentTable {
    std::string region;
    int max_deg = 0;
    std::vector<double> values; // graded-lex over (a,b), a+b <= max_deg

    double value(int a, int b) const {
        if (a < 0 || b < 0 || a + b > max_deg)
            throw std::invalid_argument("MomentTable: degree exceeds table for region " + region);
        return values[static_cast<std::size_t>(poly::monomial_index(a, b))];
    }
};

namespace detail {

// Gaussian elimination with partial pivoting; systems here are at most 13x13.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> A, std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        std::swap(A[col], A[piv]);
        std::swap(rhs[col], rhs[piv]);
        if (A[col][col] == 0.0) throw numerical_error("moment system singular");
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r][col] / A[col][col];
            if (f == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) A[r][k] -= f * A[col][k];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double s = rhs[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= A[r][k] * x[k];
        x[r] = s / A[r][r];
    }
    return x;
}

// Solve the relations M[m] = sum_i w_i * integral(m o map_i) degree by
// degree, with the total mass prescribed.
inline MomentTable solve_self_similar(std::string region, int max_deg, double total_mass,
                                      const std::vector<Similarity>& maps, const std::vector<double>& weights) {
    MomentTable t;
    t.region = std::move(region);
    t.max_deg = max_deg;
    t.values.assign(static_cast<std::size_t>(poly::coeff_count(max_deg)), 0.0);
    t.values[0] = total_mass;

    for (int D = 1; D <= max_deg; ++D) {
        const std::size_t n = static_cast<std::size_t>(D + 1);
        std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
        std::vector<double> rhs(n, 0.0);
        for (int b = 0; b <= D; ++b) {
            const int a = D - b;
            const std::size_t row = static_cast<std::size_t>(b);
            A[row][row] = 1.0;
            for (std::size_t i = 0; i < maps.size(); ++i) {
                const Poly2 pb = poly::pullback(Poly2::monomial(a, b), maps[i]);
                for (int u = 0; u <= D; ++u)
                    for (int v = 0; u + v <= D; ++v) {
                        const double cf = weights[i] * pb.coeff(u, v);
                        if (cf == 0.0) continue;
                        if (u + v == D)
                            A[row][static_cast<std::size_t>(v)] -= cf;
                        else
                            rhs[row] += cf * t.value(u, v);
                    }
            }
        }
        const std::vector<double> x = solve_dense(std::move(A), std::move(rhs));
        for (int b = 0; b <= D; ++b) t.values[static_cast<std::size_t>(poly::monomial_index(D - b, b))] = x[static_cast<std::size_t>(b)];
    }
    return t;
}

} // namespace detail

/// Area moments of the reference snowflake up to max_deg <= 12.
inline MomentTable snowflake_moments(int max_deg) {
    if (max_deg < 0 || max_deg > 12) throw std::invalid_argument("snowflake_moments: max_deg must be in [0,12]");
    const auto& s = geom::snowflake_ifs();
    std::vector<Similarity> maps(s.begin(), s.end());
    std::vector<double> w;
    w.reserve(7);
    for (const auto& m : maps) w.push_back(m.scale * m.scale); // |det Ds_m|
    return detail::solve_self_similar("snowflake", max_deg, geom::snowflake_area(), maps, w);
}

/// Hausdorff-measure moments of the Koch curve up to max_deg <= 12.
inline MomentTable koch_moments(int max_deg) {
    if (max_deg < 0 || max_deg > 12) throw std::invalid_argument("koch_moments: max_deg must be in [0,12]");
    const auto& t = geom::koch_ifs();
    std::vector<Similarity> maps(t.begin(), t.end());
    // each of the four copies carries a quarter of the measure: (1/3)^d = 1/4
    std::vector<double> w(4, 0.25);
    return detail::solve_self_similar("koch", max_deg, 1.0, maps, w);
}

/// Degree-two moments of the wedge W_i. W_1 holds the closed forms; W_i is
/// W_{i-1} rotated by pi/3, so its moments are the pullbacks through R^2.
inline MomentTable wedge_moments(int i) {
    if (i < 1 || i > 6) throw std::invalid_argument("wedge_moments: index must be in 1..6");
    static const std::array<MomentTable, 6> tables = [] {
        std::array<MomentTable, 6> out;
        MomentTable w1;
        w1.region = "wedge1";
        w1.max_deg = 2;
        w1.values = {kSqrt3 / 5.0,                                  // 1
                     11.0 / 60.0, 0.0,                              // x, y
                     281.0 * kSqrt3 / 4400.0, 0.0, 39.0 * kSqrt3 / 4400.0}; // x^2, xy, y^2
        out[0] = w1;
        const Similarity rot60(1.0, 2, {0.0, 0.0});
        for (int k = 1; k < 6; ++k) {
            MomentTable t;
            t.region = "wedge" + std::to_string(k + 1);
            t.max_deg = 2;
            t.values.resize(6);
            for (int a = 0; a <= 2; ++a)
                for (int b = 0; a + b <= 2; ++b) {
                    const Poly2 pb = poly::pullback(Poly2::monomial(a, b), rot60);
                    double s = 0.0;
                    for (int u = 0; u <= 2; ++u)
                        for (int v = 0; u + v <= 2; ++v) s += pb.coeff(u, v) * out[static_cast<std::size_t>(k - 1)].value(u, v);
                    t.values[static_cast<std::size_t>(poly::monomial_index(a, b))] = s;
                }
            out[static_cast<std::size_t>(k)] = t;
        }
        return out;
    }();
    return tables[static_cast<std::size_t>(i - 1)];
}

/// Degree-two moments of the equilateral triangle T = {0 <= x <= 1/sqrt(3),
/// |y| <= x/sqrt(3)} of side 2/3 at the heart of W_1.
inline MomentTable triangle_moments() {
    MomentTable t;
    t.region = "triangleT";
    t.max_deg = 2;
    t.values = {kSqrt3 / 9.0,
                2.0 / 27.0, 0.0,
                1.0 / (18.0 * kSqrt3), 0.0, 1.0 / (162.0 * kSqrt3)};
    return t;
}

/// Exact integral of a polynomial against a moment table, after an optional
/// affine pullback. Throws if the (pulled-back) degree exceeds the table.
inline double integrate_poly(const MomentTable& table, const Poly2& p, const Similarity* map = nullptr) {
    const Poly2 q = map ? poly::pullback(p, *map) : p;
    if (q.deg > table.max_deg) {
        // degree may be inflated by zero coefficients; check the actual support
        for (int d = table.max_deg + 1; d <= q.deg; ++d)
            for (int b = 0; b <= d; ++b)
                if (q.coeff(d - b, b) != 0.0)
                    throw std::invalid_argument("integrate_poly: degree exceeds table for region " + table.region);
    }
    double s = 0.0;
    const int dmax = std::min(q.deg, table.max_deg);
    for (int a = 0; a <= dmax; ++a)
        for (int b = 0; a + b <= dmax; ++b) {
            const double cf = q.coeff(a, b);
            if (cf != 0.0) s += cf * table.value(a, b);
        }
    return s;
}

} // namespace snowdg::moments

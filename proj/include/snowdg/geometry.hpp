#pragma once
// Plane similarities with rotation angles quantized to pi/6, the two
// iterated function systems behind the Koch snowflake and the Koch curve,
// and the reference charts of the snowflake boundary.
//
// Coordinates follow the convention: the reference snowflake is centred at
// the origin with diameter 2; the reference Koch curve runs from (0,0) to
// (1,0) with its bump on the +y side.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace snowdg::geom {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double px, double py) : x(px), y(py) {}

    constexpr Vec2 operator+(const Vec2& r) const { return {x + r.x, y + r.y}; }
    constexpr Vec2 operator-(const Vec2& r) const { return {x - r.x, y - r.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    friend constexpr Vec2 operator*(double s, const Vec2& v) { return {v.x * s, v.y * s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }

    constexpr double dot(const Vec2& r) const { return x * r.x + y * r.y; }
    constexpr double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(x * x + y * y); }
    double dist(const Vec2& r) const { return std::sqrt((x - r.x) * (x - r.x) + (y - r.y) * (y - r.y)); }
    constexpr double dist2(const Vec2& r) const { return (x - r.x) * (x - r.x) + (y - r.y) * (y - r.y); }
};

inline constexpr double kPi = 3.14159265358979323846;
inline const double kSqrt3 = std::sqrt(3.0);

/// Hausdorff dimension of the Koch curve, log 4 / log 3.
inline const double kHausdorffDim = std::log(4.0) / std::log(3.0);

/// Area of the reference snowflake, |Omega| = 6*sqrt(3)/5.
inline double snowflake_area() { return 6.0 * kSqrt3 / 5.0; }

/// Apex of the reference Koch curve, (1/2, sqrt(3)/6).
inline Vec2 koch_apex() { return {0.5, kSqrt3 / 6.0}; }

/// Barycentre of the Koch curve with respect to the Hausdorff measure,
/// (J[x], J[y]) = (1/2, 1/(6*sqrt(3))).
inline Vec2 koch_barycentre() { return {0.5, 1.0 / (6.0 * kSqrt3)}; }

// cos/sin of r*pi/6 with exact entries; all chart algebra reduces to these
// twelve values, so compositions of charts stay bit-reproducible.
inline double rot_cos(int r) {
    static const double h = 0.5, s = kSqrt3 / 2.0;
    static const std::array<double, 12> c = {1.0, s, h, 0.0, -h, -s, -1.0, -s, -h, 0.0, h, s};
    return c[static_cast<std::size_t>(((r % 12) + 12) % 12)];
}
inline double rot_sin(int r) {
    static const double h = 0.5, s = kSqrt3 / 2.0;
    static const std::array<double, 12> v = {0.0, h, s, 1.0, s, h, 0.0, -h, -s, -1.0, -s, -h};
    return v[static_cast<std::size_t>(((r % 12) + 12) % 12)];
}

/// Orientation-preserving plane similarity x -> scale * R(rot*pi/6) * x + shift.
/// Rotations are stored as integers modulo 12 so that compositions are exact.
struct Similarity {
    double scale = 1.0;
    int rot = 0;
    Vec2 shift{};

    Similarity() = default;
    Similarity(double sc, int r, Vec2 sh) : scale(sc), rot(((r % 12) + 12) % 12), shift(sh) {
        if (!(sc > 0.0)) throw std::invalid_argument("Similarity: scale must be positive");
    }

    static Similarity identity() { return {}; }

    /// Apply the linear part only (no shift).
    Vec2 linear(const Vec2& v) const {
        const double c = rot_cos(rot), s = rot_sin(rot);
        return {scale * (c * v.x - s * v.y), scale * (s * v.x + c * v.y)};
    }

    Vec2 operator()(const Vec2& v) const { return linear(v) + shift; }
};

/// (a o b)(x) = a(b(x)); scales multiply, rotation indices add mod 12.
inline Similarity compose(const Similarity& a, const Similarity& b) {
    return {a.scale * b.scale, a.rot + b.rot, a(b.shift)};
}

inline Similarity invert(const Similarity& s) {
    Similarity inv(1.0 / s.scale, -s.rot, {0.0, 0.0});
    inv.shift = -inv.linear(s.shift);
    return inv;
}

/// The seven contractions s_1..s_7 tiling the snowflake: s_1 scales by
/// 1/sqrt(3) and rotates by pi/6 about the origin; s_2..s_7 scale by 1/3
/// and translate to the six outer lobes at angles (2m-1)*pi/6.
inline const std::array<Similarity, 7>& snowflake_ifs() {
    static const std::array<Similarity, 7> s = [] {
        std::array<Similarity, 7> a;
        a[0] = Similarity(1.0 / kSqrt3, 1, {0.0, 0.0});
        for (int m = 2; m <= 7; ++m) {
            const int ang = 2 * m - 1; // alpha_m in units of pi/6
            a[static_cast<std::size_t>(m - 1)] =
                Similarity(1.0 / 3.0, 0, {(2.0 / 3.0) * rot_cos(ang), (2.0 / 3.0) * rot_sin(ang)});
        }
        return a;
    }();
    return s;
}

/// The four contractions t_1..t_4 tiling the Koch curve, each with factor 1/3.
inline const std::array<Similarity, 4>& koch_ifs() {
    static const std::array<Similarity, 4> t = [] {
        std::array<Similarity, 4> a;
        a[0] = Similarity(1.0 / 3.0, 0, {0.0, 0.0});
        a[1] = Similarity(1.0 / 3.0, 2, {1.0 / 3.0, 0.0});
        a[2] = Similarity(1.0 / 3.0, -2, {0.5, 0.5 / kSqrt3});
        a[3] = Similarity(1.0 / 3.0, 0, {2.0 / 3.0, 0.0});
        return a;
    }();
    return t;
}

/// Canonical labels of the reference element:
///  - six vertices p_i at angles (2i-3)*pi/6 on the unit circle,
///  - six boundary segments S_i from the barycentre to p_i,
///  - face charts gamma_i : Gamma -> F_i (unit copies, bump inward),
///  - pair charts beta_j : Gamma -> F_j u F_{j+1} (sqrt(3) copies,
///    traversed backwards from p_{j+2}, bump outward).
/// The open wedge W_i lies between S_i and S_{i+1} behind face F_i.
struct ReferenceCharts {
    std::array<Vec2, 6> vertex;          // p_1..p_6
    std::array<Vec2, 6> segment_dir;     // unit direction of S_i
    std::array<Similarity, 6> gamma;     // gamma_1..gamma_6
    std::array<Similarity, 6> beta;      // beta_1..beta_6

    const Vec2& p(int i) const { return vertex[static_cast<std::size_t>(((i - 1) % 6 + 6) % 6)]; }
    const Similarity& face_chart(int i) const { return gamma[static_cast<std::size_t>(((i - 1) % 6 + 6) % 6)]; }
    const Similarity& pair_chart(int j) const { return beta[static_cast<std::size_t>(((j - 1) % 6 + 6) % 6)]; }

    /// Angle of vertex p_i in units of pi/6 (index into rot_cos/rot_sin).
    static int vertex_angle_index(int i) { return ((2 * i - 3) % 12 + 12) % 12; }
};

inline const ReferenceCharts& reference_charts() {
    static const ReferenceCharts rc = [] {
        ReferenceCharts r;
        for (int i = 1; i <= 6; ++i) {
            const int a = ReferenceCharts::vertex_angle_index(i);
            r.vertex[static_cast<std::size_t>(i - 1)] = {rot_cos(a), rot_sin(a)};
            r.segment_dir[static_cast<std::size_t>(i - 1)] = r.vertex[static_cast<std::size_t>(i - 1)];
        }
        for (int i = 1; i <= 6; ++i)
            r.gamma[static_cast<std::size_t>(i - 1)] = Similarity(1.0, 2 * i + 1, r.p(i));
        for (int j = 1; j <= 6; ++j)
            r.beta[static_cast<std::size_t>(j - 1)] = Similarity(kSqrt3, 2 * j - 4, r.p(j + 2));
        return r;
    }();
    return rc;
}

/// Vertices of the level-`depth` prefractal of the Koch curve, ordered from
/// (0,0) to (1,0). All 4^depth + 1 points lie on the curve itself.
inline std::vector<Vec2> sample_koch(int depth) {
    if (depth < 0 || depth > 12) throw std::invalid_argument("sample_koch: depth must be in [0,12]");
    std::vector<Vec2> pts = {{0.0, 0.0}, {1.0, 0.0}};
    const auto& t = koch_ifs();
    for (int d = 0; d < depth; ++d) {
        std::vector<Vec2> next;
        next.reserve(4 * (pts.size() - 1) + 1);
        for (int m = 0; m < 4; ++m) {
            // consecutive maps share an endpoint: skip the first image point
            // of every map after the first
            for (std::size_t k = (m == 0 ? 0 : 1); k < pts.size(); ++k) next.push_back(t[static_cast<std::size_t>(m)](pts[k]));
        }
        pts.swap(next);
    }
    return pts;
}

/// Prefractal sample of the whole snowflake boundary: the six unit faces
/// gamma_i(Gamma) traversed counterclockwise. Returns 6*4^depth points
/// (the closing vertex is not repeated).
inline std::vector<Vec2> sample_snowflake_boundary(int depth) {
    const auto base = sample_koch(depth);
    const auto& rc = reference_charts();
    std::vector<Vec2> pts;
    pts.reserve(6 * (base.size() - 1));
    for (int i = 1; i <= 6; ++i) {
        const Similarity& g = rc.face_chart(i);
        for (std::size_t k = 0; k + 1 < base.size(); ++k) pts.push_back(g(base[k]));
    }
    return pts;
}

} // namespace snowdg::geom

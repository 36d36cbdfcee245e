#pragma once
// Quadrature for the non-polynomial integrands: Gauss-Legendre rules on
// straight segments, and composite barycentre rules on the self-similar
// subdivisions of the snowflake (area measure) and the Koch curve
// (Hausdorff measure).

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "snowdg/geometry.hpp"

namespace snowdg::quad {

using geom::Similarity;
using geom::Vec2;

/// Gauss-Legendre nodes/weights on [-1,1], computed by Newton iteration on
/// the Legendre recurrence. Exact for polynomials of degree <= 2n-1.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(geom::kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0, dz = 1.0;
        while (std::abs(dz) > 1e-15) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) * z * p2 - (j - 1) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            dz = -p1 / pp;
            z += dz;
        }
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        double p1 = 1.0, p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2 * j - 1) * z * p2 - (j - 1) * p3) / j;
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

struct SegmentRule {
    std::vector<Vec2> nodes;
    std::vector<double> weights; // sum to |b-a|
};

/// Gauss rule on the segment [a,b] with npts points.
inline SegmentRule segment_gauss(const Vec2& a, const Vec2& b, int npts) {
    std::vector<double> x, w;
    gauss_legendre(npts, x, w);
    SegmentRule r;
    const double len = a.dist(b);
    const Vec2 mid = 0.5 * (a + b), half = 0.5 * (b - a);
    r.nodes.reserve(static_cast<std::size_t>(npts));
    r.weights.reserve(static_cast<std::size_t>(npts));
    for (int i = 0; i < npts; ++i) {
        r.nodes.push_back(mid + x[static_cast<std::size_t>(i)] * half);
        r.weights.push_back(0.5 * len * w[static_cast<std::size_t>(i)]);
    }
    return r;
}

/// Barycentre rule on the reference snowflake at a given subdivision level:
/// one node per word w of length `level`, at the sub-element barycentre
/// psi_w(0), weighted by the sub-element area. Words are enumerated in
/// lexicographic order, which fixes the summation order everywhere.
struct RefVolumeRule {
    std::vector<Vec2> nodes;
    std::vector<double> weights; // sum to |Omega|
};

inline const RefVolumeRule& ref_volume_rule(int level) {
    if (level < 0 || level > 7) throw std::invalid_argument("ref_volume_rule: level must be in [0,7]");
    static std::map<int, RefVolumeRule> cache;
    auto it = cache.find(level);
    if (it != cache.end()) return it->second;

    RefVolumeRule rule;
    const auto& ifs = geom::snowflake_ifs();
    const double area = geom::snowflake_area();
    std::function<void(const Similarity&, int)> rec = [&](const Similarity& chart, int depth) {
        if (depth == level) {
            rule.nodes.push_back(chart.shift); // chart(0)
            rule.weights.push_back(area * chart.scale * chart.scale);
            return;
        }
        for (const auto& s : ifs) rec(geom::compose(chart, s), depth + 1);
    };
    rec(Similarity::identity(), 0);
    return cache.emplace(level, std::move(rule)).first->second;
}

/// Composite barycentre approximation of the integral of f over the image
/// of the reference snowflake under `chart` (area measure): each level-
/// `level` descendant contributes its area times f at its barycentre.
template <class F>
double composite_barycentre_volume(F&& f, const Similarity& chart, int level) {
    const RefVolumeRule& rule = ref_volume_rule(level);
    const double jac = chart.scale * chart.scale;
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(chart(rule.nodes[i]));
    return jac * s;
}

/// Nodes of the Hausdorff-measure barycentre rule on the reference Koch
/// curve: the images of the H^d barycentre under the level-`level` words,
/// each carrying measure 4^{-level}.
inline const std::vector<Vec2>& koch_rule_nodes(int level) {
    if (level < 0 || level > 10) throw std::invalid_argument("koch_rule_nodes: level must be in [0,10]");
    static std::map<int, std::vector<Vec2>> cache;
    auto it = cache.find(level);
    if (it != cache.end()) return it->second;

    std::vector<Vec2> nodes;
    const auto& ifs = geom::koch_ifs();
    const Vec2 g = geom::koch_barycentre();
    std::function<void(const Similarity&, int)> rec = [&](const Similarity& chart, int depth) {
        if (depth == level) {
            nodes.push_back(chart(g));
            return;
        }
        for (const auto& t : ifs) rec(geom::compose(chart, t), depth + 1);
    };
    rec(Similarity::identity(), 0);
    return cache.emplace(level, std::move(nodes)).first->second;
}

/// Composite approximation of the H^d integral of f over the face
/// parametrised by xi : Gamma -> F with diameter h_F:
///   int_F f dH^d  ~  h_F^d * 4^{-level} * sum_w f(xi(t_w(g))).
template <class F>
double composite_barycentre_koch(F&& f, const Similarity& face_chart, int level) {
    const auto& nodes = koch_rule_nodes(level);
    const double hFd = std::pow(face_chart.scale, geom::kHausdorffDim);
    double s = 0.0;
    for (const auto& n : nodes) s += f(face_chart(n));
    return hFd * s / static_cast<double>(nodes.size());
}

} // namespace snowdg::quad

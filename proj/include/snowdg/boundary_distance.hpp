#pragma once
// Distance from a point to the snowflake boundary by branch-and-bound over
// the self-similar cells of the six boundary faces.
//
// A cell is the image of Gamma under gamma_i o t_{w}. The whole curve lies
// in the closed disc of radius 1/2 about the chord midpoint (1/2, 0) (it is
// pinched between the 30-degree cones at its endpoints), so every cell is
// enclosed by the disc of radius diam/2 about its chord midpoint. A cell is
// pruned as soon as that disc cannot beat the current best distance; cells
// nearer to the query are explored first, and endpoints of every visited
// cell (genuine boundary points) tighten the upper bound. The hot path
// works with squared distances throughout.

#include <vector>

#include "snowdg/geometry.hpp"

namespace snowdg::geom {

namespace detail {

struct BBState {
    Vec2 q;
    double best = std::numeric_limits<double>::infinity();
    double best2 = std::numeric_limits<double>::infinity();
    double tol = 0.0;

    void offer2(double d2) {
        if (d2 < best2) {
            best2 = d2;
            best = std::sqrt(d2);
        }
    }
};

// mid2 = |q - chart(1/2,0)|^2, already computed by the caller
inline void bb_descend(BBState& st, const Similarity& chart, double mid2) {
    const double cut = st.best - st.tol + 0.5 * chart.scale;
    if (cut <= 0.0 || mid2 >= cut * cut) return;

    st.offer2(st.q.dist2(chart.shift));            // chart(0,0)
    st.offer2(st.q.dist2(chart({1.0, 0.0})));
    if (st.best <= st.tol) return;

    const auto& t = koch_ifs();
    std::array<Similarity, 4> kids;
    std::array<double, 4> m2;
    std::array<int, 4> order{0, 1, 2, 3};
    for (std::size_t i = 0; i < 4; ++i) {
        kids[i] = compose(chart, t[i]);
        m2[i] = st.q.dist2(kids[i]({0.5, 0.0}));
    }
    // nearest-first ordering shrinks `best` early and prunes the rest
    for (int i = 1; i < 4; ++i)
        for (int k = i; k > 0 && m2[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] <
                                     m2[static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)])];
             --k)
            std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k - 1)]);
    for (int i : order) bb_descend(st, kids[static_cast<std::size_t>(i)], m2[static_cast<std::size_t>(i)]);
}

} // namespace detail

/// Distance from q to the boundary, within tol (default 1e-9 at query
/// scale). An optional upper bound truncates the search: when the true
/// distance exceeds it, some value >= min(bound, distance) - tol is
/// returned instead of the exact one.
inline double boundary_distance(const Vec2& q, double tol,
                                double upper_bound = std::numeric_limits<double>::infinity());

inline double boundary_distance(const Vec2& q) {
    return boundary_distance(q, 1e-9 * std::max(1.0, q.norm()));
}

inline double boundary_distance(const Vec2& q, double tol, double upper_bound) {
    if (!(tol > 0.0)) throw std::invalid_argument("boundary_distance: tol must be positive");
    const auto& rc = reference_charts();
    detail::BBState st;
    st.q = q;
    st.tol = tol;
    if (upper_bound < st.best) {
        st.best = upper_bound;
        st.best2 = upper_bound * upper_bound;
    }
    for (int i = 1; i <= 6; ++i) st.offer2(q.dist2(rc.p(i)));
    for (int i = 1; i <= 6; ++i) {
        const Similarity& chart = rc.face_chart(i);
        detail::bb_descend(st, chart, q.dist2(chart({0.5, 0.0})));
    }
    return st.best;
}

/// Minimum over the six element vertices of the distance to the boundary
/// (the refinement indicator of boundary-refined meshes). A cheap coarse
/// pass orders the vertices so that the expensive fine pass resolves the
/// minimiser first and truncates the rest at the running minimum.
inline double min_vertex_boundary_distance(const Similarity& chart, double tol) {
    const auto& rc = reference_charts();
    std::array<Vec2, 6> v;
    std::array<double, 6> coarse;
    std::array<int, 6> order{0, 1, 2, 3, 4, 5};
    const double coarse_tol = std::max(tol, 0.05 * chart.scale);
    for (std::size_t i = 0; i < 6; ++i) {
        v[i] = chart(rc.p(static_cast<int>(i) + 1));
        coarse[i] = boundary_distance(v[i], coarse_tol);
    }
    for (int i = 1; i < 6; ++i)
        for (int k = i; k > 0 && coarse[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] <
                                     coarse[static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)])];
             --k)
            std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k - 1)]);
    double d = std::numeric_limits<double>::infinity();
    for (int i : order) d = std::min(d, boundary_distance(v[static_cast<std::size_t>(i)], tol, d));
    return d;
}

} // namespace snowdg::geom

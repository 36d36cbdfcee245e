#pragma once
// Geometry-conforming meshes of the snowflake. Every element is the image
// of the reference snowflake under a word w over {1..7}: K = s_{w_1} o ... o
// s_{w_l}(Omega). Diameters are tracked as the integer level j with
// h_K = 2*3^{-j/2} (digit 1 contributes one unit, other digits two), so all
// size comparisons and refinement tie-breaks are exact.
//
// Faces are discovered geometrically: an adjacent pair is always similar to
// the canonical pair (s_1(Omega), s_2(Omega)), hence has diameter ratio
// sqrt(3) and barycentre distance equal to the smaller diameter. The face
// occupies one wedge slot of the larger element and two consecutive slots
// of the smaller one.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "snowdg/boundary_distance.hpp"
#include "snowdg/errors.hpp"
#include "snowdg/geometry.hpp"

namespace snowdg::mesh {

using geom::Similarity;
using geom::Vec2;

inline double level_diameter(int level) { return 2.0 * std::pow(3.0, -0.5 * level); }

struct Element {
    std::vector<std::uint8_t> word; // digits in 1..7; empty = whole snowflake
    Similarity chart;               // psi_K
    int level = 0;                  // h_K = 2*3^{-level/2}
    Vec2 barycentre;
    std::array<Vec2, 6> vertex;
    double vertex_boundary_dist = 0.0; // delta-hat: min vertex distance to the boundary
    std::array<int, 6> slot_face{-1, -1, -1, -1, -1, -1};

    double h() const { return 2.0 * chart.scale; }
};

struct Face {
    enum class Kind { interior, boundary };
    Kind kind = Kind::boundary;
    int minus = -1;     // larger element for interior faces, owner for boundary
    int plus = -1;      // smaller element, interior only
    int slot_minus = 0; // wedge slot of `minus` (1..6)
    int slot_plus = 0;  // first of the two consecutive slots of `plus`
    int hf_level = 0;   // h_F = 3^{-hf_level/2} (= level of the minus element)

    double hf() const { return std::pow(3.0, -0.5 * hf_level); }
    bool interior() const { return kind == Kind::interior; }
};

enum class Family { uniform, quasi_uniform, boundary_refined };

inline std::string family_name(Family f) {
    switch (f) {
        case Family::uniform: return "uniform";
        case Family::quasi_uniform: return "quasi_uniform";
        case Family::boundary_refined: return "boundary_refined";
    }
    return "?";
}

struct Mesh {
    Family family = Family::uniform;
    int ell = 0;
    int ellstar = 0;
    std::vector<Element> elements;
    std::vector<Face> faces;

    double h_max() const {
        int jmin = elements.empty() ? 0 : elements.front().level;
        for (const auto& e : elements) jmin = std::min(jmin, e.level);
        return level_diameter(jmin);
    }
    /// Diameter of the boundary-adjacent elements (they share one size in
    /// the families built here).
    double h_boundary() const {
        int j = -1;
        for (const auto& f : faces)
            if (!f.interior()) j = std::max(j, elements[static_cast<std::size_t>(f.minus)].level);
        return j < 0 ? 0.0 : level_diameter(j);
    }
};

namespace detail {

inline Element make_element(std::vector<std::uint8_t> word) {
    Element e;
    e.word = std::move(word);
    Similarity chart = Similarity::identity();
    int ones = 0;
    const auto& ifs = geom::snowflake_ifs();
    for (std::uint8_t d : e.word) {
        if (d < 1 || d > 7) throw std::invalid_argument("element word digit out of range");
        chart = geom::compose(chart, ifs[static_cast<std::size_t>(d - 1)]);
        if (d == 1) ++ones;
    }
    e.chart = chart;
    e.level = 2 * static_cast<int>(e.word.size()) - ones;
    e.barycentre = chart.shift;
    const auto& rc = geom::reference_charts();
    for (int i = 1; i <= 6; ++i) e.vertex[static_cast<std::size_t>(i - 1)] = chart(rc.p(i));
    e.vertex_boundary_dist = geom::min_vertex_boundary_distance(chart, 1e-9 * e.h());
    return e;
}

inline std::vector<Element> refine(const Element& e) {
    std::vector<Element> kids;
    kids.reserve(7);
    for (std::uint8_t d = 1; d <= 7; ++d) {
        std::vector<std::uint8_t> w = e.word;
        w.push_back(d);
        kids.push_back(make_element(std::move(w)));
    }
    return kids;
}

// round x to the nearest integer, requiring it to be within tol
inline int exact_round(double x, double tol, const char* what) {
    const double r = std::round(x);
    if (std::abs(x - r) > tol) throw mesh_error(std::string("slot angle is not aligned: ") + what);
    return static_cast<int>(r);
}

} // namespace detail

/// Geometric face discovery with slot assignment. Throws mesh_error when
/// the slot accounting is inconsistent (non-partition or non-LQU input).
inline void discover_faces(Mesh& mesh) {
    mesh.faces.clear();
    for (auto& e : mesh.elements) e.slot_face = {-1, -1, -1, -1, -1, -1};

    // bucket element indices by level
    std::unordered_map<int, std::vector<int>> by_level;
    int jmin = 1 << 30, jmax = -(1 << 30);
    for (std::size_t i = 0; i < mesh.elements.size(); ++i) {
        const int j = mesh.elements[i].level;
        by_level[j].push_back(static_cast<int>(i));
        jmin = std::min(jmin, j);
        jmax = std::max(jmax, j);
    }

    auto cell_key = [](long long cx, long long cy) { return (cx << 32) ^ (cy & 0xffffffffLL); };

    for (int j = jmin; j < jmax; ++j) {
        auto big_it = by_level.find(j);
        auto small_it = by_level.find(j + 1);
        if (big_it == by_level.end() || small_it == by_level.end()) continue;

        const double h_plus = level_diameter(j + 1);
        // adjacent barycentres sit exactly h_plus apart; with cells of twice
        // that size they are at most one cell index apart in each coordinate
        const double cell = 2.0 * h_plus;
        std::unordered_map<long long, std::vector<int>> grid;
        for (int ib : big_it->second) {
            const Vec2 c = mesh.elements[static_cast<std::size_t>(ib)].barycentre;
            grid[cell_key(static_cast<long long>(std::floor(c.x / cell)),
                          static_cast<long long>(std::floor(c.y / cell)))]
                .push_back(ib);
        }

        for (int is : small_it->second) {
            Element& ep = mesh.elements[static_cast<std::size_t>(is)];
            const long long cx = static_cast<long long>(std::floor(ep.barycentre.x / cell));
            const long long cy = static_cast<long long>(std::floor(ep.barycentre.y / cell));
            for (long long dx = -1; dx <= 1; ++dx)
                for (long long dy = -1; dy <= 1; ++dy) {
                    auto it = grid.find(cell_key(cx + dx, cy + dy));
                    if (it == grid.end()) continue;
                    for (int ib : it->second) {
                        Element& em = mesh.elements[static_cast<std::size_t>(ib)];
                        const double dist = em.barycentre.dist(ep.barycentre);
                        if (std::abs(dist - h_plus) > 1e-10 * h_plus) continue;

                        // local direction from the larger barycentre points along a
                        // wedge midline, at angle (slot-1)*pi/3 in its frame
                        const Vec2 d = ep.barycentre - em.barycentre;
                        const double ang_minus =
                            std::atan2(d.y, d.x) - em.chart.rot * geom::kPi / 6.0;
                        const int m6 = detail::exact_round(ang_minus / (geom::kPi / 3.0), 1e-9, "minus side");
                        const int slot_minus = ((m6 % 6) + 6) % 6 + 1;

                        // from the smaller element the larger barycentre sits behind
                        // vertex p_{t+1}, at angle (2t-1)*pi/6 in its frame
                        const double ang_plus =
                            std::atan2(-d.y, -d.x) - ep.chart.rot * geom::kPi / 6.0;
                        const int k12 = detail::exact_round(ang_plus / (geom::kPi / 6.0), 1e-9, "plus side");
                        if (((k12 % 2) + 2) % 2 != 1) throw mesh_error("plus-side direction does not hit a vertex");
                        int slot_plus = (((k12 + 1) / 2) % 6 + 6) % 6; // p_{t+1} angle index 2t-1
                        if (slot_plus == 0) slot_plus = 6;

                        Face f;
                        f.kind = Face::Kind::interior;
                        f.minus = ib;
                        f.plus = is;
                        f.slot_minus = slot_minus;
                        f.slot_plus = slot_plus;
                        f.hf_level = em.level;
                        const int fid = static_cast<int>(mesh.faces.size());

                        auto claim = [&](Element& e, int slot) {
                            int& ref = e.slot_face[static_cast<std::size_t>(slot - 1)];
                            if (ref != -1) throw mesh_error("inconsistent slot accounting");
                            ref = fid;
                        };
                        claim(em, slot_minus);
                        claim(ep, slot_plus);
                        claim(ep, slot_plus % 6 + 1);
                        mesh.faces.push_back(f);
                    }
                }
        }
    }

    // every uncovered slot is a boundary face
    for (std::size_t i = 0; i < mesh.elements.size(); ++i) {
        Element& e = mesh.elements[i];
        for (int s = 1; s <= 6; ++s) {
            if (e.slot_face[static_cast<std::size_t>(s - 1)] != -1) continue;
            Face f;
            f.kind = Face::Kind::boundary;
            f.minus = static_cast<int>(i);
            f.slot_minus = s;
            f.hf_level = e.level;
            e.slot_face[static_cast<std::size_t>(s - 1)] = static_cast<int>(mesh.faces.size());
            mesh.faces.push_back(f);
        }
    }
}

/// Uniform family T_l: all 7^l words of length l.
inline Mesh build_uniform(int ell) {
    if (ell < 0 || ell > 7) throw resource_limit("build_uniform: ell must be in [0,7]");
    Mesh m;
    m.family = Family::uniform;
    m.ell = ell;
    std::vector<std::uint8_t> word(static_cast<std::size_t>(ell), 1);
    std::function<void(int)> rec = [&](int pos) {
        if (pos == ell) {
            m.elements.push_back(detail::make_element(word));
            return;
        }
        for (std::uint8_t d = 1; d <= 7; ++d) {
            word[static_cast<std::size_t>(pos)] = d;
            rec(pos + 1);
        }
    };
    rec(0);
    discover_faces(m);
    return m;
}

/// Quasi-uniform family T'_l: l sweeps, each refining exactly the elements
/// of (currently) largest diameter. The result carries two distinct element
/// diameters for l >= 1.
inline Mesh build_quasi_uniform(int ell) {
    if (ell < 0 || ell > 14) throw resource_limit("build_quasi_uniform: ell must be in [0,14]");
    Mesh m;
    m.family = Family::quasi_uniform;
    m.ell = ell;
    m.elements.push_back(detail::make_element({}));
    for (int step = 0; step < ell; ++step) {
        int jmin = m.elements.front().level;
        for (const auto& e : m.elements) jmin = std::min(jmin, e.level);
        std::vector<Element> next;
        next.reserve(m.elements.size() * 2);
        for (const auto& e : m.elements) {
            if (e.level == jmin)
                for (auto& kid : detail::refine(e)) next.push_back(std::move(kid));
            else
                next.push_back(e);
        }
        m.elements.swap(next);
    }
    discover_faces(m);
    return m;
}

/// Boundary-refined family T'_{l,l*}: starting from T'_l, each sweep
/// refines exactly the elements whose vertex-boundary distance satisfies
/// delta-hat <= h_K/2 (equality refines; the comparison carries a small
/// relative guard against the distance tolerance).
inline Mesh build_boundary_refined(int ell, int ellstar) {
    if (ell < 0 || ell > 14) throw resource_limit("build_boundary_refined: ell must be in [0,14]");
    if (ellstar < 0 || ellstar > 8) throw resource_limit("build_boundary_refined: ellstar must be in [0,8]");
    Mesh m = build_quasi_uniform(ell);
    m.family = Family::boundary_refined;
    m.ellstar = ellstar;
    for (int step = 0; step < ellstar; ++step) {
        std::vector<Element> next;
        next.reserve(m.elements.size() * 2);
        for (const auto& e : m.elements) {
            if (e.vertex_boundary_dist <= 0.5 * e.h() * (1.0 + 1e-8))
                for (auto& kid : detail::refine(e)) next.push_back(std::move(kid));
            else
                next.push_back(e);
        }
        m.elements.swap(next);
    }
    discover_faces(m);
    return m;
}

struct LquReport {
    bool pass = true;
    std::vector<std::string> issues;
    std::vector<std::pair<int, int>> offending; // element index pairs (or (elem,-slot))

    void fail(std::string msg, int a = -1, int b = -1) {
        pass = false;
        issues.push_back(std::move(msg));
        if (a >= 0) offending.emplace_back(a, b);
    }
};

/// Structural validation: exact area partition, slot accounting, the
/// sqrt(3) ratio across interior faces, and boundary faces that genuinely
/// lie on the domain boundary (the failure mode of non-LQU refinements is a
/// fake boundary face buried in the interior).
inline LquReport lqu_check(const Mesh& mesh) {
    LquReport rep;

    // area partition: sum (h_K/2)^2 = 1, grouped by level so the sum is tame
    std::unordered_map<int, long long> level_count;
    for (const auto& e : mesh.elements) ++level_count[e.level];
    double area_frac = 0.0;
    for (const auto& [j, cnt] : level_count) area_frac += static_cast<double>(cnt) * std::pow(3.0, -j);
    if (std::abs(area_frac - 1.0) > 1e-12)
        rep.fail("area partition violated: sum |K|/|Omega| = " + std::to_string(area_frac));

    // slot accounting against the face list
    std::vector<std::array<int, 6>> slots(mesh.elements.size(), {-1, -1, -1, -1, -1, -1});
    auto claim = [&](int e, int s, int fid) {
        int& ref = slots[static_cast<std::size_t>(e)][static_cast<std::size_t>(s - 1)];
        if (ref != -1) {
            rep.fail("slot claimed twice on element " + std::to_string(e), e, -s);
            return;
        }
        ref = fid;
    };
    for (std::size_t fid = 0; fid < mesh.faces.size(); ++fid) {
        const Face& f = mesh.faces[fid];
        claim(f.minus, f.slot_minus, static_cast<int>(fid));
        if (f.interior()) {
            claim(f.plus, f.slot_plus, static_cast<int>(fid));
            claim(f.plus, f.slot_plus % 6 + 1, static_cast<int>(fid));
            const int dj = mesh.elements[static_cast<std::size_t>(f.plus)].level -
                           mesh.elements[static_cast<std::size_t>(f.minus)].level;
            if (dj != 1) rep.fail("interior face without sqrt(3) diameter ratio", f.minus, f.plus);
        }
    }
    for (std::size_t e = 0; e < mesh.elements.size(); ++e)
        for (int s = 0; s < 6; ++s)
            if (slots[e][static_cast<std::size_t>(s)] == -1)
                rep.fail("uncovered slot on element " + std::to_string(e), static_cast<int>(e), -(s + 1));

    // boundary faces must lie on the domain boundary: test endpoints and apex
    const auto& rc = geom::reference_charts();
    for (const auto& f : mesh.faces) {
        if (f.interior()) continue;
        const Element& e = mesh.elements[static_cast<std::size_t>(f.minus)];
        const Similarity xi = geom::compose(e.chart, rc.face_chart(f.slot_minus));
        const double tol = 1e-10 * e.h();
        for (const Vec2& q : {xi({0.0, 0.0}), xi({1.0, 0.0}), xi(geom::koch_apex())}) {
            if (geom::boundary_distance(q, tol) > 1e-8 * e.h()) {
                rep.fail("boundary face off the domain boundary (non-LQU adjacency)", f.minus, f.slot_minus);
                break;
            }
        }
    }

    return rep;
}

} // namespace snowdg::mesh

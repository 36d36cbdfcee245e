#pragma once
// Assembly of the interior-penalty DG system on a snowflake mesh:
//   A = G + C + C^T + P,  mass matrix M,  load vector b.
//
// Everything is computed on the reference element. The weak normal
// derivative of a face is carried by its wedge: for polynomials w, v in
// reference coordinates,
//   I(w, v) = int_wedge (grad w . grad v + (lap w) v) - int_segs (dn w) v,
// which is invariant under the element chart (similarity), so a single
// local matrix per wedge slot serves every element. Cross-element blocks
// depend only on the slot pair (s, t) through the relative chart
// psi_plus^{-1} o psi_minus (scale sqrt(3), rotation and shift fixed by the
// slots), so they are cached per slot pair as well. Penalty blocks reduce
// to Koch-curve moments of products of pulled-back basis polynomials; the
// h_F^{-d} weight cancels against H^d(F) = h_F^d exactly.

#include <array>
#include <functional>
#include <map>
#include <vector>

#include "snowdg/block_matrix.hpp"
#include "snowdg/mesh.hpp"
#include "snowdg/moments.hpp"
#include "snowdg/poly2.hpp"
#include "snowdg/quadrature.hpp"

namespace snowdg::assembly {

using geom::Similarity;
using geom::Vec2;
using la::BlockMatrix;
using moments::MomentTable;
using poly::Poly2;

struct DGSpace {
    const mesh::Mesh* m = nullptr;
    int p = 1;
    int np = 3;

    DGSpace() = default;
    DGSpace(const mesh::Mesh& mesh_, int p_) : m(&mesh_), p(p_), np((p_ + 1) * (p_ + 2) / 2) {
        if (p_ < 1 || p_ > 2) throw std::invalid_argument("DGSpace: only p = 1 and p = 2 are supported");
    }
    int n_elements() const { return static_cast<int>(m->elements.size()); }
    int ndof() const { return np * n_elements(); }
};

/// The reference monomial basis 1, x, y, x^2, xy, y^2, ... up to degree p.
inline std::vector<Poly2> monomial_basis(int p) {
    std::vector<Poly2> basis;
    for (int d = 0; d <= p; ++d)
        for (int b = 0; b <= d; ++b) basis.push_back(Poly2::monomial(d - b, b));
    return basis;
}

/// Reference integration domain of one face seen from one of its elements:
/// the wedge indices and the bounding segments with outward normals.
struct WedgeQuadContext {
    std::vector<int> wedges; // one wedge for the minus side, two for the plus side
    struct Seg {
        Vec2 a, b;
        Vec2 normal;
    };
    std::array<Seg, 2> segs;
};

namespace detail {
inline WedgeQuadContext::Seg make_seg(int vertex_index, bool lower) {
    const auto& rc = geom::reference_charts();
    const Vec2 d = rc.p(vertex_index);
    // outward normal of the wedge: the lower segment rotates the direction
    // by -pi/2, the upper one by +pi/2
    return {{0.0, 0.0}, d, lower ? Vec2{d.y, -d.x} : Vec2{-d.y, d.x}};
}
} // namespace detail

/// Context of the single wedge W_s behind a face of the larger element.
inline WedgeQuadContext down_context(int slot) {
    WedgeQuadContext c;
    c.wedges = {slot};
    c.segs = {detail::make_seg(slot, true), detail::make_seg(slot % 6 + 1, false)};
    return c;
}

/// Context of the double wedge W_t u W_{t+1} behind a face of the smaller
/// element; only the outer segments S_t and S_{t+2} bound it.
inline WedgeQuadContext up_context(int slot) {
    WedgeQuadContext c;
    c.wedges = {slot, slot % 6 + 1};
    c.segs = {detail::make_seg(slot, true), detail::make_seg((slot + 1) % 6 + 1, false)};
    return c;
}

class Assembler {
public:
    explicit Assembler(const DGSpace& space)
        : space_(space),
          basis_(monomial_basis(space.p)),
          koch_(moments::koch_moments(2 * space.p)),
          snow_(moments::snowflake_moments(2 * space.p)) {
        for (int i = 1; i <= 6; ++i) wedge_[static_cast<std::size_t>(i - 1)] = moments::wedge_moments(i);
        for (auto& b : basis_) {
            grads_.push_back(poly::gradient(b));
            laps_.push_back(poly::laplacian(b));
        }
        for (int s = 1; s <= 6; ++s) {
            down_own_[static_cast<std::size_t>(s - 1)] = own_matrix(down_context(s));
            up_own_[static_cast<std::size_t>(s - 1)] = own_matrix(up_context(s));
            pen_own_[static_cast<std::size_t>(s - 1)] = penalty_matrix(geom::reference_charts().face_chart(s), s);
        }
    }

    const DGSpace& space() const { return space_; }

    /// I(w, v) over a wedge context, for polynomials in reference coordinates.
    double compute_I(const Poly2& w, const Poly2& v, const WedgeQuadContext& ctx) const {
        const auto [wx, wy] = poly::gradient(w);
        const auto [vx, vy] = poly::gradient(v);
        const Poly2 vol = poly::multiply(wx, vx) + poly::multiply(wy, vy) + poly::multiply(poly::laplacian(w), v);
        double val = 0.0;
        for (int id : ctx.wedges) val += moments::integrate_poly(wedge_[static_cast<std::size_t>(id - 1)], vol);
        const int npts = std::max(1, (std::max(w.deg - 1, 0) + v.deg + 2) / 2);
        for (const auto& seg : ctx.segs) {
            const auto rule = quad::segment_gauss(seg.a, seg.b, npts);
            double line = 0.0;
            for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                const Vec2& x = rule.nodes[k];
                const double dn = wx.evaluate(x) * seg.normal.x + wy.evaluate(x) * seg.normal.y;
                line += rule.weights[k] * dn * v.evaluate(x);
            }
            val -= line;
        }
        return val;
    }

    double compute_I_down(const Poly2& w, const Poly2& v, int slot) const { return compute_I(w, v, down_context(slot)); }
    double compute_I_up(const Poly2& w, const Poly2& v, int slot) const { return compute_I(w, v, up_context(slot)); }

    /// Gradient matrix: identical diagonal blocks int grad phi_i . grad phi_j.
    BlockMatrix assemble_G() const {
        BlockMatrix G = diagonal_pattern();
        std::vector<double> ref(block_bytes(), 0.0);
        for (int i = 0; i < space_.np; ++i)
            for (int j = i; j < space_.np; ++j) {
                const Poly2 prod = poly::multiply(grads_[static_cast<std::size_t>(i)].first,
                                                  grads_[static_cast<std::size_t>(j)].first) +
                                   poly::multiply(grads_[static_cast<std::size_t>(i)].second,
                                                  grads_[static_cast<std::size_t>(j)].second);
                const double v = moments::integrate_poly(snow_, prod);
                ref[idx(i, j)] = v;
                ref[idx(j, i)] = v;
            }
        for (int m = 0; m < space_.n_elements(); ++m) std::copy(ref.begin(), ref.end(), G.block(m, m));
        return G;
    }

    /// Mass matrix: diagonal blocks (h_K/2)^2 int phi_i phi_j.
    BlockMatrix assemble_M() const {
        BlockMatrix M = diagonal_pattern();
        std::vector<double> ref(block_bytes(), 0.0);
        for (int i = 0; i < space_.np; ++i)
            for (int j = i; j < space_.np; ++j) {
                const double v = moments::integrate_poly(snow_, poly::multiply(basis_[static_cast<std::size_t>(i)],
                                                                               basis_[static_cast<std::size_t>(j)]));
                ref[idx(i, j)] = v;
                ref[idx(j, i)] = v;
            }
        for (int m = 0; m < space_.n_elements(); ++m) {
            const double s = space_.m->elements[static_cast<std::size_t>(m)].chart.scale;
            double* B = M.block(m, m);
            for (std::size_t k = 0; k < ref.size(); ++k) B[k] = s * s * ref[k];
        }
        return M;
    }

    /// Consistency matrix C (not symmetric on its own): per interior face
    /// the four wedge-proxy blocks with weights -1/2, +1/2, +1/2, -1/2, and
    /// per boundary face the full diagonal contribution.
    BlockMatrix assemble_C() const {
        BlockMatrix C = face_pattern();
        const auto& mm = *space_.m;
        for (const auto& f : mm.faces) {
            if (f.interior()) {
                const auto& fb = face_cache(f);
                axpy(C.block(f.minus, f.minus), down_own_[static_cast<std::size_t>(f.slot_minus - 1)], -0.5);
                axpy(C.block(f.plus, f.minus), fb.down_ext, 0.5);
                axpy(C.block(f.minus, f.plus), fb.up_ext, 0.5);
                axpy(C.block(f.plus, f.plus), up_own_[static_cast<std::size_t>(f.slot_plus - 1)], -0.5);
            } else {
                axpy(C.block(f.minus, f.minus), down_own_[static_cast<std::size_t>(f.slot_minus - 1)], -1.0);
            }
        }
        return C;
    }

    /// Penalty matrix P(eta): Koch moments of products of traces; the
    /// h_F^{-d} weight cancels exactly, so blocks are size-independent.
    BlockMatrix assemble_P(double eta) const {
        if (!(eta > 0.0)) throw std::invalid_argument("assemble_P: eta must be positive");
        BlockMatrix P = face_pattern();
        const auto& mm = *space_.m;
        for (const auto& f : mm.faces) {
            axpy(P.block(f.minus, f.minus), pen_own_[static_cast<std::size_t>(f.slot_minus - 1)], eta);
            if (!f.interior()) continue;
            const auto& fb = face_cache(f);
            axpy(P.block(f.plus, f.plus), fb.pen_plus, eta);
            axpy(P.block(f.minus, f.plus), fb.pen_cross, -eta);
            axpy_transposed(P.block(f.plus, f.minus), fb.pen_cross, -eta);
        }
        return P;
    }

    /// Load vector by the composite barycentre rule on the reference element.
    std::vector<double> assemble_b(const std::function<double(Vec2)>& f, int quad_level = 4) const {
        const auto& rule = quad::ref_volume_rule(quad_level);
        const std::size_t nq = rule.nodes.size();
        // basis values at the rule nodes
        std::vector<double> bv(static_cast<std::size_t>(space_.np) * nq);
        for (int i = 0; i < space_.np; ++i)
            for (std::size_t k = 0; k < nq; ++k)
                bv[static_cast<std::size_t>(i) * nq + k] = basis_[static_cast<std::size_t>(i)].evaluate(rule.nodes[k]);

        std::vector<double> b(static_cast<std::size_t>(space_.ndof()), 0.0);
        std::vector<double> fx(nq);
        for (int m = 0; m < space_.n_elements(); ++m) {
            const auto& e = space_.m->elements[static_cast<std::size_t>(m)];
            const double jac = e.chart.scale * e.chart.scale;
            for (std::size_t k = 0; k < nq; ++k) fx[k] = f(e.chart(rule.nodes[k]));
            for (int i = 0; i < space_.np; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < nq; ++k) s += rule.weights[k] * fx[k] * bv[static_cast<std::size_t>(i) * nq + k];
                b[static_cast<std::size_t>(m * space_.np + i)] = jac * s;
            }
        }
        return b;
    }

    /// Full system: A = G + C + C^T + P and the load vector.
    std::pair<BlockMatrix, std::vector<double>> assemble_system(double eta, const std::function<double(Vec2)>& f,
                                                                int quad_level = 4) const {
        const BlockMatrix A = assemble_A(eta);
        return {A, assemble_b(f, quad_level)};
    }

    BlockMatrix assemble_A(double eta) const {
        const BlockMatrix G = assemble_G();
        const BlockMatrix C = assemble_C();
        const BlockMatrix Ct = C.transpose();
        const BlockMatrix P = assemble_P(eta);
        return BlockMatrix::sum({{1.0, &G}, {1.0, &C}, {1.0, &Ct}, {1.0, &P}});
    }

    /// Relative chart psi_plus^{-1} o psi_minus of an interior face.
    Similarity relative_chart(const mesh::Face& f) const {
        const auto& em = space_.m->elements[static_cast<std::size_t>(f.minus)];
        const auto& ep = space_.m->elements[static_cast<std::size_t>(f.plus)];
        return geom::compose(geom::invert(ep.chart), em.chart);
    }

private:
    struct FaceLocal {
        Similarity rel;                // psi_plus^{-1} o psi_minus
        std::vector<double> down_ext;  // I_down(phi_j, phi_i o rel)
        std::vector<double> up_ext;    // I_up(phi_j, phi_i o rel^{-1})
        std::vector<double> pen_plus;  // J[(phi_i o rho_n)(phi_j o rho_n)]
        std::vector<double> pen_cross; // J[(phi_i o gamma_s)(phi_j o rho_n)]
    };

    std::size_t block_bytes() const { return static_cast<std::size_t>(space_.np) * static_cast<std::size_t>(space_.np); }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * static_cast<std::size_t>(space_.np) + static_cast<std::size_t>(j); }

    static void axpy(double* dst, const std::vector<double>& src, double a) {
        for (std::size_t k = 0; k < src.size(); ++k) dst[k] += a * src[k];
    }
    void axpy_transposed(double* dst, const std::vector<double>& src, double a) const {
        for (int i = 0; i < space_.np; ++i)
            for (int j = 0; j < space_.np; ++j) dst[idx(i, j)] += a * src[idx(j, i)];
    }

    BlockMatrix diagonal_pattern() const {
        std::vector<std::pair<int, int>> pairs;
        for (int m = 0; m < space_.n_elements(); ++m) pairs.emplace_back(m, m);
        return BlockMatrix(space_.n_elements(), space_.np, std::move(pairs));
    }
    BlockMatrix face_pattern() const {
        std::vector<std::pair<int, int>> pairs;
        for (int m = 0; m < space_.n_elements(); ++m) pairs.emplace_back(m, m);
        for (const auto& f : space_.m->faces)
            if (f.interior()) {
                pairs.emplace_back(f.minus, f.plus);
                pairs.emplace_back(f.plus, f.minus);
            }
        return BlockMatrix(space_.n_elements(), space_.np, std::move(pairs));
    }

    /// I(phi_j, phi_i) over a context; rows are test functions.
    std::vector<double> own_matrix(const WedgeQuadContext& ctx) const {
        std::vector<double> M(block_bytes(), 0.0);
        for (int i = 0; i < space_.np; ++i)
            for (int j = 0; j < space_.np; ++j)
                M[idx(i, j)] = compute_I(basis_[static_cast<std::size_t>(j)], basis_[static_cast<std::size_t>(i)], ctx);
        return M;
    }

    /// J[(phi_i o rho)(phi_j o rho)] for one trace map rho : Gamma -> ref face.
    std::vector<double> penalty_matrix(const Similarity& rho, int /*slot*/) const {
        std::vector<double> M(block_bytes(), 0.0);
        std::vector<Poly2> tr;
        for (const auto& b : basis_) tr.push_back(poly::pullback(b, rho));
        for (int i = 0; i < space_.np; ++i)
            for (int j = i; j < space_.np; ++j) {
                const double v = moments::integrate_poly(koch_, poly::multiply(tr[static_cast<std::size_t>(i)],
                                                                               tr[static_cast<std::size_t>(j)]));
                M[idx(i, j)] = v;
                M[idx(j, i)] = v;
            }
        return M;
    }

    /// Cross-element local matrices for an interior face; they depend only
    /// on the slot pair, so they are computed once per (s, t).
    const FaceLocal& face_cache(const mesh::Face& f) const {
        const int key = (f.slot_minus - 1) * 6 + (f.slot_plus - 1);
        auto it = cross_.find(key);
        const Similarity rel = relative_chart(f);
        if (it != cross_.end()) {
            // the relative chart is a slot-pair invariant; verify cheaply
            const FaceLocal& fb = it->second;
            if (fb.rel.rot != rel.rot || std::abs(fb.rel.scale - rel.scale) > 1e-12 ||
                fb.rel.shift.dist(rel.shift) > 1e-12)
                throw mesh_error("face relative chart does not match its slot pair");
            return fb;
        }

        FaceLocal fb;
        fb.rel = rel;
        const Similarity rel_inv = geom::invert(rel);
        std::vector<Poly2> ext_minus, ext_plus; // phi_i seen from the other element
        for (const auto& b : basis_) {
            ext_minus.push_back(poly::pullback(b, rel));     // phi_i^plus on minus coordinates
            ext_plus.push_back(poly::pullback(b, rel_inv));  // phi_i^minus on plus coordinates
        }
        const WedgeQuadContext dctx = down_context(f.slot_minus);
        const WedgeQuadContext uctx = up_context(f.slot_plus);
        fb.down_ext.assign(block_bytes(), 0.0);
        fb.up_ext.assign(block_bytes(), 0.0);
        for (int i = 0; i < space_.np; ++i)
            for (int j = 0; j < space_.np; ++j) {
                fb.down_ext[idx(i, j)] = compute_I(basis_[static_cast<std::size_t>(j)], ext_minus[static_cast<std::size_t>(i)], dctx);
                fb.up_ext[idx(i, j)] = compute_I(basis_[static_cast<std::size_t>(j)], ext_plus[static_cast<std::size_t>(i)], uctx);
            }

        // penalty traces: rho_minus = gamma_s, rho_plus = rel o gamma_s
        const Similarity gamma_s = geom::reference_charts().face_chart(f.slot_minus);
        const Similarity rho_plus = geom::compose(rel, gamma_s);
        std::vector<Poly2> tr_m, tr_p;
        for (const auto& b : basis_) {
            tr_m.push_back(poly::pullback(b, gamma_s));
            tr_p.push_back(poly::pullback(b, rho_plus));
        }
        fb.pen_plus.assign(block_bytes(), 0.0);
        fb.pen_cross.assign(block_bytes(), 0.0);
        for (int i = 0; i < space_.np; ++i)
            for (int j = 0; j < space_.np; ++j) {
                if (j >= i)
                    fb.pen_plus[idx(i, j)] = moments::integrate_poly(
                        koch_, poly::multiply(tr_p[static_cast<std::size_t>(i)], tr_p[static_cast<std::size_t>(j)]));
                fb.pen_cross[idx(i, j)] = moments::integrate_poly(
                    koch_, poly::multiply(tr_m[static_cast<std::size_t>(i)], tr_p[static_cast<std::size_t>(j)]));
            }
        for (int i = 0; i < space_.np; ++i)
            for (int j = 0; j < i; ++j) fb.pen_plus[idx(i, j)] = fb.pen_plus[idx(j, i)];

        return cross_.emplace(key, std::move(fb)).first->second;
    }

    DGSpace space_;
    std::vector<Poly2> basis_;
    std::vector<std::pair<Poly2, Poly2>> grads_;
    std::vector<Poly2> laps_;
    MomentTable koch_;
    MomentTable snow_;
    std::array<MomentTable, 6> wedge_;
    std::array<std::vector<double>, 6> down_own_;
    std::array<std::vector<double>, 6> up_own_;
    std::array<std::vector<double>, 6> pen_own_;
    mutable std::map<int, FaceLocal> cross_;
};

} // namespace snowdg::assembly

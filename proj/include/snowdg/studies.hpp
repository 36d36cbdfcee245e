#pragma once
// Manufactured problems, discretization error norms, and the four
// reproducible experiments: smooth h-convergence, singular increment decay,
// conditioning growth, and the Dirichlet eigenproblem.

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "snowdg/assembly.hpp"
#include "snowdg/solvers.hpp"

namespace snowdg::studies {

using assembly::Assembler;
using assembly::DGSpace;
using geom::Similarity;
using geom::Vec2;
using poly::Poly2;

struct ManufacturedProblem {
    std::function<double(Vec2)> u;
    std::function<Vec2(Vec2)> grad_u;
    std::function<double(Vec2)> f;
    double boundary_max = 0.0; // sup |u| over boundary samples, informational
    bool has_exact = false;
};

/// u(x,y) = exp(-(x^2+y^2)/sigma^2); treated as a homogeneous-Dirichlet
/// manufactured solution (its boundary trace is recorded, not enforced).
inline ManufacturedProblem gaussian_problem(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_problem: sigma must be positive");
    ManufacturedProblem mp;
    const double s2 = sigma * sigma;
    mp.u = [s2](Vec2 p) { return std::exp(-(p.x * p.x + p.y * p.y) / s2); };
    mp.grad_u = [s2](Vec2 p) {
        const double v = std::exp(-(p.x * p.x + p.y * p.y) / s2);
        return Vec2{-2.0 * p.x * v / s2, -2.0 * p.y * v / s2};
    };
    mp.f = [s2](Vec2 p) {
        const double r2 = p.x * p.x + p.y * p.y;
        return (4.0 / s2 - 4.0 * r2 / (s2 * s2)) * std::exp(-r2 / s2);
    };
    mp.has_exact = true;
    for (const auto& q : geom::sample_snowflake_boundary(6)) mp.boundary_max = std::max(mp.boundary_max, std::abs(mp.u(q)));
    return mp;
}

/// f = c with unknown exact solution (the singular benchmark uses c = 1).
inline ManufacturedProblem constant_problem(double c) {
    ManufacturedProblem mp;
    mp.f = [c](Vec2) { return c; };
    mp.has_exact = false;
    return mp;
}

struct ErrorPair {
    double dg = 0.0;
    double l2 = 0.0;
};

/// DG-norm and L2 errors of a discrete solution against a manufactured u.
/// Volume terms use the composite barycentre rule at quad_level; interior
/// jumps are exact Koch moments of the polynomial jump (u is continuous);
/// boundary deviations use the Koch barycentre rule at level 6 with the
/// h_F^{-d} weight cancelled analytically.
inline ErrorPair dg_error(const Assembler& as, std::span<const double> coeffs, const ManufacturedProblem& mp,
                          int quad_level = 4) {
    const DGSpace& sp = as.space();
    if (static_cast<int>(coeffs.size()) != sp.ndof()) throw std::invalid_argument("dg_error: coefficient size mismatch");
    if (!mp.has_exact) throw std::invalid_argument("dg_error: problem has no exact solution");
    const auto& mm = *sp.m;
    const auto basis = assembly::monomial_basis(sp.p);

    auto local_poly = [&](int m) {
        Poly2 u(sp.p);
        for (int i = 0; i < sp.np; ++i) {
            const double c = coeffs[static_cast<std::size_t>(m * sp.np + i)];
            for (std::size_t k = 0; k < u.c.size() && k < basis[static_cast<std::size_t>(i)].c.size(); ++k)
                u.c[k] += c * basis[static_cast<std::size_t>(i)].c[k];
        }
        return u;
    };

    double dg2 = 0.0, l22 = 0.0;
    const auto& rule = quad::ref_volume_rule(quad_level);
    for (int m = 0; m < sp.n_elements(); ++m) {
        const auto& e = mm.elements[static_cast<std::size_t>(m)];
        const Poly2 uh = local_poly(m);
        const auto [gx, gy] = poly::gradient(uh);
        const double jac = e.chart.scale * e.chart.scale;
        const double inv_scale = 1.0 / e.chart.scale;
        double vl2 = 0.0, vdg = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            const Vec2 xhat = rule.nodes[k];
            const Vec2 x = e.chart(xhat);
            const double du = mp.u(x) - uh.evaluate(xhat);
            vl2 += rule.weights[k] * du * du;
            // physical gradient of the local polynomial: R (grad-hat)/scale
            const Vec2 ghat{gx.evaluate(xhat), gy.evaluate(xhat)};
            const Similarity rot(inv_scale, e.chart.rot, {0.0, 0.0});
            const Vec2 gphys = rot.linear(ghat);
            const Vec2 dgrad = mp.grad_u(x) - gphys;
            vdg += rule.weights[k] * dgrad.norm2();
        }
        l22 += jac * vl2;
        dg2 += jac * vdg;
    }

    const auto koch = moments::koch_moments(2 * sp.p);
    const auto& rc = geom::reference_charts();
    const auto& bnodes = quad::koch_rule_nodes(6);
    for (const auto& f : mm.faces) {
        if (f.interior()) {
            const auto& em = mm.elements[static_cast<std::size_t>(f.minus)];
            const Poly2 um = local_poly(f.minus);
            const Poly2 up = local_poly(f.plus);
            const Similarity gamma_s = rc.face_chart(f.slot_minus);
            const Similarity rel = as.relative_chart(f);
            const Poly2 jump = poly::pullback(um, gamma_s) - poly::pullback(up, geom::compose(rel, gamma_s));
            (void)em;
            dg2 += moments::integrate_poly(koch, poly::multiply(jump, jump));
        } else {
            const auto& e = mm.elements[static_cast<std::size_t>(f.minus)];
            const Poly2 um = local_poly(f.minus);
            const Similarity gamma_s = rc.face_chart(f.slot_minus);
            const Similarity xi = geom::compose(e.chart, gamma_s);
            double s = 0.0;
            for (const auto& g : bnodes) {
                const double d = mp.u(xi(g)) - um.evaluate(gamma_s(g));
                s += d * d;
            }
            dg2 += s / static_cast<double>(bnodes.size());
        }
    }
    return {std::sqrt(dg2), std::sqrt(l22)};
}

/// Exact L2 norm of the difference between solutions on nested meshes: the
/// coarse polynomial is pulled back onto each fine element and the squared
/// difference (degree <= 2p) is integrated with snowflake moments.
inline double increment_error(const Assembler& coarse, std::span<const double> coarse_coeffs, const Assembler& fine,
                              std::span<const double> fine_coeffs) {
    const DGSpace& sc = coarse.space();
    const DGSpace& sf = fine.space();
    if (sc.p != sf.p) throw std::invalid_argument("increment_error: mismatched degree");
    const auto basis = assembly::monomial_basis(sf.p);
    const auto snow = moments::snowflake_moments(2 * sf.p);

    std::map<std::vector<std::uint8_t>, int> coarse_words;
    std::size_t max_len = 0;
    for (std::size_t i = 0; i < sc.m->elements.size(); ++i) {
        coarse_words[sc.m->elements[i].word] = static_cast<int>(i);
        max_len = std::max(max_len, sc.m->elements[i].word.size());
    }

    auto local_poly = [&](const DGSpace& sp, std::span<const double> c, int m) {
        Poly2 u(sp.p);
        for (int i = 0; i < sp.np; ++i) {
            const double ci = c[static_cast<std::size_t>(m * sp.np + i)];
            for (std::size_t k = 0; k < u.c.size() && k < basis[static_cast<std::size_t>(i)].c.size(); ++k)
                u.c[k] += ci * basis[static_cast<std::size_t>(i)].c[k];
        }
        return u;
    };

    double total = 0.0;
    for (int mf = 0; mf < sf.n_elements(); ++mf) {
        const auto& ef = sf.m->elements[static_cast<std::size_t>(mf)];
        int anc = -1;
        std::vector<std::uint8_t> prefix(ef.word.begin(),
                                         ef.word.begin() + static_cast<std::ptrdiff_t>(std::min(ef.word.size(), max_len)));
        for (;;) {
            auto it = coarse_words.find(prefix);
            if (it != coarse_words.end()) {
                anc = it->second;
                break;
            }
            if (prefix.empty()) break;
            prefix.pop_back();
        }
        if (anc < 0) throw std::invalid_argument("increment_error: meshes are not nested");

        const auto& ec = sc.m->elements[static_cast<std::size_t>(anc)];
        const Similarity rel = geom::compose(geom::invert(ec.chart), ef.chart);
        const Poly2 diff = local_poly(sf, fine_coeffs, mf) - poly::pullback(local_poly(sc, coarse_coeffs, anc), rel);
        total += ef.chart.scale * ef.chart.scale * moments::integrate_poly(snow, poly::multiply(diff, diff));
    }
    return std::sqrt(total);
}

// ---------------------------------------------------------------------------

struct StudyRow {
    std::string study;
    std::string family;
    int ell = -1;
    int ellstar = -1;
    int p = -1;
    long long n_elements = -1;
    long long n_dofs = -1;
    double h_max = std::nan("");
    double h_boundary = std::nan("");
    double err_dg = std::nan("");
    double err_l2 = std::nan("");
    double rate_dg = std::nan("");
    double rate_l2 = std::nan("");
    double cond = std::nan("");
    int eig_index = -1;
    double lambda = std::nan("");
    double lambda_scaled = std::nan("");
    double lambda_ref = std::nan("");
    double rel_err = std::nan("");
};

inline void write_csv(const std::vector<StudyRow>& rows, std::ostream& out) {
    out << "study,family,ell,ellstar,p,n_elements,n_dofs,h_max,h_boundary,err_dg,err_l2,rate_dg,rate_l2,cond,"
           "eig_index,lambda,lambda_scaled,lambda_ref,rel_err\n";
    char buf[40];
    auto num = [&](double v) -> std::string {
        if (std::isnan(v)) return "";
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    };
    auto integer = [&](long long v) -> std::string { return v < 0 ? "" : std::to_string(v); };
    for (const auto& r : rows) {
        out << r.study << ',' << r.family << ',' << integer(r.ell) << ',' << integer(r.ellstar) << ','
            << integer(r.p) << ',' << integer(r.n_elements) << ',' << integer(r.n_dofs) << ',' << num(r.h_max)
            << ',' << num(r.h_boundary) << ',' << num(r.err_dg) << ',' << num(r.err_l2) << ',' << num(r.rate_dg)
            << ',' << num(r.rate_l2) << ',' << num(r.cond) << ',' << integer(r.eig_index) << ',' << num(r.lambda)
            << ',' << num(r.lambda_scaled) << ',' << num(r.lambda_ref) << ',' << num(r.rel_err) << '\n';
    }
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("loglog_slope: need two matching points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (static_cast<double>(n) * sxy - sx * sy) / (static_cast<double>(n) * sxx - sx * sx);
}

struct ConvergenceResult {
    std::vector<StudyRow> rows; // per mesh + one summary row with the LS rates
    double ls_rate_dg = std::nan("");
    double ls_rate_l2 = std::nan("");
};

/// Smooth convergence study: Gaussian manufactured solution on T'_0..T'_lmax.
/// Per-row rates are pairwise log-ratios in h_max; the summary row carries
/// least-squares slopes over the last three meshes.
inline ConvergenceResult run_convergence(double sigma, int p, int ell_max, double eta = 10.0, int quad_level = 4,
                                         double cg_tol = 1e-10) {
    const ManufacturedProblem mp = gaussian_problem(sigma);
    ConvergenceResult res;
    std::vector<double> hs, edg, el2;
    for (int ell = 0; ell <= ell_max; ++ell) {
        const mesh::Mesh m = mesh::build_quasi_uniform(ell);
        DGSpace sp(m, p);
        Assembler as(sp);
        auto [A, b] = as.assemble_system(eta, mp.f, quad_level);
        auto [x, rep] = la::solve_spd(A, b, cg_tol);
        const ErrorPair err = dg_error(as, x, mp, quad_level);

        StudyRow r;
        r.study = "convergence";
        r.family = "quasi_uniform";
        r.ell = ell;
        r.ellstar = 0;
        r.p = p;
        r.n_elements = static_cast<long long>(m.elements.size());
        r.n_dofs = sp.ndof();
        r.h_max = m.h_max();
        r.h_boundary = m.h_boundary();
        r.err_dg = err.dg;
        r.err_l2 = err.l2;
        if (!hs.empty()) {
            r.rate_dg = std::log(edg.back() / err.dg) / std::log(hs.back() / r.h_max);
            r.rate_l2 = std::log(el2.back() / err.l2) / std::log(hs.back() / r.h_max);
        }
        hs.push_back(r.h_max);
        edg.push_back(err.dg);
        el2.push_back(err.l2);
        res.rows.push_back(std::move(r));
    }
    if (hs.size() >= 3) {
        const std::size_t n = hs.size();
        res.ls_rate_dg = loglog_slope(std::span(hs).subspan(n - 3), std::span(edg).subspan(n - 3));
        res.ls_rate_l2 = loglog_slope(std::span(hs).subspan(n - 3), std::span(el2).subspan(n - 3));
        StudyRow s;
        s.study = "convergence_ls_last3";
        s.family = "quasi_uniform";
        s.p = p;
        s.rate_dg = res.ls_rate_dg;
        s.rate_l2 = res.ls_rate_l2;
        res.rows.push_back(std::move(s));
    }
    return res;
}

struct IncrementResult {
    std::vector<StudyRow> rows;
    double slope = std::nan(""); // LS slope of log(increment) vs log(N_coarse)
};

/// Increment study with f = 1 on a nested mesh sequence: either the
/// quasi-uniform T'_0..T'_lmax ladder or the boundary-refined ladder
/// T'_{ell,0}..T'_{ell,lstar_max}.
inline IncrementResult run_increments(int p, bool boundary_refined, int ell_or_lmax, int lstar_max = 0,
                                      double eta = 10.0, int quad_level = 4, double cg_tol = 1e-10) {
    const ManufacturedProblem mp = constant_problem(1.0);
    IncrementResult res;
    std::vector<double> ns, incs;

    std::optional<mesh::Mesh> prev_mesh;
    std::vector<double> prev_x;
    const int steps = boundary_refined ? lstar_max : ell_or_lmax;
    for (int k = 0; k <= steps; ++k) {
        mesh::Mesh m = boundary_refined ? mesh::build_boundary_refined(ell_or_lmax, k) : mesh::build_quasi_uniform(k);
        DGSpace sp(m, p);
        Assembler as(sp);
        auto [A, b] = as.assemble_system(eta, mp.f, quad_level);
        auto [x, rep] = la::solve_spd(A, b, cg_tol);

        if (prev_mesh) {
            DGSpace spc(*prev_mesh, p);
            Assembler asc(spc);
            const double inc = increment_error(asc, prev_x, as, x);
            StudyRow r;
            r.study = "increments";
            r.family = boundary_refined ? "boundary_refined" : "quasi_uniform";
            r.ell = boundary_refined ? ell_or_lmax : k - 1;
            r.ellstar = boundary_refined ? k - 1 : 0;
            r.p = p;
            r.n_elements = static_cast<long long>(prev_mesh->elements.size());
            r.n_dofs = spc.ndof();
            r.h_max = prev_mesh->h_max();
            r.h_boundary = prev_mesh->h_boundary();
            r.err_l2 = inc;
            if (!ns.empty())
                r.rate_l2 = std::log(incs.back() / inc) / std::log(ns.back() / static_cast<double>(r.n_dofs));
            ns.push_back(static_cast<double>(r.n_dofs));
            incs.push_back(inc);
            res.rows.push_back(std::move(r));
        }
        prev_mesh = std::move(m);
        prev_x = std::move(x);
    }
    if (ns.size() >= 2) {
        res.slope = loglog_slope(ns, incs);
        StudyRow s;
        s.study = "increments_ls";
        s.family = boundary_refined ? "boundary_refined" : "quasi_uniform";
        s.p = p;
        s.rate_l2 = res.slope;
        res.rows.push_back(std::move(s));
    }
    return res;
}

struct ConditioningResult {
    std::vector<StudyRow> rows;
    double slope_quasi = std::nan("");
    double slope_boundary = std::nan("");
};

/// Condition numbers of A_SIP on the quasi-uniform ladder T'_0..T'_lmax and
/// on the boundary-refined ladder T'_{3,0}..T'_{3,lstar_max}.
inline ConditioningResult run_conditioning(int p, int ell_max, int lstar_max = 3, double eta = 10.0) {
    ConditioningResult res;
    auto run_one = [&](bool boundary, int steps) {
        std::vector<double> ns, conds;
        for (int k = 0; k <= steps; ++k) {
            const mesh::Mesh m = boundary ? mesh::build_boundary_refined(3, k) : mesh::build_quasi_uniform(k);
            DGSpace sp(m, p);
            Assembler as(sp);
            const la::BlockMatrix A = as.assemble_A(eta);
            const double cond = la::condition_estimate(A);
            StudyRow r;
            r.study = "conditioning";
            r.family = boundary ? "boundary_refined" : "quasi_uniform";
            r.ell = boundary ? 3 : k;
            r.ellstar = boundary ? k : 0;
            r.p = p;
            r.n_elements = static_cast<long long>(m.elements.size());
            r.n_dofs = sp.ndof();
            r.h_max = m.h_max();
            r.h_boundary = m.h_boundary();
            r.cond = cond;
            ns.push_back(static_cast<double>(r.n_dofs));
            conds.push_back(cond);
            res.rows.push_back(std::move(r));
        }
        return loglog_slope(ns, conds);
    };
    res.slope_quasi = run_one(false, ell_max);
    res.slope_boundary = run_one(true, lstar_max);
    StudyRow sq;
    sq.study = "conditioning_ls";
    sq.family = "quasi_uniform";
    sq.p = p;
    sq.cond = res.slope_quasi;
    res.rows.push_back(sq);
    StudyRow sb;
    sb.study = "conditioning_ls";
    sb.family = "boundary_refined";
    sb.p = p;
    sb.cond = res.slope_boundary;
    res.rows.push_back(sb);
    return res;
}

/// References for the first ten Dirichlet eigenvalues of the unit-side
/// snowflake (computed on (1/sqrt 3) Omega, hence the factor 3 applied to
/// the discrete values before comparison).
inline const std::vector<double>& reference_eigenvalues() {
    static const std::vector<double> refs = {39.348,  97.436,  97.436,  165.406, 165.406,
                                             190.370, 208.608, 272.406, 272.406, 312.353};
    return refs;
}

/// Eigenvalue study: the first k modes of A Phi = lambda M Phi, scaled by 3
/// and compared against the references where available.
inline std::vector<StudyRow> run_eigen(mesh::Family family, int ell, int ellstar, int p, int k, double eta = 10.0,
                                       double tol = 1e-8) {
    mesh::Mesh m;
    switch (family) {
        case mesh::Family::uniform: m = mesh::build_uniform(ell); break;
        case mesh::Family::quasi_uniform: m = mesh::build_quasi_uniform(ell); break;
        case mesh::Family::boundary_refined: m = mesh::build_boundary_refined(ell, ellstar); break;
    }
    DGSpace sp(m, p);
    Assembler as(sp);
    const la::BlockMatrix A = as.assemble_A(eta);
    const la::BlockMatrix M = as.assemble_M();
    const auto eigs = la::smallest_generalized_eigs(A, M, k, tol);
    const auto& refs = reference_eigenvalues();

    std::vector<StudyRow> rows;
    for (int i = 0; i < k; ++i) {
        StudyRow r;
        r.study = "eigenvalues";
        r.family = family_name(family);
        r.ell = ell;
        r.ellstar = ellstar;
        r.p = p;
        r.n_elements = static_cast<long long>(m.elements.size());
        r.n_dofs = sp.ndof();
        r.h_max = m.h_max();
        r.h_boundary = m.h_boundary();
        r.eig_index = i + 1;
        r.lambda = eigs[static_cast<std::size_t>(i)].value;
        r.lambda_scaled = 3.0 * r.lambda;
        if (i < static_cast<int>(refs.size())) {
            r.lambda_ref = refs[static_cast<std::size_t>(i)];
            r.rel_err = std::abs(r.lambda_scaled - r.lambda_ref) / r.lambda_ref;
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace snowdg::studies

#pragma once
// Sparse SPD solves and generalized symmetric eigenpairs for the DG system.
//
// The workhorse is preconditioned conjugate gradients with a block-Jacobi
// preconditioner (the diagonal blocks are small, dense and well conditioned
// at p <= 2). Dense Eigen factorizations provide the small-problem path and
// the test oracles. Eigenpairs of A x = lambda M x come from the dense
// generalized solver when the problem is small, otherwise from shift-invert
// block Lanczos in the M inner product with inner CG solves.

#include <chrono>
#include <cmath>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "snowdg/block_matrix.hpp"
#include "snowdg/errors.hpp"

namespace snowdg::la {

struct SolveReport {
    int iterations = 0;
    double rel_residual = 0.0; // ||Ax-b|| / ||b||, recomputed after the solve
    double seconds = 0.0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
inline double nrm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

} // namespace detail

/// Inverts each diagonal block; fails when a block is not SPD (a symptom of
/// a too-small penalty parameter).
class BlockJacobi {
public:
    explicit BlockJacobi(const BlockMatrix& A) : np_(A.block_size()), nt_(A.block_rows()) {
        const std::size_t bs2 = static_cast<std::size_t>(np_) * static_cast<std::size_t>(np_);
        inv_.resize(static_cast<std::size_t>(nt_) * bs2);
        Eigen::MatrixXd B(np_, np_);
        for (int m = 0; m < nt_; ++m) {
            const double* src = A.find_block(m, m);
            if (!src) throw numerical_error("BlockJacobi: missing diagonal block");
            for (int i = 0; i < np_; ++i)
                for (int j = 0; j < np_; ++j) B(i, j) = src[i * np_ + j];
            Eigen::LLT<Eigen::MatrixXd> llt(B);
            if (llt.info() != Eigen::Success)
                throw numerical_error("BlockJacobi: diagonal block not SPD (is the penalty too small?)");
            const Eigen::MatrixXd Binv = llt.solve(Eigen::MatrixXd::Identity(np_, np_));
            double* dst = inv_.data() + static_cast<std::size_t>(m) * bs2;
            for (int i = 0; i < np_; ++i)
                for (int j = 0; j < np_; ++j) dst[i * np_ + j] = Binv(i, j);
        }
    }

    void apply(std::span<const double> r, std::span<double> z) const {
        const std::size_t bs = static_cast<std::size_t>(np_);
        for (int m = 0; m < nt_; ++m) {
            const double* B = inv_.data() + static_cast<std::size_t>(m) * bs * bs;
            const double* rm = r.data() + static_cast<std::size_t>(m) * bs;
            double* zm = z.data() + static_cast<std::size_t>(m) * bs;
            for (std::size_t i = 0; i < bs; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < bs; ++j) s += B[i * bs + j] * rm[j];
                zm[i] = s;
            }
        }
    }

private:
    int np_, nt_;
    std::vector<double> inv_;
};

/// Preconditioned CG. Terminates when the preconditioned residual norm
/// drops below tol relative to the preconditioned right-hand side; throws
/// numerical_error on negative curvature (indefinite matrix) or when
/// 20 sqrt(N) iterations are exhausted.
inline std::pair<std::vector<double>, SolveReport> solve_spd(const BlockMatrix& A, std::span<const double> b,
                                                             double tol = 1e-10,
                                                             const BlockJacobi* precond = nullptr,
                                                             const std::vector<double>* x0 = nullptr) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t n = static_cast<std::size_t>(A.rows());
    if (b.size() != n) throw std::invalid_argument("solve_spd: size mismatch");
    std::unique_ptr<BlockJacobi> own;
    if (!precond) {
        own = std::make_unique<BlockJacobi>(A);
        precond = own.get();
    }

    std::vector<double> x(n, 0.0), r(b.begin(), b.end()), z(n), p(n), Ap(n);
    if (x0 && x0->size() == n) {
        x = *x0;
        A.matvec(x, Ap);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
    }
    precond->apply(r, z);
    double rho = detail::dot(r, z);
    std::vector<double> zb(n);
    precond->apply(b, zb);
    const double target2 = tol * tol * std::max(detail::dot(b, zb), 1e-300);
    p = z;

    const int maxit = static_cast<int>(std::ceil(20.0 * std::sqrt(static_cast<double>(n))));
    int it = 0;
    while (rho > target2 && it < maxit) {
        A.matvec(p, Ap);
        const double pAp = detail::dot(p, Ap);
        if (pAp <= 0.0)
            throw numerical_error("solve_spd: negative curvature encountered; the matrix is not positive definite "
                                  "(penalty parameter too small?)");
        const double alpha = rho / pAp;
        for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
        precond->apply(r, z);
        const double rho_next = detail::dot(r, z);
        const double beta = rho_next / rho;
        rho = rho_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        ++it;
    }
    if (rho > target2)
        throw numerical_error("solve_spd: no convergence in " + std::to_string(maxit) + " iterations");

    SolveReport rep;
    rep.iterations = it;
    A.matvec(x, Ap);
    double rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) rr += (Ap[i] - b[i]) * (Ap[i] - b[i]);
    const double nb = detail::nrm2(b);
    rep.rel_residual = nb > 0.0 ? std::sqrt(rr) / nb : std::sqrt(rr);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(x), rep};
}

inline Eigen::MatrixXd to_dense(const BlockMatrix& A) {
    Eigen::MatrixXd D;
    A.to_dense(D);
    return D;
}

struct EigenPair {
    double value = 0.0;
    std::vector<double> vector;
};

/// Smallest k eigenpairs of A x = lambda M x, both SPD. Dense generalized
/// solver up to `dense_threshold` unknowns; shift-invert block Lanczos in
/// the M inner product beyond that. Eigenvectors are M-orthonormal and the
/// relative residual ||A v - lambda M v|| <= tol ||A v|| is verified.
inline std::vector<EigenPair> smallest_generalized_eigs(const BlockMatrix& A, const BlockMatrix& M, int k,
                                                        double tol = 1e-9, int dense_threshold = 3000) {
    const int n = A.rows();
    if (k < 1 || k > std::min(n, 20)) throw std::invalid_argument("smallest_generalized_eigs: bad k");

    std::vector<EigenPair> out;

    auto residual_ok = [&](const EigenPair& ep) {
        std::vector<double> Av(static_cast<std::size_t>(n)), Mv(static_cast<std::size_t>(n));
        A.matvec(ep.vector, Av);
        M.matvec(ep.vector, Mv);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = Av[static_cast<std::size_t>(i)] - ep.value * Mv[static_cast<std::size_t>(i)];
            num += d * d;
            den += Av[static_cast<std::size_t>(i)] * Av[static_cast<std::size_t>(i)];
        }
        return std::sqrt(num) <= tol * std::sqrt(den);
    };

    if (n <= dense_threshold) {
        const Eigen::MatrixXd Ad = to_dense(A), Md = to_dense(M);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Ad, Md);
        if (ges.info() != Eigen::Success) throw numerical_error("dense generalized eigensolver failed");
        for (int i = 0; i < k; ++i) {
            EigenPair ep;
            ep.value = ges.eigenvalues()(i);
            ep.vector.assign(static_cast<std::size_t>(n), 0.0);
            for (int r = 0; r < n; ++r) ep.vector[static_cast<std::size_t>(r)] = ges.eigenvectors()(r, i);
            out.push_back(std::move(ep));
        }
        return out;
    }

    // ---- shift-invert block Lanczos on Op = A^{-1} M --------------------
    const BlockJacobi precond(A);
    const double inner_tol = std::max(1e-13, 1e-3 * tol);
    const int blk = 2; // covers the double eigenvalues of the symmetric domain
    const int m_max = std::min(n, std::max(10 * k, 80));

    std::vector<std::vector<double>> V;  // M-orthonormal basis columns
    std::vector<std::vector<double>> MV; // M * columns
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m_max + blk, m_max + blk);
    std::mt19937_64 rng(20240517);
    std::normal_distribution<double> N01(0.0, 1.0);

    auto mnorm = [&](const std::vector<double>& v) {
        std::vector<double> mv(static_cast<std::size_t>(n));
        M.matvec(v, mv);
        return std::sqrt(detail::dot(v, mv));
    };
    // orthogonalize v against all current columns (two passes), M-normalize;
    // returns false on breakdown
    auto orthonormalize = [&](std::vector<double>& v) {
        const double before = mnorm(v);
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t c = 0; c < V.size(); ++c) {
                const double h = detail::dot(MV[c], v);
                for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] -= h * V[c][static_cast<std::size_t>(i)];
            }
        const double after = mnorm(v);
        if (!(after > 1e-10 * std::max(before, 1.0))) return false;
        for (auto& vi : v) vi /= after;
        return true;
    };
    auto push_column = [&](std::vector<double> v) {
        std::vector<double> mv(static_cast<std::size_t>(n));
        M.matvec(v, mv);
        MV.push_back(std::move(mv));
        V.push_back(std::move(v));
    };
    auto fresh_random = [&]() {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& vi : v) vi = N01(rng);
        return v;
    };

    for (int c = 0; c < blk; ++c) {
        std::vector<double> v = fresh_random();
        while (!orthonormalize(v)) v = fresh_random();
        push_column(std::move(v));
    }

    int converged_at = -1;
    std::vector<double> ritz_values;
    Eigen::MatrixXd ritz_Y;

    while (static_cast<int>(V.size()) <= m_max) {
        const int m0 = static_cast<int>(V.size());
        // apply Op to the newest block and record projection coefficients
        for (int c = m0 - blk; c < m0; ++c) {
            auto [u, rep] = solve_spd(A, MV[static_cast<std::size_t>(c)], inner_tol, &precond);
            (void)rep;
            // H column c: coefficients against all existing columns
            for (std::size_t d = 0; d < V.size(); ++d) {
                const double h = detail::dot(MV[d], u);
                H(static_cast<int>(d), c) = h;
            }
            for (std::size_t d = 0; d < V.size(); ++d)
                for (int i = 0; i < n; ++i)
                    u[static_cast<std::size_t>(i)] -= H(static_cast<int>(d), c) * V[d][static_cast<std::size_t>(i)];
            // second orthogonalization pass mops up rounding; fold into H
            for (std::size_t d = 0; d < V.size(); ++d) {
                const double h2 = detail::dot(MV[d], u);
                H(static_cast<int>(d), c) += h2;
                for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] -= h2 * V[d][static_cast<std::size_t>(i)];
            }
            const double beta = mnorm(u);
            if (beta > 1e-12) {
                for (auto& ui : u) ui /= beta;
                if (static_cast<int>(V.size()) < m_max + blk) {
                    H(static_cast<int>(V.size()), c) = beta;
                    push_column(std::move(u));
                }
            } else {
                // invariant subspace hit: pad with a fresh random direction
                std::vector<double> v = fresh_random();
                while (!orthonormalize(v)) v = fresh_random();
                if (static_cast<int>(V.size()) < m_max + blk) push_column(std::move(v));
            }
        }

        const int m = static_cast<int>(V.size()) - blk; // columns with complete H data
        if (m < std::max(2 * k, blk + k)) continue;

        Eigen::MatrixXd Hm = H.topLeftCorner(m, m);
        Hm = 0.5 * (Hm + Hm.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hm);
        if (es.info() != Eigen::Success) throw numerical_error("lanczos: projected eigensolve failed");

        // the k largest theta of Op correspond to the smallest lambda = 1/theta
        ritz_values.clear();
        ritz_Y.resize(m, k);
        bool plausible = true;
        for (int i = 0; i < k; ++i) {
            const double theta = es.eigenvalues()(m - 1 - i);
            if (!(theta > 0.0)) {
                plausible = false;
                break;
            }
            ritz_values.push_back(1.0 / theta);
            ritz_Y.col(i) = es.eigenvectors().col(m - 1 - i);
        }
        if (!plausible) continue;

        // assemble Ritz vectors and verify true residuals
        std::vector<EigenPair> cand(static_cast<std::size_t>(k));
        bool all_ok = true;
        for (int i = 0; i < k; ++i) {
            EigenPair ep;
            ep.value = ritz_values[static_cast<std::size_t>(i)];
            ep.vector.assign(static_cast<std::size_t>(n), 0.0);
            for (int c = 0; c < m; ++c) {
                const double y = ritz_Y(c, i);
                const auto& col = V[static_cast<std::size_t>(c)];
                for (int r = 0; r < n; ++r) ep.vector[static_cast<std::size_t>(r)] += y * col[static_cast<std::size_t>(r)];
            }
            if (!residual_ok(ep)) {
                all_ok = false;
                break;
            }
            cand[static_cast<std::size_t>(i)] = std::move(ep);
        }
        if (all_ok) {
            out = std::move(cand);
            converged_at = m;
            break;
        }
    }
    if (converged_at < 0) throw numerical_error("smallest_generalized_eigs: Lanczos did not converge");

    std::sort(out.begin(), out.end(), [](const EigenPair& a, const EigenPair& b) { return a.value < b.value; });
    return out;
}

/// Two-norm condition number: exact dense eigenvalues up to the threshold,
/// otherwise power iteration for the largest and preconditioned inverse
/// iteration for the smallest eigenvalue (both with relative tolerance tol).
inline double condition_estimate(const BlockMatrix& A, double tol = 1e-4, int dense_threshold = 3000) {
    const int n = A.rows();
    if (n <= dense_threshold) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense(A));
        if (es.info() != Eigen::Success) throw numerical_error("condition_estimate: dense eigensolve failed");
        const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
        if (!(lo > 0.0)) throw numerical_error("condition_estimate: matrix not positive definite");
        return hi / lo;
    }

    std::mt19937_64 rng(987654321);
    std::normal_distribution<double> N01(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    for (auto& v : x) v = N01(rng);

    auto rayleigh_iterate = [&](auto&& apply, const char* what) {
        double prev = 0.0;
        for (int it = 0; it < 5000; ++it) {
            apply(x, y);
            const double xy = detail::dot(x, y), xx = detail::dot(x, x);
            const double rq = xy / xx;
            const double ny = detail::nrm2(y);
            for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] / ny;
            if (it > 3 && std::abs(rq - prev) <= tol * std::abs(rq)) return rq;
            prev = rq;
        }
        throw numerical_error(std::string("condition_estimate: power iteration stalled for ") + what);
    };

    const double lmax = rayleigh_iterate([&](const std::vector<double>& in, std::vector<double>& outv) { A.matvec(in, outv); },
                                         "lambda_max");
    const BlockJacobi precond(A);
    for (auto& v : x) v = N01(rng);
    const double inv_lmin =
        rayleigh_iterate([&](const std::vector<double>& in, std::vector<double>& outv) {
            auto [sol, rep] = solve_spd(A, in, 1e-8, &precond);
            (void)rep;
            outv = std::move(sol);
        }, "lambda_min");
    return lmax * inv_lmin;
}

} // namespace snowdg::la

#pragma once
// Sparse matrix of dense np x np blocks over element pairs, stored block-CSR
// with a fixed, sorted sparsity pattern. Hosts the DG matrices G, C, P, M
// and their sums.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "snowdg/errors.hpp"

namespace snowdg::la {

class BlockMatrix {
public:
    BlockMatrix() = default;

    /// Build with a fixed sparsity pattern; duplicate pairs are merged.
    BlockMatrix(int nblocks, int np, std::vector<std::pair<int, int>> pairs) : nt_(nblocks), np_(np) {
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        row_ptr_.assign(static_cast<std::size_t>(nt_) + 1, 0);
        col_.reserve(pairs.size());
        for (const auto& [r, c] : pairs) {
            if (r < 0 || r >= nt_ || c < 0 || c >= nt_) throw std::invalid_argument("BlockMatrix: pair out of range");
            ++row_ptr_[static_cast<std::size_t>(r) + 1];
            col_.push_back(c);
        }
        for (std::size_t r = 0; r < static_cast<std::size_t>(nt_); ++r) row_ptr_[r + 1] += row_ptr_[r];
        data_.assign(col_.size() * static_cast<std::size_t>(np_ * np_), 0.0);
    }

    int block_rows() const { return nt_; }
    int block_size() const { return np_; }
    int rows() const { return nt_ * np_; }
    std::size_t stored_blocks() const { return col_.size(); }

    /// Pointer to the block (m,n); null when outside the pattern.
    double* find_block(int m, int n) {
        const int k = block_index(m, n);
        return k < 0 ? nullptr : data_.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(np_ * np_);
    }
    const double* find_block(int m, int n) const {
        const int k = block_index(m, n);
        return k < 0 ? nullptr : data_.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(np_ * np_);
    }
    double* block(int m, int n) {
        double* b = find_block(m, n);
        if (!b) throw std::invalid_argument("BlockMatrix: block outside sparsity pattern");
        return b;
    }

    void matvec(std::span<const double> x, std::span<double> y) const {
        const std::size_t bs = static_cast<std::size_t>(np_);
        std::fill(y.begin(), y.end(), 0.0);
        for (int m = 0; m < nt_; ++m) {
            double* ym = y.data() + static_cast<std::size_t>(m) * bs;
            for (int k = row_ptr_[static_cast<std::size_t>(m)]; k < row_ptr_[static_cast<std::size_t>(m) + 1]; ++k) {
                const double* B = data_.data() + static_cast<std::size_t>(k) * bs * bs;
                const double* xn = x.data() + static_cast<std::size_t>(col_[static_cast<std::size_t>(k)]) * bs;
                for (std::size_t i = 0; i < bs; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < bs; ++j) s += B[i * bs + j] * xn[j];
                    ym[i] += s;
                }
            }
        }
    }

    BlockMatrix transpose() const {
        std::vector<std::pair<int, int>> pairs;
        pairs.reserve(col_.size());
        for (int m = 0; m < nt_; ++m)
            for (int k = row_ptr_[static_cast<std::size_t>(m)]; k < row_ptr_[static_cast<std::size_t>(m) + 1]; ++k)
                pairs.emplace_back(col_[static_cast<std::size_t>(k)], m);
        BlockMatrix t(nt_, np_, std::move(pairs));
        const std::size_t bs = static_cast<std::size_t>(np_);
        for (int m = 0; m < nt_; ++m)
            for (int k = row_ptr_[static_cast<std::size_t>(m)]; k < row_ptr_[static_cast<std::size_t>(m) + 1]; ++k) {
                const double* src = data_.data() + static_cast<std::size_t>(k) * bs * bs;
                double* dst = t.block(col_[static_cast<std::size_t>(k)], m);
                for (std::size_t i = 0; i < bs; ++i)
                    for (std::size_t j = 0; j < bs; ++j) dst[j * bs + i] = src[i * bs + j];
            }
        return t;
    }

    /// Union-sparsity sum of scaled matrices; terms accumulate in list order.
    static BlockMatrix sum(const std::vector<std::pair<double, const BlockMatrix*>>& terms) {
        if (terms.empty()) throw std::invalid_argument("BlockMatrix::sum: no terms");
        const int nt = terms.front().second->nt_, np = terms.front().second->np_;
        std::vector<std::pair<int, int>> pairs;
        for (const auto& [a, M] : terms) {
            if (M->nt_ != nt || M->np_ != np) throw std::invalid_argument("BlockMatrix::sum: shape mismatch");
            for (int m = 0; m < nt; ++m)
                for (int k = M->row_ptr_[static_cast<std::size_t>(m)]; k < M->row_ptr_[static_cast<std::size_t>(m) + 1]; ++k)
                    pairs.emplace_back(m, M->col_[static_cast<std::size_t>(k)]);
        }
        BlockMatrix out(nt, np, std::move(pairs));
        const std::size_t bs2 = static_cast<std::size_t>(np) * static_cast<std::size_t>(np);
        for (const auto& [a, M] : terms)
            for (int m = 0; m < nt; ++m)
                for (int k = M->row_ptr_[static_cast<std::size_t>(m)]; k < M->row_ptr_[static_cast<std::size_t>(m) + 1]; ++k) {
                    double* dst = out.block(m, M->col_[static_cast<std::size_t>(k)]);
                    const double* src = M->data_.data() + static_cast<std::size_t>(k) * bs2;
                    for (std::size_t i = 0; i < bs2; ++i) dst[i] += a * src[i];
                }
        return out;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    /// max_ij |A - A^T| over the stored pattern (entries missing on one side
    /// count with their absolute value).
    double symmetry_error() const {
        const BlockMatrix t = transpose();
        double err = 0.0;
        const std::size_t bs2 = static_cast<std::size_t>(np_) * static_cast<std::size_t>(np_);
        for (int m = 0; m < nt_; ++m)
            for (int k = row_ptr_[static_cast<std::size_t>(m)]; k < row_ptr_[static_cast<std::size_t>(m) + 1]; ++k) {
                const double* a = data_.data() + static_cast<std::size_t>(k) * bs2;
                const double* b = t.find_block(m, col_[static_cast<std::size_t>(k)]);
                for (std::size_t i = 0; i < bs2; ++i) err = std::max(err, std::abs(a[i] - (b ? b[i] : 0.0)));
            }
        return err;
    }

    template <class Dense>
    void to_dense(Dense& D) const {
        D.setZero(rows(), rows());
        const std::size_t bs = static_cast<std::size_t>(np_);
        for (int m = 0; m < nt_; ++m)
            for (int k = row_ptr_[static_cast<std::size_t>(m)]; k < row_ptr_[static_cast<std::size_t>(m) + 1]; ++k) {
                const int n = col_[static_cast<std::size_t>(k)];
                const double* B = data_.data() + static_cast<std::size_t>(k) * bs * bs;
                for (std::size_t i = 0; i < bs; ++i)
                    for (std::size_t j = 0; j < bs; ++j)
                        D(m * np_ + static_cast<int>(i), n * np_ + static_cast<int>(j)) = B[i * bs + j];
            }
    }

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col() const { return col_; }

private:
    int block_index(int m, int n) const {
        if (m < 0 || m >= nt_) return -1;
        const auto begin = col_.begin() + row_ptr_[static_cast<std::size_t>(m)];
        const auto end = col_.begin() + row_ptr_[static_cast<std::size_t>(m) + 1];
        const auto it = std::lower_bound(begin, end, n);
        if (it == end || *it != n) return -1;
        return static_cast<int>(it - col_.begin());
    }

    int nt_ = 0;
    int np_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> col_;
    std::vector<double> data_;
};

} // namespace snowdg::la

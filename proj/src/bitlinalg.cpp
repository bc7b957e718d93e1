#include "bigcn/bitlinalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <cblas.h>
#include <fmt/format.h>

namespace bigcn {

namespace {

std::uint64_t tail_mask(std::size_t cols) noexcept {
    const std::size_t rem = cols % BitMatrix::kWordBits;
    return rem == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
}

void require(bool ok, const char* what) {
    if (!ok) throw DimensionError(what);
}

}  // namespace

// ---------------------------------------------------------------- DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols)
        throw DimensionError(fmt::format("DenseMatrix: {} values for {}x{}", values_.size(), rows, cols));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    std::vector<double> v;
    v.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("DenseMatrix::from_rows: ragged rows");
        v.insert(v.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(v));
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool DenseMatrix::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

// ------------------------------------------------------------------ CsrMatrix

void CsrMatrix::validate() const {
    require(row_offsets.size() == rows + 1, "CSR: row_offsets must have rows+1 entries");
    require(row_offsets.front() == 0, "CSR: row_offsets must start at 0");
    require(row_offsets.back() == col_indices.size(), "CSR: last offset must equal nnz");
    require(col_indices.size() == values.size(), "CSR: col_indices/values length mismatch");
    for (std::size_t r = 0; r < rows; ++r) {
        require(row_offsets[r] <= row_offsets[r + 1], "CSR: row_offsets must be non-decreasing");
        for (std::size_t p = row_offsets[r]; p < row_offsets[r + 1]; ++p) {
            require(col_indices[p] < cols, "CSR: column index out of bounds");
            if (p > row_offsets[r])
                require(col_indices[p - 1] < col_indices[p], "CSR: column indices must strictly increase");
        }
    }
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    CsrMatrix m;
    m.rows = m.cols = n;
    m.row_offsets.resize(n + 1);
    m.col_indices.resize(n);
    m.values.assign(n, 1.0);
    for (std::size_t i = 0; i <= n; ++i) m.row_offsets[i] = i;
    for (std::size_t i = 0; i < n; ++i) m.col_indices[i] = i;
    return m;
}

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& d) {
    CsrMatrix m;
    m.rows = d.rows();
    m.cols = d.cols();
    m.row_offsets.reserve(m.rows + 1);
    m.row_offsets.push_back(0);
    for (std::size_t i = 0; i < d.rows(); ++i) {
        for (std::size_t j = 0; j < d.cols(); ++j) {
            if (d(i, j) != 0.0) {
                m.col_indices.push_back(j);
                m.values.push_back(d(i, j));
            }
        }
        m.row_offsets.push_back(m.col_indices.size());
    }
    return m;
}

DenseMatrix CsrMatrix::to_dense() const {
    DenseMatrix d(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t p = row_offsets[r]; p < row_offsets[r + 1]; ++p) d(r, col_indices[p]) = values[p];
    return d;
}

// ------------------------------------------------------------------ BitMatrix

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), words_per_row_(words_for(cols)), words_(rows * words_for(cols), 0) {}

BitMatrix BitMatrix::from_words_unchecked(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> words) {
    if (words.size() != rows * words_for(cols))
        throw DimensionError(fmt::format("BitMatrix: {} words for {}x{}", words.size(), rows, cols));
    BitMatrix b;
    b.rows_ = rows;
    b.cols_ = cols;
    b.words_per_row_ = words_for(cols);
    b.words_ = std::move(words);
    return b;
}

BitMatrix BitMatrix::from_words(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> words) {
    BitMatrix b = from_words_unchecked(rows, cols, std::move(words));
    if (!b.pads_clear()) throw DimensionError("BitMatrix: pad bits must be zero");
    return b;
}

bool BitMatrix::pads_clear() const noexcept {
    if (words_per_row_ == 0) return true;
    const std::uint64_t mask = tail_mask(cols_);
    for (std::size_t r = 0; r < rows_; ++r)
        if (words_[r * words_per_row_ + words_per_row_ - 1] & ~mask) return false;
    return true;
}

namespace {

// Sign bits of `count` values starting at `v`, spaced `stride` apart.
std::uint64_t sign_word(const double* v, std::size_t count, std::size_t stride) noexcept {
    std::uint64_t word = 0;
    for (std::size_t b = 0; b < count; ++b) word |= static_cast<std::uint64_t>(v[b * stride] >= 0.0) << b;
    return word;
}

BitMatrix pack_strided(const DenseMatrix& m, bool by_column) {
    const std::size_t rows = by_column ? m.cols() : m.rows();
    const std::size_t cols = by_column ? m.rows() : m.cols();
    const std::size_t stride = by_column ? m.cols() : 1;
    const std::size_t per_row = BitMatrix::words_for(cols);
    std::vector<std::uint64_t> words(rows * per_row, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* base = by_column ? m.values().data() + r : m.row(r).data();
        for (std::size_t w = 0; w < per_row; ++w) {
            const std::size_t first = w * BitMatrix::kWordBits;
            const std::size_t count = std::min(BitMatrix::kWordBits, cols - first);
            words[r * per_row + w] = sign_word(base + first * stride, count, stride);
        }
    }
    return BitMatrix::from_words_unchecked(rows, cols, std::move(words));
}

}  // namespace

BitMatrix pack_signs(const DenseMatrix& m) {
    if (m.empty()) throw DimensionError("pack_signs: empty matrix");
    return pack_strided(m, false);
}

BitMatrix pack_column_signs(const DenseMatrix& m) {
    if (m.empty()) throw DimensionError("pack_column_signs: empty matrix");
    return pack_strided(m, true);
}

DenseMatrix unpack(const BitMatrix& b) {
    DenseMatrix m(b.rows(), b.cols());
    for (std::size_t i = 0; i < b.rows(); ++i) {
        const auto words = b.row(i);
        double* out = m.row(i).data();
        for (std::size_t j = 0; j < b.cols(); ++j)
            out[j] = (words[j / BitMatrix::kWordBits] >> (j % BitMatrix::kWordBits)) & 1u ? 1.0 : -1.0;
    }
    return m;
}

// -------------------------------------------------------------------- kernels

std::int64_t xnor_dot(std::span<const std::uint64_t> u, std::span<const std::uint64_t> v, std::size_t n) {
    const std::size_t words = BitMatrix::words_for(n);
    if (u.size() != words || v.size() != words)
        throw DimensionError(fmt::format("xnor_dot: operands of {} and {} words for n={}", u.size(), v.size(), n));
    if (words == 0) return 0;
    std::int64_t matches = 0;
    for (std::size_t w = 0; w + 1 < words; ++w) matches += std::popcount(~(u[w] ^ v[w]));
    matches += std::popcount(~(u[words - 1] ^ v[words - 1]) & tail_mask(n));
    return 2 * matches - static_cast<std::int64_t>(n);
}

DenseMatrix binary_matmul(const BitMatrix& features, std::span<const double> beta,
                          const BitMatrix& weight_columns, std::span<const double> alpha) {
    if (features.cols() != weight_columns.cols())
        throw DimensionError(fmt::format("binary_matmul: inner dims {} vs {}", features.cols(), weight_columns.cols()));
    if (beta.size() != features.rows() || alpha.size() != weight_columns.rows())
        throw DimensionError("binary_matmul: scale vector length mismatch");
    const std::size_t n = features.rows();
    const std::size_t m = weight_columns.rows();
    const std::size_t d = features.cols();
    DenseMatrix out(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const auto fi = features.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            const auto dot = xnor_dot(fi, weight_columns.row(j), d);
            out(i, j) = (beta[i] * alpha[j]) * static_cast<double>(dot);
        }
    }
    return out;
}

namespace {

// out = op(a)·op(b), row-major, through BLAS.
DenseMatrix gemm(const DenseMatrix& a, bool trans_a, const DenseMatrix& b, bool trans_b) {
    const std::size_t n = trans_a ? a.cols() : a.rows();
    const std::size_t inner = trans_a ? a.rows() : a.cols();
    const std::size_t m = trans_b ? b.rows() : b.cols();
    DenseMatrix out(n, m);
    if (n == 0 || m == 0 || inner == 0) return out;
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
                static_cast<int>(n), static_cast<int>(m), static_cast<int>(inner), 1.0,
                a.values().data(), static_cast<int>(std::max<std::size_t>(a.cols(), 1)), b.values().data(),
                static_cast<int>(std::max<std::size_t>(b.cols(), 1)), 0.0, out.values().data(),
                static_cast<int>(m));
    return out;
}

}  // namespace

std::size_t kernel_workers() noexcept { return static_cast<std::size_t>(std::max(1, openblas_get_num_threads())); }

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError(fmt::format("dense_matmul: {}x{} times {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
    return gemm(a, false, b, false);
}

DenseMatrix dense_matmul_at(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError(fmt::format("dense_matmul_at: ({}x{})^T times {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
    return gemm(a, true, b, false);
}

DenseMatrix dense_matmul_bt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError(fmt::format("dense_matmul_bt: {}x{} times ({}x{})^T", a.rows(), a.cols(), b.rows(), b.cols()));
    return gemm(a, false, b, true);
}

DenseMatrix csr_dense_matmul(const CsrMatrix& adj, const DenseMatrix& x) {
    adj.validate();
    if (adj.cols != x.rows())
        throw DimensionError(fmt::format("csr_dense_matmul: {}x{} times {}x{}", adj.rows, adj.cols, x.rows(), x.cols()));
    DenseMatrix out(adj.rows, x.cols());
    for (std::size_t r = 0; r < adj.rows; ++r) {
        double* __restrict orow = out.row(r).data();
        for (std::size_t p = adj.row_offsets[r]; p < adj.row_offsets[r + 1]; ++p) {
            const double v = adj.values[p];
            const double* __restrict xrow = x.row(adj.col_indices[p]).data();
            for (std::size_t j = 0; j < x.cols(); ++j) orow[j] += v * xrow[j];
        }
    }
    return out;
}

DenseMatrix csr_transpose_dense_matmul(const CsrMatrix& adj, const DenseMatrix& g) {
    adj.validate();
    if (adj.rows != g.rows())
        throw DimensionError(fmt::format("csr_transpose_dense_matmul: ({}x{})^T times {}x{}", adj.rows, adj.cols,
                                         g.rows(), g.cols()));
    DenseMatrix out(adj.cols, g.cols());
    for (std::size_t r = 0; r < adj.rows; ++r) {
        const double* __restrict grow = g.row(r).data();
        for (std::size_t p = adj.row_offsets[r]; p < adj.row_offsets[r + 1]; ++p) {
            const double v = adj.values[p];
            double* __restrict orow = out.row(adj.col_indices[p]).data();
            for (std::size_t j = 0; j < g.cols(); ++j) orow[j] += v * grow[j];
        }
    }
    return out;
}

}  // namespace bigcn

#pragma once

// Dense, CSR and bit-packed ±1 matrices plus the kernels that multiply them.
//
// Bit encoding: bit 1 is +1, bit 0 is -1, 64 bits per word, row-major. Pad
// bits past `cols` in the last word of each row are kept at zero by every
// checked constructor; the kernels mask them anyway so an adversarial pad
// can never leak into a result.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bigcn {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static DenseMatrix identity(std::size_t n);
    /// Row-major nested initializer, for tests and small fixtures.
    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {values_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    DenseMatrix transposed() const;
    bool all_finite() const noexcept;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_offsets;  // rows + 1 entries
    std::vector<std::size_t> col_indices;
    std::vector<double> values;

    std::size_t nnz() const noexcept { return values.size(); }

    /// Throws DimensionError when offsets, bounds or per-row ordering are broken.
    void validate() const;

    static CsrMatrix identity(std::size_t n);
    static CsrMatrix from_dense(const DenseMatrix& m);
    DenseMatrix to_dense() const;
};

class BitMatrix {
public:
    static constexpr std::size_t kWordBits = 64;

    BitMatrix() = default;
    /// All entries -1 (every bit zero).
    BitMatrix(std::size_t rows, std::size_t cols);

    /// Takes ownership of packed words; rejects size mismatches and set pad bits.
    static BitMatrix from_words(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> words);
    /// Same, but pad bits are left as given. Kernel tests use this to plant garbage.
    static BitMatrix from_words_unchecked(std::size_t rows, std::size_t cols,
                                          std::vector<std::uint64_t> words);

    static std::size_t words_for(std::size_t cols) noexcept { return (cols + kWordBits - 1) / kWordBits; }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t words_per_row() const noexcept { return words_per_row_; }

    bool get(std::size_t r, std::size_t c) const noexcept {
        return (words_[r * words_per_row_ + c / kWordBits] >> (c % kWordBits)) & 1u;
    }
    void set(std::size_t r, std::size_t c, bool positive) noexcept {
        auto& w = words_[r * words_per_row_ + c / kWordBits];
        const std::uint64_t bit = std::uint64_t{1} << (c % kWordBits);
        w = positive ? (w | bit) : (w & ~bit);
    }
    /// ±1 value of an entry.
    int sign(std::size_t r, std::size_t c) const noexcept { return get(r, c) ? 1 : -1; }

    std::span<const std::uint64_t> row(std::size_t r) const noexcept {
        return {words_.data() + r * words_per_row_, words_per_row_};
    }
    std::span<const std::uint64_t> words() const noexcept { return words_; }

    /// True when every pad bit is zero.
    bool pads_clear() const noexcept;

    friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t words_per_row_ = 0;
    std::vector<std::uint64_t> words_;
};

/// bit(i,j) = 1 iff m(i,j) >= 0, so sign(0) = +1.
BitMatrix pack_signs(const DenseMatrix& m);
/// Packs the columns of `m`: row j of the result holds sign(m(:, j)).
BitMatrix pack_column_signs(const DenseMatrix& m);
/// ±1 entries as reals.
DenseMatrix unpack(const BitMatrix& b);

/// Σ u_k v_k over the first n entries with ±1 semantics: 2·popcount(XNOR) − n.
std::int64_t xnor_dot(std::span<const std::uint64_t> u, std::span<const std::uint64_t> v, std::size_t n);

/// out(i,j) = (beta_i · alpha_j) · xnor_dot(F_i, B_j, d).
///
/// `features` is N×d packed by row. `weight_columns` is m×d: row j is column j
/// of the d×m weight sign matrix, so both operands stream contiguously.
DenseMatrix binary_matmul(const BitMatrix& features, std::span<const double> beta,
                          const BitMatrix& weight_columns, std::span<const double> alpha);

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ·b without materializing the transpose.
DenseMatrix dense_matmul_at(const DenseMatrix& a, const DenseMatrix& b);
/// a·bᵀ without materializing the transpose.
DenseMatrix dense_matmul_bt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix csr_dense_matmul(const CsrMatrix& adj, const DenseMatrix& x);
/// adjᵀ·g.
DenseMatrix csr_transpose_dense_matmul(const CsrMatrix& adj, const DenseMatrix& g);

/// Threads used by the dense kernels. Results are bitwise reproducible for a
/// fixed count.
std::size_t kernel_workers() noexcept;

}  // namespace bigcn

#pragma once

#include <vector>

#include "bigcn/bitlinalg.hpp"

namespace bigcn {

enum class BucketAxis { column, row };

/// A sign matrix with one nonnegative scale per bucket.
///
/// `bits` always holds one bucket per row: for column buckets it is the
/// transpose of the source (d_out × d_in), for row buckets it has the
/// source's shape. `scales[k]` is the mean absolute value of bucket k.
struct ScaledBinary {
    BitMatrix bits;
    std::vector<double> scales;
    BucketAxis bucket_axis = BucketAxis::row;

    std::size_t bucket_count() const noexcept { return bits.rows(); }
    std::size_t bucket_length() const noexcept { return bits.cols(); }
    /// Shape of the matrix this approximates.
    std::size_t source_rows() const noexcept { return bucket_axis == BucketAxis::row ? bits.rows() : bits.cols(); }
    std::size_t source_cols() const noexcept { return bucket_axis == BucketAxis::row ? bits.cols() : bits.rows(); }
};

/// Per column j of w (d_in × d_out): B_j = sign(w(:,j)), alpha_j = ‖w(:,j)‖₁ / d_in.
ScaledBinary binarize_weight_columns(const DenseMatrix& w);
/// Per row i of h (N × d_in): F_i = sign(h(i,:)), beta_i = ‖h(i,:)‖₁ / d_in.
ScaledBinary binarize_feature_rows(const DenseMatrix& h);

/// scale_bucket · (±1) in the source orientation.
DenseMatrix dequantize(const ScaledBinary& sb);

/// ‖src − dequantize(sb)‖_F.
double quant_error(const DenseMatrix& src, const ScaledBinary& sb);

}  // namespace bigcn

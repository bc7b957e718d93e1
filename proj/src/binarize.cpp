#include "bigcn/binarize.hpp"

#include <cmath>

namespace bigcn {

ScaledBinary binarize_weight_columns(const DenseMatrix& w) {
    if (w.empty()) throw DimensionError("binarize_weight_columns: empty matrix");
    ScaledBinary sb{pack_column_signs(w), std::vector<double>(w.cols(), 0.0), BucketAxis::column};
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) sb.scales[j] += std::abs(w(i, j));
    const double n = static_cast<double>(w.rows());
    for (auto& s : sb.scales) s /= n;
    return sb;
}

ScaledBinary binarize_feature_rows(const DenseMatrix& h) {
    if (h.empty()) throw DimensionError("binarize_feature_rows: empty matrix");
    ScaledBinary sb{pack_signs(h), std::vector<double>(h.rows(), 0.0), BucketAxis::row};
    const double n = static_cast<double>(h.cols());
    for (std::size_t i = 0; i < h.rows(); ++i) {
        double acc = 0.0;
        for (double v : h.row(i)) acc += std::abs(v);
        sb.scales[i] = acc / n;
    }
    return sb;
}

DenseMatrix dequantize(const ScaledBinary& sb) {
    DenseMatrix out = unpack(sb.bits);
    for (std::size_t k = 0; k < sb.bucket_count(); ++k) {
        const double s = sb.scales[k];
        for (auto& v : out.row(k)) v *= s;
    }
    return sb.bucket_axis == BucketAxis::row ? out : out.transposed();
}

double quant_error(const DenseMatrix& src, const ScaledBinary& sb) {
    if (src.rows() != sb.source_rows() || src.cols() != sb.source_cols())
        throw DimensionError("quant_error: source and binarization shapes differ");
    const DenseMatrix approx = dequantize(sb);
    double acc = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double d = src.values()[i] - approx.values()[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace bigcn

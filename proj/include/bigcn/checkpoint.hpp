#pragma once

// On-disk model formats, little-endian throughout.
//
// Packed model (inference):
//   "BGCN" | u16 version | u32 layer count
//   per layer: u32 d_in | u32 d_out | f32 alpha[d_out]
//              | sign bits, bucket-major (column j of W is bits j·d_in .. j·d_in+d_in-1),
//                LSB-first, zero-padded to a whole byte at the end of the layer
//   u32 d | f64 mean[d] | f64 inv_std[d]
//
// Full-precision checkpoint (training output, input to `pack`):
//   "BGCF" | u16 version | u8 mode | u32 layer count | u32 dims[count+1]
//   | f64 weights, row-major per layer | u32 d | f64 mean[d] | f64 inv_std[d]

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bigcn/graph.hpp"
#include "bigcn/trainer.hpp"

namespace bigcn {

struct PackedLayer {
    std::vector<float> alpha;
    BitMatrix weight_columns;  // d_out × d_in

    std::size_t d_in() const noexcept { return weight_columns.cols(); }
    std::size_t d_out() const noexcept { return weight_columns.rows(); }
};

struct PackedModel {
    static constexpr std::uint16_t kVersion = 1;

    std::vector<PackedLayer> layers;
    Standardizer standardizer;

    /// α and sign bits only; the quantity the binary model-size accounting counts.
    std::size_t parameter_payload_bytes() const noexcept;
    /// Magic, version, layer count and per-layer dims.
    std::size_t header_bytes() const noexcept;
    std::vector<std::size_t> layer_dims() const;
};

PackedModel pack_model(const std::vector<LayerParams>& params, const Standardizer& standardizer);

std::vector<std::uint8_t> serialize(const PackedModel& model);
/// Throws ParseError on bad magic, version, truncation or trailing bytes.
PackedModel parse_packed_model(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize(const TrainedModel& model);
TrainedModel parse_trained_model(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Packed XNOR inference: per layer binarize input rows, binary_matmul
/// against the stored signs, aggregate with Ã. Returns the final logits.
DenseMatrix infer_binary_logits(const DenseMatrix& raw_features, const CsrMatrix& adj, const PackedModel& model);
std::vector<int> infer_binary(const AttributedGraph& graph, const PackedModel& model);

}  // namespace bigcn

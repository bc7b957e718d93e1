#pragma once

// Closed-form memory and cycle-operation accounting for a GCN versus its
// binarized counterpart.
//
// Conventions: full-precision values are 32-bit; every binarization scalar is
// one 32-bit real; one cycle operation is a multiply-add and buys 64 binary
// operations; aggregation costs |E|·d_out per layer with |E| the dataset's
// listed edge count (no doubling, no self-loops).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bigcn::cost {

enum class Variant { full, binary };

struct GraphStats {
    std::uint64_t nodes = 0;
    std::uint64_t features = 0;
    std::uint64_t edges = 0;

    double mean_degree() const noexcept {
        return nodes == 0 ? 0.0 : 2.0 * static_cast<double>(edges) / static_cast<double>(nodes);
    }
};

inline constexpr GraphStats kCora{2708, 1433, 5429};
inline constexpr GraphStats kPubMed{19711, 500, 44338};

/// full: 32·Σ d_in·d_out. binary: Σ (d_in·d_out + 32·d_out).
std::uint64_t model_size_bits(std::span<const std::size_t> layer_dims, Variant v);
/// full: 32·N·d. binary: N·d + 32·N.
std::uint64_t data_size_bits(std::uint64_t nodes, std::uint64_t features, Variant v);
/// full: Σ N·d_in·d_out + |E|·d_out. binary: Σ N·d_in·d_out/64 + 2·N·d_out + |E|·d_out.
double cycle_ops(std::span<const std::size_t> layer_dims, std::uint64_t nodes, std::uint64_t edges, Variant v);

struct LayerRatios {
    double params_compression = 0.0;  // 32·d_in / (d_in + 32)
    double feature_speedup = 0.0;     // 64·d_in / (d_in + 128)
    double layer_speedup = 0.0;       // (64·d_in + 32·deg) / (d_in + 128 + 32·deg)
};

struct Ratios {
    std::vector<LayerRatios> layers;
    double data_compression = 0.0;  // 32·d / (d + 32), d = layer_dims.front()
    /// Whole-network cycle ratio expressed through the mean degree.
    double combined_speedup = 0.0;
};

Ratios ratios(std::span<const std::size_t> layer_dims, double mean_degree);

struct CostReport {
    GraphStats graph;
    std::vector<std::size_t> layer_dims;
    std::uint64_t model_bits_full = 0;
    std::uint64_t model_bits_binary = 0;
    std::uint64_t data_bits_full = 0;
    std::uint64_t data_bits_binary = 0;
    double cycle_ops_full = 0.0;
    double cycle_ops_binary = 0.0;
    Ratios ratios;
};

CostReport analyze(std::span<const std::size_t> layer_dims, const GraphStats& graph);

/// Bits as "360K", "11.53K", "14.8M", "0.47M" (1024-based).
std::string format_size(std::uint64_t bits);
/// Three significant digits in e-notation, "2.50e8".
std::string format_ops(double ops);

/// Human-readable Table-2 style rows for the four binarization variants.
std::string format_table(const CostReport& report);
/// Same rows as CSV with a header line.
std::string format_csv(const CostReport& report);

}  // namespace bigcn::cost

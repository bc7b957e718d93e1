#include "bigcn/costmodel.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace bigcn::cost {

namespace {

void require_dims(std::span<const std::size_t> dims) {
    if (dims.size() < 2) throw std::invalid_argument("cost model needs at least one layer");
}

std::string trim_decimals(std::string s) {
    if (s.find('.') == std::string::npos) return s;
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
}

std::string kib(std::uint64_t bits) { return trim_decimals(fmt::format("{:.2f}", static_cast<double>(bits) / 8.0 / 1024.0)) + "K"; }
std::string mib(std::uint64_t bits) {
    return trim_decimals(fmt::format("{:.2f}", static_cast<double>(bits) / 8.0 / 1024.0 / 1024.0)) + "M";
}

struct Row {
    const char* name;
    Variant model;
    Variant data;
    Variant ops;
};

constexpr Row kRows[] = {
    {"GCN", Variant::full, Variant::full, Variant::full},
    {"Bi-GCN (binarize features only)", Variant::full, Variant::binary, Variant::full},
    {"Bi-GCN (binarize weights only)", Variant::binary, Variant::full, Variant::full},
    {"Bi-GCN", Variant::binary, Variant::binary, Variant::binary},
};

}  // namespace

std::uint64_t model_size_bits(std::span<const std::size_t> dims, Variant v) {
    require_dims(dims);
    std::uint64_t bits = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::uint64_t d_in = dims[l], d_out = dims[l + 1];
        bits += v == Variant::full ? 32 * d_in * d_out : d_in * d_out + 32 * d_out;
    }
    return bits;
}

std::uint64_t data_size_bits(std::uint64_t nodes, std::uint64_t features, Variant v) {
    return v == Variant::full ? 32 * nodes * features : nodes * features + 32 * nodes;
}

double cycle_ops(std::span<const std::size_t> dims, std::uint64_t nodes, std::uint64_t edges, Variant v) {
    require_dims(dims);
    double ops = 0.0;
    const double n = static_cast<double>(nodes), e = static_cast<double>(edges);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double d_in = static_cast<double>(dims[l]), d_out = static_cast<double>(dims[l + 1]);
        const double extraction = n * d_in * d_out;
        ops += v == Variant::full ? extraction + e * d_out : extraction / 64.0 + 2.0 * n * d_out + e * d_out;
    }
    return ops;
}

Ratios ratios(std::span<const std::size_t> dims, double mean_degree) {
    require_dims(dims);
    Ratios r;
    double full = 0.0, binary = 0.0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double d_in = static_cast<double>(dims[l]), d_out = static_cast<double>(dims[l + 1]);
        r.layers.push_back({32.0 * d_in / (d_in + 32.0), 64.0 * d_in / (d_in + 128.0),
                            (64.0 * d_in + 32.0 * mean_degree) / (d_in + 128.0 + 32.0 * mean_degree)});
        full += d_out * (d_in + mean_degree / 2.0);
        binary += d_out * (d_in / 64.0 + 2.0 + mean_degree / 2.0);
    }
    const double d = static_cast<double>(dims.front());
    r.data_compression = 32.0 * d / (d + 32.0);
    r.combined_speedup = full / binary;
    return r;
}

CostReport analyze(std::span<const std::size_t> dims, const GraphStats& graph) {
    CostReport rep;
    rep.graph = graph;
    rep.layer_dims.assign(dims.begin(), dims.end());
    rep.model_bits_full = model_size_bits(dims, Variant::full);
    rep.model_bits_binary = model_size_bits(dims, Variant::binary);
    rep.data_bits_full = data_size_bits(graph.nodes, graph.features, Variant::full);
    rep.data_bits_binary = data_size_bits(graph.nodes, graph.features, Variant::binary);
    rep.cycle_ops_full = cycle_ops(dims, graph.nodes, graph.edges, Variant::full);
    rep.cycle_ops_binary = cycle_ops(dims, graph.nodes, graph.edges, Variant::binary);
    rep.ratios = ratios(dims, graph.mean_degree());
    return rep;
}

std::string format_size(std::uint64_t bits) {
    return static_cast<double>(bits) / 8.0 >= 1024.0 * 1024.0 ? mib(bits) : kib(bits);
}

std::string format_ops(double ops) {
    if (ops <= 0.0) return "0";
    int exponent = static_cast<int>(std::floor(std::log10(ops)));
    double mantissa = ops / std::pow(10.0, exponent);
    if (std::round(mantissa * 100.0) >= 1000.0) {
        mantissa /= 10.0;
        ++exponent;
    }
    return fmt::format("{:.2f}e{}", mantissa, exponent);
}

std::string format_table(const CostReport& rep) {
    std::string out = fmt::format("graph: N={} d={} |E|={} mean degree={:.3f}; layers:", rep.graph.nodes,
                                  rep.graph.features, rep.graph.edges, rep.graph.mean_degree());
    for (auto d : rep.layer_dims) out += fmt::format(" {}", d);
    out += "\n\n";
    out += fmt::format("{:<34}{:>10}{:>10}{:>10}{:>10}\n", "Method", "Accuracy", "M.S.", "D.S.", "C.O.");
    for (const auto& row : kRows) {
        const auto ms = row.model == Variant::full ? rep.model_bits_full : rep.model_bits_binary;
        const auto ds = row.data == Variant::full ? rep.data_bits_full : rep.data_bits_binary;
        const auto co = row.ops == Variant::full ? rep.cycle_ops_full : rep.cycle_ops_binary;
        out += fmt::format("{:<34}{:>10}{:>10}{:>10}{:>10}\n", row.name, "-", kib(ms), mib(ds), format_ops(co));
    }
    out += "\nper-layer ratios:\n";
    for (std::size_t l = 0; l < rep.ratios.layers.size(); ++l) {
        const auto& r = rep.ratios.layers[l];
        out += fmt::format("  layer {} (d_in={:>5}): params {:6.2f}x  feature extraction {:6.2f}x  layer {:6.2f}x\n",
                           l + 1, rep.layer_dims[l], r.params_compression, r.feature_speedup, r.layer_speedup);
    }
    out += fmt::format("data compression {:.2f}x; combined speedup {:.2f}x (raw cycle quotient {:.2f}x)\n",
                       rep.ratios.data_compression, rep.ratios.combined_speedup,
                       rep.cycle_ops_full / rep.cycle_ops_binary);
    return out;
}

std::string format_csv(const CostReport& rep) {
    std::string out = "method,accuracy,model_bits,model_size,data_bits,data_size,cycle_ops,cycle_ops_short\n";
    for (const auto& row : kRows) {
        const auto ms = row.model == Variant::full ? rep.model_bits_full : rep.model_bits_binary;
        const auto ds = row.data == Variant::full ? rep.data_bits_full : rep.data_bits_binary;
        const auto co = row.ops == Variant::full ? rep.cycle_ops_full : rep.cycle_ops_binary;
        out += fmt::format("\"{}\",,{},{},{},{},{},{}\n", row.name, ms, kib(ms), ds, mib(ds), co, format_ops(co));
    }
    return out;
}

}  // namespace bigcn::cost

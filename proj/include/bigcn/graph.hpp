#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bigcn/bitlinalg.hpp"

namespace bigcn {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Edge = std::pair<std::size_t, std::size_t>;

struct LoadStats {
    std::size_t raw_edge_lines = 0;
    std::size_t dropped_unknown = 0;
    std::size_t dropped_self_loops = 0;
    std::size_t dropped_duplicates = 0;
};

struct AttributedGraph {
    DenseMatrix features;                 // N × d
    std::vector<int> labels;              // in [0, class_names.size())
    std::vector<std::string> class_names; // index order = first appearance
    std::vector<Edge> edges;              // undirected, first < second, no duplicates
    std::vector<std::string> node_ids;
    LoadStats load_stats;

    std::size_t n_nodes() const noexcept { return features.rows(); }
    std::size_t n_features() const noexcept { return features.cols(); }
    std::size_t n_classes() const noexcept { return class_names.size(); }

    /// Throws DimensionError on label range, self-loop or duplicate-edge violations.
    void validate() const;
};

struct SplitMasks {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;

    void validate(std::size_t n_nodes) const;
};

AttributedGraph load_content_cites(const std::filesystem::path& content_path,
                                   const std::filesystem::path& cites_path);
void write_content_cites(const AttributedGraph& g, const std::filesystem::path& content_path,
                         const std::filesystem::path& cites_path);

/// Ã = D̂^{-1/2}(A + I)D̂^{-1/2} as a symmetric CSR matrix.
CsrMatrix normalize_adjacency(const AttributedGraph& g);

struct SplitSizes {
    std::size_t train_per_class = 20;
    std::size_t val = 500;
    std::size_t test = 1000;
};

/// Per class the lowest-index nodes go to train; then val and test take the
/// next unused nodes in index order.
SplitMasks planetoid_split(const AttributedGraph& g, SplitSizes sizes = {});

/// `{"train":[...],"val":[...],"test":[...]}`.
SplitMasks load_split_json(const std::filesystem::path& path, std::size_t n_nodes);

/// Fixed affine map (x − mean) · inv_std fitted on training nodes.
struct Standardizer {
    static constexpr double kEpsilon = 1e-5;

    std::vector<double> mean;
    std::vector<double> inv_std;

    static Standardizer fit(const DenseMatrix& x, const std::vector<std::size_t>& rows);
    DenseMatrix apply(const DenseMatrix& x) const;
};

DenseMatrix standardize_features(const AttributedGraph& g, const SplitMasks& masks);

struct SynthSpec {
    std::size_t n_per_class = 50;
    std::size_t classes = 3;
    std::size_t features = 16;
    double intra_p = 0.1;
    double inter_p = 0.01;
    /// Distance between class centroids, in units of the per-feature noise.
    double separation = 1.0;
    std::uint64_t seed = 0;
};

/// Stochastic-block-model graph; node i belongs to class i % classes.
AttributedGraph synth_graph(const SynthSpec& spec);

}  // namespace bigcn

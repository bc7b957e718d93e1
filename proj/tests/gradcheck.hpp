#pragma once

// Gradient checks shared by the unit tests and the acceptance run.

#include <algorithm>
#include <random>

#include "bigcn/graph.hpp"
#include "bigcn/model.hpp"
#include "oracles.hpp"

namespace gradcheck {

using namespace bigcn;

struct Case {
    AttributedGraph graph;
    CsrMatrix adj;
    DenseMatrix adj_dense;
    DenseMatrix x;
    std::vector<std::size_t> mask;
    BiGcnConfig config;
    std::vector<LayerParams> params;
};

/// Random graph with at most 30 nodes and 20 features, random weights, no dropout.
inline Case make_case(std::uint64_t seed, Mode mode, std::size_t layers = 2) {
    std::mt19937_64 rng(seed);
    Case c;
    SynthSpec spec;
    spec.classes = 2 + rng() % 3;
    spec.n_per_class = 3 + rng() % (30 / spec.classes - 2);
    spec.features = 2 + rng() % 19;
    spec.intra_p = 0.3;
    spec.inter_p = 0.05;
    spec.seed = rng();
    c.graph = synth_graph(spec);
    c.adj = normalize_adjacency(c.graph);
    c.adj_dense = c.adj.to_dense();
    c.x = oracle::random_matrix(c.graph.n_nodes(), c.graph.n_features(), rng);
    for (std::size_t i = 0; i < c.graph.n_nodes(); ++i)
        if (rng() % 3 != 0) c.mask.push_back(i);
    if (c.mask.empty()) c.mask.push_back(0);

    c.config.layer_dims = {c.graph.n_features()};
    for (std::size_t l = 1; l < layers; ++l) c.config.layer_dims.push_back(2 + rng() % 7);
    c.config.layer_dims.push_back(c.graph.n_classes());
    c.config.mode = mode;
    c.config.dropout_rate = 0.0;
    c.config.seed = seed;
    c.params = init_params(c.config, rng);
    // Spread weights past ±1 so the straight-through indicator is exercised.
    std::uniform_real_distribution<double> widen(0.5, 2.5);
    for (auto& p : c.params)
        for (auto& w : p.weight.values()) w *= widen(rng);
    return c;
}

struct Run {
    ForwardResult fwd;
    Gradients grads;
};

inline Run run(const Case& c) {
    Run r;
    ForwardOptions fo;
    fo.training = true;
    r.fwd = forward(c.x, c.adj, c.params, c.config, fo);
    BackwardOptions bo;
    bo.first_layer_input_grad = true;
    r.grads = backward(r.fwd, c.adj, c.graph.labels, c.mask, c.params, c.config, bo);
    return r;
}

/// Full precision: finite differences of the loss against ∂L/∂W, every layer.
inline double full_mode_error(Case c) {
    const Run r = run(c);
    double worst = 0.0;
    for (std::size_t l = 0; l < c.params.size(); ++l) {
        auto f = [&] {
            return oracle::cross_entropy(forward(c.x, c.adj, c.params, c.config).logits, c.graph.labels, c.mask);
        };
        const auto numeric = oracle::finite_difference(c.params[l].weight, f);
        worst = std::max(worst, oracle::max_relative_error(numeric, r.grads.weights[l]));
    }
    return worst;
}

/// Binarized modes with the binarization held fixed. For the last layer the
/// loss is a smooth function of (H̃, W̃), so ∂L/∂W̃ and ∂L/∂H̃ are checked
/// against finite differences of the true loss. For inner layers the
/// reported upstream gradient G is taken as given and the layer is checked
/// against the surrogate Σ G ⊙ (Ã·H̃·W̃).
inline double frozen_binarization_error(const Case& c) {
    const Run r = run(c);
    const auto& layers = r.fwd.cache->layers;
    const std::size_t last = layers.size() - 1;
    double worst = 0.0;

    DenseMatrix h = *layers[last].staged_input;
    DenseMatrix w = layers[last].effective_weight;
    auto loss = [&] {
        return oracle::cross_entropy(oracle::matmul(c.adj_dense, oracle::matmul(h, w)), c.graph.labels, c.mask);
    };
    worst = std::max(worst, oracle::max_relative_error(oracle::finite_difference(w, loss),
                                                       r.grads.effective_weights[last]));
    worst = std::max(worst, oracle::max_relative_error(oracle::finite_difference(h, loss),
                                                       r.grads.effective_inputs[last]));

    for (std::size_t l = last; l-- > 0;) {
        const DenseMatrix& next_grad = r.grads.effective_inputs[l + 1];
        const DenseMatrix g = binarizes_features(c.config.mode)
                                  ? feature_grad_gate(next_grad, *layers[l + 1].input, c.config.ste_variant)
                                  : next_grad;
        DenseMatrix hl = *layers[l].staged_input;
        DenseMatrix wl = layers[l].effective_weight;
        auto surrogate = [&] {
            const auto out = oracle::matmul(c.adj_dense, oracle::matmul(hl, wl));
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) s += g.values()[i] * out.values()[i];
            return s;
        };
        worst = std::max(worst, oracle::max_relative_error(oracle::finite_difference(wl, surrogate),
                                                           r.grads.effective_weights[l]));
        worst = std::max(worst, oracle::max_relative_error(oracle::finite_difference(hl, surrogate),
                                                           r.grads.effective_inputs[l]));
    }
    return worst;
}

/// The weight transform through binarization and the feature gate, each
/// compared bit-for-bit with a scalar-loop oracle.
inline bool transforms_exact(const Case& c) {
    const Run r = run(c);
    const auto& layers = r.fwd.cache->layers;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (binarizes_weights(c.config.mode) &&
            !(r.grads.weights[l] == oracle::weight_grad_oracle(c.params[l].weight, r.grads.effective_weights[l])))
            return false;
        const DenseMatrix& ge = r.grads.effective_inputs[l];
        DenseMatrix expected = ge;
        for (std::size_t i = 0; i < ge.rows(); ++i)
            for (std::size_t j = 0; j < ge.cols(); ++j) {
                const double gate_on =
                    c.config.ste_variant == SteVariant::grad_magnitude ? ge(i, j) : (*layers[l].input)(i, j);
                expected(i, j) = std::abs(gate_on) < 1.0 ? ge(i, j) : 0.0;
            }
        if (!(feature_grad_gate(ge, *layers[l].input, c.config.ste_variant) == expected)) return false;
    }
    return true;
}

}  // namespace gradcheck

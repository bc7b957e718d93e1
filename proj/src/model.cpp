#include "bigcn/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace bigcn {

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

DenseMatrix relu(const DenseMatrix& m) {
    DenseMatrix out = m;
    for (auto& v : out.values()) v = std::max(v, 0.0);
    return out;
}

void check_finite(const DenseMatrix& m, std::size_t layer, const char* what) {
    if (!m.all_finite()) throw DivergenceError(fmt::format("non-finite {} in layer {}", what, layer));
}

}  // namespace

std::string_view to_string(Mode m) noexcept {
    switch (m) {
        case Mode::full: return "full";
        case Mode::bin_weights: return "bin_weights";
        case Mode::bin_features: return "bin_features";
        case Mode::bin_both: return "bin_both";
    }
    return "?";
}

std::string_view to_string(SteVariant v) noexcept {
    return v == SteVariant::grad_magnitude ? "grad_magnitude" : "input_magnitude";
}

Mode parse_mode(std::string_view s) {
    for (Mode m : {Mode::full, Mode::bin_weights, Mode::bin_features, Mode::bin_both})
        if (to_string(m) == s) return m;
    throw std::invalid_argument(fmt::format("unknown mode '{}'", s));
}

SteVariant parse_ste_variant(std::string_view s) {
    for (SteVariant v : {SteVariant::grad_magnitude, SteVariant::input_magnitude})
        if (to_string(v) == s) return v;
    throw std::invalid_argument(fmt::format("unknown ste variant '{}'", s));
}

void BiGcnConfig::validate() const {
    if (layer_dims.size() < 2) throw std::invalid_argument("layer_dims needs at least two entries");
    for (auto d : layer_dims)
        if (d == 0) throw std::invalid_argument("layer_dims entries must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout_rate must be in [0,1)");
    if (!(learning_rate >= 0.0 && learning_rate < 1.0)) throw std::invalid_argument("learning_rate must be in [0,1)");
    if (max_epochs == 0 || patience == 0) throw std::invalid_argument("max_epochs and patience must be positive");
}

std::vector<LayerParams> init_params(const BiGcnConfig& config, std::mt19937_64& rng) {
    config.validate();
    std::vector<LayerParams> params;
    for (std::size_t l = 0; l < config.layer_count(); ++l) {
        const std::size_t d_in = config.layer_dims[l], d_out = config.layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
        LayerParams p{DenseMatrix(d_in, d_out), DenseMatrix(d_in, d_out), DenseMatrix(d_in, d_out)};
        for (auto& w : p.weight.values()) w = bound * (2.0 * unit_uniform(rng) - 1.0);
        params.push_back(std::move(p));
    }
    return params;
}

std::vector<LayerParams> init_params(const BiGcnConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return init_params(config, rng);
}

StagedInput stage_input(std::shared_ptr<const DenseMatrix> x, Mode mode) {
    StagedInput s;
    s.input = std::move(x);
    if (binarizes_features(mode)) {
        s.binary = binarize_feature_rows(*s.input);
        s.staged = std::make_shared<const DenseMatrix>(dequantize(*s.binary));
    } else {
        s.staged = s.input;
    }
    return s;
}

ForwardResult forward(const DenseMatrix& x, const CsrMatrix& adj, const std::vector<LayerParams>& params,
                      const BiGcnConfig& config, const ForwardOptions& options) {
    config.validate();
    if (params.size() != config.layer_count()) throw DimensionError("forward: parameter count differs from config");
    if (x.rows() != adj.rows || adj.rows != adj.cols)
        throw DimensionError(fmt::format("forward: {} feature rows for a {}x{} adjacency", x.rows(), adj.rows, adj.cols));
    if (options.first_input != nullptr && options.first_input->input.get() != &x)
        throw std::invalid_argument("forward: first_input was staged from a different matrix");
    const bool bin_w = binarizes_weights(config.mode);
    const bool bin_f = binarizes_features(config.mode);

    ForwardResult result;
    if (options.training) result.cache.emplace();

    // Non-owning handle: layer 0 reads the caller's matrix in place.
    std::shared_ptr<const DenseMatrix> h(std::shared_ptr<const DenseMatrix>(), &x);
    for (std::size_t l = 0; l < params.size(); ++l) {
        const auto& w = params[l].weight;
        if (h->cols() != w.rows())
            throw DimensionError(fmt::format("forward: layer {} expects {} inputs, got {}", l, w.rows(), h->cols()));
        const bool drop = options.training && config.dropout_rate > 0.0 && (l > 0 || config.input_dropout);
        const bool reuse_zeta = l == 0 && !drop && options.first_extraction != nullptr;

        LayerCache lc;
        lc.input = h;
        if (l == 0 && options.first_input != nullptr) {
            lc.input_binary = options.first_input->binary;
            lc.staged_input = options.first_input->staged;
        } else if (!(reuse_zeta && !options.training)) {
            auto staged = stage_input(h, config.mode);
            lc.input_binary = std::move(staged.binary);
            lc.staged_input = std::move(staged.staged);
        }

        if (drop) {
            if (options.rng == nullptr) throw std::invalid_argument("forward: dropout needs an rng");
            const double keep_scale = 1.0 / (1.0 - config.dropout_rate);
            DenseMatrix dropped = *lc.staged_input;
            lc.keep_mask.resize(dropped.size());
            auto vals = dropped.values();
            for (std::size_t i = 0; i < vals.size(); ++i) {
                const bool keep = unit_uniform(*options.rng) >= config.dropout_rate;
                lc.keep_mask[i] = keep ? 1 : 0;
                vals[i] = keep ? vals[i] * keep_scale : 0.0;
            }
            lc.staged_input = std::make_shared<const DenseMatrix>(std::move(dropped));
        }

        if (bin_w) {
            lc.weight_binary = binarize_weight_columns(w);
            if (options.float_weight_scales)
                for (auto& a : lc.weight_binary->scales) a = static_cast<double>(static_cast<float>(a));
            lc.effective_weight = dequantize(*lc.weight_binary);
        } else {
            lc.effective_weight = w;
        }

        // Without dropout, bin_both uses the XNOR kernel: the ±1 product is an
        // exact integer, scaled by β_i·α_j exactly as the packed path does.
        // Summing β·α·s terms in floating point can leave ±1e-17 where the
        // true value is 0 and flip the next layer's sign.
        DenseMatrix zeta;
        if (reuse_zeta)
            zeta = *options.first_extraction;
        else if (bin_f && bin_w && !drop)
            zeta = binary_matmul(lc.input_binary->bits, lc.input_binary->scales, lc.weight_binary->bits,
                                 lc.weight_binary->scales);
        else
            zeta = dense_matmul(*lc.staged_input, lc.effective_weight);
        DenseMatrix agg = csr_dense_matmul(adj, zeta);
        check_finite(agg, l, "activation");
        const bool last = l + 1 == params.size();
        h = std::make_shared<const DenseMatrix>((config.mode == Mode::full && !last) ? relu(agg) : agg);

        if (options.training) {
            lc.extraction = std::move(zeta);
            lc.aggregated = std::move(agg);
            result.cache->layers.push_back(std::move(lc));
        }
    }
    result.logits = *h;
    return result;
}

double cross_entropy(const DenseMatrix& logits, const std::vector<int>& labels, const std::vector<std::size_t>& mask) {
    if (mask.empty()) throw DimensionError("cross_entropy: empty mask");
    double total = 0.0;
    for (auto i : mask) {
        const auto row = logits.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double v : row) sum += std::exp(v - mx);
        total += (mx + std::log(sum)) - row[static_cast<std::size_t>(labels[i])];
    }
    return total / static_cast<double>(mask.size());
}

DenseMatrix cross_entropy_grad(const DenseMatrix& logits, const std::vector<int>& labels,
                               const std::vector<std::size_t>& mask) {
    if (mask.empty()) throw DimensionError("cross_entropy_grad: empty mask");
    DenseMatrix g(logits.rows(), logits.cols());
    const double inv = 1.0 / static_cast<double>(mask.size());
    for (auto i : mask) {
        const auto row = logits.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double v : row) sum += std::exp(v - mx);
        auto grow = g.row(i);
        for (std::size_t c = 0; c < row.size(); ++c) grow[c] = std::exp(row[c] - mx) / sum * inv;
        grow[static_cast<std::size_t>(labels[i])] -= inv;
    }
    return g;
}

std::vector<int> argmax_rows(const DenseMatrix& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

double accuracy(const DenseMatrix& logits, const std::vector<int>& labels, const std::vector<std::size_t>& mask) {
    if (mask.empty()) return 0.0;
    std::size_t hits = 0;
    for (auto i : mask) {
        const auto row = logits.row(i);
        if (std::max_element(row.begin(), row.end()) - row.begin() == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(mask.size());
}

DenseMatrix weight_grad_through_binarization(const DenseMatrix& weight, const ScaledBinary& binarized,
                                             const DenseMatrix& grad_effective) {
    const std::size_t d_in = weight.rows(), d_out = weight.cols();
    if (binarized.bucket_axis != BucketAxis::column || binarized.source_rows() != d_in ||
        binarized.source_cols() != d_out || grad_effective.rows() != d_in || grad_effective.cols() != d_out)
        throw DimensionError("weight_grad_through_binarization: shape mismatch");
    std::vector<double> projected(d_out, 0.0);
    for (std::size_t k = 0; k < d_in; ++k)
        for (std::size_t j = 0; j < d_out; ++j) projected[j] += grad_effective(k, j) * binarized.bits.sign(j, k);
    DenseMatrix out(d_in, d_out);
    const double inv_n = 1.0 / static_cast<double>(d_in);
    for (std::size_t i = 0; i < d_in; ++i)
        for (std::size_t j = 0; j < d_out; ++j) {
            const double b = binarized.bits.sign(j, i);
            const double ste = std::abs(weight(i, j)) < 1.0 ? 1.0 : 0.0;
            out(i, j) = inv_n * b * projected[j] + binarized.scales[j] * grad_effective(i, j) * ste;
        }
    return out;
}

DenseMatrix feature_grad_gate(const DenseMatrix& grad_effective, const DenseMatrix& input, SteVariant variant) {
    if (grad_effective.rows() != input.rows() || grad_effective.cols() != input.cols())
        throw DimensionError("feature_grad_gate: shape mismatch");
    DenseMatrix out = grad_effective;
    auto g = out.values();
    const auto h = input.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double gate_on = variant == SteVariant::grad_magnitude ? g[i] : h[i];
        if (!(std::abs(gate_on) < 1.0)) g[i] = 0.0;
    }
    return out;
}

Gradients backward(const ForwardResult& fwd, const CsrMatrix& adj, const std::vector<int>& labels,
                   const std::vector<std::size_t>& mask, const std::vector<LayerParams>& params,
                   const BiGcnConfig& config, const BackwardOptions& options) {
    if (!fwd.cache) throw std::logic_error("backward: forward ran without a training cache");
    const auto& layers = fwd.cache->layers;
    if (layers.size() != params.size()) throw DimensionError("backward: cache and parameters disagree");
    const std::size_t count = layers.size();
    const double keep_scale = 1.0 / (1.0 - config.dropout_rate);

    Gradients grads;
    grads.weights.resize(count);
    grads.effective_weights.resize(count);
    grads.effective_inputs.resize(count);

    DenseMatrix upstream = cross_entropy_grad(fwd.logits, labels, mask);
    for (std::size_t l = count; l-- > 0;) {
        const auto& lc = layers[l];
        if (config.mode == Mode::full && l + 1 < count) {
            auto g = upstream.values();
            const auto pre = lc.aggregated.values();
            for (std::size_t i = 0; i < g.size(); ++i)
                if (!(pre[i] > 0.0)) g[i] = 0.0;
        }
        const DenseMatrix grad_zeta = csr_transpose_dense_matmul(adj, upstream);
        grads.effective_weights[l] = dense_matmul_at(*lc.staged_input, grad_zeta);

        if (l > 0 || options.first_layer_input_grad) {
            DenseMatrix grad_staged = dense_matmul_bt(grad_zeta, lc.effective_weight);
            if (!lc.keep_mask.empty()) {
                auto g = grad_staged.values();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] = lc.keep_mask[i] ? g[i] * keep_scale : 0.0;
            }
            grads.effective_inputs[l] = grad_staged;
            upstream = binarizes_features(config.mode)
                           ? feature_grad_gate(grad_staged, *lc.input, config.ste_variant)
                           : std::move(grad_staged);
        }

        grads.weights[l] = binarizes_weights(config.mode)
                               ? weight_grad_through_binarization(params[l].weight, *lc.weight_binary,
                                                                  grads.effective_weights[l])
                               : grads.effective_weights[l];
    }
    return grads;
}

void adam_step(std::vector<LayerParams>& params, const std::vector<DenseMatrix>& grads, double learning_rate,
               std::size_t step, const AdamHyper& hyper) {
    if (params.size() != grads.size()) throw DimensionError("adam_step: gradient count mismatch");
    if (step == 0) throw std::invalid_argument("adam_step: step counts from 1");
    const double t = static_cast<double>(step);
    const double c1 = 1.0 - std::pow(hyper.beta1, t);
    const double c2 = 1.0 - std::pow(hyper.beta2, t);
    for (std::size_t l = 0; l < params.size(); ++l) {
        auto w = params[l].weight.values();
        auto m = params[l].adam_m.values();
        auto v = params[l].adam_v.values();
        const auto g = grads[l].values();
        if (g.size() != w.size()) throw DimensionError("adam_step: gradient shape mismatch");
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
            v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            w[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
        }
    }
}

}  // namespace bigcn

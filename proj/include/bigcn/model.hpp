#pragma once

// Bi-GCN layers: forward in four binarization modes, cross-entropy loss,
// the binarized backward pass and Adam.
//
// Training runs the binarized network in real arithmetic ("simulated"): the
// binarized input H̃ = β·F and weights W̃ = α·B are materialized as dense
// matrices so dropout and gradients can flow. The packed XNOR path in
// checkpoint.hpp reproduces the same forward for inference.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bigcn/binarize.hpp"
#include "bigcn/bitlinalg.hpp"

namespace bigcn {

enum class Mode { full, bin_weights, bin_features, bin_both };
enum class SteVariant { grad_magnitude, input_magnitude };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(SteVariant v) noexcept;
Mode parse_mode(std::string_view s);
SteVariant parse_ste_variant(std::string_view s);

constexpr bool binarizes_weights(Mode m) noexcept { return m == Mode::bin_weights || m == Mode::bin_both; }
constexpr bool binarizes_features(Mode m) noexcept { return m == Mode::bin_features || m == Mode::bin_both; }

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BiGcnConfig {
    std::vector<std::size_t> layer_dims{0, 64, 0};
    Mode mode = Mode::bin_both;
    double dropout_rate = 0.4;
    /// Also drop the first layer's input. Off by default: dropout sits on the
    /// (binarized) inputs of the intermediate layers.
    bool input_dropout = false;
    double learning_rate = 0.001;
    std::size_t max_epochs = 1000;
    std::size_t patience = 100;
    std::uint64_t seed = 0;
    SteVariant ste_variant = SteVariant::grad_magnitude;

    std::size_t layer_count() const noexcept { return layer_dims.size() - 1; }
    void validate() const;
};

struct LayerParams {
    DenseMatrix weight;  // d_in × d_out full-precision master copy
    DenseMatrix adam_m;
    DenseMatrix adam_v;

    /// (B, α) of the current weights.
    ScaledBinary binarized() const { return binarize_weight_columns(weight); }
};

/// Xavier-uniform weights, U(±√(6/(d_in+d_out))), drawn layer by layer from `rng`.
std::vector<LayerParams> init_params(const BiGcnConfig& config, std::mt19937_64& rng);
std::vector<LayerParams> init_params(const BiGcnConfig& config, std::uint64_t seed);

struct LayerCache {
    /// H, before binarization. Layer 0 aliases the caller's input, which
    /// must outlive the cache.
    std::shared_ptr<const DenseMatrix> input;
    std::optional<ScaledBinary> input_binary;           // (F, β) in feature-binarizing modes
    std::shared_ptr<const DenseMatrix> staged_input;    // H̃ after dropout, the left operand of ζ
    std::vector<std::uint8_t> keep_mask;                // empty when no dropout was applied
    std::optional<ScaledBinary> weight_binary;          // (B, α) in weight-binarizing modes
    DenseMatrix effective_weight;                       // W̃
    DenseMatrix extraction;                             // ζ = H̃·W̃
    DenseMatrix aggregated;                             // Ã·ζ, before any ReLU
};

struct ForwardCache {
    std::vector<LayerCache> layers;
};

/// A layer input and its binarized, pre-dropout form H̃.
struct StagedInput {
    std::shared_ptr<const DenseMatrix> input;
    std::optional<ScaledBinary> binary;
    std::shared_ptr<const DenseMatrix> staged;
};

StagedInput stage_input(std::shared_ptr<const DenseMatrix> x, Mode mode);

struct ForwardOptions {
    bool training = false;
    /// Dropout source; required when training with a nonzero rate.
    std::mt19937_64* rng = nullptr;
    /// Round α to 32-bit floats, as stored in a packed checkpoint.
    bool float_weight_scales = false;
    /// Layer-0 staging of the same `x`, computed once for a fixed input.
    const StagedInput* first_input = nullptr;
    /// Layer-0 ζ from an earlier pass with the same weights and input. Used
    /// only when layer 0 applies no dropout.
    const DenseMatrix* first_extraction = nullptr;
};

struct ForwardResult {
    DenseMatrix logits;
    std::optional<ForwardCache> cache;  // present only when training
};

ForwardResult forward(const DenseMatrix& x, const CsrMatrix& adj, const std::vector<LayerParams>& params,
                      const BiGcnConfig& config, const ForwardOptions& options = {});

/// −mean over `mask` of log softmax(logits)[label].
double cross_entropy(const DenseMatrix& logits, const std::vector<int>& labels, const std::vector<std::size_t>& mask);
/// ∂cross_entropy/∂logits.
DenseMatrix cross_entropy_grad(const DenseMatrix& logits, const std::vector<int>& labels,
                               const std::vector<std::size_t>& mask);
double accuracy(const DenseMatrix& logits, const std::vector<int>& labels, const std::vector<std::size_t>& mask);
std::vector<int> argmax_rows(const DenseMatrix& logits);

/// ∂L/∂W from ∂L/∂W̃ for W̃ = α·B per column:
///   (1/d_in)·B_ij·Σ_k ∂L/∂W̃_kj·B_kj + α_j·∂L/∂W̃_ij·1{|W_ij| < 1}.
DenseMatrix weight_grad_through_binarization(const DenseMatrix& weight, const ScaledBinary& binarized,
                                             const DenseMatrix& grad_effective);

/// Straight-through gate on ∂L/∂H̃. grad_magnitude zeroes entries with
/// |∂L/∂H̃| ≥ 1; input_magnitude zeroes entries with |H| ≥ 1.
DenseMatrix feature_grad_gate(const DenseMatrix& grad_effective, const DenseMatrix& input, SteVariant variant);

struct Gradients {
    std::vector<DenseMatrix> weights;           // ∂L/∂W per layer
    std::vector<DenseMatrix> effective_weights; // ∂L/∂W̃ per layer
    /// ∂L/∂H̃ before the straight-through gate. Empty for layer 0 unless requested.
    std::vector<DenseMatrix> effective_inputs;
};

struct BackwardOptions {
    bool first_layer_input_grad = false;
};

Gradients backward(const ForwardResult& fwd, const CsrMatrix& adj, const std::vector<int>& labels,
                   const std::vector<std::size_t>& mask, const std::vector<LayerParams>& params,
                   const BiGcnConfig& config, const BackwardOptions& options = {});

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One bias-corrected Adam update; `step` counts from 1.
void adam_step(std::vector<LayerParams>& params, const std::vector<DenseMatrix>& grads, double learning_rate,
               std::size_t step, const AdamHyper& hyper = {});

}  // namespace bigcn

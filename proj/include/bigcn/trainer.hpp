#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "bigcn/graph.hpp"
#include "bigcn/model.hpp"

namespace bigcn {

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainReport {
    std::uint64_t seed = 0;
    Mode mode = Mode::bin_both;
    std::vector<EpochMetrics> epochs;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    double best_val_accuracy = 0.0;
    double test_accuracy = 0.0;
    double test_loss = 0.0;
    bool diverged = false;
    std::string divergence_reason;
    std::size_t workers = 1;
    /// Not part of to_json(): it is the only nondeterministic field.
    double wall_seconds = 0.0;

    std::size_t epochs_run() const noexcept { return epochs.size(); }
    nlohmann::json to_json() const;
};

struct TrainedModel {
    BiGcnConfig config;
    std::vector<LayerParams> params;
    Standardizer standardizer;
};

struct TrainResult {
    TrainedModel model;
    TrainReport report;
};

/// Full-batch training with early stopping on validation loss. The returned
/// parameters are the ones from the best validation epoch.
///
/// `config.layer_dims` front and back are overwritten with the graph's feature
/// and class counts when they are zero.
TrainResult train(const AttributedGraph& graph, const SplitMasks& masks, BiGcnConfig config);

/// Forward on raw (unstandardized) features; no dropout.
DenseMatrix predict_logits(const TrainedModel& model, const AttributedGraph& graph, const CsrMatrix& adj);

}  // namespace bigcn

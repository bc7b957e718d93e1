#include "bigcn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace bigcn {

nlohmann::json TrainReport::to_json() const {
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& e : epochs)
        curve.push_back({{"epoch", e.epoch},
                         {"train_loss", e.train_loss},
                         {"train_acc", e.train_accuracy},
                         {"val_loss", e.val_loss},
                         {"val_acc", e.val_accuracy}});
    return {{"seed", seed},
            {"mode", std::string(to_string(mode))},
            {"epochs_run", epochs_run()},
            {"best_epoch", best_epoch},
            {"best_val_loss", best_val_loss},
            {"best_val_acc", best_val_accuracy},
            {"test_acc", test_accuracy},
            {"test_loss", test_loss},
            {"diverged", diverged},
            {"divergence_reason", divergence_reason},
            {"workers", workers},
            {"curve", std::move(curve)}};
}

namespace {

std::vector<LayerParams> weights_only(const std::vector<LayerParams>& params) {
    std::vector<LayerParams> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back({p.weight, {}, {}});
    return out;
}

}  // namespace

TrainResult train(const AttributedGraph& graph, const SplitMasks& masks, BiGcnConfig config) {
    const auto started = std::chrono::steady_clock::now();
    if (config.layer_dims.size() >= 2) {
        if (config.layer_dims.front() == 0) config.layer_dims.front() = graph.n_features();
        if (config.layer_dims.back() == 0) config.layer_dims.back() = graph.n_classes();
    }
    config.validate();
    if (config.layer_dims.front() != graph.n_features() || config.layer_dims.back() != graph.n_classes())
        throw DimensionError("train: layer_dims do not match the graph's features/classes");
    masks.validate(graph.n_nodes());

    TrainResult result;
    result.model.config = config;
    result.model.standardizer = Standardizer::fit(graph.features, masks.train);
    const auto x = std::make_shared<const DenseMatrix>(result.model.standardizer.apply(graph.features));
    const StagedInput first = stage_input(x, config.mode);
    const CsrMatrix adj = normalize_adjacency(graph);
    const auto& val_mask = masks.val.empty() ? masks.train : masks.val;

    std::mt19937_64 rng(config.seed);
    auto params = init_params(config, rng);
    auto best = weights_only(params);

    auto& report = result.report;
    report.seed = config.seed;
    report.workers = kernel_workers();
    report.mode = config.mode;
    report.best_val_loss = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        EpochMetrics em;
        em.epoch = epoch;
        try {
            const auto fwd = forward(*x, adj, params, config, {.training = true, .rng = &rng, .first_input = &first});
            em.train_loss = cross_entropy(fwd.logits, graph.labels, masks.train);
            const auto eval = forward(*x, adj, params, config,
                                      {.first_input = &first, .first_extraction = &fwd.cache->layers[0].extraction});
            em.train_accuracy = accuracy(eval.logits, graph.labels, masks.train);
            em.val_loss = cross_entropy(eval.logits, graph.labels, val_mask);
            em.val_accuracy = accuracy(eval.logits, graph.labels, val_mask);
            if (!std::isfinite(em.train_loss) || !std::isfinite(em.val_loss))
                throw DivergenceError("non-finite loss");

            report.epochs.push_back(em);
            if (em.val_loss < report.best_val_loss) {
                report.best_val_loss = em.val_loss;
                report.best_val_accuracy = em.val_accuracy;
                report.best_epoch = epoch;
                best = weights_only(params);
                since_best = 0;
            } else {
                ++since_best;
            }
            const auto grads = backward(fwd, adj, graph.labels, masks.train, params, config);
            adam_step(params, grads.weights, config.learning_rate, epoch);
        } catch (const DivergenceError& e) {
            report.diverged = true;
            report.divergence_reason = e.what();
            break;
        }
        if (since_best >= config.patience) break;
    }

    result.model.params = std::move(best);
    if (!report.diverged && report.best_epoch > 0) {
        const auto eval = forward(*x, adj, result.model.params, config, {.first_input = &first});
        if (!masks.test.empty()) {
            report.test_accuracy = accuracy(eval.logits, graph.labels, masks.test);
            report.test_loss = cross_entropy(eval.logits, graph.labels, masks.test);
        }
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

DenseMatrix predict_logits(const TrainedModel& model, const AttributedGraph& graph, const CsrMatrix& adj) {
    return forward(model.standardizer.apply(graph.features), adj, model.params, model.config).logits;
}

}  // namespace bigcn

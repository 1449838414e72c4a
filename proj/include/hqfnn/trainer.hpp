#pragma once

#include "hqfnn/data.hpp"
#include "hqfnn/grad.hpp"
#include "hqfnn/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <set>
#include <span>
#include <vector>

namespace hqfnn {

struct TrainConfig {
    std::size_t batch_size = 500;
    double lr0 = 0.001;
    std::size_t epochs = 200;
    std::set<std::size_t> milestones = {100, 150};
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
    /// Learning rate used during epoch t (1-based): lr0 decays by 0.1 after
    /// each milestone epoch has completed.
    double lr_at(std::size_t epoch) const;
};

struct MetricsRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t t = 0;
};

/// One bias-corrected Adam update of every tensor from its `grad`.
void adam_step(std::span<ParamTensor* const> params, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

/// Mean softmax cross-entropy of logits [B][C].
double cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

/// Accuracy plus macro precision/recall/F1 over the classes that occur in
/// labels or predictions.
MetricsRecord classification_metrics(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                     std::size_t n_classes);

/// Loss and metrics of the model on a dataset.
MetricsRecord evaluate(const ModelParams& params, const Dataset& data, std::size_t batch_size = 500);

struct TrainResult {
    ModelParams best;
    std::size_t best_epoch = 0;
    double best_val_accuracy = -1.0;
    std::vector<MetricsRecord> history;  // loss: mean training loss; metrics: validation set
    std::vector<double> lr_history;      // lr used in each epoch
};

using EpochCallback = std::function<void(const MetricsRecord&)>;

TrainResult train(const Dataset& train_set, const Dataset& val_set, const ModelParams& init, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

void write_metrics_csv(std::ostream& os, std::span<const MetricsRecord> history);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> history);

}  // namespace hqfnn

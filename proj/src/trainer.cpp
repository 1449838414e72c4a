#include "hqfnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hqfnn {

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw std::invalid_argument("lr0 must be a finite non-negative number");
    if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    for (std::size_t ms : milestones) {
        if (ms < 1 || ms > epochs) throw std::invalid_argument("milestone " + std::to_string(ms) + " outside [1, epochs]");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("Adam eps must be positive");
}

double TrainConfig::lr_at(std::size_t epoch) const {
    double lr = lr0;
    for (std::size_t ms : milestones) {
        if (ms < epoch) lr *= 0.1;
    }
    return lr;
}

void adam_step(std::span<ParamTensor* const> params, AdamState& state, double lr, double beta1, double beta2,
               double eps) {
    if (state.m.empty()) {
        for (const auto* p : params) {
            state.m.emplace_back(p->size(), 0.0);
            state.v.emplace_back(p->size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("Adam state does not match the parameter list");
    ++state.t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        ParamTensor& p = *params[k];
        auto& m = state.m[k];
        auto& v = state.v[k];
        if (m.size() != p.size() || p.grad.size() != p.size()) {
            throw std::invalid_argument("shape mismatch in Adam update of " + p.name);
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p.values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

double cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
    if (logits.rank() != 2) throw std::invalid_argument("logits must be [B][C]");
    return nn::softmax_cross_entropy(logits.data(), labels, logits.dim(1)).loss;
}

MetricsRecord classification_metrics(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                     std::size_t n_classes) {
    if (predictions.size() != labels.size()) throw std::invalid_argument("predictions and labels differ in length");
    MetricsRecord r;
    if (labels.empty()) return r;
    std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
    std::vector<bool> present(n_classes, false);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t y = labels[i];
        const std::size_t yp = predictions[i];
        if (y >= n_classes || yp >= n_classes) throw std::invalid_argument("class index out of range");
        present[y] = present[yp] = true;
        if (y == yp) {
            ++correct;
            ++tp[y];
        } else {
            ++fp[yp];
            ++fn[y];
        }
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
    std::size_t n_present = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (!present[c]) continue;
        ++n_present;
        const double prec = tp[c] + fp[c] ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]) : 0.0;
        const double rec = tp[c] + fn[c] ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]) : 0.0;
        r.precision += prec;
        r.recall += rec;
        r.f1 += prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    }
    r.precision /= static_cast<double>(n_present);
    r.recall /= static_cast<double>(n_present);
    r.f1 /= static_cast<double>(n_present);
    return r;
}

MetricsRecord evaluate(const ModelParams& params, const Dataset& data, std::size_t batch_size) {
    if (data.size() == 0) throw std::invalid_argument("cannot evaluate on an empty dataset");
    const std::size_t n_classes = params.config.n_classes;
    std::vector<std::size_t> predictions;
    predictions.reserve(data.size());
    double loss_sum = 0.0;
    for (const auto& batch : make_batches(data.size(), batch_size, 0, false)) {
        const Tensor logits = model_forward(data.gather_images(batch), params);
        const auto labels = data.gather_labels(batch);
        loss_sum += cross_entropy(logits, labels) * static_cast<double>(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const auto row = logits.slice(b);
            predictions.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
        }
    }
    MetricsRecord r = classification_metrics(predictions, data.labels, n_classes);
    r.loss = loss_sum / static_cast<double>(data.size());
    return r;
}

TrainResult train(const Dataset& train_set, const Dataset& val_set, const ModelParams& init, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    if (train_set.size() == 0 || val_set.size() == 0) {
        throw std::invalid_argument("training and validation sets must be non-empty");
    }
    cfg.validate();
    init.config.validate();

    TrainResult res;
    ModelParams params = init;
    res.best = init;
    AdamState adam;
    const auto tensors = params.tensors();

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cfg.lr_at(epoch);
        res.lr_history.push_back(lr);
        double loss_sum = 0.0;
        const auto batches = make_batches(train_set.size(), cfg.batch_size, cfg.seed + epoch, true);
        for (const auto& batch : batches) {
            const auto labels = train_set.gather_labels(batch);
            const auto lg = model_loss_and_grad(params, train_set.gather_images(batch), labels);
            loss_sum += lg.loss * static_cast<double>(batch.size());
            adam_step(tensors, adam, lr, cfg.beta1, cfg.beta2, cfg.eps);
        }
        MetricsRecord rec = evaluate(params, val_set, cfg.batch_size);
        rec.epoch = epoch;
        rec.loss = loss_sum / static_cast<double>(train_set.size());
        res.history.push_back(rec);
        if (rec.accuracy > res.best_val_accuracy) {
            res.best_val_accuracy = rec.accuracy;
            res.best_epoch = epoch;
            res.best = params;
        }
        if (on_epoch) on_epoch(rec);
    }
    return res;
}

void write_metrics_csv(std::ostream& os, std::span<const MetricsRecord> history) {
    os << "epoch,loss,acc,precision,recall,f1\n";
    char line[256];
    for (const auto& r : history) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.loss, r.accuracy,
                      r.precision, r.recall, r.f1);
        os << line;
    }
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> history) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open metrics file " + path.string());
    write_metrics_csv(os, history);
}

}  // namespace hqfnn

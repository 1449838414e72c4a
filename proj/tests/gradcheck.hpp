#pragma once

#include "hqfnn/model.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace gradcheck {

inline hqfnn::ModelConfig tiny_config() {
    hqfnn::ModelConfig c;
    c.d = 2;
    c.m = 2;
    c.layers = 1;
    c.q = 3;
    c.hidden = 4;
    c.n_classes = 3;
    c.image_size = 8;
    return c;
}

struct Problem {
    hqfnn::ModelParams params;
    hqfnn::Tensor images;
    std::vector<std::size_t> labels;
};

inline Problem random_problem(const hqfnn::ModelConfig& cfg, std::uint64_t seed, std::size_t batch = 2) {
    Problem p{hqfnn::init_params(cfg, seed), hqfnn::Tensor({batch, 1, cfg.image_size, cfg.image_size}), {}};
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> g;
    for (auto& v : p.images.data()) v = g(rng);
    for (std::size_t b = 0; b < batch; ++b) p.labels.push_back(rng() % cfg.n_classes);
    return p;
}

struct Result {
    double max_rel_err = 0.0;
    std::size_t num_params = 0;
    std::size_t kinks = 0;
    std::string worst;
};

/// Compares every analytic gradient entry with a central difference of the
/// batch loss. Relative error uses a 1e-4 floor on the denominator. When the
/// two one-sided differences disagree a ReLU or pooling kink lies inside the
/// step, and the analytic value must then match one of the one-sided slopes.
inline Result check(Problem& p, double h = 1e-5) {
    hqfnn::model_loss_and_grad(p.params, p.images, p.labels);
    std::vector<std::vector<double>> analytic;
    for (const auto* t : p.params.tensors()) analytic.push_back(t->grad);

    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4}); };
    Result r;
    auto tensors = p.params.tensors();
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        auto& vals = tensors[k]->values;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double keep = vals[i];
            vals[i] = keep + h;
            const double up = hqfnn::model_loss_and_grad(p.params, p.images, p.labels).loss;
            vals[i] = keep - h;
            const double down = hqfnn::model_loss_and_grad(p.params, p.images, p.labels).loss;
            vals[i] = keep;
            const double fd = (up - down) / (2 * h);
            const double a = analytic[k][i];
            double err = rel(a, fd);
            if (err > 1e-3) {
                const double mid = hqfnn::model_loss_and_grad(p.params, p.images, p.labels).loss;
                const double fwd = (up - mid) / h, bwd = (mid - down) / h;
                if (rel(fwd, bwd) > 1e-2) {
                    err = std::min(rel(a, fwd), rel(a, bwd));
                    ++r.kinks;
                }
            }
            if (err > r.max_rel_err) {
                r.max_rel_err = err;
                r.worst = tensors[k]->name + "[" + std::to_string(i) + "]";
            }
            ++r.num_params;
        }
    }
    return r;
}

}  // namespace gradcheck

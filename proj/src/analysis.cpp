#include "hqfnn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>

namespace hqfnn {

namespace {

constexpr qsim::Axis kAxes[3] = {qsim::Axis::X, qsim::Axis::Y, qsim::Axis::Z};

std::vector<double> uniform_angles(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> dist(-std::numbers::pi, std::numbers::pi);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

}  // namespace

std::vector<NoiseSweepResult> noise_sweep(const CircuitBuilder& circuit, qsim::ChannelKind kind,
                                          std::span<const double> probabilities, std::size_t n_inputs) {
    if (n_inputs < 2) throw std::invalid_argument("noise sweep needs at least two inputs");
    std::vector<qsim::NoiseChannel> channels;
    for (double p : probabilities) channels.push_back(qsim::make_channel(kind, p));

    std::vector<NoiseSweepResult> out;
    for (const auto& ch : channels) {
        NoiseSweepResult r;
        r.channel = kind;
        r.probability = ch.probability;
        double sum = 0.0;
        for (std::size_t k = 0; k < n_inputs; ++k) {
            const double input = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_inputs);
            const qsim::Circuit c = circuit(input);
            double f = 1.0;
            if (ch.probability > 0.0) {
                const auto ideal = qsim::pure_to_density(qsim::simulate(c));
                f = qsim::state_fidelity(ideal, qsim::simulate_noisy(c, ch));
            }
            r.inputs.push_back(input);
            r.fidelities.push_back(f);
            sum += f;
        }
        r.mean_fidelity = sum / static_cast<double>(n_inputs);
        out.push_back(std::move(r));
    }
    return out;
}

QmfParams seeded_qmf_params(std::size_t layers, std::uint64_t seed) {
    QmfParams p;
    p.m = 1;
    p.layers = layers;
    std::mt19937_64 rng(seed);
    p.biases = ParamTensor("qmf_bias", {1, layers, 3});
    p.thetas = ParamTensor("qmf_theta", {1, layers, 3});
    p.biases.values = uniform_angles(rng, 3 * layers);
    p.thetas.values = uniform_angles(rng, 3 * layers);
    return p;
}

std::vector<NoiseSweepResult> noise_sweep(qsim::ChannelKind kind, std::span<const double> probabilities,
                                          const NoiseSweepConfig& cfg) {
    const QmfParams params = seeded_qmf_params(cfg.layers, cfg.seed);
    return noise_sweep([&](double x) { return build_qmf_circuit(x, 0, params); }, kind, probabilities, cfg.n_inputs);
}

std::size_t analysis_param_count(std::size_t q, std::size_t layers) { return 6 * layers * q; }

qsim::Circuit analysis_circuit(std::size_t q, std::size_t layers, std::span<const double> params) {
    if (q < 1 || q > qsim::kMaxQubits) throw std::invalid_argument("analysis circuit qubit count out of range");
    if (params.size() != analysis_param_count(q, layers)) {
        throw std::invalid_argument("analysis circuit expects 6 * layers * q parameters");
    }
    qsim::Circuit c;
    c.n_qubits = q;
    std::size_t k = 0;
    for (std::size_t w = 0; w < q; ++w) {
        for (std::size_t l = 0; l < layers; ++l) {
            for (int rep = 0; rep < 2; ++rep) {
                for (auto axis : kAxes) c.ops.push_back(qsim::Op::rot(axis, w, params[k++]));
            }
        }
    }
    qsim::append_cluster_cnots(c, q);
    return c;
}

std::vector<double> haar_bin_masses(std::size_t n_qubits, std::size_t n_bins) {
    if (n_bins < 1) throw std::invalid_argument("need at least one bin");
    const double big_n = std::ldexp(1.0, static_cast<int>(n_qubits));
    // (1 - F)^(N-1) evaluated through log1p to stay accurate near F = 0
    auto tail = [&](double f) {
        if (f >= 1.0) return 0.0;
        return std::exp((big_n - 1.0) * std::log1p(-f));
    };
    std::vector<double> out(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        const double lo = static_cast<double>(b) / static_cast<double>(n_bins);
        const double hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
        out[b] = tail(lo) - tail(hi);
    }
    return out;
}

std::vector<double> fidelity_histogram(std::span<const double> fidelities, std::size_t n_bins) {
    if (n_bins < 1) throw std::invalid_argument("need at least one bin");
    std::vector<double> out(n_bins, 0.0);
    if (fidelities.empty()) return out;
    for (double f : fidelities) {
        const double c = std::clamp(f, 0.0, 1.0);
        auto b = static_cast<std::size_t>(c * static_cast<double>(n_bins));
        out[std::min(b, n_bins - 1)] += 1.0;
    }
    for (auto& v : out) v /= static_cast<double>(fidelities.size());
    return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("distributions differ in length");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        const double qi = std::max(q[i], std::numeric_limits<double>::min());
        kl += p[i] * std::log(p[i] / qi);
    }
    return std::max(kl, 0.0);
}

double expressibility_score(const StateSampler& sampler, std::size_t n_qubits, std::size_t n_params,
                            std::size_t n_pairs, std::size_t n_bins, std::uint64_t seed) {
    if (n_pairs < 1000) throw std::invalid_argument("expressibility needs at least 1000 fidelity pairs");
    if (n_bins < 10) throw std::invalid_argument("expressibility needs at least 10 bins");
    std::mt19937_64 rng(seed);
    std::vector<double> fids(n_pairs);
    for (auto& f : fids) {
        const auto a = uniform_angles(rng, n_params);
        const auto b = uniform_angles(rng, n_params);
        f = qsim::pure_fidelity(sampler(a), sampler(b));
    }
    return kl_divergence(fidelity_histogram(fids, n_bins), haar_bin_masses(n_qubits, n_bins));
}

namespace {

StateSampler analysis_sampler(const ExprEntConfig& cfg) {
    return [q = cfg.q, layers = cfg.layers](std::span<const double> params) {
        return qsim::simulate(analysis_circuit(q, layers, params));
    };
}

}  // namespace

double expressibility_score(const ExprEntConfig& cfg) {
    return expressibility_score(analysis_sampler(cfg), cfg.q, analysis_param_count(cfg.q, cfg.layers), cfg.n_pairs,
                                cfg.n_bins, cfg.seed);
}

double entangling_score(const StateSampler& sampler, std::size_t n_qubits, std::size_t n_params,
                        std::size_t n_samples, std::uint64_t seed) {
    if (n_qubits < 2) throw std::invalid_argument("entangling capability needs at least two qubits");
    if (n_samples < 100) throw std::invalid_argument("entangling capability needs at least 100 samples");
    std::mt19937_64 rng(seed);
    double sum = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) sum += qsim::meyer_wallach(sampler(uniform_angles(rng, n_params)));
    return sum / static_cast<double>(n_samples);
}

double entangling_score(const ExprEntConfig& cfg) {
    return entangling_score(analysis_sampler(cfg), cfg.q, analysis_param_count(cfg.q, cfg.layers), cfg.n_samples,
                            cfg.seed);
}

ExprEntResult expr_ent(const ExprEntConfig& cfg) {
    return {cfg, expressibility_score(cfg), entangling_score(cfg)};
}

GateCountReport gate_count_report(const ModelConfig& config) {
    config.validate();
    const ModelParams params = zero_params(config);
    GateCountReport r;

    const std::vector<double> features(config.d, 0.0);
    for (const auto& c : qmf_circuits(features, params.qmf)) {
        r.qmf_single_qubit_gates += c.single_qubit_gate_count();
        ++r.qmf_circuits;
    }

    const std::vector<double> angles(config.q, 0.0);
    const qsim::Circuit qd = build_qd_circuit(angles);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& op : qd.ops) {
        if (op.kind == qsim::Op::Kind::Rotation) {
            if (op.axis == qsim::Axis::X) ++r.qd_rx_gates;
            continue;
        }
        const bool same_triple = op.qubit / 3 == op.target / 3;
        if (same_triple && seen.insert({op.qubit, op.target}).second) {
            ++r.qd_cluster_cnots;
        } else {
            ++r.qd_wraparound_cnots;
        }
    }

    r.qmf_params = params.qmf.biases.size() + params.qmf.thetas.size();
    r.rule_weights = params.rule.kernel.size();
    r.qd_projection_weights = params.qd.proj_weight.size();
    r.classifier_weights = params.stem.fc1_w.size() + params.stem.fc2_w.size();
    r.total_params = params.parameter_count();
    return r;
}

}  // namespace hqfnn

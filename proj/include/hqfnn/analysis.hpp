#pragma once

#include "hqfnn/circuit.hpp"
#include "hqfnn/model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace hqfnn {

// ---- noise robustness ----

struct NoiseSweepResult {
    qsim::ChannelKind channel = qsim::ChannelKind::Depolarizing;
    double probability = 0.0;
    double mean_fidelity = 0.0;
    std::vector<double> inputs;
    std::vector<double> fidelities;
};

struct NoiseSweepConfig {
    std::size_t layers = 4;
    std::size_t n_inputs = 50;
    std::uint64_t seed = 7;
};

using CircuitBuilder = std::function<qsim::Circuit(double input)>;

/// Inputs I_k = 2 pi k / n_inputs. For each P, fidelity between the ideal and
/// the noisy output of circuit(I_k), and their mean.
std::vector<NoiseSweepResult> noise_sweep(const CircuitBuilder& circuit, qsim::ChannelKind kind,
                                          std::span<const double> probabilities, std::size_t n_inputs);

/// Same sweep over a single-qubit QMF circuit with seeded parameters.
std::vector<NoiseSweepResult> noise_sweep(qsim::ChannelKind kind, std::span<const double> probabilities,
                                          const NoiseSweepConfig& cfg = {});

/// One-rule QMF parameter block with angles uniform in [-pi, pi].
QmfParams seeded_qmf_params(std::size_t layers, std::uint64_t seed);

// ---- expressibility and entanglement ----

struct ExprEntConfig {
    std::size_t layers = 4;
    std::size_t q = 6;
    std::size_t n_pairs = 5000;
    std::size_t n_bins = 75;
    std::size_t n_samples = 1000;
    std::uint64_t seed = 11;
};

struct ExprEntResult {
    ExprEntConfig config;
    double expressibility = 0.0;
    double entanglement = 0.0;
};

/// q wires, each with `layers` blocks of Rx Ry Rz Rx Ry Rz (all free), then
/// the cluster-CNOT template. params.size() must be 6 * layers * q.
qsim::Circuit analysis_circuit(std::size_t q, std::size_t layers, std::span<const double> params);
std::size_t analysis_param_count(std::size_t q, std::size_t layers);

/// Haar-random fidelity mass per bin for an n-qubit Hilbert space:
/// (1 - a)^(N-1) - (1 - b)^(N-1) over [a, b), N = 2^n.
std::vector<double> haar_bin_masses(std::size_t n_qubits, std::size_t n_bins);

/// Normalized histogram of values in [0, 1]; 1 falls in the last bin.
std::vector<double> fidelity_histogram(std::span<const double> fidelities, std::size_t n_bins);

/// sum p log(p / q); bins with p = 0 contribute nothing.
double kl_divergence(std::span<const double> p, std::span<const double> q);

using StateSampler = std::function<qsim::PureState(std::span<const double> params)>;

/// Expressibility of an arbitrary parameterized circuit.
double expressibility_score(const StateSampler& sampler, std::size_t n_qubits, std::size_t n_params,
                            std::size_t n_pairs, std::size_t n_bins, std::uint64_t seed);
double expressibility_score(const ExprEntConfig& cfg);

double entangling_score(const StateSampler& sampler, std::size_t n_qubits, std::size_t n_params,
                        std::size_t n_samples, std::uint64_t seed);
double entangling_score(const ExprEntConfig& cfg);

ExprEntResult expr_ent(const ExprEntConfig& cfg);

// ---- gate and parameter counts ----

struct GateCountReport {
    std::size_t qmf_single_qubit_gates = 0;  // over every circuit one sample instantiates
    std::size_t qmf_circuits = 0;
    std::size_t qd_rx_gates = 0;
    std::size_t qd_cluster_cnots = 0;
    std::size_t qd_wraparound_cnots = 0;
    std::size_t qmf_params = 0;
    std::size_t rule_weights = 0;        // d*d*3 kernel entries
    std::size_t qd_projection_weights = 0;
    std::size_t classifier_weights = 0;  // (d+1)*hidden + hidden*classes
    std::size_t total_params = 0;
};

GateCountReport gate_count_report(const ModelConfig& config);

}  // namespace hqfnn

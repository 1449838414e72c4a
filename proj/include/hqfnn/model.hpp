#pragma once

// The hybrid quantum-fuzzy classifier:
//   CNN stem -> quantum membership functions (one qubit per rule/feature)
//   -> rule convolution -> quantum defuzzifier (q qubits, clustered CNOTs)
//   -> concat(stem features, crisp value) -> two-layer classifier.

#include "hqfnn/circuit.hpp"
#include "hqfnn/grad.hpp"
#include "hqfnn/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hqfnn {

struct ModelConfig {
    std::size_t d = 16;           // stem feature width
    std::size_t m = 3;            // membership functions per feature
    std::size_t layers = 4;       // QMF re-uploading layers
    std::size_t q = 6;            // defuzzifier qubits
    std::size_t p = 0;            // head split; 0 selects q / 2
    std::size_t hidden = 64;
    std::size_t n_classes = 10;
    std::size_t image_size = 28;  // square single-channel input

    std::size_t head_split() const { return p == 0 ? q / 2 : p; }
    std::size_t stem_flat() const { return 16 * (image_size / 4) * (image_size / 4); }
    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct QmfParams {
    std::size_t m = 0;
    std::size_t layers = 0;
    ParamTensor biases;  // [m][layers][3], added to the encoded feature
    ParamTensor thetas;  // [m][layers][3]

    double bias(std::size_t rule, std::size_t layer, std::size_t axis) const {
        return biases.values[(rule * layers + layer) * 3 + axis];
    }
    double theta(std::size_t rule, std::size_t layer, std::size_t axis) const {
        return thetas.values[(rule * layers + layer) * 3 + axis];
    }
};

struct RuleParams {
    ParamTensor kernel;  // [d in][d out][3]
    ParamTensor bias;    // [d]
};

struct QdParams {
    ParamTensor proj_weight;  // [m*d][q]
    ParamTensor proj_bias;    // [q]
    ParamTensor w1;           // [p]
    ParamTensor beta1;        // [1]
    ParamTensor w2;           // [q-p]
    ParamTensor beta2;        // [1]
};

struct StemClassifierParams {
    ParamTensor conv1_w;  // [8][1][3][3]
    ParamTensor conv1_b;
    ParamTensor conv2_w;  // [16][8][3][3]
    ParamTensor conv2_b;
    ParamTensor stem_w;   // [flat][d]
    ParamTensor stem_b;
    ParamTensor fc1_w;    // [d+1][hidden]
    ParamTensor fc1_b;
    ParamTensor fc2_w;    // [hidden][n_classes]
    ParamTensor fc2_b;
};

struct ModelParams {
    ModelConfig config;
    StemClassifierParams stem;
    QmfParams qmf;
    RuleParams rule;
    QdParams qd;

    /// All tensors in module order (stem, QMF, rule, QD, classifier). This is
    /// the checkpoint order and the order gradients are reduced in.
    std::vector<ParamTensor*> tensors();
    std::vector<const ParamTensor*> tensors() const;
    std::size_t parameter_count() const;
    void zero_grad();
};

/// Allocates every tensor for `config` with zero values.
ModelParams zero_params(const ModelConfig& config);

/// Rotation angles and biases uniform in [-pi, pi]; classical weights and
/// biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// ---- quantum membership functions ----

/// Single-qubit circuit for membership function `rule` applied to feature x:
/// per layer Rx/Ry/Rz(x + bias) then Rx/Ry/Rz(theta).
qsim::Circuit build_qmf_circuit(double x, std::size_t rule, const QmfParams& params);

/// (<Z> + 1) / 2 of the QMF circuit.
double qmf_membership(double x, std::size_t rule, const QmfParams& params);

/// features [B][d] -> memberships [B][m][d].
Tensor qmf_forward(const Tensor& features, const QmfParams& params);

/// Every QMF circuit one sample instantiates, ordered [rule][feature].
std::vector<qsim::Circuit> qmf_circuits(std::span<const double> features, const QmfParams& params);

struct QmfGradient {
    double membership = 0.0;
    std::vector<double> d_bias;   // [layers][3]
    std::vector<double> d_theta;  // [layers][3]
    double d_input = 0.0;
};

/// Parameter-shift derivatives of one membership value.
QmfGradient qmf_gradient(double x, std::size_t rule, const QmfParams& params);

// ---- rule layer ----

/// Pre-activation convolution in the permuted [B][d][m] layout.
Tensor rule_preactivation(const Tensor& memberships, const RuleParams& params);
/// [B][m][d] -> [B][m][d]: permute, conv1d along m (d -> d channels), ReLU, permute back.
Tensor rule_forward(const Tensor& memberships, const RuleParams& params);

// ---- quantum defuzzification ----

qsim::Circuit build_qd_circuit(std::span<const double> angles);

struct QdSample {
    std::vector<double> angles;        // projected rotation angles [q]
    std::vector<double> measurements;  // m_i = (<Z_i> + 1) / 2
    double crisp = 0.0;
};

/// Single-sample defuzzification of a flattened rule tensor (length m*d).
QdSample qd_sample(std::span<const double> rule_flat, const QdParams& params, const ModelConfig& config);

/// Measurement vector for given angles.
std::vector<double> qd_measure(std::span<const double> angles);

/// [B][m][d] -> crisp [B].
std::vector<double> qd_forward(const Tensor& rules, const QdParams& params, const ModelConfig& config);

// ---- classical stem and full model ----

/// images [B][1][S][S] -> features [B][d].
Tensor stem_forward(const Tensor& images, const StemClassifierParams& params, const ModelConfig& config);

/// images [B][1][S][S] -> logits [B][n_classes].
Tensor model_forward(const Tensor& images, const ModelParams& params);

struct LossAndGrad {
    double loss = 0.0;
    Tensor logits;
};

/// Mean cross-entropy over the batch. Zeroes and then fills every
/// ParamTensor::grad (classical layers by backprop, quantum angles and the
/// encoded stem features by the parameter-shift rule).
LossAndGrad model_loss_and_grad(ModelParams& params, const Tensor& images, std::span<const std::size_t> labels);

// ---- checkpoint ----

/// Binary layout: "HQFN", u32 version, u32 config fields (d, m, layers, q, p,
/// hidden, n_classes, image_size), then every tensor in module order as
/// little-endian f64.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace hqfnn

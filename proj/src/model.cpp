#include "hqfnn/model.hpp"

#include "hqfnn/errors.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace hqfnn {

namespace {

using qsim::Axis;
using qsim::cplx;
using qsim::Mat2;

constexpr std::array<Axis, 3> kAxes = {Axis::X, Axis::Y, Axis::Z};
constexpr std::size_t kConv1Out = 8;
constexpr std::size_t kConv2Out = 16;

void require_shape(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw std::invalid_argument(std::string(what) + ": expected a rank-" + std::to_string(rank) + " tensor");
    }
}

// ---- per-sample forward cache ----

struct SampleCache {
    std::vector<double> image;
    std::vector<double> conv1_pre, conv1_act;
    nn::PoolResult pool1;
    std::vector<double> conv2_pre, conv2_act;
    nn::PoolResult pool2;
    std::vector<double> features;     // v, [d]
    std::vector<double> memberships;  // [m][d]
    std::vector<double> rule_in;      // permuted [d][m]
    std::vector<double> rule_pre;     // [d][m]
    std::vector<double> rule_flat;    // R flattened [m][d]
    QdSample qd;
    std::vector<double> fused;        // [d+1]
    std::vector<double> h_pre, h_act; // [hidden]
    std::vector<double> logits;
};

std::vector<double> stem_sample(std::span<const double> image, const StemClassifierParams& sp,
                                const ModelConfig& cfg, SampleCache& c) {
    const std::size_t s = cfg.image_size;
    c.image.assign(image.begin(), image.end());
    c.conv1_pre = nn::conv2d_forward(c.image, sp.conv1_w.values, sp.conv1_b.values, 1, kConv1Out, s, s);
    c.conv1_act = nn::relu_forward(c.conv1_pre);
    c.pool1 = nn::maxpool2x2_forward(c.conv1_act, kConv1Out, s, s);
    const std::size_t s2 = s / 2;
    c.conv2_pre = nn::conv2d_forward(c.pool1.out, sp.conv2_w.values, sp.conv2_b.values, kConv1Out, kConv2Out, s2, s2);
    c.conv2_act = nn::relu_forward(c.conv2_pre);
    c.pool2 = nn::maxpool2x2_forward(c.conv2_act, kConv2Out, s2, s2);
    c.features = nn::linear_forward(c.pool2.out, sp.stem_w.values, sp.stem_b.values, cfg.stem_flat(), cfg.d);
    return c.features;
}

std::vector<double> forward_sample(std::span<const double> image, const ModelParams& mp, SampleCache& c) {
    const ModelConfig& cfg = mp.config;
    stem_sample(image, mp.stem, cfg, c);

    c.memberships.resize(cfg.m * cfg.d);
    for (std::size_t i = 0; i < cfg.m; ++i) {
        for (std::size_t k = 0; k < cfg.d; ++k) {
            c.memberships[i * cfg.d + k] = qmf_membership(c.features[k], i, mp.qmf);
        }
    }

    c.rule_in.resize(cfg.d * cfg.m);
    for (std::size_t i = 0; i < cfg.m; ++i) {
        for (std::size_t k = 0; k < cfg.d; ++k) c.rule_in[k * cfg.m + i] = c.memberships[i * cfg.d + k];
    }
    c.rule_pre = nn::conv1d_forward(c.rule_in, mp.rule.kernel.values, mp.rule.bias.values, cfg.d, cfg.d, cfg.m);
    c.rule_flat.resize(cfg.m * cfg.d);
    for (std::size_t k = 0; k < cfg.d; ++k) {
        for (std::size_t i = 0; i < cfg.m; ++i) {
            const double v = c.rule_pre[k * cfg.m + i];
            c.rule_flat[i * cfg.d + k] = v > 0.0 ? v : 0.0;
        }
    }

    c.qd = qd_sample(c.rule_flat, mp.qd, cfg);

    c.fused = c.features;
    c.fused.push_back(c.qd.crisp);
    c.h_pre = nn::linear_forward(c.fused, mp.stem.fc1_w.values, mp.stem.fc1_b.values, cfg.d + 1, cfg.hidden);
    c.h_act = nn::relu_forward(c.h_pre);
    c.logits = nn::linear_forward(c.h_act, mp.stem.fc2_w.values, mp.stem.fc2_b.values, cfg.hidden, cfg.n_classes);
    return c.logits;
}

void accumulate(ParamTensor& t, const std::vector<double>& g) {
    for (std::size_t i = 0; i < g.size(); ++i) t.grad[i] += g[i];
}

void backward_sample(ModelParams& mp, const SampleCache& c, std::span<const double> g_logits) {
    const ModelConfig& cfg = mp.config;
    auto& sp = mp.stem;

    const auto g_fc2 = nn::linear_backward(c.h_act, sp.fc2_w.values, g_logits, cfg.hidden, cfg.n_classes);
    accumulate(sp.fc2_w, g_fc2.weight);
    accumulate(sp.fc2_b, g_fc2.bias);
    const auto g_hpre = nn::relu_backward(c.h_pre, g_fc2.input);
    const auto g_fc1 = nn::linear_backward(c.fused, sp.fc1_w.values, g_hpre, cfg.d + 1, cfg.hidden);
    accumulate(sp.fc1_w, g_fc1.weight);
    accumulate(sp.fc1_b, g_fc1.bias);

    std::vector<double> g_features(g_fc1.input.begin(), g_fc1.input.begin() + static_cast<std::ptrdiff_t>(cfg.d));
    const double g_crisp = g_fc1.input[cfg.d];

    // Quantum branch. A zero upstream gradient contributes exactly nothing.
    if (g_crisp != 0.0) {
        const std::size_t p = cfg.head_split();
        const std::size_t q = cfg.q;
        std::vector<double> g_meas(q);
        for (std::size_t i = 0; i < q; ++i) {
            if (i < p) {
                mp.qd.w1.grad[i] += 0.5 * g_crisp * c.qd.measurements[i];
                g_meas[i] = 0.5 * g_crisp * mp.qd.w1.values[i];
            } else {
                mp.qd.w2.grad[i - p] += 0.5 * g_crisp * c.qd.measurements[i];
                g_meas[i] = 0.5 * g_crisp * mp.qd.w2.values[i - p];
            }
        }
        mp.qd.beta1.grad[0] += 0.5 * g_crisp;
        mp.qd.beta2.grad[0] += 0.5 * g_crisp;

        // d m / d angle_j by the shift rule on the whole measurement vector
        std::vector<double> g_angles(q, 0.0);
        std::vector<double> shifted = c.qd.angles;
        for (std::size_t j = 0; j < q; ++j) {
            shifted[j] = c.qd.angles[j] + std::numbers::pi / 2.0;
            const auto plus = qd_measure(shifted);
            shifted[j] = c.qd.angles[j] - std::numbers::pi / 2.0;
            const auto minus = qd_measure(shifted);
            shifted[j] = c.qd.angles[j];
            double acc = 0.0;
            for (std::size_t i = 0; i < q; ++i) acc += g_meas[i] * 0.5 * (plus[i] - minus[i]);
            g_angles[j] = acc;
        }

        const auto g_proj = nn::linear_backward(c.rule_flat, mp.qd.proj_weight.values, g_angles, cfg.m * cfg.d, q);
        accumulate(mp.qd.proj_weight, g_proj.weight);
        accumulate(mp.qd.proj_bias, g_proj.bias);

        // back through ReLU and the permutation into the conv layout [d][m]
        std::vector<double> g_pre(cfg.d * cfg.m, 0.0);
        for (std::size_t k = 0; k < cfg.d; ++k) {
            for (std::size_t i = 0; i < cfg.m; ++i) {
                if (c.rule_pre[k * cfg.m + i] > 0.0) g_pre[k * cfg.m + i] = g_proj.input[i * cfg.d + k];
            }
        }
        const auto g_conv = nn::conv1d_backward(c.rule_in, mp.rule.kernel.values, g_pre, cfg.d, cfg.d, cfg.m);
        accumulate(mp.rule.kernel, g_conv.weight);
        accumulate(mp.rule.bias, g_conv.bias);

        const std::size_t per_rule = cfg.layers * 3;
        for (std::size_t i = 0; i < cfg.m; ++i) {
            for (std::size_t k = 0; k < cfg.d; ++k) {
                const double g_mu = g_conv.input[k * cfg.m + i];
                if (g_mu == 0.0) continue;
                const auto qg = qmf_gradient(c.features[k], i, mp.qmf);
                for (std::size_t t = 0; t < per_rule; ++t) {
                    mp.qmf.biases.grad[i * per_rule + t] += g_mu * qg.d_bias[t];
                    mp.qmf.thetas.grad[i * per_rule + t] += g_mu * qg.d_theta[t];
                }
                g_features[k] += g_mu * qg.d_input;
            }
        }
    }

    const auto g_stem = nn::linear_backward(c.pool2.out, sp.stem_w.values, g_features, cfg.stem_flat(), cfg.d);
    accumulate(sp.stem_w, g_stem.weight);
    accumulate(sp.stem_b, g_stem.bias);
    const std::size_t s = cfg.image_size;
    const std::size_t s2 = s / 2;
    const auto g_act2 = nn::maxpool2x2_backward(c.pool2, g_stem.input, c.conv2_act.size());
    const auto g_pre2 = nn::relu_backward(c.conv2_pre, g_act2);
    const auto g_conv2 = nn::conv2d_backward(c.pool1.out, sp.conv2_w.values, g_pre2, kConv1Out, kConv2Out, s2, s2);
    accumulate(sp.conv2_w, g_conv2.weight);
    accumulate(sp.conv2_b, g_conv2.bias);
    const auto g_act1 = nn::maxpool2x2_backward(c.pool1, g_conv2.input, c.conv1_act.size());
    const auto g_pre1 = nn::relu_backward(c.conv1_pre, g_act1);
    const auto g_conv1 = nn::conv2d_backward(c.image, sp.conv1_w.values, g_pre1, 1, kConv1Out, s, s);
    accumulate(sp.conv1_w, g_conv1.weight);
    accumulate(sp.conv1_b, g_conv1.bias);
}

// ---- little-endian I/O ----

void put_u32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                   static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b.data(), 4);
}

void put_f64(std::ostream& os, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<char, 8> b{};
    for (std::size_t i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    os.write(b.data(), 8);
}

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw FormatError("checkpoint truncated in header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw FormatError("checkpoint truncated in tensor data");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("invalid model config: " + msg); };
    if (d < 1 || m < 1 || layers < 1) fail("d, m and layers must be at least 1");
    if (q < 3) fail("q must be at least 3 so one CNOT cluster exists");
    if (q > qsim::kMaxQubits) fail("q exceeds the simulator limit of " + std::to_string(qsim::kMaxQubits));
    const std::size_t split = head_split();
    if (split < 1 || split >= q) fail("head split p must satisfy 1 <= p < q");
    if (hidden < 1 || n_classes < 1) fail("hidden and n_classes must be at least 1");
    if (image_size < 4) fail("image_size must be at least 4");
}

std::vector<ParamTensor*> ModelParams::tensors() {
    return {&stem.conv1_w, &stem.conv1_b, &stem.conv2_w, &stem.conv2_b, &stem.stem_w,    &stem.stem_b,
            &qmf.biases,   &qmf.thetas,   &rule.kernel,  &rule.bias,    &qd.proj_weight, &qd.proj_bias,
            &qd.w1,        &qd.beta1,     &qd.w2,        &qd.beta2,     &stem.fc1_w,     &stem.fc1_b,
            &stem.fc2_w,   &stem.fc2_b};
}

std::vector<const ParamTensor*> ModelParams::tensors() const {
    auto mut = const_cast<ModelParams*>(this)->tensors();
    return {mut.begin(), mut.end()};
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += t->size();
    return n;
}

void ModelParams::zero_grad() {
    for (auto* t : tensors()) t->zero_grad();
}

ModelParams zero_params(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams mp;
    mp.config = cfg;
    mp.config.p = cfg.head_split();
    const std::size_t p = mp.config.p;
    mp.stem.conv1_w = ParamTensor("stem.conv1.weight", {kConv1Out, 1, 3, 3});
    mp.stem.conv1_b = ParamTensor("stem.conv1.bias", {kConv1Out});
    mp.stem.conv2_w = ParamTensor("stem.conv2.weight", {kConv2Out, kConv1Out, 3, 3});
    mp.stem.conv2_b = ParamTensor("stem.conv2.bias", {kConv2Out});
    mp.stem.stem_w = ParamTensor("stem.fc.weight", {cfg.stem_flat(), cfg.d});
    mp.stem.stem_b = ParamTensor("stem.fc.bias", {cfg.d});
    mp.qmf.m = cfg.m;
    mp.qmf.layers = cfg.layers;
    mp.qmf.biases = ParamTensor("qmf.bias", {cfg.m, cfg.layers, 3});
    mp.qmf.thetas = ParamTensor("qmf.theta", {cfg.m, cfg.layers, 3});
    mp.rule.kernel = ParamTensor("rule.kernel", {cfg.d, cfg.d, 3});
    mp.rule.bias = ParamTensor("rule.bias", {cfg.d});
    mp.qd.proj_weight = ParamTensor("qd.proj.weight", {cfg.m * cfg.d, cfg.q});
    mp.qd.proj_bias = ParamTensor("qd.proj.bias", {cfg.q});
    mp.qd.w1 = ParamTensor("qd.w1", {p});
    mp.qd.beta1 = ParamTensor("qd.beta1", {1});
    mp.qd.w2 = ParamTensor("qd.w2", {cfg.q - p});
    mp.qd.beta2 = ParamTensor("qd.beta2", {1});
    mp.stem.fc1_w = ParamTensor("clf.fc1.weight", {cfg.d + 1, cfg.hidden});
    mp.stem.fc1_b = ParamTensor("clf.fc1.bias", {cfg.hidden});
    mp.stem.fc2_w = ParamTensor("clf.fc2.weight", {cfg.hidden, cfg.n_classes});
    mp.stem.fc2_b = ParamTensor("clf.fc2.bias", {cfg.n_classes});
    return mp;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
    ModelParams mp = zero_params(cfg);
    std::mt19937_64 rng(seed);
    auto fill = [&rng](ParamTensor& t, double bound) {
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& v : t.values) v = dist(rng);
    };
    auto fan = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
    const std::size_t p = mp.config.head_split();

    fill(mp.stem.conv1_w, fan(9));
    fill(mp.stem.conv1_b, fan(9));
    fill(mp.stem.conv2_w, fan(kConv1Out * 9));
    fill(mp.stem.conv2_b, fan(kConv1Out * 9));
    fill(mp.stem.stem_w, fan(cfg.stem_flat()));
    fill(mp.stem.stem_b, fan(cfg.stem_flat()));
    fill(mp.qmf.biases, std::numbers::pi);
    fill(mp.qmf.thetas, std::numbers::pi);
    fill(mp.rule.kernel, fan(cfg.d * 3));
    fill(mp.rule.bias, fan(cfg.d * 3));
    fill(mp.qd.proj_weight, fan(cfg.m * cfg.d));
    fill(mp.qd.proj_bias, fan(cfg.m * cfg.d));
    fill(mp.qd.w1, fan(p));
    fill(mp.qd.beta1, fan(p));
    fill(mp.qd.w2, fan(cfg.q - p));
    fill(mp.qd.beta2, fan(cfg.q - p));
    fill(mp.stem.fc1_w, fan(cfg.d + 1));
    fill(mp.stem.fc1_b, fan(cfg.d + 1));
    fill(mp.stem.fc2_w, fan(cfg.hidden));
    fill(mp.stem.fc2_b, fan(cfg.hidden));
    return mp;
}

// ---- QMF ----

qsim::Circuit build_qmf_circuit(double x, std::size_t rule, const QmfParams& params) {
    if (!std::isfinite(x)) throw std::invalid_argument("QMF input must be finite");
    if (rule >= params.m) throw std::out_of_range("membership rule index out of range");
    qsim::Circuit c;
    c.n_qubits = 1;
    c.ops.reserve(params.layers * 6);
    for (std::size_t l = 0; l < params.layers; ++l) {
        for (std::size_t a = 0; a < 3; ++a) c.ops.push_back(qsim::Op::rot(kAxes[a], 0, x + params.bias(rule, l, a)));
        for (std::size_t a = 0; a < 3; ++a) c.ops.push_back(qsim::Op::rot(kAxes[a], 0, params.theta(rule, l, a)));
    }
    return c;
}

double qmf_membership(double x, std::size_t rule, const QmfParams& params) {
    const auto state = qsim::simulate(build_qmf_circuit(x, rule, params));
    return 0.5 * (qsim::expectation_z(state, 0) + 1.0);
}

Tensor qmf_forward(const Tensor& features, const QmfParams& params) {
    require_shape(features, 2, "qmf_forward features");
    const std::size_t batch = features.dim(0);
    const std::size_t d = features.dim(1);
    Tensor out({batch, params.m, d});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < params.m; ++i) {
            for (std::size_t k = 0; k < d; ++k) out(b, i, k) = qmf_membership(features(b, k), i, params);
        }
    }
    return out;
}

std::vector<qsim::Circuit> qmf_circuits(std::span<const double> features, const QmfParams& params) {
    std::vector<qsim::Circuit> out;
    out.reserve(params.m * features.size());
    for (std::size_t i = 0; i < params.m; ++i) {
        for (double x : features) out.push_back(build_qmf_circuit(x, i, params));
    }
    return out;
}

QmfGradient qmf_gradient(double x, std::size_t rule, const QmfParams& params) {
    const qsim::Circuit circuit = build_qmf_circuit(x, rule, params);
    const std::size_t n = circuit.ops.size();

    // prefix[j] is the state before gate j
    std::vector<std::array<cplx, 2>> prefix(n + 1);
    prefix[0] = {1.0, 0.0};
    std::vector<Mat2> gates(n);
    for (std::size_t j = 0; j < n; ++j) {
        gates[j] = qsim::rotation_gate(circuit.ops[j].axis, circuit.ops[j].angle);
        const auto& s = prefix[j];
        prefix[j + 1] = {gates[j](0, 0) * s[0] + gates[j](0, 1) * s[1], gates[j](1, 0) * s[0] + gates[j](1, 1) * s[1]};
    }
    // observable[j] is Z pulled back through every gate after j
    std::vector<Mat2> observable(n);
    Mat2 obs = qsim::pauli_z();
    for (std::size_t j = n; j-- > 0;) {
        observable[j] = obs;
        obs = gates[j].adjoint() * obs * gates[j];
    }
    auto expect = [](const Mat2& o, const std::array<cplx, 2>& v) {
        const cplx a = o(0, 0) * v[0] + o(0, 1) * v[1];
        const cplx b = o(1, 0) * v[0] + o(1, 1) * v[1];
        return (std::conj(v[0]) * a + std::conj(v[1]) * b).real();
    };
    auto shifted = [&](std::size_t j, double delta) {
        const Mat2 g = qsim::rotation_gate(circuit.ops[j].axis, circuit.ops[j].angle + delta);
        const auto& s = prefix[j];
        const std::array<cplx, 2> v = {g(0, 0) * s[0] + g(0, 1) * s[1], g(1, 0) * s[0] + g(1, 1) * s[1]};
        return expect(observable[j], v);
    };

    QmfGradient res;
    res.membership = 0.5 * (expect(qsim::pauli_z(), prefix[n]) + 1.0);
    res.d_bias.assign(params.layers * 3, 0.0);
    res.d_theta.assign(params.layers * 3, 0.0);
    constexpr double shift = std::numbers::pi / 2.0;
    for (std::size_t l = 0; l < params.layers; ++l) {
        for (std::size_t a = 0; a < 6; ++a) {
            const std::size_t j = l * 6 + a;
            // dmu = d<Z>/2, and d<Z> = (f(+) - f(-)) / 2
            const double g = 0.25 * (shifted(j, shift) - shifted(j, -shift));
            if (a < 3) {
                res.d_bias[l * 3 + a] = g;
                res.d_input += g;
            } else {
                res.d_theta[l * 3 + (a - 3)] = g;
            }
        }
    }
    return res;
}

// ---- rule layer ----

Tensor rule_preactivation(const Tensor& memberships, const RuleParams& params) {
    require_shape(memberships, 3, "rule layer input");
    const std::size_t batch = memberships.dim(0);
    const std::size_t m = memberships.dim(1);
    const std::size_t d = memberships.dim(2);
    if (m < 1) throw std::invalid_argument("rule layer needs at least one membership function");
    Tensor out({batch, d, m});
    std::vector<double> permuted(d * m);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < d; ++k) permuted[k * m + i] = memberships(b, i, k);
        }
        const auto y = nn::conv1d_forward(permuted, params.kernel.values, params.bias.values, d, d, m);
        std::copy(y.begin(), y.end(), out.slice(b).begin());
    }
    return out;
}

Tensor rule_forward(const Tensor& memberships, const RuleParams& params) {
    const Tensor pre = rule_preactivation(memberships, params);
    const std::size_t batch = pre.dim(0);
    const std::size_t d = pre.dim(1);
    const std::size_t m = pre.dim(2);
    Tensor out({batch, m, d});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t k = 0; k < d; ++k) {
            for (std::size_t i = 0; i < m; ++i) out(b, i, k) = std::max(pre(b, k, i), 0.0);
        }
    }
    return out;
}

// ---- QD ----

qsim::Circuit build_qd_circuit(std::span<const double> angles) {
    qsim::Circuit c;
    c.n_qubits = angles.size();
    for (std::size_t i = 0; i < angles.size(); ++i) c.ops.push_back(qsim::Op::rot(Axis::X, i, angles[i]));
    qsim::append_cluster_cnots(c, angles.size());
    return c;
}

std::vector<double> qd_measure(std::span<const double> angles) {
    const auto state = qsim::simulate(build_qd_circuit(angles));
    std::vector<double> m(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) m[i] = 0.5 * (qsim::expectation_z(state, i) + 1.0);
    return m;
}

QdSample qd_sample(std::span<const double> rule_flat, const QdParams& params, const ModelConfig& cfg) {
    if (cfg.q < 3) throw std::invalid_argument("defuzzifier needs q >= 3 for a full CNOT cluster");
    QdSample s;
    s.angles = nn::linear_forward(rule_flat, params.proj_weight.values, params.proj_bias.values, cfg.m * cfg.d, cfg.q);
    s.measurements = qd_measure(s.angles);
    const std::size_t p = cfg.head_split();
    double y1 = params.beta1.values[0];
    double y2 = params.beta2.values[0];
    for (std::size_t i = 0; i < p; ++i) y1 += s.measurements[i] * params.w1.values[i];
    for (std::size_t i = p; i < cfg.q; ++i) y2 += s.measurements[i] * params.w2.values[i - p];
    s.crisp = 0.5 * (y1 + y2);
    return s;
}

std::vector<double> qd_forward(const Tensor& rules, const QdParams& params, const ModelConfig& cfg) {
    require_shape(rules, 3, "defuzzifier input");
    if (cfg.q < 3) throw std::invalid_argument("defuzzifier needs q >= 3 for a full CNOT cluster");
    std::vector<double> out(rules.dim(0));
    for (std::size_t b = 0; b < rules.dim(0); ++b) out[b] = qd_sample(rules.slice(b), params, cfg).crisp;
    return out;
}

// ---- stem / model ----

Tensor stem_forward(const Tensor& images, const StemClassifierParams& params, const ModelConfig& cfg) {
    const std::size_t s = cfg.image_size;
    if (images.rank() != 4 || images.dim(1) != 1 || images.dim(2) != s || images.dim(3) != s) {
        throw std::invalid_argument("stem expects images shaped [B][1][" + std::to_string(s) + "][" +
                                    std::to_string(s) + "]");
    }
    Tensor out({images.dim(0), cfg.d});
    SampleCache cache;
    for (std::size_t b = 0; b < images.dim(0); ++b) {
        const auto v = stem_sample(images.slice(b), params, cfg, cache);
        std::copy(v.begin(), v.end(), out.slice(b).begin());
    }
    return out;
}

Tensor model_forward(const Tensor& images, const ModelParams& params) {
    const ModelConfig& cfg = params.config;
    const std::size_t s = cfg.image_size;
    if (images.rank() != 4 || images.dim(1) != 1 || images.dim(2) != s || images.dim(3) != s) {
        throw std::invalid_argument("model expects images shaped [B][1][" + std::to_string(s) + "][" +
                                    std::to_string(s) + "]");
    }
    Tensor logits({images.dim(0), cfg.n_classes});
    SampleCache cache;
    for (std::size_t b = 0; b < images.dim(0); ++b) {
        const auto z = forward_sample(images.slice(b), params, cache);
        std::copy(z.begin(), z.end(), logits.slice(b).begin());
    }
    return logits;
}

LossAndGrad model_loss_and_grad(ModelParams& params, const Tensor& images, std::span<const std::size_t> labels) {
    const ModelConfig& cfg = params.config;
    const std::size_t batch = images.rank() == 4 ? images.dim(0) : 0;
    if (batch == 0 || labels.size() != batch) {
        throw std::invalid_argument("batch images and labels must be non-empty and of equal length");
    }
    const std::size_t s = cfg.image_size;
    if (images.dim(1) != 1 || images.dim(2) != s || images.dim(3) != s) {
        throw std::invalid_argument("model expects images shaped [B][1][" + std::to_string(s) + "][" +
                                    std::to_string(s) + "]");
    }
    params.zero_grad();
    LossAndGrad res;
    res.logits = Tensor({batch, cfg.n_classes});
    const double inv_b = 1.0 / static_cast<double>(batch);
    SampleCache cache;
    for (std::size_t b = 0; b < batch; ++b) {
        const auto z = forward_sample(images.slice(b), params, cache);
        std::copy(z.begin(), z.end(), res.logits.slice(b).begin());
        auto ce = nn::softmax_cross_entropy(z, labels.subspan(b, 1), cfg.n_classes);
        res.loss += ce.loss * inv_b;
        for (auto& g : ce.grad_logits) g *= inv_b;
        backward_sample(params, cache, ce.grad_logits);
    }
    return res;
}

// ---- checkpoint ----

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    os.write("HQFN", 4);
    put_u32(os, kCheckpointVersion);
    const ModelConfig& c = params.config;
    for (std::size_t v : {c.d, c.m, c.layers, c.q, c.head_split(), c.hidden, c.n_classes, c.image_size}) {
        put_u32(os, static_cast<std::uint32_t>(v));
    }
    for (const auto* t : params.tensors()) {
        for (double v : t->values) put_f64(os, v);
    }
    if (!os) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "HQFN", 4) != 0) {
        throw FormatError("not an HQFN checkpoint: " + path.string());
    }
    const std::uint32_t version = get_u32(is);
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    ModelConfig cfg;
    cfg.d = get_u32(is);
    cfg.m = get_u32(is);
    cfg.layers = get_u32(is);
    cfg.q = get_u32(is);
    cfg.p = get_u32(is);
    cfg.hidden = get_u32(is);
    cfg.n_classes = get_u32(is);
    cfg.image_size = get_u32(is);
    ModelParams mp;
    try {
        mp = zero_params(cfg);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("checkpoint carries an invalid config: ") + e.what());
    }
    for (auto* t : mp.tensors()) {
        for (auto& v : t->values) {
            v = get_f64(is);
            if (!std::isfinite(v)) throw FormatError("checkpoint tensor " + t->name + " holds a non-finite value");
        }
    }
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint tensors");
    return mp;
}

}  // namespace hqfnn

#include "hqfnn/qsim.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hqfnn::qsim {

namespace {

using namespace std::complex_literals;

void check_qubit(std::size_t qubit, std::size_t n_qubits) {
    if (qubit >= n_qubits) {
        throw std::out_of_range("qubit index " + std::to_string(qubit) + " out of range for " +
                                std::to_string(n_qubits) + "-qubit register");
    }
}

void check_pair(std::size_t control, std::size_t target, std::size_t n_qubits) {
    check_qubit(control, n_qubits);
    check_qubit(target, n_qubits);
    if (control == target) {
        throw std::invalid_argument("CNOT control and target must differ");
    }
}

Eigen::MatrixXcd to_eigen(const DensityMatrix& rho) {
    Eigen::MatrixXcd out(rho.dim, rho.dim);
    for (std::size_t r = 0; r < rho.dim; ++r) {
        for (std::size_t c = 0; c < rho.dim; ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rho(r, c);
        }
    }
    return out;
}

constexpr double kSupportTol = 1e-12;

struct Support {
    Eigen::MatrixXcd vectors;  // columns span the support
    Eigen::VectorXd weights;   // matching eigenvalues, all above kSupportTol
};

// Eigenvectors with eigenvalues above round-off; the rest is treated as exactly 0.
Support psd_support(const Eigen::MatrixXcd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    const Eigen::VectorXd& ev = solver.eigenvalues();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > kSupportTol) keep.push_back(i);
    }
    Support s;
    s.vectors.resize(h.rows(), static_cast<Eigen::Index>(keep.size()));
    s.weights.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        s.vectors.col(static_cast<Eigen::Index>(k)) = solver.eigenvectors().col(keep[k]);
        s.weights(static_cast<Eigen::Index>(k)) = ev(keep[k]);
    }
    return s;
}

}  // namespace

Mat2 Mat2::identity() {
    Mat2 out;
    out(0, 0) = 1.0;
    out(1, 1) = 1.0;
    return out;
}

Mat2 Mat2::operator*(const Mat2& rhs) const {
    Mat2 out;
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) {
            out(r, c) = (*this)(r, 0) * rhs(0, c) + (*this)(r, 1) * rhs(1, c);
        }
    }
    return out;
}

Mat2 Mat2::operator*(double s) const {
    Mat2 out = *this;
    for (auto& v : out.m) v *= s;
    return out;
}

Mat2 Mat2::operator+(const Mat2& rhs) const {
    Mat2 out = *this;
    for (std::size_t i = 0; i < 4; ++i) out.m[i] += rhs.m[i];
    return out;
}

Mat2 Mat2::adjoint() const {
    Mat2 out;
    out(0, 0) = std::conj((*this)(0, 0));
    out(0, 1) = std::conj((*this)(1, 0));
    out(1, 0) = std::conj((*this)(0, 1));
    out(1, 1) = std::conj((*this)(1, 1));
    return out;
}

PureState PureState::zero(std::size_t n_qubits) {
    if (n_qubits == 0 || n_qubits > kMaxQubits) {
        throw std::invalid_argument("register size must be in [1, " + std::to_string(kMaxQubits) + "]");
    }
    PureState s;
    s.n_qubits = n_qubits;
    s.amplitudes.assign(std::size_t{1} << n_qubits, cplx{0.0, 0.0});
    s.amplitudes[0] = 1.0;
    return s;
}

double PureState::norm_squared() const {
    double acc = 0.0;
    for (const auto& a : amplitudes) acc += std::norm(a);
    return acc;
}

cplx DensityMatrix::trace() const {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) acc += (*this)(i, i);
    return acc;
}

std::string channel_name(ChannelKind kind) {
    switch (kind) {
        case ChannelKind::AmplitudeDamping: return "AD";
        case ChannelKind::Depolarizing: return "DP";
        case ChannelKind::BitFlip: return "BF";
        case ChannelKind::PhaseFlip: return "PF";
    }
    return "?";
}

ChannelKind parse_channel(const std::string& tag) {
    if (tag == "AD") return ChannelKind::AmplitudeDamping;
    if (tag == "DP") return ChannelKind::Depolarizing;
    if (tag == "BF") return ChannelKind::BitFlip;
    if (tag == "PF") return ChannelKind::PhaseFlip;
    throw std::invalid_argument("unknown noise channel '" + tag + "' (expected AD, DP, BF or PF)");
}

Mat2 rotation_gate(Axis axis, double angle) {
    if (!std::isfinite(angle)) {
        throw std::invalid_argument("rotation angle must be finite");
    }
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    Mat2 g;
    switch (axis) {
        case Axis::X:
            g(0, 0) = c;
            g(0, 1) = -1i * s;
            g(1, 0) = -1i * s;
            g(1, 1) = c;
            break;
        case Axis::Y:
            g(0, 0) = c;
            g(0, 1) = -s;
            g(1, 0) = s;
            g(1, 1) = c;
            break;
        case Axis::Z:
            g(0, 0) = std::polar(1.0, -angle / 2.0);
            g(1, 1) = std::polar(1.0, angle / 2.0);
            break;
    }
    return g;
}

Mat2 pauli_x() {
    Mat2 g;
    g(0, 1) = 1.0;
    g(1, 0) = 1.0;
    return g;
}

Mat2 pauli_y() {
    Mat2 g;
    g(0, 1) = -1i;
    g(1, 0) = 1i;
    return g;
}

Mat2 pauli_z() {
    Mat2 g;
    g(0, 0) = 1.0;
    g(1, 1) = -1.0;
    return g;
}

double unitarity_error(const Mat2& u) {
    const Mat2 p = u.adjoint() * u;
    const Mat2 id = Mat2::identity();
    double err = 0.0;
    for (std::size_t i = 0; i < 4; ++i) err = std::max(err, std::abs(p.m[i] - id.m[i]));
    return err;
}

void apply_one_qubit_inplace(PureState& state, std::size_t qubit, const Mat2& gate) {
    check_qubit(qubit, state.n_qubits);
    const std::size_t stride = std::size_t{1} << qubit;
    auto& a = state.amplitudes;
    for (std::size_t base = 0; base < a.size(); base += 2 * stride) {
        for (std::size_t off = 0; off < stride; ++off) {
            const std::size_t i0 = base + off;
            const std::size_t i1 = i0 + stride;
            const cplx a0 = a[i0];
            const cplx a1 = a[i1];
            a[i0] = gate(0, 0) * a0 + gate(0, 1) * a1;
            a[i1] = gate(1, 0) * a0 + gate(1, 1) * a1;
        }
    }
}

PureState apply_one_qubit(const PureState& state, std::size_t qubit, const Mat2& gate) {
    PureState out = state;
    apply_one_qubit_inplace(out, qubit, gate);
    return out;
}

void apply_cnot_inplace(PureState& state, std::size_t control, std::size_t target) {
    check_pair(control, target, state.n_qubits);
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t tmask = std::size_t{1} << target;
    auto& a = state.amplitudes;
    for (std::size_t i = 0; i < a.size(); ++i) {
        // visit each swapped pair once, from its target-bit-0 member
        if ((i & cmask) && !(i & tmask)) std::swap(a[i], a[i | tmask]);
    }
}

PureState apply_cnot(const PureState& state, std::size_t control, std::size_t target) {
    PureState out = state;
    apply_cnot_inplace(out, control, target);
    return out;
}

double expectation_z(const PureState& state, std::size_t qubit) {
    check_qubit(qubit, state.n_qubits);
    const std::size_t mask = std::size_t{1} << qubit;
    double acc = 0.0;
    for (std::size_t i = 0; i < state.amplitudes.size(); ++i) {
        const double p = std::norm(state.amplitudes[i]);
        acc += (i & mask) ? -p : p;
    }
    return acc;
}

DensityMatrix pure_to_density(const PureState& state) {
    DensityMatrix rho;
    rho.n_qubits = state.n_qubits;
    rho.dim = state.dim();
    rho.entries.resize(rho.dim * rho.dim);
    for (std::size_t r = 0; r < rho.dim; ++r) {
        for (std::size_t c = 0; c < rho.dim; ++c) {
            rho(r, c) = state.amplitudes[r] * std::conj(state.amplitudes[c]);
        }
    }
    return rho;
}

void apply_unitary_inplace(DensityMatrix& rho, std::size_t qubit, const Mat2& gate) {
    check_qubit(qubit, rho.n_qubits);
    const std::size_t stride = std::size_t{1} << qubit;
    const std::size_t dim = rho.dim;
    // left multiply: columns are independent vectors
    for (std::size_t c = 0; c < dim; ++c) {
        for (std::size_t base = 0; base < dim; base += 2 * stride) {
            for (std::size_t off = 0; off < stride; ++off) {
                const std::size_t r0 = base + off;
                const std::size_t r1 = r0 + stride;
                const cplx a0 = rho(r0, c);
                const cplx a1 = rho(r1, c);
                rho(r0, c) = gate(0, 0) * a0 + gate(0, 1) * a1;
                rho(r1, c) = gate(1, 0) * a0 + gate(1, 1) * a1;
            }
        }
    }
    // right multiply by U^dagger
    const Mat2 g = gate;
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t base = 0; base < dim; base += 2 * stride) {
            for (std::size_t off = 0; off < stride; ++off) {
                const std::size_t c0 = base + off;
                const std::size_t c1 = c0 + stride;
                const cplx a0 = rho(r, c0);
                const cplx a1 = rho(r, c1);
                rho(r, c0) = a0 * std::conj(g(0, 0)) + a1 * std::conj(g(0, 1));
                rho(r, c1) = a0 * std::conj(g(1, 0)) + a1 * std::conj(g(1, 1));
            }
        }
    }
}

void apply_cnot_inplace(DensityMatrix& rho, std::size_t control, std::size_t target) {
    check_pair(control, target, rho.n_qubits);
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t tmask = std::size_t{1} << target;
    auto perm = [&](std::size_t i) { return (i & cmask) ? (i ^ tmask) : i; };
    DensityMatrix out = rho;
    for (std::size_t r = 0; r < rho.dim; ++r) {
        for (std::size_t c = 0; c < rho.dim; ++c) {
            out(perm(r), perm(c)) = rho(r, c);
        }
    }
    rho = std::move(out);
}

NoiseChannel make_channel(ChannelKind kind, double probability) {
    if (!(probability >= 0.0 && probability <= 1.0)) {
        throw std::invalid_argument("noise probability must lie in [0, 1]");
    }
    const double p = probability;
    NoiseChannel ch;
    ch.kind = kind;
    ch.probability = p;
    const Mat2 id = Mat2::identity();
    switch (kind) {
        case ChannelKind::AmplitudeDamping: {
            Mat2 k0;
            k0(0, 0) = 1.0;
            k0(1, 1) = std::sqrt(1.0 - p);
            Mat2 k1;
            k1(0, 1) = std::sqrt(p);
            ch.kraus_ops = {k0, k1};
            break;
        }
        case ChannelKind::Depolarizing: {
            const double w = std::sqrt(p / 4.0);
            ch.kraus_ops = {id * std::sqrt(1.0 - 3.0 * p / 4.0), pauli_x() * w, pauli_y() * w, pauli_z() * w};
            break;
        }
        case ChannelKind::BitFlip:
            ch.kraus_ops = {id * std::sqrt(1.0 - p), pauli_x() * std::sqrt(p)};
            break;
        case ChannelKind::PhaseFlip:
            ch.kraus_ops = {id * std::sqrt(1.0 - p), pauli_z() * std::sqrt(p)};
            break;
    }
    return ch;
}

double completeness_error(const NoiseChannel& channel) {
    Mat2 acc;
    for (const auto& k : channel.kraus_ops) acc = acc + k.adjoint() * k;
    const Mat2 id = Mat2::identity();
    double err = 0.0;
    for (std::size_t i = 0; i < 4; ++i) err = std::max(err, std::abs(acc.m[i] - id.m[i]));
    return err;
}

void apply_channel_inplace(DensityMatrix& rho, std::size_t qubit, const NoiseChannel& channel) {
    check_qubit(qubit, rho.n_qubits);
    DensityMatrix acc;
    acc.n_qubits = rho.n_qubits;
    acc.dim = rho.dim;
    acc.entries.assign(rho.entries.size(), cplx{0.0, 0.0});
    for (const auto& k : channel.kraus_ops) {
        DensityMatrix term = rho;
        apply_unitary_inplace(term, qubit, k);  // K rho K^dagger; unitarity not required
        for (std::size_t i = 0; i < acc.entries.size(); ++i) acc.entries[i] += term.entries[i];
    }
    rho = std::move(acc);
}

DensityMatrix apply_channel(const DensityMatrix& rho, std::size_t qubit, const NoiseChannel& channel) {
    DensityMatrix out = rho;
    apply_channel_inplace(out, qubit, channel);
    return out;
}

double state_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim != sigma.dim) {
        throw std::invalid_argument("fidelity requires density matrices of equal dimension");
    }
    // F is symmetric; restricting to the support of the lower-rank argument
    // keeps round-off eigenvalues out of the square roots.
    Support sa = psd_support(to_eigen(rho));
    Support sb = psd_support(to_eigen(sigma));
    const bool swap = sb.weights.size() < sa.weights.size();
    const Support& sup = swap ? sb : sa;
    const Eigen::MatrixXcd other = to_eigen(swap ? rho : sigma);
    if (sup.weights.size() == 0) return 0.0;
    const Eigen::VectorXd root = sup.weights.cwiseSqrt();
    Eigen::MatrixXcd inner = root.asDiagonal() * (sup.vectors.adjoint() * other * sup.vectors) * root.asDiagonal();
    inner = 0.5 * (inner + inner.adjoint());  // restore exact Hermiticity
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(inner, Eigen::EigenvaluesOnly);
    double tr = 0.0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        tr += std::sqrt(std::max(solver.eigenvalues()(i), 0.0));
    }
    return std::clamp(tr * tr, 0.0, 1.0);
}

double pure_fidelity(const PureState& a, const PureState& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("fidelity requires states of equal dimension");
    }
    cplx acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) acc += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    return std::norm(acc);
}

double overlap_expectation(const PureState& psi, const DensityMatrix& sigma) {
    if (psi.dim() != sigma.dim) {
        throw std::invalid_argument("state and density matrix dimensions differ");
    }
    cplx acc = 0.0;
    for (std::size_t r = 0; r < sigma.dim; ++r) {
        cplx row = 0.0;
        for (std::size_t c = 0; c < sigma.dim; ++c) row += sigma(r, c) * psi.amplitudes[c];
        acc += std::conj(psi.amplitudes[r]) * row;
    }
    return acc.real();
}

Mat2 single_qubit_reduced(const PureState& state, std::size_t qubit) {
    check_qubit(qubit, state.n_qubits);
    const std::size_t mask = std::size_t{1} << qubit;
    Mat2 rho;
    const auto& a = state.amplitudes;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i & mask) continue;
        const cplx a0 = a[i];
        const cplx a1 = a[i | mask];
        rho(0, 0) += a0 * std::conj(a0);
        rho(0, 1) += a0 * std::conj(a1);
        rho(1, 0) += a1 * std::conj(a0);
        rho(1, 1) += a1 * std::conj(a1);
    }
    return rho;
}

double meyer_wallach(const PureState& state) {
    if (state.n_qubits < 2) {
        throw std::invalid_argument("Meyer-Wallach measure needs at least two qubits");
    }
    double purity_sum = 0.0;
    for (std::size_t k = 0; k < state.n_qubits; ++k) {
        const Mat2 r = single_qubit_reduced(state, k);
        // Tr rho^2 for Hermitian rho = sum |r_ij|^2
        double purity = 0.0;
        for (const auto& v : r.m) purity += std::norm(v);
        purity_sum += purity;
    }
    const double q = 2.0 * (1.0 - purity_sum / static_cast<double>(state.n_qubits));
    return std::clamp(q, 0.0, 1.0);
}

}  // namespace hqfnn::qsim

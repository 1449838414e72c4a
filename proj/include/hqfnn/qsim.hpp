#pragma once

// Dense statevector / density-matrix simulator for small registers.
//
// Qubit 0 is the least significant bit of the basis index: amplitude index
// b = sum_k bit_k << k. All routines are pure functions of their inputs.

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace hqfnn::qsim {

using cplx = std::complex<double>;

inline constexpr std::size_t kMaxQubits = 12;

enum class Axis { X, Y, Z };

/// 2x2 row-major matrix. Not necessarily unitary (Kraus operators reuse it).
struct Mat2 {
    std::array<cplx, 4> m{};

    cplx& operator()(std::size_t r, std::size_t c) { return m[2 * r + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return m[2 * r + c]; }

    static Mat2 identity();
    Mat2 operator*(const Mat2& rhs) const;
    Mat2 operator*(double s) const;
    Mat2 operator+(const Mat2& rhs) const;
    Mat2 adjoint() const;
};

struct PureState {
    std::size_t n_qubits = 0;
    std::vector<cplx> amplitudes;

    /// |0...0> on n qubits.
    static PureState zero(std::size_t n_qubits);
    std::size_t dim() const { return amplitudes.size(); }
    double norm_squared() const;
};

struct DensityMatrix {
    std::size_t n_qubits = 0;
    std::size_t dim = 0;
    std::vector<cplx> entries;  // row-major dim x dim

    cplx& operator()(std::size_t r, std::size_t c) { return entries[r * dim + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return entries[r * dim + c]; }

    cplx trace() const;
};

enum class ChannelKind { AmplitudeDamping, Depolarizing, BitFlip, PhaseFlip };

struct NoiseChannel {
    ChannelKind kind = ChannelKind::Depolarizing;
    double probability = 0.0;
    std::vector<Mat2> kraus_ops;
};

/// Short tag used in CSV/JSON output: AD, DP, BF, PF.
std::string channel_name(ChannelKind kind);
/// Inverse of channel_name; throws std::invalid_argument on unknown tags.
ChannelKind parse_channel(const std::string& tag);

Mat2 rotation_gate(Axis axis, double angle);
Mat2 pauli_x();
Mat2 pauli_y();
Mat2 pauli_z();

/// Max-norm of U^dagger U - I.
double unitarity_error(const Mat2& u);

PureState apply_one_qubit(const PureState& state, std::size_t qubit, const Mat2& gate);
void apply_one_qubit_inplace(PureState& state, std::size_t qubit, const Mat2& gate);

PureState apply_cnot(const PureState& state, std::size_t control, std::size_t target);
void apply_cnot_inplace(PureState& state, std::size_t control, std::size_t target);

double expectation_z(const PureState& state, std::size_t qubit);

DensityMatrix pure_to_density(const PureState& state);

/// rho -> U rho U^dagger on one qubit.
void apply_unitary_inplace(DensityMatrix& rho, std::size_t qubit, const Mat2& gate);
/// rho -> U rho U^dagger for CNOT (a basis permutation).
void apply_cnot_inplace(DensityMatrix& rho, std::size_t control, std::size_t target);

NoiseChannel make_channel(ChannelKind kind, double probability);

/// Max-norm of sum_i K_i^dagger K_i - I.
double completeness_error(const NoiseChannel& channel);

DensityMatrix apply_channel(const DensityMatrix& rho, std::size_t qubit, const NoiseChannel& channel);
void apply_channel_inplace(DensityMatrix& rho, std::size_t qubit, const NoiseChannel& channel);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clamped to [0, 1].
double state_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// |<a|b>|^2 for pure states of equal dimension.
double pure_fidelity(const PureState& a, const PureState& b);

/// <psi| sigma |psi>.
double overlap_expectation(const PureState& psi, const DensityMatrix& sigma);

/// 2x2 reduced density matrix of one qubit of a pure state.
Mat2 single_qubit_reduced(const PureState& state, std::size_t qubit);

/// Q = 2 (1 - mean_k Tr rho_k^2).
double meyer_wallach(const PureState& state);

}  // namespace hqfnn::qsim

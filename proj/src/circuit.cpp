#include "hqfnn/circuit.hpp"

#include <algorithm>

namespace hqfnn::qsim {

std::size_t Circuit::single_qubit_gate_count() const {
    return static_cast<std::size_t>(
        std::count_if(ops.begin(), ops.end(), [](const Op& op) { return op.kind == Op::Kind::Rotation; }));
}

std::size_t Circuit::cnot_count() const {
    return ops.size() - single_qubit_gate_count();
}

PureState simulate(const Circuit& circuit, PureState state) {
    for (const auto& op : circuit.ops) {
        if (op.kind == Op::Kind::Rotation) {
            apply_one_qubit_inplace(state, op.qubit, rotation_gate(op.axis, op.angle));
        } else {
            apply_cnot_inplace(state, op.qubit, op.target);
        }
    }
    return state;
}

PureState simulate(const Circuit& circuit) {
    return simulate(circuit, PureState::zero(circuit.n_qubits));
}

DensityMatrix simulate_noisy(const Circuit& circuit, const NoiseChannel& channel) {
    DensityMatrix rho = pure_to_density(PureState::zero(circuit.n_qubits));
    for (const auto& op : circuit.ops) {
        if (op.kind == Op::Kind::Rotation) {
            apply_unitary_inplace(rho, op.qubit, rotation_gate(op.axis, op.angle));
            apply_channel_inplace(rho, op.qubit, channel);
        } else {
            apply_cnot_inplace(rho, op.qubit, op.target);
        }
    }
    return rho;
}

void append_cluster_cnots(Circuit& circuit, std::size_t q) {
    const std::size_t clusters = q / 3;
    for (std::size_t j = 0; j < clusters; ++j) {
        const std::size_t a = 3 * j;
        circuit.ops.push_back(Op::cnot(a, a + 1));
        circuit.ops.push_back(Op::cnot(a + 1, a + 2));
        circuit.ops.push_back(Op::cnot(a + 2, a));
    }
    if (clusters >= 1) {
        circuit.ops.push_back(Op::cnot(3 * clusters - 1, 0));
    }
}

}  // namespace hqfnn::qsim

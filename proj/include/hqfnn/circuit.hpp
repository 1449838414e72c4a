#pragma once

// Instantiated gate lists. The model's quantum stages build one of these per
// evaluation, which lets gate counts be read off real circuits and lets the
// same description drive ideal and noisy simulation.

#include "hqfnn/qsim.hpp"

#include <cstddef>
#include <vector>

namespace hqfnn::qsim {

struct Op {
    enum class Kind { Rotation, Cnot };
    Kind kind = Kind::Rotation;
    Axis axis = Axis::X;
    std::size_t qubit = 0;   // rotation target, or CNOT control
    std::size_t target = 0;  // CNOT target
    double angle = 0.0;

    static Op rot(Axis axis, std::size_t qubit, double angle) {
        return Op{Kind::Rotation, axis, qubit, 0, angle};
    }
    static Op cnot(std::size_t control, std::size_t target) {
        return Op{Kind::Cnot, Axis::X, control, target, 0.0};
    }
};

struct Circuit {
    std::size_t n_qubits = 1;
    std::vector<Op> ops;

    std::size_t single_qubit_gate_count() const;
    std::size_t cnot_count() const;
};

PureState simulate(const Circuit& circuit);
PureState simulate(const Circuit& circuit, PureState initial);

/// Density-matrix run with `channel` applied to the target qubit immediately
/// after every single-qubit gate. CNOTs are noiseless.
DensityMatrix simulate_noisy(const Circuit& circuit, const NoiseChannel& channel);

/// Clustered CNOT template on q wires: CNOT(3j->3j+1), CNOT(3j+1->3j+2),
/// CNOT(3j+2->3j) for every full triple, then CNOT(last wire of the final full
/// triple -> 0) when at least one triple exists. Leftover wires get nothing.
void append_cluster_cnots(Circuit& circuit, std::size_t q);

}  // namespace hqfnn::qsim

#include "catch_amalgamated.hpp"

#include "hqfnn/circuit.hpp"
#include "hqfnn/qsim.hpp"
#include "oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace hqfnn::qsim;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx I(0.0, 1.0);

PureState from_amplitudes(std::vector<cplx> amps) {
    PureState s;
    while ((std::size_t{1} << s.n_qubits) < amps.size()) ++s.n_qubits;
    s.amplitudes = std::move(amps);
    return s;
}

double max_abs_diff(const Mat2& a, const Mat2& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < 4; ++i) m = std::max(m, std::abs(a.m[i] - b.m[i]));
    return m;
}

double max_abs_diff(const DensityMatrix& a, const DensityMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.entries.size(); ++i) m = std::max(m, std::abs(a.entries[i] - b.entries[i]));
    return m;
}

DensityMatrix random_density(std::size_t n_qubits, std::mt19937_64& rng) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    std::normal_distribution<double> g;
    std::vector<cplx> a(dim * dim);
    for (auto& x : a) x = {g(rng), g(rng)};
    DensityMatrix rho;
    rho.n_qubits = n_qubits;
    rho.dim = dim;
    rho.entries.assign(dim * dim, 0.0);
    double tr = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            for (std::size_t k = 0; k < dim; ++k) rho(i, j) += a[i * dim + k] * std::conj(a[j * dim + k]);
        }
    for (std::size_t i = 0; i < dim; ++i) tr += rho(i, i).real();
    for (auto& x : rho.entries) x /= tr;
    return rho;
}

/// Kraus sum on a single-qubit density matrix, written out directly.
DensityMatrix kraus_sum_1q(const DensityMatrix& rho, const NoiseChannel& ch) {
    DensityMatrix out = rho;
    std::fill(out.entries.begin(), out.entries.end(), cplx{});
    for (const auto& k : ch.kraus_ops)
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                for (std::size_t a = 0; a < 2; ++a)
                    for (std::size_t b = 0; b < 2; ++b) out(i, j) += k(i, a) * rho(a, b) * std::conj(k(j, b));
    return out;
}

}  // namespace

TEST_CASE("rotation gates match their closed forms", "[qsim]") {
    CHECK(max_abs_diff(rotation_gate(Axis::Y, 0.0), Mat2::identity()) < 1e-15);

    Mat2 rx_pi;
    rx_pi.m = {0.0, -I, -I, 0.0};
    CHECK(max_abs_diff(rotation_gate(Axis::X, kPi), rx_pi) < 1e-12);

    Mat2 rz;
    rz.m = {std::exp(-I * (kPi / 4)), 0.0, 0.0, std::exp(I * (kPi / 4))};
    CHECK(max_abs_diff(rotation_gate(Axis::Z, kPi / 2), rz) < 1e-12);

    CHECK_THROWS_AS(rotation_gate(Axis::X, std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
    CHECK_THROWS_AS(rotation_gate(Axis::Z, std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("every constructed gate is unitary", "[qsim]") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int t = 0; t < 300; ++t) {
        for (auto axis : {Axis::X, Axis::Y, Axis::Z}) CHECK(unitarity_error(rotation_gate(axis, u(rng))) < 1e-12);
    }
    CHECK(unitarity_error(pauli_x()) < 1e-15);
    CHECK(unitarity_error(pauli_y()) < 1e-15);
    CHECK(unitarity_error(pauli_z()) < 1e-15);
}

TEST_CASE("single-qubit gate application", "[qsim]") {
    const auto one = apply_one_qubit(PureState::zero(1), 0, rotation_gate(Axis::Y, kPi));
    CHECK_THAT(std::norm(one.amplitudes[1]), WithinAbs(1.0, 1e-12));

    const auto half = apply_one_qubit(PureState::zero(1), 0, rotation_gate(Axis::Y, kPi / 2));
    CHECK_THAT(half.amplitudes[0].real(), WithinAbs(std::cos(kPi / 4), 1e-12));
    CHECK_THAT(half.amplitudes[1].real(), WithinAbs(std::sin(kPi / 4), 1e-12));

    const auto flipped = apply_one_qubit(PureState::zero(3), 1, pauli_x());
    CHECK_THAT(std::norm(flipped.amplitudes[0b010]), WithinAbs(1.0, 1e-15));

    CHECK_THROWS_AS(apply_one_qubit(PureState::zero(2), 2, pauli_x()), std::out_of_range);
}

TEST_CASE("CNOT truth table and Bell preparation", "[qsim]") {
    auto s = apply_one_qubit(PureState::zero(2), 1, pauli_x());  // |10>
    s = apply_cnot(s, 1, 0);
    CHECK_THAT(std::norm(s.amplitudes[0b11]), WithinAbs(1.0, 1e-15));

    const auto untouched = apply_cnot(PureState::zero(2), 1, 0);
    CHECK_THAT(std::norm(untouched.amplitudes[0]), WithinAbs(1.0, 1e-15));

    auto bell = apply_one_qubit(PureState::zero(2), 0, rotation_gate(Axis::Y, kPi / 2));
    bell = apply_cnot(bell, 0, 1);
    CHECK_THAT(bell.amplitudes[0b00].real(), WithinAbs(1 / std::sqrt(2.0), 1e-12));
    CHECK_THAT(bell.amplitudes[0b11].real(), WithinAbs(1 / std::sqrt(2.0), 1e-12));
    CHECK_THAT(std::abs(bell.amplitudes[0b01]) + std::abs(bell.amplitudes[0b10]), WithinAbs(0.0, 1e-15));

    CHECK_THROWS_AS(apply_cnot(PureState::zero(2), 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(apply_cnot(PureState::zero(2), 0, 5), std::out_of_range);
}

TEST_CASE("Z expectations", "[qsim]") {
    CHECK(expectation_z(PureState::zero(1), 0) == 1.0);

    const auto s = apply_one_qubit(PureState::zero(1), 0, rotation_gate(Axis::Y, 1.0));
    const double brute = std::norm(s.amplitudes[0]) - std::norm(s.amplitudes[1]);
    CHECK_THAT(expectation_z(s, 0), WithinAbs(brute, 1e-15));
    CHECK_THAT(expectation_z(s, 0), WithinAbs(0.5403023058681398, 1e-12));

    const auto bell = from_amplitudes({1 / std::sqrt(2.0), 0.0, 0.0, 1 / std::sqrt(2.0)});
    CHECK_THAT(expectation_z(bell, 0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(expectation_z(bell, 1), WithinAbs(0.0, 1e-15));
}

TEST_CASE("pure states to density matrices", "[qsim]") {
    const auto z = pure_to_density(PureState::zero(1));
    CHECK(z(0, 0) == cplx(1.0));
    CHECK(std::abs(z(0, 1)) + std::abs(z(1, 0)) + std::abs(z(1, 1)) == 0.0);

    const auto plus = pure_to_density(from_amplitudes({1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}));
    for (const auto& e : plus.entries) CHECK_THAT(e.real(), WithinAbs(0.5, 1e-15));

    const auto bell = pure_to_density(from_amplitudes({1 / std::sqrt(2.0), 0.0, 0.0, 1 / std::sqrt(2.0)}));
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) {
            const bool corner = (r == 0 || r == 3) && (c == 0 || c == 3);
            CHECK_THAT(bell(r, c).real(), WithinAbs(corner ? 0.5 : 0.0, 1e-15));
        }
    CHECK_THAT(bell.trace().real(), WithinAbs(1.0, 1e-15));
}

TEST_CASE("Kraus sets", "[qsim]") {
    const auto ad0 = make_channel(ChannelKind::AmplitudeDamping, 0.0);
    std::mt19937_64 rng(3);
    const auto rho = random_density(1, rng);
    CHECK(max_abs_diff(apply_channel(rho, 0, ad0), rho) < 1e-12);

    const auto bf = make_channel(ChannelKind::BitFlip, 0.1);
    REQUIRE(bf.kraus_ops.size() == 2);
    CHECK(max_abs_diff(bf.kraus_ops[0], Mat2::identity() * std::sqrt(0.9)) < 1e-15);
    CHECK(max_abs_diff(bf.kraus_ops[1], pauli_x() * std::sqrt(0.1)) < 1e-15);

    for (auto kind : {ChannelKind::AmplitudeDamping, ChannelKind::Depolarizing, ChannelKind::BitFlip,
                      ChannelKind::PhaseFlip}) {
        for (double p : {0.0, 0.01, 0.05, 0.1, 0.5, 1.0}) {
            CHECK(completeness_error(make_channel(kind, p)) < 1e-12);
        }
        CHECK_THROWS_AS(make_channel(kind, -0.01), std::invalid_argument);
        CHECK_THROWS_AS(make_channel(kind, 1.01), std::invalid_argument);
    }
    CHECK(channel_name(ChannelKind::PhaseFlip) == "PF");
    CHECK(parse_channel("DP") == ChannelKind::Depolarizing);
}

TEST_CASE("channel application", "[qsim]") {
    const auto zero = pure_to_density(PureState::zero(1));
    for (double p : {0.01, 0.3, 1.0}) {
        CHECK(max_abs_diff(apply_channel(zero, 0, make_channel(ChannelKind::AmplitudeDamping, p)), zero) < 1e-15);
    }

    const auto bf = make_channel(ChannelKind::BitFlip, 0.1);
    const auto out = apply_channel(zero, 0, bf);
    const auto expected = kraus_sum_1q(zero, bf);
    CHECK(max_abs_diff(out, expected) < 1e-15);
    CHECK_THAT(out(0, 0).real(), WithinAbs(0.9, 1e-15));
    CHECK_THAT(out(1, 1).real(), WithinAbs(0.1, 1e-15));

    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const auto psi = oracle::random_state(1, rng);
        const auto rho = pure_to_density(from_amplitudes(psi));
        for (double p : {0.01, 0.05, 0.1, 0.7}) {
            const auto ch = make_channel(ChannelKind::Depolarizing, p);
            const auto brute = kraus_sum_1q(rho, ch);
            DensityMatrix closed = rho;
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t j = 0; j < 2; ++j) closed(i, j) = (1 - p) * rho(i, j) + (i == j ? p / 2 : 0.0);
            CHECK(max_abs_diff(brute, closed) < 1e-12);
            CHECK(max_abs_diff(apply_channel(rho, 0, ch), brute) < 1e-12);
        }
    }

    CHECK_THROWS_AS(apply_channel(zero, 1, bf), std::out_of_range);
}

TEST_CASE("channels preserve density-matrix validity on multi-qubit registers", "[qsim]") {
    std::mt19937_64 rng(9);
    for (auto kind : {ChannelKind::AmplitudeDamping, ChannelKind::Depolarizing, ChannelKind::BitFlip,
                      ChannelKind::PhaseFlip}) {
        auto rho = random_density(3, rng);
        for (std::size_t q = 0; q < 3; ++q) rho = apply_channel(rho, q, make_channel(kind, 0.2 + 0.1 * q));
        CHECK_THAT(rho.trace().real(), WithinAbs(1.0, 1e-10));
        CHECK_THAT(rho.trace().imag(), WithinAbs(0.0, 1e-10));
        for (std::size_t i = 0; i < rho.dim; ++i)
            for (std::size_t j = 0; j < rho.dim; ++j) CHECK(std::abs(rho(i, j) - std::conj(rho(j, i))) < 1e-10);
        for (int v = 0; v < 50; ++v) {
            const auto x = oracle::random_state(3, rng);
            double quad = 0.0;
            for (std::size_t i = 0; i < rho.dim; ++i)
                for (std::size_t j = 0; j < rho.dim; ++j) quad += (std::conj(x[i]) * rho(i, j) * x[j]).real();
            CHECK(quad >= -1e-9);
        }
        const auto p0 = make_channel(kind, 0.0);
        CHECK(max_abs_diff(apply_channel(rho, 1, p0), rho) < 1e-12);
    }
}

TEST_CASE("Uhlmann fidelity", "[qsim]") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 10; ++t) {
        const auto rho = random_density(2, rng);
        CHECK_THAT(state_fidelity(rho, rho), WithinAbs(1.0, 1e-9));
    }

    const auto zero = pure_to_density(PureState::zero(1));
    const auto one = pure_to_density(from_amplitudes({0.0, 1.0}));
    CHECK_THAT(state_fidelity(zero, one), WithinAbs(0.0, 1e-12));

    const auto plus_state = from_amplitudes({1 / std::sqrt(2.0), 1 / std::sqrt(2.0)});
    const auto plus = pure_to_density(plus_state);
    const auto noisy = apply_channel(plus, 0, make_channel(ChannelKind::PhaseFlip, 0.05));
    CHECK_THAT(state_fidelity(plus, noisy), WithinAbs(0.95, 1e-9));
    CHECK_THAT(overlap_expectation(plus_state, noisy), WithinAbs(0.95, 1e-12));

    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 1 + t % 3;
        const auto a = random_density(n, rng);
        const auto b = random_density(n, rng);
        const double fab = state_fidelity(a, b);
        CHECK(fab >= 0.0);
        CHECK(fab <= 1.0);
        CHECK_THAT(fab, WithinAbs(state_fidelity(b, a), 1e-9));

        const auto psi = from_amplitudes(oracle::random_state(n, rng));
        double brute = 0.0;
        for (std::size_t i = 0; i < b.dim; ++i)
            for (std::size_t j = 0; j < b.dim; ++j)
                brute += (std::conj(psi.amplitudes[i]) * b(i, j) * psi.amplitudes[j]).real();
        CHECK_THAT(state_fidelity(pure_to_density(psi), b), WithinAbs(brute, 1e-9));
    }

    CHECK_THROWS_AS(state_fidelity(zero, random_density(2, rng)), std::invalid_argument);
}

TEST_CASE("Meyer-Wallach measure", "[qsim]") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 10; ++t) {
        auto s = PureState::zero(3);
        for (std::size_t q = 0; q < 3; ++q) {
            s = apply_one_qubit(s, q, rotation_gate(Axis::Y, 0.3 + t + q));
            s = apply_one_qubit(s, q, rotation_gate(Axis::Z, 1.1 * t - q));
        }
        CHECK_THAT(meyer_wallach(s), WithinAbs(0.0, 1e-12));
    }

    const double r = 1 / std::sqrt(2.0);
    const auto bell = from_amplitudes({r, 0.0, 0.0, r});
    CHECK_THAT(meyer_wallach(bell), WithinAbs(1.0, 1e-12));
    CHECK_THAT(oracle::meyer_wallach(bell.amplitudes, 2), WithinAbs(1.0, 1e-12));

    const double w = 1 / std::sqrt(3.0);
    const auto wstate = from_amplitudes({0.0, w, w, 0.0, w, 0.0, 0.0, 0.0});
    CHECK_THAT(meyer_wallach(wstate), WithinAbs(8.0 / 9.0, 1e-12));

    CHECK_THROWS_AS(meyer_wallach(PureState::zero(1)), std::invalid_argument);

    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 2 + t % 4;
        auto s = from_amplitudes(oracle::random_state(n, rng));
        const double before = meyer_wallach(s);
        CHECK_THAT(before, WithinAbs(oracle::meyer_wallach(s.amplitudes, n), 1e-10));
        std::uniform_real_distribution<double> u(-kPi, kPi);
        for (std::size_t q = 0; q < n; ++q) {
            s = apply_one_qubit(s, q, rotation_gate(Axis::X, u(rng)) * rotation_gate(Axis::Z, u(rng)));
        }
        CHECK_THAT(meyer_wallach(s), WithinAbs(before, 1e-9));
    }
}

TEST_CASE("random circuits preserve norm and match the dense oracle", "[qsim]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 1 + t % 6;
        Circuit c;
        c.n_qubits = n;
        std::vector<cplx> ref(std::size_t{1} << n);
        ref[0] = 1.0;
        for (int g = 0; g < 50; ++g) {
            const std::size_t q = rng() % n;
            if (n > 1 && rng() % 4 == 0) {
                std::size_t tgt = rng() % n;
                if (tgt == q) tgt = (q + 1) % n;
                c.ops.push_back(Op::cnot(q, tgt));
                ref = oracle::apply(oracle::cnot(q, tgt, n), ref);
            } else {
                const int axis = static_cast<int>(rng() % 3);
                const double th = angle(rng);
                c.ops.push_back(Op::rot(static_cast<Axis>(axis), q, th));
                oracle::cplx gm[4];
                oracle::rotation(axis, th, gm);
                ref = oracle::apply(oracle::lift(gm, q, n), ref);
            }
        }
        const auto s = simulate(c);
        CHECK(std::abs(s.norm_squared() - 1.0) < 1e-9);
        double diff = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) diff = std::max(diff, std::abs(s.amplitudes[i] - ref[i]));
        CHECK(diff < 1e-10);
    }
}

TEST_CASE("noisy simulation with P = 0 reproduces the ideal state", "[qsim]") {
    Circuit c;
    c.n_qubits = 3;
    c.ops = {Op::rot(Axis::X, 0, 0.4), Op::rot(Axis::Y, 1, 1.2), Op::cnot(0, 1), Op::rot(Axis::Z, 2, -0.7),
             Op::cnot(1, 2)};
    const auto ideal = pure_to_density(simulate(c));
    for (auto kind : {ChannelKind::AmplitudeDamping, ChannelKind::Depolarizing, ChannelKind::BitFlip,
                      ChannelKind::PhaseFlip}) {
        CHECK(max_abs_diff(simulate_noisy(c, make_channel(kind, 0.0)), ideal) < 1e-12);
    }
    CHECK(c.single_qubit_gate_count() == 3);
    CHECK(c.cnot_count() == 2);
}

TEST_CASE("cluster CNOT template", "[qsim]") {
    for (std::size_t q : {3u, 4u, 5u, 6u, 7u, 9u}) {
        Circuit c;
        c.n_qubits = q;
        append_cluster_cnots(c, q);
        const std::size_t clusters = q / 3;
        REQUIRE(c.ops.size() == 3 * clusters + 1);
        for (std::size_t j = 0; j < clusters; ++j) {
            CHECK(c.ops[3 * j].qubit == 3 * j);
            CHECK(c.ops[3 * j].target == 3 * j + 1);
            CHECK(c.ops[3 * j + 1].qubit == 3 * j + 1);
            CHECK(c.ops[3 * j + 1].target == 3 * j + 2);
            CHECK(c.ops[3 * j + 2].qubit == 3 * j + 2);
            CHECK(c.ops[3 * j + 2].target == 3 * j);
        }
        CHECK(c.ops.back().qubit == 3 * clusters - 1);
        CHECK(c.ops.back().target == 0);
    }
}

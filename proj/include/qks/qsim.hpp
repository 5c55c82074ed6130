// Copyright 2026 The qksearch Authors.

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file qsim.hpp
 * Exact simulation backends: statevector evolution for pure-state fidelity
 * kernels and density-matrix evolution with depolarizing noise.
 *
 * Bit convention: qubit 0 maps to the MOST significant bit of the amplitude
 * index, so for n qubits the basis state |b0 b1 ... b_{n-1}> sits at index
 * (b0 << (n-1)) | ... | b_{n-1}. All kernels and the dense reference share
 * this convention; test_qsim pins it explicitly.
 */
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "qks/common.hpp"
#include "qks/errors.hpp"

namespace qks {

struct CircuitLayout;  // defined in circuit.hpp

enum class GateKind { H, RX, RY, RZ, CNOT, CZ, SWAP, CRZ };

constexpr bool gate_is_two_qubit(GateKind k) {
    return k == GateKind::CNOT || k == GateKind::CZ || k == GateKind::SWAP ||
           k == GateKind::CRZ;
}

constexpr bool gate_has_angle(GateKind k) {
    return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ ||
           k == GateKind::CRZ;
}

/// Single- or two-qubit gate instance. For two-qubit kinds q0 is the control
/// (first wire) and q1 the target (second wire); q1 is -1 otherwise.
struct Gate {
    GateKind kind = GateKind::H;
    int q0 = 0;
    int q1 = -1;
    double angle = 0.0;

    bool operator==(const Gate&) const = default;

    static Gate h(int q) { return {GateKind::H, q, -1, 0.0}; }
    static Gate rx(int q, double t) { return {GateKind::RX, q, -1, t}; }
    static Gate ry(int q, double t) { return {GateKind::RY, q, -1, t}; }
    static Gate rz(int q, double t) { return {GateKind::RZ, q, -1, t}; }
    static Gate cnot(int c, int t) { return {GateKind::CNOT, c, t, 0.0}; }
    static Gate cz(int a, int b) { return {GateKind::CZ, a, b, 0.0}; }
    static Gate swap(int a, int b) { return {GateKind::SWAP, a, b, 0.0}; }
    static Gate crz(int c, int t, double a) { return {GateKind::CRZ, c, t, a}; }
};

/// Column-major 2x2 is overkill here; matrices are row-major arrays
/// m[row * dim + col] in the computational basis of the wires involved
/// (two-qubit basis index = control_bit * 2 + target_bit).
std::array<cplx, 4> gate_matrix_1q(const Gate& g);
std::array<cplx, 16> gate_matrix_2q(const Gate& g);

inline constexpr int kMaxStateQubits = 20;
inline constexpr int kMaxDensityQubits = 8;

class StateVector {
  public:
    /// |0...0> on n qubits. Throws CapacityError outside [1, cap].
    explicit StateVector(int n, int cap = kMaxStateQubits);

    int num_qubits() const { return n_; }
    size_t dim() const { return amps_.size(); }
    std::vector<cplx>& amplitudes() { return amps_; }
    const std::vector<cplx>& amplitudes() const { return amps_; }
    cplx& operator[](size_t i) { return amps_[i]; }
    const cplx& operator[](size_t i) const { return amps_[i]; }

    /// In-place gate application. Throws IndexError for bad wires and
    /// ArgumentError for a two-qubit gate with q0 == q1.
    void apply(const Gate& g);

    double norm() const;

  private:
    void apply_1q(const std::array<cplx, 4>& m, int q);
    void apply_cnot(int c, int t);
    void apply_cz(int a, int b);
    void apply_swap(int a, int b);
    void apply_crz(int c, int t, double angle);

    int n_;
    std::vector<cplx> amps_;
};

inline StateVector zero_state(int n, int cap = kMaxStateQubits) {
    return StateVector(n, cap);
}

/// |<a|b>|^2. Throws DimensionError on mismatched sizes.
double state_fidelity(const StateVector& a, const StateVector& b);

/// Depolarizing strengths applied after every gate: p1 for single-qubit
/// gates, p2 for two-qubit gates. Zero disables the channel.
struct NoiseSpec {
    double p1 = 0.0;
    double p2 = 0.0;

    bool enabled() const { return p1 > 0.0 || p2 > 0.0; }
    void validate() const;
};

class DensityMatrix {
  public:
    /// |0...0><0...0| on n qubits. Throws CapacityError outside [1, cap].
    explicit DensityMatrix(int n, int cap = kMaxDensityQubits);

    int num_qubits() const { return n_; }
    size_t dim() const { return dim_; }
    cplx at(size_t r, size_t c) const { return rho_[r * dim_ + c]; }
    std::vector<cplx>& entries() { return rho_; }
    const std::vector<cplx>& entries() const { return rho_; }

    /// rho -> U rho U^dagger.
    void apply(const Gate& g);

    /// rho -> (1-p) rho + p (I/2 (x) Tr_q rho): touched qubit replaced by
    /// the maximally mixed state with probability p.
    void depolarize1(int q, double p);

    /// Two-qubit analogue on the (qa, qb) subsystem with I/4.
    void depolarize2(int qa, int qb, double p);

    double trace_real() const;

  private:
    int n_;
    size_t dim_;
    std::vector<cplx> rho_;
};

/// Tr(a b), real up to numerical noise for Hermitian operands.
double dm_overlap(const DensityMatrix& a, const DensityMatrix& b);

/// Identifies one occurrence of a bound angle inside a layout so the
/// parameter-shift rule can offset it in isolation. Plain rotations have a
/// single occurrence (sub = 0). A controlled-RZ bound to a parameter splits
/// into two internal rotations with angle coefficients +1/2 and -1/2
/// (sub = 0 and 1); shifting uses the identity
/// CRZ(t) = RZ_tgt(t/2) . CNOT . RZ_tgt(-t/2) . CNOT.
struct OccurrenceShift {
    int gate_index = -1;
    int sub = 0;
    double delta = 0.0;
};

/// Runs a bound layout from |0...0>: feature slots read from x, parameter
/// slots from theta, const slots use their stored angle. Throws BindingError
/// when a slot index falls outside x/theta or a rotation is unbound.
StateVector run_layout(const CircuitLayout& layout, std::span<const double> x,
                       std::span<const double> theta,
                       const OccurrenceShift* shift = nullptr);

/// Density-matrix run with a depolarizing channel after every gate.
DensityMatrix run_layout_noisy(const CircuitLayout& layout,
                               std::span<const double> x,
                               std::span<const double> theta,
                               const NoiseSpec& noise,
                               const OccurrenceShift* shift = nullptr);

}  // namespace qks

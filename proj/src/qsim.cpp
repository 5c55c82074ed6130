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

#include "qks/qsim.hpp"

#include <cmath>

#include "qks/circuit.hpp"

namespace qks {

namespace {

// Amplitude loops only go parallel past this dimension so that nested use
// inside Gram-level parallel regions stays serial.
constexpr size_t kParallelDim = size_t{1} << 14;

void check_wire(int q, int n) {
    if (q < 0 || q >= n) {
        throw IndexError("qubit index " + std::to_string(q) +
                         " out of range for " + std::to_string(n) + " qubits");
    }
}

void check_gate(const Gate& g, int n) {
    check_wire(g.q0, n);
    if (gate_is_two_qubit(g.kind)) {
        check_wire(g.q1, n);
        if (g.q0 == g.q1) {
            throw ArgumentError("two-qubit gate needs distinct wires");
        }
    }
}

// Qubit q owns bit (n-1-q): qubit 0 is the most significant bit.
inline uint64_t bit_mask(int q, int n) { return uint64_t{1} << (n - 1 - q); }

}  // namespace

std::array<cplx, 4> gate_matrix_1q(const Gate& g) {
    const double h = g.angle / 2.0;
    const cplx i{0.0, 1.0};
    switch (g.kind) {
        case GateKind::H: {
            const double s = 1.0 / std::sqrt(2.0);
            return {s, s, s, -s};
        }
        case GateKind::RX:
            return {std::cos(h), -i * std::sin(h), -i * std::sin(h), std::cos(h)};
        case GateKind::RY:
            return {std::cos(h), -std::sin(h), std::sin(h), std::cos(h)};
        case GateKind::RZ:
            return {std::exp(-i * h), 0.0, 0.0, std::exp(i * h)};
        default:
            throw ArgumentError("not a single-qubit gate");
    }
}

std::array<cplx, 16> gate_matrix_2q(const Gate& g) {
    std::array<cplx, 16> m{};
    const cplx i{0.0, 1.0};
    switch (g.kind) {
        case GateKind::CNOT:
            m[0 * 4 + 0] = 1.0;
            m[1 * 4 + 1] = 1.0;
            m[2 * 4 + 3] = 1.0;
            m[3 * 4 + 2] = 1.0;
            return m;
        case GateKind::CZ:
            m[0 * 4 + 0] = 1.0;
            m[1 * 4 + 1] = 1.0;
            m[2 * 4 + 2] = 1.0;
            m[3 * 4 + 3] = -1.0;
            return m;
        case GateKind::SWAP:
            m[0 * 4 + 0] = 1.0;
            m[1 * 4 + 2] = 1.0;
            m[2 * 4 + 1] = 1.0;
            m[3 * 4 + 3] = 1.0;
            return m;
        case GateKind::CRZ:
            m[0 * 4 + 0] = 1.0;
            m[1 * 4 + 1] = 1.0;
            m[2 * 4 + 2] = std::exp(-i * (g.angle / 2.0));
            m[3 * 4 + 3] = std::exp(i * (g.angle / 2.0));
            return m;
        default:
            throw ArgumentError("not a two-qubit gate");
    }
}

StateVector::StateVector(int n, int cap) : n_(n) {
    if (n < 1 || n > cap) {
        throw CapacityError("statevector qubit count " + std::to_string(n) +
                            " outside [1, " + std::to_string(cap) + "]");
    }
    amps_.assign(size_t{1} << n, cplx{0.0, 0.0});
    amps_[0] = 1.0;
}

void StateVector::apply_1q(const std::array<cplx, 4>& m, int q) {
    const uint64_t mask = bit_mask(q, n_);
    const uint64_t lo = mask - 1;
    const uint64_t hi = ~lo;
    const int64_t half = static_cast<int64_t>(amps_.size() >> 1);
#pragma omp parallel for schedule(static) if (amps_.size() >= kParallelDim)
    for (int64_t i = 0; i < half; ++i) {
        const uint64_t i0 = ((static_cast<uint64_t>(i) & hi) << 1) |
                            (static_cast<uint64_t>(i) & lo);
        const uint64_t i1 = i0 | mask;
        const cplx a0 = amps_[i0];
        const cplx a1 = amps_[i1];
        amps_[i0] = m[0] * a0 + m[1] * a1;
        amps_[i1] = m[2] * a0 + m[3] * a1;
    }
}

void StateVector::apply_cnot(int c, int t) {
    const uint64_t cm = bit_mask(c, n_);
    const uint64_t tm = bit_mask(t, n_);
    const int64_t dim = static_cast<int64_t>(amps_.size());
#pragma omp parallel for schedule(static) if (amps_.size() >= kParallelDim)
    for (int64_t i = 0; i < dim; ++i) {
        const uint64_t u = static_cast<uint64_t>(i);
        if ((u & cm) && !(u & tm)) {
            std::swap(amps_[u], amps_[u | tm]);
        }
    }
}

void StateVector::apply_cz(int a, int b) {
    const uint64_t am = bit_mask(a, n_);
    const uint64_t bm = bit_mask(b, n_);
    const int64_t dim = static_cast<int64_t>(amps_.size());
#pragma omp parallel for schedule(static) if (amps_.size() >= kParallelDim)
    for (int64_t i = 0; i < dim; ++i) {
        const uint64_t u = static_cast<uint64_t>(i);
        if ((u & am) && (u & bm)) {
            amps_[u] = -amps_[u];
        }
    }
}

void StateVector::apply_swap(int a, int b) {
    const uint64_t am = bit_mask(a, n_);
    const uint64_t bm = bit_mask(b, n_);
    const int64_t dim = static_cast<int64_t>(amps_.size());
#pragma omp parallel for schedule(static) if (amps_.size() >= kParallelDim)
    for (int64_t i = 0; i < dim; ++i) {
        const uint64_t u = static_cast<uint64_t>(i);
        if ((u & am) && !(u & bm)) {
            std::swap(amps_[u], amps_[(u & ~am) | bm]);
        }
    }
}

void StateVector::apply_crz(int c, int t, double angle) {
    const uint64_t cm = bit_mask(c, n_);
    const uint64_t tm = bit_mask(t, n_);
    const cplx i{0.0, 1.0};
    const cplx ph0 = std::exp(-i * (angle / 2.0));
    const cplx ph1 = std::exp(i * (angle / 2.0));
    const int64_t dim = static_cast<int64_t>(amps_.size());
#pragma omp parallel for schedule(static) if (amps_.size() >= kParallelDim)
    for (int64_t k = 0; k < dim; ++k) {
        const uint64_t u = static_cast<uint64_t>(k);
        if (u & cm) {
            amps_[u] *= (u & tm) ? ph1 : ph0;
        }
    }
}

void StateVector::apply(const Gate& g) {
    check_gate(g, n_);
    switch (g.kind) {
        case GateKind::H:
        case GateKind::RX:
        case GateKind::RY:
        case GateKind::RZ:
            apply_1q(gate_matrix_1q(g), g.q0);
            break;
        case GateKind::CNOT:
            apply_cnot(g.q0, g.q1);
            break;
        case GateKind::CZ:
            apply_cz(g.q0, g.q1);
            break;
        case GateKind::SWAP:
            apply_swap(g.q0, g.q1);
            break;
        case GateKind::CRZ:
            apply_crz(g.q0, g.q1, g.angle);
            break;
    }
}

double StateVector::norm() const {
    double s = 0.0;
    for (const cplx& a : amps_) s += std::norm(a);
    return std::sqrt(s);
}

double state_fidelity(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError("fidelity of states with different dimensions");
    }
    cplx ip{0.0, 0.0};
    for (size_t i = 0; i < a.dim(); ++i) {
        ip += std::conj(a[i]) * b[i];
    }
    return std::norm(ip);
}

void NoiseSpec::validate() const {
    if (p1 < 0.0 || p1 > 1.0 || p2 < 0.0 || p2 > 1.0) {
        throw RangeError("depolarizing probabilities must lie in [0, 1]");
    }
}

DensityMatrix::DensityMatrix(int n, int cap) : n_(n) {
    if (n < 1 || n > cap) {
        throw CapacityError("density matrix qubit count " + std::to_string(n) +
                            " outside [1, " + std::to_string(cap) + "]");
    }
    dim_ = size_t{1} << n;
    rho_.assign(dim_ * dim_, cplx{0.0, 0.0});
    rho_[0] = 1.0;
}

void DensityMatrix::apply(const Gate& g) {
    check_gate(g, n_);
    if (!gate_is_two_qubit(g.kind)) {
        const auto m = gate_matrix_1q(g);
        const uint64_t qm = bit_mask(g.q0, n_);
        // rho -> U rho: 2x2 on row pairs of every column.
        for (size_t c = 0; c < dim_; ++c) {
            for (size_t r = 0; r < dim_; ++r) {
                if (r & qm) continue;
                const size_t r0 = r, r1 = r | qm;
                const cplx a0 = rho_[r0 * dim_ + c];
                const cplx a1 = rho_[r1 * dim_ + c];
                rho_[r0 * dim_ + c] = m[0] * a0 + m[1] * a1;
                rho_[r1 * dim_ + c] = m[2] * a0 + m[3] * a1;
            }
        }
        // rho -> rho U^dagger: (rho U^+)[r,c] = sum_k rho[r,k] conj(U[c,k]).
        for (size_t r = 0; r < dim_; ++r) {
            for (size_t c = 0; c < dim_; ++c) {
                if (c & qm) continue;
                const size_t c0 = c, c1 = c | qm;
                const cplx a0 = rho_[r * dim_ + c0];
                const cplx a1 = rho_[r * dim_ + c1];
                rho_[r * dim_ + c0] = a0 * std::conj(m[0]) + a1 * std::conj(m[1]);
                rho_[r * dim_ + c1] = a0 * std::conj(m[2]) + a1 * std::conj(m[3]);
            }
        }
        return;
    }
    const auto m = gate_matrix_2q(g);
    const uint64_t am = bit_mask(g.q0, n_);  // control bit of the 2q basis
    const uint64_t bm = bit_mask(g.q1, n_);
    auto sub_index = [&](size_t base, int k) {
        return base | ((k & 2) ? am : 0) | ((k & 1) ? bm : 0);
    };
    for (size_t c = 0; c < dim_; ++c) {
        for (size_t r = 0; r < dim_; ++r) {
            if ((r & am) || (r & bm)) continue;
            cplx in[4], out[4];
            for (int k = 0; k < 4; ++k) in[k] = rho_[sub_index(r, k) * dim_ + c];
            for (int j = 0; j < 4; ++j) {
                out[j] = {0.0, 0.0};
                for (int k = 0; k < 4; ++k) out[j] += m[j * 4 + k] * in[k];
            }
            for (int j = 0; j < 4; ++j) rho_[sub_index(r, j) * dim_ + c] = out[j];
        }
    }
    for (size_t r = 0; r < dim_; ++r) {
        for (size_t c = 0; c < dim_; ++c) {
            if ((c & am) || (c & bm)) continue;
            cplx in[4], out[4];
            for (int k = 0; k < 4; ++k) in[k] = rho_[r * dim_ + sub_index(c, k)];
            for (int j = 0; j < 4; ++j) {
                out[j] = {0.0, 0.0};
                for (int k = 0; k < 4; ++k) out[j] += in[k] * std::conj(m[j * 4 + k]);
            }
            for (int j = 0; j < 4; ++j) rho_[r * dim_ + sub_index(c, j)] = out[j];
        }
    }
}

void DensityMatrix::depolarize1(int q, double p) {
    if (p <= 0.0) return;
    check_wire(q, n_);
    const uint64_t qm = bit_mask(q, n_);
    const double keep = 1.0 - p;
    for (size_t r = 0; r < dim_; ++r) {
        for (size_t c = 0; c < dim_; ++c) {
            if ((r & qm) || (c & qm)) continue;
            const size_t r1 = r | qm, c1 = c | qm;
            const cplx mixed =
                0.5 * (rho_[r * dim_ + c] + rho_[r1 * dim_ + c1]);
            rho_[r * dim_ + c] = keep * rho_[r * dim_ + c] + p * mixed;
            rho_[r1 * dim_ + c1] = keep * rho_[r1 * dim_ + c1] + p * mixed;
            rho_[r * dim_ + c1] *= keep;
            rho_[r1 * dim_ + c] *= keep;
        }
    }
}

void DensityMatrix::depolarize2(int qa, int qb, double p) {
    if (p <= 0.0) return;
    check_wire(qa, n_);
    check_wire(qb, n_);
    const uint64_t am = bit_mask(qa, n_);
    const uint64_t bm = bit_mask(qb, n_);
    const double keep = 1.0 - p;
    auto sub_index = [&](size_t base, int k) {
        return base | ((k & 2) ? am : 0) | ((k & 1) ? bm : 0);
    };
    for (size_t r = 0; r < dim_; ++r) {
        if ((r & am) || (r & bm)) continue;
        for (size_t c = 0; c < dim_; ++c) {
            if ((c & am) || (c & bm)) continue;
            cplx mixed{0.0, 0.0};
            for (int k = 0; k < 4; ++k) {
                mixed += rho_[sub_index(r, k) * dim_ + sub_index(c, k)];
            }
            mixed *= 0.25;
            for (int j = 0; j < 4; ++j) {
                for (int k = 0; k < 4; ++k) {
                    cplx& e = rho_[sub_index(r, j) * dim_ + sub_index(c, k)];
                    e = keep * e + (j == k ? p * mixed : cplx{0.0, 0.0});
                }
            }
        }
    }
}

double DensityMatrix::trace_real() const {
    cplx t{0.0, 0.0};
    for (size_t i = 0; i < dim_; ++i) t += rho_[i * dim_ + i];
    return t.real();
}

double dm_overlap(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError("overlap of density matrices with different dims");
    }
    const size_t d = a.dim();
    cplx t{0.0, 0.0};
    for (size_t r = 0; r < d; ++r) {
        for (size_t c = 0; c < d; ++c) {
            t += a.at(r, c) * b.at(c, r);
        }
    }
    return t.real();
}

namespace {

double resolve_angle(const GateSlot& slot, std::span<const double> x,
                     std::span<const double> theta, size_t gate_index) {
    if (!slot.binding) {
        if (gate_has_angle(slot.gate.kind)) {
            throw BindingError("rotation gate " + std::to_string(gate_index) +
                               " has no binding");
        }
        return 0.0;
    }
    const Binding& b = *slot.binding;
    switch (b.kind) {
        case Binding::Kind::Feature:
            if (b.index < 0 || static_cast<size_t>(b.index) >= x.size()) {
                throw BindingError("feature slot " + std::to_string(b.index) +
                                   " outside input of length " +
                                   std::to_string(x.size()));
            }
            return x[b.index];
        case Binding::Kind::Param:
            if (b.index < 0 || static_cast<size_t>(b.index) >= theta.size()) {
                throw BindingError("parameter slot " + std::to_string(b.index) +
                                   " outside theta of length " +
                                   std::to_string(theta.size()));
            }
            return theta[b.index];
        case Binding::Kind::Const:
            return b.value;
    }
    throw ArgumentError("unknown binding kind");
}

// Applies one gate slot to either backend, optionally offsetting one
// internal rotation occurrence for the parameter-shift rule.
template <class Backend>
void apply_slot(Backend& st, const GateSlot& slot, double angle,
                const OccurrenceShift* shift, int gate_index) {
    const bool shifted = shift && shift->gate_index == gate_index;
    Gate g = slot.gate;
    if (g.kind == GateKind::CRZ && shifted) {
        // CRZ(t) = RZ_tgt(t/2) . CNOT . RZ_tgt(-t/2) . CNOT, so the two
        // occurrences carry angle coefficients +1/2 (sub 0) and -1/2 (sub 1).
        const double a0 = angle / 2.0 + (shift->sub == 0 ? shift->delta : 0.0);
        const double a1 = -angle / 2.0 + (shift->sub == 1 ? shift->delta : 0.0);
        st.apply(Gate::cnot(g.q0, g.q1));
        st.apply(Gate::rz(g.q1, a1));
        st.apply(Gate::cnot(g.q0, g.q1));
        st.apply(Gate::rz(g.q1, a0));
        return;
    }
    if (gate_has_angle(g.kind)) {
        g.angle = angle + (shifted ? shift->delta : 0.0);
    }
    st.apply(g);
}

}  // namespace

StateVector run_layout(const CircuitLayout& layout, std::span<const double> x,
                       std::span<const double> theta,
                       const OccurrenceShift* shift) {
    StateVector st(layout.num_qubits);
    for (size_t i = 0; i < layout.gates.size(); ++i) {
        const GateSlot& slot = layout.gates[i];
        const double angle = gate_has_angle(slot.gate.kind)
                                 ? resolve_angle(slot, x, theta, i)
                                 : 0.0;
        apply_slot(st, slot, angle, shift, static_cast<int>(i));
    }
    return st;
}

DensityMatrix run_layout_noisy(const CircuitLayout& layout,
                               std::span<const double> x,
                               std::span<const double> theta,
                               const NoiseSpec& noise,
                               const OccurrenceShift* shift) {
    noise.validate();
    DensityMatrix rho(layout.num_qubits);
    for (size_t i = 0; i < layout.gates.size(); ++i) {
        const GateSlot& slot = layout.gates[i];
        const double angle = gate_has_angle(slot.gate.kind)
                                 ? resolve_angle(slot, x, theta, i)
                                 : 0.0;
        apply_slot(rho, slot, angle, shift, static_cast<int>(i));
        // One channel per layout gate, also when the shifted path expanded
        // the gate into several unitaries.
        if (gate_is_two_qubit(slot.gate.kind)) {
            rho.depolarize2(slot.gate.q0, slot.gate.q1, noise.p2);
        } else {
            rho.depolarize1(slot.gate.q0, noise.p1);
        }
    }
    return rho;
}

}  // namespace qks

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

#include "qks/qsim_reference.hpp"

#include <vector>

#include "qks/circuit.hpp"

namespace qks::reference {

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
        }
    }
    return out;
}

// Embeds single-qubit operators at given wires, identity elsewhere. With
// qubit 0 as the most significant bit the full operator is the Kronecker
// product over wires 0..n-1 in order.
CMatrix embed(int n, const std::vector<std::pair<int, CMatrix>>& ops) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (int q = 0; q < n; ++q) {
        CMatrix factor = CMatrix::Identity(2, 2);
        for (const auto& [wire, op] : ops) {
            if (wire == q) factor = op;
        }
        out = kron(out, factor);
    }
    return out;
}

CMatrix mat2(const std::array<cplx, 4>& m) {
    CMatrix out(2, 2);
    out << m[0], m[1], m[2], m[3];
    return out;
}

}  // namespace

CMatrix gate_unitary(const Gate& g, int n) {
    const CMatrix p0 = (CMatrix(2, 2) << 1, 0, 0, 0).finished();
    const CMatrix p1 = (CMatrix(2, 2) << 0, 0, 0, 1).finished();
    const CMatrix x = (CMatrix(2, 2) << 0, 1, 1, 0).finished();
    const CMatrix z = (CMatrix(2, 2) << 1, 0, 0, -1).finished();
    switch (g.kind) {
        case GateKind::H:
        case GateKind::RX:
        case GateKind::RY:
        case GateKind::RZ:
            return embed(n, {{g.q0, mat2(gate_matrix_1q(g))}});
        case GateKind::CNOT:
            return embed(n, {{g.q0, p0}}) + embed(n, {{g.q0, p1}, {g.q1, x}});
        case GateKind::CZ:
            return embed(n, {{g.q0, p0}}) + embed(n, {{g.q0, p1}, {g.q1, z}});
        case GateKind::SWAP: {
            const CMatrix y = (CMatrix(2, 2) << 0, cplx{0, -1}, cplx{0, 1}, 0)
                                  .finished();
            return 0.5 * (embed(n, {}) + embed(n, {{g.q0, x}, {g.q1, x}}) +
                          embed(n, {{g.q0, y}, {g.q1, y}}) +
                          embed(n, {{g.q0, z}, {g.q1, z}}));
        }
        case GateKind::CRZ: {
            const CMatrix rz = mat2(gate_matrix_1q(Gate::rz(0, g.angle)));
            return embed(n, {{g.q0, p0}}) + embed(n, {{g.q0, p1}, {g.q1, rz}});
        }
    }
    throw ArgumentError("unknown gate kind");
}

CMatrix layout_unitary(const CircuitLayout& layout, std::span<const double> x,
                       std::span<const double> theta) {
    const int n = layout.num_qubits;
    const Eigen::Index dim = Eigen::Index{1} << n;
    CMatrix u = CMatrix::Identity(dim, dim);
    for (const GateSlot& slot : layout.gates) {
        Gate g = slot.gate;
        if (gate_has_angle(g.kind)) {
            if (!slot.binding) throw BindingError("rotation gate has no binding");
            switch (slot.binding->kind) {
                case Binding::Kind::Feature:
                    if (slot.binding->index < 0 ||
                        static_cast<size_t>(slot.binding->index) >= x.size()) {
                        throw BindingError("feature slot outside input");
                    }
                    g.angle = x[slot.binding->index];
                    break;
                case Binding::Kind::Param:
                    if (slot.binding->index < 0 ||
                        static_cast<size_t>(slot.binding->index) >= theta.size()) {
                        throw BindingError("parameter slot outside theta");
                    }
                    g.angle = theta[slot.binding->index];
                    break;
                case Binding::Kind::Const:
                    g.angle = slot.binding->value;
                    break;
            }
        }
        u = gate_unitary(g, n) * u;
    }
    return u;
}

CVector run_layout_dense(const CircuitLayout& layout, std::span<const double> x,
                         std::span<const double> theta) {
    const CMatrix u = layout_unitary(layout, x, theta);
    CVector e0 = CVector::Zero(u.rows());
    e0(0) = 1.0;
    return u * e0;
}

}  // namespace qks::reference

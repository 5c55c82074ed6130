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
 * @file qsim_reference.hpp
 * Serial reference backend: every gate is expanded to its dense 2^n x 2^n
 * matrix (Kronecker products in the shared bit convention) and multiplied
 * out. Deliberately independent of the in-place kernels in qsim.cpp; the
 * unit tests use it as the correctness oracle and the benchmark target
 * compares the two backends.
 */
#pragma once

#include <Eigen/Dense>
#include <span>

#include "qks/qsim.hpp"

namespace qks::reference {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Dense 2^n x 2^n unitary for one gate.
CMatrix gate_unitary(const Gate& g, int n);

/// Product of all bound gates of a layout, rightmost factor first.
CMatrix layout_unitary(const CircuitLayout& layout, std::span<const double> x,
                       std::span<const double> theta);

/// U |0...0>, computed with dense matrix products.
CVector run_layout_dense(const CircuitLayout& layout, std::span<const double> x,
                         std::span<const double> theta);

}  // namespace qks::reference

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
 * @file baselines.hpp
 * Reference kernels the searched circuits are compared against: a Gaussian
 * kernel swept over a data-scaled gamma grid, the fixed hardware-efficient
 * layout (all-X rotations, full entangler chain), and its trainable
 * extension with a per-block module of RY gates and a controlled-RZ ring
 * whose angles are trained by gradient ascent on the alignment.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qks/circuit.hpp"
#include "qks/data.hpp"
#include "qks/qsim.hpp"

namespace qks {

struct RbfkEntry {
    double scale = 0.0;   // grid value c
    double gamma = 0.0;   // c / (p * Var)
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

struct RbfkResult {
    std::vector<RbfkEntry> entries;
    double feature_variance = 0.0;  // population variance over all entries
    size_t best = 0;                // highest test accuracy, ties to lower c
};

/// Gaussian-kernel ridge sweep with gamma = c / (p * Var(train features))
/// for each c in the grid. Throws NumericError when the features have zero
/// variance.
RbfkResult rbfk_sweep(const TabularDataset& train, const TabularDataset& test,
                      std::span<const double> scales, double lambda = 1e-3);

/// Fixed hardware-efficient encoding: every rotation axis X, every
/// adjacent entangler on, features bound by the in-order strategy for the
/// p-vs-n regime.
CircuitLayout heak_layout(int n, int p, int l0 = 1);

/// The same blocks with a trainable module appended to each: parameter
/// slots run RY wires first then the controlled-RZ ring, block by block.
CircuitLayout tek_layout(int n, int p, int l0 = 1);

struct TekTraining {
    CircuitLayout layout;
    std::vector<double> gamma_init;
    std::vector<double> gamma_best;
    std::vector<double> kta_curve;  // entry 0 is the initial alignment
    double kta_best = 0.0;
};

/// Module angles start uniform in [0, 2pi) from the derived seed and climb
/// the alignment with fixed-step gradient ascent, keeping the best iterate.
TekTraining train_tek(const TabularDataset& train, int n, int l0 = 1,
                      int epochs = 30, double lr = 0.2, uint64_t seed = 0,
                      const std::optional<NoiseSpec>& noise = std::nullopt);

}  // namespace qks

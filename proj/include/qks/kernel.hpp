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
 * @file kernel.hpp
 * Fidelity-kernel Gram assembly, kernel-target alignment, the vanishing
 * similarity diagnostic, Gaussian baseline kernels and the regularized
 * kernel machine used for accuracy evaluation.
 *
 * Gram entries are independent, so assembly parallelizes over rows with
 * each thread writing disjoint slots: results are identical for any worker
 * count.
 */
#pragma once

#include <optional>
#include <span>
#include <string>

#include "qks/circuit.hpp"
#include "qks/data.hpp"
#include "qks/qsim.hpp"

namespace qks {

struct GramMatrix {
    Matrix entries;  // rows index X, cols index Y (or X again when square)
    bool square_training = false;

    int rows() const { return static_cast<int>(entries.rows()); }
    int cols() const { return static_cast<int>(entries.cols()); }
};

/// Pairwise state fidelities Tr(rho_i rho_j) under a bound layout. With a
/// second feature matrix the result is the rectangular cross Gram (rows
/// from x, columns from y); otherwise the symmetric training Gram, computed
/// on the upper triangle and mirrored. A noise spec switches every state to
/// the density-matrix backend.
GramMatrix gram(const CircuitLayout& layout, std::span<const double> theta,
                const Matrix& x, const Matrix* y = nullptr,
                const std::optional<NoiseSpec>& noise = std::nullopt);

/// exp(-gamma ||x_i - y_j||^2). gamma must be positive.
GramMatrix rbf_gram(const Matrix& x, const Matrix& y, double gamma);

/// Alignment between a square Gram and the class structure:
/// sum_ij J_ij Q_ij / (n ||Q||_F), where J_ij is 1 for same-class pairs and
/// -1/(R-1) otherwise (used for R = 2 as well). Throws NumericError on an
/// all-zero Gram and ArgumentError for R < 2 or out-of-range labels.
double kta(const GramMatrix& q, std::span<const int> labels, int num_classes);

/// Population variance of the strictly off-diagonal entries: the
/// concentration diagnostic (values near zero mean the kernel has gone
/// flat). Requires a square Gram with at least two rows.
double kernel_variance(const GramMatrix& q);

/// One-vs-rest ridge coefficients: column c solves (Q + lambda I) a = t_c
/// with targets +-1.
struct KernelMachine {
    Matrix alpha;  // n_train x num_classes
    double lambda = 1e-3;
    int num_classes = 0;
};

/// Training Grams must pass a positive-semidefinite check (eigenvalues
/// above this bound); worse violations indicate a broken kernel and abort.
inline constexpr double kPsdTolerance = -1e-7;

/// Residual bound each class solve must meet, relative to the target norm.
inline constexpr double kFitResidualTolerance = 1e-8;

KernelMachine fit(const GramMatrix& q, std::span<const int> labels,
                  int num_classes, double lambda = 1e-3);

/// Scores = Q_cross * alpha; label = argmax with ties toward the lowest
/// class index.
std::vector<int> predict(const KernelMachine& machine, const GramMatrix& q_cross);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Pearson correlation. Throws NumericError when either input has zero
/// variance and DimensionError for mismatched or too-short inputs.
double pearson(std::span<const double> x, std::span<const double> y);

struct GramMeta {
    int rows = 0;
    int cols = 0;
    std::string layout_hash;
    std::string theta_hash;
    double noise_p1 = 0.0;
    double noise_p2 = 0.0;
    bool square_training = false;
};

/// FNV over the raw parameter bytes; "empty" for no parameters.
std::string theta_hash(std::span<const double> theta);

/// Writes <prefix>.bin (row-major little-endian doubles) and
/// <prefix>.json (the metadata sidecar).
void save_gram(const std::string& prefix, const GramMatrix& q,
               const GramMeta& meta);

struct LoadedGram {
    GramMatrix gram;
    GramMeta meta;
};

LoadedGram load_gram(const std::string& prefix);

}  // namespace qks

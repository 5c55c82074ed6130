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
 * @file predictor.hpp
 * Alignment surrogate: a one-hidden-layer ReLU regressor trained with Adam
 * on Smooth-L1 loss that maps circuit images to ten-times-alignment
 * targets. Written from scratch so training is bit-reproducible: shuffles
 * come from the seeded generator and gradient accumulation runs per hidden
 * unit in fixed sample order, making results independent of worker count.
 */
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qks/circuit.hpp"

namespace qks {

/// Targets are scaled alignment values: target = kKtaTargetScale * KTA.
inline constexpr double kKtaTargetScale = 10.0;

struct PredictorModel {
    int input_dim = 0;
    int hidden = 0;
    /// Concatenated [w1 (hidden x input, row major), b1, w2, b2].
    std::vector<double> params;
    std::vector<double> adam_m, adam_v;
    long adam_step = 0;
    uint64_t init_seed = 0;
    std::vector<double> loss_curve;  // mean loss per epoch

    size_t param_count() const {
        return static_cast<size_t>(hidden) * input_dim + 2 * hidden + 1;
    }
    size_t w1_offset() const { return 0; }
    size_t b1_offset() const { return static_cast<size_t>(hidden) * input_dim; }
    size_t w2_offset() const { return b1_offset() + hidden; }
    size_t b2_offset() const { return w2_offset() + hidden; }

    double forward(std::span<const double> x) const;
    double forward(const CircuitImage& image) const;
};

/// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer, drawn in parameter
/// order from the given seed.
PredictorModel make_predictor(int input_dim, int hidden, uint64_t seed);

/// Standard shape for circuits up to l_max rotations: input 10 * l_max
/// (five channels, n rows, 2 * l_max / n columns), 128 hidden units.
PredictorModel init_model(int l_max, uint64_t seed);

struct PredictorSample {
    std::string layout_hash;
    std::vector<double> image;  // flattened bits as 0/1
    double target = 0.0;
};

double smooth_l1(double err);

struct TrainOptions {
    int epochs = 30;
    double learning_rate = 0.01;
    int batch_size = 32;
    uint64_t seed = 0;
};

/// Mean Smooth-L1 loss and its gradient over a batch; exposed for the
/// finite-difference tests.
double batch_loss_and_gradient(const PredictorModel& model,
                               std::span<const PredictorSample> batch,
                               std::span<double> grad);

/// Mini-batch Adam. Appends to model.loss_curve and returns it. Throws
/// NumericError naming the epoch if loss stops being finite.
std::vector<double> train_predictor(PredictorModel& model,
                                    std::span<const PredictorSample> samples,
                                    const TrainOptions& options);

/// Predicted alignment (forward output divided by the target scale) for
/// each layout imaged at max_width.
std::vector<double> score_layouts(const PredictorModel& model,
                                  std::span<const CircuitLayout> layouts,
                                  int max_width);

/// Checkpoint: magic line, JSON header (dims, seed, loss curve), then the
/// raw little-endian parameter block.
void save_predictor(const PredictorModel& model, const std::string& path);
PredictorModel load_predictor(const std::string& path);

}  // namespace qks

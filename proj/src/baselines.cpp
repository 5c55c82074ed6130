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

#include "qks/baselines.hpp"

#include <cmath>

#include "qks/errors.hpp"
#include "qks/kernel.hpp"
#include "qks/pipeline.hpp"
#include "qks/rng.hpp"

namespace qks {

namespace {
constexpr double kTau = 6.283185307179586;
}

RbfkResult rbfk_sweep(const TabularDataset& train, const TabularDataset& test,
                      std::span<const double> scales, double lambda) {
    if (scales.empty()) throw ArgumentError("empty gamma grid");
    if (train.n() < 1 || test.n() < 1)
        throw DimensionError("both splits must be non-empty");
    if (train.dim() != test.dim())
        throw DimensionError("train and test feature widths differ");

    const double mean = train.features.mean();
    const double var =
        (train.features.array() - mean).square().sum() /
        static_cast<double>(train.features.size());
    if (var <= 0.0)
        throw NumericError("features have zero variance, gamma grid undefined");

    RbfkResult out;
    out.feature_variance = var;
    const double denom = static_cast<double>(train.dim()) * var;
    for (double scale : scales) {
        if (scale <= 0.0) throw ArgumentError("grid scales must be positive");
        RbfkEntry entry;
        entry.scale = scale;
        entry.gamma = scale / denom;

        GramMatrix q_train = rbf_gram(train.features, train.features, entry.gamma);
        q_train.square_training = true;
        const KernelMachine machine =
            fit(q_train, train.labels, train.num_classes, lambda);
        entry.train_accuracy =
            accuracy(predict(machine, q_train), train.labels);
        const GramMatrix q_test =
            rbf_gram(test.features, train.features, entry.gamma);
        entry.test_accuracy = accuracy(predict(machine, q_test), test.labels);
        out.entries.push_back(entry);
    }
    for (size_t i = 1; i < out.entries.size(); ++i)
        if (out.entries[i].test_accuracy > out.entries[out.best].test_accuracy)
            out.best = i;
    return out;
}

CircuitLayout heak_layout(int n, int p, int l0) {
    const int count = blocks_for(n, l0, p);
    std::vector<BlockSpec> blocks(count);
    for (BlockSpec& blk : blocks) {
        blk.even_axis = Axis::X;
        blk.odd_axis = Axis::X;
        blk.entangler_mask.assign(n - 1, true);
    }
    CircuitLayout layout = make_layout(n, l0, p, std::move(blocks));
    Rng rng(0);  // in-order strategies never consult it
    assign_features(layout, canonical_strategy(n, p), rng);
    return layout;
}

CircuitLayout tek_layout(int n, int p, int l0) {
    CircuitLayout layout = heak_layout(n, p, l0);
    layout.trainable_modules = true;
    layout.rebuild_gates();
    Rng rng(0);
    assign_features(layout, canonical_strategy(n, p), rng);
    // module gates are the unbound RY and controlled-RZ slots, in order:
    // wires first, then the ring, block by block
    int slot = 0;
    for (GateSlot& gs : layout.gates) {
        if (gs.binding) continue;
        if (gs.gate.kind == GateKind::RY || gs.gate.kind == GateKind::CRZ)
            gs.binding = Binding{Binding::Kind::Param, slot++, 0.0};
    }
    return layout;
}

TekTraining train_tek(const TabularDataset& train, int n, int l0, int epochs,
                      double lr, uint64_t seed,
                      const std::optional<NoiseSpec>& noise) {
    if (epochs < 0) throw ArgumentError("negative epoch count");
    if (lr < 0.0) throw ArgumentError("negative learning rate");

    TekTraining out;
    out.layout = tek_layout(n, train.dim(), l0);
    const int params = out.layout.param_count();

    Rng rng(derive_seed(seed, {0x74656b}));  // "tek"
    std::vector<double> gamma(params);
    for (double& g : gamma) g = rng.uniform(0.0, kTau);
    out.gamma_init = gamma;

    const auto alignment_at = [&](const std::vector<double>& g) {
        const GramMatrix q =
            gram(out.layout, g, train.features, nullptr, noise);
        return kta(q, train.labels, train.num_classes);
    };

    double best = alignment_at(gamma);
    out.kta_curve.push_back(best);
    std::vector<double> gamma_best = gamma;
    for (int e = 0; e < epochs; ++e) {
        const std::vector<double> grad =
            kta_gradient(out.layout, gamma, train, noise);
        for (int j = 0; j < params; ++j) gamma[j] += lr * grad[j];
        const double value = alignment_at(gamma);
        out.kta_curve.push_back(value);
        if (value > best) {
            best = value;
            gamma_best = gamma;
        }
    }
    out.kta_best = best;
    out.gamma_best = std::move(gamma_best);
    return out;
}

}  // namespace qks

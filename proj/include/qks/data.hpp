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
 * @file data.hpp
 * Tabular dataset handling: CSV ingest, mutual-information based feature
 * selection (mRMR), PCA reduction, angle rescaling and stratified splits.
 *
 * Selectors are fit on training data and record per-output min/max so that
 * apply_selector maps the training range onto [0, 2pi) rotation angles;
 * out-of-range values (test data) are clipped.
 */
#pragma once

#include <span>
#include <string>
#include <vector>

#include "qks/common.hpp"
#include "qks/errors.hpp"

namespace qks {

struct TabularDataset {
    Matrix features;          // n x d, row major
    std::vector<int> labels;  // values in [0, num_classes)
    int num_classes = 0;

    int n() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
    std::span<const double> row(int i) const {
        return {features.data() + static_cast<size_t>(i) * dim(),
                static_cast<size_t>(dim())};
    }
};

/// Numeric CSV with an optional header row. `label_column` is a column name
/// (requires a header) or a 0-based index given as digits. Labels must be
/// non-negative integers; classes are 0..max.
TabularDataset load_csv(const std::string& path, const std::string& label_column);

/// Writes features plus a trailing label column, with a header row.
void save_csv(const TabularDataset& data, const std::string& path,
              const std::string& label_name = "label");

/// Output features rescale to [0, 2pi * (1 - kAngleMargin)].
inline constexpr double kAngleMargin = 1e-9;

struct FeatureSelector {
    enum class Method { Mrmr, Pca };
    Method method = Method::Mrmr;
    std::vector<int> indices;  // Mrmr: selected columns in pick order
    Matrix projection;         // Pca: d x p, orthonormal columns
    Vector mean;               // Pca: train feature means
    Vector out_min, out_max;   // train range of each output feature

    std::string to_json() const;
    static FeatureSelector from_json(const std::string& text);
};

/// Greedy max-relevance min-redundancy pick of p columns. Mutual
/// information uses equal-frequency binning of the features (labels stay
/// discrete); ties resolve toward the lowest column index.
FeatureSelector mrmr_select(const TabularDataset& train, int p, int bins = 8);

/// Top-p principal components of the centered training features, descending
/// eigenvalue order, each column signed so its largest-magnitude loading is
/// positive.
FeatureSelector pca_reduce(const TabularDataset& train, int p);

/// Transforms features and rescales every output column to angles.
TabularDataset apply_selector(const FeatureSelector& sel,
                              const TabularDataset& data);

/// Joint-histogram mutual information (natural log) between two already
/// discretized sequences. Exposed for the selection tests.
double mutual_information(std::span<const int> a, std::span<const int> b);

/// Equal-frequency bin assignment used by mrmr_select.
std::vector<int> equal_frequency_bins(std::span<const double> values, int bins);

struct SplitResult {
    TabularDataset train;
    TabularDataset test;
    std::vector<std::string> warnings;
};

/// Per-class shuffle and split; `fraction` of each class lands in train
/// (rounded, both sides kept non-empty). Classes with fewer than two
/// members stay whole in train and add a warning.
SplitResult stratified_split(const TabularDataset& data, double fraction,
                             uint64_t seed);

}  // namespace qks

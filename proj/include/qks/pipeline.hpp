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
 * @file pipeline.hpp
 * The four-stage kernel search: sample a layout pool, label it with
 * alignment targets, train the surrogate, rank a candidate pool, then
 * fine-tune the top candidates by parameter-shift gradient ascent on the
 * alignment. Every stage draws its randomness from seeds derived off the
 * master seed, so a full search is bit-identical to running the stages one
 * at a time with the same seed.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qks/circuit.hpp"
#include "qks/data.hpp"
#include "qks/kernel.hpp"
#include "qks/predictor.hpp"
#include "qks/qsim.hpp"

namespace qks {

/// Stage tags for seed derivation; stable across releases so stored runs
/// stay reproducible.
inline constexpr uint64_t kSeedPool = 0x706f6f6c;       // "pool"
inline constexpr uint64_t kSeedPredictor = 0x6d6c70;    // "mlp"
inline constexpr uint64_t kSeedRank = 0x72616e6b;       // "rank"
inline constexpr uint64_t kSeedFinetune = 0x66696e65;   // "fine"

struct SearchConfig {
    int n = 4;
    std::vector<int> l0_list = {1};
    int p = 4;
    std::string strategy = "auto";  // encoding strategy, auto = regime default

    int pool_size = 36;             // labeled pool M
    int candidate_pool_size = 72;   // scoring pool M'
    bool exhaustive_candidates = false;
    int top_k = 5;

    int theta_trials = 3;
    int finetune_epochs = 30;
    double finetune_lr = 0.2;
    double lambda = 1e-3;

    int predictor_epochs = 30;
    double predictor_lr = 0.01;
    int predictor_batch = 32;

    uint64_t seed = 0;
    double noise_p1 = 0.0;
    double noise_p2 = 0.0;
    int workers = 1;

    // data plumbing for full runs: either one CSV plus a split fraction or
    // a pre-split pair
    std::string data_csv;
    std::string train_csv, test_csv;
    std::string label_column = "label";
    double train_fraction = 0.5;
    std::string selector_method = "none";  // none | mrmr | pca
    int selector_p = 0;                    // 0 = use p
    int selector_bins = 8;

    std::optional<NoiseSpec> noise() const;
    void validate() const;
    std::string to_json() const;
    static SearchConfig from_json(const std::string& text);
};

EncodingStrategy resolve_strategy(const SearchConfig& config);

enum class Stage { TrainingPool, Candidate, Finetuned };
const char* stage_name(Stage s);

struct CandidateRecord {
    CircuitLayout layout;
    std::string hash;
    std::vector<double> theta;  // empty while no gate is promoted
    double kta_train = 0.0;
    std::optional<double> predicted_kta;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    Stage stage = Stage::TrainingPool;
};

/// Layouts drawn with per-index derived seeds, cycling through l0_list.
std::vector<CircuitLayout> sample_pool(const SearchConfig& config);

struct PoolResult {
    std::vector<CircuitLayout> layouts;   // the layouts that labeled cleanly
    std::vector<double> kta_values;       // alignment per kept layout
    std::vector<PredictorSample> samples; // images at max_width, scaled targets
    int max_width = 0;
    int dropped = 0;
    std::vector<std::string> notes;
};

/// Training-Gram alignment per layout. Grams are cached by layout hash, so
/// duplicates get bit-identical targets. Layouts whose Gram or alignment
/// computation throws are dropped with a note instead of aborting.
PoolResult label_pool(const std::vector<CircuitLayout>& layouts,
                      const TabularDataset& train,
                      const std::optional<NoiseSpec>& noise = std::nullopt);

struct RankedCandidate {
    CircuitLayout layout;
    std::string hash;
    double predicted_kta = 0.0;
};

/// Scores the candidate pool (freshly sampled, or the exhaustive block
/// space) and keeps the top k by predicted alignment; ties fall back to
/// hash order. Candidates too wide for max_width are skipped with a note.
std::vector<RankedCandidate> rank_and_select(
    const PredictorModel& model, const SearchConfig& config, int max_width,
    std::vector<std::string>* notes = nullptr);

/// d(alignment)/d(theta) by the parameter-shift rule: every occurrence of a
/// parameter (both sides of each Gram entry, and both half-rotations inside
/// a bound controlled-RZ) is offset by +-pi/2, and the entry derivatives
/// are chained through the normalized alignment analytically.
std::vector<double> kta_gradient(
    const CircuitLayout& layout, std::span<const double> theta,
    const TabularDataset& train,
    const std::optional<NoiseSpec>& noise = std::nullopt);

struct FinetuneTrace {
    int candidate = 0;
    int trial = 0;
    int m = 0;                       // promoted gate count
    std::vector<int> positions;      // rotation order indices
    std::vector<double> theta_init;  // training means of replaced features
    std::vector<double> theta_best;
    std::vector<double> kta_curve;   // entry 0 is the initial alignment
    double kta_best = 0.0;
    bool skipped = false;
};

/// Gram, alignment, ridge fit and both accuracies for one bound layout.
CandidateRecord evaluate_candidate(const CircuitLayout& layout,
                                   std::span<const double> theta,
                                   const TabularDataset& train,
                                   const TabularDataset& test,
                                   const SearchConfig& config, Stage stage);

/// Per trial, one (m, positions) draw is shared by every candidate with the
/// same rotation count, the promoted parameters start at the training means
/// of the features they replace, and gradient ascent keeps the best iterate.
/// Each returned record is the best over all trials and the unpromoted
/// candidate itself, so fine-tuning never loses to the candidate stage.
std::vector<CandidateRecord> finetune_candidates(
    const std::vector<RankedCandidate>& candidates,
    const TabularDataset& train, const TabularDataset& test,
    const SearchConfig& config, std::vector<FinetuneTrace>* traces = nullptr,
    std::vector<std::string>* notes = nullptr);

struct StageTiming {
    std::string name;
    double seconds = 0.0;
};

struct SearchResult {
    PoolResult pool;
    PredictorModel predictor;
    std::vector<RankedCandidate> ranked;
    std::vector<FinetuneTrace> traces;
    /// Pool records, then candidate records, then fine-tuned records.
    std::vector<CandidateRecord> records;
    /// Index into records of the fine-tuned record with the best test
    /// accuracy.
    size_t chosen = 0;
    std::vector<std::string> notes;
    std::vector<StageTiming> timings;
};

SearchResult run_full_search(const SearchConfig& config,
                             const TabularDataset& train,
                             const TabularDataset& test);

struct PreparedData {
    TabularDataset train, test;
    std::optional<FeatureSelector> selector;
    std::vector<std::string> warnings;
};

/// Loads the configured CSVs, splits when a single file is given, fits the
/// configured selector on train only and maps both sides to angles.
PreparedData prepare_data(const SearchConfig& config);

}  // namespace qks

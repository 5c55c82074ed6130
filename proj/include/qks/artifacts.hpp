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
 * @file artifacts.hpp
 * Run-directory persistence. A search run leaves behind a fixed tree:
 *
 *   config.json                       echo of the effective configuration
 *   data/train.csv, data/test.csv     prepared splits, angle scaled
 *   data/selector.json                the fitted feature selector
 *   pool/layouts/<hash>.json          each distinct sampled layout
 *   pool/labels.csv                   index, hash, target, image bits
 *   pool/meta.json                    qubit count, max image width, drops
 *   predictor.ckpt                    trained surrogate checkpoint
 *   candidates.csv                    rank, hash, predicted and true KTA
 *   candidates/<hash>.json            each selected candidate layout
 *   finetune/candidate_C_trial_T.json per-trial theta and KTA traces
 *   finetune/records.json             per-candidate winners with metrics
 *   report.csv                        one row per record, all stages
 *   chosen.json                       the winning layout with its metrics
 *   manifest.json                     version, seed, timings, file hashes
 *
 * Every file is written deterministically (sorted keys, round-trip double
 * formatting), so identical config and seed reproduce identical bytes. The
 * manifest records a run hash over the config, seed and artifact hashes;
 * wall-clock timings are excluded from it so reruns agree.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qks/pipeline.hpp"

namespace qks {

inline constexpr const char* kToolVersion = "0.1.0";

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// FNV-1a over the raw file bytes, as 16 hex digits.
std::string file_hash_hex(const std::string& path);

/// Path helpers for one run directory. Construction does not touch disk.
struct RunPaths {
    std::string root;
    explicit RunPaths(std::string root_dir) : root(std::move(root_dir)) {}

    std::string config() const { return root + "/config.json"; }
    std::string data_dir() const { return root + "/data"; }
    std::string data_train() const { return root + "/data/train.csv"; }
    std::string data_test() const { return root + "/data/test.csv"; }
    std::string selector_json() const { return root + "/data/selector.json"; }
    std::string pool_dir() const { return root + "/pool"; }
    std::string pool_layouts_dir() const { return root + "/pool/layouts"; }
    std::string labels_csv() const { return root + "/pool/labels.csv"; }
    std::string pool_meta() const { return root + "/pool/meta.json"; }
    std::string predictor_ckpt() const { return root + "/predictor.ckpt"; }
    std::string candidates_csv() const { return root + "/candidates.csv"; }
    std::string candidates_dir() const { return root + "/candidates"; }
    std::string finetune_dir() const { return root + "/finetune"; }
    std::string report_csv() const { return root + "/report.csv"; }
    std::string chosen_json() const { return root + "/chosen.json"; }
    std::string manifest() const { return root + "/manifest.json"; }

    std::string layout_file(const std::string& hash) const {
        return pool_layouts_dir() + "/" + hash + ".json";
    }
    std::string candidate_file(const std::string& hash) const {
        return candidates_dir() + "/" + hash + ".json";
    }
    std::string trace_file(int candidate, int trial) const {
        return finetune_dir() + "/candidate_" + std::to_string(candidate) +
               "_trial_" + std::to_string(trial) + ".json";
    }
};

void save_config(const SearchConfig& config, const RunPaths& paths);
SearchConfig load_config(const RunPaths& paths);

void save_pool(const PoolResult& pool, int num_qubits, const RunPaths& paths);
/// Rebuilds layouts, targets and images from labels.csv plus the layout
/// files; kta_values are recovered by unscaling the stored targets.
PoolResult load_pool(const RunPaths& paths);

/// candidates.csv rows carry the predicted alignment from the surrogate
/// next to the true training alignment, in rank order.
void save_candidates(const std::vector<RankedCandidate>& ranked,
                     const std::vector<double>& kta_true,
                     const RunPaths& paths);
/// Returned records have stage Candidate, the ranked layout and hash, the
/// predicted and true alignments, and no theta or accuracies.
std::vector<CandidateRecord> load_candidates(const RunPaths& paths);

void save_finetune(const std::vector<FinetuneTrace>& traces,
                   const std::vector<RankedCandidate>& ranked,
                   const RunPaths& paths);
std::vector<FinetuneTrace> load_finetune(const RunPaths& paths);

/// The fully evaluated winner per candidate after fine-tuning, with its
/// (possibly promoted) layout, so the report stage never re-runs ascent.
void save_finetuned_records(const std::vector<CandidateRecord>& records,
                            const RunPaths& paths);
std::vector<CandidateRecord> load_finetuned_records(const RunPaths& paths);

/// report.csv: stage, hash, predicted KTA (blank for pool rows), training
/// KTA, both accuracies, and a chosen marker on the winning row.
void save_report(const std::vector<CandidateRecord>& records, size_t chosen,
                 const RunPaths& paths);

void save_chosen(const CandidateRecord& record, const RunPaths& paths);
CandidateRecord load_chosen(const RunPaths& paths);

struct ManifestEntry {
    std::string path;  // relative to the run root, '/' separated
    std::string fnv64;
};

struct RunManifest {
    std::string tool_version;
    uint64_t seed = 0;
    int max_width = 0;
    std::string config_json;
    std::vector<StageTiming> stages;
    std::vector<ManifestEntry> artifacts;  // sorted by path
    /// Hash over version, seed, config and artifact hashes; timings are
    /// left out so repeated identical runs produce the same value.
    std::string run_hash;
};

/// Scans the run directory (every regular file except manifest.json),
/// hashes each artifact and writes manifest.json.
RunManifest write_manifest(const SearchConfig& config, int max_width,
                           const std::vector<StageTiming>& timings,
                           const RunPaths& paths);
RunManifest load_manifest(const RunPaths& paths);

/// Re-hashes every artifact listed in the manifest; throws ParseError on a
/// missing file, a hash mismatch, or a run-hash mismatch.
void verify_manifest(const RunPaths& paths);

/// Writes the complete tree for a finished search, manifest included.
RunManifest persist_search(const SearchConfig& config,
                           const SearchResult& result,
                           const std::string& out_dir);

}  // namespace qks

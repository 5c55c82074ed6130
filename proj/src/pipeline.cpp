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

#include "qks/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "qks/common.hpp"
#include "qks/errors.hpp"

namespace qks {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kHalfPi = 1.5707963267948966;

}  // namespace

std::optional<NoiseSpec> SearchConfig::noise() const {
    if (noise_p1 == 0.0 && noise_p2 == 0.0) return std::nullopt;
    NoiseSpec spec{noise_p1, noise_p2};
    spec.validate();
    return spec;
}

void SearchConfig::validate() const {
    if (n < 2 || n > kMaxStateQubits)
        throw ArgumentError("qubit count " + std::to_string(n) +
                            " outside [2, " + std::to_string(kMaxStateQubits) +
                            "]");
    if (p < 1) throw ArgumentError("feature count must be at least 1");
    if (l0_list.empty()) throw ArgumentError("l0_list must not be empty");
    for (int l0 : l0_list)
        if (l0 < 1) throw ArgumentError("every l0 must be at least 1");
    if (pool_size < 1) throw ArgumentError("pool_size must be at least 1");
    if (candidate_pool_size < 1)
        throw ArgumentError("candidate_pool_size must be at least 1");
    if (top_k < 1) throw ArgumentError("top_k must be at least 1");
    if (!exhaustive_candidates && top_k > candidate_pool_size)
        throw RangeError("top_k " + std::to_string(top_k) +
                         " exceeds candidate pool " +
                         std::to_string(candidate_pool_size));
    if (theta_trials < 1) throw ArgumentError("theta_trials must be at least 1");
    if (finetune_epochs < 0) throw ArgumentError("negative finetune_epochs");
    if (finetune_lr < 0.0) throw ArgumentError("negative finetune_lr");
    if (lambda <= 0.0) throw ArgumentError("lambda must be positive");
    if (predictor_epochs < 0) throw ArgumentError("negative predictor_epochs");
    if (predictor_lr <= 0.0) throw ArgumentError("predictor_lr must be positive");
    if (predictor_batch < 1) throw ArgumentError("predictor_batch must be at least 1");
    if (workers < 1) throw ArgumentError("workers must be at least 1");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw ArgumentError("train_fraction must lie strictly between 0 and 1");
    NoiseSpec{noise_p1, noise_p2}.validate();
    if (strategy != "auto") strategy_from_name(strategy);
    if (selector_method != "none" && selector_method != "mrmr" &&
        selector_method != "pca")
        throw ArgumentError("selector_method must be none, mrmr or pca");
    if (selector_bins < 2) throw ArgumentError("selector_bins must be at least 2");
}

std::string SearchConfig::to_json() const {
    ordered_json j;
    j["n"] = n;
    j["l0_list"] = l0_list;
    j["p"] = p;
    j["strategy"] = strategy;
    j["pool_size"] = pool_size;
    j["candidate_pool_size"] = candidate_pool_size;
    j["exhaustive_candidates"] = exhaustive_candidates;
    j["top_k"] = top_k;
    j["theta_trials"] = theta_trials;
    j["finetune_epochs"] = finetune_epochs;
    j["finetune_lr"] = finetune_lr;
    j["lambda"] = lambda;
    j["predictor_epochs"] = predictor_epochs;
    j["predictor_lr"] = predictor_lr;
    j["predictor_batch"] = predictor_batch;
    j["seed"] = seed;
    j["noise_p1"] = noise_p1;
    j["noise_p2"] = noise_p2;
    j["workers"] = workers;
    j["data_csv"] = data_csv;
    j["train_csv"] = train_csv;
    j["test_csv"] = test_csv;
    j["label_column"] = label_column;
    j["train_fraction"] = train_fraction;
    j["selector_method"] = selector_method;
    j["selector_p"] = selector_p;
    j["selector_bins"] = selector_bins;
    return j.dump();
}

SearchConfig SearchConfig::from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError("bad search config: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ParseError("search config must be a JSON object");
    SearchConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "n") c.n = value.get<int>();
            else if (key == "l0_list") c.l0_list = value.get<std::vector<int>>();
            else if (key == "p") c.p = value.get<int>();
            else if (key == "strategy") c.strategy = value.get<std::string>();
            else if (key == "pool_size") c.pool_size = value.get<int>();
            else if (key == "candidate_pool_size")
                c.candidate_pool_size = value.get<int>();
            else if (key == "exhaustive_candidates")
                c.exhaustive_candidates = value.get<bool>();
            else if (key == "top_k") c.top_k = value.get<int>();
            else if (key == "theta_trials") c.theta_trials = value.get<int>();
            else if (key == "finetune_epochs") c.finetune_epochs = value.get<int>();
            else if (key == "finetune_lr") c.finetune_lr = value.get<double>();
            else if (key == "lambda") c.lambda = value.get<double>();
            else if (key == "predictor_epochs")
                c.predictor_epochs = value.get<int>();
            else if (key == "predictor_lr") c.predictor_lr = value.get<double>();
            else if (key == "predictor_batch")
                c.predictor_batch = value.get<int>();
            else if (key == "seed") c.seed = value.get<uint64_t>();
            else if (key == "noise_p1") c.noise_p1 = value.get<double>();
            else if (key == "noise_p2") c.noise_p2 = value.get<double>();
            else if (key == "workers") c.workers = value.get<int>();
            else if (key == "data_csv") c.data_csv = value.get<std::string>();
            else if (key == "train_csv") c.train_csv = value.get<std::string>();
            else if (key == "test_csv") c.test_csv = value.get<std::string>();
            else if (key == "label_column")
                c.label_column = value.get<std::string>();
            else if (key == "train_fraction")
                c.train_fraction = value.get<double>();
            else if (key == "selector_method")
                c.selector_method = value.get<std::string>();
            else if (key == "selector_p") c.selector_p = value.get<int>();
            else if (key == "selector_bins") c.selector_bins = value.get<int>();
            else throw ParseError("unknown config key '" + key + "'");
        }
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError("bad search config value: " + std::string(e.what()));
    }
    return c;
}

EncodingStrategy resolve_strategy(const SearchConfig& config) {
    if (config.strategy == "auto")
        return canonical_strategy(config.n, config.p);
    return strategy_from_name(config.strategy);
}

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::TrainingPool: return "training_pool";
        case Stage::Candidate: return "candidate";
        case Stage::Finetuned: return "finetuned";
    }
    throw ArgumentError("unknown stage");
}

std::vector<CircuitLayout> sample_pool(const SearchConfig& config) {
    config.validate();
    const EncodingStrategy strat = resolve_strategy(config);
    std::vector<CircuitLayout> out;
    out.reserve(config.pool_size);
    for (int i = 0; i < config.pool_size; ++i) {
        const int l0 = config.l0_list[i % config.l0_list.size()];
        Rng rng(derive_seed(config.seed,
                            {kSeedPool, static_cast<uint64_t>(i)}));
        out.push_back(sample_layout(config.n, l0, config.p, strat, rng));
    }
    return out;
}

PoolResult label_pool(const std::vector<CircuitLayout>& layouts,
                      const TabularDataset& train,
                      const std::optional<NoiseSpec>& noise) {
    PoolResult out;
    const long count = static_cast<long>(layouts.size());
    std::vector<std::string> hashes(count);
    for (long i = 0; i < count; ++i) hashes[i] = layout_hash(layouts[i]);

    // one Gram per distinct layout; duplicates reuse the cached alignment
    struct Labeled {
        bool computed = false;
        bool ok = false;
        double kta_value = 0.0;
        std::string error;
    };
    std::map<std::string, Labeled> cache;
    std::vector<long> unique_idx;
    for (long i = 0; i < count; ++i) {
        if (cache.emplace(hashes[i], Labeled{}).second) unique_idx.push_back(i);
    }

#pragma omp parallel for schedule(dynamic)
    for (long u = 0; u < static_cast<long>(unique_idx.size()); ++u) {
        const long i = unique_idx[u];
        Labeled result;
        result.computed = true;
        try {
            const GramMatrix q =
                gram(layouts[i], {}, train.features, nullptr, noise);
            result.kta_value = kta(q, train.labels, train.num_classes);
            result.ok = true;
        } catch (const std::exception& e) {
            result.error = e.what();
        }
        // distinct hashes, so no two iterations touch the same slot
        cache[hashes[i]] = result;
    }

    for (long i = 0; i < count; ++i) {
        const Labeled& lab = cache[hashes[i]];
        if (!lab.ok) {
            out.dropped += 1;
            out.notes.push_back("dropped layout " + hashes[i] + ": " + lab.error);
            continue;
        }
        out.layouts.push_back(layouts[i]);
        out.kta_values.push_back(lab.kta_value);
        out.max_width =
            std::max(out.max_width, 2 * layouts[i].num_blocks());
    }

    for (size_t i = 0; i < out.layouts.size(); ++i) {
        const CircuitImage image = encode_image(out.layouts[i], out.max_width);
        PredictorSample s;
        s.layout_hash = layout_hash(out.layouts[i]);
        s.image.assign(image.bits.begin(), image.bits.end());
        s.target = kKtaTargetScale * out.kta_values[i];
        out.samples.push_back(std::move(s));
    }
    return out;
}

std::vector<RankedCandidate> rank_and_select(const PredictorModel& model,
                                             const SearchConfig& config,
                                             int max_width,
                                             std::vector<std::string>* notes) {
    config.validate();
    std::vector<CircuitLayout> space;
    if (config.exhaustive_candidates) {
        for (int l0 : config.l0_list) {
            auto cell = enumerate_block_space(config.n, l0, config.p);
            space.insert(space.end(), std::make_move_iterator(cell.begin()),
                         std::make_move_iterator(cell.end()));
        }
    } else {
        const EncodingStrategy strat = resolve_strategy(config);
        space.reserve(config.candidate_pool_size);
        for (int i = 0; i < config.candidate_pool_size; ++i) {
            const int l0 = config.l0_list[i % config.l0_list.size()];
            Rng rng(derive_seed(config.seed,
                                {kSeedRank, static_cast<uint64_t>(i)}));
            space.push_back(sample_layout(config.n, l0, config.p, strat, rng));
        }
    }
    if (config.top_k > static_cast<int>(space.size()))
        throw RangeError("top_k " + std::to_string(config.top_k) +
                         " exceeds scoring pool of " +
                         std::to_string(space.size()));

    // layouts wider than the pool image width cannot be scored
    std::vector<CircuitLayout> keep;
    std::vector<std::string> hashes;
    for (auto& layout : space) {
        if (2 * layout.num_blocks() > max_width) {
            if (notes)
                notes->push_back("skipped candidate " + layout_hash(layout) +
                                 ": width " +
                                 std::to_string(2 * layout.num_blocks()) +
                                 " exceeds pool image width " +
                                 std::to_string(max_width));
            continue;
        }
        hashes.push_back(layout_hash(layout));
        keep.push_back(std::move(layout));
    }
    if (config.top_k > static_cast<int>(keep.size()))
        throw RangeError("top_k " + std::to_string(config.top_k) +
                         " exceeds the " + std::to_string(keep.size()) +
                         " candidates that fit the image width");

    const std::vector<double> scores = score_layouts(model, keep, max_width);
    std::vector<size_t> order(keep.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return hashes[a] < hashes[b];
    });

    std::vector<RankedCandidate> out;
    out.reserve(config.top_k);
    for (int r = 0; r < config.top_k; ++r) {
        const size_t idx = order[r];
        out.push_back({keep[idx], hashes[idx], scores[idx]});
    }
    return out;
}

namespace {

Matrix class_agreement(std::span<const int> labels, int num_classes) {
    const long count = static_cast<long>(labels.size());
    const double off = -1.0 / (num_classes - 1);
    Matrix j(count, count);
    for (long r = 0; r < count; ++r)
        for (long c = 0; c < count; ++c)
            j(r, c) = labels[r] == labels[c] ? 1.0 : off;
    return j;
}

struct ParamOccurrence {
    OccurrenceShift where;  // delta filled per shift
    double coeff = 0.0;     // d(occurrence angle)/d(theta)
};

std::vector<std::vector<ParamOccurrence>> collect_occurrences(
    const CircuitLayout& layout, int param_count) {
    std::vector<std::vector<ParamOccurrence>> occ(param_count);
    for (int g = 0; g < static_cast<int>(layout.gates.size()); ++g) {
        const GateSlot& slot = layout.gates[g];
        if (!slot.binding || slot.binding->kind != Binding::Kind::Param)
            continue;
        const int j = slot.binding->index;
        if (slot.gate.kind == GateKind::CRZ) {
            // bound angle t enters as +t/2 and -t/2 internal rotations
            occ[j].push_back({{g, 0, 0.0}, 0.5});
            occ[j].push_back({{g, 1, 0.0}, -0.5});
        } else {
            occ[j].push_back({{g, 0, 0.0}, 1.0});
        }
    }
    return occ;
}

template <class MakeState, class Overlap>
std::vector<double> gradient_impl(
    std::span<const double> theta, const TabularDataset& train,
    const std::vector<std::vector<ParamOccurrence>>& occ, MakeState make,
    Overlap overlap) {
    const long count = train.n();
    using StateT = decltype(make(train.row(0), nullptr));

    std::vector<StateT> base;
    base.reserve(count);
    for (long i = 0; i < count; ++i)
        base.push_back(make(train.row(i), nullptr));

    Matrix q(count, count);
    for (long i = 0; i < count; ++i) {
        for (long j = i; j < count; ++j) {
            const double f = overlap(base[i], base[j]);
            q(i, j) = f;
            q(j, i) = f;
        }
    }

    const Matrix agreement = class_agreement(train.labels, train.num_classes);
    const double a = (agreement.array() * q.array()).sum();
    const double frob = std::sqrt((q.array() * q.array()).sum());
    if (frob == 0.0)
        throw NumericError("alignment gradient undefined for an all-zero Gram");

    std::vector<double> grad(theta.size(), 0.0);
    for (size_t pj = 0; pj < occ.size(); ++pj) {
        Matrix dq = Matrix::Zero(count, count);
        for (const ParamOccurrence& o : occ[pj]) {
            OccurrenceShift plus = o.where;
            plus.delta = kHalfPi;
            OccurrenceShift minus = o.where;
            minus.delta = -kHalfPi;
            std::vector<StateT> up, down;
            up.reserve(count);
            down.reserve(count);
            for (long i = 0; i < count; ++i) {
                up.push_back(make(train.row(i), &plus));
                down.push_back(make(train.row(i), &minus));
            }
            // shifted bra rows plus the transpose for the ket side
            for (long i = 0; i < count; ++i) {
                for (long j = 0; j < count; ++j) {
                    const double s = 0.5 * (overlap(up[i], base[j]) -
                                            overlap(down[i], base[j]));
                    dq(i, j) += o.coeff * s;
                    dq(j, i) += o.coeff * s;
                }
            }
        }
        const double da = (agreement.array() * dq.array()).sum();
        const double qdq = (q.array() * dq.array()).sum();
        grad[pj] =
            (da * frob * frob - a * qdq) / (count * frob * frob * frob);
    }
    return grad;
}

}  // namespace

std::vector<double> kta_gradient(const CircuitLayout& layout,
                                 std::span<const double> theta,
                                 const TabularDataset& train,
                                 const std::optional<NoiseSpec>& noise) {
    const int params = layout.param_count();
    if (params == 0)
        throw ArgumentError("layout has no parameter slots to differentiate");
    if (static_cast<int>(theta.size()) != params)
        throw DimensionError("theta has " + std::to_string(theta.size()) +
                             " entries, layout expects " +
                             std::to_string(params));
    if (train.n() < 2)
        throw DimensionError("alignment gradient needs at least two samples");
    if (train.num_classes < 2)
        throw ArgumentError("alignment gradient needs at least two classes");

    const auto occ = collect_occurrences(layout, params);
    if (noise && noise->enabled()) {
        return gradient_impl(
            theta, train, occ,
            [&](std::span<const double> x, const OccurrenceShift* shift) {
                return run_layout_noisy(layout, x, theta, *noise, shift);
            },
            [](const DensityMatrix& a, const DensityMatrix& b) {
                return dm_overlap(a, b);
            });
    }
    return gradient_impl(
        theta, train, occ,
        [&](std::span<const double> x, const OccurrenceShift* shift) {
            return run_layout(layout, x, theta, shift);
        },
        [](const StateVector& a, const StateVector& b) {
            return state_fidelity(a, b);
        });
}

CandidateRecord evaluate_candidate(const CircuitLayout& layout,
                                   std::span<const double> theta,
                                   const TabularDataset& train,
                                   const TabularDataset& test,
                                   const SearchConfig& config, Stage stage) {
    const auto noise = config.noise();
    CandidateRecord rec;
    rec.layout = layout;
    rec.hash = layout_hash(layout);
    rec.theta.assign(theta.begin(), theta.end());
    rec.stage = stage;

    const GramMatrix q_train =
        gram(layout, theta, train.features, nullptr, noise);
    rec.kta_train = kta(q_train, train.labels, train.num_classes);
    const KernelMachine machine =
        fit(q_train, train.labels, train.num_classes, config.lambda);
    rec.train_accuracy = accuracy(predict(machine, q_train), train.labels);
    const GramMatrix q_test =
        gram(layout, theta, test.features, &train.features, noise);
    rec.test_accuracy = accuracy(predict(machine, q_test), test.labels);
    return rec;
}

std::vector<CandidateRecord> finetune_candidates(
    const std::vector<RankedCandidate>& candidates,
    const TabularDataset& train, const TabularDataset& test,
    const SearchConfig& config, std::vector<FinetuneTrace>* traces,
    std::vector<std::string>* notes) {
    config.validate();
    if (candidates.empty()) return {};
    const auto noise = config.noise();
    const int trials = config.theta_trials;
    const long total = static_cast<long>(candidates.size()) * trials;

    // One (m, positions) draw per trial, shared by every candidate with the
    // same rotation count and layer setting.
    struct Draw {
        bool skipped = false;
        std::vector<int> positions;
    };
    using GroupKey = std::pair<int, int>;  // (total rotations, l0)
    std::map<GroupKey, std::vector<Draw>> draws;
    for (const auto& cand : candidates) {
        const GroupKey key{cand.layout.total_rotations(), cand.layout.l0};
        if (draws.count(key)) continue;
        auto& list = draws[key];
        const int per_layer = key.first / key.second;
        std::vector<int> eligible;
        const std::vector<int> rot = cand.layout.rotation_gate_indices();
        for (size_t r = 0; r < rot.size(); ++r) {
            const auto& binding = cand.layout.gates[rot[r]].binding;
            if (binding && binding->kind == Binding::Kind::Feature)
                eligible.push_back(static_cast<int>(r));
        }
        for (int t = 0; t < trials; ++t) {
            Draw d;
            if (per_layer - 1 < 1 || eligible.empty()) {
                d.skipped = true;
                if (notes && t == 0)
                    notes->push_back(
                        "fine-tune skipped for rotation count " +
                        std::to_string(key.first) + ", l0 " +
                        std::to_string(key.second) +
                        ": no promotable gate budget");
            } else {
                Rng rng(derive_seed(
                    config.seed,
                    {kSeedFinetune, static_cast<uint64_t>(t),
                     static_cast<uint64_t>(key.first),
                     static_cast<uint64_t>(key.second)}));
                int m = 1 + static_cast<int>(rng.uniform_below(per_layer - 1));
                if (m > static_cast<int>(eligible.size())) {
                    m = static_cast<int>(eligible.size());
                    if (notes)
                        notes->push_back(
                            "promotion count clamped to the " +
                            std::to_string(m) + " feature-bound rotations");
                }
                const std::vector<int> pick =
                    rng.sample_distinct(static_cast<int>(eligible.size()), m);
                for (int idx : pick) d.positions.push_back(eligible[idx]);
            }
            list.push_back(std::move(d));
        }
    }

    std::vector<FinetuneTrace> all(total);
    std::vector<std::string> failures(total);

#pragma omp parallel for schedule(dynamic)
    for (long w = 0; w < total; ++w) {
        const int c = static_cast<int>(w / trials);
        const int t = static_cast<int>(w % trials);
        const RankedCandidate& cand = candidates[c];
        FinetuneTrace trace;
        trace.candidate = c;
        trace.trial = t;
        const GroupKey key{cand.layout.total_rotations(), cand.layout.l0};
        const Draw& draw = draws.at(key)[t];
        if (draw.skipped) {
            trace.skipped = true;
            all[w] = std::move(trace);
            continue;
        }
        try {
            const Promotion promo = promote_gates(cand.layout, draw.positions);
            trace.m = static_cast<int>(draw.positions.size());
            trace.positions = draw.positions;
            std::vector<double> theta(promo.replaced_features.size());
            for (size_t j = 0; j < theta.size(); ++j)
                theta[j] = train.features.col(promo.replaced_features[j]).mean();
            trace.theta_init = theta;

            const auto alignment_at = [&](const std::vector<double>& th) {
                const GramMatrix q =
                    gram(promo.layout, th, train.features, nullptr, noise);
                return kta(q, train.labels, train.num_classes);
            };

            double best = alignment_at(theta);
            std::vector<double> theta_best = theta;
            trace.kta_curve.push_back(best);
            for (int e = 0; e < config.finetune_epochs; ++e) {
                const std::vector<double> g =
                    kta_gradient(promo.layout, theta, train, noise);
                for (size_t j = 0; j < theta.size(); ++j)
                    theta[j] += config.finetune_lr * g[j];
                const double value = alignment_at(theta);
                trace.kta_curve.push_back(value);
                if (value > best) {
                    best = value;
                    theta_best = theta;
                }
            }
            trace.kta_best = best;
            trace.theta_best = std::move(theta_best);
        } catch (const std::exception& e) {
            trace.skipped = true;
            failures[w] = e.what();
        }
        all[w] = std::move(trace);
    }

    if (notes)
        for (long w = 0; w < total; ++w)
            if (!failures[w].empty())
                notes->push_back("fine-tune trial " +
                                 std::to_string(w % trials) + " of candidate " +
                                 candidates[w / trials].hash + " failed: " +
                                 failures[w]);

    std::vector<CandidateRecord> records;
    records.reserve(candidates.size());
    for (size_t c = 0; c < candidates.size(); ++c) {
        const RankedCandidate& cand = candidates[c];
        // the unpromoted candidate stays in the running, so this stage can
        // never fall below the candidate stage
        CandidateRecord base = evaluate_candidate(cand.layout, {}, train, test,
                                                  config, Stage::Finetuned);
        base.predicted_kta = cand.predicted_kta;

        int best_trial = -1;
        double best_value = base.kta_train;
        for (int t = 0; t < trials; ++t) {
            const FinetuneTrace& trace = all[c * trials + t];
            if (trace.skipped) continue;
            if (trace.kta_best > best_value) {
                best_value = trace.kta_best;
                best_trial = t;
            }
        }
        if (best_trial >= 0) {
            const FinetuneTrace& trace = all[c * trials + best_trial];
            const GroupKey key{cand.layout.total_rotations(), cand.layout.l0};
            const Promotion promo =
                promote_gates(cand.layout, draws.at(key)[best_trial].positions);
            CandidateRecord rec =
                evaluate_candidate(promo.layout, trace.theta_best, train, test,
                                   config, Stage::Finetuned);
            rec.predicted_kta = cand.predicted_kta;
            records.push_back(std::move(rec));
        } else {
            records.push_back(std::move(base));
        }
    }
    if (traces)
        traces->insert(traces->end(), std::make_move_iterator(all.begin()),
                       std::make_move_iterator(all.end()));
    return records;
}

namespace {

class StageClock {
  public:
    explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}
    void lap(const std::string& name) {
        const auto now = std::chrono::steady_clock::now();
        sink_.push_back(
            {name, std::chrono::duration<double>(now - mark_).count()});
        mark_ = now;
    }

  private:
    std::vector<StageTiming>& sink_;
    std::chrono::steady_clock::time_point mark_ =
        std::chrono::steady_clock::now();
};

}  // namespace

SearchResult run_full_search(const SearchConfig& config,
                             const TabularDataset& train,
                             const TabularDataset& test) {
    config.validate();
    set_workers(config.workers);
    SearchResult sr;
    const auto noise = config.noise();
    StageClock clock(sr.timings);

    try {
        const std::vector<CircuitLayout> layouts = sample_pool(config);
        sr.pool = label_pool(layouts, train, noise);
    } catch (const std::exception& e) {
        throw Error("search stage pool: " + std::string(e.what()));
    }
    sr.notes.insert(sr.notes.end(), sr.pool.notes.begin(), sr.pool.notes.end());
    if (sr.pool.samples.empty())
        throw Error("search stage pool: no layout labeled cleanly");
    clock.lap("pool");

    try {
        const int l_max = config.n * sr.pool.max_width / 2;
        sr.predictor =
            init_model(l_max, derive_seed(config.seed, {kSeedPredictor, 0}));
        TrainOptions opt;
        opt.epochs = config.predictor_epochs;
        opt.learning_rate = config.predictor_lr;
        opt.batch_size = config.predictor_batch;
        opt.seed = derive_seed(config.seed, {kSeedPredictor, 1});
        train_predictor(sr.predictor, sr.pool.samples, opt);
    } catch (const std::exception& e) {
        throw Error("search stage predictor: " + std::string(e.what()));
    }
    clock.lap("predictor");

    try {
        sr.ranked =
            rank_and_select(sr.predictor, config, sr.pool.max_width, &sr.notes);
    } catch (const std::exception& e) {
        throw Error("search stage rank: " + std::string(e.what()));
    }
    clock.lap("rank");

    std::vector<CandidateRecord> finetuned;
    try {
        finetuned = finetune_candidates(sr.ranked, train, test, config,
                                        &sr.traces, &sr.notes);
    } catch (const std::exception& e) {
        throw Error("search stage finetune: " + std::string(e.what()));
    }
    clock.lap("finetune");

    try {
        for (size_t i = 0; i < sr.pool.layouts.size(); ++i) {
            CandidateRecord rec =
                evaluate_candidate(sr.pool.layouts[i], {}, train, test, config,
                                   Stage::TrainingPool);
            sr.records.push_back(std::move(rec));
        }
        for (const RankedCandidate& cand : sr.ranked) {
            CandidateRecord rec = evaluate_candidate(
                cand.layout, {}, train, test, config, Stage::Candidate);
            rec.predicted_kta = cand.predicted_kta;
            sr.records.push_back(std::move(rec));
        }
    } catch (const std::exception& e) {
        throw Error("search stage evaluate: " + std::string(e.what()));
    }
    clock.lap("evaluate");

    const size_t finetune_offset = sr.records.size();
    sr.records.insert(sr.records.end(),
                      std::make_move_iterator(finetuned.begin()),
                      std::make_move_iterator(finetuned.end()));

    sr.chosen = finetune_offset;
    for (size_t i = finetune_offset; i < sr.records.size(); ++i)
        if (sr.records[i].test_accuracy >
            sr.records[sr.chosen].test_accuracy)
            sr.chosen = i;
    return sr;
}

PreparedData prepare_data(const SearchConfig& config) {
    config.validate();
    PreparedData out;
    if (!config.data_csv.empty()) {
        const TabularDataset all =
            load_csv(config.data_csv, config.label_column);
        SplitResult split =
            stratified_split(all, config.train_fraction,
                             derive_seed(config.seed, {0x73706c74}));  // "splt"
        out.train = std::move(split.train);
        out.test = std::move(split.test);
        out.warnings = std::move(split.warnings);
    } else if (!config.train_csv.empty() && !config.test_csv.empty()) {
        out.train = load_csv(config.train_csv, config.label_column);
        out.test = load_csv(config.test_csv, config.label_column);
    } else {
        throw ArgumentError(
            "config needs data_csv or both train_csv and test_csv");
    }

    const int target_p = config.selector_p > 0 ? config.selector_p : config.p;
    FeatureSelector sel;
    if (config.selector_method == "mrmr") {
        sel = mrmr_select(out.train, target_p, config.selector_bins);
    } else if (config.selector_method == "pca") {
        sel = pca_reduce(out.train, target_p);
    } else {
        // identity pick of every column, still fits the angle rescaling
        sel.method = FeatureSelector::Method::Mrmr;
        sel.indices.resize(out.train.dim());
        std::iota(sel.indices.begin(), sel.indices.end(), 0);
        sel.out_min.resize(out.train.dim());
        sel.out_max.resize(out.train.dim());
        for (int c = 0; c < out.train.dim(); ++c) {
            sel.out_min[c] = out.train.features.col(c).minCoeff();
            sel.out_max[c] = out.train.features.col(c).maxCoeff();
        }
    }
    out.train = apply_selector(sel, out.train);
    out.test = apply_selector(sel, out.test);
    out.selector = std::move(sel);
    return out;
}

}  // namespace qks

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <vector>

#include "qks/baselines.hpp"
#include "qks/common.hpp"
#include "qks/errors.hpp"
#include "qks/pipeline.hpp"

using namespace qks;

namespace {

constexpr double kTau = 6.283185307179586;

TabularDataset angle_dataset(int count, int dim, int classes, uint64_t seed) {
    Rng rng(seed);
    TabularDataset d;
    d.features.resize(count, dim);
    for (int r = 0; r < count; ++r)
        for (int c = 0; c < dim; ++c) d.features(r, c) = rng.uniform(0.0, kTau);
    d.labels.resize(count);
    for (int r = 0; r < count; ++r) d.labels[r] = r % classes;
    d.num_classes = classes;
    return d;
}

SearchConfig tiny_config() {
    SearchConfig cfg;
    cfg.n = 2;
    cfg.p = 2;
    cfg.l0_list = {1};
    cfg.pool_size = 8;
    cfg.exhaustive_candidates = true;
    cfg.top_k = 3;
    cfg.theta_trials = 2;
    cfg.finetune_epochs = 4;
    cfg.predictor_epochs = 40;
    cfg.seed = 20260823;
    return cfg;
}

double kta_of(const CircuitLayout& layout, std::span<const double> theta,
              const TabularDataset& data,
              const std::optional<NoiseSpec>& noise = std::nullopt) {
    const GramMatrix q = gram(layout, theta, data.features, nullptr, noise);
    return kta(q, data.labels, data.num_classes);
}

}  // namespace

TEST_CASE("search config round trips through json and rejects unknown keys") {
    SearchConfig cfg = tiny_config();
    cfg.noise_p1 = 0.01;
    cfg.selector_method = "mrmr";
    cfg.l0_list = {1, 2};
    const std::string text = cfg.to_json();
    const SearchConfig back = SearchConfig::from_json(text);
    CHECK(back.to_json() == text);
    CHECK(back.l0_list == cfg.l0_list);
    CHECK(back.noise_p1 == cfg.noise_p1);

    CHECK_THROWS_AS(SearchConfig::from_json("{\"pool_sise\": 3}"), ParseError);
    CHECK_THROWS_AS(SearchConfig::from_json("not json"), ParseError);
    CHECK_THROWS_AS(SearchConfig::from_json("[1,2]"), ParseError);
    CHECK_THROWS_AS(SearchConfig::from_json("{\"n\": \"four\"}"), ParseError);
}

TEST_CASE("search config validation rejects inconsistent settings") {
    SearchConfig cfg = tiny_config();
    cfg.validate();

    SearchConfig bad = cfg;
    bad.n = 1;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.l0_list = {};
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.exhaustive_candidates = false;
    bad.candidate_pool_size = 2;
    bad.top_k = 3;
    CHECK_THROWS_AS(bad.validate(), RangeError);
    bad = cfg;
    bad.strategy = "zigzag";
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.train_fraction = 1.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.selector_method = "anova";
    CHECK_THROWS_AS(bad.validate(), ArgumentError);

    SearchConfig noisy = cfg;
    noisy.noise_p1 = 0.02;
    REQUIRE(noisy.noise().has_value());
    CHECK(noisy.noise()->p1 == 0.02);
    CHECK_FALSE(cfg.noise().has_value());
}

TEST_CASE("pool sampling is deterministic and cycles the layer list") {
    SearchConfig cfg = tiny_config();
    cfg.l0_list = {1, 2};
    cfg.pool_size = 6;
    const auto a = sample_pool(cfg);
    const auto b = sample_pool(cfg);
    REQUIRE(a.size() == 6);
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(layout_hash(a[i]) == layout_hash(b[i]));
    for (size_t i = 0; i < a.size(); ++i) {
        const int expected_l0 = cfg.l0_list[i % 2];
        CHECK(a[i].l0 == expected_l0);
        CHECK(a[i].num_blocks() == expected_l0);  // p = n keeps one block per layer
    }

    SearchConfig other = cfg;
    other.seed += 1;
    const auto c = sample_pool(other);
    bool any_differ = false;
    for (size_t i = 0; i < a.size(); ++i)
        any_differ = any_differ || !(layout_hash(a[i]) == layout_hash(c[i]));
    CHECK(any_differ);
}

TEST_CASE("labeling the exhaustive two-qubit space keeps every layout") {
    const auto space = enumerate_block_space(2, 1, 2);
    REQUIRE(space.size() == 18);
    const TabularDataset data = angle_dataset(12, 2, 2, 7);

    const PoolResult pool = label_pool(space, data);
    CHECK(pool.dropped == 0);
    CHECK(pool.layouts.size() == 18);
    CHECK(pool.samples.size() == 18);
    CHECK(pool.max_width == 2);
    for (size_t i = 0; i < pool.samples.size(); ++i) {
        CHECK(pool.samples[i].target ==
              doctest::Approx(10.0 * pool.kta_values[i]).epsilon(1e-15));
        CHECK(pool.samples[i].image.size() == 5u * 2u * 2u);
        CHECK(pool.samples[i].layout_hash == layout_hash(pool.layouts[i]));
        CHECK(pool.kta_values[i] ==
              doctest::Approx(kta_of(pool.layouts[i], {}, data)).epsilon(1e-13));
    }
}

TEST_CASE("duplicate layouts in a pool get bit-identical targets") {
    const auto space = enumerate_block_space(2, 1, 2);
    const std::vector<CircuitLayout> layouts = {space[3], space[5], space[3]};
    const TabularDataset data = angle_dataset(10, 2, 2, 11);
    const PoolResult pool = label_pool(layouts, data);
    REQUIRE(pool.samples.size() == 3);
    CHECK(pool.samples[0].target == pool.samples[2].target);
    CHECK(pool.samples[0].layout_hash == pool.samples[2].layout_hash);
    CHECK(pool.samples[0].target != pool.samples[1].target);
}

TEST_CASE("labeling is identical for any worker count") {
    const auto space = enumerate_block_space(2, 1, 2);
    const TabularDataset data = angle_dataset(10, 2, 2, 13);
    set_workers(1);
    const PoolResult serial = label_pool(space, data);
    set_workers(4);
    const PoolResult parallel = label_pool(space, data);
    set_workers(1);
    REQUIRE(serial.kta_values.size() == parallel.kta_values.size());
    for (size_t i = 0; i < serial.kta_values.size(); ++i)
        CHECK(serial.kta_values[i] == parallel.kta_values[i]);
}

TEST_CASE("ranking returns the top k by predicted alignment with hash ties") {
    SearchConfig cfg = tiny_config();
    cfg.top_k = 5;
    const PredictorModel model = make_predictor(20, 16, 4242);

    std::vector<std::string> notes;
    const auto ranked = rank_and_select(model, cfg, 2, &notes);
    REQUIRE(ranked.size() == 5);
    CHECK(notes.empty());

    // oracle: score the space directly and sort the same way
    const auto space = enumerate_block_space(2, 1, 2);
    const auto scores = score_layouts(model, space, 2);
    std::vector<size_t> order(space.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return layout_hash(space[a]) < layout_hash(space[b]);
    });
    for (int r = 0; r < 5; ++r) {
        CHECK(ranked[r].hash == layout_hash(space[order[r]]));
        CHECK(ranked[r].predicted_kta ==
              doctest::Approx(scores[order[r]]).epsilon(1e-15));
    }
    for (int r = 1; r < 5; ++r)
        CHECK(ranked[r - 1].predicted_kta >= ranked[r].predicted_kta);

    SearchConfig too_many = cfg;
    too_many.top_k = 19;  // space has 18
    CHECK_THROWS_AS(rank_and_select(model, too_many, 2), RangeError);
}

TEST_CASE("ranking skips candidates wider than the pool images") {
    SearchConfig cfg = tiny_config();
    cfg.exhaustive_candidates = false;
    cfg.candidate_pool_size = 6;
    cfg.l0_list = {1, 2};  // l0=2 layouts need width 4
    cfg.top_k = 3;
    const PredictorModel model = make_predictor(20, 16, 99);
    std::vector<std::string> notes;
    const auto ranked = rank_and_select(model, cfg, 2, &notes);
    REQUIRE(ranked.size() == 3);
    CHECK(notes.size() == 3);  // half the pool was too wide
    for (const auto& cand : ranked) CHECK(cand.layout.num_blocks() == 1);

    // k larger than what survives the width filter
    cfg.top_k = 4;
    CHECK_THROWS_AS(rank_and_select(model, cfg, 2, nullptr), RangeError);
}

TEST_CASE("alignment gradient matches central finite differences") {
    const TabularDataset data = angle_dataset(8, 2, 2, 31);
    Rng rng(90210);
    const double h = 1e-6;
    int cases = 0;
    while (cases < 20) {
        const int l0 = 1 + static_cast<int>(rng.uniform_below(2));
        CircuitLayout layout =
            sample_layout(2, l0, 2, EncodingStrategy::Elementwise, rng);
        const int total = layout.total_rotations();
        const int m_max = total / l0 - 1;
        const int m = 1 + static_cast<int>(rng.uniform_below(m_max));
        const auto positions = rng.sample_distinct(total, m);
        const Promotion promo = promote_gates(layout, positions);

        std::vector<double> theta(m);
        for (auto& t : theta) t = rng.uniform(0.0, kTau);

        const auto grad = kta_gradient(promo.layout, theta, data);
        REQUIRE(grad.size() == static_cast<size_t>(m));
        for (int j = 0; j < m; ++j) {
            std::vector<double> up = theta, down = theta;
            up[j] += h;
            down[j] -= h;
            const double fd = (kta_of(promo.layout, up, data) -
                               kta_of(promo.layout, down, data)) /
                              (2.0 * h);
            CHECK(std::abs(grad[j] - fd) < 1e-6);
        }
        ++cases;
    }
}

TEST_CASE("alignment gradient handles controlled-rz parameters") {
    const TabularDataset data = angle_dataset(8, 2, 2, 37);
    Rng rng(1234);
    CircuitLayout layout =
        sample_layout(2, 1, 2, EncodingStrategy::Elementwise, rng);
    layout.gates.push_back(
        {Gate::crz(0, 1, 0.0), Binding{Binding::Kind::Param, 0, 0.0}});
    layout.gates.push_back(
        {Gate::ry(1, 0.0), Binding{Binding::Kind::Param, 1, 0.0}});
    REQUIRE(layout.param_count() == 2);

    const std::vector<double> theta = {1.3, 5.1};
    const auto grad = kta_gradient(layout, theta, data);
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
        std::vector<double> up = theta, down = theta;
        up[j] += h;
        down[j] -= h;
        const double fd =
            (kta_of(layout, up, data) - kta_of(layout, down, data)) / (2.0 * h);
        CHECK(std::abs(grad[j] - fd) < 1e-6);
    }
}

TEST_CASE("alignment gradient under depolarizing noise matches differences") {
    const TabularDataset data = angle_dataset(6, 2, 2, 41);
    const NoiseSpec noise{0.05, 0.1};
    Rng rng(777);
    CircuitLayout layout =
        sample_layout(2, 1, 2, EncodingStrategy::Elementwise, rng);
    const Promotion promo = promote_gates(layout, {1});
    const std::vector<double> theta = {2.2};

    const auto grad = kta_gradient(promo.layout, theta, data, noise);
    const double h = 1e-6;
    std::vector<double> up = theta, down = theta;
    up[0] += h;
    down[0] -= h;
    const double fd = (kta_of(promo.layout, up, data, noise) -
                       kta_of(promo.layout, down, data, noise)) /
                      (2.0 * h);
    CHECK(std::abs(grad[0] - fd) < 1e-6);
}

TEST_CASE("gradient vanishes when every rotation shares one parameter") {
    // identical states for every sample: the Gram stays all-ones under any
    // shift of the shared angle, so the alignment is flat
    const TabularDataset data = angle_dataset(6, 2, 2, 43);
    Rng rng(555);
    CircuitLayout layout =
        sample_layout(2, 1, 2, EncodingStrategy::Elementwise, rng);
    for (auto& slot : layout.gates)
        if (slot.binding) slot.binding = Binding{Binding::Kind::Param, 0, 0.0};
    const std::vector<double> theta = {0.9};
    const auto grad = kta_gradient(layout, theta, data);
    REQUIRE(grad.size() == 1);
    CHECK(std::abs(grad[0]) < 1e-8);
}

TEST_CASE("alignment gradient rejects unusable inputs") {
    Rng rng(3);
    const CircuitLayout layout =
        sample_layout(2, 1, 2, EncodingStrategy::Elementwise, rng);
    const TabularDataset data = angle_dataset(6, 2, 2, 47);
    CHECK_THROWS_AS(kta_gradient(layout, {}, data), ArgumentError);

    const Promotion promo = promote_gates(layout, {0});
    const std::vector<double> theta = {1.0, 2.0};
    CHECK_THROWS_AS(kta_gradient(promo.layout, theta, data), DimensionError);
}

TEST_CASE("fine-tuning with zero learning rate keeps the feature means") {
    SearchConfig cfg = tiny_config();
    cfg.finetune_lr = 0.0;
    cfg.finetune_epochs = 3;
    cfg.theta_trials = 2;
    const TabularDataset train = angle_dataset(10, 2, 2, 53);
    const TabularDataset test = angle_dataset(10, 2, 2, 59);

    const auto space = enumerate_block_space(2, 1, 2);
    std::vector<RankedCandidate> cands = {
        {space[0], layout_hash(space[0]), 0.5},
        {space[7], layout_hash(space[7]), 0.4}};

    std::vector<FinetuneTrace> traces;
    const auto records =
        finetune_candidates(cands, train, test, cfg, &traces);
    REQUIRE(records.size() == 2);
    REQUIRE(traces.size() == 4);

    for (const auto& trace : traces) {
        REQUIRE_FALSE(trace.skipped);
        CHECK(trace.theta_best == trace.theta_init);
        for (double v : trace.kta_curve)
            CHECK(v == doctest::Approx(trace.kta_curve.front()).epsilon(1e-15));
        // promoted angles start at the column means of the replaced features
        for (size_t j = 0; j < trace.theta_init.size(); ++j) {
            bool matches_some_mean = false;
            for (int c = 0; c < train.dim(); ++c)
                if (trace.theta_init[j] ==
                    doctest::Approx(train.features.col(c).mean())
                        .epsilon(1e-12))
                    matches_some_mean = true;
            CHECK(matches_some_mean);
        }
    }

    // trial draws are shared across candidates with equal rotation counts
    for (int t = 0; t < 2; ++t) {
        CHECK(traces[t].m == traces[2 + t].m);
        CHECK(traces[t].positions == traces[2 + t].positions);
    }
}

TEST_CASE("fine-tuning keeps the best iterate and never loses to the base") {
    SearchConfig cfg = tiny_config();
    cfg.finetune_epochs = 6;
    cfg.theta_trials = 3;
    const TabularDataset train = angle_dataset(12, 2, 2, 61);
    const TabularDataset test = angle_dataset(12, 2, 2, 67);

    const auto space = enumerate_block_space(2, 1, 2);
    std::vector<RankedCandidate> cands = {
        {space[2], layout_hash(space[2]), 0.7},
        {space[9], layout_hash(space[9]), 0.6},
        {space[14], layout_hash(space[14]), 0.5}};

    std::vector<FinetuneTrace> traces;
    const auto records = finetune_candidates(cands, train, test, cfg, &traces);
    REQUIRE(records.size() == 3);

    for (const auto& trace : traces) {
        REQUIRE_FALSE(trace.skipped);
        CHECK(trace.kta_best >= trace.kta_curve.front() - 1e-12);
        const double curve_max =
            *std::max_element(trace.kta_curve.begin(), trace.kta_curve.end());
        CHECK(trace.kta_best == doctest::Approx(curve_max).epsilon(1e-15));
    }
    for (size_t c = 0; c < cands.size(); ++c) {
        const CandidateRecord base = evaluate_candidate(
            cands[c].layout, {}, train, test, cfg, Stage::Candidate);
        CHECK(records[c].kta_train >= base.kta_train - 1e-12);
        CHECK(records[c].stage == Stage::Finetuned);
        CHECK(records[c].predicted_kta.has_value());
    }
}

TEST_CASE("fine-tuning skips candidates without promotable rotations") {
    SearchConfig cfg = tiny_config();
    const TabularDataset train = angle_dataset(10, 2, 2, 71);
    const TabularDataset test = angle_dataset(10, 2, 2, 73);

    Rng rng(12);
    CircuitLayout frozen =
        sample_layout(2, 1, 2, EncodingStrategy::Elementwise, rng);
    for (auto& slot : frozen.gates)
        if (slot.binding) slot.binding = Binding{Binding::Kind::Const, 0, 1.0};

    std::vector<RankedCandidate> cands = {{frozen, layout_hash(frozen), 0.0}};
    std::vector<FinetuneTrace> traces;
    std::vector<std::string> notes;
    const auto records =
        finetune_candidates(cands, train, test, cfg, &traces, &notes);
    REQUIRE(records.size() == 1);
    CHECK(records[0].theta.empty());
    CHECK(records[0].hash == layout_hash(frozen));
    for (const auto& trace : traces) CHECK(trace.skipped);
    CHECK_FALSE(notes.empty());
}

TEST_CASE("candidate evaluation fills alignment and both accuracies") {
    SearchConfig cfg = tiny_config();
    const TabularDataset train = angle_dataset(14, 2, 2, 79);
    const TabularDataset test = angle_dataset(10, 2, 2, 83);
    const auto space = enumerate_block_space(2, 1, 2);

    const CandidateRecord rec = evaluate_candidate(space[4], {}, train, test,
                                                   cfg, Stage::TrainingPool);
    CHECK(rec.hash == layout_hash(space[4]));
    CHECK(rec.kta_train == doctest::Approx(kta_of(space[4], {}, train)));
    CHECK(rec.kta_train >= -1.0);
    CHECK(rec.kta_train <= 1.0);
    CHECK(rec.train_accuracy >= 0.0);
    CHECK(rec.train_accuracy <= 1.0);
    CHECK(rec.test_accuracy >= 0.0);
    CHECK(rec.test_accuracy <= 1.0);
    CHECK(rec.theta.empty());
    CHECK(std::string(stage_name(rec.stage)) == "training_pool");
}

TEST_CASE("full search composes the stages deterministically") {
    SearchConfig cfg = tiny_config();
    const TabularDataset train = angle_dataset(14, 2, 2, 89);
    const TabularDataset test = angle_dataset(10, 2, 2, 97);

    const SearchResult a = run_full_search(cfg, train, test);
    const SearchResult b = run_full_search(cfg, train, test);

    REQUIRE(a.pool.samples.size() == a.pool.layouts.size());
    CHECK(a.pool.dropped == 0);
    const size_t pool_count = a.pool.layouts.size();
    REQUIRE(a.records.size() == pool_count + 3 + 3);

    for (size_t i = 0; i < pool_count; ++i)
        CHECK(a.records[i].stage == Stage::TrainingPool);
    for (size_t i = pool_count; i < pool_count + 3; ++i)
        CHECK(a.records[i].stage == Stage::Candidate);
    for (size_t i = pool_count + 3; i < a.records.size(); ++i)
        CHECK(a.records[i].stage == Stage::Finetuned);

    // chosen record is the best fine-tuned test accuracy
    CHECK(a.chosen >= pool_count + 3);
    for (size_t i = pool_count + 3; i < a.records.size(); ++i)
        CHECK(a.records[a.chosen].test_accuracy >= a.records[i].test_accuracy);

    // the fine-tune stage cannot fall below the candidate stage on the
    // selection metric
    double best_candidate = -2.0, best_finetuned = -2.0;
    for (const auto& rec : a.records) {
        if (rec.stage == Stage::Candidate)
            best_candidate = std::max(best_candidate, rec.kta_train);
        if (rec.stage == Stage::Finetuned)
            best_finetuned = std::max(best_finetuned, rec.kta_train);
    }
    CHECK(best_finetuned >= best_candidate - 1e-12);

    // bit-stable rerun
    REQUIRE(b.records.size() == a.records.size());
    CHECK(b.chosen == a.chosen);
    CHECK(b.records[b.chosen].hash == a.records[a.chosen].hash);
    for (size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].hash == b.records[i].hash);
        CHECK(a.records[i].kta_train == b.records[i].kta_train);
        CHECK(a.records[i].test_accuracy == b.records[i].test_accuracy);
        CHECK(a.records[i].theta == b.records[i].theta);
    }
    CHECK(a.predictor.params == b.predictor.params);
}

TEST_CASE("prepared data splits, selects and lands in the angle range") {
    TabularDataset raw;
    raw.features.resize(16, 3);
    Rng rng(101);
    for (int r = 0; r < 16; ++r) {
        raw.features(r, 0) = rng.uniform(-5.0, 5.0);
        raw.features(r, 1) = raw.features(r, 0) * 2.0 + rng.uniform(-0.1, 0.1);
        raw.features(r, 2) = rng.uniform(100.0, 200.0);
    }
    raw.labels.resize(16);
    for (int r = 0; r < 16; ++r) raw.labels[r] = r % 2;
    raw.num_classes = 2;
    const std::string path = "pipeline_prepare.csv";
    save_csv(raw, path);

    SearchConfig cfg = tiny_config();
    cfg.data_csv = path;
    cfg.train_fraction = 0.5;

    const PreparedData plain = prepare_data(cfg);
    CHECK(plain.train.n() == 8);
    CHECK(plain.test.n() == 8);
    CHECK(plain.train.dim() == 3);
    CHECK(plain.train.features.minCoeff() >= 0.0);
    CHECK(plain.train.features.maxCoeff() < kTau);

    cfg.selector_method = "mrmr";
    cfg.selector_p = 2;
    const PreparedData selected = prepare_data(cfg);
    CHECK(selected.train.dim() == 2);
    CHECK(selected.test.dim() == 2);
    REQUIRE(selected.selector.has_value());
    CHECK(selected.selector->indices.size() == 2);

    SearchConfig missing = tiny_config();
    CHECK_THROWS_AS(prepare_data(missing), ArgumentError);
    std::remove(path.c_str());
}

TEST_CASE("gaussian baseline sweeps the data-scaled gamma grid") {
    const TabularDataset train = angle_dataset(16, 3, 2, 103);
    const TabularDataset test = angle_dataset(12, 3, 2, 107);
    const std::vector<double> scales = {1, 2, 3, 4, 5};

    const RbfkResult sweep = rbfk_sweep(train, test, scales);
    REQUIRE(sweep.entries.size() == 5);

    const double mean = train.features.mean();
    const double var = (train.features.array() - mean).square().sum() /
                       train.features.size();
    CHECK(sweep.feature_variance == doctest::Approx(var).epsilon(1e-12));
    for (size_t i = 0; i < 5; ++i) {
        CHECK(sweep.entries[i].scale == scales[i]);
        CHECK(sweep.entries[i].gamma ==
              doctest::Approx(scales[i] / (3.0 * var)).epsilon(1e-12));
        CHECK(sweep.entries[i].train_accuracy >= 0.0);
        CHECK(sweep.entries[i].train_accuracy <= 1.0);
        CHECK(sweep.entries[i].test_accuracy >= 0.0);
        CHECK(sweep.entries[i].test_accuracy <= 1.0);
    }
    for (const auto& entry : sweep.entries)
        CHECK(sweep.entries[sweep.best].test_accuracy >= entry.test_accuracy);

    TabularDataset flat = train;
    flat.features.setConstant(2.0);
    CHECK_THROWS_AS(rbfk_sweep(flat, test, scales), NumericError);
    CHECK_THROWS_AS(rbfk_sweep(train, test, std::vector<double>{}),
                    ArgumentError);
}

TEST_CASE("hardware-efficient baseline uses all-x rotations and a full chain") {
    const CircuitLayout one = heak_layout(3, 3, 1);
    REQUIRE(one.num_blocks() == 1);
    CHECK(one.blocks[0].even_axis == Axis::X);
    CHECK(one.blocks[0].odd_axis == Axis::X);
    CHECK(one.blocks[0].entangler_mask == std::vector<bool>(2, true));
    CHECK(one.param_count() == 0);
    int rot_seen = 0;
    for (const auto& gs : one.gates) {
        if (gs.gate.kind == GateKind::RX) {
            REQUIRE(gs.binding.has_value());
            CHECK(gs.binding->kind == Binding::Kind::Feature);
            CHECK(gs.binding->index == rot_seen);  // one feature per wire
            ++rot_seen;
        }
    }
    CHECK(rot_seen == 3);

    // p > n repeats features in order across the extra blocks
    const CircuitLayout wide = heak_layout(3, 7, 1);
    REQUIRE(wide.num_blocks() == 3);
    const auto rot = wide.rotation_gate_indices();
    for (size_t r = 0; r < rot.size(); ++r) {
        const auto& binding = wide.gates[rot[r]].binding;
        REQUIRE(binding.has_value());
        CHECK(binding->index == static_cast<int>(r) % 7);
    }
}

TEST_CASE("trainable baseline binds module angles wires-then-ring per block") {
    const CircuitLayout tek = tek_layout(3, 3, 2);
    REQUIRE(tek.trainable_modules);
    REQUIRE(tek.num_blocks() == 2);
    CHECK(tek.param_count() == 2 * 3 * 2);
    CHECK(tek.total_rotations() == 6);  // encoding rotations only

    // per block: 3 encoding RX, 2 entanglers, then RY wires 0..2 and the
    // controlled-RZ ring with slots continuing in order
    int expected_slot = 0;
    for (const auto& gs : tek.gates) {
        if (!gs.binding || gs.binding->kind != Binding::Kind::Param) continue;
        CHECK(gs.binding->index == expected_slot);
        const int within = expected_slot % 6;
        if (within < 3) {
            CHECK(gs.gate.kind == GateKind::RY);
            CHECK(gs.gate.q0 == within);
        } else {
            CHECK(gs.gate.kind == GateKind::CRZ);
            CHECK(gs.gate.q0 == within - 3);
            CHECK(gs.gate.q1 == (within - 3 + 1) % 3);
        }
        ++expected_slot;
    }
    CHECK(expected_slot == 12);

    // stripping the modules recovers the fixed baseline
    CircuitLayout stripped = tek;
    stripped.trainable_modules = false;
    stripped.rebuild_gates();
    Rng rng(0);
    assign_features(stripped, canonical_strategy(3, 3), rng);
    CHECK(stripped == heak_layout(3, 3, 2));
}

TEST_CASE("trainable baseline training keeps the best iterate") {
    const TabularDataset train = angle_dataset(12, 2, 2, 113);

    const TekTraining frozen = train_tek(train, 2, 1, 4, 0.0, 5);
    CHECK(frozen.gamma_best == frozen.gamma_init);
    for (double v : frozen.kta_curve)
        CHECK(v == doctest::Approx(frozen.kta_curve.front()).epsilon(1e-15));
    for (double g : frozen.gamma_init) {
        CHECK(g >= 0.0);
        CHECK(g < kTau);
    }

    const TekTraining trained = train_tek(train, 2, 1, 6, 0.2, 5);
    CHECK(trained.kta_best >= trained.kta_curve.front() - 1e-12);
    CHECK(trained.kta_best ==
          doctest::Approx(*std::max_element(trained.kta_curve.begin(),
                                            trained.kta_curve.end()))
              .epsilon(1e-15));
    CHECK(trained.kta_curve.size() == 7);
    CHECK(trained.gamma_init.size() == 4);  // two wires, two ring gates

    const TekTraining again = train_tek(train, 2, 1, 6, 0.2, 5);
    CHECK(again.gamma_best == trained.gamma_best);
    CHECK(again.kta_curve == trained.kta_curve);
}

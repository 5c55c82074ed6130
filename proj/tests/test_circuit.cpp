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
#include <map>
#include <numbers>
#include <set>

#include "qks/circuit.hpp"
#include "qks/rng.hpp"

using namespace qks;

namespace {

// Structure-only key, ignoring bindings, for membership checks.
std::string structure_key(const CircuitLayout& layout) {
    std::string key;
    for (const BlockSpec& b : layout.blocks) {
        key += axis_name(b.even_axis);
        key += axis_name(b.odd_axis);
        for (bool m : b.entangler_mask) key += m ? '1' : '0';
        key += '|';
    }
    return key;
}

std::vector<int> feature_pattern(const CircuitLayout& layout) {
    std::vector<int> out;
    for (int gi : layout.rotation_gate_indices()) {
        const auto& b = layout.gates[gi].binding;
        REQUIRE(b.has_value());
        out.push_back(b->kind == Binding::Kind::Feature ? b->index : -1);
    }
    return out;
}

}  // namespace

TEST_CASE("block count follows l0 * ceil(p/n)") {
    CHECK(blocks_for(4, 1, 4) == 1);
    CHECK(blocks_for(4, 3, 12) == 9);
    CHECK(blocks_for(8, 5, 40) == 25);
    CHECK(blocks_for(4, 2, 2) == 2);
    CHECK(blocks_for(8, 1, 12) == 2);
}

TEST_CASE("enumeration sizes: 9 * 2^(n-1) structures per block") {
    CHECK(block_space_size(4, 1, 4) == 72);
    CHECK(block_space_size(2, 1, 2) == 18);
    CHECK(block_space_size(2, 2, 2) == 324);
    CHECK(enumerate_block_space(4, 1, 4).size() == 72);
    CHECK(enumerate_block_space(2, 1, 2).size() == 18);
    CHECK(enumerate_block_space(2, 2, 2).size() == 324);
}

TEST_CASE("enumeration entries are distinct and guard trips on huge spaces") {
    const auto layouts = enumerate_block_space(4, 1, 4);
    std::set<std::string> keys;
    for (const auto& l : layouts) keys.insert(structure_key(l));
    CHECK(keys.size() == 72);
    CHECK_THROWS_AS(enumerate_block_space(8, 5, 40, 1000000), CapacityError);
}

TEST_CASE("sampled layouts are members of the enumerated space") {
    const auto layouts = enumerate_block_space(4, 1, 4);
    std::set<std::string> keys;
    for (const auto& l : layouts) keys.insert(structure_key(l));
    Rng rng(101);
    for (int i = 0; i < 500; ++i) {
        const auto l = sample_layout(4, 1, 4, EncodingStrategy::Elementwise, rng);
        CHECK(keys.count(structure_key(l)) == 1);
    }
}

TEST_CASE("sampling is uniform over the 72-cell space within 3 sigma") {
    std::map<std::string, int> counts;
    Rng rng(424242);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const auto l = sample_layout(4, 1, 4, EncodingStrategy::Elementwise, rng);
        counts[structure_key(l)]++;
    }
    CHECK(counts.size() == 72);
    const double mean = draws / 72.0;
    const double sigma = std::sqrt(draws * (1.0 / 72.0) * (71.0 / 72.0));
    for (const auto& [key, c] : counts) {
        CHECK(std::abs(c - mean) < 3.0 * sigma);
    }
}

TEST_CASE("per-block gate order: rotations then masked CNOTs") {
    BlockSpec blk{Axis::Y, Axis::Z, {true, false, true}};
    const auto layout = make_layout(4, 1, 4, {blk});
    REQUIRE(layout.gates.size() == 6);
    CHECK(layout.gates[0].gate.kind == GateKind::RY);
    CHECK(layout.gates[1].gate.kind == GateKind::RZ);
    CHECK(layout.gates[2].gate.kind == GateKind::RY);
    CHECK(layout.gates[3].gate.kind == GateKind::RZ);
    CHECK(layout.gates[4].gate == Gate::cnot(0, 1));
    CHECK(layout.gates[5].gate == Gate::cnot(2, 3));
    CHECK(layout.total_rotations() == 4);
}

TEST_CASE("sequential encoding fills columns top to bottom") {
    // n=4, p=12: three columns reading f0..f3, f4..f7, f8..f11.
    Rng rng(1);
    auto layout = sample_layout(4, 1, 12, EncodingStrategy::Sequential, rng);
    CHECK(feature_pattern(layout) ==
          std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
}

TEST_CASE("chain encoding alternates column direction") {
    // n=4, p=12: second column runs bottom to top (f7..f4 read top-down).
    Rng rng(1);
    auto layout = sample_layout(4, 1, 12, EncodingStrategy::Chain, rng);
    CHECK(feature_pattern(layout) ==
          std::vector<int>{0, 1, 2, 3, 7, 6, 5, 4, 8, 9, 10, 11});
}

TEST_CASE("sequential encoding repeats per layer group") {
    Rng rng(2);
    auto layout = sample_layout(2, 2, 4, EncodingStrategy::Sequential, rng);
    // Two blocks per group, two groups: f0 f1 | f2 f3 repeated.
    CHECK(feature_pattern(layout) == std::vector<int>{0, 1, 2, 3, 0, 1, 2, 3});
}

TEST_CASE("random encoding binds each feature once per group, repeated") {
    Rng rng(3);
    auto layout = sample_layout(4, 3, 8, EncodingStrategy::Random, rng);
    const auto pattern = feature_pattern(layout);
    REQUIRE(pattern.size() == 24);  // 6 blocks of 4 rotations
    // Each group of 8 slots holds a permutation of 0..7.
    for (int g = 0; g < 3; ++g) {
        std::set<int> seen(pattern.begin() + g * 8, pattern.begin() + (g + 1) * 8);
        CHECK(seen.size() == 8);
        CHECK(*seen.begin() == 0);
        CHECK(*seen.rbegin() == 7);
    }
    // Groups repeat the same permutation.
    for (int i = 0; i < 8; ++i) {
        CHECK(pattern[i] == pattern[8 + i]);
        CHECK(pattern[i] == pattern[16 + i]);
    }
}

TEST_CASE("elementwise encoding maps qubit q to feature q") {
    Rng rng(4);
    auto layout = sample_layout(4, 2, 4, EncodingStrategy::Elementwise, rng);
    CHECK(feature_pattern(layout) == std::vector<int>{0, 1, 2, 3, 0, 1, 2, 3});
}

TEST_CASE("modular encoding wraps feature indices") {
    Rng rng(5);
    auto layout = sample_layout(4, 1, 2, EncodingStrategy::Modular, rng);
    CHECK(feature_pattern(layout) == std::vector<int>{0, 1, 0, 1});
}

TEST_CASE("random_fill pads trailing wires with constants in [0, 2pi)") {
    Rng rng(6);
    auto layout = sample_layout(5, 1, 3, EncodingStrategy::RandomFill, rng);
    const auto rot = layout.rotation_gate_indices();
    for (int q = 0; q < 3; ++q) {
        const auto& b = layout.gates[rot[q]].binding;
        REQUIRE(b.has_value());
        CHECK(b->kind == Binding::Kind::Feature);
        CHECK(b->index == q);
    }
    for (int q = 3; q < 5; ++q) {
        const auto& b = layout.gates[rot[q]].binding;
        REQUIRE(b.has_value());
        CHECK(b->kind == Binding::Kind::Const);
        CHECK(b->value >= 0.0);
        CHECK(b->value < 2.0 * std::numbers::pi);
    }
}

TEST_CASE("strategy compatibility is enforced") {
    Rng rng(7);
    CHECK_THROWS_AS(sample_layout(4, 1, 4, EncodingStrategy::Sequential, rng),
                    ArgumentError);
    CHECK_THROWS_AS(sample_layout(4, 1, 8, EncodingStrategy::Elementwise, rng),
                    ArgumentError);
    CHECK_THROWS_AS(sample_layout(4, 1, 8, EncodingStrategy::Modular, rng),
                    ArgumentError);
    CHECK_THROWS_AS(sample_layout(4, 1, 2, EncodingStrategy::Random, rng),
                    ArgumentError);
    CHECK_NOTHROW(sample_layout(4, 1, 4, EncodingStrategy::Random, rng));
}

TEST_CASE("sampling draws are deterministic for a fixed seed") {
    Rng a(99), b(99);
    const auto la = sample_layout(4, 2, 8, EncodingStrategy::Random, a);
    const auto lb = sample_layout(4, 2, 8, EncodingStrategy::Random, b);
    CHECK(la == lb);
    CHECK(layout_hash(la) == layout_hash(lb));
}

TEST_CASE("gate promotion rebinds features to parameter slots") {
    Rng rng(8);
    auto layout = sample_layout(4, 2, 4, EncodingStrategy::Elementwise, rng);
    const auto promo = promote_gates(layout, {5, 2});
    CHECK(promo.replaced_features == std::vector<int>{1, 2});
    const auto rot = promo.layout.rotation_gate_indices();
    const auto& b5 = promo.layout.gates[rot[5]].binding;
    CHECK(b5->kind == Binding::Kind::Param);
    CHECK(b5->index == 0);
    const auto& b2 = promo.layout.gates[rot[2]].binding;
    CHECK(b2->kind == Binding::Kind::Param);
    CHECK(b2->index == 1);
    CHECK(promo.layout.param_count() == 2);
    // Untouched slots keep their feature bindings.
    CHECK(promo.layout.gates[rot[0]].binding->kind == Binding::Kind::Feature);
}

TEST_CASE("promotion validates count, range and distinctness") {
    Rng rng(9);
    auto layout = sample_layout(4, 2, 4, EncodingStrategy::Elementwise, rng);
    // L = 8, l0 = 2, so m must stay within [1, 3].
    CHECK_THROWS_AS(promote_gates(layout, {}), RangeError);
    CHECK_THROWS_AS(promote_gates(layout, {0, 1, 2, 3}), RangeError);
    CHECK_THROWS_AS(promote_gates(layout, {1, 1}), ArgumentError);
    CHECK_THROWS_AS(promote_gates(layout, {8}), IndexError);
    CHECK_NOTHROW(promote_gates(layout, {0, 4, 7}));
    // Promoting an already-promoted slot is rejected.
    const auto promo = promote_gates(layout, {2});
    CHECK_THROWS_AS(promote_gates(promo.layout, {2}), ArgumentError);
}

TEST_CASE("image encoding: geometry and channel placement") {
    BlockSpec blk{Axis::X, Axis::Z, {true, false, false}};
    const auto layout = make_layout(4, 1, 4, {blk});
    const auto img = encode_image(layout, 4);
    CHECK(img.width == 4);
    CHECK(img.flat_size() == 5 * 4 * 4);
    // Column 0: rotations. Even wires RX (channel 0), odd wires RZ (channel 2).
    CHECK(img.at(0, 0, 0) == 1);
    CHECK(img.at(2, 1, 0) == 1);
    CHECK(img.at(0, 2, 0) == 1);
    CHECK(img.at(2, 3, 0) == 1);
    CHECK(img.at(1, 0, 0) == 0);
    // Column 1: single CNOT (0 -> 1).
    CHECK(img.at(3, 0, 1) == 1);
    CHECK(img.at(4, 1, 1) == 1);
    CHECK(img.at(3, 1, 1) == 0);
    // Padding columns stay clear.
    for (int ch = 0; ch < 5; ++ch) {
        for (int r = 0; r < 4; ++r) {
            CHECK(img.at(ch, r, 2) == 0);
            CHECK(img.at(ch, r, 3) == 0);
        }
    }
}

TEST_CASE("image encoding: control and target pixels pair up per column") {
    Rng rng(10);
    for (int t = 0; t < 50; ++t) {
        const auto layout = sample_layout(5, 2, 5, EncodingStrategy::Elementwise, rng);
        const auto img = encode_image(layout, 2 * layout.num_blocks());
        for (int col = 0; col < img.width; ++col) {
            int controls = 0, targets = 0;
            for (int r = 0; r < 5; ++r) {
                controls += img.at(3, r, col);
                targets += img.at(4, r, col);
            }
            CHECK(controls == targets);
        }
    }
}

TEST_CASE("image encoding is injective over an enumerated space") {
    const auto layouts = enumerate_block_space(2, 2, 2);
    std::set<std::string> images;
    for (const auto& l : layouts) {
        images.insert(encode_image(l, 10).to_bitstring());
    }
    CHECK(images.size() == layouts.size());
}

TEST_CASE("image width overflow raises a capacity error") {
    Rng rng(11);
    const auto layout = sample_layout(4, 3, 4, EncodingStrategy::Elementwise, rng);
    CHECK(layout.num_blocks() == 3);
    CHECK_THROWS_AS(encode_image(layout, 5), CapacityError);
    CHECK_NOTHROW(encode_image(layout, 6));
}

TEST_CASE("layout JSON round-trips exactly") {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
        const auto layout = sample_layout(4, 2, 6, EncodingStrategy::Chain, rng);
        const auto text = layout_to_json(layout);
        const auto back = layout_from_json(text);
        CHECK(back == layout);
        CHECK(layout_to_json(back) == text);
    }
    // Constants survive the round trip bit-exactly.
    const auto fill = sample_layout(5, 1, 3, EncodingStrategy::RandomFill, rng);
    CHECK(layout_from_json(layout_to_json(fill)) == fill);
}

TEST_CASE("layout JSON error reporting") {
    CHECK_THROWS_AS(layout_from_json("{"), ParseError);
    CHECK_THROWS_AS(layout_from_json(R"({"l0":1,"p":2,"blocks":[],"bindings":[]})"),
                    ParseError);
    CHECK_THROWS_AS(
        layout_from_json(
            R"({"n":2,"l0":1,"p":2,"blocks":[{"even_axis":"Q","odd_axis":"X","mask":[false]}],"bindings":[]})"),
        ParseError);
    CHECK_THROWS_AS(
        layout_from_json(
            R"({"n":2,"l0":1,"p":2,"blocks":[{"even_axis":"X","odd_axis":"X","mask":[false]}],"bindings":[{"gate_index":9,"kind":"feature","value":0}]})"),
        ParseError);
}

TEST_CASE("layout hashes distinguish structures and bindings") {
    const auto layouts = enumerate_block_space(4, 1, 4);
    std::set<std::string> hashes;
    for (const auto& l : layouts) hashes.insert(layout_hash(l));
    CHECK(hashes.size() == 72);
    // Same structure, different binding -> different hash.
    auto promoted = promote_gates(layouts[0], {1}).layout;
    CHECK(layout_hash(promoted) != layout_hash(layouts[0]));
}

TEST_CASE("trainable-module layouts carry RY and CRZ rings per block") {
    auto layout = make_layout(3, 1, 3, {BlockSpec{Axis::X, Axis::X, {true, true}}});
    layout.trainable_modules = true;
    layout.rebuild_gates();
    // 3 rotations + 2 CNOTs + 3 RY + 3 CRZ.
    REQUIRE(layout.gates.size() == 11);
    CHECK(layout.gates[5].gate.kind == GateKind::RY);
    CHECK(layout.gates[8].gate == Gate::crz(0, 1, 0.0));
    CHECK(layout.gates[10].gate == Gate::crz(2, 0, 0.0));
    // Encoding rotations exclude the module RY gates.
    CHECK(layout.rotation_gate_indices() == std::vector<int>{0, 1, 2});
    CHECK_THROWS_AS(encode_image(layout, 10), ArgumentError);
}

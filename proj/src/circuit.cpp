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

#include "qks/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

namespace qks {

using json = nlohmann::ordered_json;

char axis_name(Axis a) {
    switch (a) {
        case Axis::X: return 'X';
        case Axis::Y: return 'Y';
        case Axis::Z: return 'Z';
    }
    throw ArgumentError("unknown axis");
}

Axis axis_from_name(char c) {
    switch (c) {
        case 'X': return Axis::X;
        case 'Y': return Axis::Y;
        case 'Z': return Axis::Z;
    }
    throw ParseError(std::string("unknown axis name '") + c + "'");
}

GateKind axis_rotation(Axis a) {
    switch (a) {
        case Axis::X: return GateKind::RX;
        case Axis::Y: return GateKind::RY;
        case Axis::Z: return GateKind::RZ;
    }
    throw ArgumentError("unknown axis");
}

const char* strategy_name(EncodingStrategy s) {
    switch (s) {
        case EncodingStrategy::Sequential: return "sequential";
        case EncodingStrategy::Chain: return "chain";
        case EncodingStrategy::Random: return "random";
        case EncodingStrategy::Elementwise: return "elementwise";
        case EncodingStrategy::Modular: return "modular";
        case EncodingStrategy::RandomFill: return "random_fill";
    }
    throw ArgumentError("unknown strategy");
}

EncodingStrategy strategy_from_name(const std::string& name) {
    if (name == "sequential") return EncodingStrategy::Sequential;
    if (name == "chain") return EncodingStrategy::Chain;
    if (name == "random") return EncodingStrategy::Random;
    if (name == "elementwise") return EncodingStrategy::Elementwise;
    if (name == "modular") return EncodingStrategy::Modular;
    if (name == "random_fill") return EncodingStrategy::RandomFill;
    throw ArgumentError("unknown encoding strategy '" + name + "'");
}

int blocks_for(int n, int l0, int p) { return l0 * ((p + n - 1) / n); }

int CircuitLayout::total_rotations() const { return num_qubits * num_blocks(); }

int CircuitLayout::param_count() const {
    int count = 0;
    for (const GateSlot& s : gates) {
        if (s.binding && s.binding->kind == Binding::Kind::Param) {
            count = std::max(count, s.binding->index + 1);
        }
    }
    return count;
}

void CircuitLayout::rebuild_gates() {
    gates.clear();
    const int n = num_qubits;
    for (const BlockSpec& blk : blocks) {
        for (int q = 0; q < n; ++q) {
            const Axis a = (q % 2 == 0) ? blk.even_axis : blk.odd_axis;
            Gate g{axis_rotation(a), q, -1, 0.0};
            gates.push_back({g, std::nullopt});
        }
        for (int i = 0; i + 1 < n; ++i) {
            if (blk.entangler_mask[i]) {
                gates.push_back({Gate::cnot(i, i + 1), std::nullopt});
            }
        }
        if (trainable_modules) {
            for (int q = 0; q < n; ++q) {
                gates.push_back({Gate::ry(q, 0.0), std::nullopt});
            }
            for (int i = 0; i < n; ++i) {
                gates.push_back({Gate::crz(i, (i + 1) % n, 0.0), std::nullopt});
            }
        }
    }
}

std::vector<int> CircuitLayout::rotation_gate_indices() const {
    // Encoding rotations are the first num_qubits gates of every block;
    // trainable-module rotations are excluded.
    std::vector<int> idx;
    const int n = num_qubits;
    int pos = 0;
    for (const BlockSpec& blk : blocks) {
        for (int q = 0; q < n; ++q) idx.push_back(pos + q);
        pos += n;
        pos += static_cast<int>(
            std::count(blk.entangler_mask.begin(), blk.entangler_mask.end(), true));
        if (trainable_modules) pos += 2 * n;
    }
    return idx;
}

CircuitLayout make_layout(int n, int l0, int p, std::vector<BlockSpec> blocks) {
    if (n < 1) throw RangeError("layout needs at least one qubit");
    if (l0 < 1) throw RangeError("l0 must be positive");
    if (p < 1) throw RangeError("feature dimension must be positive");
    for (const BlockSpec& blk : blocks) {
        if (static_cast<int>(blk.entangler_mask.size()) != n - 1) {
            throw DimensionError("entangler mask length must be n - 1");
        }
    }
    CircuitLayout layout;
    layout.num_qubits = n;
    layout.l0 = l0;
    layout.feature_dim = p;
    layout.blocks = std::move(blocks);
    layout.rebuild_gates();
    return layout;
}

namespace {

void check_strategy(EncodingStrategy s, int n, int p) {
    const bool ok = (s == EncodingStrategy::Sequential && p > n) ||
                    (s == EncodingStrategy::Chain && p > n) ||
                    (s == EncodingStrategy::Random && p >= n) ||
                    (s == EncodingStrategy::Elementwise && p == n) ||
                    (s == EncodingStrategy::Modular && p < n) ||
                    (s == EncodingStrategy::RandomFill && p < n);
    if (!ok) {
        throw ArgumentError(std::string("strategy '") + strategy_name(s) +
                            "' incompatible with p=" + std::to_string(p) +
                            ", n=" + std::to_string(n));
    }
}

}  // namespace

void assign_features(CircuitLayout& layout, EncodingStrategy strategy, Rng& rng) {
    const int n = layout.num_qubits;
    const int p = layout.feature_dim;
    check_strategy(strategy, n, p);
    const int group = (p + n - 1) / n;  // blocks per layer group
    const std::vector<int> rot = layout.rotation_gate_indices();

    // One permutation per layout; every layer group repeats it.
    std::vector<int> perm;
    if (strategy == EncodingStrategy::Random) {
        perm.resize(p);
        for (int i = 0; i < p; ++i) perm[i] = i;
        rng.shuffle(perm);
    }

    for (int b = 0; b < layout.num_blocks(); ++b) {
        const int c = b % group;  // block position inside its group
        for (int q = 0; q < n; ++q) {
            GateSlot& slot = layout.gates[rot[b * n + q]];
            const int r = c * n + q;  // slot index inside the group
            Binding bind;
            switch (strategy) {
                case EncodingStrategy::Sequential:
                    bind = {Binding::Kind::Feature, r % p, 0.0};
                    break;
                case EncodingStrategy::Chain: {
                    const int row = (c % 2 == 0) ? q : n - 1 - q;
                    bind = {Binding::Kind::Feature, (c * n + row) % p, 0.0};
                    break;
                }
                case EncodingStrategy::Random:
                    bind = {Binding::Kind::Feature, perm[r % p], 0.0};
                    break;
                case EncodingStrategy::Elementwise:
                    bind = {Binding::Kind::Feature, q, 0.0};
                    break;
                case EncodingStrategy::Modular:
                    bind = {Binding::Kind::Feature, q % p, 0.0};
                    break;
                case EncodingStrategy::RandomFill:
                    if (q < p) {
                        bind = {Binding::Kind::Feature, q, 0.0};
                    } else {
                        bind = {Binding::Kind::Const, 0,
                                rng.uniform(0.0, 2.0 * std::numbers::pi)};
                    }
                    break;
            }
            slot.binding = bind;
        }
    }
}

CircuitLayout sample_layout(int n, int l0, int p, EncodingStrategy strategy,
                            Rng& rng) {
    if (n < 2) throw RangeError("sampling requires at least two qubits");
    if (l0 < 1) throw RangeError("l0 must be positive");
    if (p < 1) throw RangeError("feature dimension must be positive");
    check_strategy(strategy, n, p);
    const int b_count = blocks_for(n, l0, p);
    std::vector<BlockSpec> blocks(b_count);
    constexpr Axis kAxes[3] = {Axis::X, Axis::Y, Axis::Z};
    for (BlockSpec& blk : blocks) {
        blk.even_axis = kAxes[rng.uniform_below(3)];
        blk.odd_axis = kAxes[rng.uniform_below(3)];
        blk.entangler_mask.resize(n - 1);
        for (int i = 0; i + 1 < n; ++i) {
            blk.entangler_mask[i] = rng.uniform_below(2) == 1;
        }
    }
    CircuitLayout layout = make_layout(n, l0, p, std::move(blocks));
    assign_features(layout, strategy, rng);
    return layout;
}

EncodingStrategy canonical_strategy(int n, int p) {
    if (p > n) return EncodingStrategy::Sequential;
    if (p == n) return EncodingStrategy::Elementwise;
    return EncodingStrategy::Modular;
}

size_t block_space_size(int n, int l0, int p) {
    if (n < 2) throw RangeError("enumeration requires at least two qubits");
    const int b_count = blocks_for(n, l0, p);
    const long double per_block = 9.0L * std::pow(2.0L, n - 1);
    const long double total = std::pow(per_block, b_count);
    if (total > 1.0e18L) {
        throw CapacityError("block space size overflows");
    }
    return static_cast<size_t>(total + 0.5L);
}

std::vector<CircuitLayout> enumerate_block_space(int n, int l0, int p,
                                                 size_t guard) {
    const size_t total = block_space_size(n, l0, p);
    if (total > guard) {
        throw CapacityError("block space has " + std::to_string(total) +
                            " layouts, over the guard of " + std::to_string(guard));
    }
    const int b_count = blocks_for(n, l0, p);
    const size_t per_block = size_t{9} << (n - 1);
    const size_t mask_count = size_t{1} << (n - 1);
    constexpr Axis kAxes[3] = {Axis::X, Axis::Y, Axis::Z};
    const EncodingStrategy strategy = canonical_strategy(n, p);
    Rng rng(0);  // never consulted by deterministic strategies

    std::vector<CircuitLayout> out;
    out.reserve(total);
    for (size_t index = 0; index < total; ++index) {
        std::vector<BlockSpec> blocks(b_count);
        size_t rest = index;
        // Block 0 is the most significant digit of the enumeration index.
        for (int b = b_count - 1; b >= 0; --b) {
            const size_t digit = rest % per_block;
            rest /= per_block;
            BlockSpec& blk = blocks[b];
            blk.even_axis = kAxes[digit / (3 * mask_count)];
            blk.odd_axis = kAxes[(digit / mask_count) % 3];
            const size_t bits = digit % mask_count;
            blk.entangler_mask.resize(n - 1);
            for (int i = 0; i + 1 < n; ++i) {
                blk.entangler_mask[i] = ((bits >> (n - 2 - i)) & 1) != 0;
            }
        }
        CircuitLayout layout = make_layout(n, l0, p, std::move(blocks));
        assign_features(layout, strategy, rng);
        out.push_back(std::move(layout));
    }
    return out;
}

Promotion promote_gates(const CircuitLayout& layout,
                        const std::vector<int>& positions) {
    const int m = static_cast<int>(positions.size());
    const int total = layout.total_rotations();
    const int per_layer = total / layout.l0;
    if (m < 1 || m > per_layer - 1) {
        throw RangeError("promotion count " + std::to_string(m) +
                         " outside [1, " + std::to_string(per_layer - 1) + "]");
    }
    std::set<int> seen(positions.begin(), positions.end());
    if (static_cast<int>(seen.size()) != m) {
        throw ArgumentError("promotion positions must be distinct");
    }
    const std::vector<int> rot = layout.rotation_gate_indices();
    Promotion out{layout, {}};
    for (int slot = 0; slot < m; ++slot) {
        const int pos = positions[slot];
        if (pos < 0 || pos >= total) {
            throw IndexError("promotion position " + std::to_string(pos) +
                             " outside [0, " + std::to_string(total) + ")");
        }
        GateSlot& gs = out.layout.gates[rot[pos]];
        if (!gs.binding || gs.binding->kind != Binding::Kind::Feature) {
            throw ArgumentError("position " + std::to_string(pos) +
                                " is not a feature-bound rotation");
        }
        out.replaced_features.push_back(gs.binding->index);
        gs.binding = Binding{Binding::Kind::Param, slot, 0.0};
    }
    return out;
}

std::string CircuitImage::to_bitstring() const {
    std::string s(flat_size(), '0');
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) s[i] = '1';
    }
    return s;
}

CircuitImage encode_image(const CircuitLayout& layout, int max_width) {
    if (layout.trainable_modules) {
        throw ArgumentError("image encoding covers plain block layouts only");
    }
    const int n = layout.num_qubits;
    const int needed = 2 * layout.num_blocks();
    if (needed > max_width) {
        throw CapacityError("layout needs " + std::to_string(needed) +
                            " columns, image width is " +
                            std::to_string(max_width));
    }
    CircuitImage img;
    img.num_qubits = n;
    img.width = max_width;
    img.bits.assign(img.flat_size(), 0);
    auto set = [&](int channel, int row, int col) {
        img.bits[(static_cast<size_t>(channel) * n + row) * max_width + col] = 1;
    };
    for (int b = 0; b < layout.num_blocks(); ++b) {
        const BlockSpec& blk = layout.blocks[b];
        const int rot_col = 2 * b;
        for (int q = 0; q < n; ++q) {
            const Axis a = (q % 2 == 0) ? blk.even_axis : blk.odd_axis;
            set(static_cast<int>(a), q, rot_col);
        }
        for (int i = 0; i + 1 < n; ++i) {
            if (blk.entangler_mask[i]) {
                set(3, i, rot_col + 1);
                set(4, i + 1, rot_col + 1);
            }
        }
    }
    return img;
}

std::string layout_to_json(const CircuitLayout& layout) {
    json j;
    j["n"] = layout.num_qubits;
    j["l0"] = layout.l0;
    j["p"] = layout.feature_dim;
    j["blocks"] = json::array();
    for (const BlockSpec& blk : layout.blocks) {
        json b;
        b["even_axis"] = std::string(1, axis_name(blk.even_axis));
        b["odd_axis"] = std::string(1, axis_name(blk.odd_axis));
        b["mask"] = json::array();
        for (bool bit : blk.entangler_mask) b["mask"].push_back(bit);
        j["blocks"].push_back(std::move(b));
    }
    j["bindings"] = json::array();
    for (size_t i = 0; i < layout.gates.size(); ++i) {
        const GateSlot& slot = layout.gates[i];
        if (!slot.binding) continue;
        json b;
        b["gate_index"] = i;
        switch (slot.binding->kind) {
            case Binding::Kind::Feature:
                b["kind"] = "feature";
                b["value"] = slot.binding->index;
                break;
            case Binding::Kind::Param:
                b["kind"] = "param";
                b["value"] = slot.binding->index;
                break;
            case Binding::Kind::Const:
                b["kind"] = "const";
                b["value"] = slot.binding->value;
                break;
        }
        j["bindings"].push_back(std::move(b));
    }
    if (layout.trainable_modules) j["trainable_modules"] = true;
    return j.dump();
}

CircuitLayout layout_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("layout JSON: ") + e.what());
    }
    auto require = [&](const char* field) -> const json& {
        if (!j.contains(field)) {
            throw ParseError(std::string("layout JSON missing field '") + field +
                             "'");
        }
        return j.at(field);
    };
    try {
        const int n = require("n").get<int>();
        const int l0 = require("l0").get<int>();
        const int p = require("p").get<int>();
        std::vector<BlockSpec> blocks;
        for (const json& b : require("blocks")) {
            BlockSpec blk;
            const auto even = b.at("even_axis").get<std::string>();
            const auto odd = b.at("odd_axis").get<std::string>();
            if (even.size() != 1 || odd.size() != 1) {
                throw ParseError("layout JSON: axis names must be single letters");
            }
            blk.even_axis = axis_from_name(even[0]);
            blk.odd_axis = axis_from_name(odd[0]);
            for (const json& bit : b.at("mask")) {
                blk.entangler_mask.push_back(bit.get<bool>());
            }
            blocks.push_back(std::move(blk));
        }
        CircuitLayout layout = make_layout(n, l0, p, std::move(blocks));
        if (j.contains("trainable_modules") &&
            j.at("trainable_modules").get<bool>()) {
            layout.trainable_modules = true;
            layout.rebuild_gates();
        }
        for (const json& b : require("bindings")) {
            const auto gi = b.at("gate_index").get<size_t>();
            if (gi >= layout.gates.size()) {
                throw ParseError("layout JSON: gate_index " + std::to_string(gi) +
                                 " out of range");
            }
            GateSlot& slot = layout.gates[gi];
            if (!gate_has_angle(slot.gate.kind)) {
                throw ParseError("layout JSON: binding on angle-free gate " +
                                 std::to_string(gi));
            }
            const auto kind = b.at("kind").get<std::string>();
            Binding bind;
            if (kind == "feature") {
                bind = {Binding::Kind::Feature, b.at("value").get<int>(), 0.0};
            } else if (kind == "param") {
                bind = {Binding::Kind::Param, b.at("value").get<int>(), 0.0};
            } else if (kind == "const") {
                bind = {Binding::Kind::Const, 0, b.at("value").get<double>()};
            } else {
                throw ParseError("layout JSON: unknown binding kind '" + kind +
                                 "'");
            }
            slot.binding = bind;
        }
        return layout;
    } catch (const json::exception& e) {
        throw ParseError(std::string("layout JSON: ") + e.what());
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(std::string("layout JSON: ") + e.what());
    }
}

std::string layout_hash(const CircuitLayout& layout) {
    return hex64(fnv1a64(layout_to_json(layout)));
}

}  // namespace qks

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
 * @file circuit.hpp
 * Hardware-efficient layout IR: block structure, feature-encoding
 * strategies, random sampling, exhaustive enumeration, gate promotion for
 * fine-tuning and the binary image encoding consumed by the predictor.
 *
 * A layout is B = l0 * ceil(p/n) blocks. Each block rotates every qubit
 * (even wires share one axis, odd wires another) and then applies CNOTs on
 * the adjacent pairs selected by its entangler mask. Baseline circuits may
 * additionally carry a trainable module per block (RY on every wire plus a
 * controlled-RZ ring), flagged by trainable_modules.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qks/qsim.hpp"
#include "qks/rng.hpp"

namespace qks {

enum class Axis { X, Y, Z };

char axis_name(Axis a);
Axis axis_from_name(char c);
GateKind axis_rotation(Axis a);

struct BlockSpec {
    Axis even_axis = Axis::X;
    Axis odd_axis = Axis::X;
    std::vector<bool> entangler_mask;  // length n-1, entry i gates (i, i+1)

    bool operator==(const BlockSpec&) const = default;
};

struct Binding {
    enum class Kind { Feature, Param, Const };
    Kind kind = Kind::Feature;
    int index = 0;        // feature or parameter slot
    double value = 0.0;   // Const only

    bool operator==(const Binding&) const = default;
};

/// One gate in the flattened execution order, with its binding when the
/// gate carries an angle.
struct GateSlot {
    Gate gate;
    std::optional<Binding> binding;

    bool operator==(const GateSlot&) const = default;
};

enum class EncodingStrategy {
    Sequential,  // p > n: column-major feature order
    Chain,       // p > n: column-major, direction alternating per column
    Random,      // p >= n: one permutation per layout, repeated per group
    Elementwise, // p == n: qubit q reads feature q
    Modular,     // p < n: qubit q reads feature q mod p
    RandomFill,  // p < n: first p wires read features, rest fixed constants
};

const char* strategy_name(EncodingStrategy s);
EncodingStrategy strategy_from_name(const std::string& name);

struct CircuitLayout {
    int num_qubits = 0;
    int l0 = 1;
    int feature_dim = 0;  // p
    std::vector<BlockSpec> blocks;
    bool trainable_modules = false;
    std::vector<GateSlot> gates;

    int num_blocks() const { return static_cast<int>(blocks.size()); }
    /// Count of single-qubit rotation gates (the L in width = 2L/n).
    int total_rotations() const;
    /// Highest parameter slot + 1 across all bindings.
    int param_count() const;
    /// Rebuilds the flattened gate list from blocks, keeping no bindings.
    void rebuild_gates();
    /// Indices into `gates` of the b-th block's single-qubit rotations.
    std::vector<int> rotation_gate_indices() const;

    bool operator==(const CircuitLayout&) const = default;
};

/// Blocks per layout for a (n, l0, p) cell.
int blocks_for(int n, int l0, int p);

/// Builds the block skeleton (rotations + CNOTs, no bindings yet).
CircuitLayout make_layout(int n, int l0, int p, std::vector<BlockSpec> blocks);

/// Binds features onto a layout's rotation gates in place. `rng` is only
/// consulted by the Random and RandomFill strategies. Throws ArgumentError
/// when the strategy does not match the p-vs-n regime.
void assign_features(CircuitLayout& layout, EncodingStrategy strategy, Rng& rng);

/// Samples block axes and entangler masks uniformly, then binds features.
/// Requires n >= 2, l0 >= 1, p >= 1.
CircuitLayout sample_layout(int n, int l0, int p, EncodingStrategy strategy,
                            Rng& rng);

/// All distinct block structures for the cell, bound with the canonical
/// deterministic strategy for the regime (Sequential / Elementwise /
/// Modular). Throws CapacityError when the space exceeds `guard`.
std::vector<CircuitLayout> enumerate_block_space(int n, int l0, int p,
                                                 size_t guard = 1000000);

/// Number of layouts enumerate_block_space would produce.
size_t block_space_size(int n, int l0, int p);

/// Strategy used by enumerate_block_space and the auto mode of the CLI.
EncodingStrategy canonical_strategy(int n, int p);

struct Promotion {
    CircuitLayout layout;
    /// Feature index previously bound at each promoted slot, in parameter
    /// order; drives the fine-tuning initialisation.
    std::vector<int> replaced_features;
};

/// Rebinds the feature rotations at `positions` (indices into the rotation
/// gate order) to parameter slots 0..m-1. Requires 1 <= m <= L/l0 - 1
/// (RangeError), distinct positions addressing feature-bound rotations
/// (ArgumentError / IndexError).
Promotion promote_gates(const CircuitLayout& layout,
                        const std::vector<int>& positions);

/// Five binary channels (RX, RY, RZ, CNOT control, CNOT target) of height
/// num_qubits. Rotation and entangler columns alternate, so an unpadded
/// layout occupies 2B columns; the rest of `width` stays zero.
struct CircuitImage {
    int num_qubits = 0;
    int width = 0;
    std::vector<uint8_t> bits;  // [(channel * n + row) * width + col]

    static constexpr int kChannels = 5;
    size_t flat_size() const {
        return static_cast<size_t>(kChannels) * num_qubits * width;
    }
    uint8_t at(int channel, int row, int col) const {
        return bits[(static_cast<size_t>(channel) * num_qubits + row) * width + col];
    }
    std::string to_bitstring() const;
};

/// Throws CapacityError when the layout needs more than max_width columns.
CircuitImage encode_image(const CircuitLayout& layout, int max_width);

/// Canonical single-line JSON: {n, l0, p, blocks, bindings} plus a
/// "trainable_modules" flag when set. Bindings address gates by their index
/// in the flattened gate list.
std::string layout_to_json(const CircuitLayout& layout);
CircuitLayout layout_from_json(const std::string& text);

/// FNV-1a of the canonical JSON, as 16 hex digits.
std::string layout_hash(const CircuitLayout& layout);

}  // namespace qks

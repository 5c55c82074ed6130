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
 * @file errors.hpp
 * Exception hierarchy shared by every module. Each type maps to one failure
 * class so callers (and tests) can react to the kind, not the message text.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace qks {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Resource limits: qubit caps, enumeration guards, image width overflow.
struct CapacityError : Error {
    using Error::Error;
};

/// Mismatched shapes between operands (state dims, Gram sizes, label counts).
struct DimensionError : Error {
    using Error::Error;
};

/// Out-of-range qubit or element index.
struct IndexError : Error {
    using Error::Error;
};

/// Unresolvable gate binding (missing feature/parameter slot).
struct BindingError : Error {
    using Error::Error;
};

/// Malformed input files (CSV, JSON, checkpoints).
struct ParseError : Error {
    using Error::Error;
};

/// Scalar argument outside its documented range.
struct RangeError : Error {
    using Error::Error;
};

/// Inconsistent or invalid argument combination.
struct ArgumentError : Error {
    using Error::Error;
};

/// Numerical failure: divergence, singular solves, undefined statistics.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace qks

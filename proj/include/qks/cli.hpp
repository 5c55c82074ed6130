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
 * @file cli.hpp
 * Command line front end. dispatch() is a plain function so the test suite
 * can drive subcommands in-process; tools/main.cpp is a thin wrapper.
 * Exit codes: 0 success, 1 usage errors, 2 runtime failures.
 */
#pragma once

namespace qks::cli {

int dispatch(int argc, char** argv);

}  // namespace qks::cli

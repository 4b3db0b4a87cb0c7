/*
 * Copyright 2026 The confad Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. run_cli is the whole program minus process
// plumbing, so it can be driven in-process by tests.
//
// Exit codes: 0 success, 2 usage/input/configuration errors, 1 internal
// errors.

#ifndef CONFAD_CLI_HPP_
#define CONFAD_CLI_HPP_

#include <ostream>

namespace confad::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace confad::cli

#endif  // CONFAD_CLI_HPP_

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

// Flat key = value run configuration. '#' starts a comment; unknown keys
// and malformed values are errors.

#ifndef CONFAD_IO_CONFIG_HPP_
#define CONFAD_IO_CONFIG_HPP_

#include <optional>
#include <string>
#include <vector>

#include "confad/martingales.hpp"
#include "confad/pipeline.hpp"

namespace confad::io {

enum class ShiftFamily { kNone, kExponentialTilt, kLogisticTilt };

struct RunConfig {
  pipeline::PipelineConfig pipeline;
  double alpha = 0.1;
  // Weighting scheme by name: none, uniform, logistic, oracle.
  std::string weighting = "none";
  ShiftFamily shift_family = ShiftFamily::kNone;
  std::vector<double> shift_coefficients;
  double shift_intercept = 0.0;
  martingales::MartingaleSpec martingale = martingales::MartingaleSpec::power(0.5);
  martingales::AlarmConfig alarms;
  // Whether the file set "smoothed"; streams default to smoothed otherwise.
  bool smoothed_explicit = false;
};

// Default configuration: isolation forest, Split(0.5), empirical p-values,
// alpha 0.1, power martingale (0.5) with Ville and restarted thresholds 100.
RunConfig default_run_config();

RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Canonical text listing every key; parse_config(to_config_text(c)) == c.
std::string to_config_text(const RunConfig& config);

// Built-in density-ratio families for oracle weighting:
// exponential_tilt exp(b0 + b.x), logistic_tilt sigmoid(b0 + b.x).
weighting::RatioFunction make_shift_ratio(ShiftFamily family,
                                          std::vector<double> coefficients,
                                          double intercept);

}  // namespace confad::io

#endif  // CONFAD_IO_CONFIG_HPP_

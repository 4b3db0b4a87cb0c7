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

// Covariate-shift weighting: density-ratio estimates w(x) = dQ/dP(x) between
// the calibration (source) and test (target) covariate distributions, and
// weighted conformal p-values built from them.

#ifndef CONFAD_WEIGHTING_HPP_
#define CONFAD_WEIGHTING_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "confad/core.hpp"
#include "confad/resampling.hpp"

namespace confad::weighting {

enum class WeightKind { kLogistic, kOracle, kUniform };

using RatioFunction = std::function<double(std::span<const double>)>;

struct WeightOptions {
  // Emitted weights are capped at cap_factor x the median calibration weight
  // unless absolute_cap is set.
  double cap_factor = 20.0;
  std::optional<double> absolute_cap;
  double l2 = 1e-4;
  std::size_t max_iterations = 10000;
  double gradient_tolerance = 1e-6;
  // Required for kOracle.
  RatioFunction ratio;
};

inline constexpr double kMinWeight = 1e-12;

struct WeightModel {
  WeightKind kind = WeightKind::kUniform;
  // Logistic classifier on standardized features, label 1 = test.
  std::vector<double> coefficients;
  double intercept = 0.0;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
  std::size_t n_cols = 0;
  RatioFunction ratio;
  double cap = 0.0;
  bool converged = true;
  std::size_t iterations = 0;
};

struct WeightVector {
  std::vector<double> values;
  std::size_t n_capped = 0;
};

// The seed is accepted for interface uniformity; all built-in estimators are
// deterministic.
WeightModel fit_weight_estimator(const DataMatrix& cal_x,
                                 const DataMatrix& test_x, WeightKind kind,
                                 RandomSeed seed,
                                 const WeightOptions& options = {});

WeightVector weights(const WeightModel& model, const DataMatrix& x);

// (sum_{S_i >= s} w_i + w_test) / (sum_i w_i + w_test).
double weighted_p_value(std::span<const double> cal_scores,
                        std::span<const double> cal_weights, double s_test,
                        double w_test);

// Weighted p-values for a batch, using the calibration entry/model pairing.
// cal_weights follows cm.entries order.
PValueVector weighted_p_values(const resampling::CalibrationModel& cm,
                               const resampling::TestScores& scores,
                               std::span<const double> cal_weights,
                               std::span<const double> test_weights);

}  // namespace confad::weighting

#endif  // CONFAD_WEIGHTING_HPP_

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

// Detector + strategy + estimation + weighting composed into the
// fit -> p-values -> select lifecycle.

#ifndef CONFAD_PIPELINE_HPP_
#define CONFAD_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>

#include "confad/core.hpp"
#include "confad/decisions.hpp"
#include "confad/detectors.hpp"
#include "confad/estimation.hpp"
#include "confad/resampling.hpp"
#include "confad/weighting.hpp"

namespace confad::pipeline {

struct WeightingSpec {
  weighting::WeightKind kind = weighting::WeightKind::kLogistic;
  weighting::WeightOptions options;
};

struct PipelineConfig {
  detectors::ScorerSpec scorer;
  resampling::StrategySpec strategy;
  estimation::EstimationSpec estimation;
  std::optional<WeightingSpec> weighting;
  RandomSeed seed;

  void validate() const;
};

// Immutable after fit; safe to share across threads.
struct FittedPipeline {
  PipelineConfig config;
  resampling::CalibrationModel calibration;
  std::optional<estimation::AdjustmentTable> table;
  // Covariates of each calibration entry, in entry order. Only kept when
  // weighting is configured.
  DataMatrix calibration_covariates;
};

// Child seed streams of PipelineConfig::seed.
inline constexpr std::uint64_t kSmoothingStream = 101;
inline constexpr std::uint64_t kAdjustmentStream = 102;
inline constexpr std::uint64_t kWeightStream = 103;

FittedPipeline fit(const PipelineConfig& config, const DataMatrix& train);

// Calibrates an already fitted scorer on held-out inliers. Only split
// strategies are accepted.
FittedPipeline fit_detached(const PipelineConfig& config,
                            const detectors::FittedScorer& scorer,
                            const DataMatrix& calib);

// Rebuilds the derived state (adjustment table) of a pipeline assembled from
// stored parts.
FittedPipeline assemble(PipelineConfig config,
                        resampling::CalibrationModel calibration,
                        DataMatrix calibration_covariates);

// index_offset shifts the smoothing streams, so feeding a stream point by
// point with offset t reproduces the batch result.
PValueVector compute_p_values(const FittedPipeline& fp, const DataMatrix& x,
                              std::size_t index_offset = 0);

DecisionSet select(const FittedPipeline& fp, const DataMatrix& x, double alpha);

ScoreVector score_samples(const FittedPipeline& fp, const DataMatrix& x);

}  // namespace confad::pipeline

#endif  // CONFAD_PIPELINE_HPP_

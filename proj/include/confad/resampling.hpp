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

// Conformalization strategies: split, cross-validation (CV / CV+),
// leave-one-out, and bootstrap (JaB / J+aB). Each produces calibration
// entries bound to the models that may legitimately score them.

#ifndef CONFAD_RESAMPLING_HPP_
#define CONFAD_RESAMPLING_HPP_

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "confad/core.hpp"
#include "confad/detectors.hpp"

namespace confad::resampling {

enum class StrategyKind { kSplit, kCrossValidation, kJackknife, kJackknifeBootstrap };
enum class Mode { kPlus, kSingleModel };
enum class Aggregation { kMedian, kMean };

// Calibration size as an absolute row count or a fraction in (0, 1).
using CalibrationSize = std::variant<std::size_t, double>;

struct StrategySpec {
  StrategyKind kind = StrategyKind::kSplit;
  CalibrationSize n_calib = 0.5;
  std::size_t folds = 10;
  std::size_t n_bootstraps = 100;
  Mode mode = Mode::kPlus;
  Aggregation aggregation = Aggregation::kMedian;

  static StrategySpec split(CalibrationSize n_calib);
  static StrategySpec cross_validation(std::size_t k, Mode mode = Mode::kPlus);
  static StrategySpec jackknife(Mode mode = Mode::kPlus);
  static StrategySpec bootstrap(std::size_t n_bootstraps,
                                Mode mode = Mode::kPlus);

  void validate() const;
};

struct CalibrationEntry {
  double score = 0.0;
  // Index into CalibrationModel::model_sets.
  std::size_t model_id = 0;
  // Row of the calibrated data matrix that produced the score.
  std::size_t row = 0;
};

// Calibration scores plus the fitted scorers needed to score test points
// symmetrically. An entry with model set G is compared against the test
// point's score aggregated over the models in G; for split and CV every set
// is a single model, for bootstrap plus mode it is the entry's out-of-bag
// model set.
struct CalibrationModel {
  std::vector<CalibrationEntry> entries;
  std::vector<detectors::FittedScorer> models;
  std::vector<std::vector<std::size_t>> model_sets;
  Mode mode = Mode::kSingleModel;
  StrategySpec strategy;
  // Rows (in the calibrated matrix) each model was trained on; multisets for
  // bootstrap models. Empty for detached scorers.
  std::vector<std::vector<std::size_t>> training_rows;
  // Rows that were in-bag for every bootstrap and therefore have no entry.
  std::size_t dropped_rows = 0;

  std::size_t n_entries() const noexcept { return entries.size(); }
  std::vector<double> entry_scores() const;
};

// Test scores under every retained model: a (points x models) table.
struct TestScores {
  std::size_t n_points = 0;
  std::size_t n_models = 0;
  std::vector<double> table;

  double at(std::size_t point, std::size_t model) const {
    return table[point * n_models + model];
  }
  std::span<const double> row(std::size_t point) const {
    return {table.data() + point * n_models, n_models};
  }

  static TestScores single(std::vector<double> scores);
};

double aggregate(std::span<const double> values, Aggregation how);

CalibrationModel calibrate_split(const detectors::ScorerSpec& spec,
                                 const DataMatrix& data,
                                 CalibrationSize n_calib, RandomSeed seed);

CalibrationModel calibrate_detached(const detectors::FittedScorer& scorer,
                                    const DataMatrix& calib);

CalibrationModel calibrate_cv(const detectors::ScorerSpec& spec,
                              const DataMatrix& data, std::size_t k, Mode mode,
                              RandomSeed seed);

CalibrationModel calibrate_jackknife(const detectors::ScorerSpec& spec,
                                     const DataMatrix& data, Mode mode,
                                     RandomSeed seed);

CalibrationModel calibrate_bootstrap(const detectors::ScorerSpec& spec,
                                     const DataMatrix& data,
                                     std::size_t n_bootstraps, Mode mode,
                                     RandomSeed seed,
                                     Aggregation aggregation = Aggregation::kMedian);

// Dispatches on strategy.kind.
CalibrationModel calibrate(const detectors::ScorerSpec& spec,
                           const StrategySpec& strategy, const DataMatrix& data,
                           RandomSeed seed);

// Detector-free calibration over precomputed scores, paired with an identity
// scorer that reads column 0.
CalibrationModel calibration_from_scores(std::vector<double> scores);

TestScores test_score_matrix(const CalibrationModel& cm, const DataMatrix& x);

// Test point's score aggregated over one model set, the value a calibration
// entry bound to that set is compared against.
double paired_test_score(const CalibrationModel& cm, const TestScores& scores,
                         std::size_t point, std::size_t model_set);

// Per test point, the score aggregated over all retained models.
std::vector<double> aggregated_test_scores(const CalibrationModel& cm,
                                           const TestScores& scores);

// Fold sizes used by calibrate_cv: near-equal, larger folds first.
std::vector<std::size_t> fold_sizes(std::size_t n, std::size_t k);

std::size_t resolve_calibration_size(CalibrationSize n_calib, std::size_t n_rows);

}  // namespace confad::resampling

#endif  // CONFAD_RESAMPLING_HPP_

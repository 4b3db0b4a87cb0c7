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

#include "confad/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace confad::resampling {

using detectors::FittedScorer;
using detectors::ScorerSpec;

namespace {

// Child seed streams of the strategy seed.
constexpr std::uint64_t kPartitionStream = 0;
constexpr std::uint64_t kModelStream = 1;
constexpr std::uint64_t kFinalModelStream = 2;
constexpr std::uint64_t kBootstrapDrawStream = 3;

RandomSeed model_seed(RandomSeed seed, std::size_t task) {
  return split_seed(split_seed(seed, kModelStream), task);
}

std::vector<std::size_t> iota_vector(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

StrategySpec StrategySpec::split(CalibrationSize n_calib) {
  StrategySpec s;
  s.kind = StrategyKind::kSplit;
  s.n_calib = n_calib;
  s.mode = Mode::kSingleModel;
  return s;
}

StrategySpec StrategySpec::cross_validation(std::size_t k, Mode mode) {
  StrategySpec s;
  s.kind = StrategyKind::kCrossValidation;
  s.folds = k;
  s.mode = mode;
  return s;
}

StrategySpec StrategySpec::jackknife(Mode mode) {
  StrategySpec s;
  s.kind = StrategyKind::kJackknife;
  s.mode = mode;
  return s;
}

StrategySpec StrategySpec::bootstrap(std::size_t n_bootstraps, Mode mode) {
  StrategySpec s;
  s.kind = StrategyKind::kJackknifeBootstrap;
  s.n_bootstraps = n_bootstraps;
  s.mode = mode;
  return s;
}

void StrategySpec::validate() const {
  switch (kind) {
    case StrategyKind::kSplit:
      if (const double* f = std::get_if<double>(&n_calib)) {
        if (!(*f > 0.0 && *f < 1.0)) {
          throw Error(ErrorCode::kInvalidSpec,
                      "fractional n_calib must lie strictly inside (0, 1)");
        }
      } else if (std::get<std::size_t>(n_calib) == 0) {
        throw Error(ErrorCode::kInvalidSpec, "n_calib must be positive");
      }
      break;
    case StrategyKind::kCrossValidation:
      if (folds < 2) {
        throw Error(ErrorCode::kKOutOfRange, "cross-validation needs k >= 2");
      }
      break;
    case StrategyKind::kJackknife:
      break;
    case StrategyKind::kJackknifeBootstrap:
      if (n_bootstraps == 0) {
        throw Error(ErrorCode::kInvalidSpec, "n_bootstraps must be positive");
      }
      break;
  }
}

std::vector<double> CalibrationModel::entry_scores() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.score);
  return out;
}

TestScores TestScores::single(std::vector<double> scores) {
  TestScores ts;
  ts.n_points = scores.size();
  ts.n_models = 1;
  ts.table = std::move(scores);
  return ts;
}

double aggregate(std::span<const double> values, Aggregation how) {
  if (values.size() == 1) return values[0];
  std::vector<double> v(values.begin(), values.end());
  if (how == Aggregation::kMean) {
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
  }
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid),
                   v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::size_t resolve_calibration_size(CalibrationSize n_calib,
                                     std::size_t n_rows) {
  std::size_t resolved;
  if (const double* f = std::get_if<double>(&n_calib)) {
    if (!(*f > 0.0 && *f < 1.0)) {
      throw Error(ErrorCode::kInvalidSpec,
                  "fractional n_calib must lie strictly inside (0, 1)");
    }
    resolved = static_cast<std::size_t>(std::lround(*f * static_cast<double>(n_rows)));
  } else {
    resolved = std::get<std::size_t>(n_calib);
  }
  if (resolved == 0) {
    throw Error(ErrorCode::kInvalidSpec,
                "calibration size resolves to zero rows");
  }
  if (resolved >= n_rows) {
    throw Error(ErrorCode::kCalibrationTooLarge,
                "calibration size " + std::to_string(resolved) +
                    " leaves no training rows out of " + std::to_string(n_rows));
  }
  return resolved;
}

CalibrationModel calibrate_split(const ScorerSpec& spec, const DataMatrix& data,
                                 CalibrationSize n_calib, RandomSeed seed) {
  const std::size_t n = data.rows();
  if (n < 2) {
    throw Error(ErrorCode::kEmptyTrainingSet, "split needs at least 2 rows");
  }
  const std::size_t n_cal = resolve_calibration_size(n_calib, n);

  std::vector<std::size_t> perm = iota_vector(n);
  Rng rng(split_seed(seed, kPartitionStream));
  rng.shuffle(perm);
  std::vector<std::size_t> cal_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_cal));
  std::vector<std::size_t> train_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_cal), perm.end());
  std::sort(cal_rows.begin(), cal_rows.end());
  std::sort(train_rows.begin(), train_rows.end());

  FittedScorer scorer = detectors::fit(spec, data.select_rows(train_rows),
                                       model_seed(seed, 0));
  const ScoreVector cal_scores = detectors::score(scorer, data.select_rows(cal_rows));

  CalibrationModel cm;
  cm.entries.reserve(n_cal);
  for (std::size_t i = 0; i < n_cal; ++i) {
    cm.entries.push_back({cal_scores.scores[i], 0, cal_rows[i]});
  }
  cm.models.push_back(std::move(scorer));
  cm.model_sets = {{0}};
  cm.mode = Mode::kSingleModel;
  cm.strategy = StrategySpec::split(n_calib);
  cm.training_rows = {std::move(train_rows)};
  return cm;
}

CalibrationModel calibrate_detached(const FittedScorer& scorer,
                                    const DataMatrix& calib) {
  if (calib.empty()) {
    throw Error(ErrorCode::kEmptyCalibration, "calibration set is empty");
  }
  const ScoreVector scores = detectors::score(scorer, calib);
  CalibrationModel cm;
  cm.entries.reserve(calib.rows());
  for (std::size_t i = 0; i < calib.rows(); ++i) {
    cm.entries.push_back({scores.scores[i], 0, i});
  }
  cm.models.push_back(scorer);
  cm.model_sets = {{0}};
  cm.mode = Mode::kSingleModel;
  cm.strategy = StrategySpec::split(calib.rows());
  return cm;
}

std::vector<std::size_t> fold_sizes(std::size_t n, std::size_t k) {
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t f = 0; f < n % k; ++f) ++sizes[f];
  return sizes;
}

CalibrationModel calibrate_cv(const ScorerSpec& spec, const DataMatrix& data,
                              std::size_t k, Mode mode, RandomSeed seed) {
  const std::size_t n = data.rows();
  if (k < 2 || k > n) {
    throw Error(ErrorCode::kKOutOfRange,
                "k = " + std::to_string(k) + " must lie in [2, " +
                    std::to_string(n) + "]");
  }
  std::vector<std::size_t> perm = iota_vector(n);
  Rng rng(split_seed(seed, kPartitionStream));
  rng.shuffle(perm);

  std::vector<std::size_t> fold_of(n);
  std::vector<std::vector<std::size_t>> held_out(k);
  {
    const auto sizes = fold_sizes(n, k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
      for (std::size_t c = 0; c < sizes[f]; ++c, ++pos) {
        fold_of[perm[pos]] = f;
        held_out[f].push_back(perm[pos]);
      }
      std::sort(held_out[f].begin(), held_out[f].end());
    }
  }

  std::vector<std::vector<std::size_t>> train_rows(k);
  for (std::size_t f = 0; f < k; ++f) {
    train_rows[f].reserve(n - held_out[f].size());
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] != f) train_rows[f].push_back(i);
    }
  }

  std::vector<std::optional<FittedScorer>> fold_models(k);
  std::vector<std::vector<double>> fold_scores(k);
  parallel_for(k, [&](std::size_t f) {
    fold_models[f] = detectors::fit(spec, data.select_rows(train_rows[f]),
                                    model_seed(seed, f));
    fold_scores[f] =
        detectors::score(*fold_models[f], data.select_rows(held_out[f])).scores;
  });

  CalibrationModel cm;
  cm.entries.resize(n);
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t c = 0; c < held_out[f].size(); ++c) {
      const std::size_t row = held_out[f][c];
      cm.entries[row] = {fold_scores[f][c], f, row};
    }
  }
  cm.mode = mode;
  cm.strategy = StrategySpec::cross_validation(k, mode);
  if (mode == Mode::kPlus) {
    for (std::size_t f = 0; f < k; ++f) {
      cm.models.push_back(std::move(*fold_models[f]));
      cm.model_sets.push_back({f});
    }
    cm.training_rows = std::move(train_rows);
  } else {
    cm.models.push_back(
        detectors::fit(spec, data, split_seed(seed, kFinalModelStream)));
    cm.model_sets = {{0}};
    for (auto& e : cm.entries) e.model_id = 0;
    cm.training_rows = {iota_vector(n)};
  }
  return cm;
}

CalibrationModel calibrate_jackknife(const ScorerSpec& spec,
                                     const DataMatrix& data, Mode mode,
                                     RandomSeed seed) {
  if (data.rows() < 2) {
    throw Error(ErrorCode::kKOutOfRange, "leave-one-out needs at least 2 rows");
  }
  CalibrationModel cm = calibrate_cv(spec, data, data.rows(), mode, seed);
  cm.strategy = StrategySpec::jackknife(mode);
  return cm;
}

CalibrationModel calibrate_bootstrap(const ScorerSpec& spec,
                                     const DataMatrix& data,
                                     std::size_t n_bootstraps, Mode mode,
                                     RandomSeed seed, Aggregation aggregation) {
  if (n_bootstraps == 0) {
    throw Error(ErrorCode::kInvalidSpec, "n_bootstraps must be positive");
  }
  const std::size_t n = data.rows();
  if (n < 2) {
    throw Error(ErrorCode::kEmptyTrainingSet, "bootstrap needs at least 2 rows");
  }

  std::vector<std::vector<std::size_t>> drawn(n_bootstraps);
  std::vector<std::vector<std::size_t>> out_of_bag(n_bootstraps);
  for (std::size_t b = 0; b < n_bootstraps; ++b) {
    Rng rng(split_seed(split_seed(seed, kBootstrapDrawStream), b));
    std::vector<char> in_bag(n, 0);
    drawn[b].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      drawn[b][i] = rng.index(n);
      in_bag[drawn[b][i]] = 1;
    }
    std::sort(drawn[b].begin(), drawn[b].end());
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_bag[i]) out_of_bag[b].push_back(i);
    }
  }

  std::vector<std::optional<FittedScorer>> models(n_bootstraps);
  std::vector<std::vector<double>> oob_scores(n_bootstraps);
  parallel_for(n_bootstraps, [&](std::size_t b) {
    models[b] = detectors::fit(spec, data.select_rows(drawn[b]),
                               model_seed(seed, b));
    if (!out_of_bag[b].empty()) {
      oob_scores[b] =
          detectors::score(*models[b], data.select_rows(out_of_bag[b])).scores;
    }
  });

  // Per row: the models for which it is out-of-bag, in model order.
  std::vector<std::vector<std::size_t>> row_models(n);
  std::vector<std::vector<double>> row_scores(n);
  for (std::size_t b = 0; b < n_bootstraps; ++b) {
    for (std::size_t c = 0; c < out_of_bag[b].size(); ++c) {
      row_models[out_of_bag[b][c]].push_back(b);
      row_scores[out_of_bag[b][c]].push_back(oob_scores[b][c]);
    }
  }

  CalibrationModel cm;
  cm.mode = mode;
  cm.strategy = StrategySpec::bootstrap(n_bootstraps, mode);
  cm.strategy.aggregation = aggregation;
  for (std::size_t i = 0; i < n; ++i) {
    if (row_models[i].empty()) {
      ++cm.dropped_rows;
      continue;
    }
    const double s = aggregate(row_scores[i], aggregation);
    if (mode == Mode::kPlus) {
      cm.entries.push_back({s, cm.model_sets.size(), i});
      cm.model_sets.push_back(std::move(row_models[i]));
    } else {
      cm.entries.push_back({s, 0, i});
    }
  }
  if (cm.entries.empty()) {
    throw Error(ErrorCode::kNoOutOfBagRows,
                "every row was in-bag for every bootstrap; increase n_bootstraps");
  }
  if (mode == Mode::kPlus) {
    for (auto& m : models) cm.models.push_back(std::move(*m));
    cm.training_rows = std::move(drawn);
  } else {
    cm.models.push_back(
        detectors::fit(spec, data, split_seed(seed, kFinalModelStream)));
    cm.model_sets = {{0}};
    cm.training_rows = {iota_vector(n)};
  }
  return cm;
}

CalibrationModel calibrate(const ScorerSpec& spec, const StrategySpec& strategy,
                           const DataMatrix& data, RandomSeed seed) {
  strategy.validate();
  CalibrationModel cm;
  switch (strategy.kind) {
    case StrategyKind::kSplit:
      cm = calibrate_split(spec, data, strategy.n_calib, seed);
      break;
    case StrategyKind::kCrossValidation:
      cm = calibrate_cv(spec, data, strategy.folds, strategy.mode, seed);
      break;
    case StrategyKind::kJackknife:
      cm = calibrate_jackknife(spec, data, strategy.mode, seed);
      break;
    case StrategyKind::kJackknifeBootstrap:
      cm = calibrate_bootstrap(spec, data, strategy.n_bootstraps,
                               strategy.mode, seed, strategy.aggregation);
      break;
  }
  cm.strategy.aggregation = strategy.aggregation;
  return cm;
}

CalibrationModel calibration_from_scores(std::vector<double> scores) {
  if (scores.empty()) {
    throw Error(ErrorCode::kEmptyCalibration, "no calibration scores");
  }
  CalibrationModel cm;
  cm.entries.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InvalidDataError(i, 0);
    cm.entries.push_back({scores[i], 0, i});
  }
  cm.models.push_back(detectors::wrap_detached(
      [](std::span<const double> x) { return x[0]; },
      detectors::Polarity::kHigherIsAnomalous, 1));
  cm.model_sets = {{0}};
  cm.mode = Mode::kSingleModel;
  cm.strategy = StrategySpec::split(scores.size());
  return cm;
}

TestScores test_score_matrix(const CalibrationModel& cm, const DataMatrix& x) {
  TestScores ts;
  ts.n_points = x.rows();
  ts.n_models = cm.models.size();
  ts.table.resize(ts.n_points * ts.n_models);
  std::vector<std::vector<double>> per_model(ts.n_models);
  // Width is checked up front so that the error is raised on the caller.
  for (const auto& m : cm.models) {
    if (const auto cols = m.n_cols(); cols && *cols != x.cols()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "calibration models expect " + std::to_string(*cols) +
                      " columns, input has " + std::to_string(x.cols()));
    }
  }
  parallel_for(ts.n_models, [&](std::size_t m) {
    per_model[m] = detectors::score(cm.models[m], x).scores;
  });
  for (std::size_t m = 0; m < ts.n_models; ++m) {
    for (std::size_t j = 0; j < ts.n_points; ++j) {
      ts.table[j * ts.n_models + m] = per_model[m][j];
    }
  }
  return ts;
}

double paired_test_score(const CalibrationModel& cm, const TestScores& scores,
                         std::size_t point, std::size_t model_set) {
  const auto& set = cm.model_sets[model_set];
  if (set.size() == 1) return scores.at(point, set[0]);
  std::vector<double> values;
  values.reserve(set.size());
  for (std::size_t m : set) values.push_back(scores.at(point, m));
  return aggregate(values, cm.strategy.aggregation);
}

std::vector<double> aggregated_test_scores(const CalibrationModel& cm,
                                           const TestScores& scores) {
  std::vector<double> out(scores.n_points);
  for (std::size_t j = 0; j < scores.n_points; ++j) {
    out[j] = aggregate(scores.row(j), cm.strategy.aggregation);
  }
  return out;
}

}  // namespace confad::resampling

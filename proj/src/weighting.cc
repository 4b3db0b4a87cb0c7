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

#include "confad/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace confad::weighting {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void standardize(const DataMatrix& cal_x, WeightModel& model) {
  const std::size_t d = cal_x.cols();
  const double n = static_cast<double>(cal_x.rows());
  model.feature_mean.assign(d, 0.0);
  model.feature_scale.assign(d, 1.0);
  for (std::size_t i = 0; i < cal_x.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) model.feature_mean[j] += cal_x.at(i, j);
  }
  for (double& m : model.feature_mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < cal_x.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = cal_x.at(i, j) - model.feature_mean[j];
      var[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    model.feature_scale[j] = sd > 0.0 ? sd : 1.0;
  }
}

// Full-batch gradient ascent on the mean L2-penalized log-likelihood of
// "row comes from the test sample".
void fit_logistic(const DataMatrix& cal_x, const DataMatrix& test_x,
                  const WeightOptions& options, WeightModel& model) {
  standardize(cal_x, model);
  const std::size_t d = cal_x.cols();
  const std::size_t n = cal_x.rows() + test_x.rows();

  std::vector<double> z(n * d);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_test = i >= cal_x.rows();
    auto row = is_test ? test_x.row(i - cal_x.rows()) : cal_x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      z[i * d + j] = (row[j] - model.feature_mean[j]) / model.feature_scale[j];
    }
    y[i] = is_test ? 1.0 : 0.0;
  }

  // Lipschitz bound of the mean gradient: 0.25 * trace of the Gram matrix
  // (intercept column included) plus the penalty.
  double trace = 1.0;
  for (double v : z) trace += v * v / static_cast<double>(n);
  const double step = 1.0 / (0.25 * trace + options.l2);

  std::vector<double> beta(d, 0.0);
  double intercept = 0.0;
  std::vector<double> grad(d);
  model.converged = false;
  std::size_t iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double eta = intercept;
      for (std::size_t j = 0; j < d; ++j) eta += beta[j] * z[i * d + j];
      const double residual = y[i] - sigmoid(eta);
      grad0 += residual;
      for (std::size_t j = 0; j < d; ++j) grad[j] += residual * z[i * d + j];
    }
    grad0 /= static_cast<double>(n);
    double norm2 = grad0 * grad0;
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] = grad[j] / static_cast<double>(n) - options.l2 * beta[j];
      norm2 += grad[j] * grad[j];
    }
    if (std::sqrt(norm2) < options.gradient_tolerance) {
      model.converged = true;
      break;
    }
    intercept += step * grad0;
    for (std::size_t j = 0; j < d; ++j) beta[j] += step * grad[j];
  }
  model.iterations = iter;
  model.coefficients = std::move(beta);
  model.intercept = intercept;
}

double raw_weight(const WeightModel& model, std::span<const double> x) {
  switch (model.kind) {
    case WeightKind::kUniform:
      return 1.0;
    case WeightKind::kOracle:
      return model.ratio(x);
    case WeightKind::kLogistic: {
      double eta = model.intercept;
      for (std::size_t j = 0; j < x.size(); ++j) {
        eta += model.coefficients[j] * (x[j] - model.feature_mean[j]) /
               model.feature_scale[j];
      }
      // Odds of the classifier, corrected for the sample-size prior.
      return std::exp(eta) * static_cast<double>(model.n_cal) /
             static_cast<double>(model.n_test);
    }
  }
  return 1.0;
}

}  // namespace

WeightModel fit_weight_estimator(const DataMatrix& cal_x,
                                 const DataMatrix& test_x, WeightKind kind,
                                 RandomSeed /*seed*/,
                                 const WeightOptions& options) {
  if (cal_x.empty() || test_x.empty()) {
    throw Error(ErrorCode::kEmptyInput,
                "weight estimation needs calibration and test covariates");
  }
  if (cal_x.cols() != test_x.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "calibration and test covariates differ in width");
  }
  if (!(options.cap_factor > 0.0) ||
      (options.absolute_cap && !(*options.absolute_cap > 0.0))) {
    throw Error(ErrorCode::kInvalidSpec, "weight cap must be positive");
  }
  WeightModel model;
  model.kind = kind;
  model.n_cal = cal_x.rows();
  model.n_test = test_x.rows();
  model.n_cols = cal_x.cols();
  if (kind == WeightKind::kOracle) {
    if (!options.ratio) {
      throw Error(ErrorCode::kInvalidSpec, "oracle weighting needs a ratio function");
    }
    model.ratio = options.ratio;
  } else if (kind == WeightKind::kLogistic) {
    fit_logistic(cal_x, test_x, options, model);
  }

  if (options.absolute_cap) {
    model.cap = *options.absolute_cap;
  } else {
    std::vector<double> raw(cal_x.rows());
    for (std::size_t i = 0; i < cal_x.rows(); ++i) {
      const double w = raw_weight(model, cal_x.row(i));
      raw[i] = std::isfinite(w) ? std::max(w, kMinWeight) : kMinWeight;
    }
    const auto mid = raw.begin() + static_cast<std::ptrdiff_t>(raw.size() / 2);
    std::nth_element(raw.begin(), mid, raw.end());
    model.cap = options.cap_factor * *mid;
  }
  return model;
}

WeightVector weights(const WeightModel& model, const DataMatrix& x) {
  if (model.n_cols != 0 && x.cols() != model.n_cols) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weight model expects " + std::to_string(model.n_cols) +
                    " columns, input has " + std::to_string(x.cols()));
  }
  WeightVector out;
  out.values.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double w = raw_weight(model, x.row(i));
    if (std::isnan(w)) throw InvalidDataError(i, 0);
    if (w >= model.cap) {
      w = model.cap;
      ++out.n_capped;
    }
    out.values[i] = std::max(w, kMinWeight);
  }
  return out;
}

double weighted_p_value(std::span<const double> cal_scores,
                        std::span<const double> cal_weights, double s_test,
                        double w_test) {
  if (cal_scores.empty()) {
    throw Error(ErrorCode::kEmptyCalibration, "no calibration scores");
  }
  if (cal_scores.size() != cal_weights.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "calibration scores and weights differ in length");
  }
  double numer = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < cal_scores.size(); ++i) {
    if (cal_scores[i] >= s_test) numer += cal_weights[i];
    total += cal_weights[i];
  }
  return (numer + w_test) / (total + w_test);
}

PValueVector weighted_p_values(const resampling::CalibrationModel& cm,
                               const resampling::TestScores& scores,
                               std::span<const double> cal_weights,
                               std::span<const double> test_weights) {
  if (cm.entries.empty()) {
    throw Error(ErrorCode::kEmptyCalibration, "calibration model has no entries");
  }
  if (cal_weights.size() != cm.n_entries() ||
      test_weights.size() != scores.n_points) {
    throw Error(ErrorCode::kShapeMismatch, "weight vectors do not match inputs");
  }
  // Per model set: entries sorted by score with suffix sums of weights.
  struct SetIndex {
    std::vector<double> scores;
    std::vector<double> suffix;  // suffix[k] = sum of weights of entries k..
  };
  std::vector<std::vector<std::pair<double, double>>> grouped(cm.model_sets.size());
  for (std::size_t i = 0; i < cm.entries.size(); ++i) {
    grouped[cm.entries[i].model_id].emplace_back(cm.entries[i].score,
                                                 cal_weights[i]);
  }
  std::vector<SetIndex> sets;
  std::vector<std::size_t> set_ids;
  double total = 0.0;
  for (std::size_t g = 0; g < grouped.size(); ++g) {
    if (grouped[g].empty()) continue;
    std::sort(grouped[g].begin(), grouped[g].end());
    SetIndex idx;
    idx.scores.reserve(grouped[g].size());
    idx.suffix.assign(grouped[g].size() + 1, 0.0);
    for (const auto& [s, w] : grouped[g]) idx.scores.push_back(s);
    for (std::size_t k = grouped[g].size(); k-- > 0;) {
      idx.suffix[k] = idx.suffix[k + 1] + grouped[g][k].second;
    }
    total += idx.suffix[0];
    sets.push_back(std::move(idx));
    set_ids.push_back(g);
  }

  PValueVector out;
  out.estimation = Estimation::kEmpirical;
  out.weighted = true;
  out.calibration_size = cm.n_entries();
  out.values.resize(scores.n_points);
  for (std::size_t j = 0; j < scores.n_points; ++j) {
    double numer = 0.0;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      const double t = resampling::paired_test_score(cm, scores, j, set_ids[k]);
      const auto& s = sets[k].scores;
      const auto first = static_cast<std::size_t>(
          std::lower_bound(s.begin(), s.end(), t) - s.begin());
      numer += sets[k].suffix[first];
    }
    out.values[j] = (numer + test_weights[j]) / (total + test_weights[j]);
  }
  return out;
}

}  // namespace confad::weighting

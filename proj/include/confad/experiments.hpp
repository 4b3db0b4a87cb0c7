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

// Seeded synthetic experiments: strategy sweep, calibration-conditional
// estimation, weighting under covariate shift, and martingale null
// calibration. Trials run in parallel; output order follows trial index.

#ifndef CONFAD_EXPERIMENTS_HPP_
#define CONFAD_EXPERIMENTS_HPP_

#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "confad/core.hpp"

namespace confad::experiments {

struct TrialRecord {
  std::string method;
  std::size_t train_size = 0;
  double level = 0.0;
  std::size_t trial = 0;
  double fdr = 0.0;
  double power = 0.0;
  std::size_t n_flagged = 0;
  // Smallest (method p-value - marginal p-value) over the batch; NaN when not
  // applicable.
  double min_gap_vs_marginal = std::numeric_limits<double>::quiet_NaN();
};

struct SummaryRecord {
  std::string method;
  std::size_t train_size = 0;
  double level = 0.0;
  std::size_t n_trials = 0;
  double mean_fdr = 0.0;
  double fdr_q90 = 0.0;
  double mean_power = 0.0;
  double min_gap_vs_marginal = std::numeric_limits<double>::quiet_NaN();
};

struct StrategySweepParams {
  std::vector<std::size_t> train_sizes = {250, 500, 1000};
  std::vector<double> levels = {0.075, 0.1, 0.125, 0.15, 0.175, 0.2};
  std::size_t trials = 50;
  std::size_t test_size = 500;
  double anomaly_rate = 0.05;
  std::size_t dim = 8;
  double shift = 2.0;
  double split_fraction = 0.5;
  std::size_t folds = 10;
  std::size_t bootstraps = 100;
  RandomSeed seed{1};
};

struct ConditionalParams {
  std::size_t n_train = 2000;
  std::size_t n_calib = 1000;
  std::vector<double> levels = {0.05, 0.1, 0.15, 0.2, 0.25};
  std::size_t trials = 20;
  double delta = 0.1;
  std::size_t test_size = 500;
  double anomaly_rate = 0.05;
  std::size_t dim = 8;
  double shift = 2.0;
  std::size_t mc_draws = 10000;
  RandomSeed seed{2};
};

struct ShiftParams {
  std::size_t dim = 4;
  double rho = 0.7;
  std::size_t n_train = 2000;
  std::size_t n_calib = 1000;
  std::size_t test_size = 500;
  double anomaly_rate = 0.05;
  double beta = 3.0;
  double tilt_center = 0.75;
  double anomaly_offset = 4.0;
  std::vector<double> levels = {0.1};
  std::size_t trials = 100;
  RandomSeed seed{3};
};

struct MartingaleNullParams {
  std::size_t streams = 1000;
  std::size_t length = 500;
  double threshold = 100.0;
  double epsilon = 0.5;
  RandomSeed seed{4};
};

struct NullStreamRecord {
  std::string method;
  std::size_t trial = 0;
  bool crossed = false;
  std::size_t first_crossing = 0;  // 0 when never crossed
  double max_log_m = 0.0;
  double final_log_m = 0.0;
};

std::vector<TrialRecord> strategy_sweep(const StrategySweepParams& params);
std::vector<TrialRecord> conditional(const ConditionalParams& params);
std::vector<TrialRecord> shift(const ShiftParams& params);
std::vector<NullStreamRecord> martingale_null(const MartingaleNullParams& params);

// Linear-interpolation quantile (type 7) of values; q in [0, 1].
double quantile(std::vector<double> values, double q);

// Groups by (method, train_size, level) in first-appearance order.
std::vector<SummaryRecord> summarize(std::span<const TrialRecord> records);

void write_trials_csv(std::ostream& os, std::span<const TrialRecord> records);
void write_summary_csv(std::ostream& os, std::span<const SummaryRecord> records);
void write_null_csv(std::ostream& os, std::span<const NullStreamRecord> records);

}  // namespace confad::experiments

#endif  // CONFAD_EXPERIMENTS_HPP_

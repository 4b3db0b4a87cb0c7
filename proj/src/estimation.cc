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

#include "confad/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/special_functions/beta.hpp>

namespace confad::estimation {

using resampling::CalibrationModel;
using resampling::TestScores;

EstimationSpec EstimationSpec::empirical(bool smoothed) {
  EstimationSpec s;
  s.regime = Estimation::kEmpirical;
  s.smoothed = smoothed;
  return s;
}

EstimationSpec EstimationSpec::conditional(AdjustmentMethod method,
                                           double delta) {
  EstimationSpec s;
  s.regime = Estimation::kConditionalEmpirical;
  s.method = method;
  s.delta = delta;
  return s;
}

EstimationSpec EstimationSpec::probabilistic(std::optional<double> bandwidth) {
  EstimationSpec s;
  s.regime = Estimation::kProbabilistic;
  s.bandwidth = bandwidth;
  return s;
}

void EstimationSpec::validate() const {
  if (regime == Estimation::kConditionalEmpirical &&
      !(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kInvalidDelta, "delta must lie in (0, 1)");
  }
  if (regime == Estimation::kProbabilistic && bandwidth &&
      !(*bandwidth > 0.0 && std::isfinite(*bandwidth))) {
    throw Error(ErrorCode::kInvalidSpec, "bandwidth must be positive");
  }
}

RankCounts rank_counts(const CalibrationModel& cm, const TestScores& scores) {
  if (cm.entries.empty()) {
    throw Error(ErrorCode::kEmptyCalibration, "calibration model has no entries");
  }
  if (scores.n_points > 0 && scores.n_models != cm.models.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "test score table does not match the calibration models");
  }
  // Sorted entry scores per model set.
  std::vector<std::vector<double>> by_set(cm.model_sets.size());
  for (const auto& e : cm.entries) by_set[e.model_id].push_back(e.score);
  std::vector<std::size_t> active;
  for (std::size_t g = 0; g < by_set.size(); ++g) {
    std::sort(by_set[g].begin(), by_set[g].end());
    if (!by_set[g].empty()) active.push_back(g);
  }

  RankCounts counts;
  counts.at_least.assign(scores.n_points, 0);
  counts.greater.assign(scores.n_points, 0);
  for (std::size_t j = 0; j < scores.n_points; ++j) {
    std::size_t ge = 0;
    std::size_t gt = 0;
    for (std::size_t g : active) {
      const double t = resampling::paired_test_score(cm, scores, j, g);
      const auto& s = by_set[g];
      ge += static_cast<std::size_t>(s.end() - std::lower_bound(s.begin(), s.end(), t));
      gt += static_cast<std::size_t>(s.end() - std::upper_bound(s.begin(), s.end(), t));
    }
    counts.at_least[j] = ge;
    counts.greater[j] = gt;
  }
  return counts;
}

PValueVector empirical_p_values(const CalibrationModel& cm,
                                const TestScores& scores, bool smoothed,
                                RandomSeed seed, std::size_t index_offset) {
  const RankCounts counts = rank_counts(cm, scores);
  const double denom = static_cast<double>(cm.n_entries() + 1);
  PValueVector out;
  out.estimation = Estimation::kEmpirical;
  out.smoothed = smoothed;
  out.calibration_size = cm.n_entries();
  out.values.resize(scores.n_points);
  for (std::size_t j = 0; j < scores.n_points; ++j) {
    if (!smoothed) {
      out.values[j] = static_cast<double>(counts.at_least[j] + 1) / denom;
      continue;
    }
    Rng rng(split_seed(seed, index_offset + j));
    const double u = rng.uniform_open();
    const double ties = static_cast<double>(counts.at_least[j] - counts.greater[j]);
    out.values[j] =
        (static_cast<double>(counts.greater[j]) + u * (ties + 1.0)) / denom;
  }
  return out;
}

namespace {

double beta_quantile(std::size_t r, std::size_t n, double level) {
  if (level >= 1.0) return 1.0;
  if (level <= 0.0) return 0.0;
  return boost::math::ibeta_inv(static_cast<double>(r),
                                static_cast<double>(n - r + 1), level);
}

// Per-rank upper bounds b_r for r = 1..n such that, with probability at
// least 1 - delta, the r-th smallest of n uniforms is <= b_r for every r.
std::vector<double> dkw_band(std::size_t n, double delta) {
  const double nd = static_cast<double>(n);
  const double eps = std::sqrt(std::log(1.0 / delta) / (2.0 * nd));
  std::vector<double> band(n);
  for (std::size_t r = 1; r <= n; ++r) {
    band[r - 1] = std::min(1.0, static_cast<double>(r) / nd + eps);
  }
  return band;
}

// Rank-proportional spending: rank r may fail with probability
// delta * r / (n (n + 1) / 2). The shares sum to delta, so the union bound
// makes the band valid without simulation.
std::vector<double> simes_band(std::size_t n, double delta) {
  const double nd = static_cast<double>(n);
  const double total = nd * (nd + 1.0) / 2.0;
  std::vector<double> band(n);
  for (std::size_t r = 1; r <= n; ++r) {
    band[r - 1] =
        beta_quantile(r, n, 1.0 - delta * static_cast<double>(r) / total);
  }
  return band;
}

// Monte-Carlo calibrated Beta band: all ranks share one quantile level q,
// chosen so that the simulated probability of any V_(r) exceeding its
// Beta(r, n - r + 1) q-quantile is at most delta. The failure event for
// level q is {max_r F_r(V_(r)) > q}, so q is the empirical (1 - delta)
// quantile of that statistic; the level that a bisection over q would
// converge to.
std::vector<double> monte_carlo_band(std::size_t n, double delta,
                                     RandomSeed seed, std::size_t draws) {
  // Every draw has max_r F_r(V_(r)) >= F_n(V_(n)) ~ U(0,1), so the calibrated
  // level is at least 1 - delta and ranks below the (1 - delta) band never
  // decide it.
  const double floor_level = 1.0 - delta;
  std::vector<double> prune(n);
  for (std::size_t r = 1; r <= n; ++r) {
    prune[r - 1] = beta_quantile(r, n, floor_level);
  }
  std::vector<double> stat(draws, floor_level);
  parallel_for(draws, [&](std::size_t d) {
    Rng rng(split_seed(seed, d));
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform();
    std::sort(v.begin(), v.end());
    double worst = floor_level;
    for (std::size_t r = 1; r <= n; ++r) {
      if (v[r - 1] <= prune[r - 1]) continue;
      const double f = boost::math::ibeta(static_cast<double>(r),
                                          static_cast<double>(n - r + 1),
                                          v[r - 1]);
      worst = std::max(worst, f);
    }
    stat[d] = worst;
  });
  const auto allowed = static_cast<std::size_t>(
      std::floor(delta * static_cast<double>(draws)));
  std::sort(stat.begin(), stat.end(), std::greater<>());
  const double level = allowed < draws ? stat[allowed] : floor_level;

  std::vector<double> band(n);
  for (std::size_t r = 1; r <= n; ++r) band[r - 1] = beta_quantile(r, n, level);
  return band;
}

}  // namespace

AdjustmentTable build_adjustment(std::size_t n, double delta,
                                 AdjustmentMethod method, RandomSeed seed,
                                 std::size_t mc_draws) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kInvalidDelta, "delta must lie in (0, 1)");
  }
  if (n == 0) {
    throw Error(ErrorCode::kEmptyCalibration, "adjustment needs n >= 1");
  }
  std::vector<double> band;
  switch (method) {
    case AdjustmentMethod::kAsymptotic: band = dkw_band(n, delta); break;
    case AdjustmentMethod::kSimes: band = simes_band(n, delta); break;
    case AdjustmentMethod::kMonteCarlo:
      if (mc_draws == 0) {
        throw Error(ErrorCode::kInvalidSpec, "mc_draws must be positive");
      }
      band = monte_carlo_band(n, delta, seed, mc_draws);
      break;
  }

  AdjustmentTable table;
  table.n = n;
  table.delta = delta;
  table.method = method;
  table.adjusted.resize(n + 1);
  const double denom = static_cast<double>(n + 1);
  double running = 0.0;
  for (std::size_t r = 1; r <= n; ++r) {
    // Raising a band value only widens the event it covers, so flooring at
    // the marginal grid and enforcing monotonicity keep the band valid.
    const double value =
        std::max(band[r - 1], static_cast<double>(r) / denom);
    running = std::min(1.0, std::max(running, value));
    table.adjusted[r - 1] = running;
  }
  table.adjusted[n] = 1.0;
  return table;
}

PValueVector conditional_p_values(const CalibrationModel& cm,
                                  const TestScores& scores,
                                  const AdjustmentTable& table) {
  if (table.n != cm.n_entries()) {
    throw Error(ErrorCode::kTableMismatch,
                "adjustment table built for n = " + std::to_string(table.n) +
                    ", calibration has " + std::to_string(cm.n_entries()) +
                    " entries");
  }
  const RankCounts counts = rank_counts(cm, scores);
  PValueVector out;
  out.estimation = Estimation::kConditionalEmpirical;
  out.calibration_size = cm.n_entries();
  out.values.resize(scores.n_points);
  for (std::size_t j = 0; j < scores.n_points; ++j) {
    out.values[j] = table.at_rank(counts.at_least[j] + 1);
  }
  return out;
}

double silverman_bandwidth(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double kde_tail_probability(std::span<const double> calibration, double s,
                            double bandwidth) {
  double total = 0.0;
  for (double c : calibration) {
    total += 0.5 * std::erfc((s - c) / (bandwidth * std::numbers::sqrt2));
  }
  const double p = total / static_cast<double>(calibration.size());
  return std::clamp(p, kProbabilisticFloor, 1.0);
}

PValueVector probabilistic_p_values(const CalibrationModel& cm,
                                    const TestScores& scores,
                                    std::optional<double> bandwidth) {
  if (cm.n_entries() < 2) {
    throw Error(ErrorCode::kEmptyCalibration,
                "probabilistic estimation needs at least 2 calibration entries");
  }
  const std::vector<double> cal = cm.entry_scores();
  const double h = bandwidth.value_or(silverman_bandwidth(cal));
  if (!(h > 0.0)) {
    // Zero score variance: no density to estimate.
    PValueVector out = empirical_p_values(cm, scores, false, RandomSeed{});
    out.fell_back_to_empirical = true;
    return out;
  }
  const std::vector<double> test = resampling::aggregated_test_scores(cm, scores);
  PValueVector out;
  out.estimation = Estimation::kProbabilistic;
  out.non_conformal = true;
  out.calibration_size = cm.n_entries();
  out.values.resize(test.size());
  for (std::size_t j = 0; j < test.size(); ++j) {
    out.values[j] = kde_tail_probability(cal, test[j], h);
  }
  return out;
}

}  // namespace confad::estimation

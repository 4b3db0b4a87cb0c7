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

// P-value estimation from calibration entries and test scores.
//
//  * empirical: (#{S_i >= s} + 1) / (n + 1), optionally randomized over ties
//    so that null p-values are exactly uniform;
//  * conditional empirical: empirical ranks mapped through a simultaneous
//    upper band for uniform order statistics, valid conditionally on the
//    calibration draw with probability >= 1 - delta;
//  * probabilistic: Gaussian-KDE tail mass of the calibration scores. Not a
//    conformal method; no finite-sample guarantee.

#ifndef CONFAD_ESTIMATION_HPP_
#define CONFAD_ESTIMATION_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "confad/core.hpp"
#include "confad/resampling.hpp"

namespace confad::estimation {

enum class AdjustmentMethod { kSimes, kMonteCarlo, kAsymptotic };

struct EstimationSpec {
  Estimation regime = Estimation::kEmpirical;
  AdjustmentMethod method = AdjustmentMethod::kSimes;
  double delta = 0.1;
  bool smoothed = false;
  // Fixed KDE bandwidth; Silverman's rule when absent.
  std::optional<double> bandwidth;

  static EstimationSpec empirical(bool smoothed = false);
  static EstimationSpec conditional(AdjustmentMethod method, double delta);
  static EstimationSpec probabilistic(std::optional<double> bandwidth = {});

  void validate() const;
};

// adjusted[r - 1] is the p-value reported for raw rank r in 1..n+1.
struct AdjustmentTable {
  std::size_t n = 0;
  double delta = 0.0;
  AdjustmentMethod method = AdjustmentMethod::kSimes;
  std::vector<double> adjusted;

  double at_rank(std::size_t r) const { return adjusted[r - 1]; }
};

inline constexpr std::size_t kDefaultMonteCarloDraws = 10000;
inline constexpr double kProbabilisticFloor = 1e-12;

// Raw conformal rank counts per test point under the entry/model pairing.
struct RankCounts {
  std::vector<std::size_t> at_least;  // #{S_i >= paired test score}
  std::vector<std::size_t> greater;   // #{S_i >  paired test score}
};

RankCounts rank_counts(const resampling::CalibrationModel& cm,
                       const resampling::TestScores& scores);

// Smoothed p-values draw U_j from split_seed(seed, index_offset + j), so a
// stream scored one point at a time with increasing offsets matches the
// batch result.
PValueVector empirical_p_values(const resampling::CalibrationModel& cm,
                                const resampling::TestScores& scores,
                                bool smoothed, RandomSeed seed,
                                std::size_t index_offset = 0);

AdjustmentTable build_adjustment(std::size_t n, double delta,
                                 AdjustmentMethod method, RandomSeed seed,
                                 std::size_t mc_draws = kDefaultMonteCarloDraws);

PValueVector conditional_p_values(const resampling::CalibrationModel& cm,
                                  const resampling::TestScores& scores,
                                  const AdjustmentTable& table);

double silverman_bandwidth(std::span<const double> values);

// Mean Gaussian survival (1/n) sum_i Phibar((s - S_i) / h), floored at
// kProbabilisticFloor.
double kde_tail_probability(std::span<const double> calibration, double s,
                            double bandwidth);

PValueVector probabilistic_p_values(const resampling::CalibrationModel& cm,
                                    const resampling::TestScores& scores,
                                    std::optional<double> bandwidth = {});

}  // namespace confad::estimation

#endif  // CONFAD_ESTIMATION_HPP_

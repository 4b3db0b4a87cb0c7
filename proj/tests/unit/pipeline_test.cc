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

#include "confad/pipeline.hpp"

#include <vector>

#include "confad/decisions.hpp"
#include "confad/synthetic.hpp"
#include "gtest/gtest.h"

namespace confad::pipeline {
namespace {

using resampling::StrategySpec;

template <typename Fn>
ErrorCode CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

DataMatrix Inliers(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng({seed});
  return synthetic::gaussian_inliers(n, dim, rng);
}

PipelineConfig Knn(StrategySpec strategy) {
  PipelineConfig c;
  c.scorer = detectors::ScorerSpec::knn_distance();
  c.strategy = strategy;
  c.seed = {11};
  return c;
}

TEST(FitTest, SplitKeepsRequestedCalibrationSize) {
  FittedPipeline fp = fit(Knn(StrategySpec::split(std::size_t{1000})),
                          Inliers(5000, 3, 1));
  EXPECT_EQ(fp.calibration.n_entries(), 1000u);
  EXPECT_EQ(fp.calibration.models.size(), 1u);
  EXPECT_FALSE(fp.table.has_value());
}

TEST(FitTest, JackknifePlusKeepsOneModelPerRow) {
  FittedPipeline fp = fit(Knn(StrategySpec::jackknife()), Inliers(50, 2, 2));
  EXPECT_EQ(fp.calibration.models.size(), 50u);
  EXPECT_EQ(fp.calibration.n_entries(), 50u);
}

TEST(FitTest, InvalidDeltaRejected) {
  PipelineConfig c = Knn(StrategySpec::split(0.5));
  c.estimation = estimation::EstimationSpec::conditional(
      estimation::AdjustmentMethod::kSimes, 0.0);
  EXPECT_EQ(CodeOf([&] { fit(c, Inliers(40, 2, 3)); }), ErrorCode::kInvalidDelta);
}

TEST(FitTest, WeightingRejectsNonEmpiricalRegimes) {
  const DataMatrix train = Inliers(40, 2, 3);
  PipelineConfig c = Knn(StrategySpec::split(0.5));
  c.weighting = WeightingSpec{weighting::WeightKind::kUniform, {}};
  c.estimation = estimation::EstimationSpec::conditional(
      estimation::AdjustmentMethod::kSimes, 0.1);
  EXPECT_EQ(CodeOf([&] { fit(c, train); }), ErrorCode::kInvalidSpec);
  c.estimation = estimation::EstimationSpec::probabilistic();
  EXPECT_EQ(CodeOf([&] { fit(c, train); }), ErrorCode::kInvalidSpec);
  c.estimation = estimation::EstimationSpec::empirical(true);
  EXPECT_EQ(CodeOf([&] { fit(c, train); }), ErrorCode::kInvalidSpec);
  c.estimation = estimation::EstimationSpec::empirical();
  c.weighting = WeightingSpec{weighting::WeightKind::kOracle, {}};
  EXPECT_EQ(CodeOf([&] { fit(c, train); }), ErrorCode::kInvalidSpec);
}

TEST(PValuesTest, UnweightedMatchesEstimationModule) {
  PipelineConfig c = Knn(StrategySpec::cross_validation(5));
  c.estimation = estimation::EstimationSpec::empirical(true);
  FittedPipeline fp = fit(c, Inliers(200, 3, 4));
  const DataMatrix x = Inliers(30, 3, 5);
  const auto scores = resampling::test_score_matrix(fp.calibration, x);
  PValueVector want = estimation::empirical_p_values(
      fp.calibration, scores, true, split_seed(c.seed, kSmoothingStream));
  EXPECT_EQ(compute_p_values(fp, x).values, want.values);
}

TEST(PValuesTest, ConditionalUsesSeededTable) {
  PipelineConfig c = Knn(StrategySpec::split(0.5));
  c.estimation = estimation::EstimationSpec::conditional(
      estimation::AdjustmentMethod::kMonteCarlo, 0.1);
  FittedPipeline fp = fit(c, Inliers(200, 2, 6));
  ASSERT_TRUE(fp.table.has_value());
  estimation::AdjustmentTable want = estimation::build_adjustment(
      100, 0.1, estimation::AdjustmentMethod::kMonteCarlo,
      split_seed(c.seed, kAdjustmentStream));
  EXPECT_EQ(fp.table->adjusted, want.adjusted);
  const DataMatrix x = Inliers(20, 2, 7);
  PValueVector cond = compute_p_values(fp, x);
  PValueVector raw = estimation::empirical_p_values(
      fp.calibration, resampling::test_score_matrix(fp.calibration, x), false, {0});
  for (std::size_t j = 0; j < x.rows(); ++j) EXPECT_GE(cond.values[j], raw.values[j]);
}

TEST(PValuesTest, UniformWeightingEqualsUnweighted) {
  PipelineConfig c = Knn(StrategySpec::split(0.5));
  const DataMatrix train = Inliers(300, 3, 8);
  const DataMatrix x = Inliers(50, 3, 9);
  PValueVector plain = compute_p_values(fit(c, train), x);
  c.weighting = WeightingSpec{weighting::WeightKind::kUniform, {}};
  PValueVector w = compute_p_values(fit(c, train), x);
  EXPECT_EQ(w.values, plain.values);
  EXPECT_TRUE(w.weighted);
}

TEST(PValuesTest, OracleWeightsFollowCovariates) {
  PipelineConfig c = Knn(StrategySpec::split(0.5));
  WeightingSpec ws{weighting::WeightKind::kOracle, {}};
  ws.options.ratio = [](std::span<const double> x) { return x[0] > 0 ? 2.0 : 0.5; };
  c.weighting = ws;
  FittedPipeline fp = fit(c, Inliers(200, 2, 10));
  EXPECT_EQ(fp.calibration_covariates.rows(), fp.calibration.n_entries());
  EXPECT_FALSE(fp.calibration_covariates.labels().has_value());
  // Covariates line up with the rows that produced each entry.
  const DataMatrix train = Inliers(200, 2, 10);
  for (std::size_t i = 0; i < fp.calibration.n_entries(); ++i) {
    const std::size_t row = fp.calibration.entries[i].row;
    EXPECT_EQ(fp.calibration_covariates.at(i, 0), train.at(row, 0));
  }
  PValueVector p = compute_p_values(fp, Inliers(10, 2, 11));
  EXPECT_TRUE(p.weighted);
  for (double v : p.values) {
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(PValuesTest, SmoothedOffsetsReproduceBatch) {
  PipelineConfig c = Knn(StrategySpec::split(0.5));
  c.estimation = estimation::EstimationSpec::empirical(true);
  FittedPipeline fp = fit(c, Inliers(100, 2, 12));
  const DataMatrix x = Inliers(15, 2, 13);
  PValueVector batch = compute_p_values(fp, x);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const std::size_t idx[] = {t};
    PValueVector one = compute_p_values(fp, x.select_rows(idx), t);
    EXPECT_EQ(one.values[0], batch.values[t]);
  }
}

TEST(PValuesTest, DimensionMismatch) {
  FittedPipeline fp = fit(Knn(StrategySpec::split(0.5)), Inliers(50, 3, 14));
  EXPECT_EQ(CodeOf([&] { compute_p_values(fp, Inliers(5, 2, 15)); }),
            ErrorCode::kDimensionMismatch);
}

TEST(PValuesTest, Deterministic) {
  PipelineConfig c;
  c.scorer = detectors::ScorerSpec::isolation_forest({20, 64, {}});
  c.strategy = StrategySpec::bootstrap(10);
  c.estimation = estimation::EstimationSpec::empirical(true);
  c.seed = {21};
  const DataMatrix train = Inliers(120, 3, 16);
  const DataMatrix x = Inliers(25, 3, 17);
  EXPECT_EQ(compute_p_values(fit(c, train), x).values,
            compute_p_values(fit(c, train), x).values);
  PipelineConfig d = c;
  d.seed = {22};
  EXPECT_NE(compute_p_values(fit(d, train), x).values,
            compute_p_values(fit(c, train), x).values);
}

TEST(SelectTest, EqualsBhOnPValues) {
  FittedPipeline fp = fit(Knn(StrategySpec::split(0.5)), Inliers(400, 2, 18));
  Rng rng({19});
  const DataMatrix x = synthetic::gaussian_batch(80, 20, 2, 4.0, rng).without_labels();
  DecisionSet d = select(fp, x, 0.1);
  DecisionSet want = decisions::benjamini_hochberg(compute_p_values(fp, x), 0.1);
  EXPECT_EQ(d.flags, want.flags);
  EXPECT_EQ(d.procedure, Procedure::kBenjaminiHochberg);
  EXPECT_GT(d.count(), 0u);
}

TEST(SelectTest, WeightedCarriesCaveat) {
  PipelineConfig c = Knn(StrategySpec::split(0.5));
  c.weighting = WeightingSpec{weighting::WeightKind::kUniform, {}};
  DecisionSet d = select(fit(c, Inliers(100, 2, 20)), Inliers(10, 2, 21), 0.1);
  EXPECT_EQ(d.procedure, Procedure::kWeightedBh);
  EXPECT_TRUE(d.finite_sample_caveat);
}

TEST(SelectTest, InvalidAlpha) {
  FittedPipeline fp = fit(Knn(StrategySpec::split(0.5)), Inliers(50, 2, 22));
  EXPECT_EQ(CodeOf([&] { select(fp, Inliers(5, 2, 23), 0.0); }),
            ErrorCode::kInvalidAlpha);
  EXPECT_EQ(CodeOf([&] { select(fp, Inliers(5, 2, 23), 1.0); }),
            ErrorCode::kInvalidAlpha);
}

TEST(DetachedTest, SplitOnly) {
  auto scorer = detectors::wrap_detached(
      [](std::span<const double> x) { return x[0] * x[0]; },
      detectors::Polarity::kHigherIsAnomalous, 2);
  const DataMatrix calib = Inliers(60, 2, 24);
  FittedPipeline fp = fit_detached(Knn(StrategySpec::split(0.5)), scorer, calib);
  EXPECT_EQ(fp.calibration.n_entries(), 60u);
  EXPECT_EQ(CodeOf([&] {
              fit_detached(Knn(StrategySpec::cross_validation(5)), scorer, calib);
            }),
            ErrorCode::kInvalidSpec);
  // Larger x0^2 means smaller p.
  const DataMatrix x = DataMatrix::from_flat(2, 2, {0.0, 0.0, 10.0, 0.0});
  PValueVector p = compute_p_values(fp, x);
  EXPECT_EQ(p.values[1], 1.0 / 61.0);
  EXPECT_GT(p.values[0], 0.9);
}

TEST(AssembleTest, RebuildsTable) {
  PipelineConfig c = Knn(StrategySpec::split(0.5));
  c.estimation = estimation::EstimationSpec::conditional(
      estimation::AdjustmentMethod::kSimes, 0.2);
  FittedPipeline fp = fit(c, Inliers(100, 2, 25));
  FittedPipeline again = assemble(fp.config, fp.calibration, {});
  ASSERT_TRUE(again.table.has_value());
  EXPECT_EQ(again.table->adjusted, fp.table->adjusted);
  const DataMatrix x = Inliers(10, 2, 26);
  EXPECT_EQ(compute_p_values(again, x).values, compute_p_values(fp, x).values);
}

TEST(ScoreSamplesTest, SingleModelScores) {
  FittedPipeline fp = fit(Knn(StrategySpec::split(0.5)), Inliers(100, 2, 27));
  const DataMatrix x = Inliers(10, 2, 28);
  ScoreVector s = score_samples(fp, x);
  EXPECT_TRUE(s.polarity_normalized);
  EXPECT_EQ(s.scores, detectors::score(fp.calibration.models[0], x).scores);
}

}  // namespace
}  // namespace confad::pipeline

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

#include <utility>
#include <vector>

namespace confad::pipeline {

namespace {

DataMatrix entry_covariates(const resampling::CalibrationModel& cm,
                            const DataMatrix& data) {
  std::vector<std::size_t> rows;
  rows.reserve(cm.entries.size());
  for (const auto& e : cm.entries) rows.push_back(e.row);
  return data.select_rows(rows).without_labels();
}

}  // namespace

void PipelineConfig::validate() const {
  scorer.validate();
  strategy.validate();
  estimation.validate();
  if (!weighting) return;
  if (estimation.regime == Estimation::kConditionalEmpirical) {
    throw Error(ErrorCode::kInvalidSpec,
                "conditional estimation cannot be combined with weighting");
  }
  if (estimation.regime == Estimation::kProbabilistic) {
    throw Error(ErrorCode::kInvalidSpec,
                "probabilistic estimation cannot be combined with weighting");
  }
  if (estimation.smoothed) {
    throw Error(ErrorCode::kInvalidSpec,
                "smoothed p-values cannot be combined with weighting");
  }
  if (weighting->kind == weighting::WeightKind::kOracle &&
      !weighting->options.ratio) {
    throw Error(ErrorCode::kInvalidSpec, "oracle weighting needs a ratio function");
  }
}

FittedPipeline assemble(PipelineConfig config,
                        resampling::CalibrationModel calibration,
                        DataMatrix calibration_covariates) {
  FittedPipeline fp;
  if (config.estimation.regime == Estimation::kConditionalEmpirical) {
    fp.table = estimation::build_adjustment(
        calibration.n_entries(), config.estimation.delta,
        config.estimation.method, split_seed(config.seed, kAdjustmentStream));
  }
  fp.config = std::move(config);
  fp.calibration = std::move(calibration);
  fp.calibration_covariates = std::move(calibration_covariates);
  return fp;
}

FittedPipeline fit(const PipelineConfig& config, const DataMatrix& train) {
  config.validate();
  resampling::CalibrationModel cm =
      resampling::calibrate(config.scorer, config.strategy, train, config.seed);
  DataMatrix cov;
  if (config.weighting) cov = entry_covariates(cm, train);
  return assemble(config, std::move(cm), std::move(cov));
}

FittedPipeline fit_detached(const PipelineConfig& config,
                            const detectors::FittedScorer& scorer,
                            const DataMatrix& calib) {
  config.validate();
  if (config.strategy.kind != resampling::StrategyKind::kSplit) {
    throw Error(ErrorCode::kInvalidSpec,
                "detached calibration supports the split strategy only");
  }
  resampling::CalibrationModel cm = resampling::calibrate_detached(scorer, calib);
  cm.strategy = config.strategy;
  DataMatrix cov;
  if (config.weighting) cov = entry_covariates(cm, calib);
  return assemble(config, std::move(cm), std::move(cov));
}

PValueVector compute_p_values(const FittedPipeline& fp, const DataMatrix& x,
                              std::size_t index_offset) {
  const PipelineConfig& config = fp.config;
  const resampling::TestScores scores =
      resampling::test_score_matrix(fp.calibration, x);

  if (config.weighting) {
    const weighting::WeightModel model = weighting::fit_weight_estimator(
        fp.calibration_covariates, x, config.weighting->kind,
        split_seed(config.seed, kWeightStream), config.weighting->options);
    const weighting::WeightVector cal_w =
        weighting::weights(model, fp.calibration_covariates);
    const weighting::WeightVector test_w = weighting::weights(model, x);
    PValueVector out = weighting::weighted_p_values(fp.calibration, scores,
                                                    cal_w.values, test_w.values);
    out.capped_weights = cal_w.n_capped + test_w.n_capped;
    return out;
  }

  switch (config.estimation.regime) {
    case Estimation::kEmpirical:
      return estimation::empirical_p_values(
          fp.calibration, scores, config.estimation.smoothed,
          split_seed(config.seed, kSmoothingStream), index_offset);
    case Estimation::kConditionalEmpirical:
      if (!fp.table) {
        throw Error(ErrorCode::kTableMismatch, "pipeline has no adjustment table");
      }
      return estimation::conditional_p_values(fp.calibration, scores, *fp.table);
    case Estimation::kProbabilistic:
      return estimation::probabilistic_p_values(fp.calibration, scores,
                                                config.estimation.bandwidth);
  }
  throw Error(ErrorCode::kInvalidSpec, "unknown estimation regime");
}

DecisionSet select(const FittedPipeline& fp, const DataMatrix& x, double alpha) {
  decisions::SelectionSpec{Procedure::kBenjaminiHochberg, alpha}.validate();
  const PValueVector p = compute_p_values(fp, x);
  if (fp.config.weighting) {
    return decisions::weighted_false_discovery_control(p, alpha);
  }
  return decisions::benjamini_hochberg(p, alpha);
}

ScoreVector score_samples(const FittedPipeline& fp, const DataMatrix& x) {
  const resampling::TestScores scores =
      resampling::test_score_matrix(fp.calibration, x);
  return ScoreVector{resampling::aggregated_test_scores(fp.calibration, scores),
                     true};
}

}  // namespace confad::pipeline

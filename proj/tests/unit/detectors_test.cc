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

#include "confad/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"

namespace confad::detectors {
namespace {

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

DataMatrix Blob(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng({seed});
  std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
  for (auto& r : rows) {
    for (double& v : r) v = rng.normal();
  }
  return validate_matrix(rows);
}

DataMatrix Probe() {
  std::vector<std::vector<double>> rows;
  for (double a = -4.0; a <= 4.0; a += 0.5) {
    for (double b = -4.0; b <= 4.0; b += 0.5) rows.push_back({a, b});
  }
  return validate_matrix(rows);
}

// Harmonic-sum form of the isolation normalizer.
double DirectPathLength(std::size_t n) {
  if (n <= 1) return 0.0;
  double h = 0.0;
  for (std::size_t i = 1; i < n; ++i) h += 1.0 / static_cast<double>(i);
  return 2.0 * h - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

TEST(IsolationForestTest, PathLengthMatchesHarmonicSum) {
  EXPECT_EQ(average_path_length(1), 0.0);
  EXPECT_DOUBLE_EQ(average_path_length(2), 1.0);
  for (std::size_t n : {3u, 10u, 256u, 5000u}) {
    EXPECT_NEAR(average_path_length(n), DirectPathLength(n), 1e-10) << n;
  }
}

TEST(IsolationForestTest, ZeroPathScoresOne) {
  EXPECT_DOUBLE_EQ(isolation_score(0.0, 256), 1.0);
  EXPECT_DOUBLE_EQ(isolation_score(average_path_length(256), 256), 0.5);
}

TEST(IsolationForestTest, ZeroTreesRejected) {
  IsolationForestParams p;
  p.n_trees = 0;
  EXPECT_EQ(CodeOf([&] { ScorerSpec::isolation_forest(p).validate(); }),
            ErrorCode::kInvalidHyperparameter);
  EXPECT_EQ(CodeOf([&] { fit(ScorerSpec::isolation_forest(p), Blob(10, 2, 1), {1}); }),
            ErrorCode::kInvalidHyperparameter);
}

TEST(IsolationForestTest, HandBuiltTreeScore) {
  // Root splits feature 0 at 0; two singleton leaves.
  IsolationTree tree;
  tree.nodes = {{0, 0.0, 1, 2, 2}, {-1, 0.0, -1, -1, 1}, {-1, 0.0, -1, -1, 1}};
  IsolationForestModel model{{tree}, 2, 1, 1};
  FittedScorer scorer(ScorerSpec::isolation_forest(), model, 2);
  // Depth 1, c(2) = 1.
  EXPECT_DOUBLE_EQ(scorer.score_row(std::vector<double>{-1.0}), 0.5);
  EXPECT_DOUBLE_EQ(scorer.score_row(std::vector<double>{1.0}), 0.5);
}

TEST(IsolationForestTest, ScoresInUnitIntervalAndOutlierHigher) {
  DataMatrix train = Blob(500, 2, 3);
  FittedScorer s = fit(ScorerSpec::isolation_forest(), train, {7});
  ScoreVector probe = score(s, Probe());
  for (double v : probe.scores) {
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const double center = s.score_row(std::vector<double>{0.0, 0.0});
  const double far = s.score_row(std::vector<double>{8.0, -8.0});
  EXPECT_LT(center, far);
}

TEST(IsolationForestTest, PermutationInvariant) {
  DataMatrix train = Blob(300, 2, 4);
  std::vector<std::size_t> order(train.rows());
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::rotate(order.begin(), order.begin() + 17, order.end());
  DataMatrix shuffled = train.select_rows(order);
  FittedScorer a = fit(ScorerSpec::isolation_forest(), train, {11});
  FittedScorer b = fit(ScorerSpec::isolation_forest(), shuffled, {11});
  EXPECT_EQ(score(a, Probe()).scores, score(b, Probe()).scores);
}

TEST(IsolationForestTest, SmallRowPermutation) {
  DataMatrix r = validate_matrix({{1.0, 2.0}, {3.0, -1.0}, {0.5, 0.5}});
  const std::vector<std::size_t> order = {2, 0, 1};
  FittedScorer a = fit(ScorerSpec::isolation_forest(), r, {5});
  FittedScorer b = fit(ScorerSpec::isolation_forest(), r.select_rows(order), {5});
  EXPECT_EQ(score(a, Probe()).scores, score(b, Probe()).scores);
}

TEST(IsolationForestTest, FixedFunction) {
  FittedScorer s = fit(ScorerSpec::isolation_forest(), Blob(200, 2, 8), {2});
  EXPECT_EQ(score(s, Probe()).scores, score(s, Probe()).scores);
  EXPECT_TRUE(score(s, Probe()).polarity_normalized);
}

TEST(IsolationForestTest, DepthDefaultsToLogSubsample) {
  IsolationForestParams p;
  p.n_trees = 5;
  p.subsample_size = 64;
  FittedScorer s = fit(ScorerSpec::isolation_forest(p), Blob(1000, 3, 9), {1});
  const auto& m = std::get<IsolationForestModel>(s.model());
  EXPECT_EQ(m.sample_size, 64u);
  EXPECT_EQ(m.depth_limit, 6u);
  EXPECT_EQ(m.trees.size(), 5u);
  for (const auto& t : m.trees) EXPECT_EQ(t.nodes[0].size, 64u);
}

TEST(IsolationForestTest, SubsampleCappedByRows) {
  FittedScorer s = fit(ScorerSpec::isolation_forest(), Blob(20, 2, 9), {1});
  const auto& m = std::get<IsolationForestModel>(s.model());
  EXPECT_EQ(m.sample_size, 20u);
  EXPECT_EQ(m.depth_limit, 5u);
}

TEST(KnnTest, IdenticalPointScoresZero) {
  KnnParams p;
  p.k = 1;
  DataMatrix train = validate_matrix({{0.0, 0.0}, {10.0, 10.0}});
  FittedScorer s = fit(ScorerSpec::knn_distance(p), train, {0});
  EXPECT_EQ(s.score_row(std::vector<double>{0.0, 0.0}), 0.0);
}

TEST(KnnTest, MatchesBruteForce) {
  DataMatrix train = Blob(60, 3, 12);
  DataMatrix probe = Blob(25, 3, 13);
  for (auto agg : {KnnAggregation::kKth, KnnAggregation::kMean}) {
    KnnParams p{4, agg};
    FittedScorer s = fit(ScorerSpec::knn_distance(p), train, {0});
    ScoreVector got = score(s, probe);
    for (std::size_t i = 0; i < probe.rows(); ++i) {
      std::vector<double> d;
      for (std::size_t r = 0; r < train.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
          acc += std::pow(train.at(r, j) - probe.at(i, j), 2);
        }
        d.push_back(std::sqrt(acc));
      }
      std::sort(d.begin(), d.end());
      const double want =
          agg == KnnAggregation::kKth ? d[3] : (d[0] + d[1] + d[2] + d[3]) / 4.0;
      EXPECT_NEAR(got.scores[i], want, 1e-12);
    }
  }
}

TEST(KnnTest, BlobScoresBelowDistantProbe) {
  KnnParams p;
  p.k = 1;
  FittedScorer s = fit(ScorerSpec::knn_distance(p), Blob(200, 2, 14), {0});
  EXPECT_LT(s.score_row(std::vector<double>{0.0, 0.0}),
            s.score_row(std::vector<double>{20.0, 20.0}));
}

TEST(KnnTest, RadialMonotone) {
  FittedScorer s = fit(ScorerSpec::knn_distance(), Blob(200, 2, 15), {0});
  double prev = -1.0;
  for (double r = 6.0; r < 40.0; r += 1.0) {
    const double v = s.score_row(std::vector<double>{r, r});
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(KnnTest, KTooLarge) {
  KnnParams p;
  p.k = 3;
  EXPECT_EQ(CodeOf([&] { fit(ScorerSpec::knn_distance(p), Blob(3, 2, 1), {0}); }),
            ErrorCode::kKTooLarge);
}

TEST(FitTest, SingleRowIsEmptyTrainingSet) {
  EXPECT_EQ(CodeOf([] { fit(ScorerSpec::isolation_forest(), Blob(1, 2, 1), {0}); }),
            ErrorCode::kEmptyTrainingSet);
}

TEST(ScoreTest, DimensionMismatch) {
  FittedScorer s = fit(ScorerSpec::knn_distance(), Blob(30, 2, 1), {0});
  EXPECT_EQ(CodeOf([&] { score(s, Blob(3, 3, 2)); }), ErrorCode::kDimensionMismatch);
}

TEST(PolarityTest, Negation) {
  ScoreVector v = normalize_polarity({1, 2, 3}, Polarity::kLowerIsAnomalous,
                                     ScorerKind::kExternal);
  EXPECT_EQ(v.scores, (std::vector<double>{-1, -2, -3}));
  EXPECT_TRUE(v.polarity_normalized);
}

TEST(PolarityTest, Identity) {
  EXPECT_EQ(normalize_polarity({1, 2, 3}, Polarity::kHigherIsAnomalous,
                               ScorerKind::kExternal)
                .scores,
            (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(normalize_polarity({1, 2, 3}, Polarity::kAuto,
                               ScorerKind::kIsolationForest)
                .scores,
            (std::vector<double>{1, 2, 3}));
}

TEST(PolarityTest, AutoExternalIsAmbiguous) {
  EXPECT_EQ(CodeOf([] {
              normalize_polarity({1}, Polarity::kAuto, ScorerKind::kExternal);
            }),
            ErrorCode::kAmbiguousPolarity);
}

TEST(DetachedTest, ConstantFunction) {
  FittedScorer s = wrap_detached([](std::span<const double>) { return 0.0; },
                                 Polarity::kHigherIsAnomalous);
  EXPECT_EQ(s.kind(), ScorerKind::kExternal);
  EXPECT_EQ(s.training_size(), 0u);
  EXPECT_EQ(score(s, Blob(4, 2, 1)).scores, (std::vector<double>(4, 0.0)));
}

TEST(DetachedTest, LowerIsAnomalousNegates) {
  auto norm = [](std::span<const double> x) {
    double a = 0.0;
    for (double v : x) a += v * v;
    return std::sqrt(a);
  };
  FittedScorer s = wrap_detached(norm, Polarity::kLowerIsAnomalous);
  EXPECT_DOUBLE_EQ(s.score_row(std::vector<double>{3.0, 4.0}), -5.0);
}

TEST(DetachedTest, PolarityRequired) {
  EXPECT_EQ(CodeOf([] {
              wrap_detached([](std::span<const double>) { return 0.0; },
                            Polarity::kAuto);
            }),
            ErrorCode::kAmbiguousPolarity);
}

}  // namespace
}  // namespace confad::detectors

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

#include "confad/decisions.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gtest/gtest.h"

namespace confad::decisions {
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

std::vector<std::uint8_t> Flags(std::initializer_list<int> v) {
  return std::vector<std::uint8_t>(v.begin(), v.end());
}

DecisionSet WithFlags(std::initializer_list<int> v) {
  DecisionSet d;
  d.flags = Flags(v);
  return d;
}

// Step-up by explicit enumeration of every k.
std::vector<std::uint8_t> BruteForceBh(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  std::size_t best = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    std::size_t at_or_below = 0;
    // p_(k) <= k alpha / m iff at least k values are <= k alpha / m.
    for (double v : p) at_or_below += v <= static_cast<double>(k) * alpha / m;
    if (at_or_below >= k) best = k;
  }
  std::vector<std::uint8_t> flags(m, 0);
  if (best == 0) return flags;
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 0; j < m; ++j) flags[j] = p[j] <= sorted[best - 1];
  return flags;
}

TEST(BhTest, HandExample) {
  const std::vector<double> p = {0.01, 0.02, 0.2, 0.6};
  DecisionSet d = benjamini_hochberg(p, 0.1);
  EXPECT_EQ(d.flags, Flags({1, 1, 0, 0}));
  EXPECT_EQ(d.rejection_threshold, 0.02);
  EXPECT_EQ(d.procedure, Procedure::kBenjaminiHochberg);
  EXPECT_EQ(d.alpha, 0.1);
}

TEST(BhTest, AllOnesFlagNothing) {
  const std::vector<double> p(10, 1.0);
  DecisionSet d = benjamini_hochberg(p, 0.1);
  EXPECT_EQ(d.count(), 0u);
  EXPECT_EQ(d.rejection_threshold, 0.0);
}

TEST(BhTest, BoundaryIncluded) {
  const std::vector<double> p = {0.05};
  EXPECT_EQ(benjamini_hochberg(p, 0.05).flags, Flags({1}));
}

TEST(BhTest, StepUpRescuesEarlierFailures) {
  // p_(1) = 0.03 > 0.1/4 but p_(2) = 0.04 <= 0.05.
  const std::vector<double> p = {0.04, 0.03, 0.5, 0.9};
  EXPECT_EQ(benjamini_hochberg(p, 0.1).flags, Flags({1, 1, 0, 0}));
}

TEST(BhTest, TiesShareFate) {
  const std::vector<double> p = {0.02, 0.02, 0.02, 0.9};
  EXPECT_EQ(benjamini_hochberg(p, 0.1).flags, Flags({1, 1, 1, 0}));
}

TEST(BhTest, MatchesBruteForceAndProperties) {
  Rng rng({3});
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + rng.index(60);
    std::vector<double> p(m);
    for (double& v : p) {
      // Mixture of small and uniform values, with grid ties.
      v = rng.bernoulli(0.3) ? rng.uniform() * 0.02 : rng.uniform();
      if (rng.bernoulli(0.2)) v = std::ceil(v * 20.0) / 20.0;
      v = std::max(v, 1e-6);
    }
    const double alpha = 0.05 + 0.2 * rng.uniform();
    DecisionSet d = benjamini_hochberg(p, alpha);
    ASSERT_EQ(d.flags, BruteForceBh(p, alpha));
    EXPECT_LE(d.rejection_threshold, alpha);
    for (std::size_t j = 0; j < m; ++j) {
      EXPECT_EQ(d.flags[j], p[j] <= d.rejection_threshold && d.count() > 0);
    }
    // Every BH flag is a fixed-threshold flag.
    DecisionSet f = fixed_threshold(p, alpha);
    for (std::size_t j = 0; j < m; ++j) EXPECT_LE(d.flags[j], f.flags[j]);
    // Permutation invariance.
    std::vector<std::size_t> order(m);
    for (std::size_t j = 0; j < m; ++j) order[j] = j;
    rng.shuffle(order);
    std::vector<double> q(m);
    for (std::size_t j = 0; j < m; ++j) q[j] = p[order[j]];
    DecisionSet dq = benjamini_hochberg(q, alpha);
    for (std::size_t j = 0; j < m; ++j) EXPECT_EQ(dq.flags[j], d.flags[order[j]]);
    // Appending a 1 never adds flags among the originals.
    std::vector<double> extended = p;
    extended.push_back(1.0);
    DecisionSet de = benjamini_hochberg(extended, alpha);
    for (std::size_t j = 0; j < m; ++j) EXPECT_LE(de.flags[j], d.flags[j]);
    DecisionSet fe = fixed_threshold(extended, alpha);
    for (std::size_t j = 0; j < m; ++j) EXPECT_EQ(fe.flags[j], f.flags[j]);
  }
}

TEST(BhTest, Errors) {
  const std::vector<double> empty;
  EXPECT_EQ(CodeOf([&] { benjamini_hochberg(empty, 0.1); }), ErrorCode::kEmptyInput);
  const std::vector<double> p = {0.1};
  EXPECT_EQ(CodeOf([&] { benjamini_hochberg(p, 0.0); }), ErrorCode::kInvalidAlpha);
  EXPECT_EQ(CodeOf([&] { benjamini_hochberg(p, 1.0); }), ErrorCode::kInvalidAlpha);
  EXPECT_EQ(CodeOf([] { SelectionSpec{Procedure::kFixedThreshold, -0.1}.validate(); }),
            ErrorCode::kInvalidAlpha);
}

TEST(FixedThresholdTest, Examples) {
  const std::vector<double> p = {0.04, 0.06};
  DecisionSet d = fixed_threshold(p, 0.05);
  EXPECT_EQ(d.flags, Flags({1, 0}));
  EXPECT_EQ(d.rejection_threshold, 0.05);
  const std::vector<double> floor = {1.0 / 5.0};
  EXPECT_EQ(fixed_threshold(floor, 0.2).flags, Flags({1}));
  const std::vector<double> ones(3, 1.0);
  EXPECT_EQ(fixed_threshold(ones, 0.2).count(), 0u);
  const std::vector<double> empty;
  EXPECT_EQ(CodeOf([&] { fixed_threshold(empty, 0.1); }), ErrorCode::kEmptyInput);
}

TEST(WeightedSelectionTest, HandExample) {
  PValueVector p;
  p.values = {0.01, 0.5};
  p.weighted = true;
  DecisionSet d = weighted_false_discovery_control(p, 0.1);
  EXPECT_EQ(d.flags, Flags({1, 0}));
  EXPECT_EQ(d.procedure, Procedure::kWeightedBh);
  EXPECT_TRUE(d.finite_sample_caveat);
}

TEST(WeightedSelectionTest, SameFlagsAsBh) {
  PValueVector p;
  p.values = {0.01, 0.02, 0.2, 0.6, 0.03, 0.04};
  DecisionSet w = weighted_false_discovery_control(p, 0.1);
  DecisionSet b = benjamini_hochberg(p, 0.1);
  EXPECT_EQ(w.flags, b.flags);
  EXPECT_EQ(w.rejection_threshold, b.rejection_threshold);
  EXPECT_EQ(CodeOf([] { weighted_false_discovery_control(PValueVector{}, 0.1); }),
            ErrorCode::kEmptyInput);
}

TEST(ApplyTest, Dispatches) {
  PValueVector p;
  p.values = {0.04, 0.06};
  EXPECT_EQ(apply({Procedure::kFixedThreshold, 0.05}, p).flags, Flags({1, 0}));
  EXPECT_EQ(apply({Procedure::kBenjaminiHochberg, 0.05}, p).procedure,
            Procedure::kBenjaminiHochberg);
  EXPECT_EQ(apply({Procedure::kWeightedBh, 0.05}, p).procedure, Procedure::kWeightedBh);
}

TEST(FdrTest, Examples) {
  const std::vector<int> labels = {0, 1, 1};
  EXPECT_EQ(false_discovery_rate(labels, WithFlags({1, 1, 0})), 0.5);
  EXPECT_EQ(false_discovery_rate(labels, WithFlags({0, 0, 0})), 0.0);
  EXPECT_EQ(false_discovery_rate(labels, WithFlags({0, 1, 1})), 0.0);
  EXPECT_EQ(CodeOf([&] { false_discovery_rate(labels, WithFlags({1, 0})); }),
            ErrorCode::kShapeMismatch);
}

TEST(PowerTest, Examples) {
  const std::vector<int> labels = {1, 1, 0};
  EXPECT_EQ(statistical_power(labels, WithFlags({1, 0, 0})), 0.5);
  EXPECT_EQ(statistical_power(labels, WithFlags({1, 1, 1})), 1.0);
  EXPECT_EQ(statistical_power(labels, WithFlags({0, 0, 0})), 0.0);
  const std::vector<int> clean = {0, 0};
  EXPECT_EQ(CodeOf([&] { statistical_power(clean, WithFlags({1, 0})); }),
            ErrorCode::kNoAnomalies);
}

}  // namespace
}  // namespace confad::decisions

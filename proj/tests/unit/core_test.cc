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

#include "confad/core.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "gtest/gtest.h"

namespace confad {
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

TEST(DataMatrixTest, WellFormedInputPasses) {
  DataMatrix m = validate_matrix({{1.0, 2.0}, {3.0, 4.0}}, std::vector<int>{0, 1});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 2u);
  EXPECT_DOUBLE_EQ(m.at(1, 0), 3.0);
  ASSERT_TRUE(m.labels().has_value());
  EXPECT_EQ((*m.labels())[1], 1);
}

TEST(DataMatrixTest, NanReportsRowAndColumn) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    validate_matrix({{1.0, nan}});
    FAIL() << "expected InvalidDataError";
  } catch (const InvalidDataError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidData);
    EXPECT_EQ(e.row(), 0u);
    EXPECT_EQ(e.col(), 1u);
  }
}

TEST(DataMatrixTest, InfinityRejected) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(CodeOf([&] { validate_matrix({{1.0}, {-inf}}); }),
            ErrorCode::kInvalidData);
}

TEST(DataMatrixTest, LabelOutsideBinaryRejected) {
  EXPECT_EQ(CodeOf([] { validate_matrix({{1.0}, {2.0}}, std::vector<int>{0, 2}); }),
            ErrorCode::kInvalidLabel);
}

TEST(DataMatrixTest, LabelLengthMismatch) {
  EXPECT_EQ(CodeOf([] { validate_matrix({{1.0}, {2.0}}, std::vector<int>{0}); }),
            ErrorCode::kShapeMismatch);
}

TEST(DataMatrixTest, RaggedRowsRejected) {
  EXPECT_EQ(CodeOf([] { validate_matrix({{1.0, 2.0}, {3.0}}); }),
            ErrorCode::kShapeMismatch);
}

TEST(DataMatrixTest, EmptyRejected) {
  EXPECT_EQ(CodeOf([] { validate_matrix({}); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(CodeOf([] { validate_matrix({{}}); }), ErrorCode::kShapeMismatch);
}

TEST(DataMatrixTest, SelectRowsKeepsLabelsAndRepeats) {
  DataMatrix m = validate_matrix({{1.0}, {2.0}, {3.0}}, std::vector<int>{0, 1, 0});
  const std::vector<std::size_t> idx = {2, 1, 1};
  DataMatrix s = m.select_rows(idx);
  ASSERT_EQ(s.rows(), 3u);
  EXPECT_DOUBLE_EQ(s.at(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(s.at(2, 0), 2.0);
  EXPECT_EQ(*s.labels(), (std::vector<int>{0, 1, 1}));
  EXPECT_FALSE(m.without_labels().labels().has_value());
}

TEST(ErrorTest, MessageCarriesCodeName) {
  Error e(ErrorCode::kParseError, "bad cell");
  EXPECT_STREQ(e.what(), "ParseError: bad cell");
}

TEST(SplitSeedTest, Deterministic) {
  EXPECT_EQ(split_seed({42}, 0), split_seed({42}, 0));
}

TEST(SplitSeedTest, DistinctStreamsDiffer) {
  EXPECT_NE(split_seed({42}, 0), split_seed({42}, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(split_seed({42}, s).value);
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(SplitSeedTest, GoldenValue) {
  EXPECT_EQ(split_seed({7}, 3).value, 15776485518777115273ULL);
}

TEST(RngTest, SameSeedSameSequence) {
  Rng a({11});
  Rng b({11});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng c({7});
  EXPECT_DOUBLE_EQ(c.uniform(), 0.75438530415285798);
}

TEST(RngTest, UniformMomentsAndRange) {
  Rng rng({5});
  const int n = 200000;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sum2 += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sum2 / n - 0.25, 1.0 / 12.0, 0.003);
}

TEST(RngTest, NormalMoments) {
  Rng rng({9});
  const int n = 200000;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sum2 / n, 1.0, 0.02);
}

TEST(RngTest, IndexCoversRange) {
  Rng rng({3});
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.index(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(ParallelForTest, VisitsEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(ParallelForTest, RethrowsTaskError) {
  EXPECT_THROW(parallel_for(10,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(DigestTest, KnownFnvVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("abc"), 0xe71fa2190541574bULL);
}

}  // namespace
}  // namespace confad

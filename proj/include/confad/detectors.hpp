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

// Anomaly scorers. A scorer is fitted once and is then a fixed function of
// its input; all scores leaving this module follow the convention that
// larger means more anomalous.

#ifndef CONFAD_DETECTORS_HPP_
#define CONFAD_DETECTORS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "confad/core.hpp"

namespace confad::detectors {

enum class ScorerKind { kIsolationForest, kKnnDistance, kExternal };
enum class Polarity { kHigherIsAnomalous, kLowerIsAnomalous, kAuto };
enum class KnnAggregation { kKth, kMean };

struct IsolationForestParams {
  std::size_t n_trees = 100;
  std::size_t subsample_size = 256;
  // Defaults to ceil(log2(effective subsample size)).
  std::optional<std::size_t> max_depth;
};

struct KnnParams {
  std::size_t k = 5;
  KnnAggregation aggregation = KnnAggregation::kKth;
};

struct ScorerSpec {
  ScorerKind kind = ScorerKind::kIsolationForest;
  IsolationForestParams forest;
  KnnParams knn;
  Polarity polarity = Polarity::kAuto;

  static ScorerSpec isolation_forest(IsolationForestParams params = {});
  static ScorerSpec knn_distance(KnnParams params = {});

  // Throws kInvalidHyperparameter.
  void validate() const;
};

// One node of an isolation tree. feature < 0 marks a leaf; `size` is the
// number of subsample rows that reached the node.
struct IsolationNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t size = 0;
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;  // nodes[0] is the root
};

struct IsolationForestModel {
  std::vector<IsolationTree> trees;
  std::size_t sample_size = 0;
  std::size_t depth_limit = 0;
  std::size_t n_cols = 0;
};

struct KnnModel {
  DataMatrix reference;
  KnnParams params;
};

using ScoreFunction = std::function<double(std::span<const double>)>;

struct ExternalModel {
  ScoreFunction function;
  std::optional<std::size_t> n_cols;
};

// A fitted, immutable scoring function. Copies share the model state.
class FittedScorer {
 public:
  using Model = std::variant<IsolationForestModel, KnnModel, ExternalModel>;

  FittedScorer(ScorerSpec spec, Model model, std::size_t training_size);

  const ScorerSpec& spec() const noexcept { return spec_; }
  ScorerKind kind() const noexcept { return spec_.kind; }
  const Model& model() const noexcept { return *model_; }
  // Zero for wrapped external scorers.
  std::size_t training_size() const noexcept { return training_size_; }
  // Expected input width, if known.
  std::optional<std::size_t> n_cols() const;

  // Polarity-normalized score of one observation.
  double score_row(std::span<const double> x) const;

 private:
  double raw_score(std::span<const double> x) const;

  ScorerSpec spec_;
  std::shared_ptr<const Model> model_;
  std::size_t training_size_;
};

// Isolation forests draw each tree's subsample from the training rows sorted
// by content, seeded by split_seed(seed, tree_index); the fitted forest is
// therefore identical for any row permutation of `train`.
FittedScorer fit(const ScorerSpec& spec, const DataMatrix& train,
                 RandomSeed seed);

ScoreVector score(const FittedScorer& scorer, const DataMatrix& x);

ScoreVector normalize_polarity(std::vector<double> raw, Polarity polarity,
                               ScorerKind kind);

// Wraps an already-fitted external scoring function. Polarity must be
// explicit.
FittedScorer wrap_detached(ScoreFunction function, Polarity polarity,
                           std::optional<std::size_t> n_cols = {});

// c(n): average unsuccessful-search path length in a binary search tree of
// n points, the isolation-forest depth normalizer.
double average_path_length(std::size_t n);

// 2^(-mean_path_length / c(sample_size)).
double isolation_score(double mean_path_length, std::size_t sample_size);

}  // namespace confad::detectors

#endif  // CONFAD_DETECTORS_HPP_

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
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/digamma.hpp>

namespace confad::detectors {

ScorerSpec ScorerSpec::isolation_forest(IsolationForestParams params) {
  ScorerSpec spec;
  spec.kind = ScorerKind::kIsolationForest;
  spec.forest = params;
  return spec;
}

ScorerSpec ScorerSpec::knn_distance(KnnParams params) {
  ScorerSpec spec;
  spec.kind = ScorerKind::kKnnDistance;
  spec.knn = params;
  return spec;
}

void ScorerSpec::validate() const {
  switch (kind) {
    case ScorerKind::kIsolationForest:
      if (forest.n_trees == 0) {
        throw Error(ErrorCode::kInvalidHyperparameter, "n_trees must be positive");
      }
      if (forest.subsample_size == 0) {
        throw Error(ErrorCode::kInvalidHyperparameter,
                    "subsample_size must be positive");
      }
      if (forest.max_depth && *forest.max_depth == 0) {
        throw Error(ErrorCode::kInvalidHyperparameter,
                    "max_depth must be positive");
      }
      break;
    case ScorerKind::kKnnDistance:
      if (knn.k == 0) {
        throw Error(ErrorCode::kInvalidHyperparameter, "k must be positive");
      }
      break;
    case ScorerKind::kExternal:
      break;
  }
}

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  // H(m) = digamma(m + 1) + Euler-Mascheroni.
  const double harmonic = boost::math::digamma(m + 1.0) +
                          boost::math::constants::euler<double>();
  return 2.0 * harmonic - 2.0 * m / static_cast<double>(n);
}

double isolation_score(double mean_path_length, std::size_t sample_size) {
  const double norm = average_path_length(sample_size);
  if (norm <= 0.0) return 1.0;
  return std::exp2(-mean_path_length / norm);
}

namespace {

struct BuildFrame {
  std::size_t node;
  std::size_t begin;
  std::size_t end;
  std::size_t depth;
};

IsolationTree build_tree(const DataMatrix& train,
                         std::vector<std::size_t> rows,
                         std::size_t depth_limit, Rng& rng) {
  IsolationTree tree;
  tree.nodes.emplace_back();
  std::vector<BuildFrame> stack{{0, 0, rows.size(), 0}};
  const std::size_t cols = train.cols();
  std::vector<double> lo(cols), hi(cols);
  std::vector<std::size_t> candidates;
  candidates.reserve(cols);

  while (!stack.empty()) {
    const BuildFrame frame = stack.back();
    stack.pop_back();
    const std::size_t count = frame.end - frame.begin;
    tree.nodes[frame.node].size = static_cast<std::uint32_t>(count);
    if (frame.depth >= depth_limit || count <= 1) continue;

    std::fill(lo.begin(), lo.end(), std::numeric_limits<double>::infinity());
    std::fill(hi.begin(), hi.end(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = frame.begin; i < frame.end; ++i) {
      auto r = train.row(rows[i]);
      for (std::size_t j = 0; j < cols; ++j) {
        lo[j] = std::min(lo[j], r[j]);
        hi[j] = std::max(hi[j], r[j]);
      }
    }
    candidates.clear();
    for (std::size_t j = 0; j < cols; ++j) {
      if (hi[j] > lo[j]) candidates.push_back(j);
    }
    // All rows identical: nothing left to isolate.
    if (candidates.empty()) continue;

    const std::size_t feature = candidates[rng.index(candidates.size())];
    // Threshold in [lo, hi); rows with value <= threshold go left, so both
    // children are non-empty.
    double threshold = lo[feature] + rng.uniform() * (hi[feature] - lo[feature]);
    if (threshold >= hi[feature]) threshold = lo[feature];

    auto mid = std::partition(
        rows.begin() + static_cast<std::ptrdiff_t>(frame.begin),
        rows.begin() + static_cast<std::ptrdiff_t>(frame.end),
        [&](std::size_t r) { return train.at(r, feature) <= threshold; });
    const std::size_t split = static_cast<std::size_t>(mid - rows.begin());

    const auto left = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    IsolationNode& node = tree.nodes[frame.node];
    node.feature = static_cast<std::int32_t>(feature);
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    stack.push_back({static_cast<std::size_t>(right), split, frame.end,
                     frame.depth + 1});
    stack.push_back({static_cast<std::size_t>(left), frame.begin, split,
                     frame.depth + 1});
  }
  return tree;
}

IsolationForestModel fit_forest(const IsolationForestParams& params,
                                const DataMatrix& train, RandomSeed seed) {
  const std::size_t n = train.rows();
  // Content order makes the fit independent of the input row order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     auto ra = train.row(a);
                     auto rb = train.row(b);
                     return std::lexicographical_compare(ra.begin(), ra.end(),
                                                         rb.begin(), rb.end());
                   });

  IsolationForestModel model;
  model.sample_size = std::min(params.subsample_size, n);
  model.depth_limit = params.max_depth.value_or(static_cast<std::size_t>(
      std::ceil(std::log2(static_cast<double>(model.sample_size)))));
  model.n_cols = train.cols();
  model.trees.resize(params.n_trees);

  parallel_for(params.n_trees, [&](std::size_t t) {
    Rng rng(split_seed(seed, t));
    // Partial Fisher-Yates over positions in content order.
    std::vector<std::size_t> positions(n);
    std::iota(positions.begin(), positions.end(), 0);
    for (std::size_t i = 0; i < model.sample_size; ++i) {
      std::swap(positions[i], positions[i + rng.index(n - i)]);
    }
    std::vector<std::size_t> rows(model.sample_size);
    for (std::size_t i = 0; i < model.sample_size; ++i) {
      rows[i] = order[positions[i]];
    }
    model.trees[t] = build_tree(train, std::move(rows), model.depth_limit, rng);
  });
  return model;
}

double forest_raw_score(const IsolationForestModel& model,
                        std::span<const double> x) {
  double total = 0.0;
  for (const IsolationTree& tree : model.trees) {
    std::size_t node = 0;
    std::size_t depth = 0;
    while (tree.nodes[node].feature >= 0) {
      const IsolationNode& n = tree.nodes[node];
      node = static_cast<std::size_t>(
          x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                 : n.right);
      ++depth;
    }
    total += static_cast<double>(depth) +
             average_path_length(tree.nodes[node].size);
  }
  const double mean = total / static_cast<double>(model.trees.size());
  return isolation_score(mean, model.sample_size);
}

double knn_raw_score(const KnnModel& model, std::span<const double> x) {
  const DataMatrix& ref = model.reference;
  std::vector<double> dist(ref.rows());
  for (std::size_t i = 0; i < ref.rows(); ++i) {
    auto r = ref.row(i);
    double d2 = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double diff = r[j] - x[j];
      d2 += diff * diff;
    }
    dist[i] = d2;
  }
  const std::size_t k = model.params.k;
  auto kth = dist.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(dist.begin(), kth, dist.end());
  if (model.params.aggregation == KnnAggregation::kKth) {
    return std::sqrt(*kth);
  }
  // Sorting the k smallest fixes the summation order.
  std::sort(dist.begin(), kth);
  double sum = 0.0;
  for (auto it = dist.begin(); it <= kth; ++it) sum += std::sqrt(*it);
  return sum / static_cast<double>(k);
}

}  // namespace

FittedScorer::FittedScorer(ScorerSpec spec, Model model,
                           std::size_t training_size)
    : spec_(spec),
      model_(std::make_shared<const Model>(std::move(model))),
      training_size_(training_size) {}

std::optional<std::size_t> FittedScorer::n_cols() const {
  if (const auto* forest = std::get_if<IsolationForestModel>(model_.get())) {
    return forest->n_cols;
  }
  if (const auto* knn = std::get_if<KnnModel>(model_.get())) {
    return knn->reference.cols();
  }
  return std::get<ExternalModel>(*model_).n_cols;
}

double FittedScorer::raw_score(std::span<const double> x) const {
  if (const auto* forest = std::get_if<IsolationForestModel>(model_.get())) {
    return forest_raw_score(*forest, x);
  }
  if (const auto* knn = std::get_if<KnnModel>(model_.get())) {
    return knn_raw_score(*knn, x);
  }
  return std::get<ExternalModel>(*model_).function(x);
}

double FittedScorer::score_row(std::span<const double> x) const {
  const double raw = raw_score(x);
  return spec_.polarity == Polarity::kLowerIsAnomalous ? -raw : raw;
}

FittedScorer fit(const ScorerSpec& spec, const DataMatrix& train,
                 RandomSeed seed) {
  spec.validate();
  if (spec.kind == ScorerKind::kExternal) {
    throw Error(ErrorCode::kInvalidSpec,
                "external scorers are wrapped pre-fitted, not fitted");
  }
  if (train.rows() < 2) {
    throw Error(ErrorCode::kEmptyTrainingSet,
                "fitting requires at least 2 training rows, got " +
                    std::to_string(train.rows()));
  }
  if (spec.kind == ScorerKind::kIsolationForest) {
    return FittedScorer(spec, fit_forest(spec.forest, train, seed),
                        train.rows());
  }
  if (spec.knn.k >= train.rows()) {
    throw Error(ErrorCode::kKTooLarge,
                "k = " + std::to_string(spec.knn.k) +
                    " must be smaller than the training size " +
                    std::to_string(train.rows()));
  }
  return FittedScorer(spec, KnnModel{train.without_labels(), spec.knn},
                      train.rows());
}

ScoreVector score(const FittedScorer& scorer, const DataMatrix& x) {
  if (const auto cols = scorer.n_cols(); cols && *cols != x.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "scorer expects " + std::to_string(*cols) +
                    " columns, input has " + std::to_string(x.cols()));
  }
  ScoreVector out;
  out.polarity_normalized = true;
  out.scores.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = scorer.score_row(x.row(i));
    if (!std::isfinite(s)) throw InvalidDataError(i, 0);
    out.scores[i] = s;
  }
  return out;
}

ScoreVector normalize_polarity(std::vector<double> raw, Polarity polarity,
                               ScorerKind kind) {
  if (polarity == Polarity::kAuto) {
    if (kind == ScorerKind::kExternal) {
      throw Error(ErrorCode::kAmbiguousPolarity,
                  "external scorers must declare their polarity");
    }
    // Built-in detectors already emit higher-is-anomalous scores.
    polarity = Polarity::kHigherIsAnomalous;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw InvalidDataError(i, 0);
    if (polarity == Polarity::kLowerIsAnomalous) raw[i] = -raw[i];
  }
  return {std::move(raw), true};
}

FittedScorer wrap_detached(ScoreFunction function, Polarity polarity,
                           std::optional<std::size_t> n_cols) {
  if (polarity == Polarity::kAuto) {
    throw Error(ErrorCode::kAmbiguousPolarity,
                "wrapped scorers must declare their polarity");
  }
  if (!function) throw Error(ErrorCode::kInvalidSpec, "empty score function");
  ScorerSpec spec;
  spec.kind = ScorerKind::kExternal;
  spec.polarity = polarity;
  return FittedScorer(spec, ExternalModel{std::move(function), n_cols}, 0);
}

}  // namespace confad::detectors

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

// Shared data model for the conformal anomaly detection library: validated
// observation matrices, score / p-value / decision containers, errors, and
// deterministic seeded randomness.

#ifndef CONFAD_CORE_HPP_
#define CONFAD_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace confad {

enum class ErrorCode {
  kInvalidData,
  kInvalidLabel,
  kShapeMismatch,
  kEmptyInput,
  kInvalidHyperparameter,
  kEmptyTrainingSet,
  kKTooLarge,
  kDimensionMismatch,
  kAmbiguousPolarity,
  kCalibrationTooLarge,
  kKOutOfRange,
  kNoOutOfBagRows,
  kEmptyCalibration,
  kInvalidDelta,
  kTableMismatch,
  kNoAnomalies,
  kInvalidSpec,
  kInvalidAlpha,
  kInvalidConfig,
  kParseError,
  kSnapshotError,
  kVersionMismatch,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// A non-finite matrix cell. Row and column are 0-based.
class InvalidDataError : public Error {
 public:
  InvalidDataError(std::size_t row, std::size_t col);
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

// Dense row-major matrix of finite values with optional {0,1} labels
// (1 = anomaly). Immutable once built; only the factories below create
// non-empty instances, so every non-empty DataMatrix satisfies its invariants.
class DataMatrix {
 public:
  DataMatrix() = default;

  static DataMatrix from_rows(const std::vector<std::vector<double>>& rows,
                              std::optional<std::vector<int>> labels = {},
                              std::vector<std::string> column_names = {});
  static DataMatrix from_flat(std::size_t rows, std::size_t cols,
                              std::vector<double> values,
                              std::optional<std::vector<int>> labels = {},
                              std::vector<std::string> column_names = {});

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  double at(std::size_t i, std::size_t j) const {
    return values_[i * cols_ + j];
  }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::optional<std::vector<int>>& labels() const noexcept {
    return labels_;
  }
  const std::vector<std::string>& column_names() const noexcept {
    return column_names_;
  }

  // Rows may repeat (bootstrap multisets).
  DataMatrix select_rows(std::span<const std::size_t> indices) const;
  DataMatrix without_labels() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::optional<std::vector<int>> labels_;
  std::vector<std::string> column_names_;
};

DataMatrix validate_matrix(const std::vector<std::vector<double>>& raw,
                           std::optional<std::vector<int>> labels = {});

struct ScoreVector {
  std::vector<double> scores;
  // When true, larger means more anomalous.
  bool polarity_normalized = false;
};

enum class Estimation { kEmpirical, kConditionalEmpirical, kProbabilistic };

std::string_view to_string(Estimation estimation);

struct PValueVector {
  std::vector<double> values;
  Estimation estimation = Estimation::kEmpirical;
  bool smoothed = false;
  std::size_t calibration_size = 0;
  bool weighted = false;
  // Probabilistic estimates carry no finite-sample guarantee.
  bool non_conformal = false;
  // Probabilistic regime fell back to empirical ranks (zero score variance).
  bool fell_back_to_empirical = false;
  // Number of emitted weights clamped at the weight cap (weighted only).
  std::size_t capped_weights = 0;

  std::size_t size() const noexcept { return values.size(); }
};

enum class Procedure { kBenjaminiHochberg, kWeightedBh, kFixedThreshold };

std::string_view to_string(Procedure procedure);

struct DecisionSet {
  std::vector<std::uint8_t> flags;
  Procedure procedure = Procedure::kBenjaminiHochberg;
  double alpha = 0.0;
  double rejection_threshold = 0.0;
  // Set for weighted selection: BH on weighted p-values has no finite-sample
  // FDR guarantee.
  bool finite_sample_caveat = false;

  std::size_t size() const noexcept { return flags.size(); }
  std::size_t count() const noexcept;
};

struct RandomSeed {
  std::uint64_t value = 0;

  friend bool operator==(RandomSeed, RandomSeed) = default;
};

// Counter-based child seed derivation; the child depends only on
// (seed, stream_id), never on the order in which children are requested.
RandomSeed split_seed(RandomSeed seed, std::uint64_t stream_id);

// Seeded generator. Distributions are implemented here rather than taken
// from <random> so that outputs are identical across standard libraries.
class Rng {
 public:
  explicit Rng(RandomSeed seed) : engine_(seed.value) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1).
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  // Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_normal_;
};

// Runs fn(i) for i in [0, n) on a small worker pool. fn must only write to
// slots owned by i; results are therefore independent of scheduling. The
// first exception thrown by any task is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// 64-bit FNV-1a, used for content digests in manifests and snapshots.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t state = 0xcbf29ce484222325ULL);

}  // namespace confad

#endif  // CONFAD_CORE_HPP_

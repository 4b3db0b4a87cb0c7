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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

namespace confad {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidData: return "InvalidData";
    case ErrorCode::kInvalidLabel: return "InvalidLabel";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidHyperparameter: return "InvalidHyperparameter";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kAmbiguousPolarity: return "AmbiguousPolarity";
    case ErrorCode::kCalibrationTooLarge: return "CalibrationTooLarge";
    case ErrorCode::kKOutOfRange: return "KOutOfRange";
    case ErrorCode::kNoOutOfBagRows: return "NoOutOfBagRows";
    case ErrorCode::kEmptyCalibration: return "EmptyCalibration";
    case ErrorCode::kInvalidDelta: return "InvalidDelta";
    case ErrorCode::kTableMismatch: return "TableMismatch";
    case ErrorCode::kNoAnomalies: return "NoAnomalies";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidAlpha: return "InvalidAlpha";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSnapshotError: return "SnapshotError";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

InvalidDataError::InvalidDataError(std::size_t row, std::size_t col)
    : Error(ErrorCode::kInvalidData,
            "non-finite value at row " + std::to_string(row) + ", column " +
                std::to_string(col)),
      row_(row),
      col_(col) {}

namespace {

void check_labels(const std::optional<std::vector<int>>& labels,
                  std::size_t rows) {
  if (!labels) return;
  if (labels->size() != rows) {
    throw Error(ErrorCode::kShapeMismatch,
                "label vector has " + std::to_string(labels->size()) +
                    " entries for " + std::to_string(rows) + " rows");
  }
  for (std::size_t i = 0; i < labels->size(); ++i) {
    const int label = (*labels)[i];
    if (label != 0 && label != 1) {
      throw Error(ErrorCode::kInvalidLabel,
                  "label " + std::to_string(label) + " at row " +
                      std::to_string(i) + " is not 0 or 1");
    }
  }
}

}  // namespace

DataMatrix DataMatrix::from_flat(std::size_t rows, std::size_t cols,
                                 std::vector<double> values,
                                 std::optional<std::vector<int>> labels,
                                 std::vector<std::string> column_names) {
  if (rows == 0) throw Error(ErrorCode::kEmptyInput, "matrix has no rows");
  if (cols == 0) throw Error(ErrorCode::kShapeMismatch, "matrix has no columns");
  if (values.size() != rows * cols) {
    throw Error(ErrorCode::kShapeMismatch, "value count is not rows * cols");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (!std::isfinite(values[i * cols + j])) throw InvalidDataError(i, j);
    }
  }
  check_labels(labels, rows);
  if (!column_names.empty() && column_names.size() != cols) {
    throw Error(ErrorCode::kShapeMismatch,
                "column name count does not match column count");
  }
  DataMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.values_ = std::move(values);
  m.labels_ = std::move(labels);
  m.column_names_ = std::move(column_names);
  return m;
}

DataMatrix DataMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                 std::optional<std::vector<int>> labels,
                                 std::vector<std::string> column_names) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyInput, "matrix has no rows");
  const std::size_t cols = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw Error(ErrorCode::kShapeMismatch,
                  "row " + std::to_string(i) + " has " +
                      std::to_string(rows[i].size()) + " columns, expected " +
                      std::to_string(cols));
    }
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return from_flat(rows.size(), cols, std::move(flat), std::move(labels),
                   std::move(column_names));
}

DataMatrix DataMatrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<double> flat;
  flat.reserve(indices.size() * cols_);
  std::optional<std::vector<int>> labels;
  if (labels_) labels.emplace().reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= rows_) throw std::out_of_range("row index out of range");
    auto r = row(idx);
    flat.insert(flat.end(), r.begin(), r.end());
    if (labels) labels->push_back((*labels_)[idx]);
  }
  DataMatrix m;
  m.rows_ = indices.size();
  m.cols_ = indices.empty() ? 0 : cols_;
  m.values_ = std::move(flat);
  m.labels_ = std::move(labels);
  m.column_names_ = column_names_;
  return m;
}

DataMatrix DataMatrix::without_labels() const {
  DataMatrix m = *this;
  m.labels_.reset();
  return m;
}

DataMatrix validate_matrix(const std::vector<std::vector<double>>& raw,
                           std::optional<std::vector<int>> labels) {
  return DataMatrix::from_rows(raw, std::move(labels));
}

std::string_view to_string(Estimation estimation) {
  switch (estimation) {
    case Estimation::kEmpirical: return "empirical";
    case Estimation::kConditionalEmpirical: return "conditional_empirical";
    case Estimation::kProbabilistic: return "probabilistic";
  }
  return "unknown";
}

std::string_view to_string(Procedure procedure) {
  switch (procedure) {
    case Procedure::kBenjaminiHochberg: return "bh";
    case Procedure::kWeightedBh: return "weighted_bh";
    case Procedure::kFixedThreshold: return "fixed_threshold";
  }
  return "unknown";
}

std::size_t DecisionSet::count() const noexcept {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1));
}

namespace {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomSeed split_seed(RandomSeed seed, std::uint64_t stream_id) {
  return {mix64(mix64(seed.value) ^ mix64(stream_id ^ 0x632be59bd9b4e019ULL))};
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
}

std::size_t Rng::index(std::size_t n) {
  // Rejection sampling keeps the draw unbiased for every n.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  if (cached_normal_) {
    const double z = *cached_normal_;
    cached_normal_.reset();
    return z;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

namespace {
// Nested parallel_for calls run inline on the calling worker.
thread_local bool inside_parallel_region = false;
}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(n, hw);
  if (workers <= 1 || inside_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    const bool was_inside = inside_parallel_region;
    inside_parallel_region = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
    inside_parallel_region = was_inside;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

}  // namespace confad

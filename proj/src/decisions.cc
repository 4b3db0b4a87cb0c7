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
#include <string>
#include <vector>

namespace confad::decisions {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidAlpha,
                "alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

void check_nonempty(std::span<const double> p) {
  if (p.empty()) throw Error(ErrorCode::kEmptyInput, "no p-values to select from");
}

}  // namespace

void SelectionSpec::validate() const { check_alpha(alpha); }

DecisionSet benjamini_hochberg(std::span<const double> p, double alpha) {
  check_nonempty(p);
  check_alpha(alpha);
  std::vector<double> sorted(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  DecisionSet out;
  out.procedure = Procedure::kBenjaminiHochberg;
  out.alpha = alpha;
  out.flags.assign(p.size(), 0);
  for (std::size_t k = sorted.size(); k > 0; --k) {
    if (sorted[k - 1] <= static_cast<double>(k) * alpha / m) {
      out.rejection_threshold = sorted[k - 1];
      for (std::size_t j = 0; j < p.size(); ++j) {
        out.flags[j] = p[j] <= out.rejection_threshold ? 1 : 0;
      }
      break;
    }
  }
  return out;
}

DecisionSet benjamini_hochberg(const PValueVector& p, double alpha) {
  return benjamini_hochberg(std::span<const double>(p.values), alpha);
}

DecisionSet fixed_threshold(std::span<const double> p, double alpha) {
  check_nonempty(p);
  check_alpha(alpha);
  DecisionSet out;
  out.procedure = Procedure::kFixedThreshold;
  out.alpha = alpha;
  out.rejection_threshold = alpha;
  out.flags.resize(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) out.flags[j] = p[j] <= alpha ? 1 : 0;
  return out;
}

DecisionSet fixed_threshold(const PValueVector& p, double alpha) {
  return fixed_threshold(std::span<const double>(p.values), alpha);
}

DecisionSet weighted_false_discovery_control(const PValueVector& p,
                                             double alpha) {
  DecisionSet out = benjamini_hochberg(p, alpha);
  out.procedure = Procedure::kWeightedBh;
  out.finite_sample_caveat = true;
  return out;
}

DecisionSet apply(const SelectionSpec& spec, const PValueVector& p) {
  switch (spec.procedure) {
    case Procedure::kBenjaminiHochberg:
      return benjamini_hochberg(p, spec.alpha);
    case Procedure::kWeightedBh:
      return weighted_false_discovery_control(p, spec.alpha);
    case Procedure::kFixedThreshold:
      return fixed_threshold(p, spec.alpha);
  }
  throw Error(ErrorCode::kInvalidSpec, "unknown procedure");
}

double false_discovery_rate(std::span<const int> labels,
                            const DecisionSet& decisions) {
  if (labels.size() != decisions.flags.size()) {
    throw Error(ErrorCode::kShapeMismatch, "labels and decisions differ in length");
  }
  std::size_t flagged = 0;
  std::size_t false_alarms = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (!decisions.flags[j]) continue;
    ++flagged;
    if (labels[j] == 0) ++false_alarms;
  }
  if (flagged == 0) return 0.0;
  return static_cast<double>(false_alarms) / static_cast<double>(flagged);
}

double statistical_power(std::span<const int> labels,
                         const DecisionSet& decisions) {
  if (labels.size() != decisions.flags.size()) {
    throw Error(ErrorCode::kShapeMismatch, "labels and decisions differ in length");
  }
  std::size_t anomalies = 0;
  std::size_t caught = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] != 1) continue;
    ++anomalies;
    if (decisions.flags[j]) ++caught;
  }
  if (anomalies == 0) {
    throw Error(ErrorCode::kNoAnomalies, "power needs at least one anomaly label");
  }
  return static_cast<double>(caught) / static_cast<double>(anomalies);
}

}  // namespace confad::decisions

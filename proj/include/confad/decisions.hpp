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

// Multiple-testing procedures over p-values and the usual evaluation
// metrics for a labeled batch.

#ifndef CONFAD_DECISIONS_HPP_
#define CONFAD_DECISIONS_HPP_

#include <span>

#include "confad/core.hpp"

namespace confad::decisions {

struct SelectionSpec {
  Procedure procedure = Procedure::kBenjaminiHochberg;
  double alpha = 0.1;

  void validate() const;
};

// Step-up: k* = max{k : p_(k) <= k alpha / m}; flags every p <= p_(k*).
DecisionSet benjamini_hochberg(std::span<const double> p, double alpha);
DecisionSet benjamini_hochberg(const PValueVector& p, double alpha);

DecisionSet fixed_threshold(std::span<const double> p, double alpha);
DecisionSet fixed_threshold(const PValueVector& p, double alpha);

// BH on weighted p-values, tagged with the finite-sample caveat.
DecisionSet weighted_false_discovery_control(const PValueVector& p,
                                             double alpha);

DecisionSet apply(const SelectionSpec& spec, const PValueVector& p);

// labels: 1 = anomaly. Zero flags give 0.
double false_discovery_rate(std::span<const int> labels,
                            const DecisionSet& decisions);
double statistical_power(std::span<const int> labels,
                         const DecisionSet& decisions);

}  // namespace confad::decisions

#endif  // CONFAD_DECISIONS_HPP_

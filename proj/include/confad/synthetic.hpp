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

// Seeded synthetic data: Gaussian inlier/anomaly batches, a correlated
// Gaussian with logistic tilting along its leading principal axis, and
// labeled streams with a controllable anomaly rate.

#ifndef CONFAD_SYNTHETIC_HPP_
#define CONFAD_SYNTHETIC_HPP_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "confad/core.hpp"

namespace confad::synthetic {

// n rows of N(0, I_dim).
DataMatrix gaussian_inliers(std::size_t n, std::size_t dim, Rng& rng);

// Inliers N(0, I), anomalies N(shift * 1, I), in shuffled order with labels.
DataMatrix gaussian_batch(std::size_t n_inliers, std::size_t n_anomalies,
                          std::size_t dim, double shift, Rng& rng);

// N(0, S) with S_ij = rho^|i - j|.
struct CorrelatedGaussian {
  std::size_t dim = 0;
  double rho = 0.0;
  std::vector<double> cholesky;  // lower triangular, row-major
  std::vector<double> pc1;       // unit leading eigenvector of S
  double pc1_sd = 1.0;           // sqrt of the leading eigenvalue
  std::vector<double> orthogonal;  // unit vector orthogonal to pc1

  std::vector<double> sample(Rng& rng) const;
  // Standardized coordinate along pc1.
  double projection(std::span<const double> x) const;
};

CorrelatedGaussian make_correlated_gaussian(std::size_t dim, double rho);

DataMatrix correlated_inliers(const CorrelatedGaussian& g, std::size_t n,
                              Rng& rng);

// Acceptance probability of the shifted test distribution:
// sigmoid(beta * (projection(x) - center)). Proportional to the density
// ratio.
double tilt_probability(const CorrelatedGaussian& g, double beta, double center,
                        std::span<const double> x);

// Test batch from the tilted distribution. Anomalies are tilted draws moved
// by +-anomaly_offset (random sign) along the orthogonal direction.
DataMatrix tilted_batch(const CorrelatedGaussian& g, std::size_t n_inliers,
                        std::size_t n_anomalies, double beta, double center,
                        double anomaly_offset, Rng& rng);

// Segments of (length, anomaly probability); anomalies are N(shift * 1, I).
DataMatrix segmented_stream(
    std::span<const std::pair<std::size_t, double>> segments, std::size_t dim,
    double shift, Rng& rng);

// n_before clean points, then the anomaly probability rises linearly from 0
// to 1 over n_after points.
DataMatrix ramp_stream(std::size_t n_before, std::size_t n_after,
                       std::size_t dim, double shift, Rng& rng);

std::vector<double> uniform_stream(std::size_t n, Rng& rng);

}  // namespace confad::synthetic

#endif  // CONFAD_SYNTHETIC_HPP_

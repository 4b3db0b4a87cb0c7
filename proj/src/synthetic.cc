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

#include "confad/synthetic.hpp"

#include <cmath>
#include <numeric>

namespace confad::synthetic {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void normalize(std::vector<double>& v) {
  const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (double& x : v) x /= norm;
}

std::vector<double> gaussian_row(std::size_t dim, double mean, Rng& rng) {
  std::vector<double> row(dim);
  for (double& v : row) v = mean + rng.normal();
  return row;
}

DataMatrix assemble(std::vector<std::vector<double>> rows,
                    std::vector<int> labels) {
  return DataMatrix::from_rows(rows, std::move(labels));
}

}  // namespace

DataMatrix gaussian_inliers(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> rows(n);
  for (auto& r : rows) r = gaussian_row(dim, 0.0, rng);
  return DataMatrix::from_rows(rows);
}

DataMatrix gaussian_batch(std::size_t n_inliers, std::size_t n_anomalies,
                          std::size_t dim, double shift, Rng& rng) {
  std::vector<int> labels(n_inliers + n_anomalies, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(n_inliers), labels.end(), 1);
  rng.shuffle(labels);
  std::vector<std::vector<double>> rows(labels.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = gaussian_row(dim, labels[i] ? shift : 0.0, rng);
  }
  return assemble(std::move(rows), std::move(labels));
}

CorrelatedGaussian make_correlated_gaussian(std::size_t dim, double rho) {
  if (dim < 2 || !(std::fabs(rho) < 1.0)) {
    throw Error(ErrorCode::kInvalidSpec, "correlated Gaussian needs dim >= 2, |rho| < 1");
  }
  CorrelatedGaussian g;
  g.dim = dim;
  g.rho = rho;
  std::vector<double> cov(dim * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      cov[i * dim + j] = std::pow(rho, std::fabs(static_cast<double>(i) - static_cast<double>(j)));
    }
  }
  g.cholesky.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = cov[i * dim + j];
      for (std::size_t k = 0; k < j; ++k) s -= g.cholesky[i * dim + k] * g.cholesky[j * dim + k];
      g.cholesky[i * dim + j] = i == j ? std::sqrt(s) : s / g.cholesky[j * dim + j];
    }
  }
  // Power iteration; S is positive definite with a simple top eigenvalue.
  std::vector<double> v(dim, 1.0);
  normalize(v);
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    std::vector<double> next(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) next[i] += cov[i * dim + j] * v[j];
    }
    const double l = std::sqrt(std::inner_product(next.begin(), next.end(), next.begin(), 0.0));
    normalize(next);
    double delta = 0.0;
    for (std::size_t i = 0; i < dim; ++i) delta = std::max(delta, std::fabs(next[i] - v[i]));
    v = std::move(next);
    lambda = l;
    if (delta < 1e-15) break;
  }
  g.pc1 = v;
  g.pc1_sd = std::sqrt(lambda);
  // Gram-Schmidt of e_0 against pc1.
  std::vector<double> u(dim, 0.0);
  u[0] = 1.0;
  for (std::size_t i = 0; i < dim; ++i) u[i] -= v[0] * v[i];
  normalize(u);
  g.orthogonal = std::move(u);
  return g;
}

std::vector<double> CorrelatedGaussian::sample(Rng& rng) const {
  std::vector<double> z(dim);
  for (double& v : z) v = rng.normal();
  std::vector<double> x(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t k = 0; k <= i; ++k) x[i] += cholesky[i * dim + k] * z[k];
  }
  return x;
}

double CorrelatedGaussian::projection(std::span<const double> x) const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim; ++i) t += pc1[i] * x[i];
  return t / pc1_sd;
}

DataMatrix correlated_inliers(const CorrelatedGaussian& g, std::size_t n,
                              Rng& rng) {
  std::vector<std::vector<double>> rows(n);
  for (auto& r : rows) r = g.sample(rng);
  return DataMatrix::from_rows(rows);
}

double tilt_probability(const CorrelatedGaussian& g, double beta, double center,
                        std::span<const double> x) {
  return sigmoid(beta * (g.projection(x) - center));
}

DataMatrix tilted_batch(const CorrelatedGaussian& g, std::size_t n_inliers,
                        std::size_t n_anomalies, double beta, double center,
                        double anomaly_offset, Rng& rng) {
  std::vector<int> labels(n_inliers + n_anomalies, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(n_inliers), labels.end(), 1);
  rng.shuffle(labels);
  std::vector<std::vector<double>> rows(labels.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> x;
    do {
      x = g.sample(rng);
    } while (!rng.bernoulli(tilt_probability(g, beta, center, x)));
    if (labels[i]) {
      // Random sign, so no single linear direction separates anomalies.
      const double offset = rng.bernoulli(0.5) ? anomaly_offset : -anomaly_offset;
      for (std::size_t j = 0; j < g.dim; ++j) x[j] += offset * g.orthogonal[j];
    }
    rows[i] = std::move(x);
  }
  return assemble(std::move(rows), std::move(labels));
}

DataMatrix segmented_stream(
    std::span<const std::pair<std::size_t, double>> segments, std::size_t dim,
    double shift, Rng& rng) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (const auto& [length, rate] : segments) {
    for (std::size_t t = 0; t < length; ++t) {
      const int label = rng.bernoulli(rate) ? 1 : 0;
      rows.push_back(gaussian_row(dim, label ? shift : 0.0, rng));
      labels.push_back(label);
    }
  }
  return assemble(std::move(rows), std::move(labels));
}

DataMatrix ramp_stream(std::size_t n_before, std::size_t n_after,
                       std::size_t dim, double shift, Rng& rng) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t t = 0; t < n_before + n_after; ++t) {
    double rate = 0.0;
    if (t >= n_before) {
      rate = static_cast<double>(t - n_before + 1) / static_cast<double>(n_after);
    }
    const int label = rng.bernoulli(rate) ? 1 : 0;
    rows.push_back(gaussian_row(dim, label ? shift : 0.0, rng));
    labels.push_back(label);
  }
  return assemble(std::move(rows), std::move(labels));
}

std::vector<double> uniform_stream(std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (double& p : out) p = rng.uniform_open();
  return out;
}

}  // namespace confad::synthetic

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

// Exchangeability martingales over streams of p-values and the alarm
// statistics built on them. All evidence is kept in log scale.

#ifndef CONFAD_MARTINGALES_HPP_
#define CONFAD_MARTINGALES_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confad/core.hpp"

namespace confad::martingales {

enum class MartingaleKind { kPower, kSimpleMixture, kSimpleJumper };

std::string_view to_string(MartingaleKind kind);

struct MartingaleSpec {
  MartingaleKind kind = MartingaleKind::kPower;
  double epsilon = 0.5;          // power
  std::size_t grid_size = 1000;  // mixture quadrature intervals, even
  std::vector<double> jumper_states = {-1.0, 0.0, 1.0};
  double jump_rate = 0.01;

  static MartingaleSpec power(double epsilon);
  static MartingaleSpec simple_mixture(std::size_t grid_size = 1000);
  static MartingaleSpec simple_jumper(std::vector<double> states = {-1.0, 0.0, 1.0},
                                      double jump_rate = 0.01);

  void validate() const;
};

enum class AlarmKind : std::uint8_t {
  kVille = 1,
  kRestartedVille = 2,
  kCusum = 4,
  kSr = 8,
};

std::string_view to_string(AlarmKind kind);

inline constexpr AlarmKind kAllAlarms[] = {AlarmKind::kVille,
                                           AlarmKind::kRestartedVille,
                                           AlarmKind::kCusum, AlarmKind::kSr};

// Small bit set over AlarmKind.
struct AlarmSet {
  std::uint8_t bits = 0;

  bool contains(AlarmKind kind) const noexcept {
    return (bits & static_cast<std::uint8_t>(kind)) != 0;
  }
  void insert(AlarmKind kind) noexcept { bits |= static_cast<std::uint8_t>(kind); }
  bool empty() const noexcept { return bits == 0; }
  bool operator==(const AlarmSet&) const = default;
};

// ';'-joined alarm names, empty for no alarms.
std::string format_alarms(AlarmSet alarms);

struct AlarmConfig {
  std::optional<double> ville_threshold;
  std::optional<double> restarted_ville_threshold;
  std::optional<double> cusum_threshold;
  std::optional<double> sr_threshold;

  void validate() const;
};

struct AlarmEvent {
  std::size_t step = 0;
  AlarmKind kind = AlarmKind::kVille;
  bool operator==(const AlarmEvent&) const = default;
};

inline constexpr double kPValueFloor = 1e-12;

struct MartingaleState {
  std::size_t step = 0;
  double log_m = 0.0;
  double log_m_restarted = 0.0;
  double log_min_m = 0.0;
  double log_sr = -std::numeric_limits<double>::infinity();
  // Jumper: per-state capital shares, normalized to sum to one.
  std::vector<double> jumper_capitals;
  // Mixture: running sum of log p and log of the current integral.
  double mixture_log_p_sum = 0.0;
  double mixture_log_integral = 0.0;
  AlarmSet triggered_alarms;
  std::vector<AlarmEvent> alarm_history;
  std::size_t floored_p_values = 0;

  double martingale() const;
  double cusum() const;
  double log_cusum() const { return log_m - log_min_m; }
  double sr() const;
};

MartingaleState init(const MartingaleSpec& spec, const AlarmConfig& alarms);

// Multiplicative factor f_n the next p-value would apply.
double step_factor(const MartingaleSpec& spec, const MartingaleState& state,
                   double p);
double log_step_factor(const MartingaleSpec& spec, const MartingaleState& state,
                       double p);

MartingaleState update(const MartingaleSpec& spec, MartingaleState state,
                       double p, const AlarmConfig& alarms);

struct TrajectoryPoint {
  std::size_t step = 0;
  double log_m = 0.0;
  double log_m_restarted = 0.0;
  double log_cusum = 0.0;
  double log_sr = 0.0;
  AlarmSet alarms;
};

struct StreamResult {
  MartingaleState state;
  std::vector<TrajectoryPoint> trajectory;
};

StreamResult run_stream(const MartingaleSpec& spec, const AlarmConfig& alarms,
                        std::span<const double> p_stream);

// exp(log_value) printed without overflow; huge values use a decimal
// exponent, e.g. 3.2e+512.
std::string format_log_value(double log_value);

// Columns: step, martingale, restarted_martingale, cusum, sr, ville_threshold,
// restarted_ville_threshold, log_martingale, log_restarted_martingale,
// log_cusum, log_sr, alarms.
void write_trajectory_csv(std::ostream& os,
                          std::span<const TrajectoryPoint> trajectory,
                          const AlarmConfig& alarms);

// Columns: step, alarm.
void write_alarm_log_csv(std::ostream& os, std::span<const AlarmEvent> history);

}  // namespace confad::martingales

#endif  // CONFAD_MARTINGALES_HPP_

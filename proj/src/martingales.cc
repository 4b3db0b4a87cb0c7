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

#include "confad/martingales.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

namespace confad::martingales {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double floor_p(double p, bool* floored) {
  if (std::isnan(p)) {
    throw Error(ErrorCode::kInvalidData, "p-value stream contains NaN");
  }
  *floored = p < kPValueFloor;
  return std::clamp(p, kPValueFloor, 1.0);
}

// log of the composite Simpson estimate of
// int_0^1 exp(n ln e + (e - 1) L) de, n >= 1.
double mixture_log_integral(std::size_t grid, std::size_t n, double log_p_sum) {
  thread_local std::vector<double> log_eps;
  if (log_eps.size() != grid + 1) {
    log_eps.resize(grid + 1);
    for (std::size_t k = 0; k <= grid; ++k) {
      log_eps[k] = std::log(static_cast<double>(k) / static_cast<double>(grid));
    }
  }
  const double h = 1.0 / static_cast<double>(grid);
  const double dn = static_cast<double>(n);
  // The e = 0 endpoint contributes 0.
  std::vector<double> terms(grid);
  double hi = kNegInf;
  for (std::size_t k = 1; k <= grid; ++k) {
    const double eps = static_cast<double>(k) * h;
    const double weight = (k == grid) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    const double t = std::log(weight) + dn * log_eps[k] + (eps - 1.0) * log_p_sum;
    terms[k - 1] = t;
    hi = std::max(hi, t);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - hi);
  return hi + std::log(sum) + std::log(h / 3.0);
}

struct Advance {
  double log_factor = 0.0;
  std::vector<double> capitals;
  double mixture_log_integral = 0.0;
};

Advance advance(const MartingaleSpec& spec, const MartingaleState& state,
                double p) {
  Advance out;
  switch (spec.kind) {
    case MartingaleKind::kPower:
      out.log_factor = std::log(spec.epsilon) + (spec.epsilon - 1.0) * std::log(p);
      break;
    case MartingaleKind::kSimpleMixture: {
      out.mixture_log_integral = mixture_log_integral(
          spec.grid_size, state.step + 1, state.mixture_log_p_sum + std::log(p));
      out.log_factor = out.mixture_log_integral - state.mixture_log_integral;
      break;
    }
    case MartingaleKind::kSimpleJumper: {
      const std::vector<double>& c = state.jumper_capitals;
      const double k = static_cast<double>(c.size());
      const double total = std::accumulate(c.begin(), c.end(), 0.0);
      out.capitals.resize(c.size());
      double next = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        const double mixed = (1.0 - spec.jump_rate) * c[i] + spec.jump_rate * total / k;
        out.capitals[i] = mixed * (1.0 + spec.jumper_states[i] * (p - 0.5));
        next += out.capitals[i];
      }
      out.log_factor = std::log(next / total);
      for (double& v : out.capitals) v /= next;
      break;
    }
  }
  return out;
}

void check_threshold(const std::optional<double>& value, double lower,
                     const char* name) {
  if (value && !(*value > lower && std::isfinite(*value))) {
    throw Error(ErrorCode::kInvalidSpec,
                std::string(name) + " must exceed " + std::to_string(lower));
  }
}

}  // namespace

std::string_view to_string(MartingaleKind kind) {
  switch (kind) {
    case MartingaleKind::kPower:
      return "power";
    case MartingaleKind::kSimpleMixture:
      return "simple_mixture";
    case MartingaleKind::kSimpleJumper:
      return "simple_jumper";
  }
  return "unknown";
}

std::string_view to_string(AlarmKind kind) {
  switch (kind) {
    case AlarmKind::kVille:
      return "ville";
    case AlarmKind::kRestartedVille:
      return "restarted_ville";
    case AlarmKind::kCusum:
      return "cusum";
    case AlarmKind::kSr:
      return "sr";
  }
  return "unknown";
}

std::string format_alarms(AlarmSet alarms) {
  std::string out;
  for (AlarmKind kind : kAllAlarms) {
    if (!alarms.contains(kind)) continue;
    if (!out.empty()) out += ';';
    out += to_string(kind);
  }
  return out;
}

MartingaleSpec MartingaleSpec::power(double epsilon) {
  MartingaleSpec spec;
  spec.kind = MartingaleKind::kPower;
  spec.epsilon = epsilon;
  return spec;
}

MartingaleSpec MartingaleSpec::simple_mixture(std::size_t grid_size) {
  MartingaleSpec spec;
  spec.kind = MartingaleKind::kSimpleMixture;
  spec.grid_size = grid_size;
  return spec;
}

MartingaleSpec MartingaleSpec::simple_jumper(std::vector<double> states,
                                             double jump_rate) {
  MartingaleSpec spec;
  spec.kind = MartingaleKind::kSimpleJumper;
  spec.jumper_states = std::move(states);
  spec.jump_rate = jump_rate;
  return spec;
}

void MartingaleSpec::validate() const {
  switch (kind) {
    case MartingaleKind::kPower:
      if (!(epsilon > 0.0 && epsilon <= 1.0)) {
        throw Error(ErrorCode::kInvalidSpec, "power epsilon must lie in (0, 1]");
      }
      break;
    case MartingaleKind::kSimpleMixture:
      if (grid_size < 2 || grid_size % 2 != 0) {
        throw Error(ErrorCode::kInvalidSpec,
                    "mixture grid_size must be a positive even integer");
      }
      break;
    case MartingaleKind::kSimpleJumper:
      if (jumper_states.empty()) {
        throw Error(ErrorCode::kInvalidSpec, "jumper needs at least one state");
      }
      for (std::size_t i = 0; i < jumper_states.size(); ++i) {
        const double s = jumper_states[i];
        if (!(s >= -1.0 && s <= 1.0)) {
          throw Error(ErrorCode::kInvalidSpec, "jumper states must lie in [-1, 1]");
        }
        if (i > 0 && !(s > jumper_states[i - 1])) {
          throw Error(ErrorCode::kInvalidSpec,
                      "jumper states must be strictly increasing");
        }
      }
      if (!(jump_rate > 0.0 && jump_rate < 1.0)) {
        throw Error(ErrorCode::kInvalidSpec, "jump_rate must lie in (0, 1)");
      }
      break;
  }
}

void AlarmConfig::validate() const {
  check_threshold(ville_threshold, 1.0, "ville_threshold");
  check_threshold(restarted_ville_threshold, 1.0, "restarted_ville_threshold");
  check_threshold(cusum_threshold, 1.0, "cusum_threshold");
  check_threshold(sr_threshold, 0.0, "sr_threshold");
}

double MartingaleState::martingale() const { return std::exp(log_m); }
double MartingaleState::cusum() const { return std::exp(log_cusum()); }
double MartingaleState::sr() const { return std::exp(log_sr); }

MartingaleState init(const MartingaleSpec& spec, const AlarmConfig& alarms) {
  spec.validate();
  alarms.validate();
  MartingaleState state;
  if (spec.kind == MartingaleKind::kSimpleJumper) {
    state.jumper_capitals.assign(spec.jumper_states.size(),
                                 1.0 / static_cast<double>(spec.jumper_states.size()));
  }
  return state;
}

double log_step_factor(const MartingaleSpec& spec, const MartingaleState& state,
                       double p) {
  bool floored = false;
  return advance(spec, state, floor_p(p, &floored)).log_factor;
}

double step_factor(const MartingaleSpec& spec, const MartingaleState& state,
                   double p) {
  return std::exp(log_step_factor(spec, state, p));
}

MartingaleState update(const MartingaleSpec& spec, MartingaleState state,
                       double p, const AlarmConfig& alarms) {
  bool floored = false;
  p = floor_p(p, &floored);
  if (floored) ++state.floored_p_values;

  Advance adv = advance(spec, state, p);
  const double lf = adv.log_factor;
  if (spec.kind == MartingaleKind::kSimpleJumper) {
    state.jumper_capitals = std::move(adv.capitals);
  } else if (spec.kind == MartingaleKind::kSimpleMixture) {
    state.mixture_log_p_sum += std::log(p);
    state.mixture_log_integral = adv.mixture_log_integral;
  }

  ++state.step;
  state.log_m += lf;
  state.log_min_m = std::min(state.log_min_m, state.log_m);
  state.log_sr = log_add(state.log_sr, 0.0) + lf;
  state.log_m_restarted += lf;

  const AlarmSet previous = state.triggered_alarms;
  AlarmSet now;
  if (alarms.ville_threshold && state.log_m >= std::log(*alarms.ville_threshold)) {
    now.insert(AlarmKind::kVille);
    const bool seen = std::any_of(
        state.alarm_history.begin(), state.alarm_history.end(),
        [](const AlarmEvent& e) { return e.kind == AlarmKind::kVille; });
    if (!seen) state.alarm_history.push_back({state.step, AlarmKind::kVille});
  }
  if (alarms.restarted_ville_threshold &&
      state.log_m_restarted >= std::log(*alarms.restarted_ville_threshold)) {
    now.insert(AlarmKind::kRestartedVille);
    state.alarm_history.push_back({state.step, AlarmKind::kRestartedVille});
    state.log_m_restarted = 0.0;
  }
  if (alarms.cusum_threshold &&
      state.log_cusum() >= std::log(*alarms.cusum_threshold)) {
    now.insert(AlarmKind::kCusum);
    if (!previous.contains(AlarmKind::kCusum)) {
      state.alarm_history.push_back({state.step, AlarmKind::kCusum});
    }
  }
  if (alarms.sr_threshold && state.log_sr >= std::log(*alarms.sr_threshold)) {
    now.insert(AlarmKind::kSr);
    if (!previous.contains(AlarmKind::kSr)) {
      state.alarm_history.push_back({state.step, AlarmKind::kSr});
    }
  }
  state.triggered_alarms = now;
  return state;
}

StreamResult run_stream(const MartingaleSpec& spec, const AlarmConfig& alarms,
                        std::span<const double> p_stream) {
  StreamResult out;
  out.state = init(spec, alarms);
  out.trajectory.reserve(p_stream.size());
  for (double p : p_stream) {
    out.state = update(spec, std::move(out.state), p, alarms);
    TrajectoryPoint point;
    point.step = out.state.step;
    point.log_m = out.state.log_m;
    point.log_m_restarted = out.state.log_m_restarted;
    point.log_cusum = out.state.log_cusum();
    point.log_sr = out.state.log_sr;
    point.alarms = out.state.triggered_alarms;
    out.trajectory.push_back(point);
  }
  return out;
}

std::string format_log_value(double log_value) {
  char buf[64];
  if (log_value == kNegInf) return "0";
  if (log_value < 700.0) {
    std::snprintf(buf, sizeof buf, "%.12g", std::exp(log_value));
    return buf;
  }
  const double e10 = log_value / std::log(10.0);
  double exponent = std::floor(e10);
  double mantissa = std::pow(10.0, e10 - exponent);
  if (mantissa >= 10.0) {
    mantissa /= 10.0;
    exponent += 1.0;
  }
  std::snprintf(buf, sizeof buf, "%.12ge+%.0f", mantissa, exponent);
  return buf;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string threshold_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

void write_trajectory_csv(std::ostream& os,
                          std::span<const TrajectoryPoint> trajectory,
                          const AlarmConfig& alarms) {
  os << "step,martingale,restarted_martingale,cusum,sr,ville_threshold,"
        "restarted_ville_threshold,log_martingale,log_restarted_martingale,"
        "log_cusum,log_sr,alarms\n";
  const std::string ville = threshold_cell(alarms.ville_threshold);
  const std::string restarted = threshold_cell(alarms.restarted_ville_threshold);
  for (const TrajectoryPoint& t : trajectory) {
    os << t.step << ',' << format_log_value(t.log_m) << ','
       << format_log_value(t.log_m_restarted) << ','
       << format_log_value(t.log_cusum) << ',' << format_log_value(t.log_sr)
       << ',' << ville << ',' << restarted << ',' << format_double(t.log_m)
       << ',' << format_double(t.log_m_restarted) << ','
       << format_double(t.log_cusum) << ',' << format_double(t.log_sr) << ','
       << format_alarms(t.alarms) << '\n';
  }
}

void write_alarm_log_csv(std::ostream& os, std::span<const AlarmEvent> history) {
  os << "step,alarm\n";
  for (const AlarmEvent& e : history) os << e.step << ',' << to_string(e.kind) << '\n';
}

}  // namespace confad::martingales

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

#include "confad/io/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "confad/io/csv.hpp"

namespace confad::io {

namespace {

using detectors::KnnAggregation;
using detectors::ScorerKind;
using estimation::AdjustmentMethod;
using martingales::MartingaleKind;
using resampling::Aggregation;
using resampling::Mode;
using resampling::StrategyKind;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Error bad_value(const std::string& key, const std::string& value,
                const std::string& expected) {
  return Error(ErrorCode::kInvalidConfig,
               "key '" + key + "': '" + value + "' is not " + expected);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() ||
      !std::isfinite(out)) {
    throw bad_value(key, v, "a finite number");
  }
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw bad_value(key, v, "a nonnegative integer");
  }
  return out;
}

std::optional<double> parse_optional_double(const std::string& key,
                                            const std::string& v,
                                            const char* none_word) {
  if (v == none_word) return std::nullopt;
  return parse_double(key, v);
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

template <typename E>
E parse_enum(const std::string& key, const std::string& v,
             const std::vector<std::pair<std::string, E>>& table) {
  std::string expected;
  for (const auto& [name, value] : table) {
    if (name == v) return value;
    expected += (expected.empty() ? "" : "|") + name;
  }
  throw bad_value(key, v, "one of " + expected);
}

template <typename E>
std::string enum_name(E value, const std::vector<std::pair<std::string, E>>& table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

const std::vector<std::pair<std::string, ScorerKind>> kScorers = {
    {"isolation_forest", ScorerKind::kIsolationForest},
    {"knn", ScorerKind::kKnnDistance}};
const std::vector<std::pair<std::string, KnnAggregation>> kKnnAggregations = {
    {"kth", KnnAggregation::kKth}, {"mean", KnnAggregation::kMean}};
const std::vector<std::pair<std::string, StrategyKind>> kStrategies = {
    {"split", StrategyKind::kSplit},
    {"cv", StrategyKind::kCrossValidation},
    {"jackknife", StrategyKind::kJackknife},
    {"bootstrap", StrategyKind::kJackknifeBootstrap}};
const std::vector<std::pair<std::string, Mode>> kModes = {
    {"plus", Mode::kPlus}, {"single", Mode::kSingleModel}};
const std::vector<std::pair<std::string, Aggregation>> kAggregations = {
    {"median", Aggregation::kMedian}, {"mean", Aggregation::kMean}};
const std::vector<std::pair<std::string, Estimation>> kRegimes = {
    {"empirical", Estimation::kEmpirical},
    {"conditional", Estimation::kConditionalEmpirical},
    {"probabilistic", Estimation::kProbabilistic}};
const std::vector<std::pair<std::string, AdjustmentMethod>> kMethods = {
    {"simes", AdjustmentMethod::kSimes},
    {"mc", AdjustmentMethod::kMonteCarlo},
    {"asymptotic", AdjustmentMethod::kAsymptotic}};
const std::vector<std::pair<std::string, ShiftFamily>> kFamilies = {
    {"none", ShiftFamily::kNone},
    {"exponential_tilt", ShiftFamily::kExponentialTilt},
    {"logistic_tilt", ShiftFamily::kLogisticTilt}};
const std::vector<std::pair<std::string, MartingaleKind>> kMartingales = {
    {"power", MartingaleKind::kPower},
    {"simple_mixture", MartingaleKind::kSimpleMixture},
    {"simple_jumper", MartingaleKind::kSimpleJumper}};
const std::vector<std::pair<std::string, std::string>> kWeightings = {
    {"none", "none"}, {"uniform", "uniform"}, {"logistic", "logistic"},
    {"oracle", "oracle"}};

std::string optional_text(const std::optional<double>& v, const char* none_word) {
  return v ? format_double(*v) : std::string(none_word);
}

std::string list_text(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

// Weight options live in the pipeline config only when weighting is on, so
// the parser keeps them aside until the end.
struct Pending {
  double cap_factor = 20.0;
  std::optional<double> cap;
};

void finish(RunConfig& c, const Pending& pending) {
  pipeline::PipelineConfig& p = c.pipeline;
  p.weighting.reset();
  if (c.weighting != "none") {
    pipeline::WeightingSpec w;
    w.options.cap_factor = pending.cap_factor;
    w.options.absolute_cap = pending.cap;
    if (c.weighting == "uniform") {
      w.kind = weighting::WeightKind::kUniform;
    } else if (c.weighting == "logistic") {
      w.kind = weighting::WeightKind::kLogistic;
    } else {
      w.kind = weighting::WeightKind::kOracle;
      if (c.shift_family == ShiftFamily::kNone) {
        throw Error(ErrorCode::kInvalidConfig,
                    "weighting = oracle needs a shift_family");
      }
      w.options.ratio =
          make_shift_ratio(c.shift_family, c.shift_coefficients, c.shift_intercept);
    }
    p.weighting = std::move(w);
  }
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidAlpha, "alpha must lie in (0, 1)");
  }
  p.validate();
  c.martingale.validate();
  c.alarms.validate();
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  c.pipeline.scorer = detectors::ScorerSpec::isolation_forest();
  c.pipeline.strategy = resampling::StrategySpec::split(0.5);
  // Split ignores the mode; the resampling strategies default to their + form.
  c.pipeline.strategy.mode = resampling::Mode::kPlus;
  c.pipeline.estimation = estimation::EstimationSpec::empirical();
  c.pipeline.seed = RandomSeed{0};
  c.alarms.ville_threshold = 100.0;
  c.alarms.restarted_ville_threshold = 100.0;
  return c;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c = default_run_config();
  Pending pending;
  auto& sc = c.pipeline.scorer;
  auto& st = c.pipeline.strategy;
  auto& es = c.pipeline.estimation;
  auto& mg = c.martingale;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"seed", [&](auto& k, auto& v) { c.pipeline.seed = RandomSeed{parse_size(k, v)}; }},
      {"alpha", [&](auto& k, auto& v) { c.alpha = parse_double(k, v); }},
      {"scorer", [&](auto& k, auto& v) { sc.kind = parse_enum(k, v, kScorers); }},
      {"n_trees", [&](auto& k, auto& v) { sc.forest.n_trees = parse_size(k, v); }},
      {"subsample_size",
       [&](auto& k, auto& v) { sc.forest.subsample_size = parse_size(k, v); }},
      {"max_depth",
       [&](auto& k, auto& v) {
         if (v == "auto") {
           sc.forest.max_depth.reset();
         } else {
           sc.forest.max_depth = parse_size(k, v);
         }
       }},
      {"knn_k", [&](auto& k, auto& v) { sc.knn.k = parse_size(k, v); }},
      {"knn_aggregation",
       [&](auto& k, auto& v) { sc.knn.aggregation = parse_enum(k, v, kKnnAggregations); }},
      {"strategy", [&](auto& k, auto& v) { st.kind = parse_enum(k, v, kStrategies); }},
      {"n_calib",
       [&](auto& k, auto& v) {
         if (v.find_first_of(".eE") != std::string::npos) {
           st.n_calib = parse_double(k, v);
         } else {
           st.n_calib = parse_size(k, v);
         }
       }},
      {"folds", [&](auto& k, auto& v) { st.folds = parse_size(k, v); }},
      {"n_bootstraps", [&](auto& k, auto& v) { st.n_bootstraps = parse_size(k, v); }},
      {"mode", [&](auto& k, auto& v) { st.mode = parse_enum(k, v, kModes); }},
      {"aggregation",
       [&](auto& k, auto& v) { st.aggregation = parse_enum(k, v, kAggregations); }},
      {"estimation", [&](auto& k, auto& v) { es.regime = parse_enum(k, v, kRegimes); }},
      {"smoothed",
       [&](auto& k, auto& v) {
         if (v == "auto") {
           es.smoothed = false;
           c.smoothed_explicit = false;
           return;
         }
         es.smoothed = parse_enum<bool>(k, v, {{"true", true}, {"false", false}});
         c.smoothed_explicit = true;
       }},
      {"method", [&](auto& k, auto& v) { es.method = parse_enum(k, v, kMethods); }},
      {"delta", [&](auto& k, auto& v) { es.delta = parse_double(k, v); }},
      {"bandwidth",
       [&](auto& k, auto& v) { es.bandwidth = parse_optional_double(k, v, "auto"); }},
      {"weighting",
       [&](auto& k, auto& v) { c.weighting = parse_enum(k, v, kWeightings); }},
      {"weight_cap_factor",
       [&](auto& k, auto& v) { pending.cap_factor = parse_double(k, v); }},
      {"weight_cap",
       [&](auto& k, auto& v) { pending.cap = parse_optional_double(k, v, "none"); }},
      {"shift_family",
       [&](auto& k, auto& v) { c.shift_family = parse_enum(k, v, kFamilies); }},
      {"shift_coefficients",
       [&](auto& k, auto& v) { c.shift_coefficients = parse_list(k, v); }},
      {"shift_intercept",
       [&](auto& k, auto& v) { c.shift_intercept = parse_double(k, v); }},
      {"martingale", [&](auto& k, auto& v) { mg.kind = parse_enum(k, v, kMartingales); }},
      {"epsilon", [&](auto& k, auto& v) { mg.epsilon = parse_double(k, v); }},
      {"grid_size", [&](auto& k, auto& v) { mg.grid_size = parse_size(k, v); }},
      {"jumper_states", [&](auto& k, auto& v) { mg.jumper_states = parse_list(k, v); }},
      {"jump_rate", [&](auto& k, auto& v) { mg.jump_rate = parse_double(k, v); }},
      {"ville_threshold",
       [&](auto& k, auto& v) {
         c.alarms.ville_threshold = parse_optional_double(k, v, "none");
       }},
      {"restarted_ville_threshold",
       [&](auto& k, auto& v) {
         c.alarms.restarted_ville_threshold = parse_optional_double(k, v, "none");
       }},
      {"cusum_threshold",
       [&](auto& k, auto& v) {
         c.alarms.cusum_threshold = parse_optional_double(k, v, "none");
       }},
      {"sr_threshold",
       [&](auto& k, auto& v) { c.alarms.sr_threshold = parse_optional_double(k, v, "none"); }},
  };

  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    it->second(key, value);
  }
  finish(c, pending);
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  return parse_config(read_file(path));
}

std::string to_config_text(const RunConfig& c) {
  const auto& sc = c.pipeline.scorer;
  const auto& st = c.pipeline.strategy;
  const auto& es = c.pipeline.estimation;
  const auto& mg = c.martingale;
  double cap_factor = 20.0;
  std::optional<double> cap;
  if (c.pipeline.weighting) {
    cap_factor = c.pipeline.weighting->options.cap_factor;
    cap = c.pipeline.weighting->options.absolute_cap;
  }
  std::ostringstream os;
  os << "seed = " << c.pipeline.seed.value << '\n'
     << "alpha = " << format_double(c.alpha) << '\n'
     << "scorer = " << enum_name(sc.kind, kScorers) << '\n'
     << "n_trees = " << sc.forest.n_trees << '\n'
     << "subsample_size = " << sc.forest.subsample_size << '\n'
     << "max_depth = "
     << (sc.forest.max_depth ? std::to_string(*sc.forest.max_depth) : "auto") << '\n'
     << "knn_k = " << sc.knn.k << '\n'
     << "knn_aggregation = " << enum_name(sc.knn.aggregation, kKnnAggregations) << '\n'
     << "strategy = " << enum_name(st.kind, kStrategies) << '\n';
  if (const auto* n = std::get_if<std::size_t>(&st.n_calib)) {
    os << "n_calib = " << *n << '\n';
  } else {
    std::string f = format_double(std::get<double>(st.n_calib));
    if (f.find_first_of(".eE") == std::string::npos) f += ".0";
    os << "n_calib = " << f << '\n';
  }
  os << "folds = " << st.folds << '\n'
     << "n_bootstraps = " << st.n_bootstraps << '\n'
     << "mode = " << enum_name(st.mode, kModes) << '\n'
     << "aggregation = " << enum_name(st.aggregation, kAggregations) << '\n'
     << "estimation = " << enum_name(es.regime, kRegimes) << '\n'
     << "smoothed = "
     << (c.smoothed_explicit ? (es.smoothed ? "true" : "false") : "auto") << '\n'
     << "method = " << enum_name(es.method, kMethods) << '\n'
     << "delta = " << format_double(es.delta) << '\n'
     << "bandwidth = " << optional_text(es.bandwidth, "auto") << '\n'
     << "weighting = " << c.weighting << '\n'
     << "weight_cap_factor = " << format_double(cap_factor) << '\n'
     << "weight_cap = " << optional_text(cap, "none") << '\n'
     << "shift_family = " << enum_name(c.shift_family, kFamilies) << '\n'
     << "shift_coefficients = " << list_text(c.shift_coefficients) << '\n'
     << "shift_intercept = " << format_double(c.shift_intercept) << '\n'
     << "martingale = " << enum_name(mg.kind, kMartingales) << '\n'
     << "epsilon = " << format_double(mg.epsilon) << '\n'
     << "grid_size = " << mg.grid_size << '\n'
     << "jumper_states = " << list_text(mg.jumper_states) << '\n'
     << "jump_rate = " << format_double(mg.jump_rate) << '\n'
     << "ville_threshold = " << optional_text(c.alarms.ville_threshold, "none") << '\n'
     << "restarted_ville_threshold = "
     << optional_text(c.alarms.restarted_ville_threshold, "none") << '\n'
     << "cusum_threshold = " << optional_text(c.alarms.cusum_threshold, "none") << '\n'
     << "sr_threshold = " << optional_text(c.alarms.sr_threshold, "none") << '\n';
  return os.str();
}

weighting::RatioFunction make_shift_ratio(ShiftFamily family,
                                          std::vector<double> coefficients,
                                          double intercept) {
  if (family == ShiftFamily::kNone) {
    throw Error(ErrorCode::kInvalidConfig, "no shift family");
  }
  if (coefficients.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "shift_coefficients must be non-empty");
  }
  return [family, coefficients = std::move(coefficients),
          intercept](std::span<const double> x) {
    if (x.size() != coefficients.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "shift_coefficients has " + std::to_string(coefficients.size()) +
                      " entries, data has " + std::to_string(x.size()) + " columns");
    }
    double eta = intercept;
    for (std::size_t j = 0; j < x.size(); ++j) eta += coefficients[j] * x[j];
    if (family == ShiftFamily::kExponentialTilt) return std::exp(eta);
    return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta))
                      : std::exp(eta) / (1.0 + std::exp(eta));
  };
}

}  // namespace confad::io

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

#include "confad/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "confad/decisions.hpp"
#include "confad/estimation.hpp"
#include "confad/martingales.hpp"
#include "confad/pipeline.hpp"
#include "confad/synthetic.hpp"

namespace confad::experiments {

namespace {

std::size_t anomaly_count(std::size_t test_size, double rate) {
  return static_cast<std::size_t>(std::lround(static_cast<double>(test_size) * rate));
}

// Fills records[level] for one (trial, method) with BH at every level.
void score_levels(const PValueVector& p, const DataMatrix& test,
                  std::span<const double> levels, bool weighted,
                  std::vector<TrialRecord>& out, const std::string& method,
                  std::size_t train_size, std::size_t trial, double min_gap) {
  const std::vector<int>& labels = *test.labels();
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const DecisionSet d =
        weighted ? decisions::weighted_false_discovery_control(p, levels[l])
                 : decisions::benjamini_hochberg(p, levels[l]);
    TrialRecord& r = out[l];
    r.method = method;
    r.train_size = train_size;
    r.level = levels[l];
    r.trial = trial;
    r.fdr = decisions::false_discovery_rate(labels, d);
    r.power = decisions::statistical_power(labels, d);
    r.n_flagged = d.count();
    r.min_gap_vs_marginal = min_gap;
  }
}

// slots[task][method][level] flattened as (outer, method, level, trial).
std::vector<TrialRecord> flatten(
    const std::vector<std::vector<std::vector<TrialRecord>>>& slots,
    std::size_t outer, std::size_t trials) {
  std::vector<TrialRecord> out;
  if (slots.empty()) return out;
  const std::size_t methods = slots[0].size();
  const std::size_t levels = methods ? slots[0][0].size() : 0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t m = 0; m < methods; ++m) {
      for (std::size_t l = 0; l < levels; ++l) {
        for (std::size_t t = 0; t < trials; ++t) {
          out.push_back(slots[o * trials + t][m][l]);
        }
      }
    }
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<TrialRecord> strategy_sweep(const StrategySweepParams& params) {
  struct Method {
    std::string name;
    resampling::StrategySpec strategy;
  };
  const std::vector<Method> methods = {
      {"split", resampling::StrategySpec::split(params.split_fraction)},
      {"cv_plus", resampling::StrategySpec::cross_validation(params.folds)},
      {"jab_plus", resampling::StrategySpec::bootstrap(params.bootstraps)},
  };
  const std::size_t n_an = anomaly_count(params.test_size, params.anomaly_rate);
  const std::size_t tasks = params.train_sizes.size() * params.trials;
  std::vector<std::vector<std::vector<TrialRecord>>> slots(
      tasks, std::vector<std::vector<TrialRecord>>(
                 methods.size(), std::vector<TrialRecord>(params.levels.size())));

  parallel_for(tasks, [&](std::size_t task) {
    const std::size_t s = task / params.trials;
    const std::size_t trial = task % params.trials;
    const RandomSeed task_seed = split_seed(split_seed(params.seed, s), trial);
    Rng rng(task_seed);
    const std::size_t n = params.train_sizes[s];
    const DataMatrix train = synthetic::gaussian_inliers(n, params.dim, rng);
    const DataMatrix test = synthetic::gaussian_batch(
        params.test_size - n_an, n_an, params.dim, params.shift, rng);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      pipeline::PipelineConfig config;
      config.scorer = detectors::ScorerSpec::isolation_forest();
      config.strategy = methods[m].strategy;
      config.estimation = estimation::EstimationSpec::empirical();
      config.seed = split_seed(task_seed, 100 + m);
      const pipeline::FittedPipeline fp = pipeline::fit(config, train);
      const PValueVector p = pipeline::compute_p_values(fp, test);
      score_levels(p, test, params.levels, false, slots[task][m], methods[m].name,
                   n, trial, std::numeric_limits<double>::quiet_NaN());
    }
  });
  return flatten(slots, params.train_sizes.size(), params.trials);
}

std::vector<TrialRecord> conditional(const ConditionalParams& params) {
  using estimation::AdjustmentMethod;
  const std::vector<std::pair<std::string, AdjustmentMethod>> adjusted = {
      {"simes", AdjustmentMethod::kSimes},
      {"mc", AdjustmentMethod::kMonteCarlo},
      {"asymptotic", AdjustmentMethod::kAsymptotic},
  };
  // The bands depend only on (n, delta), so they are shared by all trials.
  std::vector<estimation::AdjustmentTable> tables;
  for (std::size_t m = 0; m < adjusted.size(); ++m) {
    tables.push_back(estimation::build_adjustment(
        params.n_calib, params.delta, adjusted[m].second,
        split_seed(params.seed, 1000 + m), params.mc_draws));
  }
  const std::size_t n_an = anomaly_count(params.test_size, params.anomaly_rate);
  const std::size_t n_methods = adjusted.size() + 1;
  std::vector<std::vector<std::vector<TrialRecord>>> slots(
      params.trials, std::vector<std::vector<TrialRecord>>(
                         n_methods, std::vector<TrialRecord>(params.levels.size())));

  parallel_for(params.trials, [&](std::size_t trial) {
    const RandomSeed task_seed = split_seed(params.seed, trial);
    Rng rng(task_seed);
    const DataMatrix train = synthetic::gaussian_inliers(params.n_train, params.dim, rng);
    const DataMatrix test = synthetic::gaussian_batch(
        params.test_size - n_an, n_an, params.dim, params.shift, rng);
    pipeline::PipelineConfig config;
    config.scorer = detectors::ScorerSpec::knn_distance();
    config.strategy = resampling::StrategySpec::split(params.n_calib);
    config.estimation = estimation::EstimationSpec::empirical();
    config.seed = split_seed(task_seed, 100);
    const pipeline::FittedPipeline fp = pipeline::fit(config, train);
    const resampling::TestScores scores =
        resampling::test_score_matrix(fp.calibration, test);
    const PValueVector marginal = estimation::empirical_p_values(
        fp.calibration, scores, false, config.seed);
    score_levels(marginal, test, params.levels, false, slots[trial][0],
                 "marginal", params.n_train, trial,
                 std::numeric_limits<double>::quiet_NaN());
    for (std::size_t m = 0; m < adjusted.size(); ++m) {
      const PValueVector p =
          estimation::conditional_p_values(fp.calibration, scores, tables[m]);
      double gap = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < p.size(); ++j) {
        gap = std::min(gap, p.values[j] - marginal.values[j]);
      }
      score_levels(p, test, params.levels, false, slots[trial][m + 1],
                   adjusted[m].first, params.n_train, trial, gap);
    }
  });
  return flatten(slots, 1, params.trials);
}

std::vector<TrialRecord> shift(const ShiftParams& params) {
  const synthetic::CorrelatedGaussian g =
      synthetic::make_correlated_gaussian(params.dim, params.rho);
  const double beta = params.beta;
  const double center = params.tilt_center;
  weighting::WeightOptions oracle_options;
  oracle_options.ratio = [g, beta, center](std::span<const double> x) {
    return synthetic::tilt_probability(g, beta, center, x);
  };
  const std::vector<std::pair<std::string, pipeline::WeightingSpec>> methods = {
      {"uniform", {weighting::WeightKind::kUniform, {}}},
      {"oracle", {weighting::WeightKind::kOracle, oracle_options}},
      {"logistic", {weighting::WeightKind::kLogistic, {}}},
  };
  const std::size_t n_an = anomaly_count(params.test_size, params.anomaly_rate);
  std::vector<std::vector<std::vector<TrialRecord>>> slots(
      params.trials,
      std::vector<std::vector<TrialRecord>>(
          methods.size(), std::vector<TrialRecord>(params.levels.size())));

  parallel_for(params.trials, [&](std::size_t trial) {
    const RandomSeed task_seed = split_seed(params.seed, trial);
    Rng rng(task_seed);
    const DataMatrix train = synthetic::correlated_inliers(g, params.n_train, rng);
    const DataMatrix test = synthetic::tilted_batch(
        g, params.test_size - n_an, n_an, params.beta, params.tilt_center,
        params.anomaly_offset, rng);
    pipeline::PipelineConfig config;
    config.scorer = detectors::ScorerSpec::knn_distance();
    config.strategy = resampling::StrategySpec::split(params.n_calib);
    config.estimation = estimation::EstimationSpec::empirical();
    config.weighting = methods[0].second;
    config.seed = split_seed(task_seed, 100);
    pipeline::FittedPipeline fp = pipeline::fit(config, train);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      // Same calibration split for every weighting scheme.
      fp.config.weighting = methods[m].second;
      const PValueVector p = pipeline::compute_p_values(fp, test);
      score_levels(p, test, params.levels, true, slots[trial][m],
                   methods[m].first, params.n_train, trial,
                   std::numeric_limits<double>::quiet_NaN());
    }
  });
  return flatten(slots, 1, params.trials);
}

std::vector<NullStreamRecord> martingale_null(const MartingaleNullParams& params) {
  using martingales::MartingaleSpec;
  const std::vector<std::pair<std::string, MartingaleSpec>> kinds = {
      {"power", MartingaleSpec::power(params.epsilon)},
      {"simple_mixture", MartingaleSpec::simple_mixture()},
      {"simple_jumper", MartingaleSpec::simple_jumper()},
  };
  martingales::AlarmConfig alarms;
  alarms.ville_threshold = params.threshold;
  std::vector<std::vector<NullStreamRecord>> slots(
      params.streams, std::vector<NullStreamRecord>(kinds.size()));

  parallel_for(params.streams, [&](std::size_t trial) {
    Rng rng(split_seed(params.seed, trial));
    const std::vector<double> stream = synthetic::uniform_stream(params.length, rng);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const martingales::StreamResult r =
          martingales::run_stream(kinds[k].second, alarms, stream);
      NullStreamRecord& rec = slots[trial][k];
      rec.method = kinds[k].first;
      rec.trial = trial;
      rec.final_log_m = r.state.log_m;
      rec.max_log_m = 0.0;
      for (const auto& t : r.trajectory) rec.max_log_m = std::max(rec.max_log_m, t.log_m);
      for (const auto& e : r.state.alarm_history) {
        if (e.kind == martingales::AlarmKind::kVille) {
          rec.crossed = true;
          rec.first_crossing = e.step;
          break;
        }
      }
    }
  });
  std::vector<NullStreamRecord> out;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    for (std::size_t t = 0; t < params.streams; ++t) out.push_back(slots[t][k]);
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "quantile of nothing");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<SummaryRecord> summarize(std::span<const TrialRecord> records) {
  using Key = std::tuple<std::string, std::size_t, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<const TrialRecord*>> groups;
  for (const TrialRecord& r : records) {
    Key key{r.method, r.train_size, r.level};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<SummaryRecord> out;
  for (const Key& key : order) {
    const auto& group = groups[key];
    SummaryRecord s;
    s.method = std::get<0>(key);
    s.train_size = std::get<1>(key);
    s.level = std::get<2>(key);
    s.n_trials = group.size();
    std::vector<double> fdrs;
    double power = 0.0;
    for (const TrialRecord* r : group) {
      fdrs.push_back(r->fdr);
      power += r->power;
      if (!std::isnan(r->min_gap_vs_marginal)) {
        s.min_gap_vs_marginal = std::isnan(s.min_gap_vs_marginal)
                                    ? r->min_gap_vs_marginal
                                    : std::min(s.min_gap_vs_marginal, r->min_gap_vs_marginal);
      }
    }
    double fdr_sum = 0.0;
    for (double f : fdrs) fdr_sum += f;
    s.mean_fdr = fdr_sum / static_cast<double>(group.size());
    s.mean_power = power / static_cast<double>(group.size());
    s.fdr_q90 = quantile(std::move(fdrs), 0.9);
    out.push_back(std::move(s));
  }
  return out;
}

void write_trials_csv(std::ostream& os, std::span<const TrialRecord> records) {
  os << "method,train_size,level,trial,fdr,power,n_flagged,min_gap_vs_marginal\n";
  for (const TrialRecord& r : records) {
    os << r.method << ',' << r.train_size << ',' << format_double(r.level) << ','
       << r.trial << ',' << format_double(r.fdr) << ',' << format_double(r.power)
       << ',' << r.n_flagged << ',' << format_double(r.min_gap_vs_marginal) << '\n';
  }
}

void write_summary_csv(std::ostream& os, std::span<const SummaryRecord> records) {
  os << "method,train_size,level,n_trials,mean_fdr,fdr_q90,mean_power,"
        "min_gap_vs_marginal\n";
  for (const SummaryRecord& s : records) {
    os << s.method << ',' << s.train_size << ',' << format_double(s.level) << ','
       << s.n_trials << ',' << format_double(s.mean_fdr) << ','
       << format_double(s.fdr_q90) << ',' << format_double(s.mean_power) << ','
       << format_double(s.min_gap_vs_marginal) << '\n';
  }
}

void write_null_csv(std::ostream& os, std::span<const NullStreamRecord> records) {
  os << "method,trial,crossed,first_crossing,max_log_martingale,final_log_martingale\n";
  for (const NullStreamRecord& r : records) {
    os << r.method << ',' << r.trial << ',' << (r.crossed ? 1 : 0) << ','
       << r.first_crossing << ',' << format_double(r.max_log_m) << ','
       << format_double(r.final_log_m) << '\n';
  }
}

}  // namespace confad::experiments

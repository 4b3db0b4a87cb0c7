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

#include "confad/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "confad/decisions.hpp"
#include "confad/experiments.hpp"
#include "confad/io/config.hpp"
#include "confad/io/csv.hpp"
#include "confad/io/manifest.hpp"
#include "confad/io/snapshot.hpp"
#include "confad/martingales.hpp"
#include "confad/pipeline.hpp"
#include "confad/synthetic.hpp"

namespace confad::cli {

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string label_column;
  std::string out;
};

struct Inputs {
  std::string train;
  std::string snapshot;
};

std::optional<std::string> label_of(const Common& c) {
  if (c.label_column.empty()) return std::nullopt;
  return c.label_column;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "failed writing '" + path + "'");
}

io::RunConfig load_config(const Common& c, io::RunManifest& manifest) {
  io::RunConfig config = io::default_run_config();
  if (!c.config.empty()) {
    config = io::parse_config_file(c.config);
    manifest.inputs.push_back(io::digest_file(c.config));
  }
  if (c.seed_set) config.pipeline.seed = RandomSeed{c.seed};
  return config;
}

// Training rows labeled 1 are dropped: the detector and calibration set must
// be inliers.
DataMatrix load_training(const std::string& path, const Common& c,
                         io::RunManifest& manifest) {
  manifest.inputs.push_back(io::digest_file(path));
  DataMatrix train = io::read_data_csv_file(path, label_of(c), true);
  if (!train.labels()) return train;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < train.rows(); ++i) {
    if ((*train.labels())[i] == 0) keep.push_back(i);
  }
  if (keep.empty()) {
    throw Error(ErrorCode::kEmptyTrainingSet, "training file has no label-0 rows");
  }
  return train.select_rows(keep).without_labels();
}

// Fits from a training CSV or loads a snapshot; config is updated to the one
// the pipeline was built with.
pipeline::FittedPipeline obtain_pipeline(const Inputs& in, const Common& c,
                                         io::RunConfig& config,
                                         io::RunManifest& manifest) {
  if (!in.snapshot.empty()) {
    if (!c.config.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "--config cannot be combined with --snapshot");
    }
    manifest.inputs.push_back(io::digest_file(in.snapshot));
    io::Snapshot snap = io::load_snapshot(in.snapshot);
    config = snap.config;
    return std::move(snap.pipeline);
  }
  if (in.train.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "one of --train or --snapshot is required");
  }
  const DataMatrix train = load_training(in.train, c, manifest);
  return pipeline::fit(config.pipeline, train);
}

io::RunManifest new_manifest(const std::string& command, int argc,
                             const char* const* argv) {
  io::RunManifest m;
  m.command = command;
  for (int i = 1; i < argc; ++i) m.arguments.emplace_back(argv[i]);
  return m;
}

void finish_manifest(io::RunManifest& m, const io::RunConfig& config,
                     const std::string& path) {
  m.config = io::to_config_text(config);
  m.seed = config.pipeline.seed.value;
  io::write_manifest(path, m);
}

std::string output(io::RunManifest& m, const std::string& path,
                   const std::string& text) {
  write_text(path, text);
  m.outputs.push_back(io::digest_bytes(path, text));
  return path;
}

int cmd_detect(const Inputs& in, const std::string& test_path,
               std::optional<double> alpha, const Common& c, int argc,
               const char* const* argv, std::ostream& out) {
  io::RunManifest manifest = new_manifest("detect", argc, argv);
  io::RunConfig config = load_config(c, manifest);
  const pipeline::FittedPipeline fp = obtain_pipeline(in, c, config, manifest);
  if (alpha) config.alpha = *alpha;
  decisions::SelectionSpec{Procedure::kBenjaminiHochberg, config.alpha}.validate();

  manifest.inputs.push_back(io::digest_file(test_path));
  const DataMatrix test = io::read_data_csv_file(test_path, label_of(c));
  const DataMatrix features = test.without_labels();
  const PValueVector p = pipeline::compute_p_values(fp, features);
  const ScoreVector scores = pipeline::score_samples(fp, features);
  const DecisionSet d = fp.config.weighting
                            ? decisions::weighted_false_discovery_control(p, config.alpha)
                            : decisions::benjamini_hochberg(p, config.alpha);

  std::ostringstream table;
  table << "row_index,score,p_value,flag\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    table << i << ',' << io::format_double(scores.scores[i]) << ','
          << io::format_double(p.values[i]) << ',' << int{d.flags[i]} << '\n';
  }
  std::ostringstream summary;
  summary << "n_test = " << p.size() << '\n'
          << "n_flagged = " << d.count() << '\n'
          << "alpha = " << io::format_double(config.alpha) << '\n'
          << "procedure = " << to_string(d.procedure) << '\n'
          << "rejection_threshold = " << io::format_double(d.rejection_threshold) << '\n'
          << "estimation = " << to_string(p.estimation) << '\n'
          << "calibration_size = " << p.calibration_size << '\n';
  if (p.weighted) {
    summary << "capped_weights = " << p.capped_weights << '\n'
            << "finite_sample_caveat = true\n";
  }
  if (p.non_conformal) summary << "non_conformal = true\n";
  if (test.labels()) {
    const auto& labels = *test.labels();
    summary << "fdr = " << io::format_double(decisions::false_discovery_rate(labels, d))
            << '\n';
    const bool any = std::find(labels.begin(), labels.end(), 1) != labels.end();
    if (any) {
      summary << "power = "
              << io::format_double(decisions::statistical_power(labels, d)) << '\n';
    }
  }
  output(manifest, c.out, table.str());
  output(manifest, c.out + ".summary.txt", summary.str());
  finish_manifest(manifest, config, c.out + ".manifest.json");
  out << summary.str();
  return kExitOk;
}

int cmd_stream(const Inputs& in, const std::string& stream_path, const Common& c,
               int argc, const char* const* argv, std::ostream& out) {
  io::RunManifest manifest = new_manifest("stream", argc, argv);
  io::RunConfig config = load_config(c, manifest);
  pipeline::FittedPipeline fp = obtain_pipeline(in, c, config, manifest);
  if (fp.config.weighting) {
    throw Error(ErrorCode::kInvalidConfig, "weighting is not supported for streams");
  }
  if (!config.smoothed_explicit &&
      fp.config.estimation.regime == Estimation::kEmpirical) {
    fp.config.estimation.smoothed = true;
  }
  manifest.inputs.push_back(io::digest_file(stream_path));
  const DataMatrix stream =
      io::read_data_csv_file(stream_path, label_of(c), true).without_labels();
  const PValueVector p = pipeline::compute_p_values(fp, stream);
  const martingales::StreamResult result =
      martingales::run_stream(config.martingale, config.alarms, p.values);

  std::ostringstream trajectory;
  martingales::write_trajectory_csv(trajectory, result.trajectory, config.alarms);
  std::ostringstream alarm_log;
  martingales::write_alarm_log_csv(alarm_log, result.state.alarm_history);
  output(manifest, c.out, trajectory.str());
  output(manifest, c.out + ".alarms.csv", alarm_log.str());
  finish_manifest(manifest, config, c.out + ".manifest.json");

  out << "steps = " << result.state.step << '\n'
      << "martingale = " << to_string(config.martingale.kind) << '\n'
      << "smoothed = " << (p.smoothed ? "true" : "false") << '\n'
      << "floored_p_values = " << result.state.floored_p_values << '\n';
  for (martingales::AlarmKind kind : martingales::kAllAlarms) {
    std::size_t count = 0;
    std::size_t first = 0;
    for (const auto& e : result.state.alarm_history) {
      if (e.kind != kind) continue;
      if (count++ == 0) first = e.step;
    }
    out << to_string(kind) << "_alarms = " << count << '\n';
    if (count) out << to_string(kind) << "_first_step = " << first << '\n';
  }
  return kExitOk;
}

int cmd_experiment(const std::string& name, std::size_t trials, bool trials_set,
                   const Common& c, int argc, const char* const* argv,
                   std::ostream& out) {
  io::RunManifest manifest = new_manifest("experiment", argc, argv);
  std::filesystem::create_directories(c.out);
  const std::string base = (std::filesystem::path(c.out) / name).string();
  std::ostringstream trials_csv;
  std::ostringstream summary_csv;
  std::uint64_t seed = 0;
  auto pick_seed = [&](RandomSeed default_seed) {
    return c.seed_set ? RandomSeed{c.seed} : default_seed;
  };
  std::vector<experiments::TrialRecord> records;
  if (name == "strategy_sweep") {
    experiments::StrategySweepParams params;
    if (trials_set) params.trials = trials;
    params.seed = pick_seed(params.seed);
    seed = params.seed.value;
    records = experiments::strategy_sweep(params);
  } else if (name == "conditional") {
    experiments::ConditionalParams params;
    if (trials_set) params.trials = trials;
    params.seed = pick_seed(params.seed);
    seed = params.seed.value;
    records = experiments::conditional(params);
  } else if (name == "shift") {
    experiments::ShiftParams params;
    if (trials_set) params.trials = trials;
    params.seed = pick_seed(params.seed);
    seed = params.seed.value;
    records = experiments::shift(params);
  } else {
    experiments::MartingaleNullParams params;
    if (trials_set) params.streams = trials;
    params.seed = pick_seed(params.seed);
    seed = params.seed.value;
    const auto streams = experiments::martingale_null(params);
    experiments::write_null_csv(trials_csv, streams);
    summary_csv << "method,streams,threshold,crossing_frequency,ville_bound\n";
    for (std::size_t k = 0; k * params.streams < streams.size(); ++k) {
      std::size_t crossed = 0;
      for (std::size_t t = 0; t < params.streams; ++t) {
        crossed += streams[k * params.streams + t].crossed ? 1 : 0;
      }
      summary_csv << streams[k * params.streams].method << ',' << params.streams
                  << ',' << io::format_double(params.threshold) << ','
                  << io::format_double(static_cast<double>(crossed) /
                                       static_cast<double>(params.streams))
                  << ',' << io::format_double(1.0 / params.threshold) << '\n';
    }
  }
  if (name != "martingale_null") {
    experiments::write_trials_csv(trials_csv, records);
    experiments::write_summary_csv(summary_csv, experiments::summarize(records));
  }
  output(manifest, base + "_trials.csv", trials_csv.str());
  output(manifest, base + "_summary.csv", summary_csv.str());
  manifest.seed = seed;
  manifest.config = "experiment = " + name + "\n";
  io::write_manifest(base + "_manifest.json", manifest);
  out << summary_csv.str();
  return kExitOk;
}

int cmd_snapshot_save(const std::string& train_path, const Common& c, int argc,
                      const char* const* argv, std::ostream& out) {
  io::RunManifest manifest = new_manifest("snapshot save", argc, argv);
  io::RunConfig config = load_config(c, manifest);
  const DataMatrix train = load_training(train_path, c, manifest);
  const pipeline::FittedPipeline fp = pipeline::fit(config.pipeline, train);
  manifest.config = io::to_config_text(config);
  manifest.seed = config.pipeline.seed.value;
  io::save_snapshot(c.out, config, fp, manifest);
  out << "saved " << c.out << " (" << fp.calibration.n_entries()
      << " calibration entries, " << fp.calibration.models.size() << " models)\n";
  return kExitOk;
}

int cmd_snapshot_inspect(const std::string& path, std::ostream& out) {
  const io::Snapshot snap = io::load_snapshot(path);
  out << io::to_json(snap.manifest);
  out << "calibration_entries = " << snap.pipeline.calibration.n_entries() << '\n'
      << "models = " << snap.pipeline.calibration.models.size() << '\n';
  return kExitOk;
}

struct SynthArgs {
  std::string kind = "inliers";
  std::size_t rows = 1000;
  std::size_t after = 1000;
  double anomaly_rate = 0.05;
  std::size_t dim = 8;
  double shift = 2.0;
};

int cmd_synth(const SynthArgs& a, const Common& c, std::ostream& out) {
  Rng rng(RandomSeed{c.seed});
  DataMatrix data;
  if (a.kind == "inliers") {
    data = synthetic::gaussian_inliers(a.rows, a.dim, rng);
  } else if (a.kind == "batch") {
    const auto n_an = static_cast<std::size_t>(
        std::lround(static_cast<double>(a.rows) * a.anomaly_rate));
    data = synthetic::gaussian_batch(a.rows - n_an, n_an, a.dim, a.shift, rng);
  } else {
    data = synthetic::ramp_stream(a.rows, a.after, a.dim, a.shift, rng);
  }
  std::ostringstream os;
  io::write_data_csv(os, data);
  write_text(c.out, os.str());
  out << "wrote " << data.rows() << " rows to " << c.out << '\n';
  return kExitOk;
}

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", c.config, "key = value configuration file");
  }
  cmd->add_option("--seed", c.seed, "random seed")
      ->each([&c](const std::string&) { c.seed_set = true; });
  cmd->add_option("--label-column", c.label_column, "name of the 0/1 label column");
  cmd->add_option("--out", c.out, "output path")->required();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Conformal anomaly detection: p-values, FDR-controlled selection, "
               "and exchangeability martingales"};
  app.name("confad");
  app.require_subcommand(1);

  Common common;
  Inputs inputs;
  std::string test_path;
  std::string stream_path;
  std::optional<double> alpha;
  std::string experiment_name;
  std::size_t trials = 0;
  std::string snapshot_in;
  std::string snapshot_train;
  SynthArgs synth;

  CLI::App* detect = app.add_subcommand("detect", "score a test batch and select anomalies");
  detect->add_option("--train", inputs.train, "training CSV (label-1 rows dropped)");
  detect->add_option("--snapshot", inputs.snapshot, "saved pipeline instead of --train");
  detect->add_option("--test", test_path, "test CSV")->required();
  detect->add_option("--alpha", alpha, "target FDR level in (0, 1)");
  add_common(detect, common);

  CLI::App* stream = app.add_subcommand("stream", "monitor a stream with a martingale");
  stream->add_option("--train", inputs.train, "training CSV (label-1 rows dropped)");
  stream->add_option("--snapshot", inputs.snapshot, "saved pipeline instead of --train");
  stream->add_option("--stream", stream_path, "stream CSV in arrival order")->required();
  add_common(stream, common);

  CLI::App* experiment = app.add_subcommand("experiment", "run a synthetic experiment");
  experiment->add_option("name", experiment_name, "experiment name")
      ->required()
      ->check(CLI::IsMember({"strategy_sweep", "conditional", "shift", "martingale_null"}));
  CLI::Option* trials_opt =
      experiment->add_option("--trials", trials, "number of trials (streams)");
  add_common(experiment, common, false);

  CLI::App* snapshot = app.add_subcommand("snapshot", "save or inspect a fitted pipeline");
  snapshot->require_subcommand(1);
  CLI::App* save = snapshot->add_subcommand("save", "fit and save a pipeline");
  save->add_option("--train", snapshot_train, "training CSV")->required();
  add_common(save, common);
  CLI::App* inspect = snapshot->add_subcommand("inspect", "print a snapshot manifest");
  inspect->add_option("--in", snapshot_in, "snapshot file")->required();

  CLI::App* synth_cmd = app.add_subcommand("synth", "write a synthetic fixture CSV");
  synth_cmd->add_option("--kind", synth.kind, "inliers, batch, or ramp")
      ->check(CLI::IsMember({"inliers", "batch", "ramp"}));
  synth_cmd->add_option("--rows", synth.rows, "rows (ramp: clean prefix length)");
  synth_cmd->add_option("--after", synth.after, "ramp length after the change");
  synth_cmd->add_option("--anomaly-rate", synth.anomaly_rate, "batch anomaly fraction");
  synth_cmd->add_option("--dim", synth.dim, "feature count");
  synth_cmd->add_option("--shift", synth.shift, "anomaly mean shift");
  synth_cmd->add_option("--seed", common.seed, "random seed");
  synth_cmd->add_option("--out", common.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (detect->parsed()) {
      return cmd_detect(inputs, test_path, alpha, common, argc, argv, out);
    }
    if (stream->parsed()) {
      return cmd_stream(inputs, stream_path, common, argc, argv, out);
    }
    if (experiment->parsed()) {
      return cmd_experiment(experiment_name, trials, trials_opt->count() > 0, common,
                            argc, argv, out);
    }
    if (save->parsed()) return cmd_snapshot_save(snapshot_train, common, argc, argv, out);
    if (inspect->parsed()) return cmd_snapshot_inspect(snapshot_in, out);
    if (synth_cmd->parsed()) return cmd_synth(synth, common, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  err << "internal error: no command ran\n";
  return kExitInternal;
}

}  // namespace confad::cli

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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "confad/io/config.hpp"
#include "confad/io/csv.hpp"
#include "confad/io/manifest.hpp"
#include "confad/io/snapshot.hpp"
#include "confad/synthetic.hpp"
#include "gtest/gtest.h"

namespace confad::io {
namespace {

template <typename Fn>
Error ErrorOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error thrown";
  return Error(ErrorCode::kIoError, "none");
}

DataMatrix Csv(const std::string& text, std::optional<std::string> label = {},
               bool optional = false) {
  std::istringstream in(text);
  return read_data_csv(in, label, optional);
}

TEST(CsvTest, SplitsQuotedFields) {
  EXPECT_EQ(split_csv_line("a,\"b,c\",\"d\"\"e\"\r"),
            (std::vector<std::string>{"a", "b,c", "d\"e"}));
  EXPECT_EQ(split_csv_line(""), (std::vector<std::string>{""}));
  EXPECT_EQ(split_csv_line("1,,2"), (std::vector<std::string>{"1", "", "2"}));
}

TEST(CsvTest, ReadsFeaturesAndLabels) {
  DataMatrix m = Csv("x, y ,label\n1,2,0\n\n3.5,-4e2,1\n", "label");
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 2u);
  EXPECT_EQ(m.column_names(), (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(m.values(), (std::vector<double>{1, 2, 3.5, -400}));
  EXPECT_EQ(*m.labels(), (std::vector<int>{0, 1}));
}

TEST(CsvTest, LabelColumnCanBeOptional) {
  DataMatrix m = Csv("x,y\n1,2\n", "label", true);
  EXPECT_FALSE(m.labels().has_value());
  EXPECT_EQ(ErrorOf([] { Csv("x,y\n1,2\n", "label"); }).code(), ErrorCode::kParseError);
}

TEST(CsvTest, ParseErrorsNameRowAndColumn) {
  Error e = ErrorOf([] { Csv("a,b\n1,2\n3,oops\n"); });
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos) << e.what();

  Error short_row = ErrorOf([] { Csv("a,b,c\n1\n"); });
  EXPECT_NE(std::string(short_row.what()).find("row 1, column 'b'"), std::string::npos);

  Error nan = ErrorOf([] { Csv("a\nnan\n"); });
  EXPECT_EQ(nan.code(), ErrorCode::kParseError);
  Error label = ErrorOf([] { Csv("a,y\n1,2\n", "y"); });
  EXPECT_NE(std::string(label.what()).find("label must be 0 or 1"), std::string::npos);
  EXPECT_EQ(ErrorOf([] { Csv(""); }).code(), ErrorCode::kParseError);
  EXPECT_EQ(ErrorOf([] { Csv("a,b\n"); }).code(), ErrorCode::kEmptyInput);
  EXPECT_EQ(ErrorOf([] { read_data_csv_file("/nonexistent/x.csv"); }).code(),
            ErrorCode::kIoError);
}

TEST(CsvTest, WriteReadRoundTrip) {
  Rng rng({1});
  DataMatrix m = synthetic::gaussian_batch(20, 5, 3, 2.0, rng);
  std::ostringstream os;
  write_data_csv(os, m);
  DataMatrix back = Csv(os.str(), "label");
  EXPECT_EQ(back.values(), m.values());
  EXPECT_EQ(back.labels(), m.labels());
}

TEST(FormatDoubleTest, RoundTrips) {
  Rng rng({2});
  for (int i = 0; i < 1000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.index(40) - 20.0);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(100.0), "100");
}

TEST(ConfigTest, DefaultsAndComments) {
  RunConfig c = parse_config("# nothing here\n\n  alpha = 0.2  # trailing\n");
  EXPECT_EQ(c.alpha, 0.2);
  EXPECT_EQ(c.pipeline.scorer.kind, detectors::ScorerKind::kIsolationForest);
  EXPECT_EQ(c.pipeline.strategy.kind, resampling::StrategyKind::kSplit);
  EXPECT_EQ(*c.alarms.ville_threshold, 100.0);
  EXPECT_FALSE(c.smoothed_explicit);
  EXPECT_EQ(parse_config("strategy = cv\n").pipeline.strategy.mode, resampling::Mode::kPlus);
}

TEST(ConfigTest, ParsesEveryFamily) {
  RunConfig c = parse_config(
      "seed = 9\nscorer = knn\nknn_k = 7\nknn_aggregation = mean\n"
      "strategy = bootstrap\nn_bootstraps = 30\nmode = single\n"
      "estimation = conditional\nmethod = mc\ndelta = 0.05\n"
      "martingale = simple_jumper\njump_rate = 0.02\nville_threshold = none\n"
      "cusum_threshold = 50\nn_calib = 200\n");
  EXPECT_EQ(c.pipeline.seed.value, 9u);
  EXPECT_EQ(c.pipeline.scorer.knn.k, 7u);
  EXPECT_EQ(c.pipeline.scorer.knn.aggregation, detectors::KnnAggregation::kMean);
  EXPECT_EQ(c.pipeline.strategy.n_bootstraps, 30u);
  EXPECT_EQ(c.pipeline.strategy.mode, resampling::Mode::kSingleModel);
  EXPECT_EQ(std::get<std::size_t>(c.pipeline.strategy.n_calib), 200u);
  EXPECT_EQ(c.pipeline.estimation.method, estimation::AdjustmentMethod::kMonteCarlo);
  EXPECT_EQ(c.pipeline.estimation.delta, 0.05);
  EXPECT_EQ(c.martingale.kind, martingales::MartingaleKind::kSimpleJumper);
  EXPECT_FALSE(c.alarms.ville_threshold.has_value());
  EXPECT_EQ(*c.alarms.cusum_threshold, 50.0);
}

TEST(ConfigTest, TextRoundTrip) {
  RunConfig c = parse_config(
      "scorer = knn\nstrategy = cv\nfolds = 4\nn_calib = 0.25\nsmoothed = false\n"
      "weighting = oracle\nshift_family = logistic_tilt\n"
      "shift_coefficients = 0.5, -1\nshift_intercept = 0.125\nweight_cap = 15\n"
      "martingale = simple_mixture\ngrid_size = 500\n");
  const std::string text = to_config_text(c);
  RunConfig back = parse_config(text);
  EXPECT_EQ(to_config_text(back), text);
  EXPECT_EQ(std::get<double>(back.pipeline.strategy.n_calib), 0.25);
  EXPECT_TRUE(back.smoothed_explicit);
  EXPECT_FALSE(back.pipeline.estimation.smoothed);
  ASSERT_TRUE(back.pipeline.weighting.has_value());
  EXPECT_EQ(back.pipeline.weighting->kind, weighting::WeightKind::kOracle);
  EXPECT_EQ(*back.pipeline.weighting->options.absolute_cap, 15.0);
  EXPECT_EQ(back.shift_coefficients, (std::vector<double>{0.5, -1.0}));
  const std::string defaults = to_config_text(default_run_config());
  EXPECT_EQ(to_config_text(parse_config(defaults)), defaults);
}

TEST(ConfigTest, Errors) {
  EXPECT_EQ(ErrorOf([] { parse_config("colour = red\n"); }).code(),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(ErrorOf([] { parse_config("alpha = 0.1\nalpha = 0.2\n"); }).code(),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(ErrorOf([] { parse_config("alpha 0.1\n"); }).code(),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(ErrorOf([] { parse_config("alpha = lots\n"); }).code(),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(ErrorOf([] { parse_config("scorer = svm\n"); }).code(),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(ErrorOf([] { parse_config("alpha = 1.5\n"); }).code(),
            ErrorCode::kInvalidAlpha);
  EXPECT_EQ(ErrorOf([] { parse_config("weighting = oracle\n"); }).code(),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(ErrorOf([] { parse_config("weighting = uniform\nestimation = conditional\n"); })
                .code(),
            ErrorCode::kInvalidSpec);
  Error unknown = ErrorOf([] { parse_config("alpha = 0.1\nfoo = 1\n"); });
  EXPECT_NE(std::string(unknown.what()).find("line 2"), std::string::npos);
}

TEST(ConfigTest, ShiftRatios) {
  auto e = make_shift_ratio(ShiftFamily::kExponentialTilt, {2.0}, -1.0);
  const double x[] = {0.5};
  EXPECT_NEAR(e(x), 1.0, 1e-15);
  auto l = make_shift_ratio(ShiftFamily::kLogisticTilt, {2.0}, -1.0);
  EXPECT_NEAR(l(x), 0.5, 1e-15);
}

TEST(ManifestTest, JsonRoundTrip) {
  RunManifest m;
  m.command = "detect";
  m.arguments = {"--train", "a \"quoted\".csv"};
  m.config = "alpha = 0.1\n";
  m.seed = 18446744073709551615ULL;
  m.inputs = {digest_bytes("a.csv", "abc")};
  m.outputs = {digest_bytes("out.csv", "")};
  const std::string json = to_json(m);
  RunManifest back = manifest_from_json(json);
  EXPECT_EQ(to_json(back), json);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.inputs[0].fnv1a64, 0xe71fa2190541574bULL);
  EXPECT_EQ(back.inputs[0].bytes, 3u);
  EXPECT_EQ(back.arguments, m.arguments);
  EXPECT_EQ(hex64(0xcbf29ce484222325ULL), "cbf29ce484222325");
  EXPECT_EQ(ErrorOf([] { manifest_from_json("{not json"); }).code(),
            ErrorCode::kParseError);
}

class SnapshotTest : public ::testing::Test {
 protected:
  void SetUp() override {
    config_ = parse_config(
        "n_trees = 25\nsubsample_size = 64\nstrategy = bootstrap\nn_bootstraps = 8\n"
        "smoothed = true\nseed = 5\n");
    Rng rng({3});
    train_ = synthetic::gaussian_inliers(150, 3, rng);
    test_ = synthetic::gaussian_batch(40, 10, 3, 3.0, rng).without_labels();
    fp_ = pipeline::fit(config_.pipeline, train_);
    manifest_.command = "fit";
    manifest_.seed = 5;
  }

  RunConfig config_;
  DataMatrix train_, test_;
  pipeline::FittedPipeline fp_;
  RunManifest manifest_;
};

TEST_F(SnapshotTest, RoundTripIsBitExact) {
  const std::string bytes = encode_snapshot(config_, fp_, manifest_);
  EXPECT_EQ(bytes.substr(0, 8), "CONFADSN");
  Snapshot s = decode_snapshot(bytes);
  EXPECT_EQ(pipeline::compute_p_values(s.pipeline, test_).values,
            pipeline::compute_p_values(fp_, test_).values);
  EXPECT_EQ(to_config_text(s.config), to_config_text(config_));
  EXPECT_EQ(s.manifest.command, "fit");
  EXPECT_EQ(encode_snapshot(s.config, s.pipeline, s.manifest), bytes);
}

TEST_F(SnapshotTest, ConditionalAndWeightedRoundTrip) {
  RunConfig c = parse_config("scorer = knn\nestimation = conditional\nmethod = mc\n");
  pipeline::FittedPipeline fp = pipeline::fit(c.pipeline, train_);
  Snapshot s = decode_snapshot(encode_snapshot(c, fp, manifest_));
  EXPECT_EQ(pipeline::compute_p_values(s.pipeline, test_).values,
            pipeline::compute_p_values(fp, test_).values);

  RunConfig w = parse_config("scorer = knn\nweighting = logistic\n");
  pipeline::FittedPipeline fw = pipeline::fit(w.pipeline, train_);
  Snapshot sw = decode_snapshot(encode_snapshot(w, fw, manifest_));
  EXPECT_EQ(sw.pipeline.calibration_covariates.values(),
            fw.calibration_covariates.values());
  EXPECT_EQ(pipeline::compute_p_values(sw.pipeline, test_).values,
            pipeline::compute_p_values(fw, test_).values);
}

TEST_F(SnapshotTest, FileRoundTrip) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "confad_io_test.snap").string();
  save_snapshot(path, config_, fp_, manifest_);
  Snapshot s = load_snapshot(path);
  std::remove(path.c_str());
  EXPECT_EQ(pipeline::compute_p_values(s.pipeline, test_).values,
            pipeline::compute_p_values(fp_, test_).values);
}

TEST_F(SnapshotTest, CorruptionDetected) {
  const std::string bytes = encode_snapshot(config_, fp_, manifest_);
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{12},
                          bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_EQ(ErrorOf([&] { decode_snapshot(bytes.substr(0, cut)); }).code(),
              ErrorCode::kSnapshotError)
        << cut;
  }
  std::string bumped = bytes;
  bumped[8] = 2;
  EXPECT_EQ(ErrorOf([&] { decode_snapshot(bumped); }).code(),
            ErrorCode::kVersionMismatch);
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  Error e = ErrorOf([&] { decode_snapshot(flipped); });
  EXPECT_EQ(e.code(), ErrorCode::kSnapshotError);
  EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(ErrorOf([&] { decode_snapshot(magic); }).code(), ErrorCode::kSnapshotError);
}

TEST_F(SnapshotTest, DetachedScorerRefused) {
  auto scorer = detectors::wrap_detached([](std::span<const double> x) { return x[0]; },
                                         detectors::Polarity::kHigherIsAnomalous);
  RunConfig c = default_run_config();
  pipeline::FittedPipeline fp = pipeline::fit_detached(c.pipeline, scorer, train_);
  EXPECT_EQ(ErrorOf([&] { encode_snapshot(c, fp, manifest_); }).code(),
            ErrorCode::kSnapshotError);
}

}  // namespace
}  // namespace confad::io

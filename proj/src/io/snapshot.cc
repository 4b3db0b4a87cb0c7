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

#include "confad/io/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "confad/io/csv.hpp"

namespace confad::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot encoding assumes a little-endian host");

class Writer {
 public:
  void raw(const void* data, std::size_t n) {
    out_.append(static_cast<const char*>(data), n);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void indices(const std::vector<std::size_t>& v) {
    u64(v.size());
    for (std::size_t x : v) u64(x);
  }
  void matrix(const DataMatrix& m) {
    u64(m.rows());
    u64(m.cols());
    for (double v : m.values()) f64(v);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  void raw(void* out, std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw Error(ErrorCode::kSnapshotError, "snapshot is truncated");
    }
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::int32_t i32() { std::int32_t v; raw(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  double f64() { double v; raw(&v, 8); return v; }
  // Element count, rejected when it cannot fit in the remaining bytes.
  std::size_t count(std::size_t min_element_bytes) {
    const std::uint64_t n = u64();
    if (min_element_bytes && n > (bytes_.size() - pos_) / min_element_bytes) {
      throw Error(ErrorCode::kSnapshotError, "snapshot is truncated");
    }
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = count(1);
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  std::vector<std::size_t> indices() {
    std::vector<std::size_t> v(count(8));
    for (auto& x : v) x = u64();
    return v;
  }
  DataMatrix matrix() {
    const std::size_t rows = u64();
    const std::size_t cols = u64();
    if (rows == 0) return DataMatrix();
    if (cols == 0 || rows > (bytes_.size() - pos_) / 8 / cols) {
      throw Error(ErrorCode::kSnapshotError, "snapshot is truncated");
    }
    std::vector<double> values(rows * cols);
    for (double& v : values) v = f64();
    return DataMatrix::from_flat(rows, cols, std::move(values));
  }
  std::size_t position() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

enum ModelTag : std::uint8_t { kForestTag = 1, kKnnTag = 2 };

void write_model(Writer& w, const detectors::FittedScorer& scorer) {
  const auto& model = scorer.model();
  if (const auto* forest = std::get_if<detectors::IsolationForestModel>(&model)) {
    w.u8(kForestTag);
    w.u64(scorer.training_size());
    w.u64(forest->sample_size);
    w.u64(forest->depth_limit);
    w.u64(forest->n_cols);
    w.u64(forest->trees.size());
    for (const auto& tree : forest->trees) {
      w.u64(tree.nodes.size());
      for (const auto& n : tree.nodes) {
        w.i32(n.feature);
        w.f64(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
        w.u32(n.size);
      }
    }
  } else if (const auto* knn = std::get_if<detectors::KnnModel>(&model)) {
    w.u8(kKnnTag);
    w.u64(scorer.training_size());
    w.u64(knn->params.k);
    w.u8(static_cast<std::uint8_t>(knn->params.aggregation));
    w.matrix(knn->reference);
  } else {
    throw Error(ErrorCode::kSnapshotError,
                "detached scorers cannot be stored in a snapshot");
  }
}

detectors::FittedScorer read_model(Reader& r, const detectors::ScorerSpec& spec) {
  const std::uint8_t tag = r.u8();
  const std::size_t training_size = r.u64();
  if (tag == kForestTag) {
    detectors::IsolationForestModel forest;
    forest.sample_size = r.u64();
    forest.depth_limit = r.u64();
    forest.n_cols = r.u64();
    forest.trees.resize(r.count(8));
    for (auto& tree : forest.trees) {
      tree.nodes.resize(r.count(24));
      for (auto& n : tree.nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.size = r.u32();
        const auto limit = static_cast<std::int32_t>(tree.nodes.size());
        if (n.left >= limit || n.right >= limit ||
            n.feature >= static_cast<std::int32_t>(forest.n_cols)) {
          throw Error(ErrorCode::kSnapshotError, "corrupt isolation tree");
        }
      }
    }
    return detectors::FittedScorer(spec, std::move(forest), training_size);
  }
  if (tag == kKnnTag) {
    detectors::KnnModel knn;
    knn.params.k = r.u64();
    const std::uint8_t agg = r.u8();
    if (agg > 1) throw Error(ErrorCode::kSnapshotError, "corrupt knn model");
    knn.params.aggregation = static_cast<detectors::KnnAggregation>(agg);
    knn.reference = r.matrix();
    return detectors::FittedScorer(spec, std::move(knn), training_size);
  }
  throw Error(ErrorCode::kSnapshotError, "unknown model tag");
}

}  // namespace

std::string encode_snapshot(const RunConfig& config,
                            const pipeline::FittedPipeline& fp,
                            const RunManifest& manifest) {
  Writer payload;
  payload.str(to_config_text(config));
  const resampling::CalibrationModel& cm = fp.calibration;
  payload.u8(static_cast<std::uint8_t>(cm.mode));
  payload.u64(cm.entries.size());
  for (const auto& e : cm.entries) {
    payload.f64(e.score);
    payload.u64(e.model_id);
    payload.u64(e.row);
  }
  payload.u64(cm.model_sets.size());
  for (const auto& s : cm.model_sets) payload.indices(s);
  payload.u64(cm.training_rows.size());
  for (const auto& s : cm.training_rows) payload.indices(s);
  payload.u64(cm.dropped_rows);
  payload.u64(cm.models.size());
  for (const auto& m : cm.models) write_model(payload, m);
  payload.matrix(fp.calibration_covariates);

  Writer w;
  w.raw(kSnapshotMagic, 8);
  w.u32(kSnapshotVersion);
  w.str(to_json(manifest));
  w.str(payload.bytes());
  w.u64(fnv1a64(w.bytes()));
  return std::move(w.bytes());
}

Snapshot decode_snapshot(const std::string& bytes) {
  Reader header(bytes);
  char magic[8];
  header.raw(magic, 8);
  if (std::memcmp(magic, kSnapshotMagic, 8) != 0) {
    throw Error(ErrorCode::kSnapshotError, "not a confad snapshot");
  }
  const std::uint32_t version = header.u32();
  if (version != kSnapshotVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "snapshot version " + std::to_string(version) +
                    " is not supported (expected " +
                    std::to_string(kSnapshotVersion) + ")");
  }
  if (bytes.size() < 8 + 4 + 8) {
    throw Error(ErrorCode::kSnapshotError, "snapshot is truncated");
  }
  const std::string_view body(bytes.data(), bytes.size() - 8);
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  if (fnv1a64(body) != stored) {
    throw Error(ErrorCode::kSnapshotError, "snapshot checksum mismatch");
  }

  Reader r(body);
  r.raw(magic, 8);
  r.u32();
  Snapshot snap;
  snap.manifest = manifest_from_json(r.str());
  const std::string payload_bytes = r.str();
  if (!r.done()) throw Error(ErrorCode::kSnapshotError, "trailing bytes in snapshot");

  Reader p(payload_bytes);
  snap.config = parse_config(p.str());
  resampling::CalibrationModel cm;
  const std::uint8_t mode = p.u8();
  if (mode > 1) throw Error(ErrorCode::kSnapshotError, "corrupt mode");
  cm.mode = static_cast<resampling::Mode>(mode);
  cm.strategy = snap.config.pipeline.strategy;
  cm.entries.resize(p.count(24));
  for (auto& e : cm.entries) {
    e.score = p.f64();
    e.model_id = p.u64();
    e.row = p.u64();
  }
  cm.model_sets.resize(p.count(8));
  for (auto& s : cm.model_sets) s = p.indices();
  cm.training_rows.resize(p.count(8));
  for (auto& s : cm.training_rows) s = p.indices();
  cm.dropped_rows = p.u64();
  const std::size_t n_models = p.count(9);
  for (std::size_t m = 0; m < n_models; ++m) {
    cm.models.push_back(read_model(p, snap.config.pipeline.scorer));
  }
  DataMatrix covariates = p.matrix();
  if (!p.done()) throw Error(ErrorCode::kSnapshotError, "trailing payload bytes");
  for (const auto& e : cm.entries) {
    if (e.model_id >= cm.model_sets.size()) {
      throw Error(ErrorCode::kSnapshotError, "entry refers to a missing model set");
    }
  }
  for (const auto& s : cm.model_sets) {
    for (std::size_t m : s) {
      if (m >= cm.models.size()) {
        throw Error(ErrorCode::kSnapshotError, "model set refers to a missing model");
      }
    }
  }
  snap.pipeline =
      pipeline::assemble(snap.config.pipeline, std::move(cm), std::move(covariates));
  return snap;
}

void save_snapshot(const std::string& path, const RunConfig& config,
                   const pipeline::FittedPipeline& fp,
                   const RunManifest& manifest) {
  const std::string bytes = encode_snapshot(config, fp, manifest);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Snapshot load_snapshot(const std::string& path) {
  return decode_snapshot(read_file(path));
}

}  // namespace confad::io

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

// Versioned binary container for fitted pipelines.
//
//   "CONFADSN" | u32 version | u64 len, manifest JSON | u64 len, payload |
//   u64 fnv1a64 of everything before it
//
// Integers are little-endian, doubles are their IEEE-754 bit patterns, so a
// loaded pipeline reproduces p-values bit for bit. The payload holds the
// canonical configuration text, the calibration model, and the calibration
// covariates; the adjustment table is rebuilt from the seed.

#ifndef CONFAD_IO_SNAPSHOT_HPP_
#define CONFAD_IO_SNAPSHOT_HPP_

#include <cstdint>
#include <string>

#include "confad/io/config.hpp"
#include "confad/io/manifest.hpp"
#include "confad/pipeline.hpp"

namespace confad::io {

inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr char kSnapshotMagic[9] = "CONFADSN";

struct Snapshot {
  RunConfig config;
  pipeline::FittedPipeline pipeline;
  RunManifest manifest;
};

// Detached (external) scorers cannot be stored: SnapshotError.
std::string encode_snapshot(const RunConfig& config,
                            const pipeline::FittedPipeline& fp,
                            const RunManifest& manifest);
// SnapshotError on truncation, bad magic or checksum; VersionMismatch on an
// unknown version.
Snapshot decode_snapshot(const std::string& bytes);

void save_snapshot(const std::string& path, const RunConfig& config,
                   const pipeline::FittedPipeline& fp,
                   const RunManifest& manifest);
Snapshot load_snapshot(const std::string& path);

}  // namespace confad::io

#endif  // CONFAD_IO_SNAPSHOT_HPP_

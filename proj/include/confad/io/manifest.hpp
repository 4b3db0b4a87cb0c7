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

// Run manifest: command, arguments, configuration, seed, and digests of
// every input and output. No timestamps, so identical runs give identical
// manifests.

#ifndef CONFAD_IO_MANIFEST_HPP_
#define CONFAD_IO_MANIFEST_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace confad::io {

inline constexpr const char* kVersion = "0.1.0";

struct FileDigest {
  std::string path;
  std::uint64_t fnv1a64 = 0;
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string config;
  std::uint64_t seed = 0;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::string version = kVersion;
};

FileDigest digest_bytes(const std::string& path, const std::string& bytes);
// Reads the file; IoError when it cannot be opened.
FileDigest digest_file(const std::string& path);

std::string hex64(std::uint64_t value);

// Pretty-printed JSON with a fixed key order.
std::string to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace confad::io

#endif  // CONFAD_IO_MANIFEST_HPP_

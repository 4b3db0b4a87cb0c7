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

#include "confad/io/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "confad/core.hpp"
#include "confad/io/csv.hpp"
#include "json.hpp"

namespace confad::io {

namespace {

using nlohmann::ordered_json;

ordered_json digests_json(const std::vector<FileDigest>& files) {
  ordered_json out = ordered_json::array();
  for (const FileDigest& f : files) {
    out.push_back({{"path", f.path}, {"fnv1a64", hex64(f.fnv1a64)}, {"bytes", f.bytes}});
  }
  return out;
}

std::vector<FileDigest> digests_from(const ordered_json& j) {
  std::vector<FileDigest> out;
  for (const auto& f : j) {
    FileDigest d;
    d.path = f.at("path").get<std::string>();
    d.fnv1a64 = std::stoull(f.at("fnv1a64").get<std::string>(), nullptr, 16);
    d.bytes = f.at("bytes").get<std::uint64_t>();
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

FileDigest digest_bytes(const std::string& path, const std::string& bytes) {
  return {path, fnv1a64(bytes), bytes.size()};
}

FileDigest digest_file(const std::string& path) {
  return digest_bytes(path, read_file(path));
}

std::string to_json(const RunManifest& m) {
  ordered_json j;
  j["command"] = m.command;
  j["arguments"] = m.arguments;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["inputs"] = digests_json(m.inputs);
  j["outputs"] = digests_json(m.outputs);
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  try {
    const ordered_json j = ordered_json::parse(text);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.arguments = j.at("arguments").get<std::vector<std::string>>();
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config").get<std::string>();
    m.inputs = digests_from(j.at("inputs"));
    m.outputs = digests_from(j.at("outputs"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("manifest: ") + e.what());
  }
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  out << to_json(manifest);
}

}  // namespace confad::io

// Copyright 2026 The sqzchip Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace sqz {

// FNV-1a, 64-bit.  Fast, dependency-free, and more than strong enough to
// certify that two runs emitted identical bytes.
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t hash = 1469598103934665603ull;
  for (const char c : data) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

inline std::string checksum_string(const std::string& data) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return buffer;
}

// Description of one completed run: what was simulated, from which
// configuration and seed, and a checksum for every emitted file.  Written to
// the output directory as `manifest.json` after all data files.
struct RunManifest {
  std::string experiment;
  std::string config_label;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::map<std::string, std::string> file_checksums;
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  return {{"experiment", m.experiment},
          {"config", m.config_label},
          {"seed", m.seed},
          {"output_dir", m.output_dir},
          {"files", m.file_checksums}};
}

// Collects the files of one run, writes them into a flat output directory,
// and finishes by writing the manifest (which lists every file except
// itself).
class RunWriter {
 public:
  RunWriter(std::filesystem::path output_dir, std::string experiment,
            std::string config_label, std::uint64_t seed)
      : output_dir_(std::move(output_dir)) {
    manifest_.experiment = std::move(experiment);
    manifest_.config_label = std::move(config_label);
    manifest_.seed = seed;
    manifest_.output_dir = output_dir_.string();
    std::filesystem::create_directories(output_dir_);
  }

  void add_file(const std::string& name, const std::string& content) {
    if (manifest_.file_checksums.count(name) > 0) {
      throw std::invalid_argument("RunWriter: duplicate file '" + name + "'");
    }
    write_bytes(output_dir_ / name, content);
    manifest_.file_checksums[name] = checksum_string(content);
  }

  void add_json(const std::string& name, const nlohmann::json& value) {
    add_file(name, value.dump(2) + "\n");
  }

  const RunManifest& finish() {
    write_bytes(output_dir_ / "manifest.json",
                manifest_to_json(manifest_).dump(2) + "\n");
    return manifest_;
  }

  const std::filesystem::path& output_dir() const { return output_dir_; }

 private:
  static void write_bytes(const std::filesystem::path& path,
                          const std::string& content) {
    std::ofstream stream(path, std::ios::binary);
    if (!stream) {
      throw std::runtime_error("RunWriter: cannot open '" + path.string() +
                               "' for writing");
    }
    stream << content;
    if (!stream) {
      throw std::runtime_error("RunWriter: write to '" + path.string() +
                               "' failed");
    }
  }

  std::filesystem::path output_dir_;
  RunManifest manifest_;
};

}  // namespace sqz

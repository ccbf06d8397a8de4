// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Model checkpoints (".slxm"): a version line, key=value configuration lines
// ended by a blank line, then for each parameter array a "name rows cols"
// line followed by rows*cols little-endian 32-bit floats.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "shortlex/model.hpp"

namespace shortlex {

inline constexpr const char* kCheckpointMagic = "SHORTLEX-MODEL v1";

// Checkpoints store 32-bit floats, so a round trip reproduces parameters
// exactly once they have been rounded with this function.
ModelParams round_to_float(const ModelParams& params);

// Streams a checkpoint to disk one array at a time.
class CheckpointWriter {
 public:
  // `meta` entries are written with a "meta." prefix next to the config.
  CheckpointWriter(const std::filesystem::path& path, const ModelConfig& config, std::size_t num_arrays,
                   const std::map<std::string, std::string>& meta = {});
  void write(const std::string& name, const Matrix& values);
  // Writes an all-zero array without materializing it (sparse where the
  // filesystem allows).
  void write_zeros(const std::string& name, std::size_t rows, std::size_t cols);
  // Throws unless exactly num_arrays arrays were written.
  void finish();

 private:
  void header(const std::string& name, std::size_t rows, std::size_t cols);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t expected_ = 0;
  std::size_t written_ = 0;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const std::map<std::string, std::string>& meta = {});

struct Checkpoint {
  ModelParams params;
  std::map<std::string, std::string> meta;  // without the "meta." prefix
};

// Throws kFormat on a wrong version line, malformed config, unexpected array
// names or shapes, or truncated data; kIo when the file cannot be read.
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct ArrayInfo {
  std::string name;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  ParamGroup group = ParamGroup::kEncoder;
};

struct CheckpointInfo {
  ModelConfig config;
  std::map<std::string, std::string> meta;
  std::vector<ArrayInfo> arrays;
  ParamCounts counts;  // floats per group, from the stored arrays
  std::uint64_t file_bytes = 0;
};

// Reads headers only, seeking past array data.
CheckpointInfo inspect_checkpoint(const std::filesystem::path& path);

// Group of a parameter array from its name.
ParamGroup group_of(std::string_view name);

}  // namespace shortlex

// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "shortlex/error.hpp"

namespace shortlex {

namespace {

constexpr std::size_t kChunk = 1 << 16;

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

std::string read_line(std::istream& in, const std::filesystem::path& path, const char* what) {
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorKind::kFormat, path.string() + ": truncated checkpoint (missing " + std::string(what) + ")");
  }
  return line;
}

struct Header {
  ModelConfig config;
  std::map<std::string, std::string> meta;
  std::size_t num_arrays = 0;
};

Header read_header(std::istream& in, const std::filesystem::path& path) {
  std::string magic = read_line(in, path, "version line");
  if (magic != kCheckpointMagic) {
    if (magic.rfind("SHORTLEX-MODEL ", 0) == 0) {
      fail(ErrorKind::kFormat, path.string() + ": unsupported checkpoint version '" + magic.substr(15) +
                                   "' (expected v1)");
    }
    fail(ErrorKind::kFormat, path.string() + ": not a shortlex checkpoint");
  }
  std::map<std::string, std::string> kv;
  Header h;
  while (true) {
    std::string line = read_line(in, path, "end of config block");
    if (line.empty()) break;
    auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorKind::kFormat, path.string() + ": bad config line '" + line + "'");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key.rfind("meta.", 0) == 0) {
      h.meta[key.substr(5)] = value;
    } else {
      kv[key] = value;
    }
  }
  try {
    h.config = ModelConfig::from_kv(kv);
    h.config.validate();
    auto it = kv.find("num_arrays");
    require(it != kv.end(), ErrorKind::kFormat, "missing num_arrays");
    h.num_arrays = std::stoul(it->second);
  } catch (const Error& e) {
    fail(ErrorKind::kFormat, path.string() + ": bad checkpoint config: " + e.what());
  } catch (const std::exception&) {
    fail(ErrorKind::kFormat, path.string() + ": bad num_arrays");
  }
  return h;
}

ArrayInfo read_array_header(std::istream& in, const std::filesystem::path& path) {
  std::string line = read_line(in, path, "array header");
  std::istringstream ss(line);
  ArrayInfo a;
  std::string extra;
  if (!(ss >> a.name >> a.rows >> a.cols) || (ss >> extra)) {
    fail(ErrorKind::kFormat, path.string() + ": bad array header '" + line + "'");
  }
  a.group = group_of(a.name);
  return a;
}

}  // namespace

ParamGroup group_of(std::string_view name) {
  if (name == "src_embed") return ParamGroup::kSourceEmbedding;
  if (name == "tgt_embed") return ParamGroup::kTargetEmbedding;
  if (name.starts_with("enc.")) return ParamGroup::kEncoder;
  if (name.starts_with("dec.")) return ParamGroup::kDecoder;
  if (name.starts_with("out.")) return ParamGroup::kOutput;
  if (name.starts_with("nvs.")) return ParamGroup::kNvs;
  fail(ErrorKind::kFormat, "unknown parameter array '" + std::string(name) + "'");
}

ModelParams round_to_float(const ModelParams& params) {
  ModelParams out = params;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (double& v : out.at(i).values()) v = static_cast<double>(static_cast<float>(v));
  }
  return out;
}

CheckpointWriter::CheckpointWriter(const std::filesystem::path& path, const ModelConfig& config,
                                   std::size_t num_arrays, const std::map<std::string, std::string>& meta)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), expected_(num_arrays) {
  if (!out_) fail(ErrorKind::kIo, "cannot write checkpoint " + path.string());
  config.validate();
  out_ << kCheckpointMagic << '\n';
  for (const auto& [k, v] : config.to_kv()) out_ << k << '=' << v << '\n';
  out_ << "num_arrays=" << num_arrays << '\n';
  for (const auto& [k, v] : meta) {
    require(k.find('=') == std::string::npos && k.find('\n') == std::string::npos &&
                v.find('\n') == std::string::npos,
            ErrorKind::kInvalidInput, "checkpoint metadata must be single-line key=value");
    out_ << "meta." << k << '=' << v << '\n';
  }
  out_ << '\n';
}

void CheckpointWriter::header(const std::string& name, std::size_t rows, std::size_t cols) {
  require(written_ < expected_, ErrorKind::kInvalidInput, "more arrays written than announced");
  require(!name.empty() && name.find_first_of(" \t\n") == std::string::npos, ErrorKind::kInvalidInput,
          "array names must be non-empty without whitespace");
  out_ << name << ' ' << rows << ' ' << cols << '\n';
  ++written_;
}

void CheckpointWriter::write(const std::string& name, const Matrix& values) {
  header(name, values.rows(), values.cols());
  std::vector<std::uint32_t> buf;
  buf.reserve(std::min(values.size(), kChunk));
  auto flush = [&] {
    out_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    buf.clear();
  };
  for (double v : values.values()) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    buf.push_back(to_little(bits));
    if (buf.size() == kChunk) flush();
  }
  flush();
  if (!out_) fail(ErrorKind::kIo, "write failed for " + path_.string());
}

void CheckpointWriter::write_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
  header(name, rows, cols);
  std::uint64_t bytes = static_cast<std::uint64_t>(rows) * cols * 4;
  if (bytes == 0) return;
  // Seek to the last byte and write it, leaving a hole before it.
  out_.seekp(static_cast<std::streamoff>(bytes - 1), std::ios::cur);
  out_.put('\0');
  if (!out_) fail(ErrorKind::kIo, "write failed for " + path_.string());
}

void CheckpointWriter::finish() {
  require(written_ == expected_, ErrorKind::kInvalidInput,
          "checkpoint announced " + std::to_string(expected_) + " arrays but " + std::to_string(written_) +
              " were written");
  out_.close();
  if (!out_) fail(ErrorKind::kIo, "cannot finish checkpoint " + path_.string());
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const std::map<std::string, std::string>& meta) {
  CheckpointWriter w(path, params.config(), params.size(), meta);
  for (std::size_t i = 0; i < params.size(); ++i) w.write(params.spec(i).name, params.at(i));
  w.finish();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  Header h = read_header(in, path);
  ModelParams params(h.config);
  if (h.num_arrays != params.size()) {
    fail(ErrorKind::kFormat, path.string() + ": checkpoint has " + std::to_string(h.num_arrays) +
                                 " arrays, the configuration needs " + std::to_string(params.size()));
  }
  std::vector<std::uint32_t> buf;
  for (std::size_t i = 0; i < params.size(); ++i) {
    ArrayInfo a = read_array_header(in, path);
    const ParamSpec& spec = params.spec(i);
    if (a.name != spec.name) {
      fail(ErrorKind::kFormat, path.string() + ": expected array '" + spec.name + "', found '" + a.name + "'");
    }
    if (a.rows != spec.rows || a.cols != spec.cols) {
      fail(ErrorKind::kFormat, path.string() + ": array " + a.name + " has shape " + std::to_string(a.rows) + "x" +
                                   std::to_string(a.cols) + ", expected " + std::to_string(spec.rows) + "x" +
                                   std::to_string(spec.cols));
    }
    Matrix& m = params.at(i);
    buf.resize(m.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (static_cast<std::size_t>(in.gcount()) != buf.size() * 4) {
      fail(ErrorKind::kFormat, path.string() + ": truncated data in array " + a.name);
    }
    auto values = m.values();
    for (std::size_t j = 0; j < buf.size(); ++j) {
      std::uint32_t bits = to_little(buf[j]);
      float f;
      std::memcpy(&f, &bits, 4);
      values[j] = f;
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(ErrorKind::kFormat, path.string() + ": trailing bytes after the last array");
  }
  return {std::move(params), std::move(h.meta)};
}

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  CheckpointInfo info;
  info.file_bytes = std::filesystem::file_size(path);
  Header h = read_header(in, path);
  info.config = h.config;
  info.meta = h.meta;
  for (std::size_t i = 0; i < h.num_arrays; ++i) {
    ArrayInfo a = read_array_header(in, path);
    std::uint64_t floats = a.rows * a.cols;
    auto data_start = static_cast<std::uint64_t>(in.tellg());
    if (data_start + floats * 4 > info.file_bytes) {
      fail(ErrorKind::kFormat, path.string() + ": truncated data in array " + a.name);
    }
    in.seekg(static_cast<std::streamoff>(floats * 4), std::ios::cur);
    info.counts.add(a.group, floats);
    info.arrays.push_back(std::move(a));
  }
  return info;
}

}  // namespace shortlex

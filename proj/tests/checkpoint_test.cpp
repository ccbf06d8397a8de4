// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/checkpoint.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace shortlex {
namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.d_model = 8;
  c.heads = 2;
  c.ffn = 12;
  c.encoder_layers = 2;
  c.decoder_layers = 1;
  c.src_vocab = 15;
  c.tgt_vocab = 13;
  return c;
}

class CheckpointFile : public ::testing::Test {
 protected:
  std::filesystem::path path = std::filesystem::temp_directory_path() / "shortlex_ckpt_test.slxm";
  void TearDown() override { std::filesystem::remove(path); }

  std::string contents() {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  void overwrite(const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << data;
  }
  ErrorKind load_error() {
    try {
      load_checkpoint(path);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInternal;
  }
};

TEST_F(CheckpointFile, RoundTripIsExactAfterFloatRounding) {
  auto params = ModelParams::initialize(tiny(), 3);
  save_checkpoint(path, params, {{"vocab", "/data/vocab.txt"}});
  auto loaded = load_checkpoint(path);
  EXPECT_TRUE(loaded.params == round_to_float(params));
  EXPECT_EQ(loaded.meta.at("vocab"), "/data/vocab.txt");
  // A second pass is bitwise stable.
  save_checkpoint(path, loaded.params);
  EXPECT_TRUE(load_checkpoint(path).params == loaded.params);
}

TEST_F(CheckpointFile, HeaderLayout) {
  save_checkpoint(path, ModelParams::initialize(tiny(), 3));
  auto text = contents();
  EXPECT_EQ(text.rfind("SHORTLEX-MODEL v1\n", 0), 0u);
  EXPECT_NE(text.find("\nd_model=8\n"), std::string::npos);
  EXPECT_NE(text.find("\n\nsrc_embed 15 8\n"), std::string::npos);
}

TEST_F(CheckpointFile, CorruptionsAreFormatErrors) {
  save_checkpoint(path, ModelParams::initialize(tiny(), 3));
  const std::string good = contents();

  overwrite("SHORTLEX-MODEL v2" + good.substr(17));
  EXPECT_EQ(load_error(), ErrorKind::kFormat);
  try {
    load_checkpoint(path);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  overwrite(good.substr(0, good.size() - 10));
  EXPECT_EQ(load_error(), ErrorKind::kFormat);
  overwrite(good + "x");
  EXPECT_EQ(load_error(), ErrorKind::kFormat);

  std::string shape = good;
  shape.replace(shape.find("src_embed 15 8"), 14, "src_embed 15 9");
  overwrite(shape);
  EXPECT_EQ(load_error(), ErrorKind::kFormat);

  std::string cfg = good;
  cfg.replace(cfg.find("heads=2"), 7, "heads=3");  // 8 not divisible by 3
  overwrite(cfg);
  EXPECT_EQ(load_error(), ErrorKind::kFormat);

  std::filesystem::remove(path);
  EXPECT_EQ(load_error(), ErrorKind::kIo);
}

TEST_F(CheckpointFile, InspectorCountsMatchConfig) {
  auto params = ModelParams::initialize(tiny(), 3);
  save_checkpoint(path, params);
  auto info = inspect_checkpoint(path);
  auto expected = count_parameters(tiny());
  EXPECT_EQ(info.counts.nvs, 13u * 8u + 13u);
  EXPECT_EQ(info.counts.nvs, expected.nvs);
  EXPECT_EQ(info.counts.total, expected.total);
  EXPECT_EQ(info.counts.encoder, expected.encoder);
  EXPECT_EQ(info.arrays.size(), params.size());
}

TEST_F(CheckpointFile, ZeroWriterMatchesDenseZeros) {
  ModelParams zeros(tiny());
  zeros.zero();
  {
    CheckpointWriter w(path, tiny(), zeros.size());
    for (std::size_t i = 0; i < zeros.size(); ++i) {
      w.write_zeros(zeros.spec(i).name, zeros.spec(i).rows, zeros.spec(i).cols);
    }
    w.finish();
  }
  EXPECT_TRUE(load_checkpoint(path).params == zeros);
  CheckpointWriter short_writer(path, tiny(), 2);
  short_writer.write_zeros("src_embed", 15, 8);
  EXPECT_THROW(short_writer.finish(), Error);
}

}  // namespace
}  // namespace shortlex

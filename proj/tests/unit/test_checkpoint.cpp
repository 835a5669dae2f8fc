// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>

#include "seqloss/checkpoint.hpp"
#include "seqloss/content_hash.hpp"
#include "seqloss/error.hpp"
#include "test_support.hpp"

using namespace seqloss;
using seqloss::testing::TempDir;

namespace {

ModelConfig small() {
  ModelConfig c;
  c.code_vocab = 12;
  c.summary_vocab = 9;
  c.embed_dim = 3;
  c.hidden_dim = 4;
  c.seed = 21;
  return c;
}

}  // namespace

TEST_CASE("git blob hash") {
  // `printf 'hello\n' | git hash-object --stdin`
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("checkpoint round trip is exact") {
  TempDir dir("ckpt");
  Seq2SeqModel m(small());
  m.param(Param::kDecoderBias).value(2, 0) = 0.1 + 1e-17;
  save_checkpoint(dir / "a.ckpt", m, {{"epoch", "3"}});
  const auto back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.model.config() == m.config());
  CHECK(back.metadata.at("epoch") == "3");
  for (std::size_t k = 0; k < kParamCount; ++k) {
    CHECK(back.model.parameters()[k].name == m.parameters()[k].name);
    CHECK(back.model.parameters()[k].value == m.parameters()[k].value);
  }
  CHECK_FALSE(std::filesystem::exists(dir / "a.ckpt.tmp"));

  save_checkpoint(dir / "b.ckpt", m, {{"epoch", "3"}});
  CHECK(git_blob_hash_file(dir / "a.ckpt") == git_blob_hash_file(dir / "b.ckpt"));
}

TEST_CASE("corrupt checkpoints are rejected") {
  TempDir dir("ckpt-bad");
  {
    std::ofstream out(dir / "junk.ckpt", std::ios::binary);
    out << "NOTACKPTxxxxxxxxxxxx";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), FormatError);

  Seq2SeqModel m(small());
  save_checkpoint(dir / "ok.ckpt", m);
  const auto size = std::filesystem::file_size(dir / "ok.ckpt");
  std::filesystem::resize_file(dir / "ok.ckpt", size - 16);
  CHECK_THROWS_AS(load_checkpoint(dir / "ok.ckpt"), FormatError);
  CHECK_THROWS(load_checkpoint(dir / "absent.ckpt"));
}

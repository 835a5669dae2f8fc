// SPDX-License-Identifier: Apache-2.0
#include "seqloss/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "seqloss/content_hash.hpp"
#include "seqloss/error.hpp"

namespace seqloss {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'E', 'Q', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string &buf, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  buf.append(raw, sizeof(T));
}

void put_string(std::string &buf, const std::string &s) {
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(s.size()));
  buf += s;
}

class Reader {
 public:
  Reader(std::string bytes, std::string file) : bytes_(std::move(bytes)), file_(std::move(file)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void get_doubles(double *out, std::size_t count) {
    need(count * sizeof(double));
    std::memcpy(out, bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }

  bool done() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail(const std::string &what) const { throw FormatError(file_, 0, what); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated checkpoint");
  }

  std::string bytes_;
  std::string file_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path &path, const Seq2SeqModel &model,
                     const std::map<std::string, std::string> &metadata) {
  const auto &c = model.config();
  nlohmann::json header = {
      {"code_vocab", c.code_vocab},   {"summary_vocab", c.summary_vocab}, {"embed_dim", c.embed_dim},
      {"hidden_dim", c.hidden_dim},   {"init_scale", c.init_scale},       {"seed", c.seed},
      {"metadata", metadata},
  };

  std::string buf(kMagic, sizeof(kMagic));
  put<std::uint32_t>(buf, kCheckpointVersion);
  put_string(buf, header.dump());
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(model.parameters().size()));
  for (const auto &t : model.parameters()) {
    put_string(buf, t.name);
    put<std::uint64_t>(buf, static_cast<std::uint64_t>(t.value.rows()));
    put<std::uint64_t>(buf, static_cast<std::uint64_t>(t.value.cols()));
    buf.append(reinterpret_cast<const char *>(t.value.data()),
               static_cast<std::size_t>(t.value.size()) * sizeof(double));
  }
  write_file_atomic(path, buf);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
  Reader r(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()), path.string());

  char magic[sizeof(kMagic)];
  for (auto &ch : magic) ch = r.get<char>();
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.fail("not a seqloss checkpoint");
  if (const auto version = r.get<std::uint32_t>(); version != kCheckpointVersion) {
    r.fail("unsupported checkpoint version " + std::to_string(version));
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.get_string());
  } catch (const nlohmann::json::exception &e) {
    r.fail(std::string("bad checkpoint header: ") + e.what());
  }
  ModelConfig config;
  config.code_vocab = header.at("code_vocab").get<std::size_t>();
  config.summary_vocab = header.at("summary_vocab").get<std::size_t>();
  config.embed_dim = header.at("embed_dim").get<std::size_t>();
  config.hidden_dim = header.at("hidden_dim").get<std::size_t>();
  config.init_scale = header.at("init_scale").get<double>();
  config.seed = header.at("seed").get<std::uint64_t>();

  Checkpoint ck{Seq2SeqModel(config), header.value("metadata", std::map<std::string, std::string>{})};
  const auto count = r.get<std::uint32_t>();
  if (count != ck.model.parameters().size()) r.fail("tensor count does not match the model");
  for (auto &t : ck.model.parameters()) {
    const auto name = r.get_string();
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (name != t.name || rows != static_cast<std::uint64_t>(t.value.rows()) ||
        cols != static_cast<std::uint64_t>(t.value.cols())) {
      r.fail("unexpected tensor " + name + " [" + std::to_string(rows) + "x" + std::to_string(cols) + "]");
    }
    r.get_doubles(t.value.data(), static_cast<std::size_t>(t.value.size()));
  }
  if (!r.done()) r.fail("trailing bytes after the last tensor");
  return ck;
}

}  // namespace seqloss

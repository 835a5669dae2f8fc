// SPDX-License-Identifier: Apache-2.0
#include "seqloss/embedder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "seqloss/error.hpp"

namespace seqloss {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t &state) {
  state += kGolden;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename T>
T parse_number(std::string_view text, const std::string &what) {
  T value{};
  const auto *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid " + what + ": '" + std::string(text) + "'");
  return value;
}

}  // namespace

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

FixtureTableProvider::FixtureTableProvider(const std::filesystem::path &path)
    : name_("fixture:" + path.string()) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embedding fixture: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path.string(), lineno, "expected sentence<TAB>values");
    std::vector<double> values;
    std::string_view rest = std::string_view(line).substr(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto field = rest.substr(0, comma);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw FormatError(path.string(), lineno, "bad number '" + std::string(field) + "'");
      }
      values.push_back(v);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    if (values.empty()) throw FormatError(path.string(), lineno, "no vector components");
    if (dimension_ == 0) dimension_ = values.size();
    if (values.size() != dimension_) {
      throw FormatError(path.string(), lineno,
                        "dimension " + std::to_string(values.size()) + " != " + std::to_string(dimension_));
    }
    table_[line.substr(0, tab)] = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  if (table_.empty()) throw ConfigError("embedding fixture is empty: " + path.string());
}

FixtureTableProvider::FixtureTableProvider(std::unordered_map<std::string, Eigen::VectorXd> table,
                                           std::string name)
    : table_(std::move(table)), name_(std::move(name)) {
  if (table_.empty()) throw ConfigError("embedding fixture is empty");
  dimension_ = static_cast<std::size_t>(table_.begin()->second.size());
  for (const auto &[sentence, v] : table_) {
    if (static_cast<std::size_t>(v.size()) != dimension_) {
      throw ConfigError("inconsistent fixture dimension for \"" + sentence + "\"");
    }
  }
}

SentenceEmbedding FixtureTableProvider::embed(std::span<const std::string> tokens) const {
  const std::string key = join_tokens(tokens);
  auto it = table_.find(key);
  if (it == table_.end()) throw FixtureMissError(key);
  return {it->second};
}

HashedBagProvider::HashedBagProvider(std::uint64_t seed, std::size_t dimension)
    : seed_(seed), dimension_(dimension) {
  if (dimension == 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashedBagProvider::name() const {
  return "hashed:" + std::to_string(seed_) + ":" + std::to_string(dimension_);
}

Eigen::VectorXd HashedBagProvider::token_vector(std::string_view token) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dimension_));
  std::uint64_t state = fnv1a64(token) ^ (seed_ * kGolden);
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    v[k] = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  }
  return v;
}

SentenceEmbedding HashedBagProvider::embed(std::span<const std::string> tokens) const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension_));
  if (tokens.empty()) return {sum};
  for (const auto &t : tokens) sum += token_vector(t);
  sum /= static_cast<double>(tokens.size());
  const double norm = sum.norm();
  if (norm > 0.0) sum /= norm;
  return {sum};
}

std::unique_ptr<EmbeddingProvider> make_provider(std::string_view spec) {
  if (spec.starts_with("fixture:")) {
    return std::make_unique<FixtureTableProvider>(std::filesystem::path(spec.substr(8)));
  }
  if (spec.starts_with("hashed:")) {
    const auto rest = spec.substr(7);
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw ConfigError("expected hashed:<seed>:<dim>, got '" + std::string(spec) + "'");
    const auto seed = parse_number<std::uint64_t>(rest.substr(0, colon), "embedder seed");
    const auto dim = parse_number<std::size_t>(rest.substr(colon + 1), "embedder dimension");
    return std::make_unique<HashedBagProvider>(seed, dim);
  }
  throw ConfigError("unknown embedder '" + std::string(spec) +
                    "' (expected fixture:<path> or hashed:<seed>:<dim>)");
}

double cosine(const SentenceEmbedding &a, const SentenceEmbedding &b) {
  if (a.values.size() != b.values.size()) {
    throw std::logic_error("cosine of embeddings with different dimensions (" +
                           std::to_string(a.values.size()) + " vs " + std::to_string(b.values.size()) + ")");
  }
  const double na = a.values.norm();
  const double nb = b.values.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = a.values.dot(b.values) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

double sequence_similarity(const EmbeddingProvider &provider, std::span<const std::string> predicted,
                           std::span<const std::string> reference) {
  return cosine(provider.embed(predicted), provider.embed(reference));
}

}  // namespace seqloss

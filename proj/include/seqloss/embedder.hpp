// SPDX-License-Identifier: Apache-2.0
//
// Sentence embeddings for detokenized summaries and their cosine similarity.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include <Eigen/Core>

namespace seqloss {

struct SentenceEmbedding {
  Eigen::VectorXd values;

  std::size_t dimension() const { return static_cast<std::size_t>(values.size()); }
};

/// Maps a token sequence to a fixed-dimension vector. Implementations are
/// immutable after construction and deterministic for a given sentence.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual SentenceEmbedding embed(std::span<const std::string> tokens) const = 0;
};

/// Exact lookup of precomputed vectors keyed by the space-joined sentence.
/// File format: one `sentence<TAB>v1,v2,...,vd` per line.
class FixtureTableProvider final : public EmbeddingProvider {
 public:
  explicit FixtureTableProvider(const std::filesystem::path &path);
  FixtureTableProvider(std::unordered_map<std::string, Eigen::VectorXd> table, std::string name);

  std::string name() const override { return name_; }
  std::size_t dimension() const override { return dimension_; }

  /// Throws FixtureMissError if the sentence is absent.
  SentenceEmbedding embed(std::span<const std::string> tokens) const override;

  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, Eigen::VectorXd> table_;
  std::string name_;
  std::size_t dimension_ = 0;
};

/// Bag of hashed token vectors. Each token is hashed (FNV-1a 64, mixed with the
/// seed) into the state of a splitmix64 stream that yields its `dimension`
/// components in [-1, 1). A sentence is the L2-normalized mean of its token
/// vectors; the empty sentence is the zero vector.
class HashedBagProvider final : public EmbeddingProvider {
 public:
  HashedBagProvider(std::uint64_t seed, std::size_t dimension);

  std::string name() const override;
  std::size_t dimension() const override { return dimension_; }
  SentenceEmbedding embed(std::span<const std::string> tokens) const override;

  Eigen::VectorXd token_vector(std::string_view token) const;

 private:
  std::uint64_t seed_;
  std::size_t dimension_;
};

/// Parses `fixture:<path>` or `hashed:<seed>:<dim>`.
std::unique_ptr<EmbeddingProvider> make_provider(std::string_view spec);

/// Cosine similarity; 0 when either vector has zero norm. Dimension mismatch
/// throws std::logic_error.
double cosine(const SentenceEmbedding &a, const SentenceEmbedding &b);

/// Cosine between the embeddings of two plain-word sequences.
double sequence_similarity(const EmbeddingProvider &provider, std::span<const std::string> predicted,
                           std::span<const std::string> reference);

std::string join_tokens(std::span<const std::string> tokens);

}  // namespace seqloss

// SPDX-License-Identifier: Apache-2.0
//
// Dataset loading, vocabularies and batching for code/summary pairs.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace seqloss {

using TokenId = std::int32_t;

inline constexpr TokenId kStartId = 0;
inline constexpr TokenId kEndId = 1;
inline constexpr TokenId kPadId = 2;
inline constexpr TokenId kUnknownId = 3;
inline constexpr TokenId kNumSpecials = 4;

inline constexpr std::string_view kStartToken = "<s>";
inline constexpr std::string_view kEndToken = "</s>";
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnknownToken = "<unk>";

inline bool is_special(TokenId id) { return id >= 0 && id < kNumSpecials; }

/// Bidirectional token/id map. Ids 0..3 are the reserved specials; corpus
/// tokens follow in descending training frequency.
class Vocabulary {
 public:
  /// Specials only.
  Vocabulary();

  /// Builds from tokenized training sentences. Ordering is descending frequency
  /// with lexicographic tie-break; at most `cap` entries including specials.
  static Vocabulary build(std::span<const std::vector<std::string>> sentences, std::size_t cap);

  /// Restores a vocabulary from its id-ordered token list (specials first).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  static Vocabulary load(const std::filesystem::path &path);
  void save(const std::filesystem::path &path) const;

  /// Id of `token`, or the unknown id.
  TokenId id(std::string_view token) const;
  const std::string &token(TokenId id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string> &tokens() const { return id_to_token_; }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary &other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

/// Length and vocabulary caps. Defaults are the Java configuration.
struct CorpusLimits {
  std::size_t max_code_len = 50;        // t
  std::size_t max_summary_len = 13;     // w, counting start/end
  std::size_t code_vocab = 75000;       // v
  std::size_t summary_vocab = 10908;    // z
};

/// One line of a dataset file after lowercasing and whitespace tokenization.
struct RawRecord {
  std::string id;
  std::vector<std::string> code;
  std::vector<std::string> summary;
};

struct Sample {
  std::string id;
  std::vector<TokenId> code_ids;
  std::vector<TokenId> summary_ids;            // starts with kStartId
  std::vector<std::string> reference_tokens;   // untruncated lowercased summary
  std::size_t source_code_len = 0;             // code tokens before truncation

  /// Number of teacher-forced prediction positions.
  std::size_t target_count() const { return summary_ids.empty() ? 0 : summary_ids.size() - 1; }
};

struct SplitCorpus {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
  Vocabulary code_vocab;
  Vocabulary summary_vocab;
  CorpusLimits limits;
};

/// Parses a dataset file of JSON-lines records with string fields id, code, summary.
std::vector<RawRecord> read_records(const std::filesystem::path &path);

/// Encodes a record: code truncated to t tokens; summary wrapped in start/end
/// and truncated to w ids (prefix kept, so an overlong summary loses its end).
Sample encode_record(const RawRecord &record, const Vocabulary &code_vocab,
                     const Vocabulary &summary_vocab, const CorpusLimits &limits);

/// Vocabularies come from the train split only. Throws ConfigError for missing
/// files, an empty train split, or ids shared across splits; FormatError for bad lines.
SplitCorpus load_corpus(const std::filesystem::path &train, const std::filesystem::path &val,
                        const std::filesystem::path &test, const CorpusLimits &limits);

/// Builds a SplitCorpus from in-memory records (same rules as load_corpus).
SplitCorpus make_corpus(const std::vector<RawRecord> &train, const std::vector<RawRecord> &val,
                        const std::vector<RawRecord> &test, const CorpusLimits &limits);

struct Batch {
  std::vector<std::size_t> indices;                  // positions in the source sample list
  std::vector<std::vector<TokenId>> code_ids;        // padded with kPadId
  std::vector<std::vector<TokenId>> summary_ids;     // padded with kPadId
  std::vector<std::size_t> code_lengths;
  std::vector<std::size_t> summary_lengths;
  std::vector<std::vector<std::uint8_t>> summary_mask;  // 1 on real summary positions

  std::size_t size() const { return indices.size(); }
  std::span<const TokenId> code(std::size_t i) const { return {code_ids[i].data(), code_lengths[i]}; }
  std::span<const TokenId> summary(std::size_t i) const {
    return {summary_ids[i].data(), summary_lengths[i]};
  }
};

/// Splits samples into batches of at most `batch_size`. Without a seed the
/// input order is kept; with a seed the order is a deterministic shuffle.
std::vector<Batch> batchify(std::span<const Sample> samples, std::size_t batch_size,
                            std::optional<std::uint64_t> seed = std::nullopt);

struct SplitStats {
  std::size_t samples = 0;
  double mean_code_len = 0.0;
  double mean_summary_len = 0.0;
  std::size_t truncated_code = 0;
  std::size_t truncated_summary = 0;
  double code_unknown_rate = 0.0;
  double summary_unknown_rate = 0.0;
};

struct CorpusStats {
  SplitStats train, val, test;
  std::size_t code_vocab_size = 0;
  std::size_t summary_vocab_size = 0;
};

CorpusStats corpus_stats(const SplitCorpus &corpus);

}  // namespace seqloss

// SPDX-License-Identifier: Apache-2.0
#include "seqloss/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seqloss/error.hpp"
#include "seqloss/random.hpp"

namespace seqloss {

namespace {

const std::vector<std::string> &special_tokens() {
  static const std::vector<std::string> specials = {
      std::string(kStartToken), std::string(kEndToken), std::string(kPadToken),
      std::string(kUnknownToken)};
  return specials;
}

std::vector<std::string> tokenize_lower(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(std::move(tok));
  }
  return out;
}

std::vector<Sample> encode_split(const std::vector<RawRecord> &records, const Vocabulary &code_vocab,
                                 const Vocabulary &summary_vocab, const CorpusLimits &limits) {
  std::vector<Sample> out;
  out.reserve(records.size());
  for (const auto &r : records) out.push_back(encode_record(r, code_vocab, summary_vocab, limits));
  return out;
}

}  // namespace

Vocabulary::Vocabulary() {
  const auto &specials = special_tokens();
  id_to_token_.assign(specials.begin(), specials.end());
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < static_cast<std::size_t>(kNumSpecials) ||
      !std::equal(special_tokens().begin(), special_tokens().end(), tokens.begin())) {
    throw ConfigError("vocabulary must begin with the special tokens <s> </s> <pad> <unk>");
  }
  Vocabulary v;
  v.token_to_id_.clear();
  v.token_to_id_.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!v.token_to_id_.emplace(tokens[i], static_cast<TokenId>(i)).second) {
      throw ConfigError("duplicate vocabulary token: " + tokens[i]);
    }
  }
  v.id_to_token_ = std::move(tokens);
  return v;
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences, std::size_t cap) {
  if (cap < static_cast<std::size_t>(kNumSpecials)) {
    throw ConfigError("vocabulary cap must be at least " + std::to_string(kNumSpecials));
  }
  std::map<std::string, std::size_t> freq;
  const std::set<std::string> reserved(special_tokens().begin(), special_tokens().end());
  for (const auto &s : sentences)
    for (const auto &t : s)
      if (!reserved.contains(t)) ++freq[t];

  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  // std::map iteration is already lexicographic; stable sort keeps that as the tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });

  std::vector<std::string> tokens = special_tokens();
  for (const auto &[tok, n] : ranked) {
    if (tokens.size() >= cap) break;
    tokens.push_back(tok);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vocabulary file: " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write vocabulary file: " + path.string());
  for (const auto &t : id_to_token_) out << t << '\n';
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnknownId : it->second;
}

const std::string &Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw std::out_of_range("token id out of range: " + std::to_string(id));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.contains(std::string(token));
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

std::vector<RawRecord> read_records(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path.string());

  std::vector<RawRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
      throw FormatError(path.string(), lineno, std::string("invalid JSON: ") + e.what());
    }
    RawRecord r;
    for (const char *field : {"id", "code", "summary"}) {
      if (!j.is_object() || !j.contains(field) || !j[field].is_string()) {
        throw FormatError(path.string(), lineno, std::string("missing string field '") + field + "'");
      }
    }
    r.id = j["id"].get<std::string>();
    r.code = tokenize_lower(j["code"].get<std::string>());
    r.summary = tokenize_lower(j["summary"].get<std::string>());
    if (r.id.empty()) throw FormatError(path.string(), lineno, "empty id");
    if (r.code.empty()) throw FormatError(path.string(), lineno, "empty code field");
    records.push_back(std::move(r));
  }
  return records;
}

Sample encode_record(const RawRecord &record, const Vocabulary &code_vocab,
                     const Vocabulary &summary_vocab, const CorpusLimits &limits) {
  Sample s;
  s.id = record.id;
  s.source_code_len = record.code.size();
  const std::size_t code_len = std::min(record.code.size(), limits.max_code_len);
  s.code_ids = code_vocab.encode(std::span(record.code).first(code_len));

  s.summary_ids.reserve(record.summary.size() + 2);
  s.summary_ids.push_back(kStartId);
  for (const auto &t : record.summary) s.summary_ids.push_back(summary_vocab.id(t));
  s.summary_ids.push_back(kEndId);
  if (s.summary_ids.size() > limits.max_summary_len) s.summary_ids.resize(limits.max_summary_len);
  s.reference_tokens = record.summary;
  return s;
}

SplitCorpus make_corpus(const std::vector<RawRecord> &train, const std::vector<RawRecord> &val,
                        const std::vector<RawRecord> &test, const CorpusLimits &limits) {
  if (train.empty()) throw ConfigError("training split is empty");
  if (limits.max_code_len < 1) throw ConfigError("max code length must be at least 1");
  if (limits.max_summary_len < 2) throw ConfigError("max summary length must be at least 2");

  std::set<std::string> seen;
  for (const auto *split : {&train, &val, &test})
    for (const auto &r : *split)
      if (!seen.insert(r.id).second) throw ConfigError("sample id appears more than once: " + r.id);

  // Only the retained prefix of code counts towards the code vocabulary.
  std::vector<std::vector<std::string>> code_sents, summary_sents;
  code_sents.reserve(train.size());
  summary_sents.reserve(train.size());
  for (const auto &r : train) {
    code_sents.emplace_back(r.code.begin(),
                            r.code.begin() + static_cast<std::ptrdiff_t>(
                                                 std::min(r.code.size(), limits.max_code_len)));
    summary_sents.push_back(r.summary);
  }

  SplitCorpus c;
  c.limits = limits;
  c.code_vocab = Vocabulary::build(code_sents, limits.code_vocab);
  c.summary_vocab = Vocabulary::build(summary_sents, limits.summary_vocab);
  c.train = encode_split(train, c.code_vocab, c.summary_vocab, limits);
  c.val = encode_split(val, c.code_vocab, c.summary_vocab, limits);
  c.test = encode_split(test, c.code_vocab, c.summary_vocab, limits);
  return c;
}

SplitCorpus load_corpus(const std::filesystem::path &train, const std::filesystem::path &val,
                        const std::filesystem::path &test, const CorpusLimits &limits) {
  for (const auto &p : {train, val, test}) {
    if (!std::filesystem::exists(p)) throw ConfigError("dataset file not found: " + p.string());
  }
  return make_corpus(read_records(train), read_records(val), read_records(test), limits);
}

std::vector<Batch> batchify(std::span<const Sample> samples, std::size_t batch_size,
                            std::optional<std::uint64_t> seed) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (seed) {
    Rng rng(*seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }

  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    Batch b;
    std::size_t max_code = 0, max_summary = 0;
    for (std::size_t k = begin; k < end; ++k) {
      max_code = std::max(max_code, samples[order[k]].code_ids.size());
      max_summary = std::max(max_summary, samples[order[k]].summary_ids.size());
    }
    for (std::size_t k = begin; k < end; ++k) {
      const Sample &s = samples[order[k]];
      b.indices.push_back(order[k]);
      b.code_lengths.push_back(s.code_ids.size());
      b.summary_lengths.push_back(s.summary_ids.size());
      auto &code = b.code_ids.emplace_back(s.code_ids);
      code.resize(max_code, kPadId);
      auto &summary = b.summary_ids.emplace_back(s.summary_ids);
      summary.resize(max_summary, kPadId);
      auto &mask = b.summary_mask.emplace_back(max_summary, std::uint8_t{0});
      std::fill_n(mask.begin(), s.summary_ids.size(), std::uint8_t{1});
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

namespace {

SplitStats split_stats(const std::vector<Sample> &samples, const CorpusLimits &limits) {
  SplitStats st;
  st.samples = samples.size();
  if (samples.empty()) return st;
  std::size_t code_total = 0, summary_total = 0, code_unk = 0, summary_unk = 0, summary_words = 0;
  for (const auto &s : samples) {
    code_total += s.code_ids.size();
    summary_total += s.summary_ids.size();
    if (s.source_code_len > limits.max_code_len) ++st.truncated_code;
    if (s.reference_tokens.size() + 2 > limits.max_summary_len) ++st.truncated_summary;
    code_unk += static_cast<std::size_t>(std::count(s.code_ids.begin(), s.code_ids.end(), kUnknownId));
    for (TokenId id : s.summary_ids) {
      if (id == kUnknownId) ++summary_unk;
      if (!is_special(id) || id == kUnknownId) ++summary_words;
    }
  }
  const auto n = static_cast<double>(samples.size());
  st.mean_code_len = static_cast<double>(code_total) / n;
  st.mean_summary_len = static_cast<double>(summary_total) / n;
  st.code_unknown_rate = code_total ? static_cast<double>(code_unk) / static_cast<double>(code_total) : 0.0;
  st.summary_unknown_rate =
      summary_words ? static_cast<double>(summary_unk) / static_cast<double>(summary_words) : 0.0;
  return st;
}

}  // namespace

CorpusStats corpus_stats(const SplitCorpus &corpus) {
  CorpusStats st;
  st.train = split_stats(corpus.train, corpus.limits);
  st.val = split_stats(corpus.val, corpus.limits);
  st.test = split_stats(corpus.test, corpus.limits);
  st.code_vocab_size = corpus.code_vocab.size();
  st.summary_vocab_size = corpus.summary_vocab.size();
  return st;
}

}  // namespace seqloss

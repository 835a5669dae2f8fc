// SPDX-License-Identifier: Apache-2.0
#include "seqloss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "seqloss/error.hpp"

namespace seqloss {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const TokenSeq &tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

struct NgramStats {
  std::size_t matches = 0;
  std::size_t total = 0;
};

NgramStats clipped_matches(const TokenSeq &hyp, const TokenSeq &ref, std::size_t n) {
  NgramStats st;
  const auto h = ngrams(hyp, n);
  const auto r = ngrams(ref, n);
  for (const auto &[gram, count] : h) {
    st.total += count;
    if (auto it = r.find(gram); it != r.end()) st.matches += std::min(count, it->second);
  }
  return st;
}

double brevity_penalty(std::size_t hyp_len, std::size_t ref_len) {
  if (hyp_len > ref_len) return 1.0;
  if (hyp_len == 0) return 0.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
}

// Search over maximal one-to-one exact alignments for the fewest chunks.
class ChunkMinimizer {
 public:
  ChunkMinimizer(const TokenSeq &hyp, const TokenSeq &ref) : hyp_(hyp), ref_(ref), used_(ref.size(), false) {
    std::map<std::string, std::size_t> hc, rc;
    for (const auto &t : hyp) ++hc[t];
    for (const auto &t : ref) ++rc[t];
    for (const auto &[tok, n] : hc) {
      const std::size_t r = rc.contains(tok) ? rc[tok] : 0;
      matches_ += std::min(n, r);
      skips_[tok] = n - std::min(n, r);
    }
  }

  std::size_t matches() const { return matches_; }

  std::size_t min_chunks() {
    if (matches_ == 0) return 0;
    best_ = matches_ + 1;
    search(0, 0, kNone);
    return best_;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  // Past this many nodes the best alignment found so far is used.
  static constexpr std::size_t kBudget = 200000;

  void search(std::size_t i, std::size_t chunks, std::size_t prev_j) {
    if (++nodes_ > kBudget || chunks >= best_) return;
    if (i == hyp_.size()) {
      best_ = chunks;
      return;
    }
    const auto &tok = hyp_[i];
    // prev_j refers to hyp position i - 1 only; a skip resets it.
    if (prev_j != kNone && prev_j + 1 < ref_.size() && !used_[prev_j + 1] && ref_[prev_j + 1] == tok) {
      used_[prev_j + 1] = true;
      search(i + 1, chunks, prev_j + 1);
      used_[prev_j + 1] = false;
    }
    for (std::size_t j = 0; j < ref_.size(); ++j) {
      if (used_[j] || ref_[j] != tok || (prev_j != kNone && j == prev_j + 1)) continue;
      used_[j] = true;
      search(i + 1, chunks + 1, j);
      used_[j] = false;
    }
    if (auto &s = skips_[tok]; s > 0) {
      --s;
      search(i + 1, chunks, kNone);
      ++s;
    }
  }

  const TokenSeq &hyp_;
  const TokenSeq &ref_;
  std::vector<bool> used_;
  std::map<std::string, std::size_t> skips_;
  std::size_t matches_ = 0;
  std::size_t best_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace

double corpus_bleu(std::span<const TokenSeq> predictions, std::span<const TokenSeq> references) {
  if (predictions.empty()) throw std::invalid_argument("corpus BLEU of an empty corpus");
  if (predictions.size() != references.size()) {
    throw std::invalid_argument("corpus BLEU: prediction and reference counts differ");
  }
  std::array<NgramStats, 4> totals{};
  std::size_t hyp_len = 0, ref_len = 0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto st = clipped_matches(predictions[k], references[k], n);
      totals[n - 1].matches += st.matches;
      totals[n - 1].total += st.total;
    }
    hyp_len += predictions[k].size();
    ref_len += references[k].size();
  }
  double log_sum = 0.0;
  for (const auto &st : totals) {
    const double denom = static_cast<double>(std::max<std::size_t>(1, st.total));
    const double num = st.matches == 0 ? kBleuEpsilon : static_cast<double>(st.matches);
    log_sum += 0.25 * std::log(num / denom);
  }
  return 100.0 * brevity_penalty(hyp_len, ref_len) * std::exp(log_sum);
}

double sentence_bleu(const TokenSeq &prediction, const TokenSeq &reference) {
  if (prediction.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto st = clipped_matches(prediction, reference, n);
    double p = 0.0;
    if (n == 1) {
      if (st.matches == 0) return 0.0;
      p = static_cast<double>(st.matches) / static_cast<double>(std::max<std::size_t>(1, st.total));
    } else {
      p = static_cast<double>(st.matches + 1) / static_cast<double>(std::max<std::size_t>(1, st.total) + 1);
    }
    log_sum += 0.25 * std::log(p);
  }
  return brevity_penalty(prediction.size(), reference.size()) * std::exp(log_sum);
}

double meteor_sentence(const TokenSeq &prediction, const TokenSeq &reference) {
  if (prediction.empty() || reference.empty()) return 0.0;
  ChunkMinimizer aligner(prediction, reference);
  const std::size_t m = aligner.matches();
  if (m == 0) return 0.0;
  const std::size_t chunks = aligner.min_chunks();
  const double precision = static_cast<double>(m) / static_cast<double>(prediction.size());
  const double recall = static_cast<double>(m) / static_cast<double>(reference.size());
  const double fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
  const double frag = static_cast<double>(chunks) / static_cast<double>(m);
  const double penalty = 0.5 * frag * frag * frag;
  return 100.0 * fmean * (1.0 - penalty);
}

std::vector<double> embedding_similarity_scores(const EmbeddingProvider &provider,
                                                std::span<const TokenSeq> predictions,
                                                std::span<const TokenSeq> references) {
  if (predictions.size() != references.size()) {
    throw std::invalid_argument("embedding similarity: prediction and reference counts differ");
  }
  std::vector<double> out;
  out.reserve(predictions.size());
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    out.push_back(100.0 * std::max(0.0, sequence_similarity(provider, predictions[k], references[k])));
  }
  return out;
}

MetricsReport evaluate_predictions(const EmbeddingProvider &provider, std::span<const std::string> ids,
                                   std::span<const TokenSeq> predictions, std::span<const TokenSeq> references) {
  if (ids.size() != predictions.size() || ids.size() != references.size()) {
    throw std::invalid_argument("evaluate: ids, predictions and references must have equal counts");
  }
  MetricsReport report;
  report.embedder = provider.name();
  if (ids.empty()) throw std::invalid_argument("evaluate: no samples");
  const auto sims = embedding_similarity_scores(provider, predictions, references);
  double meteor_sum = 0.0, sim_sum = 0.0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const double m = meteor_sentence(predictions[k], references[k]);
    report.per_sample.push_back({ids[k], m, sims[k]});
    meteor_sum += m;
    sim_sum += sims[k];
  }
  const auto n = static_cast<double>(ids.size());
  report.mean_meteor = meteor_sum / n;
  report.mean_embed_sim = sim_sum / n;
  report.corpus_bleu = corpus_bleu(predictions, references);
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["loss"] = loss;
  j["dataset"] = dataset;
  j["embedder"] = embedder;
  j["corpus_bleu"] = corpus_bleu;
  j["mean_meteor"] = mean_meteor;
  j["mean_embed_sim"] = mean_embed_sim;
  j["per_sample"] = nlohmann::json::array();
  for (const auto &s : per_sample) {
    j["per_sample"].push_back({{"id", s.id}, {"meteor", s.meteor}, {"embed_sim", s.embed_sim}});
  }
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string &text) {
  const auto j = nlohmann::json::parse(text);
  MetricsReport r;
  r.loss = j.value("loss", "");
  r.dataset = j.value("dataset", "");
  r.embedder = j.value("embedder", "");
  r.corpus_bleu = j.at("corpus_bleu").get<double>();
  r.mean_meteor = j.at("mean_meteor").get<double>();
  r.mean_embed_sim = j.at("mean_embed_sim").get<double>();
  for (const auto &s : j.at("per_sample")) {
    r.per_sample.push_back({s.at("id").get<std::string>(), s.at("meteor").get<double>(),
                            s.at("embed_sim").get<double>()});
  }
  return r;
}

namespace {

double metric_value(const MetricsReport &r, MetricColumn c) {
  switch (c) {
    case MetricColumn::kMeteor: return r.mean_meteor;
    case MetricColumn::kUse: return r.mean_embed_sim;
    case MetricColumn::kBleu: return r.corpus_bleu;
  }
  return 0.0;
}

std::vector<double> per_sample_values(const MetricsReport &r, MetricColumn c) {
  std::vector<double> out;
  out.reserve(r.per_sample.size());
  for (const auto &s : r.per_sample) out.push_back(c == MetricColumn::kMeteor ? s.meteor : s.embed_sim);
  return out;
}

constexpr std::array kColumns = {MetricColumn::kMeteor, MetricColumn::kUse, MetricColumn::kBleu};
constexpr std::array kColumnNames = {"M", "U", "B"};

}  // namespace

ComparisonTable comparison_table(std::span<const MetricsReport> reports, const std::string &reference_loss,
                                 double alpha) {
  ComparisonTable table;
  table.alpha = alpha;

  // dataset -> run labels in input order
  std::map<std::string, std::vector<std::pair<std::string, const MetricsReport *>>> grouped;
  for (const auto &r : reports) {
    if (!grouped.contains(r.dataset)) table.datasets.push_back(r.dataset);
    auto &runs = grouped[r.dataset];
    std::size_t dup = 1;
    for (const auto &[label, rep] : runs)
      if (rep->loss == r.loss) ++dup;
    runs.emplace_back(dup == 1 ? r.loss : r.loss + "#" + std::to_string(dup), &r);
  }
  if (table.datasets.empty()) throw ConfigError("no reports to compare");

  for (const auto &[label, rep] : grouped[table.datasets.front()]) table.rows.push_back(label);
  if (table.rows.size() < 2) throw ConfigError("comparison needs at least two runs per dataset");
  const auto ref_it = std::find(table.rows.begin(), table.rows.end(), reference_loss);
  if (ref_it == table.rows.end()) throw ConfigError("no run with loss '" + reference_loss + "' to compare against");
  table.reference_row = static_cast<std::size_t>(ref_it - table.rows.begin());

  table.columns = 3 * table.datasets.size();
  table.cells.assign(table.rows.size(), std::vector<ComparisonCell>(table.columns));
  for (std::size_t d = 0; d < table.datasets.size(); ++d) {
    const auto &runs = grouped[table.datasets[d]];
    std::vector<const MetricsReport *> by_row(table.rows.size(), nullptr);
    for (const auto &[label, rep] : runs) {
      const auto it = std::find(table.rows.begin(), table.rows.end(), label);
      if (it == table.rows.end() || runs.size() != table.rows.size()) {
        throw ConfigError("dataset '" + table.datasets[d] + "' does not have the same runs as '" +
                          table.datasets.front() + "'");
      }
      by_row[static_cast<std::size_t>(it - table.rows.begin())] = rep;
    }
    const MetricsReport &ref = *by_row[table.reference_row];
    for (const auto *rep : by_row) {
      bool same = rep->per_sample.size() == ref.per_sample.size();
      for (std::size_t k = 0; same && k < ref.per_sample.size(); ++k) same = rep->per_sample[k].id == ref.per_sample[k].id;
      if (!same) throw ConfigError("mismatched test sets in dataset '" + table.datasets[d] + "'");
    }

    for (std::size_t m = 0; m < kColumns.size(); ++m) {
      const std::size_t col = 3 * d + m;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t row = 0; row < by_row.size(); ++row) {
        table.cells[row][col].value = metric_value(*by_row[row], kColumns[m]);
        best = std::max(best, table.cells[row][col].value);
      }
      bool ref_strictly_best = true;
      for (std::size_t row = 0; row < by_row.size(); ++row) {
        auto &cell = table.cells[row][col];
        cell.column_max = cell.value == best;
        if (row != table.reference_row && cell.value >= table.cells[table.reference_row][col].value) {
          ref_strictly_best = false;
        }
        if (row == table.reference_row || kColumns[m] == MetricColumn::kBleu) continue;
        if (ref.per_sample.size() < 2) continue;
        const auto a = per_sample_values(*by_row[row], kColumns[m]);
        const auto b = per_sample_values(ref, kColumns[m]);
        cell.test = paired_t_test(a, b);
        cell.not_significant = cell.test->p_value > alpha;
      }
      if (ref_strictly_best) ++table.wins;
    }
  }
  return table;
}

std::string ComparisonTable::render() const {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header = {"loss"};
  for (const auto &d : datasets)
    for (const char *c : kColumnNames) header.push_back(fmt::format("{}:{}", d, c));
  header.push_back("W");
  grid.push_back(header);
  for (std::size_t row = 0; row < rows.size(); ++row) {
    std::vector<std::string> line = {rows[row]};
    for (const auto &cell : cells[row]) {
      std::string text = fmt::format("{:.2f}", cell.value);
      if (cell.not_significant) text += "*";
      if (cell.column_max) text = "**" + text + "**";
      line.push_back(text);
    }
    line.push_back(row == reference_row ? fmt::format("{}/{}", wins, columns) : "");
    grid.push_back(line);
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto &line : grid)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::string out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    out += "|";
    for (std::size_t c = 0; c < grid[r].size(); ++c) out += fmt::format(" {:<{}} |", grid[r][c], width[c]);
    out += "\n";
    if (r == 0) {
      out += "|";
      for (std::size_t c = 0; c < width.size(); ++c) out += std::string(width[c] + 2, '-') + "|";
      out += "\n";
    }
  }
  out += fmt::format("\nM=METEOR, U=embedding similarity, B=corpus BLEU. ** marks the column maximum; "
                     "* marks M/U results not significantly different from {} (paired t-test, p > {}). "
                     "W counts columns where {} is strictly highest.\n",
                     rows[reference_row], alpha, rows[reference_row]);
  return out;
}

std::string ComparisonTable::to_json() const {
  nlohmann::json j;
  j["datasets"] = datasets;
  j["rows"] = rows;
  j["reference"] = rows.at(reference_row);
  j["wins"] = wins;
  j["columns"] = columns;
  j["alpha"] = alpha;
  j["cells"] = nlohmann::json::array();
  for (std::size_t row = 0; row < rows.size(); ++row) {
    for (std::size_t col = 0; col < columns; ++col) {
      const auto &cell = cells[row][col];
      nlohmann::json c = {{"row", rows[row]},
                          {"dataset", datasets[col / 3]},
                          {"metric", kColumnNames[col % 3]},
                          {"value", cell.value},
                          {"column_max", cell.column_max},
                          {"not_significant", cell.not_significant}};
      if (cell.test) {
        c["t"] = std::isfinite(cell.test->t_statistic) ? nlohmann::json(cell.test->t_statistic)
                                                        : nlohmann::json(cell.test->t_statistic > 0 ? "inf" : "-inf");
        c["p"] = cell.test->p_value;
        c["degenerate_variance"] = cell.test->degenerate_variance;
      }
      j["cells"].push_back(c);
    }
  }
  return j.dump(2);
}

}  // namespace seqloss

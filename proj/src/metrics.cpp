// Copyright 2026 The medcurate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "medcurate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "medcurate/error.hpp"

namespace medcurate {
namespace {

using Ids = std::vector<std::uint32_t>;
// n-gram of token ids, zero padded past the order.
using Key = std::array<std::uint32_t, kMaxBleuOrder>;
using CountTable = std::vector<std::pair<Key, std::uint32_t>>;

class Interner {
 public:
  Ids encode(const TokenSequence& seq) {
    Ids ids;
    ids.reserve(seq.size());
    for (const auto& tok : seq.tokens) {
      auto [it, inserted] =
          table_.try_emplace(tok, static_cast<std::uint32_t>(table_.size() + 1));
      ids.push_back(it->second);
    }
    return ids;
  }

 private:
  std::unordered_map<std::string_view, std::uint32_t> table_;
};

std::size_t window_count(std::size_t len, int n) {
  const auto un = static_cast<std::size_t>(n);
  return len >= un ? len - un + 1 : 0;
}

// Sorted (n-gram, count) table. Orders above kMaxBleuOrder are not needed by
// any metric here except GLEU with a custom max_n, which falls back to
// order-wise hashing below.
CountTable count_ngrams(const Ids& ids, int n) {
  CountTable table;
  const std::size_t windows = window_count(ids.size(), n);
  if (windows == 0) return table;
  std::vector<Key> keys(windows);
  for (std::size_t i = 0; i < windows; ++i) {
    Key k{};
    for (int j = 0; j < n; ++j) k[static_cast<std::size_t>(j)] = ids[i + static_cast<std::size_t>(j)];
    keys[i] = k;
  }
  std::sort(keys.begin(), keys.end());
  for (const Key& k : keys) {
    if (!table.empty() && table.back().first == k) {
      ++table.back().second;
    } else {
      table.emplace_back(k, 1);
    }
  }
  return table;
}

// Σ min(count_a, count_b) by merge join.
std::size_t overlap(const CountTable& a, const CountTable& b) {
  std::size_t total = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      total += std::min(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
  return total;
}

// Per-n-gram maximum count over several tables.
CountTable max_counts(const std::vector<const CountTable*>& tables) {
  CountTable all;
  for (const auto* t : tables) all.insert(all.end(), t->begin(), t->end());
  std::sort(all.begin(), all.end());
  CountTable out;
  for (const auto& [k, c] : all) {
    if (!out.empty() && out.back().first == k) {
      out.back().second = std::max(out.back().second, c);
    } else {
      out.emplace_back(k, c);
    }
  }
  return out;
}

std::size_t lcs_ids(const Ids& a, const Ids& b) {
  if (a.empty() || b.empty()) return 0;
  const Ids& shorter = a.size() < b.size() ? a : b;
  const Ids& longer = a.size() < b.size() ? b : a;
  std::vector<std::uint32_t> row(shorter.size() + 1, 0);
  for (std::uint32_t x : longer) {
    std::uint32_t diag = 0;  // row[j-1] from the previous pass
    for (std::size_t j = 1; j <= shorter.size(); ++j) {
      const std::uint32_t up = row[j];
      row[j] = x == shorter[j - 1] ? diag + 1 : std::max(up, row[j - 1]);
      diag = up;
    }
  }
  return row.back();
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

Prf make_prf(std::size_t hits, std::size_t pred_total, std::size_t ref_total) {
  Prf p;
  p.precision = ratio(hits, pred_total);
  p.recall = ratio(hits, ref_total);
  const double sum = p.precision + p.recall;
  p.f1 = sum > 0.0 ? 2.0 * p.precision * p.recall / sum : 0.0;
  return p;
}

Prf combine(const std::vector<Prf>& per_ref, RefAggregation agg) {
  if (agg == RefAggregation::kMax) {
    Prf best = per_ref.front();
    for (const auto& p : per_ref) {
      if (p.f1 > best.f1) best = p;
    }
    return best;
  }
  Prf mean;
  for (const auto& p : per_ref) {
    mean.precision += p.precision;
    mean.recall += p.recall;
    mean.f1 += p.f1;
  }
  const auto n = static_cast<double>(per_ref.size());
  mean.precision /= n;
  mean.recall /= n;
  mean.f1 /= n;
  return mean;
}

double combine(const std::vector<double>& per_ref, RefAggregation agg) {
  if (agg == RefAggregation::kMax) {
    return *std::max_element(per_ref.begin(), per_ref.end());
  }
  double sum = 0.0;
  for (double v : per_ref) sum += v;
  return sum / static_cast<double>(per_ref.size());
}

// Encoded prediction and references with lazily built n-gram tables.
class Encoded {
 public:
  Encoded(const TokenSequence& pred, std::span<const TokenSequence> refs) {
    if (refs.empty()) throw std::invalid_argument("metric requires at least one reference");
    pred_ = interner_.encode(pred);
    refs_.reserve(refs.size());
    for (const auto& r : refs) refs_.push_back(interner_.encode(r));
    pred_tables_.resize(static_cast<std::size_t>(kMaxBleuOrder));
    ref_tables_.assign(refs_.size(), std::vector<CountTable>(kMaxBleuOrder));
    pred_built_.assign(kMaxBleuOrder, false);
    ref_built_.assign(kMaxBleuOrder, false);
  }

  const Ids& pred() const { return pred_; }
  const std::vector<Ids>& refs() const { return refs_; }

  const CountTable& pred_table(int n) {
    const auto i = static_cast<std::size_t>(n - 1);
    if (!pred_built_[i]) {
      pred_tables_[i] = count_ngrams(pred_, n);
      pred_built_[i] = true;
    }
    return pred_tables_[i];
  }

  const CountTable& ref_table(std::size_t r, int n) {
    const auto i = static_cast<std::size_t>(n - 1);
    if (!ref_built_[i]) {
      for (std::size_t j = 0; j < refs_.size(); ++j) ref_tables_[j][i] = count_ngrams(refs_[j], n);
      ref_built_[i] = true;
    }
    return ref_tables_[r][i];
  }

  BleuStats bleu_stats() {
    BleuStats s;
    s.pred_length = pred_.size();
    s.ref_length = closest_ref_length();
    for (int n = 1; n <= kMaxBleuOrder; ++n) {
      const auto i = static_cast<std::size_t>(n - 1);
      s.totals[i] = window_count(pred_.size(), n);
      if (s.totals[i] == 0) continue;
      std::vector<const CountTable*> tables;
      for (std::size_t r = 0; r < refs_.size(); ++r) tables.push_back(&ref_table(r, n));
      s.matches[i] = overlap(pred_table(n), max_counts(tables));
    }
    return s;
  }

  double gleu(int max_n, RefAggregation agg) {
    std::size_t pred_total = 0;
    for (int n = 1; n <= max_n; ++n) pred_total += window_count(pred_.size(), n);
    if (pred_total == 0) return 0.0;
    std::vector<double> per_ref;
    for (std::size_t r = 0; r < refs_.size(); ++r) {
      std::size_t hits = 0;
      std::size_t ref_total = 0;
      for (int n = 1; n <= max_n; ++n) {
        ref_total += window_count(refs_[r].size(), n);
        if (n <= kMaxBleuOrder) {
          hits += overlap(pred_table(n), ref_table(r, n));
        } else {
          hits += overlap_high_order(refs_[r], n);
        }
      }
      per_ref.push_back(std::min(ratio(hits, pred_total), ratio(hits, ref_total)));
    }
    return combine(per_ref, agg);
  }

  Prf rouge_n(int n, RefAggregation agg) {
    std::vector<Prf> per_ref;
    const std::size_t pred_total = window_count(pred_.size(), n);
    for (std::size_t r = 0; r < refs_.size(); ++r) {
      const std::size_t hits = overlap(pred_table(n), ref_table(r, n));
      per_ref.push_back(make_prf(hits, pred_total, window_count(refs_[r].size(), n)));
    }
    return combine(per_ref, agg);
  }

  Prf rouge_l(RefAggregation agg) {
    std::vector<Prf> per_ref;
    for (const auto& ref : refs_) {
      per_ref.push_back(make_prf(lcs_ids(pred_, ref), pred_.size(), ref.size()));
    }
    return combine(per_ref, agg);
  }

 private:
  std::size_t closest_ref_length() const {
    std::size_t best = refs_.front().size();
    const auto c = static_cast<long long>(pred_.size());
    for (const auto& r : refs_) {
      const auto len = static_cast<long long>(r.size());
      const auto d = std::llabs(len - c);
      const auto bd = std::llabs(static_cast<long long>(best) - c);
      if (d < bd || (d == bd && r.size() < best)) best = r.size();
    }
    return best;
  }

  // GLEU orders beyond the fixed-width key: hash windows as strings of ids.
  std::size_t overlap_high_order(const Ids& ref, int n) const {
    auto windows = [n](const Ids& ids) {
      std::unordered_map<std::string, std::size_t> m;
      const std::size_t w = window_count(ids.size(), n);
      for (std::size_t i = 0; i < w; ++i) {
        std::string key(reinterpret_cast<const char*>(ids.data() + i),
                        sizeof(std::uint32_t) * static_cast<std::size_t>(n));
        ++m[key];
      }
      return m;
    };
    const auto p = windows(pred_);
    const auto q = windows(ref);
    std::size_t hits = 0;
    for (const auto& [k, c] : p) {
      if (auto it = q.find(k); it != q.end()) hits += std::min(c, it->second);
    }
    return hits;
  }

  Interner interner_;
  Ids pred_;
  std::vector<Ids> refs_;
  std::vector<CountTable> pred_tables_;
  std::vector<std::vector<CountTable>> ref_tables_;
  std::vector<bool> pred_built_;
  std::vector<bool> ref_built_;
};

void check_order(int k, int lo, int hi, const char* what) {
  if (k < lo || k > hi) {
    throw std::invalid_argument(std::string(what) + " order out of range: " + std::to_string(k));
  }
}

}  // namespace

std::string_view smoothing_name(Smoothing s) {
  return s == Smoothing::kNone ? "none" : "add_epsilon";
}

Smoothing parse_smoothing(std::string_view name) {
  if (name == "none") return Smoothing::kNone;
  if (name == "add_epsilon") return Smoothing::kAddEpsilon;
  throw ConfigError("unknown smoothing '" + std::string(name) + "' (expected none or add_epsilon)");
}

std::string_view aggregation_name(RefAggregation a) {
  return a == RefAggregation::kMax ? "max" : "mean";
}

RefAggregation parse_aggregation(std::string_view name) {
  if (name == "max") return RefAggregation::kMax;
  if (name == "mean") return RefAggregation::kMean;
  throw ConfigError("unknown reference aggregation '" + std::string(name) + "' (expected max or mean)");
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (std::size_t i = 0; i < matches.size(); ++i) {
    matches[i] += o.matches[i];
    totals[i] += o.totals[i];
  }
  pred_length += o.pred_length;
  ref_length += o.ref_length;
  return *this;
}

BleuStats bleu_stats(const TokenSequence& pred, std::span<const TokenSequence> refs) {
  Encoded enc(pred, refs);
  return enc.bleu_stats();
}

double bleu_from_stats(const BleuStats& s, int k, Smoothing smoothing) {
  check_order(k, 1, kMaxBleuOrder, "BLEU");
  if (s.pred_length == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= k; ++n) {
    const auto i = static_cast<std::size_t>(n - 1);
    double p;
    if (s.matches[i] > 0) {
      p = static_cast<double>(s.matches[i]) / static_cast<double>(s.totals[i]);
    } else if (smoothing == Smoothing::kAddEpsilon) {
      p = kSmoothingEpsilon / static_cast<double>(std::max<std::size_t>(s.totals[i], 1));
    } else {
      return 0.0;
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(s.pred_length);
  const double r = static_cast<double>(s.ref_length);
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / static_cast<double>(k));
}

double bleu_k(const TokenSequence& pred, std::span<const TokenSequence> refs,
              int k, Smoothing smoothing) {
  check_order(k, 1, kMaxBleuOrder, "BLEU");
  return bleu_from_stats(bleu_stats(pred, refs), k, smoothing);
}

double gleu(const TokenSequence& pred, std::span<const TokenSequence> refs,
            int max_n, RefAggregation agg) {
  if (max_n < 1) throw std::invalid_argument("GLEU max_n must be >= 1");
  Encoded enc(pred, refs);
  return enc.gleu(max_n, agg);
}

Prf rouge_n(const TokenSequence& pred, std::span<const TokenSequence> refs,
            int n, RefAggregation agg) {
  check_order(n, 1, kMaxBleuOrder, "ROUGE-N");
  Encoded enc(pred, refs);
  return enc.rouge_n(n, agg);
}

Prf rouge_l(const TokenSequence& pred, std::span<const TokenSequence> refs,
            RefAggregation agg) {
  Encoded enc(pred, refs);
  return enc.rouge_l(agg);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  TokenSequence sa{{a.begin(), a.end()}};
  TokenSequence sb{{b.begin(), b.end()}};
  Interner in;
  return lcs_ids(in.encode(sa), in.encode(sb));
}

SentenceScores score_tokens(const TokenSequence& pred, std::span<const TokenSequence> refs,
                            const MetricSettings& settings) {
  Encoded enc(pred, refs);
  SentenceScores s;
  const BleuStats stats = enc.bleu_stats();
  for (int k = 1; k <= kMaxBleuOrder; ++k) {
    s.bleu[static_cast<std::size_t>(k - 1)] = bleu_from_stats(stats, k, settings.smoothing);
  }
  s.gleu = enc.gleu(settings.gleu_max_n, settings.aggregation);
  s.rouge1 = enc.rouge_n(1, settings.aggregation);
  s.rouge2 = enc.rouge_n(2, settings.aggregation);
  s.rougeL = enc.rouge_l(settings.aggregation);
  return s;
}

SentenceScores score_example(const EvalExample& ex, TokenPolicy policy,
                             const MetricSettings& settings) {
  if (!ex.prediction) throw DataError("example " + ex.id + " has no prediction");
  if (ex.references.empty()) throw DataError("example " + ex.id + " has no references");
  const TokenSequence pred = tokenize(*ex.prediction, policy);
  std::vector<TokenSequence> refs;
  refs.reserve(ex.references.size());
  for (const auto& r : ex.references) refs.push_back(tokenize(r, policy));
  return score_tokens(pred, refs, settings);
}

}  // namespace medcurate

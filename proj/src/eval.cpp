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

#include "medcurate/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstdint>
#include <exception>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "medcurate/error.hpp"

namespace medcurate {
namespace {

void check_buckets(const std::vector<CountBucket>& buckets) {
  if (buckets.empty()) throw ConfigError("bucket list is empty");
  std::vector<CountBucket> sorted = buckets;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.lower < b.lower; });
  if (sorted.front().lower >= 0) throw ConfigError("buckets do not cover count 0");
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (!sorted[i].upper || *sorted[i].upper != sorted[i + 1].lower) {
      throw ConfigError("buckets '" + sorted[i].label + "' and '" + sorted[i + 1].label +
                        "' overlap or leave a gap");
    }
  }
  if (sorted.back().upper) throw ConfigError("largest bucket must be unbounded");
}

// Per-category accumulator of per-example scores.
struct Accumulator {
  std::size_t count = 0;
  std::array<double, kMaxBleuOrder> bleu{};
  double gleu = 0.0;
  Prf rouge1, rouge2, rougeL;
  double reward = 0.0;
  std::size_t rewarded = 0;
  BleuStats pooled;

  void add(const ExampleScore& e) {
    ++count;
    for (std::size_t k = 0; k < bleu.size(); ++k) bleu[k] += e.scores.bleu[k];
    gleu += e.scores.gleu;
    add_prf(rouge1, e.scores.rouge1);
    add_prf(rouge2, e.scores.rouge2);
    add_prf(rougeL, e.scores.rougeL);
    if (e.reward) {
      reward += *e.reward;
      ++rewarded;
    }
    pooled += e.bleu_stats;
  }

  static void add_prf(Prf& acc, const Prf& p) {
    acc.precision += p.precision;
    acc.recall += p.recall;
    acc.f1 += p.f1;
  }

  AggregateScores mean(BleuMode mode, Smoothing smoothing) const {
    AggregateScores s;
    if (count == 0) return s;
    const auto n = static_cast<double>(count);
    for (std::size_t k = 0; k < bleu.size(); ++k) {
      s.bleu[k] = mode == BleuMode::kCorpus
                      ? bleu_from_stats(pooled, static_cast<int>(k + 1), smoothing)
                      : bleu[k] / n;
    }
    s.gleu = gleu / n;
    auto div = [n](const Prf& p) { return Prf{p.precision / n, p.recall / n, p.f1 / n}; };
    s.rouge1 = div(rouge1);
    s.rouge2 = div(rouge2);
    s.rougeL = div(rougeL);
    if (rewarded > 0) s.reward = reward / static_cast<double>(rewarded);
    return s;
  }
};

ExampleScore score_one(const EvalExample& ex, TokenPolicy policy,
                       const MetricSettings& settings) {
  if (!ex.prediction) throw DataError("example " + ex.id + " has no prediction");
  if (ex.references.empty()) throw DataError("example " + ex.id + " has no references");
  ExampleScore out;
  out.id = ex.id;
  out.category = ex.category;
  const TokenSequence pred = tokenize(*ex.prediction, policy);
  std::vector<TokenSequence> refs;
  refs.reserve(ex.references.size());
  for (const auto& r : ex.references) refs.push_back(tokenize(r, policy));
  out.scores = score_tokens(pred, refs, settings);
  out.bleu_stats = bleu_stats(pred, refs);
  return out;
}

std::string_view bleu_mode_name(BleuMode m) {
  return m == BleuMode::kSentence ? "sentence" : "corpus";
}

MetricDeltas deltas(const AggregateScores& a, const AggregateScores& b) {
  MetricDeltas d;
  for (std::size_t k = 0; k < d.bleu.size(); ++k) d.bleu[k] = b.bleu[k] - a.bleu[k];
  d.gleu = b.gleu - a.gleu;
  d.rouge1 = b.rouge1.f1 - a.rouge1.f1;
  d.rouge2 = b.rouge2.f1 - a.rouge2.f1;
  d.rougeL = b.rougeL.f1 - a.rougeL.f1;
  if (a.reward && b.reward) d.reward = *b.reward - *a.reward;
  return d;
}

}  // namespace

bool CountBucket::contains(std::size_t n) const {
  const auto v = static_cast<long long>(n);
  return v > lower && (!upper || v <= *upper);
}

std::vector<CountBucket> default_buckets() {
  return {
      {">10000", 10000, std::nullopt},
      {"5000-10000", 5000, 10000},
      {"1000-5000", 1000, 5000},
      {"<1000", -1, 1000},
  };
}

std::size_t CategoryTable::bucket_of(const std::string& category) const {
  const std::size_t n = counts.at(category);
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (buckets[i].contains(n)) return i;
  }
  throw std::out_of_range("no bucket holds count " + std::to_string(n));
}

std::vector<std::string> CategoryTable::members(std::size_t bucket) const {
  std::vector<std::string> out;
  for (const auto& [cat, n] : counts) {
    if (buckets.at(bucket).contains(n)) out.push_back(cat);
  }
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    return counts.at(a) > counts.at(b);
  });
  return out;
}

CategoryTable stratify(std::span<const EvalExample> examples, const StratifyOptions& options) {
  check_buckets(options.buckets);
  CategoryTable table;
  table.buckets = options.buckets;
  const std::unordered_set<std::string> declared(options.categories.begin(),
                                                 options.categories.end());
  for (const auto& c : options.categories) table.counts.emplace(c, 0);
  for (const auto& ex : examples) {
    if (options.strict && !declared.contains(ex.category)) {
      throw DataError("example " + ex.id + " has undeclared category '" + ex.category + "'");
    }
    ++table.counts[ex.category];
    ++table.total;
  }
  return table;
}

std::string format_category_table(const CategoryTable& table) {
  std::string out = fmt::format("{:<12} {:>6}  {}\n", "Dataset Size", "Count", "Category");
  for (std::size_t b = 0; b < table.buckets.size(); ++b) {
    const auto members = table.members(b);
    std::string names;
    for (const auto& m : members) {
      if (!names.empty()) names += "; ";
      names += m;
    }
    out += fmt::format("{:<12} {:>6}  {}\n", table.buckets[b].label, members.size(),
                       names.empty() ? "-" : names);
  }
  out += "\n";
  std::vector<std::pair<std::string, std::size_t>> rows(table.counts.begin(), table.counts.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  out += fmt::format("{:<32} {:>8}\n", "category", "questions");
  for (const auto& [cat, n] : rows) out += fmt::format("{:<32} {:>8}\n", cat, n);
  out += fmt::format("total: {} questions in {} categories\n", table.total, table.counts.size());
  return out;
}

JoinResult join_predictions(std::span<const EvalExample> bench,
                            std::span<const PredictionRecord> preds, double coverage_floor) {
  std::unordered_map<std::string_view, const PredictionRecord*> by_id;
  by_id.reserve(preds.size());
  for (const auto& p : preds) {
    if (!by_id.emplace(p.id, &p).second) {
      throw DataError("duplicate prediction id '" + p.id + "'");
    }
  }
  JoinResult result;
  std::size_t used = 0;
  for (const auto& ex : bench) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) {
      result.unmatched.push_back(ex.id);
      continue;
    }
    EvalExample joined = ex;
    joined.prediction = it->second->prediction;
    result.joined.push_back(std::move(joined));
    ++used;
  }
  result.orphan_predictions = preds.size() - used;
  const double coverage =
      bench.empty() ? 1.0
                    : static_cast<double>(result.joined.size()) / static_cast<double>(bench.size());
  if (coverage < coverage_floor) {
    std::string sample;
    for (std::size_t i = 0; i < result.unmatched.size() && i < 5; ++i) {
      sample += (i ? ", " : "") + result.unmatched[i];
    }
    throw DataError(fmt::format(
        "prediction coverage {:.4f} below floor {:.4f}: {} of {} benchmark ids missing (e.g. {})",
        coverage, coverage_floor, result.unmatched.size(), bench.size(), sample));
  }
  return result;
}

std::vector<ExampleScore> score_examples_serial(std::span<const EvalExample> examples,
                                                TokenPolicy policy,
                                                const MetricSettings& settings) {
  std::vector<ExampleScore> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(score_one(ex, policy, settings));
  return out;
}

std::vector<ExampleScore> score_examples_parallel(std::span<const EvalExample> examples,
                                                  TokenPolicy policy,
                                                  const MetricSettings& settings, int workers) {
  std::vector<ExampleScore> out(examples.size());
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error;
  const auto n = static_cast<long long>(examples.size());
#pragma omp parallel for num_threads(std::max(workers, 1)) schedule(dynamic, 16)
  for (long long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      out[idx] = score_one(examples[idx], policy, settings);
    } catch (...) {
#pragma omp critical(medcurate_eval_error)
      {
        if (idx < error_index) {
          error_index = idx;
          error = std::current_exception();
        }
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::string dataset_fingerprint(std::span<const EvalExample> bench) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  auto sep = [&mix](char c) { mix(std::string_view(&c, 1)); };
  for (const auto& ex : bench) {
    mix(ex.id);
    sep('\x1f');
    mix(ex.question);
    sep('\x1f');
    for (const auto& r : ex.references) {
      mix(r);
      sep('\x1e');
    }
    sep('\x1f');
    mix(ex.category);
    sep('\x1d');
  }
  return fmt::format("fnv1a64:{:016x}", h);
}

MetricReport aggregate(std::span<const ExampleScore> scores, const EvalConfig& config) {
  Accumulator overall;
  std::map<std::string, Accumulator> by_category;
  for (const auto& e : scores) {
    overall.add(e);
    by_category[e.category].add(e);
  }
  MetricReport report;
  report.model = config.model;
  report.overall = overall.mean(config.bleu_mode, config.metrics.smoothing);
  for (const auto& [cat, acc] : by_category) {
    report.per_category.push_back(
        {cat, acc.count, acc.mean(config.bleu_mode, config.metrics.smoothing)});
  }
  auto& m = report.meta;
  m.policy = std::string(policy_name(config.policy));
  m.aggregation = std::string(aggregation_name(config.metrics.aggregation));
  m.smoothing = std::string(smoothing_name(config.metrics.smoothing));
  m.bleu_mode = std::string(bleu_mode_name(config.bleu_mode));
  m.gleu_max_n = config.metrics.gleu_max_n;
  m.metric_version = std::string(kMetricVersion);
  m.example_count = scores.size();
  return report;
}

EvalResult evaluate(std::span<const EvalExample> bench, std::span<const PredictionRecord> preds,
                    const EvalConfig& config) {
  JoinResult joined = join_predictions(bench, preds, config.coverage_floor);
  EvalResult result;
  result.examples = config.workers > 1
                        ? score_examples_parallel(joined.joined, config.policy, config.metrics,
                                                  config.workers)
                        : score_examples_serial(joined.joined, config.policy, config.metrics);
  if (config.reward != nullptr) {
    std::vector<ScoreRequest> requests;
    requests.reserve(joined.joined.size());
    for (const auto& ex : joined.joined) requests.push_back({ex.id, ex.question, *ex.prediction});
    const auto outcomes = config.reward->score_all(requests);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (!outcomes[i].ok()) {
        throw BackendError("reward scoring failed for example '" + outcomes[i].id +
                           "': " + outcomes[i].message);
      }
      result.examples[i].reward = outcomes[i].response->score;
    }
  }
  result.report = aggregate(result.examples, config);
  auto& m = result.report.meta;
  m.fingerprint = dataset_fingerprint(bench);
  m.benchmark_size = bench.size();
  m.unmatched = joined.unmatched.size();
  if (config.reward != nullptr) m.reward_backend = config.reward->backend().name();
  return result;
}

Comparison compare_runs(const MetricReport& a, const MetricReport& b) {
  if (a.meta.fingerprint != b.meta.fingerprint) {
    throw DataError("reports were computed on different datasets (" + a.meta.fingerprint +
                    " vs " + b.meta.fingerprint + ")");
  }
  auto settings = [](const ReportMetadata& m) {
    return fmt::format("policy={} aggregation={} smoothing={} bleu={} gleu_max_n={} version={}",
                       m.policy, m.aggregation, m.smoothing, m.bleu_mode, m.gleu_max_n,
                       m.metric_version);
  };
  if (settings(a.meta) != settings(b.meta)) {
    throw ConfigError("reports use different metric settings: [" + settings(a.meta) +
                      "] vs [" + settings(b.meta) + "]");
  }
  Comparison cmp;
  cmp.model_a = a.model;
  cmp.model_b = b.model;
  cmp.overall = deltas(a.overall, b.overall);
  std::map<std::string, const CategoryResult*> in_b;
  for (const auto& c : b.per_category) in_b[c.category] = &c;
  for (const auto& c : a.per_category) {
    auto it = in_b.find(c.category);
    if (it == in_b.end()) {
      cmp.only_in_a.push_back(c.category);
      continue;
    }
    cmp.per_category.push_back({c.category, c.count, deltas(c.scores, it->second->scores)});
    in_b.erase(it);
  }
  for (const auto& [cat, _] : in_b) cmp.only_in_b.push_back(cat);
  return cmp;
}

}  // namespace medcurate

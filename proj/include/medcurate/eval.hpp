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

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medcurate/corpus.hpp"
#include "medcurate/metrics.hpp"
#include "medcurate/reward.hpp"
#include "medcurate/tokenizer.hpp"

namespace medcurate {

inline constexpr std::string_view kMetricVersion = "medcurate-metrics/1";

// ---- stratification ---------------------------------------------------

// Half-open count range (lower, upper]; no upper bound when upper is empty.
struct CountBucket {
  std::string label;
  long long lower = 0;
  std::optional<long long> upper;

  bool contains(std::size_t n) const;
};

// >10000, 5000-10000, 1000-5000, <1000.
std::vector<CountBucket> default_buckets();

struct CategoryTable {
  std::map<std::string, std::size_t> counts;
  std::vector<CountBucket> buckets;
  std::size_t total = 0;

  // Index into `buckets`. Throws std::out_of_range for unknown categories.
  std::size_t bucket_of(const std::string& category) const;
  // Categories in a bucket, largest first, ties by name.
  std::vector<std::string> members(std::size_t bucket) const;
};

struct StratifyOptions {
  std::vector<CountBucket> buckets = default_buckets();
  // Declared category set. Declared categories with no examples are listed
  // with count 0.
  std::vector<std::string> categories;
  // Reject categories outside the declared set.
  bool strict = false;
};

// Throws ConfigError when buckets overlap or leave gaps, DataError on an
// unknown category in strict mode.
CategoryTable stratify(std::span<const EvalExample> examples,
                       const StratifyOptions& options = {});

std::string format_category_table(const CategoryTable& table);

// ---- join -------------------------------------------------------------

struct JoinResult {
  std::vector<EvalExample> joined;
  std::vector<std::string> unmatched;  // benchmark ids without a prediction
  std::size_t orphan_predictions = 0;  // predictions without a benchmark id
};

// Inner join by id in benchmark order. Throws DataError on a duplicate
// prediction id or when joined/benchmark falls below coverage_floor.
JoinResult join_predictions(std::span<const EvalExample> bench,
                            std::span<const PredictionRecord> preds,
                            double coverage_floor = 1.0);

// ---- scoring kernels --------------------------------------------------

struct ExampleScore {
  std::string id;
  std::string category;
  SentenceScores scores;
  BleuStats bleu_stats;
  std::optional<double> reward;
};

// Reference kernel, one thread.
std::vector<ExampleScore> score_examples_serial(std::span<const EvalExample> examples,
                                                TokenPolicy policy,
                                                const MetricSettings& settings);

// OpenMP kernel; bit-identical to the serial kernel for any worker count.
std::vector<ExampleScore> score_examples_parallel(std::span<const EvalExample> examples,
                                                  TokenPolicy policy,
                                                  const MetricSettings& settings,
                                                  int workers);

// ---- reports ----------------------------------------------------------

// Means in [0,1]; presentation multiplies by 100.
struct AggregateScores {
  std::array<double, kMaxBleuOrder> bleu{};
  double gleu = 0.0;
  Prf rouge1;
  Prf rouge2;
  Prf rougeL;
  std::optional<double> reward;
};

struct CategoryResult {
  std::string category;
  std::size_t count = 0;
  AggregateScores scores;
};

enum class BleuMode { kSentence, kCorpus };

struct ReportMetadata {
  std::string policy;
  std::string aggregation;
  std::string smoothing;
  std::string bleu_mode;
  int gleu_max_n = 4;
  std::string metric_version;
  std::string fingerprint;
  std::size_t benchmark_size = 0;
  std::size_t example_count = 0;
  std::size_t unmatched = 0;
  std::string reward_backend;  // empty when reward scoring was off
};

struct MetricReport {
  std::string model;
  AggregateScores overall;
  std::vector<CategoryResult> per_category;  // sorted by category
  ReportMetadata meta;
};

struct EvalConfig {
  std::string model = "model";
  TokenPolicy policy = TokenPolicy::kCjkChar;
  MetricSettings metrics;
  BleuMode bleu_mode = BleuMode::kSentence;
  double coverage_floor = 1.0;
  int workers = 1;
  // Optional reward scoring of (question, prediction) pairs.
  RewardClient* reward = nullptr;
};

struct EvalResult {
  MetricReport report;
  std::vector<ExampleScore> examples;
};

// Content hash of the benchmark (ids, questions, references, categories).
std::string dataset_fingerprint(std::span<const EvalExample> bench);

// Joins, scores and aggregates. Deterministic for fixed inputs and config.
// Throws DataError from the join, BackendError when reward scoring fails.
EvalResult evaluate(std::span<const EvalExample> bench,
                    std::span<const PredictionRecord> preds, const EvalConfig& config);

// Means over per-example scores, overall and per category.
MetricReport aggregate(std::span<const ExampleScore> scores, const EvalConfig& config);

std::string format_metric_table(const MetricReport& report);
std::string metric_report_json(const MetricReport& report);
// Throws DataError on malformed input.
MetricReport parse_metric_report(std::string_view json_text);
std::string category_csv(const MetricReport& report);
std::string example_scores_jsonl(const MetricReport& report,
                                 std::span<const ExampleScore> examples);

// ---- run comparison ---------------------------------------------------

struct MetricDeltas {
  std::array<double, kMaxBleuOrder> bleu{};
  double gleu = 0.0;
  double rouge1 = 0.0;  // f1
  double rouge2 = 0.0;
  double rougeL = 0.0;
  std::optional<double> reward;
};

struct CategoryDelta {
  std::string category;
  std::size_t count = 0;
  MetricDeltas delta;
};

struct Comparison {
  std::string model_a;
  std::string model_b;
  MetricDeltas overall;  // b - a
  std::vector<CategoryDelta> per_category;
  std::vector<std::string> only_in_a;
  std::vector<std::string> only_in_b;
};

// Throws DataError when fingerprints differ and ConfigError when metric
// settings differ.
Comparison compare_runs(const MetricReport& a, const MetricReport& b);

std::string format_comparison(const Comparison& cmp);
std::string comparison_csv(const Comparison& cmp);

}  // namespace medcurate

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

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include "medcurate/corpus.hpp"
#include "medcurate/tokenizer.hpp"

namespace medcurate {

inline constexpr int kMaxBleuOrder = 4;

// Numerator added to a zero n-gram match count under add_epsilon smoothing.
// Only meant for diagnostics; reported scores default to no smoothing.
inline constexpr double kSmoothingEpsilon = 0.1;

enum class Smoothing { kNone, kAddEpsilon };

// How GLEU and ROUGE combine per-reference scores. BLEU always uses
// multi-reference clipping with closest-length brevity penalty.
enum class RefAggregation { kMax, kMean };

std::string_view smoothing_name(Smoothing s);
Smoothing parse_smoothing(std::string_view name);
std::string_view aggregation_name(RefAggregation a);
RefAggregation parse_aggregation(std::string_view name);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool operator==(const Prf&) const = default;
};

struct SentenceScores {
  std::array<double, kMaxBleuOrder> bleu{};  // bleu[k-1] is BLEU-k
  double gleu = 0.0;
  Prf rouge1;
  Prf rouge2;
  Prf rougeL;
  bool operator==(const SentenceScores&) const = default;
};

struct MetricSettings {
  int gleu_max_n = 4;
  Smoothing smoothing = Smoothing::kNone;
  RefAggregation aggregation = RefAggregation::kMax;
};

// Sufficient statistics for BLEU-1..4. Summing these across sentences and
// scoring the sum gives corpus-level BLEU.
struct BleuStats {
  std::array<std::size_t, kMaxBleuOrder> matches{};
  std::array<std::size_t, kMaxBleuOrder> totals{};
  std::size_t pred_length = 0;
  std::size_t ref_length = 0;  // closest reference length, ties to shorter

  BleuStats& operator+=(const BleuStats& o);
};

// All metric functions throw std::invalid_argument when `refs` is empty.

BleuStats bleu_stats(const TokenSequence& pred,
                     std::span<const TokenSequence> refs);
double bleu_from_stats(const BleuStats& stats, int k,
                       Smoothing smoothing = Smoothing::kNone);

double bleu_k(const TokenSequence& pred, std::span<const TokenSequence> refs,
              int k, Smoothing smoothing = Smoothing::kNone);

// Pooled n-gram GLEU: min(precision, recall) over orders 1..max_n.
double gleu(const TokenSequence& pred, std::span<const TokenSequence> refs,
            int max_n = 4, RefAggregation agg = RefAggregation::kMax);

Prf rouge_n(const TokenSequence& pred, std::span<const TokenSequence> refs,
            int n, RefAggregation agg = RefAggregation::kMax);

Prf rouge_l(const TokenSequence& pred, std::span<const TokenSequence> refs,
            RefAggregation agg = RefAggregation::kMax);

std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b);

// Every metric for one prediction, sharing one token interning pass.
SentenceScores score_tokens(const TokenSequence& pred,
                            std::span<const TokenSequence> refs,
                            const MetricSettings& settings = {});

// Tokenizes prediction and references under `policy`. Throws DataError
// naming the example when it has no prediction.
SentenceScores score_example(const EvalExample& ex, TokenPolicy policy,
                             const MetricSettings& settings = {});

}  // namespace medcurate

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

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medcurate/corpus.hpp"
#include "medcurate/reward.hpp"
#include "medcurate/tokenizer.hpp"

namespace medcurate {

// Discard reason labels.
inline constexpr std::string_view kReasonEmptyOutput = "empty_output";
inline constexpr std::string_view kReasonPii = "pii";
inline constexpr std::string_view kReasonTooShort = "too_short";
inline constexpr std::string_view kReasonLowQuality = "low_quality";
inline constexpr std::string_view kReasonScoreUnavailable = "score_unavailable";

struct StageReport {
  std::string stage;
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t discarded = 0;
  std::map<std::string, std::size_t> reasons;

  StageReport& operator+=(const StageReport& other);
  bool operator==(const StageReport&) const = default;
};

enum class Decision { kKeep, kDiscard };

struct FilterVerdict {
  Decision decision = Decision::kKeep;
  std::optional<std::string> reason;
  std::optional<InstructionRecord> transformed;

  static FilterVerdict keep() { return {}; }
  static FilterVerdict discard(std::string_view reason) {
    return {Decision::kDiscard, std::string(reason), std::nullopt};
  }
  bool kept() const { return decision == Decision::kKeep; }
};

// ---- personal data ----------------------------------------------------

struct PiiPatternSet {
  bool email = true;
  bool cn_mobile = true;
  // Off by default; the heuristics below trade recall for false positives.
  bool cn_landline = false;
  bool cn_resident_id = false;
  bool contact_phrase = false;
};

// Compiled matchers. Immutable after construction and safe to share across
// threads.
class PiiScanner {
 public:
  explicit PiiScanner(PiiPatternSet patterns = {});
  ~PiiScanner();
  PiiScanner(PiiScanner&&) noexcept;
  PiiScanner& operator=(PiiScanner&&) noexcept;

  // Name of the first enabled pattern that fires, if any. Full-width digits
  // and letters are folded before matching.
  std::optional<std::string_view> find(std::string_view text) const;
  const PiiPatternSet& patterns() const { return patterns_; }

 private:
  struct Impl;
  PiiPatternSet patterns_;
  std::unique_ptr<Impl> impl_;
};

// 18-digit resident identity number checksum (ISO 7064 MOD 11-2).
bool valid_resident_id(std::string_view id18);

// Discards the whole record when instruction, input or output contains
// personal data. Never redacts.
FilterVerdict filter_pii(const InstructionRecord& rec, const PiiScanner& scanner);

// ---- heuristics -------------------------------------------------------

inline constexpr std::size_t kDefaultMinTokens = 200;
inline constexpr double kDefaultQualityThreshold = 0.5;

// Discards when the output has fewer than min_tokens tokens.
FilterVerdict filter_length(const InstructionRecord& rec,
                            std::size_t min_tokens = kDefaultMinTokens,
                            TokenPolicy policy = TokenPolicy::kCjkChar);

// Discards when score < threshold; a score equal to the threshold is kept.
// Throws ConfigError naming the record when it carries no score.
FilterVerdict filter_quality(const InstructionRecord& rec,
                             double threshold = kDefaultQualityThreshold);

// Rewrites list markers at the start of a line ("(1)", "（1）", "1)", "1）",
// "1,", "1，", "1、", "1．", "1.") to "1." followed by a single space. Markers
// elsewhere in a line are left alone.
std::string normalize_enumeration(std::string_view text);

// Applies normalize_enumeration to instruction, input and output.
FilterVerdict normalize_record(const InstructionRecord& rec);

// ---- pipeline ---------------------------------------------------------

enum class StageKind { kNormalize, kPii, kLength, kScore, kQuality };

std::string_view stage_name(StageKind kind);
StageKind parse_stage(std::string_view name);
std::vector<StageKind> default_stages();

enum class ScoreFailurePolicy { kDiscard, kAbort };

struct PipelineConfig {
  std::vector<StageKind> stages = default_stages();
  std::size_t min_tokens = kDefaultMinTokens;
  double quality_threshold = kDefaultQualityThreshold;
  TokenPolicy policy = TokenPolicy::kCjkChar;
  PiiPatternSet pii;
  int workers = 1;
  std::size_t chunk_size = 4096;
  // Quality gate may run without a score stage when input already carries
  // scores.
  bool prescored = false;
  ScoreFailurePolicy on_score_failure = ScoreFailurePolicy::kDiscard;
  // Checked between chunks; when set, the run stops after the chunk in
  // flight.
  const std::atomic<bool>* stop = nullptr;
};

// Throws ConfigError. `has_scorer` says whether a reward client is wired.
void validate(const PipelineConfig& config, bool has_scorer);

// Read-only state shared by per-record stage kernels.
struct StageContext {
  const PipelineConfig* config = nullptr;
  const PiiScanner* scanner = nullptr;
};

// Verdict for one record under a pure (non-scoring) stage.
FilterVerdict apply_stage(StageKind kind, const InstructionRecord& rec,
                          const StageContext& ctx);

// Reference kernel: verdicts for every record, in order, on one thread.
std::vector<FilterVerdict> apply_stage_serial(StageKind kind,
                                              std::span<const InstructionRecord> records,
                                              const StageContext& ctx);

// OpenMP kernel with `workers` threads. Produces exactly the serial result;
// when several records throw, the lowest index's exception propagates.
std::vector<FilterVerdict> apply_stage_parallel(StageKind kind,
                                                std::span<const InstructionRecord> records,
                                                const StageContext& ctx, int workers);

// Question text sent to the scorer for an instruction record.
std::string scoring_question(const InstructionRecord& rec);

struct PipelineResult {
  // "validate" first, then one report per configured stage.
  std::vector<StageReport> reports;
  std::size_t input_records = 0;
  std::size_t output_records = 0;
  std::size_t peak_buffered = 0;
  bool interrupted = false;
};

using RecordSource = std::function<std::optional<InstructionRecord>()>;
using RecordSink = std::function<void(const InstructionRecord&)>;

// Streams `source` through the stages chunk by chunk and hands survivors to
// `sink` in input order. Validates before pulling any input. Output and
// reports do not depend on config.workers.
PipelineResult run_pipeline(const RecordSource& source, const PipelineConfig& config,
                            RewardClient* scorer, const RecordSink& sink);

// In-memory convenience wrapper.
PipelineResult run_pipeline(std::span<const InstructionRecord> input,
                            const PipelineConfig& config, RewardClient* scorer,
                            std::vector<InstructionRecord>& output);

// Aligned text table, one row per stage.
std::string format_stage_table(const std::vector<StageReport>& reports);
// One JSON object per line.
std::string stage_reports_jsonl(const std::vector<StageReport>& reports);

}  // namespace medcurate

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

#include "medcurate/curation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <exception>
#include <limits>
#include <set>

#include "json.hpp"
#include "medcurate/error.hpp"

namespace medcurate {
namespace {

constexpr std::string_view kValidateStage = "validate";

bool blank_text(std::string_view s) {
  // Whitespace-only outputs count as empty.
  return tokenize(s, TokenPolicy::kWhitespace).empty();
}

FilterVerdict validate_record(const InstructionRecord& rec) {
  if (rec.output.empty() || blank_text(rec.output)) {
    return FilterVerdict::discard(kReasonEmptyOutput);
  }
  return FilterVerdict::keep();
}

// Moves survivors of `verdicts` out of `records`, tallying the report.
void apply_verdicts(std::vector<InstructionRecord>& records,
                    std::vector<FilterVerdict>& verdicts, StageReport& report) {
  std::vector<InstructionRecord> kept;
  kept.reserve(records.size());
  report.input += records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& v = verdicts[i];
    if (v.kept()) {
      kept.push_back(v.transformed ? std::move(*v.transformed) : std::move(records[i]));
      ++report.kept;
    } else {
      ++report.discarded;
      ++report.reasons[v.reason.value_or("unspecified")];
    }
  }
  records = std::move(kept);
}

template <typename Fn>
std::vector<FilterVerdict> parallel_verdicts(std::size_t n, int workers, Fn&& fn) {
  std::vector<FilterVerdict> out(n);
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 64)
  for (long long i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      out[idx] = fn(idx);
    } catch (...) {
#pragma omp critical(medcurate_stage_error)
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

}  // namespace

StageReport& StageReport::operator+=(const StageReport& other) {
  input += other.input;
  kept += other.kept;
  discarded += other.discarded;
  for (const auto& [reason, n] : other.reasons) reasons[reason] += n;
  return *this;
}

FilterVerdict filter_length(const InstructionRecord& rec, std::size_t min_tokens,
                            TokenPolicy policy) {
  if (min_tokens == 0) return FilterVerdict::keep();
  if (tokenize(rec.output, policy).size() < min_tokens) {
    return FilterVerdict::discard(kReasonTooShort);
  }
  return FilterVerdict::keep();
}

FilterVerdict filter_quality(const InstructionRecord& rec, double threshold) {
  if (!rec.score) {
    throw ConfigError("quality gate reached record '" + rec.id +
                      "' without a score; add a score stage or supply pre-scored input");
  }
  if (*rec.score < threshold) return FilterVerdict::discard(kReasonLowQuality);
  return FilterVerdict::keep();
}

std::string_view stage_name(StageKind kind) {
  switch (kind) {
    case StageKind::kNormalize: return "normalize";
    case StageKind::kPii: return "pii";
    case StageKind::kLength: return "length";
    case StageKind::kScore: return "score";
    case StageKind::kQuality: return "quality";
  }
  return "unknown";
}

StageKind parse_stage(std::string_view name) {
  for (auto k : {StageKind::kNormalize, StageKind::kPii, StageKind::kLength,
                 StageKind::kScore, StageKind::kQuality}) {
    if (stage_name(k) == name) return k;
  }
  throw ConfigError("unknown stage '" + std::string(name) +
                    "' (expected normalize, pii, length, score or quality)");
}

std::vector<StageKind> default_stages() {
  return {StageKind::kNormalize, StageKind::kPii, StageKind::kLength,
          StageKind::kScore, StageKind::kQuality};
}

void validate(const PipelineConfig& config, bool has_scorer) {
  if (config.stages.empty()) throw ConfigError("stage list is empty");
  std::set<StageKind> seen;
  bool scored = false;
  for (auto kind : config.stages) {
    if (!seen.insert(kind).second) {
      throw ConfigError("stage '" + std::string(stage_name(kind)) + "' listed twice");
    }
    if (kind == StageKind::kScore) {
      if (!has_scorer) throw ConfigError("score stage configured but no scorer backend selected");
      scored = true;
    }
    if (kind == StageKind::kQuality && !scored && !config.prescored) {
      throw ConfigError(
          "quality stage needs an earlier score stage or prescored input");
    }
  }
  if (!(config.quality_threshold >= 0.0 && config.quality_threshold <= 1.0)) {
    throw ConfigError("quality threshold must lie in [0,1]");
  }
  if (config.workers < 1) throw ConfigError("workers must be >= 1");
  if (config.chunk_size < 1) throw ConfigError("chunk size must be >= 1");
}

FilterVerdict apply_stage(StageKind kind, const InstructionRecord& rec,
                          const StageContext& ctx) {
  switch (kind) {
    case StageKind::kNormalize: return normalize_record(rec);
    case StageKind::kPii: return filter_pii(rec, *ctx.scanner);
    case StageKind::kLength:
      return filter_length(rec, ctx.config->min_tokens, ctx.config->policy);
    case StageKind::kQuality: return filter_quality(rec, ctx.config->quality_threshold);
    case StageKind::kScore: break;
  }
  throw std::logic_error("score stage is not a per-record kernel");
}

std::vector<FilterVerdict> apply_stage_serial(StageKind kind,
                                              std::span<const InstructionRecord> records,
                                              const StageContext& ctx) {
  std::vector<FilterVerdict> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(apply_stage(kind, rec, ctx));
  return out;
}

std::vector<FilterVerdict> apply_stage_parallel(StageKind kind,
                                                std::span<const InstructionRecord> records,
                                                const StageContext& ctx, int workers) {
  return parallel_verdicts(records.size(), workers,
                           [&](std::size_t i) { return apply_stage(kind, records[i], ctx); });
}

std::string scoring_question(const InstructionRecord& rec) {
  if (rec.input.empty()) return rec.instruction;
  return rec.instruction + "\n" + rec.input;
}

PipelineResult run_pipeline(const RecordSource& source, const PipelineConfig& config,
                            RewardClient* scorer, const RecordSink& sink) {
  validate(config, scorer != nullptr);
  const PiiScanner scanner(config.pii);
  const StageContext ctx{&config, &scanner};

  PipelineResult result;
  auto add_report = [&result](std::string_view name) {
    result.reports.emplace_back();
    result.reports.back().stage = std::string(name);
  };
  add_report(kValidateStage);
  for (auto kind : config.stages) add_report(stage_name(kind));

  std::vector<InstructionRecord> chunk;
  chunk.reserve(config.chunk_size);
  while (true) {
    if (config.stop != nullptr && config.stop->load()) {
      result.interrupted = true;
      break;
    }
    chunk.clear();
    while (chunk.size() < config.chunk_size) {
      auto rec = source();
      if (!rec) break;
      chunk.push_back(std::move(*rec));
    }
    if (chunk.empty()) break;
    result.input_records += chunk.size();
    result.peak_buffered = std::max(result.peak_buffered, chunk.size());

    {
      auto verdicts = parallel_verdicts(chunk.size(), config.workers,
                                        [&](std::size_t i) { return validate_record(chunk[i]); });
      apply_verdicts(chunk, verdicts, result.reports[0]);
    }
    for (std::size_t s = 0; s < config.stages.size(); ++s) {
      StageReport& report = result.reports[s + 1];
      const StageKind kind = config.stages[s];
      if (kind != StageKind::kScore) {
        auto verdicts = config.workers > 1
                            ? apply_stage_parallel(kind, chunk, ctx, config.workers)
                            : apply_stage_serial(kind, chunk, ctx);
        apply_verdicts(chunk, verdicts, report);
        continue;
      }
      std::vector<ScoreRequest> requests;
      requests.reserve(chunk.size());
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        requests.push_back({std::to_string(i), scoring_question(chunk[i]), chunk[i].output});
      }
      const auto outcomes = scorer->score_all(requests);
      std::vector<FilterVerdict> verdicts(chunk.size());
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        if (outcomes[i].ok()) {
          chunk[i].score = outcomes[i].response->score;
        } else if (config.on_score_failure == ScoreFailurePolicy::kAbort) {
          throw BackendError("scoring failed for record '" + chunk[i].id + "': " +
                             outcomes[i].message);
        } else {
          verdicts[i] = FilterVerdict::discard(kReasonScoreUnavailable);
        }
      }
      apply_verdicts(chunk, verdicts, report);
    }
    for (const auto& rec : chunk) sink(rec);
    result.output_records += chunk.size();
  }
  return result;
}

PipelineResult run_pipeline(std::span<const InstructionRecord> input,
                            const PipelineConfig& config, RewardClient* scorer,
                            std::vector<InstructionRecord>& output) {
  std::size_t next = 0;
  return run_pipeline(
      [&]() -> std::optional<InstructionRecord> {
        if (next >= input.size()) return std::nullopt;
        return input[next++];
      },
      config, scorer, [&](const InstructionRecord& rec) { output.push_back(rec); });
}

std::string format_stage_table(const std::vector<StageReport>& reports) {
  std::string out = fmt::format("{:<10} {:>10} {:>10} {:>10}  {}\n", "stage", "input", "kept",
                                "discarded", "reasons");
  std::size_t discarded = 0;
  for (const auto& r : reports) {
    std::string reasons;
    for (const auto& [label, n] : r.reasons) {
      if (!reasons.empty()) reasons += ", ";
      reasons += fmt::format("{}={}", label, n);
    }
    out += fmt::format("{:<10} {:>10} {:>10} {:>10}  {}\n", r.stage, r.input, r.kept,
                       r.discarded, reasons.empty() ? "-" : reasons);
    discarded += r.discarded;
  }
  if (!reports.empty()) {
    out += fmt::format("total: input {} = output {} + discarded {}\n", reports.front().input,
                       reports.back().kept, discarded);
  }
  return out;
}

std::string stage_reports_jsonl(const std::vector<StageReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["stage"] = r.stage;
    j["input"] = r.input;
    j["kept"] = r.kept;
    j["discarded"] = r.discarded;
    j["reasons"] = nlohmann::ordered_json::object();
    for (const auto& [label, n] : r.reasons) j["reasons"][label] = n;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace medcurate

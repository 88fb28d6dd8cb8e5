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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medcurate/corpus.hpp"
#include "medcurate/curation.hpp"
#include "medcurate/eval.hpp"
#include "medcurate/metrics.hpp"
#include "medcurate/reward.hpp"

namespace medcurate {

enum class ScorerKind { kNone, kStub, kRemote };

// Everything a CLI run can be configured with. Populated from a config file
// of `key = value` lines, then `--set key=value` overrides, then flags.
struct RunConfig {
  PipelineConfig pipeline;

  ScorerKind scorer = ScorerKind::kNone;
  std::size_t scorer_batch = 16;
  RetryPolicy retry;
  std::size_t scorer_in_flight = 4;
  int scorer_timeout_ms = 30000;

  MetricSettings metrics;
  BleuMode bleu_mode = BleuMode::kSentence;
  double coverage_floor = 1.0;
  bool reward_eval = false;
  std::string model = "model";

  OnMalformed on_malformed = OnMalformed::kFail;
  bool strict_ids = true;
  std::vector<std::string> categories;
  bool strict_categories = false;

  std::optional<std::filesystem::path> report_table;
  std::optional<std::filesystem::path> report_json;
  std::optional<std::filesystem::path> report_csv;
  std::optional<std::filesystem::path> report_examples;
  std::optional<std::filesystem::path> stage_report_table;
  std::optional<std::filesystem::path> stage_report_jsonl;

  TokenPolicy policy() const { return pipeline.policy; }
};

// Every accepted key, in documentation order.
const std::vector<std::string_view>& config_keys();

// Throws ConfigError for an unknown key or an unparsable value.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// `key=value` form used by --set.
void apply_assignment(RunConfig& config, std::string_view assignment);

// Blank lines and lines starting with '#' are ignored. Errors name the line.
void load_config_file(RunConfig& config, const std::filesystem::path& path);
void load_config_text(RunConfig& config, std::string_view text, std::string_view origin);

// Cross-field checks shared by every subcommand.
void validate(const RunConfig& config);

// nullptr when the scorer is kNone. Throws ConfigError when the remote
// endpoint is not configured.
std::unique_ptr<RewardClient> make_reward_client(const RunConfig& config);

ReadOptions read_options(const RunConfig& config);
EvalConfig eval_config(const RunConfig& config, RewardClient* reward);

}  // namespace medcurate

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

#include "medcurate/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "medcurate/error.hpp"

namespace medcurate {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto item = trim(value.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) +
                    " (expected " + std::string(want) + ")");
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  bad_value(key, v, "true or false");
}

long long parse_int(std::string_view key, std::string_view v, long long lo) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || out < lo) {
    bad_value(key, v, "an integer >= " + std::to_string(lo));
  }
  return out;
}

double parse_unit(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used == v.size() && d >= 0.0 && d <= 1.0) return d;
  } catch (const std::exception&) {
  }
  bad_value(key, v, "a number in [0,1]");
}

}  // namespace

const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys = {
      "policy",          "stages",           "min_tokens",        "quality_threshold",
      "prescored",       "workers",          "chunk_size",        "on_score_failure",
      "pii.email",       "pii.cn_mobile",    "pii.cn_landline",   "pii.cn_resident_id",
      "pii.contact_phrase", "scorer",        "scorer.batch_size", "scorer.max_attempts",
      "scorer.backoff_ms", "scorer.max_backoff_ms", "scorer.max_in_flight", "scorer.timeout_ms",
      "gleu_max_n",      "smoothing",        "aggregation",       "bleu_mode",
      "coverage_floor",  "reward_eval",      "model",             "on_malformed",
      "strict_ids",      "categories",       "strict_categories", "report.table",
      "report.json",     "report.csv",       "report.examples",   "stage_report.table",
      "stage_report.jsonl",
  };
  return keys;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  auto& p = c.pipeline;
  if (key == "policy") {
    p.policy = parse_policy(v);
  } else if (key == "stages") {
    p.stages.clear();
    for (const auto& s : split_list(v)) p.stages.push_back(parse_stage(s));
  } else if (key == "min_tokens") {
    p.min_tokens = static_cast<std::size_t>(parse_int(key, v, 0));
  } else if (key == "quality_threshold") {
    p.quality_threshold = parse_unit(key, v);
  } else if (key == "prescored") {
    p.prescored = parse_bool(key, v);
  } else if (key == "workers") {
    p.workers = static_cast<int>(parse_int(key, v, 1));
  } else if (key == "chunk_size") {
    p.chunk_size = static_cast<std::size_t>(parse_int(key, v, 1));
  } else if (key == "on_score_failure") {
    if (v == "discard") {
      p.on_score_failure = ScoreFailurePolicy::kDiscard;
    } else if (v == "abort") {
      p.on_score_failure = ScoreFailurePolicy::kAbort;
    } else {
      bad_value(key, v, "discard or abort");
    }
  } else if (key == "pii.email") {
    p.pii.email = parse_bool(key, v);
  } else if (key == "pii.cn_mobile") {
    p.pii.cn_mobile = parse_bool(key, v);
  } else if (key == "pii.cn_landline") {
    p.pii.cn_landline = parse_bool(key, v);
  } else if (key == "pii.cn_resident_id") {
    p.pii.cn_resident_id = parse_bool(key, v);
  } else if (key == "pii.contact_phrase") {
    p.pii.contact_phrase = parse_bool(key, v);
  } else if (key == "scorer") {
    if (v == "none") {
      c.scorer = ScorerKind::kNone;
    } else if (v == "stub") {
      c.scorer = ScorerKind::kStub;
    } else if (v == "remote") {
      c.scorer = ScorerKind::kRemote;
    } else {
      bad_value(key, v, "none, stub or remote");
    }
  } else if (key == "scorer.batch_size") {
    c.scorer_batch = static_cast<std::size_t>(parse_int(key, v, 1));
  } else if (key == "scorer.max_attempts") {
    c.retry.max_attempts = static_cast<int>(parse_int(key, v, 1));
  } else if (key == "scorer.backoff_ms") {
    c.retry.initial_backoff = std::chrono::milliseconds(parse_int(key, v, 0));
  } else if (key == "scorer.max_backoff_ms") {
    c.retry.max_backoff = std::chrono::milliseconds(parse_int(key, v, 0));
  } else if (key == "scorer.max_in_flight") {
    c.scorer_in_flight = static_cast<std::size_t>(parse_int(key, v, 1));
  } else if (key == "scorer.timeout_ms") {
    c.scorer_timeout_ms = static_cast<int>(parse_int(key, v, 1));
  } else if (key == "gleu_max_n") {
    c.metrics.gleu_max_n = static_cast<int>(parse_int(key, v, 1));
  } else if (key == "smoothing") {
    c.metrics.smoothing = parse_smoothing(v);
  } else if (key == "aggregation") {
    c.metrics.aggregation = parse_aggregation(v);
  } else if (key == "bleu_mode") {
    if (v == "sentence") {
      c.bleu_mode = BleuMode::kSentence;
    } else if (v == "corpus") {
      c.bleu_mode = BleuMode::kCorpus;
    } else {
      bad_value(key, v, "sentence or corpus");
    }
  } else if (key == "coverage_floor") {
    c.coverage_floor = parse_unit(key, v);
  } else if (key == "reward_eval") {
    c.reward_eval = parse_bool(key, v);
  } else if (key == "model") {
    if (v.empty()) bad_value(key, v, "a non-empty name");
    c.model = std::string(v);
  } else if (key == "on_malformed") {
    if (v == "fail") {
      c.on_malformed = OnMalformed::kFail;
    } else if (v == "skip") {
      c.on_malformed = OnMalformed::kSkip;
    } else {
      bad_value(key, v, "fail or skip");
    }
  } else if (key == "strict_ids") {
    c.strict_ids = parse_bool(key, v);
  } else if (key == "categories") {
    c.categories = split_list(v);
  } else if (key == "strict_categories") {
    c.strict_categories = parse_bool(key, v);
  } else if (key == "report.table") {
    c.report_table = std::string(v);
  } else if (key == "report.json") {
    c.report_json = std::string(v);
  } else if (key == "report.csv") {
    c.report_csv = std::string(v);
  } else if (key == "report.examples") {
    c.report_examples = std::string(v);
  } else if (key == "stage_report.table") {
    c.stage_report_table = std::string(v);
  } else if (key == "stage_report.jsonl") {
    c.stage_report_jsonl = std::string(v);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void apply_assignment(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  }
  apply_setting(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void load_config_text(RunConfig& config, std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto line = trim(text.substr(start, nl == std::string_view::npos ? nl : nl - start));
    ++line_no;
    if (!line.empty() && line.front() != '#') {
      try {
        apply_assignment(config, line);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  load_config_text(config, buf.str(), path.string());
}

void validate(const RunConfig& config) {
  if (config.retry.max_backoff < config.retry.initial_backoff) {
    throw ConfigError("scorer.max_backoff_ms is below scorer.backoff_ms");
  }
  if (config.reward_eval && config.scorer == ScorerKind::kNone) {
    throw ConfigError("reward_eval needs scorer = stub or remote");
  }
  if (config.strict_categories && config.categories.empty()) {
    throw ConfigError("strict_categories needs a declared categories list");
  }
}

std::unique_ptr<RewardClient> make_reward_client(const RunConfig& config) {
  std::shared_ptr<ScorerBackend> backend;
  switch (config.scorer) {
    case ScorerKind::kNone:
      return nullptr;
    case ScorerKind::kStub:
      backend = std::make_shared<StubBackend>(config.scorer_batch);
      break;
    case ScorerKind::kRemote:
      backend = HttpBackend::from_env(config.scorer_batch,
                                      std::chrono::milliseconds(config.scorer_timeout_ms));
      break;
  }
  return std::make_unique<RewardClient>(std::move(backend), config.retry, config.scorer_in_flight);
}

ReadOptions read_options(const RunConfig& config) {
  ReadOptions o;
  o.on_malformed = config.on_malformed;
  o.strict_ids = config.strict_ids;
  return o;
}

EvalConfig eval_config(const RunConfig& config, RewardClient* reward) {
  EvalConfig e;
  e.model = config.model;
  e.policy = config.policy();
  e.metrics = config.metrics;
  e.bleu_mode = config.bleu_mode;
  e.coverage_floor = config.coverage_floor;
  e.workers = config.pipeline.workers;
  e.reward = config.reward_eval ? reward : nullptr;
  return e;
}

}  // namespace medcurate

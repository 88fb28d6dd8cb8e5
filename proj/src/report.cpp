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

#include <fmt/format.h>

#include <algorithm>

#include "json.hpp"
#include "medcurate/error.hpp"
#include "medcurate/eval.hpp"

namespace medcurate {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kMetricColumns[] = {"BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4",
                                          "GLEU",   "ROUGE-1", "ROUGE-2", "ROUGE-L"};

std::array<double, 8> columns(const AggregateScores& s) {
  return {s.bleu[0], s.bleu[1], s.bleu[2], s.bleu[3],
          s.gleu,    s.rouge1.f1, s.rouge2.f1, s.rougeL.f1};
}

std::array<double, 8> columns(const MetricDeltas& d) {
  return {d.bleu[0], d.bleu[1], d.bleu[2], d.bleu[3], d.gleu, d.rouge1, d.rouge2, d.rougeL};
}

std::string pct(double v) { return fmt::format("{:.2f}", v * 100.0); }
std::string signed_pct(double v) { return fmt::format("{:+.2f}", v * 100.0); }

std::string header_row(std::size_t name_width, std::string_view first, bool with_count,
                       bool with_reward) {
  std::string row = fmt::format("{:<{}}", first, name_width);
  if (with_count) row += fmt::format(" {:>7}", "Count");
  for (const char* c : kMetricColumns) row += fmt::format(" {:>8}", c);
  if (with_reward) row += fmt::format(" {:>8}", "Reward");
  return row + "\n";
}

std::string score_row(std::string_view name, std::size_t name_width,
                      std::optional<std::size_t> count, const AggregateScores& s,
                      bool with_reward) {
  std::string row = fmt::format("{:<{}}", name, name_width);
  if (count) row += fmt::format(" {:>7}", *count);
  for (double v : columns(s)) row += fmt::format(" {:>8}", pct(v));
  if (with_reward) row += fmt::format(" {:>8}", s.reward ? fmt::format("{:.4f}", *s.reward) : "-");
  return row + "\n";
}

ordered_json prf_json(const Prf& p) {
  ordered_json j;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["f1"] = p.f1;
  return j;
}

ordered_json scores_json(const AggregateScores& s) {
  ordered_json j;
  j["bleu"] = s.bleu;
  j["gleu"] = s.gleu;
  j["rouge1"] = prf_json(s.rouge1);
  j["rouge2"] = prf_json(s.rouge2);
  j["rougeL"] = prf_json(s.rougeL);
  j["reward"] = s.reward ? json(*s.reward) : json(nullptr);
  return j;
}

ordered_json meta_json(const ReportMetadata& m) {
  ordered_json j;
  j["tokenization"] = m.policy;
  j["aggregation"] = m.aggregation;
  j["smoothing"] = m.smoothing;
  j["bleu_mode"] = m.bleu_mode;
  j["gleu_max_n"] = m.gleu_max_n;
  j["metric_version"] = m.metric_version;
  j["fingerprint"] = m.fingerprint;
  j["benchmark_size"] = m.benchmark_size;
  j["example_count"] = m.example_count;
  j["unmatched"] = m.unmatched;
  j["reward_backend"] = m.reward_backend;
  return j;
}

Prf prf_from(const json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

AggregateScores scores_from(const json& j) {
  AggregateScores s;
  const auto& bleu = j.at("bleu");
  if (!bleu.is_array() || bleu.size() != s.bleu.size()) {
    throw std::invalid_argument("bleu must hold 4 values");
  }
  for (std::size_t k = 0; k < s.bleu.size(); ++k) s.bleu[k] = bleu[k].get<double>();
  s.gleu = j.at("gleu").get<double>();
  s.rouge1 = prf_from(j.at("rouge1"));
  s.rouge2 = prf_from(j.at("rouge2"));
  s.rougeL = prf_from(j.at("rougeL"));
  if (j.contains("reward") && !j["reward"].is_null()) s.reward = j["reward"].get<double>();
  return s;
}

std::string metadata_lines(const ReportMetadata& m) {
  std::string out = fmt::format(
      "# tokenization={} aggregation={} smoothing={} bleu={} gleu_max_n={} metrics={}\n",
      m.policy, m.aggregation, m.smoothing, m.bleu_mode, m.gleu_max_n, m.metric_version);
  out += fmt::format("# dataset={} benchmark={} scored={} unmatched={}", m.fingerprint,
                     m.benchmark_size, m.example_count, m.unmatched);
  if (!m.reward_backend.empty()) out += fmt::format(" reward={}", m.reward_backend);
  return out + "\n";
}

}  // namespace

std::string format_metric_table(const MetricReport& report) {
  const bool reward = report.overall.reward.has_value();
  std::size_t width = std::max<std::size_t>(report.model.size(), 5);
  std::string out = metadata_lines(report.meta);
  out += header_row(width, "Model", false, reward);
  out += score_row(report.model, width, std::nullopt, report.overall, reward);
  if (report.per_category.empty()) return out;
  width = 8;
  for (const auto& c : report.per_category) width = std::max(width, c.category.size());
  out += "\n";
  out += header_row(width, "Category", true, reward);
  for (const auto& c : report.per_category) {
    out += score_row(c.category, width, c.count, c.scores, reward);
  }
  return out;
}

std::string metric_report_json(const MetricReport& report) {
  ordered_json j;
  j["model"] = report.model;
  j["meta"] = meta_json(report.meta);
  j["overall"] = scores_json(report.overall);
  j["per_category"] = ordered_json::array();
  for (const auto& c : report.per_category) {
    ordered_json cj;
    cj["category"] = c.category;
    cj["count"] = c.count;
    cj["scores"] = scores_json(c.scores);
    j["per_category"].push_back(std::move(cj));
  }
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

MetricReport parse_metric_report(std::string_view text) {
  try {
    const json j = json::parse(text);
    MetricReport r;
    r.model = j.at("model").get<std::string>();
    const auto& m = j.at("meta");
    r.meta.policy = m.at("tokenization").get<std::string>();
    r.meta.aggregation = m.at("aggregation").get<std::string>();
    r.meta.smoothing = m.at("smoothing").get<std::string>();
    r.meta.bleu_mode = m.at("bleu_mode").get<std::string>();
    r.meta.gleu_max_n = m.at("gleu_max_n").get<int>();
    r.meta.metric_version = m.at("metric_version").get<std::string>();
    r.meta.fingerprint = m.at("fingerprint").get<std::string>();
    r.meta.benchmark_size = m.at("benchmark_size").get<std::size_t>();
    r.meta.example_count = m.at("example_count").get<std::size_t>();
    r.meta.unmatched = m.at("unmatched").get<std::size_t>();
    r.meta.reward_backend = m.value("reward_backend", "");
    r.overall = scores_from(j.at("overall"));
    for (const auto& c : j.at("per_category")) {
      r.per_category.push_back({c.at("category").get<std::string>(),
                                c.at("count").get<std::size_t>(), scores_from(c.at("scores"))});
    }
    return r;
  } catch (const std::exception& e) {
    throw DataError(std::string("malformed metric report: ") + e.what());
  }
}

std::string category_csv(const MetricReport& report) {
  std::string out = "category,count";
  for (const char* c : kMetricColumns) out += fmt::format(",{}", c);
  out += ",Reward\n";
  auto row = [&out](std::string_view name, std::size_t count, const AggregateScores& s) {
    // Quote when the label carries a comma or quote.
    std::string label(name);
    if (label.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char ch : label) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      label = q + "\"";
    }
    out += fmt::format("{},{}", label, count);
    for (double v : columns(s)) out += "," + pct(v);
    out += "," + (s.reward ? fmt::format("{:.4f}", *s.reward) : std::string());
    out += "\n";
  };
  for (const auto& c : report.per_category) row(c.category, c.count, c.scores);
  return out;
}

std::string example_scores_jsonl(const MetricReport& report,
                                 std::span<const ExampleScore> examples) {
  ordered_json head;
  head["meta"] = meta_json(report.meta);
  head["model"] = report.model;
  std::string out = head.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  for (const auto& e : examples) {
    ordered_json j;
    j["id"] = e.id;
    j["category"] = e.category;
    j["bleu"] = e.scores.bleu;
    j["gleu"] = e.scores.gleu;
    j["rouge1"] = prf_json(e.scores.rouge1);
    j["rouge2"] = prf_json(e.scores.rouge2);
    j["rougeL"] = prf_json(e.scores.rougeL);
    if (e.reward) j["reward"] = *e.reward;
    out += j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  return out;
}

std::string format_comparison(const Comparison& cmp) {
  const bool reward = cmp.overall.reward.has_value();
  auto header = [&](std::size_t width, std::string_view first, bool count) {
    std::string row = fmt::format("{:<{}}", first, width);
    if (count) row += fmt::format(" {:>7}", "Count");
    for (const char* c : kMetricColumns) row += fmt::format(" {:>8}", c);
    if (reward) row += fmt::format(" {:>8}", "Reward");
    return row + "\n";
  };
  auto row = [&](std::string_view name, std::size_t width, std::optional<std::size_t> count,
                 const MetricDeltas& d) {
    std::string r = fmt::format("{:<{}}", name, width);
    if (count) r += fmt::format(" {:>7}", *count);
    for (double v : columns(d)) r += fmt::format(" {:>8}", signed_pct(v));
    if (reward) r += fmt::format(" {:>8}", d.reward ? fmt::format("{:+.4f}", *d.reward) : "-");
    return r + "\n";
  };
  std::string out = fmt::format("# delta = {} - {}\n", cmp.model_b, cmp.model_a);
  out += header(8, "Scope", false);
  out += row("overall", 8, std::nullopt, cmp.overall);
  if (!cmp.per_category.empty()) {
    std::size_t width = 8;
    for (const auto& c : cmp.per_category) width = std::max(width, c.category.size());
    out += "\n" + header(width, "Category", true);
    for (const auto& c : cmp.per_category) out += row(c.category, width, c.count, c.delta);
  }
  for (const auto& c : cmp.only_in_a) out += fmt::format("only in {}: {}\n", cmp.model_a, c);
  for (const auto& c : cmp.only_in_b) out += fmt::format("only in {}: {}\n", cmp.model_b, c);
  return out;
}

std::string comparison_csv(const Comparison& cmp) {
  std::string out = "scope,count";
  for (const char* c : kMetricColumns) out += fmt::format(",{}", c);
  out += ",Reward\n";
  auto row = [&out](std::string_view name, std::string count, const MetricDeltas& d) {
    out += fmt::format("{},{}", name, count);
    for (double v : columns(d)) out += "," + signed_pct(v);
    out += "," + (d.reward ? fmt::format("{:+.4f}", *d.reward) : std::string());
    out += "\n";
  };
  row("overall", "", cmp.overall);
  for (const auto& c : cmp.per_category) row(c.category, std::to_string(c.count), c.delta);
  return out;
}

}  // namespace medcurate

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

#include "medcurate/cli.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "medcurate/config.hpp"
#include "medcurate/curation.hpp"
#include "medcurate/error.hpp"
#include "medcurate/eval.hpp"

namespace medcurate {
namespace {

namespace fs = std::filesystem;

// A flag that overrides one config key when given.
struct Override {
  CLI::Option* option = nullptr;
  std::string key;
  std::string value;
  bool is_switch = false;
  bool switch_value = false;
};

class Overrides {
 public:
  void value(CLI::App* app, const std::string& flag, const std::string& key,
             const std::string& help) {
    auto& o = items_.emplace_back(std::make_unique<Override>());
    o->key = key;
    o->option = app->add_option(flag, o->value, help);
  }
  void on_switch(CLI::App* app, const std::string& flag, const std::string& key,
                 const std::string& help) {
    auto& o = items_.emplace_back(std::make_unique<Override>());
    o->key = key;
    o->is_switch = true;
    o->option = app->add_flag(flag, o->switch_value, help);
  }
  void apply(RunConfig& config) const {
    for (const auto& o : items_) {
      if (o->option->count() == 0) continue;
      apply_setting(config, o->key, o->is_switch ? "true" : o->value);
    }
  }

 private:
  std::vector<std::unique_ptr<Override>> items_;
};

void require_file(const fs::path& p, std::string_view what) {
  if (!fs::is_regular_file(p)) {
    throw DataError(std::string(what) + " " + p.string() + " does not exist");
  }
}

std::string read_file(const fs::path& p) {
  require_file(p, "file");
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in && !in.eof()) throw DataError("cannot read " + p.string());
  return buf.str();
}

void maybe_write(const std::optional<fs::path>& path, std::string_view text) {
  if (path) write_file_atomic(*path, text);
}

int run_pipeline_command(const RunConfig& config, const std::vector<fs::path>& inputs,
                         const fs::path& output, std::ostream& out,
                         const std::atomic<bool>* stop) {
  PipelineConfig pipeline = config.pipeline;
  pipeline.stop = stop;
  validate(pipeline, config.scorer != ScorerKind::kNone);
  auto client = make_reward_client(config);
  for (const auto& in : inputs) require_file(in, "input");

  AtomicFileWriter writer(output);
  std::size_t current = 0;
  std::unique_ptr<InstructionReader> reader;
  const ReadOptions options = read_options(config);
  RecordSource source = [&]() -> std::optional<InstructionRecord> {
    while (current < inputs.size()) {
      if (!reader) reader = std::make_unique<InstructionReader>(inputs[current], options);
      if (auto rec = reader->next()) return rec;
      reader.reset();
      ++current;
    }
    return std::nullopt;
  };
  const PipelineResult result = run_pipeline(
      source, pipeline, client.get(),
      [&](const InstructionRecord& rec) { writer.write_line(to_jsonl(rec)); });

  const std::string table = format_stage_table(result.reports);
  out << table;
  if (result.interrupted) out << "interrupted: output not written\n";
  maybe_write(config.stage_report_table, table);
  maybe_write(config.stage_report_jsonl, stage_reports_jsonl(result.reports));
  if (result.interrupted) return kExitInterrupted;
  writer.commit();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* stop) {
  CLI::App app{"Curate instruction corpora and score QA benchmarks.", "medcurate"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> assignments;
  app.add_option("-c,--config", config_path, "Config file of `key = value` lines");
  app.add_option("--set", assignments, "Override a config key, as key=value (repeatable)");

  // curate
  auto* curate = app.add_subcommand("curate", "Run the curation pipeline over instruction corpora");
  std::vector<std::string> curate_inputs;
  std::string curate_output;
  curate->add_option("-i,--input", curate_inputs, "Input corpus (JSONL); repeatable")->required();
  curate->add_option("-o,--output", curate_output, "Curated corpus destination")->required();
  Overrides curate_flags;
  curate_flags.value(curate, "--stages", "stages", "Comma-separated stage order");
  curate_flags.value(curate, "--min-tokens", "min_tokens", "Minimum answer length in tokens");
  curate_flags.value(curate, "--threshold", "quality_threshold", "Quality gate threshold in [0,1]");
  curate_flags.value(curate, "--scorer", "scorer", "Reward backend: none, stub or remote");
  curate_flags.value(curate, "--policy", "policy", "Tokenization policy: cjk_char or whitespace");
  curate_flags.value(curate, "--workers", "workers", "Worker threads");
  curate_flags.value(curate, "--chunk-size", "chunk_size", "Records held in memory per chunk");
  curate_flags.value(curate, "--on-malformed", "on_malformed", "Malformed lines: fail or skip");
  curate_flags.on_switch(curate, "--prescored", "prescored", "Input already carries scores");
  curate_flags.value(curate, "--report-table", "stage_report.table", "Write the stage table here");
  curate_flags.value(curate, "--report-jsonl", "stage_report.jsonl", "Write stage reports (JSONL) here");

  // score
  auto* score = app.add_subcommand("score", "Attach reward scores to an instruction corpus");
  std::vector<std::string> score_inputs;
  std::string score_output;
  score->add_option("-i,--input", score_inputs, "Input corpus (JSONL); repeatable")->required();
  score->add_option("-o,--output", score_output, "Scored corpus destination")->required();
  Overrides score_flags;
  score_flags.value(score, "--scorer", "scorer", "Reward backend: stub or remote");
  score_flags.value(score, "--workers", "workers", "Worker threads");
  score_flags.value(score, "--on-malformed", "on_malformed", "Malformed lines: fail or skip");
  score_flags.value(score, "--report-table", "stage_report.table", "Write the stage table here");
  score_flags.value(score, "--report-jsonl", "stage_report.jsonl", "Write stage reports (JSONL) here");

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions against a multi-reference benchmark");
  std::string bench_path;
  std::string preds_path;
  std::string out_prefix;
  eval->add_option("-b,--bench", bench_path, "Benchmark file (JSONL)")->required();
  eval->add_option("-p,--predictions", preds_path, "Predictions file (JSONL)")->required();
  eval->add_option("--out", out_prefix,
                   "Write PREFIX.table.txt, PREFIX.json, PREFIX.csv and PREFIX.examples.jsonl");
  Overrides eval_flags;
  eval_flags.value(eval, "--model", "model", "Model name shown in reports");
  eval_flags.value(eval, "--policy", "policy", "Tokenization policy: cjk_char or whitespace");
  eval_flags.value(eval, "--workers", "workers", "Worker threads");
  eval_flags.value(eval, "--aggregation", "aggregation", "GLEU/ROUGE reference rule: max or mean");
  eval_flags.value(eval, "--smoothing", "smoothing", "BLEU smoothing: none or add_epsilon");
  eval_flags.value(eval, "--bleu-mode", "bleu_mode", "BLEU averaging: sentence or corpus");
  eval_flags.value(eval, "--coverage-floor", "coverage_floor", "Minimum joined fraction in [0,1]");
  eval_flags.value(eval, "--scorer", "scorer", "Reward backend for --reward: stub or remote");
  eval_flags.on_switch(eval, "--reward", "reward_eval", "Also score predictions with the reward backend");
  eval_flags.value(eval, "--table", "report.table", "Write the text table here");
  eval_flags.value(eval, "--json", "report.json", "Write the JSON report here");
  eval_flags.value(eval, "--csv", "report.csv", "Write the per-category CSV here");
  eval_flags.value(eval, "--examples", "report.examples", "Write per-example scores (JSONL) here");

  // stats
  auto* stats = app.add_subcommand("stats", "Count benchmark questions per category and size bucket");
  std::string stats_bench;
  stats->add_option("-b,--bench", stats_bench, "Benchmark file (JSONL)")->required();
  Overrides stats_flags;
  stats_flags.value(stats, "--categories", "categories", "Declared category set, comma-separated");
  stats_flags.on_switch(stats, "--strict", "strict_categories", "Reject undeclared categories");

  // compare
  auto* compare = app.add_subcommand("compare", "Per-metric deltas between two JSON reports");
  std::string report_a;
  std::string report_b;
  std::string compare_csv;
  compare->add_option("a", report_a, "Baseline report (JSON)")->required();
  compare->add_option("b", report_b, "Candidate report (JSON)")->required();
  compare->add_option("--csv", compare_csv, "Write the deltas as CSV here");

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  if (storage.empty()) storage.emplace_back("medcurate");
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) load_config_file(config, config_path);
    for (const auto& a : assignments) apply_assignment(config, a);

    if (curate->parsed()) {
      curate_flags.apply(config);
      validate(config);
      return run_pipeline_command(config, {curate_inputs.begin(), curate_inputs.end()},
                                  curate_output, out, stop);
    }
    if (score->parsed()) {
      score_flags.apply(config);
      config.pipeline.stages = {StageKind::kScore};
      validate(config);
      return run_pipeline_command(config, {score_inputs.begin(), score_inputs.end()},
                                  score_output, out, stop);
    }
    if (eval->parsed()) {
      eval_flags.apply(config);
      if (!out_prefix.empty()) {
        if (!config.report_table) config.report_table = out_prefix + ".table.txt";
        if (!config.report_json) config.report_json = out_prefix + ".json";
        if (!config.report_csv) config.report_csv = out_prefix + ".csv";
        if (!config.report_examples) config.report_examples = out_prefix + ".examples.jsonl";
      }
      validate(config);
      auto client = config.reward_eval ? make_reward_client(config) : nullptr;
      require_file(bench_path, "benchmark");
      require_file(preds_path, "predictions");
      const auto bench = read_benchmark(bench_path, read_options(config));
      const auto preds = read_predictions(preds_path, read_options(config));
      const EvalResult result = evaluate(bench, preds, eval_config(config, client.get()));
      const std::string table = format_metric_table(result.report);
      out << table;
      maybe_write(config.report_table, table);
      maybe_write(config.report_json, metric_report_json(result.report));
      maybe_write(config.report_csv, category_csv(result.report));
      maybe_write(config.report_examples, example_scores_jsonl(result.report, result.examples));
      return kExitOk;
    }
    if (stats->parsed()) {
      stats_flags.apply(config);
      validate(config);
      require_file(stats_bench, "benchmark");
      const auto bench = read_benchmark(stats_bench, read_options(config));
      StratifyOptions options;
      options.categories = config.categories;
      options.strict = config.strict_categories;
      out << format_category_table(stratify(bench, options));
      return kExitOk;
    }
    if (compare->parsed()) {
      const MetricReport a = parse_metric_report(read_file(report_a));
      const MetricReport b = parse_metric_report(read_file(report_b));
      const Comparison cmp = compare_runs(a, b);
      out << format_comparison(cmp);
      if (!compare_csv.empty()) write_file_atomic(compare_csv, comparison_csv(cmp));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "medcurate: configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BackendError& e) {
    err << "medcurate: backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    err << "medcurate: data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace medcurate

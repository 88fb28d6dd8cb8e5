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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "medcurate/cli.hpp"
#include "medcurate/corpus.hpp"
#include "medcurate/curation.hpp"
#include "medcurate/eval.hpp"
#include "medcurate/metrics.hpp"
#include "naive_metrics.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace medcurate;

namespace {

// Collects the first few failure messages of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 5) notes_.push_back(what);
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::string s;
    for (const auto& n : notes_) s += "\n    " + n;
    if (failures_ > 5) s += "\n    ... " + std::to_string(failures_ - 5) + " more";
    return s;
  }

 private:
  int failures_ = 0;
  std::vector<std::string> notes_;
};

int g_failed = 0;

void criterion(int n, const std::string& title, const std::function<void(Check&)>& body) {
  const auto start = std::chrono::steady_clock::now();
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s [%d] %s (%.2fs)%s\n", c.ok() ? "PASS" : "FAIL", n, title.c_str(), secs,
              c.summary().c_str());
  std::fflush(stdout);
  if (!c.ok()) ++g_failed;
}

bool near(double a, double b) { return std::fabs(a - b) <= 1e-12; }

void oracle_equivalence(Check& c) {
  std::mt19937_64 rng(0x5eed);
  std::uniform_int_distribution<int> alphabet(2, 20);
  std::uniform_int_distribution<int> nrefs(1, 3);
  for (int i = 0; i < 1000; ++i) {
    const int a = alphabet(rng);
    const auto pred = testutil::random_tokens(rng, 50, a);
    std::vector<oracle::Tokens> refs(nrefs(rng));
    for (auto& r : refs) r = testutil::random_tokens(rng, 50, a);
    std::vector<TokenSequence> seqs;
    for (const auto& r : refs) seqs.push_back(TokenSequence{r});
    const auto s = score_tokens(TokenSequence{pred}, seqs);
    const std::string tag = "case " + std::to_string(i) + ": ";
    for (int k = 1; k <= 4; ++k) {
      c.expect(near(s.bleu[k - 1], oracle::bleu(pred, refs, k)), tag + "BLEU-" + std::to_string(k));
    }
    c.expect(near(s.gleu, oracle::gleu(pred, refs)), tag + "GLEU");
    const auto r1 = oracle::rouge_n(pred, refs, 1);
    const auto r2 = oracle::rouge_n(pred, refs, 2);
    const auto rl = oracle::rouge_l(pred, refs);
    c.expect(near(s.rouge1.precision, r1.p) && near(s.rouge1.recall, r1.r) && near(s.rouge1.f1, r1.f),
             tag + "ROUGE-1");
    c.expect(near(s.rouge2.precision, r2.p) && near(s.rouge2.recall, r2.r) && near(s.rouge2.f1, r2.f),
             tag + "ROUGE-2");
    c.expect(near(s.rougeL.precision, rl.p) && near(s.rougeL.recall, rl.r) && near(s.rougeL.f1, rl.f),
             tag + "ROUGE-L");
  }
}

// Numeric cells of every score row in a printed metric table.
std::vector<std::string> table_cells(const std::string& table) {
  std::vector<std::string> cells;
  std::istringstream in(table);
  std::string line;
  const std::regex number(R"(^-?[0-9]+\.[0-9]{2}$)");
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("Model", 0) == 0 || line.rfind("Category", 0) == 0) {
      continue;
    }
    std::istringstream row(line);
    std::string tok;
    while (row >> tok) {
      if (std::regex_match(tok, number)) cells.push_back(tok);
    }
  }
  return cells;
}

std::vector<EvalExample> demo_bench(std::size_t n) {
  std::vector<EvalExample> bench;
  const std::vector<std::string> cats = {"内科", "外科", "妇产科", "other"};
  for (std::size_t i = 0; i < n; ++i) {
    bench.push_back({"q" + std::to_string(i), "问题" + std::to_string(i),
                     {testutil::cjk_text(10 + i % 17, i), testutil::cjk_text(8 + i % 5, i + 7)},
                     cats[i % cats.size()], std::nullopt});
  }
  return bench;
}

void identity_bound(Check& c) {
  const auto bench = demo_bench(60);
  std::vector<PredictionRecord> same, empty;
  for (const auto& e : bench) {
    same.push_back({e.id, e.references.front()});
    empty.push_back({e.id, ""});
  }
  const auto perfect = format_metric_table(evaluate(bench, same, EvalConfig{}).report);
  const auto cells = table_cells(perfect);
  c.expect(cells.size() == 8u * 5u, "expected 40 metric cells, got " + std::to_string(cells.size()));
  for (const auto& v : cells) c.expect(v == "100.00", "identity cell " + v);
  const auto zero = format_metric_table(evaluate(bench, empty, EvalConfig{}).report);
  const auto zcells = table_cells(zero);
  c.expect(zcells.size() == 8u * 5u, "expected 40 metric cells for empty predictions");
  for (const auto& v : zcells) c.expect(v == "0.00", "empty-prediction cell " + v);
}

std::string serialize(const std::vector<InstructionRecord>& rs) {
  std::string s;
  for (const auto& r : rs) s += to_jsonl(r) + "\n";
  return s;
}

void pipeline_conservation(Check& c) {
  constexpr std::size_t kN = 100000, kPii = 1000, kShort = 2000, kLow = 5000;
  const auto corpus = testutil::make_corpus(kN, kPii, kShort, kLow, 2026);
  std::string reference;
  for (int workers : {1, 4, 16}) {
    PipelineConfig cfg;
    cfg.workers = workers;
    RewardClient client(std::make_shared<StubBackend>(64), RetryPolicy{}, 4);
    std::vector<InstructionRecord> out;
    const auto res = run_pipeline(corpus.records, cfg, &client, out);
    const std::string tag = std::to_string(workers) + " workers: ";
    std::map<std::string, std::size_t> discards;
    std::size_t total_discarded = 0;
    for (std::size_t i = 0; i < res.reports.size(); ++i) {
      const auto& r = res.reports[i];
      discards[r.stage] = r.discarded;
      total_discarded += r.discarded;
      c.expect(r.input == r.kept + r.discarded, tag + r.stage + " input != kept + discarded");
      if (i + 1 < res.reports.size()) {
        c.expect(r.kept == res.reports[i + 1].input, tag + r.stage + " kept != next input");
      }
    }
    c.expect(discards["validate"] == 0, tag + "validate discards");
    c.expect(discards["normalize"] == 0, tag + "normalize discards");
    c.expect(discards["pii"] == kPii, tag + "pii discarded " + std::to_string(discards["pii"]));
    c.expect(discards["length"] == kShort, tag + "length discarded " + std::to_string(discards["length"]));
    c.expect(discards["score"] == 0, tag + "score discards");
    c.expect(discards["quality"] == kLow, tag + "quality discarded " + std::to_string(discards["quality"]));
    c.expect(res.input_records == kN && kN == out.size() + total_discarded, tag + "totals do not telescope");
    const auto text = serialize(out);
    if (workers == 1) {
      reference = text;
    } else {
      c.expect(text == reference, tag + "output differs from the 1-worker run");
    }
  }
}

void boundaries(Check& c) {
  InstructionRecord r;
  r.id = "b";
  r.instruction = "问题";
  r.output = "答";
  r.score = 0.50;
  c.expect(filter_quality(r, 0.5).kept(), "score 0.50 must be kept");
  r.score = 0.49;
  c.expect(!filter_quality(r, 0.5).kept(), "score 0.49 must be discarded");
  r.output = testutil::cjk_text(200);
  c.expect(filter_length(r, 200).kept(), "200 tokens must be kept");
  r.output = testutil::cjk_text(199);
  c.expect(!filter_length(r, 200).kept(), "199 tokens must be discarded");

  // Same boundaries through the pipeline with prescored input.
  std::vector<InstructionRecord> in(4, r);
  in[0].id = "s50";
  in[0].score = 0.50;
  in[0].output = testutil::cjk_text(200);
  in[1].id = "s49";
  in[1].score = 0.49;
  in[1].output = testutil::cjk_text(200);
  in[2].id = "t199";
  in[2].score = 1.0;
  in[3].id = "t200";
  in[3].score = 1.0;
  in[3].output = testutil::cjk_text(200);
  PipelineConfig cfg;
  cfg.stages = {StageKind::kLength, StageKind::kQuality};
  cfg.prescored = true;
  std::vector<InstructionRecord> out;
  run_pipeline(in, cfg, nullptr, out);
  std::vector<std::string> ids;
  for (const auto& o : out) ids.push_back(o.id);
  c.expect(ids == std::vector<std::string>{"s50", "t200"}, "pipeline kept the wrong records");
}

void normalizer(Check& c) {
  c.expect(normalize_enumeration("(1) 多喝水") == "1. 多喝水", "\"(1)\" not rewritten");
  c.expect(normalize_enumeration("1, 多喝水") == "1. 多喝水", "\"1,\" not rewritten");
  c.expect(normalize_enumeration("1，多喝水") == "1. 多喝水", "\"1，\" not rewritten");
  std::mt19937_64 rng(10000);
  const std::vector<std::string> parts = {"(", ")", "（", "）", "、", ",", "，", ".", "．", " ", "　",
                                          "\t", "\n", "\r\n", "1", "2", "3", "10", "(1)", "1,", "2、",
                                          "3.", "（4）", "多", "喝", "水", "a", "x"};
  std::uniform_int_distribution<std::size_t> pick(0, parts.size() - 1);
  std::uniform_int_distribution<int> len(0, 40);
  for (int i = 0; i < 10000; ++i) {
    std::string t;
    for (int k = len(rng); k > 0; --k) t += parts[pick(rng)];
    const auto once = normalize_enumeration(t);
    c.expect(normalize_enumeration(once) == once, "not idempotent on \"" + t + "\"");
  }
}

void stratification(Check& c) {
  const std::vector<std::pair<std::string, std::size_t>> layout = {
      {"内科", 12000}, {"外科", 10001}, {"儿科", 10000}, {"妇产科", 7000}, {"五官科", 5000},
      {"皮肤科", 3000}, {"精神科", 1001}, {"中医科", 1000}, {"other", 30}};
  const std::map<std::string, std::string> expected_bucket = {
      {"内科", ">10000"},      {"外科", ">10000"},    {"儿科", "5000-10000"},
      {"妇产科", "5000-10000"}, {"五官科", "1000-5000"}, {"皮肤科", "1000-5000"},
      {"精神科", "1000-5000"},  {"中医科", "<1000"},     {"other", "<1000"}};
  testutil::TempDir dir;
  std::size_t written = 0;
  {
    AtomicFileWriter w(dir / "bench.jsonl");
    for (const auto& [cat, n] : layout) {
      for (std::size_t i = 0; i < n; ++i) {
        w.write_line(to_jsonl(EvalExample{cat + std::to_string(i), "问", {"答"}, cat, std::nullopt}));
        ++written;
      }
    }
    w.commit();
  }
  const auto bench = read_benchmark(dir / "bench.jsonl");
  const auto table = stratify(bench);
  c.expect(table.total == written, "stratified total " + std::to_string(table.total));
  for (const auto& [cat, label] : expected_bucket) {
    c.expect(table.buckets[table.bucket_of(cat)].label == label, cat + " not in " + label);
  }
  std::ostringstream out, err;
  const int code = run_cli({"medcurate", "stats", "-b", (dir / "bench.jsonl").string()}, out, err);
  c.expect(code == 0, "stats exited " + std::to_string(code) + ": " + err.str());
  const std::string needle = "total: " + std::to_string(written) + " questions in 9 categories";
  c.expect(out.str().find(needle) != std::string::npos, "printed total missing: " + needle);
}

void report_formats(Check& c) {
  const auto bench = demo_bench(20);
  std::vector<PredictionRecord> preds;
  for (const auto& e : bench) preds.push_back({e.id, testutil::cjk_text(12, e.id.size())});
  EvalConfig cfg;
  cfg.model = "tuned-7b";
  const auto res = evaluate(bench, preds, cfg);
  const auto table = format_metric_table(res.report);
  std::istringstream in(table);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  c.expect(lines.size() >= 4, "table too short");
  if (lines.size() >= 4) {
    c.expect(lines[0].rfind("# tokenization=cjk_char aggregation=max smoothing=none bleu=sentence", 0) == 0,
             "metadata line: " + lines[0]);
    // The model column is as wide as the longer of "Model" and the model name.
    const std::string model_col = "Model" + std::string(cfg.model.size() - 5, ' ');
    c.expect(lines[2] ==
                 model_col + "   BLEU-1   BLEU-2   BLEU-3   BLEU-4     GLEU  ROUGE-1  ROUGE-2  ROUGE-L",
             "header: " + lines[2]);
    c.expect(std::regex_match(lines[3], std::regex(R"(tuned-7b( +[0-9]+\.[0-9]{2}){8})")),
             "score row: " + lines[3]);
  }
  const auto csv = category_csv(res.report);
  c.expect(csv.rfind("category,count,BLEU-1,BLEU-2,BLEU-3,BLEU-4,GLEU,ROUGE-1,ROUGE-2,ROUGE-L,Reward\n", 0) == 0,
           "csv header");
  const auto strat = format_category_table(stratify(bench));
  std::istringstream sin(strat);
  std::vector<std::string> slines;
  for (std::string l; std::getline(sin, l);) slines.push_back(l);
  c.expect(slines.size() >= 5, "category table too short");
  if (slines.size() >= 5) {
    c.expect(slines[0].rfind("Dataset Size", 0) == 0, "category header: " + slines[0]);
    const char* labels[] = {">10000", "5000-10000", "1000-5000", "<1000"};
    for (int i = 0; i < 4; ++i) {
      c.expect(slines[1 + i].rfind(labels[i], 0) == 0, std::string("bucket row ") + labels[i]);
    }
    c.expect(slines[4].find("     4  ") != std::string::npos, "4 categories in <1000: " + slines[4]);
  }
}

}  // namespace

int main() {
  criterion(1, "metric oracle equivalence on 1,000 random cases (1e-12)", oracle_equivalence);
  criterion(2, "identity predictions print 100.00, empty predictions print 0.00", identity_bound);
  criterion(3, "100k-record pipeline: exact discards, conservation, identical output for 1/4/16 workers",
            pipeline_conservation);
  criterion(4, "boundaries: score 0.50 kept / 0.49 discarded, 200 tokens kept / 199 discarded", boundaries);
  criterion(5, "enumeration normalizer: idempotent on 10,000 texts, (1) and 1, become 1.", normalizer);
  criterion(6, "stratification: printed total equals record count, buckets exact", stratification);
  criterion(7, "report formats: metric table columns and category bucket table", report_formats);
  std::printf("%s: %d criteria failed\n", g_failed == 0 ? "OK" : "FAILED", g_failed);
  return g_failed == 0 ? 0 : 1;
}

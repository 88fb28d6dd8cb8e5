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

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "medcurate/curation.hpp"
#include "medcurate/eval.hpp"

namespace {

using namespace medcurate;

std::string cjk(std::size_t n, std::size_t offset) {
  static const char* pool[] = {"感", "冒", "发", "烧", "头", "痛", "咳", "嗽",
                               "多", "喝", "水", "休", "息", "服", "药", "医"};
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += pool[(i * 7 + offset) % 16];
  return out;
}

const std::vector<EvalExample>& examples() {
  static const std::vector<EvalExample> data = [] {
    std::vector<EvalExample> out;
    for (std::size_t i = 0; i < 2000; ++i) {
      out.push_back({"q" + std::to_string(i), "问题",
                     {cjk(80 + i % 50, i), cjk(60 + i % 30, i + 3), cjk(100, i + 5)},
                     i % 2 ? "内科" : "外科", cjk(90 + i % 40, i + 1)});
    }
    return out;
  }();
  return data;
}

const std::vector<InstructionRecord>& records() {
  static const std::vector<InstructionRecord> data = [] {
    std::vector<InstructionRecord> out;
    for (std::size_t i = 0; i < 5000; ++i) {
      InstructionRecord r;
      r.id = std::to_string(i);
      r.instruction = cjk(30, i);
      r.output = "(1) " + cjk(220 + i % 60, i) + "\n(2) " + cjk(20, i + 2);
      if (i % 50 == 0) r.output += " user@example.com";
      out.push_back(std::move(r));
    }
    return out;
  }();
  return data;
}

void BM_ScoreExamplesSerial(benchmark::State& state) {
  for (auto _ : state) {
    auto s = score_examples_serial(examples(), TokenPolicy::kCjkChar, {});
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(examples().size()));
}

void BM_ScoreExamplesParallel(benchmark::State& state) {
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto s = score_examples_parallel(examples(), TokenPolicy::kCjkChar, {}, workers);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(examples().size()));
}

template <StageKind kKind>
void BM_StageSerial(benchmark::State& state) {
  PipelineConfig cfg;
  PiiScanner scanner;
  StageContext ctx{&cfg, &scanner};
  for (auto _ : state) {
    auto v = apply_stage_serial(kKind, records(), ctx);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(records().size()));
}

template <StageKind kKind>
void BM_StageParallel(benchmark::State& state) {
  PipelineConfig cfg;
  PiiScanner scanner;
  StageContext ctx{&cfg, &scanner};
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto v = apply_stage_parallel(kKind, records(), ctx, workers);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(records().size()));
}

}  // namespace

BENCHMARK(BM_ScoreExamplesSerial)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreExamplesParallel)->Arg(1)->Arg(4)->Arg(16)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StageSerial<StageKind::kNormalize>)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StageParallel<StageKind::kNormalize>)->Arg(1)->Arg(4)->Arg(16)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StageSerial<StageKind::kPii>)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StageParallel<StageKind::kPii>)->Arg(1)->Arg(4)->Arg(16)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StageSerial<StageKind::kLength>)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StageParallel<StageKind::kLength>)->Arg(1)->Arg(4)->Arg(16)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

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
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "medcurate/error.hpp"

namespace medcurate {

enum class Source { kGeneral, kMedical };

std::string_view source_name(Source s);

// One instruction/answer pair. `score` lies in [0,1] when present.
struct InstructionRecord {
  std::string id;
  std::string instruction;
  std::string input;
  std::string output;
  Source source = Source::kGeneral;
  std::optional<std::string> category;
  std::optional<double> score;

  bool operator==(const InstructionRecord&) const = default;
};

// A benchmark question with one or more reference answers.
struct EvalExample {
  std::string id;
  std::string question;
  std::vector<std::string> references;
  std::string category;
  std::optional<std::string> prediction;

  bool operator==(const EvalExample&) const = default;
};

struct PredictionRecord {
  std::string id;
  std::string prediction;

  bool operator==(const PredictionRecord&) const = default;
};

enum class Schema { kInstruction, kBenchmark, kPredictions };

enum class OnMalformed { kFail, kSkip };

struct ReadOptions {
  OnMalformed on_malformed = OnMalformed::kFail;
  // Reject duplicate explicit ids.
  bool strict_ids = true;
  // Called for every skipped line in kSkip mode. Defaults to a stderr log.
  std::function<void(const ParseError&)> on_skip;
};

// Line-at-a-time JSONL reader. Holds one line in memory at a time plus the
// id set when strict_ids is on.
template <typename Record>
class RecordReader {
 public:
  RecordReader(const std::filesystem::path& path, ReadOptions options = {});

  // Next record in file order, or nullopt at end of file. Throws ParseError
  // in kFail mode; in kSkip mode reports through on_skip and moves on.
  std::optional<Record> next();

  std::size_t lines_read() const { return line_no_; }
  std::size_t skipped() const { return skipped_; }

 private:
  std::filesystem::path path_;
  std::string file_name_;
  ReadOptions options_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  std::size_t offset_ = 0;
  std::size_t skipped_ = 0;
  std::unordered_set<std::string> seen_ids_;
};

using InstructionReader = RecordReader<InstructionRecord>;
using PredictionReader = RecordReader<PredictionRecord>;
// Yields benchmark lines as-is: list-form lines carry every reference,
// pair-form lines carry one. Use read_benchmark to group pairs.
using BenchmarkLineReader = RecordReader<EvalExample>;

std::vector<InstructionRecord> read_instructions(
    const std::filesystem::path& path, ReadOptions options = {});
std::vector<PredictionRecord> read_predictions(
    const std::filesystem::path& path, ReadOptions options = {});

// Loads a benchmark in either layout: one line per question with an
// "answers" list, or one line per (question, answer) pair with "answer" and
// a "question_id" grouping key. Questions keep first-appearance order.
std::vector<EvalExample> read_benchmark(const std::filesystem::path& path,
                                        ReadOptions options = {});

// Parse one JSONL line. `fallback_id` is used when the id field is absent.
// Throws std::invalid_argument describing the defect.
InstructionRecord parse_instruction(std::string_view line,
                                    const std::string& fallback_id);
PredictionRecord parse_prediction(std::string_view line,
                                  const std::string& fallback_id);
EvalExample parse_benchmark_line(std::string_view line,
                                 const std::string& fallback_id);

std::string to_jsonl(const InstructionRecord& rec);
std::string to_jsonl(const EvalExample& ex);
std::string to_jsonl(const PredictionRecord& rec);

// Writes to a sibling temp file and renames over `path` on commit(). An
// uncommitted writer removes its temp file, so readers never observe a
// partial destination.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(std::filesystem::path path);
  ~AtomicFileWriter();
  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

  std::ostream& stream() { return out_; }
  void write_line(std::string_view line);
  void commit();
  const std::filesystem::path& temp_path() const { return temp_; }

 private:
  std::filesystem::path path_;
  std::filesystem::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

// Writes `text` to `path` atomically.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view text);

template <typename Record>
std::size_t write_corpus(const std::vector<Record>& records,
                         const std::filesystem::path& path) {
  AtomicFileWriter writer(path);
  for (const auto& r : records) writer.write_line(to_jsonl(r));
  writer.commit();
  return records.size();
}

}  // namespace medcurate

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

#include "medcurate/corpus.hpp"

#include <unistd.h>

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "json.hpp"

namespace medcurate {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename Record>
struct Parsed {
  Record record;
  // Explicit id subject to the uniqueness check, if any.
  std::optional<std::string> unique_key;
};

json parse_object(std::string_view line) {
  json j = json::parse(line);  // throws json::parse_error
  if (!j.is_object()) throw std::invalid_argument("record is not an object");
  return j;
}

std::optional<std::string> optional_id(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) {
    auto s = it->get<std::string>();
    if (s.empty()) throw std::invalid_argument(std::string(key) + " is empty");
    return s;
  }
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw std::invalid_argument(std::string(key) + " must be a string");
}

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field ") + key);
  if (!it->is_string()) throw std::invalid_argument(std::string(key) + " must be a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw std::invalid_argument(std::string(key) + " must be a string");
  return it->get<std::string>();
}

Parsed<InstructionRecord> instruction_from(const json& j,
                                           const std::string& fallback_id) {
  Parsed<InstructionRecord> p;
  auto& r = p.record;
  p.unique_key = optional_id(j, "id");
  r.id = p.unique_key.value_or(fallback_id);
  r.instruction = required_string(j, "instruction");
  r.input = optional_string(j, "input").value_or("");
  r.output = required_string(j, "output");
  if (auto src = optional_string(j, "source")) {
    if (*src == "general") {
      r.source = Source::kGeneral;
    } else if (*src == "medical") {
      r.source = Source::kMedical;
    } else {
      throw std::invalid_argument("source must be general or medical, got '" + *src + "'");
    }
  }
  r.category = optional_string(j, "category");
  if (auto it = j.find("score"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw std::invalid_argument("score must be a number");
    const double s = it->get<double>();
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("score outside [0,1]");
    r.score = s;
  }
  return p;
}

Parsed<PredictionRecord> prediction_from(const json& j,
                                         const std::string& fallback_id) {
  Parsed<PredictionRecord> p;
  p.unique_key = optional_id(j, "id");
  p.record.id = p.unique_key.value_or(fallback_id);
  p.record.prediction = required_string(j, "prediction");
  return p;
}

Parsed<EvalExample> benchmark_from(const json& j,
                                   const std::string& fallback_id) {
  Parsed<EvalExample> p;
  auto& ex = p.record;
  ex.question = required_string(j, "question");
  ex.category = required_string(j, "category");
  const auto id = optional_id(j, "id");
  if (auto it = j.find("answers"); it != j.end()) {
    if (!it->is_array()) throw std::invalid_argument("answers must be a list");
    for (const auto& a : *it) {
      if (!a.is_string()) throw std::invalid_argument("answers must hold strings");
      ex.references.push_back(a.get<std::string>());
    }
    if (ex.references.empty()) throw std::invalid_argument("answers is empty");
    p.unique_key = id;
    ex.id = id.value_or(fallback_id);
  } else if (j.contains("answer")) {
    ex.references.push_back(required_string(j, "answer"));
    const auto group = optional_id(j, "question_id");
    if (group) {
      p.unique_key = id;
      ex.id = *group;
    } else {
      ex.id = id.value_or(fallback_id);
    }
  } else {
    throw std::invalid_argument("missing field answers (or answer)");
  }
  if (auto pred = optional_string(j, "prediction")) ex.prediction = std::move(pred);
  return p;
}

Parsed<InstructionRecord> parse_line(std::string_view line, const std::string& fb,
                                     InstructionRecord*) {
  return instruction_from(parse_object(line), fb);
}
Parsed<PredictionRecord> parse_line(std::string_view line, const std::string& fb,
                                    PredictionRecord*) {
  return prediction_from(parse_object(line), fb);
}
Parsed<EvalExample> parse_line(std::string_view line, const std::string& fb,
                               EvalExample*) {
  return benchmark_from(parse_object(line), fb);
}

bool blank(std::string_view s) {
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

}  // namespace

ParseError::ParseError(std::string path, std::size_t line,
                       std::size_t byte_offset, const std::string& what)
    : DataError(path + ":" + std::to_string(line) + " (byte " +
                std::to_string(byte_offset) + "): " + what),
      path_(std::move(path)),
      line_(line),
      byte_offset_(byte_offset) {}

std::string_view source_name(Source s) {
  return s == Source::kMedical ? "medical" : "general";
}

template <typename Record>
RecordReader<Record>::RecordReader(const std::filesystem::path& path,
                                   ReadOptions options)
    : path_(path),
      file_name_(path.filename().string()),
      options_(std::move(options)),
      in_(path, std::ios::binary) {
  if (!in_) throw DataError("cannot open " + path.string());
  if (!options_.on_skip) {
    options_.on_skip = [](const ParseError& e) {
      std::cerr << "skipping malformed record: " << e.what() << "\n";
    };
  }
}

template <typename Record>
std::optional<Record> RecordReader<Record>::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    const std::size_t line_offset = offset_;
    offset_ += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    try {
      auto parsed = parse_line(line, file_name_ + ":" + std::to_string(line_no_),
                               static_cast<Record*>(nullptr));
      if (options_.strict_ids && parsed.unique_key &&
          !seen_ids_.insert(*parsed.unique_key).second) {
        throw std::invalid_argument("duplicate id '" + *parsed.unique_key + "'");
      }
      return std::move(parsed.record);
    } catch (const std::exception& e) {
      ParseError err(path_.string(), line_no_, line_offset, e.what());
      if (options_.on_malformed == OnMalformed::kFail) throw err;
      ++skipped_;
      options_.on_skip(err);
    }
  }
  if (in_.bad()) throw DataError("read failure on " + path_.string());
  return std::nullopt;
}

template class RecordReader<InstructionRecord>;
template class RecordReader<PredictionRecord>;
template class RecordReader<EvalExample>;

InstructionRecord parse_instruction(std::string_view line,
                                    const std::string& fallback_id) {
  return instruction_from(parse_object(line), fallback_id).record;
}

PredictionRecord parse_prediction(std::string_view line,
                                  const std::string& fallback_id) {
  return prediction_from(parse_object(line), fallback_id).record;
}

EvalExample parse_benchmark_line(std::string_view line,
                                 const std::string& fallback_id) {
  return benchmark_from(parse_object(line), fallback_id).record;
}

std::vector<InstructionRecord> read_instructions(
    const std::filesystem::path& path, ReadOptions options) {
  InstructionReader reader(path, std::move(options));
  std::vector<InstructionRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

std::vector<PredictionRecord> read_predictions(
    const std::filesystem::path& path, ReadOptions options) {
  PredictionReader reader(path, std::move(options));
  std::vector<PredictionRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

std::vector<EvalExample> read_benchmark(const std::filesystem::path& path,
                                        ReadOptions options) {
  BenchmarkLineReader reader(path, std::move(options));
  std::vector<EvalExample> out;
  std::unordered_map<std::string, std::size_t> index;
  // Pair-form lines merge into their question. Duplicate list-form ids are
  // rejected by the reader in strict mode.
  while (auto ex = reader.next()) {
    auto [it, inserted] = index.emplace(ex->id, out.size());
    if (inserted) {
      out.push_back(std::move(*ex));
      continue;
    }
    auto& group = out[it->second];
    if (group.question != ex->question || group.category != ex->category) {
      throw DataError("question " + ex->id +
                      ": grouped answers disagree on question text or category");
    }
    for (auto& ref : ex->references) group.references.push_back(std::move(ref));
  }
  return out;
}

std::string to_jsonl(const InstructionRecord& rec) {
  ordered_json j;
  j["id"] = rec.id;
  j["instruction"] = rec.instruction;
  j["input"] = rec.input;
  j["output"] = rec.output;
  j["source"] = source_name(rec.source);
  if (rec.category) j["category"] = *rec.category;
  if (rec.score) j["score"] = *rec.score;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string to_jsonl(const EvalExample& ex) {
  ordered_json j;
  j["id"] = ex.id;
  j["question"] = ex.question;
  j["answers"] = ex.references;
  j["category"] = ex.category;
  if (ex.prediction) j["prediction"] = *ex.prediction;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string to_jsonl(const PredictionRecord& rec) {
  ordered_json j;
  j["id"] = rec.id;
  j["prediction"] = rec.prediction;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

AtomicFileWriter::AtomicFileWriter(std::filesystem::path path)
    : path_(std::move(path)) {
  temp_ = path_;
  temp_ += ".tmp." + std::to_string(::getpid());
  out_.open(temp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw DataError("cannot open " + temp_.string() + " for writing");
}

AtomicFileWriter::~AtomicFileWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicFileWriter::write_line(std::string_view line) {
  out_ << line << '\n';
}

void AtomicFileWriter::commit() {
  out_.flush();
  if (!out_) throw DataError("write failure on " + temp_.string());
  out_.close();
  std::error_code ec;
  std::filesystem::rename(temp_, path_, ec);
  if (ec) throw DataError("cannot rename onto " + path_.string() + ": " + ec.message());
  committed_ = true;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  AtomicFileWriter w(path);
  w.stream() << text;
  w.commit();
}

}  // namespace medcurate

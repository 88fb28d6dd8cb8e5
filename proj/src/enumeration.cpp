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

#include <string>
#include <string_view>

#include "medcurate/curation.hpp"

namespace medcurate {
namespace {

constexpr std::string_view kIdeographicSpace = "\xE3\x80\x80";  // U+3000

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool starts_with(std::string_view s, std::size_t pos, std::string_view prefix) {
  return s.substr(pos, prefix.size()) == prefix;
}

// Length of the leading horizontal whitespace run at `pos`.
std::size_t horizontal_space(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  while (i < s.size()) {
    if (s[i] == ' ' || s[i] == '\t') {
      ++i;
    } else if (starts_with(s, i, kIdeographicSpace)) {
      i += kIdeographicSpace.size();
    } else {
      break;
    }
  }
  return i - pos;
}

// Up to three ASCII digits at `pos`; returns their count (0 if none or too many).
std::size_t number_at(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  while (i < s.size() && is_digit(s[i])) ++i;
  const std::size_t n = i - pos;
  return n <= 3 ? n : 0;
}

struct Marker {
  std::string_view number;
  std::size_t length = 0;  // bytes consumed by the marker
};

constexpr std::string_view kOpenParens[] = {"(", "\xEF\xBC\x88"};         // ( （
constexpr std::string_view kCloseParens[] = {")", "\xEF\xBC\x89"};        // ) ）
constexpr std::string_view kSuffixes[] = {
    ",", "\xEF\xBC\x8C",        // , ，
    "\xE3\x80\x81",             // 、
    ")", "\xEF\xBC\x89",        // ) ）
    ".", "\xEF\xBC\x8E",        // . ．
};

std::optional<Marker> match_marker(std::string_view line, std::size_t pos) {
  for (auto open : kOpenParens) {
    if (!starts_with(line, pos, open)) continue;
    const std::size_t num_pos = pos + open.size();
    const std::size_t n = number_at(line, num_pos);
    if (n == 0) return std::nullopt;
    for (auto close : kCloseParens) {
      if (starts_with(line, num_pos + n, close)) {
        return Marker{line.substr(num_pos, n), open.size() + n + close.size()};
      }
    }
    return std::nullopt;
  }
  const std::size_t n = number_at(line, pos);
  if (n == 0) return std::nullopt;
  for (auto suffix : kSuffixes) {
    if (starts_with(line, pos + n, suffix)) {
      return Marker{line.substr(pos, n), n + suffix.size()};
    }
  }
  return std::nullopt;
}

void normalize_line(std::string_view line, std::string& out) {
  const std::size_t indent = horizontal_space(line, 0);
  const auto marker = match_marker(line, indent);
  // A digit right after the marker means a number such as "1,000" or "1.5".
  if (!marker || (indent + marker->length < line.size() &&
                  is_digit(line[indent + marker->length]))) {
    out += line;
    return;
  }
  out += line.substr(0, indent);
  out += marker->number;
  out += '.';
  const std::size_t rest = indent + marker->length;
  const std::size_t body = rest + horizontal_space(line, rest);
  if (body < line.size()) {
    out += ' ';
    out += line.substr(body);
  }
}

}  // namespace

std::string normalize_enumeration(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 8);
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
    const bool cr = !line.empty() && line.back() == '\r';
    if (cr) line.remove_suffix(1);
    normalize_line(line, out);
    if (cr) out += '\r';
    if (nl == std::string_view::npos) break;
    out += '\n';
    start = nl + 1;
  }
  return out;
}

FilterVerdict normalize_record(const InstructionRecord& rec) {
  std::string instruction = normalize_enumeration(rec.instruction);
  std::string input = normalize_enumeration(rec.input);
  std::string output = normalize_enumeration(rec.output);
  if (instruction == rec.instruction && input == rec.input && output == rec.output) {
    return FilterVerdict::keep();
  }
  FilterVerdict v;
  v.transformed = rec;
  v.transformed->instruction = std::move(instruction);
  v.transformed->input = std::move(input);
  v.transformed->output = std::move(output);
  return v;
}

}  // namespace medcurate

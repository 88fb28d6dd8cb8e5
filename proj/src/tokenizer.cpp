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

#include "medcurate/tokenizer.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

#include "medcurate/error.hpp"

namespace medcurate {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Unicode White_Space property.
bool is_space(char32_t c) {
  if (c <= 0x20) return c == 0x20 || (c >= 0x09 && c <= 0x0D);
  switch (c) {
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_ascii_alnum(char32_t c) {
  return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') ||
         (c >= 'a' && c <= 'z');
}

char32_t fold_char(char32_t c) {
  if ((c >= 0xFF10 && c <= 0xFF19) || (c >= 0xFF21 && c <= 0xFF3A) ||
      (c >= 0xFF41 && c <= 0xFF5A)) {
    return c - 0xFEE0;
  }
  return c;
}

void append_utf8(std::string& out, char32_t c) {
  char buf[4];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(buf, len, 4, static_cast<UChar32>(c), error);
  if (error) {
    len = 0;
    U8_APPEND_UNSAFE(buf, len, kReplacement);
  }
  out.append(buf, static_cast<std::size_t>(len));
}

// Decodes one codepoint at `pos`, advancing it. Ill-formed input decodes to
// U+FFFD.
char32_t next_codepoint(std::string_view s, int32_t& pos) {
  UChar32 c;
  U8_NEXT(s.data(), pos, static_cast<int32_t>(s.size()), c);
  return c < 0 ? kReplacement : static_cast<char32_t>(c);
}

bool all_ascii(std::string_view s) {
  for (unsigned char ch : s) {
    if (ch >= 0x80) return false;
  }
  return true;
}

std::string nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC unavailable");
  icu::UnicodeString src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (norm->isNormalized(src, status) && U_SUCCESS(status)) {
    std::string out;
    src.toUTF8String(out);
    return out;
  }
  status = U_ZERO_ERROR;
  icu::UnicodeString dst = norm->normalize(src, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

}  // namespace

std::string_view policy_name(TokenPolicy policy) {
  switch (policy) {
    case TokenPolicy::kCjkChar: return "cjk_char";
    case TokenPolicy::kWhitespace: return "whitespace";
  }
  return "unknown";
}

TokenPolicy parse_policy(std::string_view name) {
  if (name == "cjk_char") return TokenPolicy::kCjkChar;
  if (name == "whitespace") return TokenPolicy::kWhitespace;
  throw ConfigError("unknown tokenization policy '" + std::string(name) +
                    "' (expected cjk_char or whitespace)");
}

bool is_valid_utf8(std::string_view text) {
  int32_t pos = 0;
  const auto len = static_cast<int32_t>(text.size());
  while (pos < len) {
    UChar32 c;
    U8_NEXT(text.data(), pos, len, c);
    if (c < 0) return false;
  }
  return true;
}

std::string fold_width(std::string_view text) {
  if (all_ascii(text)) return std::string(text);
  std::string out;
  out.reserve(text.size());
  int32_t pos = 0;
  while (pos < static_cast<int32_t>(text.size())) {
    append_utf8(out, fold_char(next_codepoint(text, pos)));
  }
  return out;
}

std::string normalize_text(std::string_view text) {
  if (all_ascii(text)) return std::string(text);
  // ICU replaces ill-formed sequences with U+FFFD on the way in.
  return fold_width(nfc(text));
}

TokenSequence tokenize(std::string_view raw, TokenPolicy policy) {
  TokenSequence seq;
  seq.policy = policy;
  const std::string text = normalize_text(raw);
  const auto len = static_cast<int32_t>(text.size());
  int32_t pos = 0;

  if (policy == TokenPolicy::kWhitespace) {
    std::string current;
    while (pos < len) {
      const int32_t start = pos;
      const char32_t c = next_codepoint(text, pos);
      if (is_space(c)) {
        if (!current.empty()) seq.tokens.push_back(std::move(current));
        current.clear();
      } else {
        current.append(text, static_cast<std::size_t>(start),
                       static_cast<std::size_t>(pos - start));
      }
    }
    if (!current.empty()) seq.tokens.push_back(std::move(current));
    return seq;
  }

  std::string run;
  while (pos < len) {
    const int32_t start = pos;
    const char32_t c = next_codepoint(text, pos);
    if (is_ascii_alnum(c)) {
      run.push_back(static_cast<char>(c));
      continue;
    }
    if (!run.empty()) {
      seq.tokens.push_back(std::move(run));
      run.clear();
    }
    if (is_space(c)) continue;
    seq.tokens.emplace_back(text, static_cast<std::size_t>(start),
                            static_cast<std::size_t>(pos - start));
  }
  if (!run.empty()) seq.tokens.push_back(std::move(run));
  return seq;
}

std::string detokenize(const TokenSequence& seq) {
  auto alnum_token = [](const std::string& t) {
    return !t.empty() && is_ascii_alnum(static_cast<unsigned char>(t.front()));
  };
  std::string out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i > 0) {
      const bool sep = seq.policy == TokenPolicy::kWhitespace ||
                       (alnum_token(seq.tokens[i - 1]) &&
                        alnum_token(seq.tokens[i]));
      if (sep) out.push_back(' ');
    }
    out += seq.tokens[i];
  }
  return out;
}

NgramCounts ngrams(const TokenSequence& seq, std::size_t n) {
  if (n == 0) throw std::invalid_argument("ngrams: n must be >= 1");
  NgramCounts counts;
  const auto& t = seq.tokens;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    ++counts[Ngram(t.begin() + static_cast<std::ptrdiff_t>(i),
                   t.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace medcurate

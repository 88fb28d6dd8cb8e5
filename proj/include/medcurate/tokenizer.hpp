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
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace medcurate {

enum class TokenPolicy {
  // One token per CJK codepoint, per punctuation codepoint, and per maximal
  // run of ASCII alphanumerics. Whitespace separates and is dropped.
  kCjkChar,
  // Split on Unicode whitespace only.
  kWhitespace,
};

std::string_view policy_name(TokenPolicy policy);
// Throws ConfigError on an unknown name.
TokenPolicy parse_policy(std::string_view name);

struct TokenSequence {
  std::vector<std::string> tokens;
  TokenPolicy policy = TokenPolicy::kCjkChar;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const TokenSequence&) const = default;
};

// NFC normalization followed by folding of full-width ASCII letters and
// digits (U+FF10..U+FF19, U+FF21..U+FF3A, U+FF41..U+FF5A) to half-width.
// Invalid UTF-8 sequences are replaced with U+FFFD.
std::string normalize_text(std::string_view text);

// Width folding alone, without NFC. Used by the PII scanner.
std::string fold_width(std::string_view text);

bool is_valid_utf8(std::string_view text);

TokenSequence tokenize(std::string_view text,
                       TokenPolicy policy = TokenPolicy::kCjkChar);

// Inverse of tokenize for display: cjk_char joins with a space only between
// adjacent ASCII-alphanumeric tokens, whitespace joins with single spaces.
std::string detokenize(const TokenSequence& seq);

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, std::size_t>;

// All contiguous n-grams with multiplicity. Throws std::invalid_argument
// for n == 0.
NgramCounts ngrams(const TokenSequence& seq, std::size_t n);

}  // namespace medcurate

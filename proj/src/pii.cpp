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

#include <boost/regex.hpp>

#include <array>

#include "medcurate/curation.hpp"

namespace medcurate {

struct PiiScanner::Impl {
  struct Pattern {
    std::string_view name;
    boost::regex re;
    bool check_resident_id = false;
    // Cheap precondition: the pattern cannot match text lacking this byte
    // class, so the regex is skipped.
    enum class Needs { kNothing, kAt, kDigit } needs = Needs::kNothing;
  };
  std::vector<Pattern> active;
};

namespace {

constexpr auto kFlags = boost::regex::perl | boost::regex::optimize;

// RFC 5322 lite: dotted local part, dotted domain with an alphabetic TLD.
const char* kEmail =
    R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9](?:[A-Za-z0-9\-]*[A-Za-z0-9])?(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})";
const char* kCnMobile = R"((?:\+?86[\- ]?)?1[3-9][0-9]{9}(?![0-9]))";
// Area code must be delimited by a hyphen or brackets.
const char* kCnLandline =
    "(?:0[1-9][0-9]{1,2}-|\\(0[1-9][0-9]{1,2}\\)|\xEF\xBC\x88" "0[1-9][0-9]{1,2}\xEF\xBC\x89)"
    "[2-9][0-9]{6,7}(?![0-9])";
const char* kResidentId =
    R"([1-9][0-9]{5}(?:18|19|20)[0-9]{2}(?:0[1-9]|1[0-2])(?:0[1-9]|[12][0-9]|3[01])[0-9]{3}[0-9Xx](?![0-9Xx]))";
// 微信 / 微信号 / QQ / QQ号 / 扣扣 / VX / WX followed by an identifier.
const char* kContactPhrase =
    "(?:\xE5\xBE\xAE\xE4\xBF\xA1(?:\xE5\x8F\xB7)?|[Qq]{2}(?:\xE5\x8F\xB7)?|\xE6\x89\xA3\xE6\x89\xA3"
    "|[Vv][Xx]|[Ww][Xx])[ \\t]*(?::|\xEF\xBC\x9A)?[ \\t]*[A-Za-z0-9_\\-]{5,20}";

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

bool valid_resident_id(std::string_view id) {
  static constexpr std::array<int, 17> kWeights = {7, 9, 10, 5, 8, 4, 2, 1, 6,
                                                   3, 7, 9, 10, 5, 8, 4, 2};
  static constexpr std::string_view kCheck = "10X98765432";
  if (id.size() != 18) return false;
  int sum = 0;
  for (std::size_t i = 0; i < 17; ++i) {
    if (id[i] < '0' || id[i] > '9') return false;
    sum += (id[i] - '0') * kWeights[i];
  }
  char last = id[17];
  if (last == 'x') last = 'X';
  return kCheck[static_cast<std::size_t>(sum % 11)] == last;
}

PiiScanner::PiiScanner(PiiPatternSet patterns)
    : patterns_(patterns), impl_(std::make_unique<Impl>()) {
  using Needs = Impl::Pattern::Needs;
  auto add = [&](bool on, std::string_view name, const char* re, Needs needs,
                 bool id_check = false) {
    if (on) impl_->active.push_back({name, boost::regex(re, kFlags), id_check, needs});
  };
  add(patterns_.email, "email", kEmail, Needs::kAt);
  add(patterns_.cn_mobile, "cn_mobile", kCnMobile, Needs::kDigit);
  add(patterns_.cn_landline, "cn_landline", kCnLandline, Needs::kDigit);
  add(patterns_.cn_resident_id, "cn_resident_id", kResidentId, Needs::kDigit, true);
  add(patterns_.contact_phrase, "contact_phrase", kContactPhrase, Needs::kNothing);
}

PiiScanner::~PiiScanner() = default;
PiiScanner::PiiScanner(PiiScanner&&) noexcept = default;
PiiScanner& PiiScanner::operator=(PiiScanner&&) noexcept = default;

std::optional<std::string_view> PiiScanner::find(std::string_view raw) const {
  if (raw.empty()) return std::nullopt;
  const std::string text = fold_width(raw);
  const bool has_at = text.find('@') != std::string::npos;
  const bool has_digit = text.find_first_of("0123456789") != std::string::npos;
  using Needs = Impl::Pattern::Needs;
  for (const auto& p : impl_->active) {
    if ((p.needs == Needs::kAt && !has_at) || (p.needs == Needs::kDigit && !has_digit)) continue;
    if (p.needs != Needs::kDigit) {
      if (boost::regex_search(text.begin(), text.end(), p.re)) return p.name;
      continue;
    }
    // Digit patterns must not start inside a longer digit run. The guard is
    // checked here rather than as a lookbehind, which would defeat the
    // regex engine's first-character scan.
    auto it = text.cbegin();
    auto flags = boost::match_default;
    boost::smatch m;
    while (boost::regex_search(it, text.cend(), m, p.re, flags)) {
      const auto start = m[0].first;
      const bool guarded = start == text.cbegin() || !is_ascii_digit(*(start - 1));
      if (guarded && (!p.check_resident_id || valid_resident_id(m.str()))) return p.name;
      it = start + 1;
      flags = flags | boost::match_prev_avail;
    }
  }
  return std::nullopt;
}

FilterVerdict filter_pii(const InstructionRecord& rec, const PiiScanner& scanner) {
  if (scanner.find(rec.instruction) || scanner.find(rec.input) || scanner.find(rec.output)) {
    return FilterVerdict::discard(kReasonPii);
  }
  return FilterVerdict::keep();
}

}  // namespace medcurate

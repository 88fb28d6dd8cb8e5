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

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace medcurate {

struct ScoreRequest {
  std::string id;
  std::string question;
  std::string answer;
};

// `score` lies in [0,1]. When the backend reported a raw value, `raw` holds
// it and score == logistic(raw).
struct ScoreResponse {
  std::string id;
  double score = 0.0;
  std::optional<double> raw;
};

// One item of a backend reply before normalization.
struct BackendReply {
  std::string id;
  std::optional<double> score;
  std::optional<double> raw;
};

// Retryable failure: connection refused, timeout, 5xx, 429.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-retryable failure: the backend answered with something unusable.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;
  virtual std::string name() const = 0;
  virtual std::size_t max_batch() const = 0;
  // Must be safe to call from several threads at once.
  virtual std::vector<BackendReply> score(std::span<const ScoreRequest> batch) = 0;
};

// Unigram F1 between cjk_char tokenizations of answer and question. A
// deterministic test double; it says nothing about answer quality.
double stub_score(std::string_view question, std::string_view answer);

// Numerically stable 1 / (1 + e^-x).
double logistic(double raw);

class StubBackend : public ScorerBackend {
 public:
  explicit StubBackend(std::size_t max_batch = 64) : max_batch_(max_batch) {}
  std::string name() const override { return "stub"; }
  std::size_t max_batch() const override { return max_batch_; }
  std::vector<BackendReply> score(std::span<const ScoreRequest> batch) override;

 private:
  std::size_t max_batch_;
};

// Environment variables read by HttpBackend::from_env.
inline constexpr const char* kRewardUrlEnv = "MEDCURATE_REWARD_URL";
inline constexpr const char* kRewardTokenEnv = "MEDCURATE_REWARD_TOKEN";

// POSTs a JSON list of {id, question, answer} to the batch endpoint and
// expects a JSON list of {id, score} or {id, raw} back.
class HttpBackend : public ScorerBackend {
 public:
  struct Options {
    std::string url;  // http://host[:port]/path
    std::string token;
    std::size_t max_batch = 16;
    std::chrono::milliseconds timeout{30000};
  };

  explicit HttpBackend(Options options);
  // Throws ConfigError when MEDCURATE_REWARD_URL is unset.
  static std::unique_ptr<HttpBackend> from_env(std::size_t max_batch,
                                               std::chrono::milliseconds timeout);

  std::string name() const override { return "remote"; }
  std::size_t max_batch() const override { return options_.max_batch; }
  std::vector<BackendReply> score(std::span<const ScoreRequest> batch) override;

 private:
  Options options_;
  std::string scheme_host_port_;
  std::string path_;
};

// Parses a reply body. Throws ProtocolError quoting an excerpt of the
// payload when it is not a list of {id, score|raw} objects.
std::vector<BackendReply> parse_reply_body(std::string_view body);

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::milliseconds max_backoff{2000};
};

enum class ScoreErrorKind { kNone, kTransport, kProtocol };

struct ScoreOutcome {
  std::string id;
  std::optional<ScoreResponse> response;
  ScoreErrorKind error = ScoreErrorKind::kNone;
  std::string message;

  bool ok() const { return response.has_value(); }
};

// Shared across workers. Retries transport failures with capped exponential
// backoff and bounds the number of concurrent backend calls.
class RewardClient {
 public:
  RewardClient(std::shared_ptr<ScorerBackend> backend, RetryPolicy retry = {},
               std::size_t max_in_flight = 4);
  ~RewardClient();
  RewardClient(const RewardClient&) = delete;
  RewardClient& operator=(const RewardClient&) = delete;

  // One outcome per request, in request order. Throws std::invalid_argument
  // when the batch exceeds the backend limit or repeats an id.
  std::vector<ScoreOutcome> score_batch(std::span<const ScoreRequest> requests);

  // Splits into backend-sized batches and runs up to max_in_flight of them
  // concurrently. Outcomes stay in request order.
  std::vector<ScoreOutcome> score_all(std::span<const ScoreRequest> requests);

  const ScorerBackend& backend() const { return *backend_; }
  std::size_t peak_in_flight() const;

 private:
  struct Gate;
  std::shared_ptr<ScorerBackend> backend_;
  RetryPolicy retry_;
  std::unique_ptr<Gate> gate_;
};

}  // namespace medcurate

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

#include "medcurate/reward.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "httplib.h"
#include "json.hpp"
#include "medcurate/error.hpp"
#include "medcurate/tokenizer.hpp"

namespace medcurate {
namespace {

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 200;
  if (body.size() <= kMax) return std::string(body);
  return std::string(body.substr(0, kMax)) + "...";
}

}  // namespace

double logistic(double raw) {
  if (raw >= 0.0) return 1.0 / (1.0 + std::exp(-raw));
  const double e = std::exp(raw);
  return e / (1.0 + e);
}

double stub_score(std::string_view question, std::string_view answer) {
  const TokenSequence q = tokenize(question, TokenPolicy::kCjkChar);
  const TokenSequence a = tokenize(answer, TokenPolicy::kCjkChar);
  if (q.empty() || a.empty()) return 0.0;
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& t : q.tokens) ++counts[t];
  std::size_t hits = 0;
  for (const auto& t : a.tokens) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++hits;
    }
  }
  if (hits == 0) return 0.0;
  const double p = static_cast<double>(hits) / static_cast<double>(a.size());
  const double r = static_cast<double>(hits) / static_cast<double>(q.size());
  return 2.0 * p * r / (p + r);
}

std::vector<BackendReply> StubBackend::score(std::span<const ScoreRequest> batch) {
  std::vector<BackendReply> out;
  out.reserve(batch.size());
  for (const auto& req : batch) {
    out.push_back({req.id, stub_score(req.question, req.answer), std::nullopt});
  }
  return out;
}

HttpBackend::HttpBackend(Options options) : options_(std::move(options)) {
  constexpr std::string_view kScheme = "http://";
  const std::string& url = options_.url;
  if (url.rfind(kScheme, 0) != 0) {
    throw ConfigError("reward endpoint must be an http:// URL, got '" + url + "'");
  }
  const auto slash = url.find('/', kScheme.size());
  scheme_host_port_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
  if (scheme_host_port_.size() == kScheme.size()) {
    throw ConfigError("reward endpoint has no host: '" + url + "'");
  }
  if (options_.max_batch == 0) throw ConfigError("reward batch size must be >= 1");
}

std::unique_ptr<HttpBackend> HttpBackend::from_env(std::size_t max_batch,
                                                   std::chrono::milliseconds timeout) {
  const char* url = std::getenv(kRewardUrlEnv);
  if (url == nullptr || *url == '\0') {
    throw ConfigError(std::string("remote scorer selected but ") + kRewardUrlEnv + " is not set");
  }
  Options o;
  o.url = url;
  if (const char* token = std::getenv(kRewardTokenEnv)) o.token = token;
  o.max_batch = max_batch;
  o.timeout = timeout;
  return std::make_unique<HttpBackend>(std::move(o));
}

std::vector<BackendReply> parse_reply_body(std::string_view body) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    throw ProtocolError("reply is not JSON: " + excerpt(body));
  }
  if (!j.is_array()) throw ProtocolError("reply is not a list: " + excerpt(body));
  std::vector<BackendReply> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("id") || !item["id"].is_string()) {
      throw ProtocolError("reply item lacks a string id: " + excerpt(body));
    }
    BackendReply r;
    r.id = item["id"].get<std::string>();
    if (auto it = item.find("score"); it != item.end() && !it->is_null()) {
      if (!it->is_number()) throw ProtocolError("non-numeric score: " + excerpt(body));
      r.score = it->get<double>();
    }
    if (auto it = item.find("raw"); it != item.end() && !it->is_null()) {
      if (!it->is_number()) throw ProtocolError("non-numeric raw: " + excerpt(body));
      r.raw = it->get<double>();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<BackendReply> HttpBackend::score(std::span<const ScoreRequest> batch) {
  nlohmann::json body = nlohmann::json::array();
  for (const auto& req : batch) {
    body.push_back({{"id", req.id}, {"question", req.question}, {"answer", req.answer}});
  }
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!options_.token.empty()) headers.emplace("Authorization", "Bearer " + options_.token);
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw TransportError("reward endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("reward endpoint returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw ProtocolError("reward endpoint returned HTTP " + std::to_string(res->status) + ": " +
                        excerpt(res->body));
  }
  return parse_reply_body(res->body);
}

struct RewardClient::Gate {
  std::mutex mu;
  std::condition_variable cv;
  std::size_t limit;
  std::size_t active = 0;
  std::size_t peak = 0;

  explicit Gate(std::size_t n) : limit(n) {}

  void acquire() {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return active < limit; });
    ++active;
    peak = std::max(peak, active);
  }
  void release() {
    {
      std::lock_guard lock(mu);
      --active;
    }
    cv.notify_one();
  }
};

RewardClient::RewardClient(std::shared_ptr<ScorerBackend> backend, RetryPolicy retry,
                           std::size_t max_in_flight)
    : backend_(std::move(backend)),
      retry_(retry),
      gate_(std::make_unique<Gate>(std::max<std::size_t>(max_in_flight, 1))) {
  if (!backend_) throw std::invalid_argument("RewardClient needs a backend");
  if (retry_.max_attempts < 1) throw ConfigError("retry max_attempts must be >= 1");
}

RewardClient::~RewardClient() = default;

std::size_t RewardClient::peak_in_flight() const {
  std::lock_guard lock(gate_->mu);
  return gate_->peak;
}

std::vector<ScoreOutcome> RewardClient::score_batch(std::span<const ScoreRequest> requests) {
  if (requests.size() > backend_->max_batch()) {
    throw std::invalid_argument("batch of " + std::to_string(requests.size()) +
                                " exceeds backend limit " + std::to_string(backend_->max_batch()));
  }
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (!index.emplace(requests[i].id, i).second) {
      throw std::invalid_argument("duplicate request id '" + requests[i].id + "' in batch");
    }
  }

  std::vector<ScoreOutcome> outcomes(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) outcomes[i].id = requests[i].id;
  if (requests.empty()) return outcomes;

  auto fail_all = [&](ScoreErrorKind kind, const std::string& msg) {
    for (auto& o : outcomes) {
      o.response.reset();
      o.error = kind;
      o.message = msg;
    }
    return outcomes;
  };

  std::vector<BackendReply> replies;
  auto backoff = retry_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      gate_->acquire();
      struct Release {
        Gate* g;
        ~Release() { g->release(); }
      } release{gate_.get()};
      replies = backend_->score(requests);
      break;
    } catch (const TransportError& e) {
      if (attempt >= retry_.max_attempts) {
        return fail_all(ScoreErrorKind::kTransport,
                        std::string(e.what()) + " (after " + std::to_string(attempt) + " attempts)");
      }
    } catch (const std::exception& e) {
      return fail_all(ScoreErrorKind::kProtocol, e.what());
    }
    std::this_thread::sleep_for(backoff);
    backoff = std::min(backoff * 2, retry_.max_backoff);
  }

  std::vector<bool> answered(requests.size(), false);
  for (const auto& reply : replies) {
    auto it = index.find(reply.id);
    if (it == index.end()) {
      return fail_all(ScoreErrorKind::kProtocol, "reply carries unknown id '" + reply.id + "'");
    }
    const std::size_t i = it->second;
    if (answered[i]) {
      return fail_all(ScoreErrorKind::kProtocol, "reply repeats id '" + reply.id + "'");
    }
    answered[i] = true;
    auto& out = outcomes[i];
    ScoreResponse resp;
    resp.id = reply.id;
    if (reply.raw) {
      if (!std::isfinite(*reply.raw)) {
        out.error = ScoreErrorKind::kProtocol;
        out.message = "non-finite raw value";
        continue;
      }
      resp.raw = reply.raw;
      resp.score = logistic(*reply.raw);
    } else if (reply.score) {
      if (!(*reply.score >= 0.0 && *reply.score <= 1.0)) {
        out.error = ScoreErrorKind::kProtocol;
        out.message = "score outside [0,1]: " + std::to_string(*reply.score);
        continue;
      }
      resp.score = *reply.score;
    } else {
      out.error = ScoreErrorKind::kProtocol;
      out.message = "reply item has neither score nor raw";
      continue;
    }
    out.response = std::move(resp);
  }
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (!answered[i]) {
      outcomes[i].error = ScoreErrorKind::kProtocol;
      outcomes[i].message = "no score returned for id '" + requests[i].id + "'";
    }
  }
  return outcomes;
}

std::vector<ScoreOutcome> RewardClient::score_all(std::span<const ScoreRequest> requests) {
  const std::size_t batch = backend_->max_batch();
  const std::size_t nbatches = (requests.size() + batch - 1) / batch;
  std::vector<std::vector<ScoreOutcome>> parts(nbatches);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t b = next++; b < nbatches; b = next++) {
      const std::size_t lo = b * batch;
      const std::size_t n = std::min(batch, requests.size() - lo);
      try {
        parts[b] = score_batch(requests.subspan(lo, n));
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = std::min(gate_->limit, nbatches);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ScoreOutcome> out;
  out.reserve(requests.size());
  for (auto& p : parts) {
    for (auto& o : p) out.push_back(std::move(o));
  }
  return out;
}

}  // namespace medcurate

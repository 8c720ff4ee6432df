#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "hashtriage/verifier.hpp"

namespace hashtriage {

// At most `requests` calls per `interval`.
struct RateBudget {
  std::uint32_t requests = 10;
  std::chrono::milliseconds interval{1000};

  // "N/INTERVAL", INTERVAL one of "250ms", "2s", "1m", or bare seconds.
  static std::optional<RateBudget> parse(std::string_view text);
};

using MonotonicClock = std::function<std::chrono::milliseconds()>;

// Token bucket refilled continuously at requests/interval, burst = requests.
class RateLimiter {
 public:
  RateLimiter(RateBudget budget, Sleeper sleeper = {}, MonotonicClock clock = {});
  void acquire();

 private:
  RateBudget budget_;
  Sleeper sleeper_;
  MonotonicClock clock_;
  std::mutex mu_;
  double tokens_;
  std::chrono::milliseconds last_;
};

// Performs one remote lookup; throws ProviderUnavailable on any failure.
using HttpTransport = std::function<ThreatSet(const std::string& url)>;

// POSTs {"url": ...} to `endpoint` (http://host[:port]/path) and reads
// {"threat_types": [...]} from a 200 response.
HttpTransport make_http_transport(const std::string& endpoint,
                                  std::chrono::seconds timeout = std::chrono::seconds{10});

// Thin remote-service adapter: rate limiting here, retries and backoff in
// VerdictLookup.
class HttpVerdictProvider : public VerdictProvider {
 public:
  HttpVerdictProvider(HttpTransport transport, RateBudget budget,
                      Sleeper sleeper = {}, MonotonicClock clock = {});

  ThreatSet check(const std::string& normalized_url) override;
  std::string name() const override { return "http"; }

 private:
  HttpTransport transport_;
  RateLimiter limiter_;
};

}  // namespace hashtriage

#include "hashtriage/http_provider.hpp"

#include <charconv>
#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace hashtriage {

std::optional<RateBudget> RateBudget::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  const auto count = trim(text.substr(0, slash));
  std::string_view interval = trim(text.substr(slash + 1));

  RateBudget b;
  auto [p, ec] = std::from_chars(count.data(), count.data() + count.size(), b.requests);
  if (ec != std::errc() || p != count.data() + count.size() || b.requests == 0) {
    return std::nullopt;
  }
  std::int64_t scale = 1000;
  if (interval.ends_with("ms")) {
    scale = 1;
    interval.remove_suffix(2);
  } else if (interval.ends_with("s")) {
    interval.remove_suffix(1);
  } else if (interval.ends_with("m")) {
    scale = 60000;
    interval.remove_suffix(1);
  }
  std::int64_t amount = 1;
  if (!interval.empty()) {
    auto [q, ec2] = std::from_chars(interval.data(), interval.data() + interval.size(), amount);
    if (ec2 != std::errc() || q != interval.data() + interval.size() || amount <= 0) {
      return std::nullopt;
    }
  }
  b.interval = std::chrono::milliseconds{amount * scale};
  return b;
}

RateLimiter::RateLimiter(RateBudget budget, Sleeper sleeper, MonotonicClock clock)
    : budget_(budget),
      sleeper_(sleeper ? std::move(sleeper) : real_sleeper()),
      clock_(clock ? std::move(clock) : [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now().time_since_epoch());
      }),
      tokens_(budget.requests),
      last_(clock_()) {}

void RateLimiter::acquire() {
  std::lock_guard lock(mu_);
  const double per_ms = static_cast<double>(budget_.requests) /
                        static_cast<double>(budget_.interval.count());
  while (true) {
    const auto now = clock_();
    tokens_ = std::min<double>(budget_.requests,
                               tokens_ + static_cast<double>((now - last_).count()) * per_ms);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = static_cast<std::int64_t>(std::ceil((1.0 - tokens_) / per_ms));
    sleeper_(std::chrono::milliseconds{std::max<std::int64_t>(wait, 1)});
  }
}

HttpTransport make_http_transport(const std::string& endpoint,
                                  std::chrono::seconds timeout) {
  constexpr std::string_view kScheme = "http://";
  if (endpoint.rfind(kScheme, 0) != 0) {
    throw std::invalid_argument("endpoint must start with http://");
  }
  const auto path_at = endpoint.find('/', kScheme.size());
  const std::string base = endpoint.substr(0, path_at);
  const std::string path = path_at == std::string::npos ? "/" : endpoint.substr(path_at);

  return [base, path, timeout](const std::string& url) {
    httplib::Client client(base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    const std::string body = nlohmann::json{{"url", url}}.dump();
    const auto res = client.Post(path, body, "application/json");
    if (!res) {
      throw ProviderUnavailable("request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw ProviderUnavailable("HTTP status " + std::to_string(res->status));
    }
    ThreatSet threats;
    try {
      const auto j = nlohmann::json::parse(res->body);
      for (const auto& t : j.at("threat_types")) {
        const auto parsed = ThreatSet::parse(t.get<std::string>());
        if (!parsed) throw ProviderUnavailable("unknown threat type in response");
        threats |= *parsed;
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProviderUnavailable(std::string("bad response body: ") + e.what());
    }
    return threats;
  };
}

HttpVerdictProvider::HttpVerdictProvider(HttpTransport transport,
                                         RateBudget budget, Sleeper sleeper,
                                         MonotonicClock clock)
    : transport_(std::move(transport)),
      limiter_(budget, std::move(sleeper), std::move(clock)) {}

ThreatSet HttpVerdictProvider::check(const std::string& normalized_url) {
  limiter_.acquire();
  return transport_(normalized_url);
}

}  // namespace hashtriage

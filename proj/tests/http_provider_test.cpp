#include "hashtriage/http_provider.hpp"

#include <gtest/gtest.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <thread>

#include "test_util.hpp"

namespace hashtriage {
namespace {

using std::chrono::milliseconds;

TEST(RateBudgetTest, Parse) {
  EXPECT_EQ(RateBudget::parse("10/1s")->requests, 10u);
  EXPECT_EQ(RateBudget::parse("10/1s")->interval, milliseconds{1000});
  EXPECT_EQ(RateBudget::parse("5/250ms")->interval, milliseconds{250});
  EXPECT_EQ(RateBudget::parse("600/1m")->interval, milliseconds{60000});
  EXPECT_EQ(RateBudget::parse("3/s")->interval, milliseconds{1000});
  EXPECT_EQ(RateBudget::parse("3/2")->interval, milliseconds{2000});
  for (const char* bad : {"", "10", "0/1s", "x/1s", "10/0s", "10/-1s", "10/1h"}) {
    EXPECT_FALSE(RateBudget::parse(bad)) << bad;
  }
}

// Fake monotonic time advanced only by the sleeper.
struct FakeTime {
  std::int64_t now_ms = 0;
  std::int64_t slept_ms = 0;
  Sleeper sleeper() {
    return [this](milliseconds d) {
      now_ms += d.count();
      slept_ms += d.count();
    };
  }
  MonotonicClock clock() {
    return [this] { return milliseconds{now_ms}; };
  }
};

TEST(RateLimiterTest, BurstThenPaced) {
  FakeTime t;
  RateLimiter limiter(RateBudget{4, milliseconds{1000}}, t.sleeper(), t.clock());
  for (int i = 0; i < 4; ++i) limiter.acquire();
  EXPECT_EQ(t.slept_ms, 0);
  limiter.acquire();
  EXPECT_EQ(t.slept_ms, 250);
}

TEST(RateLimiterPropertyTest, NeverExceedsBudget) {
  testutil::Gen g(61);
  for (int round = 0; round < 50; ++round) {
    FakeTime t;
    const auto req = static_cast<std::uint32_t>(g.range(1, 20));
    const milliseconds interval{g.range(10, 5000)};
    RateLimiter limiter(RateBudget{req, interval}, t.sleeper(), t.clock());
    std::vector<std::int64_t> stamps;
    const int n = static_cast<int>(g.range(1, 120));
    for (int i = 0; i < n; ++i) {
      if (g.coin(20)) t.now_ms += g.range(0, interval.count());
      limiter.acquire();
      stamps.push_back(t.now_ms);
    }
    // Token bucket bound: between two grants at t_i <= t_j there can be at
    // most the burst plus what refilled in between.
    for (std::size_t i = 0; i < stamps.size(); ++i) {
      for (std::size_t j = i; j < stamps.size(); ++j) {
        const double refill = static_cast<double>(stamps[j] - stamps[i]) * req /
                              static_cast<double>(interval.count());
        ASSERT_LE(static_cast<double>(j - i + 1), req + refill + 1e-9)
            << "req=" << req << " interval=" << interval.count();
      }
    }
  }
}

class StubServer {
 public:
  StubServer() {
    server_.Post("/v1/lookup", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      if (fail_first_ > 0) {
        --fail_first_;
        res.status = 503;
        return;
      }
      const auto url = nlohmann::json::parse(req.body).at("url").get<std::string>();
      nlohmann::json types = nlohmann::json::array();
      if (url.find("evil") != std::string::npos) types.push_back("MALWARE");
      if (url.find("phish") != std::string::npos) types.push_back("SOCIAL_ENGINEERING");
      if (url.find("garbage") != std::string::npos) {
        res.set_content("not json", "application/json");
        return;
      }
      res.set_content(nlohmann::json{{"threat_types", types}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/lookup"; }
  int hits() const { return hits_; }
  void fail_first(int n) { fail_first_ = n; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> hits_{0};
  std::atomic<int> fail_first_{0};
};

TEST(HttpTransportTest, RoundTripAgainstLocalServer) {
  StubServer server;
  auto transport = make_http_transport(server.endpoint(), std::chrono::seconds{5});
  EXPECT_EQ(transport("http://evil.example/"), ThreatSet{ThreatSet::kMalware});
  EXPECT_EQ(transport("http://evil-phish.example/").bits(), 3);
  EXPECT_TRUE(transport("http://fine.example/").empty());
  EXPECT_THROW(transport("http://garbage.example/"), ProviderUnavailable);
  server.fail_first(1);
  EXPECT_THROW(transport("http://evil.example/"), ProviderUnavailable);
}

TEST(HttpTransportTest, UnreachableAndBadEndpoints) {
  EXPECT_THROW(make_http_transport("https://x/"), std::invalid_argument);
  // Port 1 on loopback refuses connections.
  auto transport = make_http_transport("http://127.0.0.1:1/x", std::chrono::seconds{1});
  EXPECT_THROW(transport("http://a/"), ProviderUnavailable);
}

TEST(HttpVerdictProviderTest, RetriesThroughLookup) {
  StubServer server;
  server.fail_first(2);
  FakeTime t;
  HttpVerdictProvider provider(make_http_transport(server.endpoint()),
                               RateBudget{100, milliseconds{1000}}, t.sleeper(), t.clock());
  LookupOptions o;
  o.sleeper = [](milliseconds) {};
  o.clock = [] { return std::int64_t{1}; };
  VerdictLookup lookup(provider, o);
  const std::vector<std::string> urls = {"http://evil.example/", "http://ok.example/"};
  const auto v = lookup.lookup(urls);
  EXPECT_TRUE(v[0].confirmed());
  EXPECT_EQ(v[1].status, VerdictStatus::kChecked);
  EXPECT_FALSE(v[1].confirmed());
  EXPECT_EQ(server.hits(), 4);
  EXPECT_EQ(lookup.stats().retries, 2u);
}

}  // namespace
}  // namespace hashtriage

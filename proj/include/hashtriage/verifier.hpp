#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hashtriage/campaign.hpp"
#include "hashtriage/clusterer.hpp"

namespace hashtriage {

// Transient provider failure; the lookup layer retries these.
class ProviderUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VerdictProvider {
 public:
  virtual ~VerdictProvider() = default;
  // Throws ProviderUnavailable when the provider cannot answer right now.
  virtual ThreatSet check(const std::string& normalized_url) = 0;
  virtual std::string name() const = 0;
};

// Exact normalised-URL blocklist read from
// "<url><TAB><THREAT[,THREAT]>" lines. '#' lines are comments.
class BlocklistProvider : public VerdictProvider {
 public:
  BlocklistProvider() = default;
  // Throws std::runtime_error naming the offending line on bad input.
  static BlocklistProvider load(std::istream& in);
  static BlocklistProvider load_file(const std::filesystem::path& path);

  void add(const std::string& url, ThreatSet threats);
  std::size_t size() const { return entries_.size(); }
  std::map<std::string, ThreatSet> entries() const {
    return {entries_.begin(), entries_.end()};
  }

  ThreatSet check(const std::string& normalized_url) override;
  std::string name() const override { return "file"; }

 private:
  std::unordered_map<std::string, ThreatSet> entries_;
};

std::string format_blocklist_line(const std::string& url, ThreatSet threats);

// In-memory provider with scripted failures, for tests and dry runs.
class ScriptedProvider : public VerdictProvider {
 public:
  explicit ScriptedProvider(std::map<std::string, ThreatSet> verdicts = {})
      : verdicts_(std::move(verdicts)) {}

  void set(const std::string& url, ThreatSet threats);
  // The next `n` calls (any URL) throw ProviderUnavailable.
  void fail_next(int n);
  // The next `n` calls for `url` throw ProviderUnavailable.
  void fail_next(const std::string& url, int n);

  ThreatSet check(const std::string& normalized_url) override;
  std::string name() const override { return "mock"; }

  std::uint64_t calls() const;
  std::uint64_t calls(const std::string& url) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, ThreatSet> verdicts_;
  std::map<std::string, int> url_failures_;
  std::map<std::string, std::uint64_t> url_calls_;
  int global_failures_ = 0;
  std::uint64_t calls_ = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using EpochClock = std::function<std::int64_t()>;

Sleeper real_sleeper();
EpochClock system_epoch_clock();

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{10000};

  // Delay before attempt `attempt` (1-based; attempt 1 has no delay).
  std::chrono::milliseconds backoff_before(int attempt) const;
};

// Per-run verdict cache keyed by normalised URL, optionally mirrored to a
// JSON-lines journal so an interrupted run can resume. Unknown verdicts are
// never cached.
class VerdictCache {
 public:
  VerdictCache() = default;
  // Loads existing journal entries, then appends new ones to the same file.
  explicit VerdictCache(const std::filesystem::path& journal);

  std::optional<Verdict> get(const std::string& url) const;
  void put(const Verdict& verdict);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Verdict> entries_;
  std::ofstream journal_;
};

std::string verdict_to_json(const Verdict& v);
std::optional<Verdict> verdict_from_json(std::string_view line);

struct LookupOptions {
  RetryPolicy retry;
  unsigned max_inflight = 1;
  Sleeper sleeper;     // defaults to real sleeping
  EpochClock clock;    // stamps checked_at; defaults to the system clock
};

struct LookupStats {
  std::uint64_t provider_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
  std::uint64_t unknown = 0;
};

// Cached, retrying, order-preserving batch lookups against one provider.
class VerdictLookup {
 public:
  VerdictLookup(VerdictProvider& provider, LookupOptions options = {},
                VerdictCache* cache = nullptr);

  // One verdict per input URL, in input order. Never throws for provider
  // failures: those become kUnknown verdicts once retries are exhausted.
  std::vector<Verdict> lookup(std::span<const std::string> urls);

  LookupStats stats() const;

 private:
  Verdict query_with_retry(const std::string& url);

  VerdictProvider& provider_;
  LookupOptions options_;
  VerdictCache own_cache_;
  VerdictCache* cache_;
  mutable std::mutex stats_mu_;
  LookupStats stats_;
};

enum class VerifyStatus { kConfirmed, kNotConfirmed, kIndeterminate };

struct VerifyOutcome {
  VerifyStatus status = VerifyStatus::kNotConfirmed;
  std::optional<Campaign> campaign;
  std::uint64_t unknown_verdicts = 0;
};

// Looks up every unique URL of a flagged cluster. A campaign results iff at
// least one URL is confirmed. All-unknown verdicts give kIndeterminate.
// Throws std::invalid_argument for a cluster that is not flagged.
VerifyOutcome verify_cluster(const Cluster& cluster, VerdictLookup& lookup);

}  // namespace hashtriage

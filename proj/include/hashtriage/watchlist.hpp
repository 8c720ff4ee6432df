#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>

#include "hashtriage/campaign.hpp"
#include "hashtriage/ingest.hpp"

namespace hashtriage {

struct WatchlistEntry {
  std::string content_hash;
  std::string campaign_id;
  std::set<std::string> known_urls;  // normalised; never empty
  std::int64_t first_marked = 0;

  bool operator==(const WatchlistEntry&) const = default;
};

enum class Novelty { kKnownUrl, kNewUrl };
std::string_view to_string(Novelty n);

struct EscalationAlert {
  std::string url;  // normalised
  std::string content_hash;
  std::string campaign_id;
  Novelty novelty = Novelty::kKnownUrl;
  std::int64_t alert_time = 0;

  bool operator==(const EscalationAlert&) const = default;
};

std::string alert_to_json(const EscalationAlert& alert);

// Known-malicious content hashes. Mutated online: a new URL seen under a
// watched hash joins that entry's known URLs.
class Watchlist {
 public:
  // Throws std::invalid_argument on duplicate hashes or empty URL sets.
  void add(WatchlistEntry entry);

  // Alerts iff the record's hash is watched. Records without a hash never
  // alert.
  std::optional<EscalationAlert> check_submission(const SubmissionRecord& record);

  const WatchlistEntry* find(const std::string& content_hash) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // JSON-lines snapshot, one entry per line, ordered by hash.
  void save(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;
  static Watchlist load(std::istream& in);
  static Watchlist load_file(const std::filesystem::path& path);

  bool operator==(const Watchlist&) const = default;

 private:
  std::map<std::string, WatchlistEntry> entries_;
};

// One entry per campaign; known URLs are the campaign's unique URLs and
// first_marked is the earliest confirming verdict time.
Watchlist build_watchlist(std::span<const Campaign> campaigns);

}  // namespace hashtriage

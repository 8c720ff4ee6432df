#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hashtriage/common.hpp"
#include "hashtriage/urlkit.hpp"

namespace hashtriage {

// ---- brand impersonation --------------------------------------------------

struct BrandRule {
  std::string brand;
  std::vector<std::string> tokens;             // lowercase, non-empty
  std::set<std::string> legitimate_domains;    // registrable domains
};

// JSON array of {brand, tokens[], legitimate_domains[]}. Tokens and domains
// are lowercased. Throws std::runtime_error on malformed input.
std::vector<BrandRule> load_brand_rules(std::istream& in);
std::vector<BrandRule> load_brand_rules_file(const std::filesystem::path& path);
std::filesystem::path default_brand_rules_path();

struct ImpersonationHit {
  std::string url;
  std::string brand;
  std::vector<std::string> matched_tokens;
  bool in_subdomain = false;
  bool in_domain = false;

  bool operator==(const ImpersonationHit&) const = default;
};

// One hit per (url, brand) where a token occurs in the sub-domain or domain
// label and the registrable domain is not one of the brand's own.
std::vector<ImpersonationHit> brand_impersonation(std::span<const ParsedUrl> urls,
                                                  std::span<const BrandRule> rules);

// ---- scheme / payload scans -------------------------------------------------

struct TlsSummary {
  std::uint64_t https = 0;
  std::uint64_t http = 0;
  std::uint64_t other = 0;  // excluded from the ratio

  // https / (http + https); absent when neither scheme occurs.
  std::optional<Ratio> ratio() const;
};

TlsSummary tls_summary(std::span<const ParsedUrl> urls);

std::map<std::string, std::uint64_t> extension_census(std::span<const ParsedUrl> urls);

// ".torrent" path, a magnet link, or a tracker "/announce" segment.
bool torrent_pointer_scan(std::string_view url);

// ---- embedded commands ------------------------------------------------------

class ToolNameTable {
 public:
  // One token per line; '#' comments and blank lines ignored; tokens are
  // lowercased and de-duplicated in first-seen order.
  // Throws std::invalid_argument when no tokens remain.
  static ToolNameTable load(std::istream& in);
  static ToolNameTable load_file(const std::filesystem::path& path);
  static ToolNameTable from_tokens(const std::vector<std::string>& tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
};

std::filesystem::path default_tool_table_path();

// Case-insensitive token occurrences in the URL after one percent-decoding
// pass, ordered by position (longer token first on ties).
std::vector<std::string> embedded_command_scan(std::string_view raw_url,
                                               const ToolNameTable& table);

// ---- temporal profile -------------------------------------------------------

// 8-hour UTC chunks: [00,08), [08,16), [16,24).
inline constexpr int kChunksPerDay = 3;
int chunk_of_day(std::int64_t epoch_seconds);
std::int64_t day_index(std::int64_t epoch_seconds);  // days since 1970-01-01

struct TemporalProfile {
  // day index -> counts per chunk
  std::map<std::int64_t, std::array<std::uint64_t, kChunksPerDay>> buckets;
  // Mean daily volume per 7-day week counted from the first observed day.
  std::vector<double> weekly_means;
  // OLS slope of weekly_means over week index; absent with < 2 weeks.
  std::optional<double> weekly_slope;

  std::uint64_t total() const;
};

class TemporalAccumulator {
 public:
  void add(std::int64_t scan_time);
  TemporalAccumulator& merge(const TemporalAccumulator& other);
  TemporalProfile finish() const;

 private:
  std::map<std::int64_t, std::array<std::uint64_t, kChunksPerDay>> buckets_;
};

TemporalProfile temporal_profile(std::span<const std::int64_t> scan_times);

// Ordinary least-squares slope of y over x = 0, 1, 2, ...
std::optional<double> ols_slope(std::span<const double> y);

}  // namespace hashtriage

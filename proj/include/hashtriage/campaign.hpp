#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "hashtriage/clusterer.hpp"
#include "hashtriage/common.hpp"

namespace hashtriage {

// Bitmask of blocklist threat categories.
class ThreatSet {
 public:
  static constexpr std::uint8_t kMalware = 1;
  static constexpr std::uint8_t kSocialEngineering = 2;

  constexpr ThreatSet() = default;
  constexpr explicit ThreatSet(std::uint8_t bits) : bits_(bits & 3) {}

  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool has(std::uint8_t t) const { return (bits_ & t) != 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  ThreatSet& operator|=(ThreatSet o) {
    bits_ |= o.bits_;
    return *this;
  }
  bool operator==(const ThreatSet&) const = default;

  // "MALWARE", "SOCIAL_ENGINEERING", "MALWARE,SOCIAL_ENGINEERING" or "".
  std::string to_string() const;
  // Accepts a comma-separated list; unknown names yield nullopt.
  static std::optional<ThreatSet> parse(std::string_view text);

 private:
  std::uint8_t bits_ = 0;
};

enum class VerdictStatus { kChecked, kUnknown };

struct Verdict {
  std::string url;  // normalised
  ThreatSet threats;
  std::int64_t checked_at = 0;
  // kUnknown: the provider could not be reached; threats is empty.
  VerdictStatus status = VerdictStatus::kChecked;

  bool confirmed() const {
    return status == VerdictStatus::kChecked && !threats.empty();
  }
  bool operator==(const Verdict&) const = default;
};

enum class CampaignKind { kSingleUrl, kMultiUrl };

std::string_view to_string(CampaignKind kind);
std::optional<CampaignKind> parse_campaign_kind(std::string_view text);

struct LengthStats {
  std::size_t count = 0;
  double mean = 0;
  double stddev = 0;  // population
  double q1 = 0;
  double median = 0;
  double q3 = 0;

  bool operator==(const LengthStats&) const = default;
};

struct CampaignMetrics {
  std::uint64_t size = 0;         // U: unique URLs
  std::uint64_t submissions = 0;  // S
  Ratio source_distribution;      // U / S
  double mu = 0.5;
  double footprint = 0;           // mu*U + (1-mu)*S
  Ratio domain_diversity;
  Ratio subdomain_diversity;
  Ratio gsb_detection_rate;       // provider-confirmed URLs / U
  Ratio mean_vendor_flags;        // positives_sum / S
  LengthStats url_length;
  std::uint64_t unknown_verdicts = 0;

  bool operator==(const CampaignMetrics&) const = default;
};

// A flagged cluster with at least one provider-confirmed URL.
struct Campaign {
  std::string campaign_id;
  Cluster cluster;
  std::map<std::string, Verdict> verdicts;  // covers every unique URL
  CampaignKind kind = CampaignKind::kSingleUrl;
  std::optional<CampaignMetrics> metrics;

  bool operator==(const Campaign&) const = default;
};

// First four bytes of the content hash as "xxxx-xxxx".
std::string campaign_id_for(std::string_view content_hash);

}  // namespace hashtriage

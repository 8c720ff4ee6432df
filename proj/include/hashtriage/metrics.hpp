#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hashtriage/campaign.hpp"
#include "hashtriage/urlkit.hpp"

namespace hashtriage {

inline constexpr double kDefaultMu = 0.5;

// mu*U + (1-mu)*S. Throws std::invalid_argument unless U >= 1, S >= U and
// 0 <= mu <= 1.
double footprint(std::uint64_t unique_urls, std::uint64_t submissions, double mu);

// U / S, exact. Same preconditions as footprint.
Ratio source_distribution(std::uint64_t unique_urls, std::uint64_t submissions);

// Distinct domain labels (suffix excluded) over the number of URLs.
Ratio domain_diversity(std::span<const ParsedUrl> urls);
// Distinct sub-domain strings (empty counts as one value) over the number
// of URLs.
Ratio subdomain_diversity(std::span<const ParsedUrl> urls);

// Linear interpolation between order statistics at position (n-1)*q.
// `sorted` must be non-empty and ascending.
double quantile(std::span<const double> sorted, double q);

// Code-point lengths of the given URLs: mean, population stddev, quartiles.
// Throws std::invalid_argument on an empty set.
LengthStats url_length_stats(std::span<const std::string> urls);

struct DetectionMetrics {
  Ratio gsb_detection_rate;  // confirmed URLs / U
  Ratio mean_vendor_flags;   // positives_sum / S
  std::uint64_t unknown_verdicts = 0;
};

// Throws std::invalid_argument when some unique URL has no verdict.
DetectionMetrics detection_metrics(const Campaign& campaign);

// Full metric block for one campaign. URLs that fail to parse are counted
// with their normalised string as the domain and an empty sub-domain.
CampaignMetrics compute_campaign_metrics(const Campaign& campaign,
                                         const SuffixTable& table,
                                         double mu = kDefaultMu);

struct KindTotals {
  std::uint64_t campaigns = 0;
  std::uint64_t urls = 0;
  std::uint64_t submissions = 0;

  bool operator==(const KindTotals&) const = default;
};

// Means of per-campaign values (mean of ratios, not ratio of sums).
struct MetricMeans {
  std::uint64_t campaigns = 0;
  double size = 0;
  double submissions = 0;
  double footprint = 0;
  double source_distribution = 0;
  double domain_diversity = 0;
  double subdomain_diversity = 0;
  double gsb_detection_rate = 0;
  double mean_vendor_flags = 0;
  double url_length_mean = 0;         // mean of per-campaign mean lengths
  double url_length_mean_stddev = 0;  // population stddev of those means
};

struct CorpusSummary {
  KindTotals single_url;
  KindTotals multi_url;
  KindTotals total;
  std::uint64_t size_threshold = 100;
  MetricMeans all;
  MetricMeans small;  // size <= size_threshold
  MetricMeans large;  // size > size_threshold
};

// Commutative, mergeable accumulator behind aggregate_metrics.
class MetricsAggregator {
 public:
  explicit MetricsAggregator(std::uint64_t size_threshold = 100)
      : threshold_(size_threshold) {}

  void add(CampaignKind kind, const CampaignMetrics& m);
  MetricsAggregator& merge(const MetricsAggregator& other);
  CorpusSummary summary() const;

 private:
  struct Sums {
    std::uint64_t n = 0;
    double size = 0, submissions = 0, footprint = 0, sd = 0, dd = 0, sdd = 0,
           gsb = 0, vendor = 0, len = 0, len_sq = 0;
    void add(const CampaignMetrics& m);
    void merge(const Sums& o);
    MetricMeans means() const;
  };

  std::uint64_t threshold_;
  KindTotals single_, multi_;
  Sums all_, small_, large_;
};

// Campaigns must carry metrics. An empty input yields an all-zero summary.
CorpusSummary aggregate_metrics(std::span<const Campaign> campaigns,
                                std::uint64_t size_threshold = 100);

}  // namespace hashtriage

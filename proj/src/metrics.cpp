#include "hashtriage/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace hashtriage {

namespace {

void check_counts(std::uint64_t u, std::uint64_t s) {
  if (u < 1 || s < u) {
    throw std::invalid_argument(
        fmt::format("need 1 <= U <= S, got U={} S={}", u, s));
  }
}

}  // namespace

double footprint(std::uint64_t unique_urls, std::uint64_t submissions, double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) {
    throw std::invalid_argument(fmt::format("mu must lie in [0,1], got {}", mu));
  }
  check_counts(unique_urls, submissions);
  return mu * static_cast<double>(unique_urls) +
         (1.0 - mu) * static_cast<double>(submissions);
}

Ratio source_distribution(std::uint64_t unique_urls, std::uint64_t submissions) {
  check_counts(unique_urls, submissions);
  return {unique_urls, submissions};
}

Ratio domain_diversity(std::span<const ParsedUrl> urls) {
  std::set<std::string_view> domains;
  for (const auto& u : urls) domains.insert(u.domain);
  return {domains.size(), urls.size()};
}

Ratio subdomain_diversity(std::span<const ParsedUrl> urls) {
  std::set<std::string_view> subs;
  for (const auto& u : urls) subs.insert(u.subdomain);
  return {subs.size(), urls.size()};
}

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty set");
  const double pos = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

LengthStats url_length_stats(std::span<const std::string> urls) {
  if (urls.empty()) throw std::invalid_argument("no URLs for length stats");
  std::vector<double> lengths;
  lengths.reserve(urls.size());
  for (const auto& u : urls) lengths.push_back(static_cast<double>(utf8_length(u)));
  std::sort(lengths.begin(), lengths.end());

  LengthStats s;
  s.count = lengths.size();
  double sum = 0;
  for (double l : lengths) sum += l;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0;
  for (double l : lengths) sq += (l - s.mean) * (l - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(s.count));
  s.q1 = quantile(lengths, 0.25);
  s.median = quantile(lengths, 0.5);
  s.q3 = quantile(lengths, 0.75);
  return s;
}

DetectionMetrics detection_metrics(const Campaign& campaign) {
  DetectionMetrics d;
  std::uint64_t confirmed = 0;
  for (const auto& [url, tally] : campaign.cluster.urls) {
    const auto it = campaign.verdicts.find(url);
    if (it == campaign.verdicts.end()) {
      throw std::invalid_argument("no verdict for " + url);
    }
    if (it->second.confirmed()) ++confirmed;
    if (it->second.status == VerdictStatus::kUnknown) ++d.unknown_verdicts;
  }
  d.gsb_detection_rate = {confirmed, campaign.cluster.unique_url_count()};
  d.mean_vendor_flags = campaign.cluster.mean_positive_score();
  return d;
}

CampaignMetrics compute_campaign_metrics(const Campaign& campaign,
                                         const SuffixTable& table, double mu) {
  const Cluster& c = campaign.cluster;
  CampaignMetrics m;
  m.size = c.unique_url_count();
  m.submissions = c.submission_count;
  m.source_distribution = source_distribution(m.size, m.submissions);
  m.mu = mu;
  m.footprint = footprint(m.size, m.submissions, mu);

  std::vector<ParsedUrl> parsed;
  std::vector<std::string> urls;
  parsed.reserve(m.size);
  urls.reserve(m.size);
  for (const auto& [url, tally] : c.urls) {
    urls.push_back(url);
    auto p = parse_url(url, table);
    if (p) {
      parsed.push_back(std::move(*p));
    } else {
      ParsedUrl fallback;
      fallback.domain = url;
      parsed.push_back(std::move(fallback));
    }
  }
  m.domain_diversity = domain_diversity(parsed);
  m.subdomain_diversity = subdomain_diversity(parsed);

  const DetectionMetrics d = detection_metrics(campaign);
  m.gsb_detection_rate = d.gsb_detection_rate;
  m.mean_vendor_flags = d.mean_vendor_flags;
  m.unknown_verdicts = d.unknown_verdicts;
  m.url_length = url_length_stats(urls);
  return m;
}

void MetricsAggregator::Sums::add(const CampaignMetrics& m) {
  ++n;
  size += static_cast<double>(m.size);
  submissions += static_cast<double>(m.submissions);
  footprint += m.footprint;
  sd += m.source_distribution.value();
  dd += m.domain_diversity.value();
  sdd += m.subdomain_diversity.value();
  gsb += m.gsb_detection_rate.value();
  vendor += m.mean_vendor_flags.value();
  len += m.url_length.mean;
  len_sq += m.url_length.mean * m.url_length.mean;
}

void MetricsAggregator::Sums::merge(const Sums& o) {
  n += o.n;
  size += o.size;
  submissions += o.submissions;
  footprint += o.footprint;
  sd += o.sd;
  dd += o.dd;
  sdd += o.sdd;
  gsb += o.gsb;
  vendor += o.vendor;
  len += o.len;
  len_sq += o.len_sq;
}

MetricMeans MetricsAggregator::Sums::means() const {
  MetricMeans out;
  out.campaigns = n;
  if (n == 0) return out;
  const double k = static_cast<double>(n);
  out.size = size / k;
  out.submissions = submissions / k;
  out.footprint = footprint / k;
  out.source_distribution = sd / k;
  out.domain_diversity = dd / k;
  out.subdomain_diversity = sdd / k;
  out.gsb_detection_rate = gsb / k;
  out.mean_vendor_flags = vendor / k;
  out.url_length_mean = len / k;
  const double var = len_sq / k - out.url_length_mean * out.url_length_mean;
  out.url_length_mean_stddev = std::sqrt(std::max(var, 0.0));
  return out;
}

void MetricsAggregator::add(CampaignKind kind, const CampaignMetrics& m) {
  KindTotals& t = kind == CampaignKind::kSingleUrl ? single_ : multi_;
  ++t.campaigns;
  t.urls += m.size;
  t.submissions += m.submissions;
  all_.add(m);
  (m.size > threshold_ ? large_ : small_).add(m);
}

MetricsAggregator& MetricsAggregator::merge(const MetricsAggregator& other) {
  for (auto [mine, theirs] : {std::pair{&single_, &other.single_},
                              std::pair{&multi_, &other.multi_}}) {
    mine->campaigns += theirs->campaigns;
    mine->urls += theirs->urls;
    mine->submissions += theirs->submissions;
  }
  all_.merge(other.all_);
  small_.merge(other.small_);
  large_.merge(other.large_);
  return *this;
}

CorpusSummary MetricsAggregator::summary() const {
  CorpusSummary s;
  s.single_url = single_;
  s.multi_url = multi_;
  s.total = {single_.campaigns + multi_.campaigns, single_.urls + multi_.urls,
             single_.submissions + multi_.submissions};
  s.size_threshold = threshold_;
  s.all = all_.means();
  s.small = small_.means();
  s.large = large_.means();
  return s;
}

CorpusSummary aggregate_metrics(std::span<const Campaign> campaigns,
                                std::uint64_t size_threshold) {
  MetricsAggregator agg(size_threshold);
  for (const auto& c : campaigns) {
    if (!c.metrics) {
      throw std::invalid_argument("campaign " + c.campaign_id + " has no metrics");
    }
    agg.add(c.kind, *c.metrics);
  }
  return agg.summary();
}

}  // namespace hashtriage

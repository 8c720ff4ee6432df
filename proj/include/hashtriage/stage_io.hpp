#pragma once

// Line formats shared by the CLI stages. Every export is JSON lines behind a
// provenance header; readers skip that header.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hashtriage/campaign.hpp"
#include "hashtriage/clusterer.hpp"
#include "hashtriage/insights.hpp"
#include "hashtriage/metrics.hpp"

namespace hashtriage {

class StageFormatError : public std::runtime_error {
 public:
  StageFormatError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Calls `fn` for each non-blank, non-provenance line with its 1-based number.
void for_each_data_line(std::istream& in,
                        const std::function<void(std::string_view, std::size_t)>& fn);

// {"num":N,"den":D,"percent":P} with P at 2 d.p.
std::string ratio_percent_json(const Ratio& r);
// {"num":N,"den":D,"value":V} with V at `decimals` d.p.
std::string ratio_value_json(const Ratio& r, int decimals);

// ---- clusters ---------------------------------------------------------------

std::string cluster_to_json(const Cluster& c);
Cluster cluster_from_json(std::string_view line, std::size_t line_no = 0);
void write_clusters(std::ostream& out, std::span<const Cluster> clusters);
ClusterTable read_clusters(std::istream& in);

// ---- campaigns ----------------------------------------------------------------

std::string campaign_to_json(const Campaign& c);
Campaign campaign_from_json(std::string_view line, std::size_t line_no = 0);
std::vector<Campaign> read_campaigns(std::istream& in);

// ---- metrics ------------------------------------------------------------------

// Requires c.metrics.
std::string metrics_to_json(const Campaign& c);

struct MetricsLine {
  std::string campaign_id;
  std::string content_hash;
  CampaignKind kind = CampaignKind::kSingleUrl;
  CampaignMetrics metrics;
};
MetricsLine metrics_from_json(std::string_view line, std::size_t line_no = 0);

std::string summary_to_json(const CorpusSummary& s);

// ---- insights -----------------------------------------------------------------

struct CampaignInsights {
  std::string campaign_id;
  std::string content_hash;
  TlsSummary tls;
  std::uint64_t torrent_pointers = 0;
  std::uint64_t urls = 0;
  std::map<std::string, std::uint64_t> extensions;
  std::vector<ImpersonationHit> brand_hits;
  // url -> matched tool tokens, only URLs with at least one match
  std::map<std::string, std::vector<std::string>> command_matches;
};

CampaignInsights compute_insights(const Campaign& c, const SuffixTable& table,
                                  std::span<const BrandRule> rules,
                                  const ToolNameTable& tools);
std::string insights_to_json(const CampaignInsights& i);

// ---- report CSVs ----------------------------------------------------------------

void write_histogram_csv(std::ostream& out,
                         const std::map<std::uint64_t, std::uint64_t>& histogram);
// length in code points -> number of campaign URLs with that length
void write_length_csv(std::ostream& out,
                      const std::map<std::uint64_t, std::uint64_t>& lengths);
void write_temporal_csv(std::ostream& out, const TemporalProfile& profile);

}  // namespace hashtriage

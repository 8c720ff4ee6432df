#include "hashtriage/stage_io.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <sstream>

#include "hashtriage/synth.hpp"
#include "test_util.hpp"

namespace hashtriage {
namespace {

using nlohmann::json;

const SuffixTable& psl() {
  static const SuffixTable t = SuffixTable::load_file(default_suffix_list_path());
  return t;
}

Cluster random_cluster(testutil::Gen& g) {
  Cluster c;
  c.content_hash = g.hex64();
  const auto n = g.range(1, 12);
  for (int i = 0; i < n; ++i) {
    c.add("http://" + g.word(1, 4) + ".com/" + (g.coin(20) ? "q\"\\\t" : g.word(0, 6)),
          g.coin(30) ? static_cast<std::uint32_t>(g.range(1, 70)) : 0);
  }
  return c;
}

Campaign campaign_for(const Cluster& c, testutil::Gen& g) {
  Campaign out;
  out.cluster = c;
  out.campaign_id = campaign_id_for(c.content_hash);
  out.kind = c.urls.size() == 1 ? CampaignKind::kSingleUrl : CampaignKind::kMultiUrl;
  bool any = false;
  for (const auto& [url, t] : c.urls) {
    Verdict v{url, ThreatSet{static_cast<std::uint8_t>(g.range(0, 3))}, g.range(0, 2000000000),
              g.coin(10) ? VerdictStatus::kUnknown : VerdictStatus::kChecked};
    if (v.status == VerdictStatus::kUnknown) v.threats = ThreatSet{};
    any = any || v.confirmed();
    out.verdicts[url] = v;
  }
  if (!any) {
    auto& first = out.verdicts.begin()->second;
    first = Verdict{first.url, ThreatSet{1}, 1, VerdictStatus::kChecked};
  }
  return out;
}

TEST(StageIoTest, DataLinesSkipHeaderAndBlanks) {
  std::istringstream in(provenance_line("cluster", "x") + "\n\n{\"a\":1}\n   \n{\"b\":2}\n");
  std::vector<std::pair<std::string, std::size_t>> seen;
  for_each_data_line(in, [&](std::string_view l, std::size_t n) { seen.emplace_back(l, n); });
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0], (std::pair<std::string, std::size_t>{"{\"a\":1}", 3}));
  EXPECT_EQ(seen[1].second, 5u);
}

TEST(StageIoTest, RatioJson) {
  const auto j = json::parse(ratio_percent_json(Ratio{1589, 9589}));
  EXPECT_EQ(j["num"], 1589);
  EXPECT_EQ(j["den"], 9589);
  EXPECT_DOUBLE_EQ(j["percent"].get<double>(), 16.57);
  EXPECT_TRUE(json::parse(ratio_percent_json(Ratio{0, 0}))["percent"].is_null());
  EXPECT_DOUBLE_EQ(json::parse(ratio_value_json(Ratio{1, 12}, 5))["value"].get<double>(), 0.08333);
}

TEST(StageIoTest, ClusterExportFields) {
  Cluster c;
  c.content_hash = std::string(64, 'a');
  for (int i = 0; i < 12; ++i) c.add(i < 7 ? "http://a/" : "http://b/", i == 0 ? 1 : 0);
  const auto j = json::parse(cluster_to_json(c));
  EXPECT_EQ(j["submission_count"], 12);
  EXPECT_EQ(j["unique_url_count"], 2);
  EXPECT_EQ(j["positives_sum"], 1);
  EXPECT_DOUBLE_EQ(j["mean_positive_score"].get<double>(), 0.083333);
  EXPECT_NE(cluster_to_json(c).find("\"mean_positive_score\":0.083333"), std::string::npos);
  EXPECT_EQ(j["class"], "flagged");
  EXPECT_EQ(j["urls"].size(), 2u);
}

TEST(StageIoTest, BadLinesReportLineNumbers) {
  std::istringstream in(provenance_line("cluster", "") + "\n" +
                        cluster_to_json(planted_cluster(std::string(64, 'b'), 1, 2, 0)) +
                        "\n{\"content_hash\":\"x\"}\n");
  try {
    read_clusters(in);
    FAIL();
  } catch (const StageFormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(cluster_from_json("not json", 9), StageFormatError);
  EXPECT_THROW(campaign_from_json("{}", 1), StageFormatError);
}

TEST(StageIoTest, MetricsExportRendersLargestCampaign) {
  Campaign c;
  c.cluster = planted_cluster(std::string(64, 'c'), 1391080, 8584120, 5);
  c.campaign_id = campaign_id_for(c.cluster.content_hash);
  c.kind = CampaignKind::kMultiUrl;
  CampaignMetrics m;
  m.size = 1391080;
  m.submissions = 8584120;
  m.source_distribution = {1391080, 8584120};
  m.footprint = 4987600;
  m.domain_diversity = {1, 1391080};
  m.subdomain_diversity = {1, 1391080};
  m.gsb_detection_rate = {1, 1391080};
  m.mean_vendor_flags = {5, 8584120};
  c.metrics = m;
  const std::string line = metrics_to_json(c);
  EXPECT_NE(line.find("\"footprint\":4987600"), std::string::npos) << line;
  EXPECT_EQ(json::parse(line)["source_distribution"]["percent"].dump(), "16.21");
  const auto back = metrics_from_json(line);
  EXPECT_EQ(back.metrics, m);
  EXPECT_EQ(back.kind, CampaignKind::kMultiUrl);
}

TEST(StageIoTest, SummaryAndCsvs) {
  const auto s = json::parse(summary_to_json(CorpusSummary{}));
  EXPECT_EQ(s["totals"]["total"]["campaigns"], 0);
  EXPECT_TRUE(s.contains("means"));

  std::ostringstream hist;
  write_histogram_csv(hist, {{1, 5}, {3, 2}});
  EXPECT_EQ(hist.str(), "submission_count,clusters\n1,5\n3,2\n");
  std::ostringstream len;
  write_length_csv(len, {{40, 1}});
  EXPECT_EQ(len.str(), "url_length,urls\n40,1\n");

  const std::vector<std::int64_t> times = {1577836800, 1577836800 + 8 * 3600, 1577836800 + 8 * 3600};
  std::ostringstream temporal;
  write_temporal_csv(temporal, temporal_profile(times));
  EXPECT_EQ(temporal.str(),
            "date,chunk,submissions\n2020-01-01,00-08,1\n2020-01-01,08-16,2\n2020-01-01,16-24,0\n");
}

TEST(StageIoTest, InsightsJsonForTlsFixture) {
  const auto records = tls_campaign_fixture();
  auto table = build_clusters(records);
  ASSERT_EQ(table.size(), 1u);
  Campaign c;
  c.cluster = table.front();
  c.campaign_id = campaign_id_for(c.cluster.content_hash);
  for (const auto& [u, t] : c.cluster.urls) c.verdicts[u] = Verdict{u, ThreatSet{1}, 0};
  const auto rules = load_brand_rules_file(default_brand_rules_path());
  const auto tools = ToolNameTable::load_file(default_tool_table_path());
  const auto j = json::parse(insights_to_json(compute_insights(c, psl(), rules, tools)));
  EXPECT_EQ(j["urls"], 1589);
  EXPECT_EQ(j["tls"]["https"], 1572);
  EXPECT_EQ(j["tls"]["ratio_percent"].dump(), "98.93");
  EXPECT_EQ(j["torrent_pointers"]["num"], 46);
  EXPECT_EQ(j["torrent_pointers"]["percent"].dump(), "2.89");
  EXPECT_EQ(j["extensions"]["exe"], 19);
  EXPECT_EQ(j["extensions"]["rar"], 3);
}

// ---- properties ---------------------------------------------------------------

TEST(StageIoPropertyTest, ClusterRoundTrip) {
  testutil::Gen g(111);
  std::vector<Cluster> clusters;
  for (int i = 0; i < 300; ++i) clusters.push_back(random_cluster(g));
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.content_hash < b.content_hash; });
  std::stringstream ss;
  write_clusters(ss, clusters);
  EXPECT_EQ(read_clusters(ss), clusters);
}

TEST(StageIoPropertyTest, CampaignRoundTrip) {
  testutil::Gen g(112);
  std::ostringstream out;
  std::vector<Campaign> campaigns;
  for (int i = 0; i < 200; ++i) {
    auto c = campaign_for(random_cluster(g), g);
    out << campaign_to_json(c) << '\n';
    campaigns.push_back(std::move(c));
  }
  std::istringstream in(provenance_line("verify", "") + "\n" + out.str());
  EXPECT_EQ(read_campaigns(in), campaigns);
}

TEST(StageIoPropertyTest, MetricsRoundTrip) {
  testutil::Gen g(113);
  for (int i = 0; i < 200; ++i) {
    auto c = campaign_for(random_cluster(g), g);
    c.metrics = compute_campaign_metrics(c, psl(), static_cast<double>(g.range(0, 100)) / 100);
    const auto back = metrics_from_json(metrics_to_json(c));
    ASSERT_EQ(back.metrics, *c.metrics) << metrics_to_json(c);
    ASSERT_EQ(back.campaign_id, c.campaign_id);
  }
}

}  // namespace
}  // namespace hashtriage

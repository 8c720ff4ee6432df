#include "hashtriage/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hashtriage/synth.hpp"
#include "hashtriage/verifier.hpp"
#include "test_util.hpp"

namespace hashtriage {
namespace {

const SuffixTable& psl() {
  static const SuffixTable t = SuffixTable::load_file(default_suffix_list_path());
  return t;
}

std::vector<ParsedUrl> parse_all(const std::vector<std::string>& urls) {
  std::vector<ParsedUrl> out;
  for (const auto& u : urls) {
    auto p = parse_url(u, psl());
    EXPECT_TRUE(p) << u;
    if (p) out.push_back(*p);
  }
  return out;
}

// Campaign from records; `confirmed` URLs get MALWARE, the rest empty.
Campaign campaign_from(const std::vector<SubmissionRecord>& records,
                       const std::set<std::string>& confirmed) {
  auto table = build_clusters(records);
  EXPECT_EQ(table.size(), 1u);
  Campaign c;
  c.cluster = std::move(table.front());
  c.campaign_id = campaign_id_for(c.cluster.content_hash);
  for (const auto& [url, t] : c.cluster.urls) {
    c.verdicts[url] = Verdict{url, confirmed.contains(url) ? ThreatSet{ThreatSet::kMalware} : ThreatSet{},
                              0, VerdictStatus::kChecked};
  }
  c.kind = c.cluster.urls.size() == 1 ? CampaignKind::kSingleUrl : CampaignKind::kMultiUrl;
  return c;
}

std::vector<std::string> unique_urls(const std::vector<SubmissionRecord>& records) {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.url);
  return {s.begin(), s.end()};
}

TEST(FootprintTest, Examples) {
  EXPECT_DOUBLE_EQ(footprint(1391080, 8584120, 0.5), 4987600.0);
  EXPECT_DOUBLE_EQ(footprint(146, 174, 0.5), 160.0);
  EXPECT_DOUBLE_EQ(footprint(77, 77, 0.13), 77.0);
  EXPECT_DOUBLE_EQ(footprint(10, 20, 1.0), 10.0);
  EXPECT_DOUBLE_EQ(footprint(10, 20, 0.0), 20.0);
}

TEST(FootprintTest, Preconditions) {
  EXPECT_THROW(footprint(1, 2, -0.01), std::invalid_argument);
  EXPECT_THROW(footprint(1, 2, 1.01), std::invalid_argument);
  EXPECT_THROW(footprint(0, 2, 0.5), std::invalid_argument);
  EXPECT_THROW(footprint(3, 2, 0.5), std::invalid_argument);
  EXPECT_THROW(source_distribution(3, 2), std::invalid_argument);
}

TEST(SourceDistributionTest, Examples) {
  EXPECT_EQ(source_distribution(1391080, 8584120).render_percent(2), "16.21");
  EXPECT_EQ(source_distribution(1589, 9589).render_percent(2), "16.57");
  EXPECT_EQ(source_distribution(5, 5).render_percent(2), "100.00");
}

TEST(DiversityTest, AppleCampaignCounts) {
  const auto records = apple_campaign_fixture();
  const auto urls = parse_all(unique_urls(records));
  ASSERT_EQ(urls.size(), 4081u);
  EXPECT_EQ(domain_diversity(urls), (Ratio{12, 4081}));
  EXPECT_EQ(domain_diversity(urls).render_percent(2), "0.29");
  EXPECT_EQ(subdomain_diversity(urls), (Ratio{9, 4081}));
  EXPECT_EQ(subdomain_diversity(urls).render_percent(2), "0.22");
}

TEST(DiversityTest, TrivialCases) {
  const auto same = parse_all({"http://a.x.com/1", "http://b.x.com/2", "http://x.com/3"});
  EXPECT_EQ(domain_diversity(same), (Ratio{1, 3}));
  EXPECT_EQ(subdomain_diversity(same), (Ratio{3, 3}));
  const auto distinct = parse_all({"http://a.com/", "http://b.org/", "http://c.net/"});
  EXPECT_EQ(domain_diversity(distinct), (Ratio{3, 3}));
  EXPECT_EQ(subdomain_diversity(distinct), (Ratio{1, 3}));
  // Suffix excluded: same label under two suffixes is one domain.
  EXPECT_EQ(domain_diversity(parse_all({"http://a.com/", "http://a.org/"})), (Ratio{1, 2}));
}

// R-7 by hand: h = (n-1)q, x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double r7_oracle(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

TEST(UrlLengthTest, Examples) {
  const std::vector<std::string> two = {"ab", "abcd"};
  EXPECT_DOUBLE_EQ(url_length_stats(two).mean, 3.0);
  EXPECT_DOUBLE_EQ(url_length_stats(two).stddev, 1.0);

  const std::vector<std::string> one = {std::string(40, 'x')};
  const auto s = url_length_stats(one);
  EXPECT_EQ(s.count, 1u);
  EXPECT_DOUBLE_EQ(s.mean, 40);
  EXPECT_DOUBLE_EQ(s.stddev, 0);
  EXPECT_DOUBLE_EQ(s.q1, 40);
  EXPECT_DOUBLE_EQ(s.median, 40);
  EXPECT_DOUBLE_EQ(s.q3, 40);

  // Lengths {38, 50, 73, 90}: positions 0.75, 1.5, 2.25.
  const std::vector<std::string> four = {std::string(73, 'c'), std::string(38, 'a'),
                                         std::string(90, 'd'), std::string(50, 'b')};
  const auto f = url_length_stats(four);
  EXPECT_DOUBLE_EQ(f.q1, 47.0);
  EXPECT_DOUBLE_EQ(f.median, 61.5);
  EXPECT_DOUBLE_EQ(f.q3, 77.25);
  EXPECT_DOUBLE_EQ(f.q1, r7_oracle({38, 50, 73, 90}, 0.25));

  // Lengths count code points, not bytes.
  const std::vector<std::string> utf = {"http://caf\xc3\xa9.fr/"};
  EXPECT_DOUBLE_EQ(url_length_stats(utf).mean, 15.0);
  EXPECT_THROW(url_length_stats(std::span<const std::string>{}), std::invalid_argument);
}

TEST(DetectionMetricsTest, AppleAndTlsCampaigns) {
  const auto apple_records = apple_campaign_fixture();
  const auto blocked = apple_campaign_blocklisted();
  const auto apple = campaign_from(apple_records, {blocked.begin(), blocked.end()});
  const auto d = detection_metrics(apple);
  EXPECT_EQ(d.gsb_detection_rate, (Ratio{2, 4081}));
  EXPECT_EQ(d.gsb_detection_rate.render_percent(3), "0.049");
  EXPECT_EQ(apple.cluster.submission_count, 104311u);

  const auto tls_records = tls_campaign_fixture();
  const auto tls_urls = unique_urls(tls_records);
  const auto tls = campaign_from(tls_records, {tls_urls[3], tls_urls[900]});
  EXPECT_EQ(detection_metrics(tls).gsb_detection_rate.render_percent(3), "0.126");
  EXPECT_EQ(tls.cluster.submission_count, 9589u);
}

TEST(DetectionMetricsTest, UnknownsCountAsUndetectedAndIncompleteThrows) {
  Campaign c;
  c.cluster.content_hash = std::string(64, 'a');
  c.cluster.add("http://a/", 3);
  c.cluster.add("http://b/", 0);
  c.verdicts["http://a/"] = Verdict{"http://a/", ThreatSet{1}, 0, VerdictStatus::kChecked};
  EXPECT_THROW(detection_metrics(c), std::invalid_argument);
  c.verdicts["http://b/"] = Verdict{"http://b/", ThreatSet{}, 0, VerdictStatus::kUnknown};
  const auto d = detection_metrics(c);
  EXPECT_EQ(d.gsb_detection_rate, (Ratio{1, 2}));
  EXPECT_EQ(d.mean_vendor_flags, (Ratio{3, 2}));
  EXPECT_EQ(d.unknown_verdicts, 1u);
}

TEST(CampaignMetricsTest, TlsCampaignBlock) {
  const auto records = tls_campaign_fixture();
  const auto urls = unique_urls(records);
  const auto c = campaign_from(records, {urls[0], urls[1]});
  const auto m = compute_campaign_metrics(c, psl());
  EXPECT_EQ(m.size, 1589u);
  EXPECT_EQ(m.submissions, 9589u);
  EXPECT_EQ(m.source_distribution.render_percent(2), "16.57");
  EXPECT_DOUBLE_EQ(m.footprint, 5589.0);
  EXPECT_EQ(m.url_length.count, 1589u);
  EXPECT_LE(m.url_length.q1, m.url_length.median);
  EXPECT_LE(m.url_length.median, m.url_length.q3);
}

Campaign campaign_with(std::uint64_t u, std::uint64_t s, int seed) {
  Campaign c;
  c.cluster = planted_cluster(testutil::Gen(static_cast<std::uint64_t>(seed)).hex64(), u, s, 1);
  c.campaign_id = campaign_id_for(c.cluster.content_hash);
  for (const auto& [url, t] : c.cluster.urls) {
    c.verdicts[url] = Verdict{url, ThreatSet{1}, 0, VerdictStatus::kChecked};
  }
  c.kind = u == 1 ? CampaignKind::kSingleUrl : CampaignKind::kMultiUrl;
  c.metrics = compute_campaign_metrics(c, psl());
  return c;
}

TEST(AggregateTest, MeanOfRatios) {
  const std::vector<Campaign> two = {campaign_with(4, 4, 1), campaign_with(2, 4, 2)};
  const auto s = aggregate_metrics(two);
  EXPECT_DOUBLE_EQ(s.all.source_distribution, 0.75);
  EXPECT_EQ(s.total.campaigns, 2u);
  EXPECT_EQ(s.total.urls, 6u);
  EXPECT_EQ(s.total.submissions, 8u);
}

TEST(AggregateTest, SingleCampaignEqualsItself) {
  const std::vector<Campaign> one = {campaign_with(146, 174, 3)};
  const auto s = aggregate_metrics(one);
  EXPECT_DOUBLE_EQ(s.all.footprint, 160.0);
  EXPECT_DOUBLE_EQ(s.all.size, 146.0);
  EXPECT_DOUBLE_EQ(s.all.source_distribution, 146.0 / 174.0);
  EXPECT_EQ(s.large.campaigns, 1u);
  EXPECT_EQ(s.small.campaigns, 0u);
  EXPECT_EQ(s.multi_url.campaigns, 1u);
  EXPECT_DOUBLE_EQ(s.all.url_length_mean_stddev, 0.0);
}

TEST(AggregateTest, KindSplitAndEmpty) {
  const std::vector<Campaign> v = {campaign_with(1, 3, 4), campaign_with(1, 2, 5),
                                   campaign_with(3, 9, 6)};
  const auto s = aggregate_metrics(v);
  EXPECT_EQ(s.single_url, (KindTotals{2, 2, 5}));
  EXPECT_EQ(s.multi_url, (KindTotals{1, 3, 9}));
  EXPECT_EQ(s.total, (KindTotals{3, 5, 14}));
  const auto empty = aggregate_metrics(std::span<const Campaign>{});
  EXPECT_EQ(empty.total.campaigns, 0u);
  EXPECT_DOUBLE_EQ(empty.all.footprint, 0.0);
}

// ---- properties ---------------------------------------------------------------

TEST(MetricsPropertyTest, FootprintBoundsAndMonotonicity) {
  testutil::Gen g(71);
  for (int i = 0; i < 5000; ++i) {
    const auto u = static_cast<std::uint64_t>(g.range(1, 1'000'000));
    const auto s = u + static_cast<std::uint64_t>(g.range(0, 1'000'000));
    const double mu = static_cast<double>(g.range(0, 1000)) / 1000.0;
    const double fp = footprint(u, s, mu);
    ASSERT_GE(fp, static_cast<double>(u) - 1e-6);
    ASSERT_LE(fp, static_cast<double>(s) + 1e-6);
    ASSERT_LE(fp, footprint(u, s + 1, mu) + 1e-9);
    if (s > u && mu < 1.0) {
      ASSERT_GE(fp, footprint(u, s, std::min(1.0, mu + 0.001)) - 1e-9);
    }
    ASSERT_DOUBLE_EQ(footprint(u, s, 0.5), (static_cast<double>(u) + static_cast<double>(s)) / 2);
    const Ratio sd = source_distribution(u, s);
    ASSERT_EQ(static_cast<unsigned __int128>(sd.num) * s, static_cast<unsigned __int128>(u) * sd.den);
  }
}

TEST(MetricsPropertyTest, QuantilesMatchOracleAndOrder) {
  testutil::Gen g(72);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> v(static_cast<std::size_t>(g.range(1, 40)));
    for (auto& x : v) x = static_cast<double>(g.range(5, 300));
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0, 0.1}) {
      ASSERT_NEAR(quantile(sorted, q), r7_oracle(v, q), 1e-9);
    }
    std::vector<std::string> urls;
    for (double x : v) urls.emplace_back(static_cast<std::size_t>(x), 'u');
    const auto s = url_length_stats(urls);
    ASSERT_LE(s.q1, s.median);
    ASSERT_LE(s.median, s.q3);
    ASSERT_GE(s.stddev, 0.0);
  }
}

TEST(MetricsPropertyTest, DiversityBounds) {
  testutil::Gen g(73);
  const std::vector<std::string> labels = {"a", "b", "c", "d", "e"};
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> raw;
    const auto n = g.range(1, 30);
    for (int k = 0; k < n; ++k) {
      raw.push_back("http://" + (g.coin() ? g.pick(labels) + "." : std::string()) + g.pick(labels) +
                    ".com/" + std::to_string(k));
    }
    const auto urls = parse_all(raw);
    const Ratio dd = domain_diversity(urls);
    ASSERT_EQ(dd.den, urls.size());
    ASSERT_GE(dd.num, 1u);
    ASSERT_LE(dd.num, dd.den);
    std::set<std::string> doms;
    for (const auto& u : urls) doms.insert(u.domain);
    ASSERT_EQ(dd.num == dd.den, doms.size() == urls.size());
  }
}

TEST(MetricsPropertyTest, DuplicatingCampaignsLeavesMeansUnchanged) {
  testutil::Gen g(74);
  for (int round = 0; round < 10; ++round) {
    std::vector<Campaign> v;
    const auto n = g.range(1, 6);
    for (int i = 0; i < n; ++i) {
      const auto u = static_cast<std::uint64_t>(g.range(1, 150));
      v.push_back(campaign_with(u, u + static_cast<std::uint64_t>(g.range(0, 100)),
                                static_cast<int>(g.next() % 100000)));
    }
    std::vector<Campaign> doubled = v;
    doubled.insert(doubled.end(), v.begin(), v.end());
    const auto a = aggregate_metrics(v);
    const auto b = aggregate_metrics(doubled);
    EXPECT_NEAR(a.all.footprint, b.all.footprint, 1e-9);
    EXPECT_NEAR(a.all.source_distribution, b.all.source_distribution, 1e-12);
    EXPECT_NEAR(a.all.domain_diversity, b.all.domain_diversity, 1e-12);
    EXPECT_NEAR(a.all.url_length_mean, b.all.url_length_mean, 1e-9);
    EXPECT_NEAR(a.all.url_length_mean_stddev, b.all.url_length_mean_stddev, 1e-9);
    EXPECT_EQ(b.total.campaigns, 2 * a.total.campaigns);

    // Merge is order-free.
    MetricsAggregator left, right, whole;
    for (std::size_t i = 0; i < v.size(); ++i) {
      (i % 2 ? left : right).add(v[i].kind, *v[i].metrics);
      whole.add(v[i].kind, *v[i].metrics);
    }
    const auto merged = right.merge(left).summary();
    EXPECT_NEAR(merged.all.footprint, whole.summary().all.footprint, 1e-9);
    EXPECT_EQ(merged.total, whole.summary().total);
  }
}

}  // namespace
}  // namespace hashtriage

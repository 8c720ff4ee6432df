#include "hashtriage/cli.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <set>
#include <sstream>

#include "hashtriage/stage_io.hpp"
#include "hashtriage/synth.hpp"
#include "test_util.hpp"

namespace hashtriage {
namespace {

using nlohmann::json;

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  RunResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  for (auto& l : testutil::lines_of(text)) {
    if (!l.empty() && !is_provenance_line(l)) out.push_back(std::move(l));
  }
  return out;
}

std::string p(const std::filesystem::path& path) { return path.string(); }

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(run({"synth"}).code, cli::kExitUsage);  // --out is required
  EXPECT_EQ(run({"metrics", "-", "--mu", "2"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"cluster", "-", "--memory-budget", "lots"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"verify", "-", "--provider", "file"}).code, cli::kExitUsage);
}

TEST(CliTest, MissingInputFails) {
  testutil::TempDir dir;
  const auto r = run({"cluster", p(dir / "nope.jsonl")});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos) << r.err;
}

TEST(CliTest, ParseByteSize) {
  std::size_t b = 0;
  EXPECT_TRUE(cli::parse_byte_size("4096", b));
  EXPECT_EQ(b, 4096u);
  EXPECT_TRUE(cli::parse_byte_size("64K", b));
  EXPECT_EQ(b, 65536u);
  EXPECT_TRUE(cli::parse_byte_size("256m", b));
  EXPECT_EQ(b, std::size_t{256} << 20);
  EXPECT_TRUE(cli::parse_byte_size("2G", b));
  EXPECT_EQ(b, std::size_t{2} << 30);
  for (const char* bad : {"", "K", "0", "-1", "12X", "1.5M", "99999999999999999999"}) {
    EXPECT_FALSE(cli::parse_byte_size(bad, b)) << bad;
  }
}

TEST(CliTest, IngestCountsAndSkips) {
  testutil::TempDir dir;
  testutil::write_file(
      dir / "in.jsonl",
      "{\"url\":\"http://A.com/x\",\"content_hash\":\"" + std::string(64, 'a') +
          "\",\"positives\":1,\"total\":70,\"scan_time\":1}\n"
          "not json\n"
          "{\"url\":\"http://b.com/\",\"positives\":0,\"total\":70,\"scan_time\":2}\n");
  const auto r = run({"ingest", p(dir / "in.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  const auto stats = json::parse(testutil::lines_of(r.err).back());
  EXPECT_EQ(stats["parsed_ok"], 2);
  EXPECT_EQ(stats["malformed"], 1);
  EXPECT_EQ(stats["missing_hash"], 1);
}

TEST(CliTest, PipelineRecoversManifestCampaigns) {
  testutil::TempDir dir;
  ASSERT_EQ(run({"synth", "--seed", "9", "--campaigns", "40", "--singletons", "60", "--records",
                 "3000", "--missing-hash", "0.05", "--out", p(dir / "corpus")})
                .code,
            0);
  const auto corpus = dir / "corpus";
  ASSERT_EQ(run({"cluster", p(corpus / "records.jsonl"), "--out", p(dir / "clusters.jsonl")}).code, 0);
  const auto v = run({"verify", p(dir / "clusters.jsonl"), "--blocklist",
                      p(corpus / "blocklist.tsv"), "--as-of", "2020-01-01T00:00:00Z", "--out",
                      p(dir / "campaigns.jsonl")});
  ASSERT_EQ(v.code, 0) << v.err;
  const auto m = run({"metrics", p(dir / "campaigns.jsonl"), "--summary", p(dir / "summary.json")});
  ASSERT_EQ(m.code, 0) << m.err;

  std::ifstream min(corpus / "manifest.jsonl");
  const Manifest manifest = read_manifest(min);
  std::set<std::string> expected;
  for (const auto& c : manifest.clusters) {
    if (c.campaign) expected.insert(c.content_hash);
  }
  ASSERT_FALSE(expected.empty());

  std::set<std::string> got;
  for (const auto& line : data_lines(testutil::read_file(dir / "campaigns.jsonl"))) {
    const auto j = json::parse(line);
    got.insert(j["content_hash"].get<std::string>());
    EXPECT_EQ(j["campaign_id"], campaign_id_for(j["content_hash"].get<std::string>()));
  }
  EXPECT_EQ(got, expected);
  EXPECT_EQ(data_lines(m.out).size(), expected.size());
  const auto summary = json::parse(data_lines(testutil::read_file(dir / "summary.json")).at(0));
  EXPECT_EQ(summary["totals"]["total"]["campaigns"], expected.size());

  // The cluster export agrees with the library on the same records.
  std::vector<SubmissionRecord> records;
  ingest_file(corpus / "records.jsonl", InputFormat::kJsonLines,
              [&](SubmissionRecord&& r) { records.push_back(std::move(r)); }, nullptr);
  std::ostringstream lib;
  write_clusters(lib, build_clusters(records));
  EXPECT_EQ(data_lines(testutil::read_file(dir / "clusters.jsonl")), data_lines(lib.str()));
  EXPECT_EQ(data_lines(lib.str()).size(), manifest.clusters.size());
}

TEST(CliTest, ClusterModesAgree) {
  testutil::TempDir dir;
  ASSERT_EQ(run({"synth", "--seed", "4", "--records", "5000", "--out", p(dir.path())}).code, 0);
  const std::string in = p(dir / "records.jsonl");
  const auto plain = run({"cluster", in});
  const auto threaded = run({"--threads", "4", "cluster", in});
  const auto external = run({"cluster", in, "--external", "--memory-budget", "64K", "--tmp-dir",
                             p(dir.path())});
  ASSERT_EQ(plain.code, 0);
  ASSERT_EQ(threaded.code, 0);
  ASSERT_EQ(external.code, 0) << external.err;
  EXPECT_EQ(threaded.out, plain.out);
  EXPECT_EQ(external.out, plain.out);
  EXPECT_NE(external.err.find("\"runs\":"), std::string::npos);
}

TEST(CliTest, LargestFixtureFootprint) {
  testutil::TempDir dir;
  ASSERT_EQ(run({"synth", "--fixture", "largest", "--out", p(dir.path())}).code, 0);
  const auto r = run({"metrics", p(dir / "campaigns.jsonl"), "--mu", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_NE(lines[0].find("\"footprint\":4987600"), std::string::npos) << lines[0];
  EXPECT_EQ(json::parse(lines[0])["source_distribution"]["percent"].dump(), "16.21");
}

TEST(CliTest, WatchReplayAlertsOnNewUrl) {
  testutil::TempDir dir;
  ASSERT_EQ(run({"synth", "--fixture", "replay", "--out", p(dir.path())}).code, 0);
  ASSERT_EQ(run({"cluster", p(dir / "records.jsonl"), "--out", p(dir / "clusters.jsonl")}).code, 0);
  ASSERT_EQ(run({"verify", p(dir / "clusters.jsonl"), "--blocklist", p(dir / "blocklist.tsv"),
                 "--as-of", "0", "--out", p(dir / "campaigns.jsonl")})
                .code,
            0);
  const auto w = run({"watch", p(dir / "replay.jsonl"), "--campaigns", p(dir / "campaigns.jsonl"),
                      "--save", p(dir / "watchlist.jsonl")});
  ASSERT_EQ(w.code, 0) << w.err;
  const auto alerts = data_lines(w.out);
  const ReplayFixture f = replay_fixture();
  ASSERT_EQ(alerts.size(), f.after.size());
  const auto first = json::parse(alerts[0]);
  EXPECT_EQ(first["novelty"], "new-url");
  EXPECT_EQ(first["url"], f.second_url);
  for (std::size_t i = 1; i < alerts.size(); ++i) {
    EXPECT_EQ(json::parse(alerts[i])["novelty"], "known-url") << i;
  }

  // The saved watchlist already knows the second URL.
  const auto again = run({"watch", p(dir / "replay.jsonl"), "--watchlist", p(dir / "watchlist.jsonl")});
  ASSERT_EQ(again.code, 0);
  for (const auto& a : data_lines(again.out)) EXPECT_EQ(json::parse(a)["novelty"], "known-url");

  EXPECT_EQ(run({"watch", p(dir / "replay.jsonl")}).code, cli::kExitUsage);
}

TEST(CliTest, ReportOverNoCampaigns) {
  testutil::TempDir dir;
  testutil::write_file(dir / "empty.jsonl", provenance_line("verify", "") + "\n");
  const auto r = run({"report", "--campaigns", p(dir / "empty.jsonl"), "--out", p(dir / "r")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"insights.jsonl", "cluster_sizes.csv", "url_lengths.csv", "temporal.csv",
                        "summary.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "r" / f)) << f;
  }
  EXPECT_TRUE(data_lines(testutil::read_file(dir / "r" / "insights.jsonl")).empty());
  const auto s = json::parse(data_lines(testutil::read_file(dir / "r" / "summary.json")).at(0));
  EXPECT_EQ(s.dump().find("\"campaigns\":1"), std::string::npos);
}

TEST(CliTest, ReportOnTlsFixture) {
  testutil::TempDir dir;
  ASSERT_EQ(run({"synth", "--fixture", "tls", "--out", p(dir.path())}).code, 0);
  ASSERT_EQ(run({"cluster", p(dir / "records.jsonl"), "--out", p(dir / "clusters.jsonl")}).code, 0);
  ASSERT_EQ(run({"verify", p(dir / "clusters.jsonl"), "--blocklist", p(dir / "blocklist.tsv"),
                 "--as-of", "0", "--out", p(dir / "campaigns.jsonl")})
                .code,
            0);
  const auto r = run({"report", "--records", p(dir / "records.jsonl"), "--clusters",
                      p(dir / "clusters.jsonl"), "--campaigns", p(dir / "campaigns.jsonl"),
                      "--out", p(dir / "r")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ins = data_lines(testutil::read_file(dir / "r" / "insights.jsonl"));
  ASSERT_EQ(ins.size(), 1u);
  const auto j = json::parse(ins[0]);
  EXPECT_EQ(j["tls"]["ratio_percent"].dump(), "98.93");
  EXPECT_EQ(j["torrent_pointers"]["percent"].dump(), "2.89");
  const auto hist = testutil::lines_of(testutil::read_file(dir / "r" / "cluster_sizes.csv"));
  ASSERT_GE(hist.size(), 2u);
  EXPECT_EQ(hist.back(), "9589,1");
}

}  // namespace
}  // namespace hashtriage

#include <gtest/gtest.h>

#include "hashtriage/clusterer.hpp"
#include "test_util.hpp"

namespace hashtriage {
namespace {

std::vector<SubmissionRecord> random_records(testutil::Gen& g, std::size_t n, int hashes) {
  std::vector<std::string> hash_pool;
  for (int i = 0; i < hashes; ++i) hash_pool.push_back(g.hex64());
  std::vector<SubmissionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    SubmissionRecord r;
    r.url = "http://" + g.word(2, 6) + ".org/" + g.word(0, 30);
    r.content_hash = g.pick(hash_pool);
    r.positives = g.coin(10) ? static_cast<std::uint32_t>(g.range(1, 9)) : 0;
    if (g.coin(3)) r.content_hash.reset();
    out.push_back(std::move(r));
  }
  return out;
}

ClusterTable run_external(const std::vector<SubmissionRecord>& records, std::size_t budget,
                          const std::filesystem::path& tmp, std::size_t* runs = nullptr) {
  ExternalClusterOptions opts;
  opts.memory_budget_bytes = budget;
  opts.temp_dir = tmp;
  ExternalClusterer ext(opts);
  for (const auto& r : records) ext.add(r);
  if (runs) *runs = ext.run_count();
  ClusterTable out;
  ext.finish([&](Cluster&& c) { out.push_back(std::move(c)); });
  return out;
}

TEST(ExternalClustererTest, InMemoryPathEqualsBuildClusters) {
  testutil::TempDir tmp;
  testutil::Gen g(41);
  const auto records = random_records(g, 2000, 300);
  std::size_t runs = 99;
  EXPECT_EQ(run_external(records, std::size_t{64} << 20, tmp.path(), &runs),
            build_clusters(records));
  EXPECT_EQ(runs, 0u);
}

TEST(ExternalClustererTest, SpilledPathEqualsBuildClusters) {
  testutil::TempDir tmp;
  testutil::Gen g(42);
  const auto records = random_records(g, 40000, 3000);
  std::size_t runs = 0;
  // Small budget forces many runs and an intermediate merge pass.
  const auto table = run_external(records, 200 << 10, tmp.path(), &runs);
  EXPECT_GT(runs, 2u);
  EXPECT_EQ(table, build_clusters(records));
}

TEST(ExternalClustererTest, RunFilesAreRemoved) {
  testutil::TempDir tmp;
  testutil::Gen g(43);
  run_external(random_records(g, 20000, 100), 128 << 10, tmp.path());
  EXPECT_TRUE(std::filesystem::is_empty(tmp.path()));
}

TEST(ExternalClustererTest, CountsAndRejections) {
  testutil::TempDir tmp;
  ExternalClusterOptions opts;
  opts.temp_dir = tmp.path();
  ExternalClusterer ext(opts);
  SubmissionRecord r;
  r.url = "http://a/";
  EXPECT_FALSE(ext.add(r));
  r.content_hash = std::string(64, 'c');
  EXPECT_TRUE(ext.add(r));
  EXPECT_EQ(ext.records_added(), 1u);
  r.content_hash = "abc";
  EXPECT_THROW(ext.add(r), std::invalid_argument);
  int n = 0;
  ext.finish([&](Cluster&& c) {
    ++n;
    EXPECT_EQ(c.submission_count, 1u);
  });
  EXPECT_EQ(n, 1);
}

TEST(ExternalClustererTest, EmptyInput) {
  testutil::TempDir tmp;
  EXPECT_TRUE(run_external({}, 1 << 20, tmp.path()).empty());
}

TEST(ExternalClustererPropertyTest, BudgetDoesNotChangeOutput) {
  testutil::TempDir tmp;
  testutil::Gen g(44);
  for (int round = 0; round < 6; ++round) {
    auto records = random_records(g, static_cast<std::size_t>(g.range(100, 8000)),
                                  static_cast<int>(g.range(1, 500)));
    const auto expect = build_clusters(records);
    g.shuffle(records);
    for (std::size_t budget : {std::size_t{100} << 10, std::size_t{1} << 20, std::size_t{32} << 20}) {
      ASSERT_EQ(run_external(records, budget, tmp.path()), expect) << budget;
    }
  }
}

}  // namespace
}  // namespace hashtriage

#include "hashtriage/clusterer.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include "hashtriage/urlkit.hpp"

namespace hashtriage {

std::string_view to_string(ClusterClass c) {
  switch (c) {
    case ClusterClass::kSingleton:
      return "singleton";
    case ClusterClass::kUnflagged:
      return "unflagged";
    case ClusterClass::kFlagged:
      return "flagged";
  }
  return "unknown";
}

std::optional<ClusterClass> parse_cluster_class(std::string_view name) {
  if (name == "singleton") return ClusterClass::kSingleton;
  if (name == "unflagged") return ClusterClass::kUnflagged;
  if (name == "flagged") return ClusterClass::kFlagged;
  return std::nullopt;
}

void Cluster::add(const std::string& normalized_url, std::uint32_t positives) {
  ++submission_count;
  positives_sum += positives;
  UrlTally& tally = urls[normalized_url];
  ++tally.submissions;
  tally.max_positives = std::max(tally.max_positives, positives);
}

bool ClusterBuilder::add(const SubmissionRecord& record) {
  if (!record.content_hash) return false;
  auto [it, inserted] = clusters_.try_emplace(*record.content_hash);
  if (inserted) it->second.content_hash = *record.content_hash;
  it->second.add(normalize_url(record.url), record.positives);
  return true;
}

ClusterTable ClusterBuilder::finish() && {
  ClusterTable table;
  table.reserve(clusters_.size());
  for (auto& [hash, cluster] : clusters_) table.push_back(std::move(cluster));
  clusters_.clear();
  std::sort(table.begin(), table.end(), [](const Cluster& a, const Cluster& b) {
    return a.content_hash < b.content_hash;
  });
  return table;
}

ClusterTable build_clusters(std::span<const SubmissionRecord> records) {
  ClusterBuilder builder;
  for (const auto& r : records) builder.add(r);
  return std::move(builder).finish();
}

namespace {

int hex_value(char c) {
  return c <= '9' ? c - '0' : c - 'a' + 10;
}

}  // namespace

ClusterTable build_clusters_parallel(std::span<const SubmissionRecord> records,
                                     unsigned threads) {
  if (threads <= 1) return build_clusters(records);
  threads = std::min(threads, 256u);

  // Shard i holds hashes whose first byte b satisfies b * threads / 256 == i,
  // so shards are contiguous ranges in hash order.
  std::vector<std::vector<const SubmissionRecord*>> shards(threads);
  for (const auto& r : records) {
    if (!r.content_hash) continue;
    const auto& h = *r.content_hash;
    const unsigned first_byte =
        static_cast<unsigned>(hex_value(h[0]) * 16 + hex_value(h[1]));
    shards[first_byte * threads / 256].push_back(&r);
  }

  std::vector<ClusterTable> results(threads);
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (unsigned i = 0; i < threads; ++i) {
    workers.emplace_back([&, i] {
      ClusterBuilder builder;
      for (const SubmissionRecord* r : shards[i]) builder.add(*r);
      results[i] = std::move(builder).finish();
    });
  }
  for (auto& w : workers) w.join();

  ClusterTable table;
  for (auto& part : results) {
    std::move(part.begin(), part.end(), std::back_inserter(table));
  }
  return table;
}

Ratio mean_positive_score(std::span<const std::uint32_t> positives) {
  if (positives.empty()) {
    throw std::invalid_argument("mean positive score of an empty sequence");
  }
  Ratio r{0, positives.size()};
  for (auto p : positives) r.num += p;
  return r;
}

ClusterClass classify_cluster(const Cluster& cluster) {
  if (cluster.submission_count <= 1) return ClusterClass::kSingleton;
  return cluster.positives_sum > 0 ? ClusterClass::kFlagged
                                   : ClusterClass::kUnflagged;
}

std::map<std::uint64_t, std::uint64_t> cluster_size_histogram(
    std::span<const Cluster> clusters) {
  std::map<std::uint64_t, std::uint64_t> hist;
  for (const auto& c : clusters) ++hist[c.submission_count];
  return hist;
}

}  // namespace hashtriage

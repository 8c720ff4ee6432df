#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hashtriage/common.hpp"
#include "hashtriage/ingest.hpp"

namespace hashtriage {

enum class ClusterClass { kSingleton, kUnflagged, kFlagged };

std::string_view to_string(ClusterClass c);
std::optional<ClusterClass> parse_cluster_class(std::string_view name);

struct UrlTally {
  std::uint64_t submissions = 0;
  std::uint32_t max_positives = 0;

  bool operator==(const UrlTally&) const = default;
};

// All submissions sharing one content hash.
struct Cluster {
  std::string content_hash;
  std::uint64_t submission_count = 0;
  std::uint64_t positives_sum = 0;
  // Normalised URL -> per-URL tally. The keys are the cluster's unique URLs.
  std::map<std::string, UrlTally> urls;

  // Adds one submission; `normalized_url` must already be normalised.
  void add(const std::string& normalized_url, std::uint32_t positives);

  std::size_t unique_url_count() const { return urls.size(); }
  Ratio mean_positive_score() const { return {positives_sum, submission_count}; }

  bool operator==(const Cluster&) const = default;
};

// Clusters ordered by content hash.
using ClusterTable = std::vector<Cluster>;

// Streaming in-memory grouping. Records without a content hash are ignored.
class ClusterBuilder {
 public:
  // Returns false when the record carried no hash.
  bool add(const SubmissionRecord& record);
  std::size_t cluster_count() const { return clusters_.size(); }
  ClusterTable finish() &&;

 private:
  std::unordered_map<std::string, Cluster> clusters_;
};

ClusterTable build_clusters(std::span<const SubmissionRecord> records);

// Shards records by the first byte of the hash into `threads` contiguous
// ranges, clusters each shard on its own thread, and concatenates.
// Output is identical to build_clusters.
ClusterTable build_clusters_parallel(std::span<const SubmissionRecord> records,
                                     unsigned threads);

// Exact mean of per-submission positives. Throws std::invalid_argument
// on an empty sequence.
Ratio mean_positive_score(std::span<const std::uint32_t> positives);

ClusterClass classify_cluster(const Cluster& cluster);

// submission count -> number of clusters with that count
std::map<std::uint64_t, std::uint64_t> cluster_size_histogram(
    std::span<const Cluster> clusters);

struct ExternalClusterOptions {
  // Upper bound for the in-memory run buffer plus merge buffers.
  std::size_t memory_budget_bytes = std::size_t{256} << 20;
  // Run files are created in a fresh subdirectory here.
  std::filesystem::path temp_dir = std::filesystem::temp_directory_path();
};

// External-memory sort-merge grouping: records are buffered, sorted by
// (hash, url), spilled to run files when the budget is reached, and the
// runs are k-way merged. Clusters are emitted one at a time in hash order.
class ExternalClusterer {
 public:
  explicit ExternalClusterer(ExternalClusterOptions options = {});
  ~ExternalClusterer();
  ExternalClusterer(const ExternalClusterer&) = delete;
  ExternalClusterer& operator=(const ExternalClusterer&) = delete;

  bool add(const SubmissionRecord& record);
  void finish(const std::function<void(Cluster&&)>& sink);

  std::size_t run_count() const;
  std::uint64_t records_added() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hashtriage

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hashtriage/campaign.hpp"
#include "hashtriage/clusterer.hpp"
#include "hashtriage/ingest.hpp"

namespace hashtriage {

class SynthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Seeded draws on top of mt19937_64. Only the engine's raw 64-bit output is
// used, so streams are identical across standard libraries.
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  // Uniform in [0, 1).
  double unit();
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

struct SynthConfig {
  std::uint64_t seed = 1;
  std::uint64_t campaigns = 10;    // clusters with two or more submissions
  std::uint64_t singletons = 100;  // clusters with exactly one submission
  std::uint64_t records = 1000;    // total records, hashed or not
  double missing_hash = 0.0;       // per-record probability of no hash

  double flagged_fraction = 0.5;      // of multi-submission clusters
  double blocklisted_fraction = 0.2;  // of flagged clusters
  double flag_probability = 0.3;      // per submission in a flagged cluster
  double single_url_fraction = 0.3;   // multi-submission clusters with 1 URL
  double shared_url_fraction = 0.05;  // URL slots drawn from a shared pool
  double pareto_alpha = 1.2;          // cluster-size tail
  std::optional<std::uint64_t> giant_cluster_size;

  std::int64_t time_start = 1569888000;  // 2019-10-01T00:00:00Z
  std::int64_t time_span = 92 * 86400;

  // Stable key=value rendering; feeds the provenance digest.
  std::string canonical() const;
  // Throws SynthError naming the first violated constraint.
  void validate() const;
};

struct ManifestCluster {
  std::string content_hash;
  std::string campaign_id;
  std::vector<std::string> urls;  // distinct, as emitted
  std::uint64_t submissions = 0;
  std::uint64_t positives_sum = 0;
  ClusterClass expected_class = ClusterClass::kSingleton;
  bool campaign = false;
  std::optional<std::string> blocklisted_url;
  ThreatSet threats;

  bool operator==(const ManifestCluster&) const = default;
};

struct Manifest {
  SynthConfig config;
  std::uint64_t records = 0;
  std::uint64_t missing_hash = 0;
  std::vector<ManifestCluster> clusters;  // ordered by content hash

  std::uint64_t hashed_records() const { return records - missing_hash; }
  std::uint64_t count(ClusterClass c) const;
  std::uint64_t campaign_count() const;
};

struct BlocklistEntry {
  std::string url;
  ThreatSet threats;
};

// Plans the whole corpus on construction, then streams it once.
class CorpusGenerator {
 public:
  // Throws SynthError for invalid or infeasible configurations.
  explicit CorpusGenerator(const SynthConfig& config);

  // Emits every record in a seeded shuffled order. Call once.
  void emit(const RecordSink& sink);

  // Positive sums are final only after emit().
  Manifest manifest() const;
  std::vector<BlocklistEntry> blocklist() const;

 private:
  struct PlannedCluster {
    std::string hash;
    std::vector<std::string> urls;
    std::uint64_t size = 0;
    std::uint64_t emitted = 0;
    std::uint64_t positives_sum = 0;
    bool flagged = false;
    bool singleton = false;
    std::optional<std::size_t> blocklisted_index;
    ThreatSet threats;
  };

  void plan();
  std::string fresh_url();
  SubmissionRecord next_record(std::uint32_t slot);

  SynthConfig cfg_;
  SynthRng rng_;
  std::uint64_t url_counter_ = 0;
  std::uint64_t missing_ = 0;
  std::vector<PlannedCluster> clusters_;
  std::vector<std::string> shared_pool_;
  std::vector<std::uint32_t> slots_;
  bool emitted_ = false;
};

struct Corpus {
  std::vector<SubmissionRecord> records;
  Manifest manifest;
  std::vector<BlocklistEntry> blocklist;
};

Corpus generate_corpus(const SynthConfig& config);

struct SynthOutputs {
  std::filesystem::path records;
  std::filesystem::path blocklist;
  std::filesystem::path manifest;
};

// Writes records.jsonl, blocklist.tsv and manifest.jsonl into `dir`.
SynthOutputs write_corpus(const SynthConfig& config, const std::filesystem::path& dir);

void write_manifest(std::ostream& out, const Manifest& manifest);
// Reads the cluster lines back; config fields other than the seed are not
// restored.
Manifest read_manifest(std::istream& in);

// ---- fixed fixtures ---------------------------------------------------------

// Malware campaign over 1,589 URLs / 9,589 submissions with 1,572 https
// URLs, 46 torrent pointers, {exe:19, js:28, zip:7, rar:3} paths, 261
// registrable domains and 1,175 URLs on ubar-pro4.ru.
std::vector<SubmissionRecord> tls_campaign_fixture();

// Brand-impersonation campaign over 4,081 URLs / 104,311 submissions built
// from 9 sub-domains, 12 domain labels and 7 suffixes.
std::vector<SubmissionRecord> apple_campaign_fixture();
// The two URLs of apple_campaign_fixture() that a blocklist confirms.
std::vector<std::string> apple_campaign_blocklisted();

// Cluster with `unique_urls` URLs and `submissions` submissions, built
// directly without records.
Cluster planted_cluster(const std::string& content_hash, std::uint64_t unique_urls,
                        std::uint64_t submissions, std::uint64_t positives_sum);

// Two URLs under one hash: the first goes unflagged for six submissions and
// is confirmed at `marked_at`; the second appears afterwards.
struct ReplayFixture {
  std::string content_hash;
  std::string first_url;
  std::string second_url;
  std::int64_t marked_at = 0;
  std::vector<SubmissionRecord> before;  // up to the marking
  std::vector<SubmissionRecord> after;   // replayed against the watchlist
};

ReplayFixture replay_fixture();

}  // namespace hashtriage

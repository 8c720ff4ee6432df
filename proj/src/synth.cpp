#include "hashtriage/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "hashtriage/verifier.hpp"

namespace hashtriage {

namespace {

constexpr std::uint32_t kMissingSlot = std::numeric_limits<std::uint32_t>::max();

constexpr std::array kSubdomains = {"", "www", "mail", "secure", "login", "account",
                                    "cdn", "m", "support", "id"};
constexpr std::array kDomainTokens = {"apple",   "icloud",  "paypal", "bank",
                                      "secure",  "verify",  "update", "account",
                                      "signin",  "service", "online", "cloud",
                                      "track",   "parcel",  "wallet", "prize",
                                      "voucher", "invoice", "office", "docs"};
constexpr std::array kSuffixes = {"com", "net",  "org",     "ru",     "info",   "xyz",
                                  "top", "co.uk", "com.br", "support", "live",  "online"};
constexpr std::array kPathSegments = {"",          "login",     "verify",
                                      "secure/update", "wp-content/uploads",
                                      "download",  "files",     "invoice"};
constexpr std::array kExtensions = {"", "", "", "php", "html", "exe",
                                    "js", "zip", "rar", "apk", "doc"};

std::string base36(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string out;
  do {
    out.push_back(kDigits[v % 36]);
    v /= 36;
  } while (v != 0);
  std::reverse(out.begin(), out.end());
  return out;
}

template <typename Pool>
const char* pick(SynthRng& rng, const Pool& pool) {
  return pool[rng.below(pool.size())];
}

// 64 hex chars from four chained splitmix64 outputs.
std::string hash_from(std::uint64_t state) {
  std::string out;
  for (int i = 0; i < 4; ++i) {
    state = splitmix64(state);
    out += fmt::format("{:016x}", state);
  }
  return out;
}

std::string fixture_hash(std::string_view tag) { return hash_from(fnv1a64(tag)); }

void check_fraction(const char* name, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw SynthError(fmt::format("{} must lie in [0,1], got {}", name, v));
  }
}

}  // namespace

std::uint64_t SynthRng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("SynthRng::below(0)");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

double SynthRng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string SynthConfig::canonical() const {
  return fmt::format(
      "blocklisted_fraction={};campaigns={};flag_probability={};"
      "flagged_fraction={};giant_cluster_size={};missing_hash={};"
      "pareto_alpha={};records={};seed={};shared_url_fraction={};"
      "single_url_fraction={};singletons={};time_span={};time_start={}",
      blocklisted_fraction, campaigns, flag_probability, flagged_fraction,
      giant_cluster_size ? std::to_string(*giant_cluster_size) : "none",
      missing_hash, pareto_alpha, records, seed, shared_url_fraction,
      single_url_fraction, singletons, time_span, time_start);
}

void SynthConfig::validate() const {
  check_fraction("missing_hash", missing_hash);
  check_fraction("flagged_fraction", flagged_fraction);
  check_fraction("blocklisted_fraction", blocklisted_fraction);
  check_fraction("flag_probability", flag_probability);
  check_fraction("single_url_fraction", single_url_fraction);
  check_fraction("shared_url_fraction", shared_url_fraction);
  if (!(pareto_alpha > 0.0)) throw SynthError("pareto_alpha must be positive");
  if (time_span <= 0) throw SynthError("time_span must be positive");
  if (campaigns + singletons >= kMissingSlot) throw SynthError("too many clusters");
  if (records >= kMissingSlot) throw SynthError("too many records for one corpus");
  if (giant_cluster_size) {
    if (campaigns == 0) throw SynthError("a giant cluster needs campaigns >= 1");
    if (*giant_cluster_size < 2) throw SynthError("giant cluster needs >= 2 submissions");
  }
  const auto flagged = static_cast<std::uint64_t>(
      std::llround(static_cast<double>(campaigns) * flagged_fraction));
  if (blocklisted_fraction > 0.0 && flagged == 0) {
    throw SynthError("infeasible: blocklisted fraction > 0 with zero flagged clusters");
  }
}

std::uint64_t Manifest::count(ClusterClass c) const {
  return static_cast<std::uint64_t>(std::count_if(
      clusters.begin(), clusters.end(),
      [c](const ManifestCluster& m) { return m.expected_class == c; }));
}

std::uint64_t Manifest::campaign_count() const {
  return static_cast<std::uint64_t>(std::count_if(
      clusters.begin(), clusters.end(), [](const ManifestCluster& m) { return m.campaign; }));
}

CorpusGenerator::CorpusGenerator(const SynthConfig& config)
    : cfg_(config), rng_(config.seed) {
  cfg_.validate();
  plan();
}

std::string CorpusGenerator::fresh_url() {
  std::string url = rng_.chance(0.6) ? "https://" : "http://";
  const std::string sub = pick(rng_, kSubdomains);
  if (!sub.empty()) url += sub + ".";
  url += pick(rng_, kDomainTokens);
  url += "-";
  url += pick(rng_, kDomainTokens);
  url += std::to_string(rng_.below(100));
  url += ".";
  url += pick(rng_, kSuffixes);
  url += "/";
  const std::string seg = pick(rng_, kPathSegments);
  if (!seg.empty()) url += seg + "/";
  url += base36(url_counter_++);
  const std::string ext = pick(rng_, kExtensions);
  if (!ext.empty()) url += "." + ext;
  return url;
}

void CorpusGenerator::plan() {
  const std::uint64_t k = cfg_.campaigns;
  const std::uint64_t m = cfg_.singletons;

  for (std::uint64_t i = 0; i < cfg_.records; ++i) {
    if (rng_.chance(cfg_.missing_hash)) ++missing_;
  }
  const std::uint64_t hashed = cfg_.records - missing_;
  const std::uint64_t giant = cfg_.giant_cluster_size.value_or(2);
  const std::uint64_t needed = m + 2 * k + (giant - 2);
  if (hashed < needed) {
    throw SynthError(fmt::format(
        "infeasible: {} hashed records cannot fill {} singletons and {} "
        "multi-submission clusters",
        hashed, m, k));
  }
  if (k == 0 && hashed != m) {
    throw SynthError(fmt::format(
        "infeasible: without multi-submission clusters all {} hashed records "
        "must be singletons, but singletons = {}",
        hashed, m));
  }

  // Heavy-tailed sizes: every multi cluster gets two submissions, the excess
  // is shared out by Pareto weights.
  std::vector<std::uint64_t> sizes(k, 2);
  if (k > 0) {
    std::uint64_t excess = hashed - needed;
    if (cfg_.giant_cluster_size) sizes[0] = giant;
    const std::uint64_t first_free = cfg_.giant_cluster_size ? 1 : 0;
    if (first_free < k) {
      std::vector<double> w(k, 0.0);
      double total = 0;
      for (std::uint64_t i = first_free; i < k; ++i) {
        const double u = 1.0 - rng_.unit();  // (0, 1]
        w[i] = std::min(std::pow(u, -1.0 / cfg_.pareto_alpha), 1e9);
        total += w[i];
      }
      std::uint64_t given = 0;
      for (std::uint64_t i = first_free; i < k; ++i) {
        const auto share = static_cast<std::uint64_t>(
            std::floor(static_cast<double>(excess) * w[i] / total));
        sizes[i] += share;
        given += share;
      }
      for (std::uint64_t left = excess - given; left > 0; --left) {
        ++sizes[first_free + rng_.below(k - first_free)];
      }
    } else if (excess > 0) {
      throw SynthError("infeasible: records exceed the giant cluster size");
    }
  }

  // Flagged and blocklisted choices over the multi clusters.
  std::vector<std::uint64_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  for (std::uint64_t i = k; i > 1; --i) std::swap(order[i - 1], order[rng_.below(i)]);
  const auto n_flagged = static_cast<std::uint64_t>(
      std::llround(static_cast<double>(k) * cfg_.flagged_fraction));
  const auto n_blocked = static_cast<std::uint64_t>(
      std::llround(static_cast<double>(n_flagged) * cfg_.blocklisted_fraction));

  clusters_.resize(k + m);
  std::unordered_set<std::string> hashes;
  for (std::uint64_t i = 0; i < k + m; ++i) {
    auto& c = clusters_[i];
    c.hash = hash_from(splitmix64(cfg_.seed) ^ (i * 0x9e3779b97f4a7c15ULL));
    if (!hashes.insert(c.hash).second) throw SynthError("content hash collision");
    c.singleton = i >= k;
    c.size = c.singleton ? 1 : sizes[i];
  }
  for (std::uint64_t j = 0; j < n_flagged; ++j) {
    auto& c = clusters_[order[j]];
    c.flagged = true;
    if (j < n_blocked) {
      c.blocklisted_index = 0;
      const auto pickt = rng_.below(3);
      c.threats = ThreatSet(pickt == 0   ? ThreatSet::kMalware
                            : pickt == 1 ? ThreatSet::kSocialEngineering
                                         : ThreatSet::kMalware | ThreatSet::kSocialEngineering);
    }
  }

  shared_pool_.clear();
  const std::uint64_t pool_size = k / 10 + 1;
  for (std::uint64_t i = 0; i < pool_size; ++i) shared_pool_.push_back(fresh_url());

  for (auto& c : clusters_) {
    std::uint64_t n_urls = 1;
    if (!c.singleton && !rng_.chance(cfg_.single_url_fraction)) {
      n_urls = 2 + rng_.below(c.size - 1);
    }
    std::unordered_set<std::string> seen;
    for (std::uint64_t j = 0; j < n_urls; ++j) {
      std::string url;
      const bool must_be_unique = c.blocklisted_index && *c.blocklisted_index == j;
      if (!must_be_unique && rng_.chance(cfg_.shared_url_fraction)) {
        url = shared_pool_[rng_.below(shared_pool_.size())];
        if (seen.contains(url)) url.clear();
      }
      if (url.empty()) url = fresh_url();
      seen.insert(url);
      c.urls.push_back(std::move(url));
    }
  }

  slots_.reserve(cfg_.records);
  for (std::uint32_t i = 0; i < clusters_.size(); ++i) {
    slots_.insert(slots_.end(), clusters_[i].size, i);
  }
  slots_.insert(slots_.end(), missing_, kMissingSlot);
  for (std::size_t i = slots_.size(); i > 1; --i) {
    std::swap(slots_[i - 1], slots_[rng_.below(i)]);
  }
}

SubmissionRecord CorpusGenerator::next_record(std::uint32_t slot) {
  SubmissionRecord r;
  r.vendor_total = 60 + static_cast<std::uint32_t>(rng_.below(16));
  r.scan_time = cfg_.time_start + static_cast<std::int64_t>(
                                      rng_.below(static_cast<std::uint64_t>(cfg_.time_span)));
  if (slot == kMissingSlot) {
    r.url = fresh_url();
    r.positives = rng_.chance(0.2) ? 1 + static_cast<std::uint32_t>(rng_.below(5)) : 0;
    return r;
  }
  auto& c = clusters_[slot];
  const std::uint64_t k = c.emitted++;
  r.url = k < c.urls.size() ? c.urls[k] : c.urls[rng_.below(c.urls.size())];
  r.content_hash = c.hash;
  bool positive = false;
  if (c.singleton) {
    positive = rng_.chance(cfg_.flagged_fraction);
  } else if (c.flagged) {
    // The first submission of a flagged cluster is always positive so its
    // mean score is above zero.
    positive = k == 0 || rng_.chance(cfg_.flag_probability);
  }
  if (positive) r.positives = 1 + static_cast<std::uint32_t>(rng_.below(12));
  c.positives_sum += r.positives;
  return r;
}

void CorpusGenerator::emit(const RecordSink& sink) {
  if (emitted_) throw std::logic_error("CorpusGenerator::emit called twice");
  emitted_ = true;
  for (auto slot : slots_) sink(next_record(slot));
  slots_.clear();
  slots_.shrink_to_fit();
}

Manifest CorpusGenerator::manifest() const {
  Manifest m;
  m.config = cfg_;
  m.records = cfg_.records;
  m.missing_hash = missing_;
  m.clusters.reserve(clusters_.size());
  for (const auto& c : clusters_) {
    ManifestCluster mc;
    mc.content_hash = c.hash;
    mc.campaign_id = campaign_id_for(c.hash);
    mc.urls = c.urls;
    mc.submissions = c.size;
    mc.positives_sum = c.positives_sum;
    mc.expected_class = c.singleton ? ClusterClass::kSingleton
                        : c.flagged ? ClusterClass::kFlagged
                                    : ClusterClass::kUnflagged;
    mc.campaign = c.flagged && c.blocklisted_index.has_value();
    if (c.blocklisted_index) mc.blocklisted_url = c.urls[*c.blocklisted_index];
    mc.threats = c.threats;
    m.clusters.push_back(std::move(mc));
  }
  std::sort(m.clusters.begin(), m.clusters.end(),
            [](const auto& a, const auto& b) { return a.content_hash < b.content_hash; });
  return m;
}

std::vector<BlocklistEntry> CorpusGenerator::blocklist() const {
  std::vector<BlocklistEntry> out;
  for (const auto& c : clusters_) {
    if (c.blocklisted_index) out.push_back({c.urls[*c.blocklisted_index], c.threats});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.url < b.url; });
  return out;
}

Corpus generate_corpus(const SynthConfig& config) {
  CorpusGenerator gen(config);
  Corpus corpus;
  corpus.records.reserve(config.records);
  gen.emit([&](SubmissionRecord&& r) { corpus.records.push_back(std::move(r)); });
  corpus.manifest = gen.manifest();
  corpus.blocklist = gen.blocklist();
  return corpus;
}

void write_manifest(std::ostream& out, const Manifest& m) {
  out << provenance_line("synth", m.config.canonical()) << '\n';
  out << JsonLine()
             .unum("seed", m.config.seed)
             .str("prng", "mt19937_64")
             .unum("records", m.records)
             .unum("missing_hash", m.missing_hash)
             .unum("clusters", m.clusters.size())
             .unum("singletons", m.count(ClusterClass::kSingleton))
             .unum("unflagged", m.count(ClusterClass::kUnflagged))
             .unum("flagged", m.count(ClusterClass::kFlagged))
             .unum("campaigns", m.campaign_count())
             .done()
      << '\n';
  for (const auto& c : m.clusters) {
    JsonLine line;
    line.str("content_hash", c.content_hash)
        .str("campaign_id", c.campaign_id)
        .str("class", to_string(c.expected_class))
        .boolean("campaign", c.campaign)
        .unum("submissions", c.submissions)
        .unum("positives_sum", c.positives_sum)
        .raw("urls", nlohmann::json(c.urls).dump());
    if (c.blocklisted_url) {
      line.str("blocklisted_url", *c.blocklisted_url).str("threat_types", c.threats.to_string());
    } else {
      line.null("blocklisted_url");
    }
    out << line.done() << '\n';
  }
}

Manifest read_manifest(std::istream& in) {
  Manifest m;
  std::string text;
  bool header = true;
  while (std::getline(in, text)) {
    if (trim(text).empty() || is_provenance_line(text)) continue;
    const auto j = nlohmann::json::parse(text);
    if (header) {
      m.config.seed = j.at("seed").get<std::uint64_t>();
      m.records = j.at("records").get<std::uint64_t>();
      m.missing_hash = j.at("missing_hash").get<std::uint64_t>();
      header = false;
      continue;
    }
    ManifestCluster c;
    c.content_hash = j.at("content_hash").get<std::string>();
    c.campaign_id = j.at("campaign_id").get<std::string>();
    const auto cls = parse_cluster_class(j.at("class").get<std::string>());
    if (!cls) throw std::runtime_error("bad class in manifest");
    c.expected_class = *cls;
    c.campaign = j.at("campaign").get<bool>();
    c.submissions = j.at("submissions").get<std::uint64_t>();
    c.positives_sum = j.at("positives_sum").get<std::uint64_t>();
    c.urls = j.at("urls").get<std::vector<std::string>>();
    if (!j.at("blocklisted_url").is_null()) {
      c.blocklisted_url = j.at("blocklisted_url").get<std::string>();
      c.threats = ThreatSet::parse(j.at("threat_types").get<std::string>()).value_or(ThreatSet{});
    }
    m.clusters.push_back(std::move(c));
  }
  return m;
}

SynthOutputs write_corpus(const SynthConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SynthOutputs paths{dir / "records.jsonl", dir / "blocklist.tsv", dir / "manifest.jsonl"};
  CorpusGenerator gen(config);
  const std::string digest_input = config.canonical();

  {
    std::ofstream out(paths.records);
    if (!out) throw std::runtime_error("cannot write " + paths.records.string());
    out << provenance_line("synth", digest_input) << '\n';
    gen.emit([&](SubmissionRecord&& r) { out << serialize_record(r) << '\n'; });
    if (!out) throw std::runtime_error("write failed: " + paths.records.string());
  }
  {
    std::ofstream out(paths.blocklist);
    if (!out) throw std::runtime_error("cannot write " + paths.blocklist.string());
    out << "# " << provenance_line("synth", digest_input) << '\n';
    for (const auto& e : gen.blocklist()) {
      out << format_blocklist_line(e.url, e.threats) << '\n';
    }
  }
  {
    std::ofstream out(paths.manifest);
    if (!out) throw std::runtime_error("cannot write " + paths.manifest.string());
    write_manifest(out, gen.manifest());
  }
  return paths;
}

// ---- fixtures -----------------------------------------------------------------

std::vector<SubmissionRecord> tls_campaign_fixture() {
  constexpr std::uint64_t kUrls = 1589;
  constexpr std::uint64_t kHttp = 17;
  constexpr std::uint64_t kOnMain = 1175;
  constexpr std::uint64_t kOtherDomains = 260;
  constexpr std::array kOtherSuffixes = {"com", "net", "org", "info", "xyz"};

  const std::string hash = fixture_hash("tls-malware-campaign");
  std::vector<SubmissionRecord> out;
  out.reserve(9589);
  for (std::uint64_t i = 0; i < kUrls; ++i) {
    std::string url = i >= kUrls - kHttp ? "http://" : "https://";
    if (i < kOnMain) {
      url += "ubar-pro4.ru";
    } else {
      const auto d = (i - kOnMain) % kOtherDomains;
      url += fmt::format("mirror-{}.{}", d, kOtherSuffixes[d % kOtherSuffixes.size()]);
    }
    // Spread path kinds across hosts with a stride coprime to 1589.
    const std::uint64_t p = (i * 7919) % kUrls;
    const std::string id = base36(i);
    if (p < 19) url += "/files/" + id + "/setup.exe";
    else if (p < 47) url += "/static/" + id + "/loader.js";
    else if (p < 54) url += "/dl/" + id + "/pack.zip";
    else if (p < 57) url += "/dl/" + id + "/pack.rar";
    else if (p < 103) url += p % 2 ? "/announce?info_hash=" + id
                                   : "/get?dl=magnet:?xt=urn:btih:" + id;
    else url += "/download/" + id + "/";

    const std::uint64_t subs = 6 + (i < 55 ? 1 : 0);
    for (std::uint64_t s = 0; s < subs; ++s) {
      SubmissionRecord r;
      r.url = url;
      r.content_hash = hash;
      r.positives = 3 + static_cast<std::uint32_t>((i + s) % 5);
      r.vendor_total = 70;
      r.scan_time = 1572566400 + static_cast<std::int64_t>((i * 7 + s) * 3571 % (60 * 86400));
      out.push_back(std::move(r));
    }
  }
  return out;
}

namespace {

constexpr std::array kAppleSubdomains = {"www.apple.com", "www.icloud.com", "www.apple",
                                         "icloud.com",    "apple",          "apple.com",
                                         "icloud",        "www",            "mail"};
constexpr std::array kAppleDomains = {"lcloud-com", "online-support", "findmy",  "get-apple",
                                      "com-support", "map-apple",     "id-info", "wvvw-icloud",
                                      "sign-in",     "map-log",       "com-fml",
                                      "viewlocation-icloud"};
constexpr std::array kAppleSuffixes = {"us", "in", "support", "live", "review", "com", "mobi"};

std::string apple_url(std::uint64_t i) {
  return fmt::format("{}://{}.{}.{}/signin/{}", i % 3 ? "https" : "http",
                     kAppleSubdomains[i % kAppleSubdomains.size()],
                     kAppleDomains[i % kAppleDomains.size()],
                     kAppleSuffixes[i % kAppleSuffixes.size()], base36(i));
}

}  // namespace

std::vector<SubmissionRecord> apple_campaign_fixture() {
  constexpr std::uint64_t kUrls = 4081;
  constexpr std::uint64_t kExtra = 104311 - 25 * kUrls;
  const std::string hash = fixture_hash("apple-impersonation-campaign");
  std::vector<SubmissionRecord> out;
  out.reserve(104311);
  for (std::uint64_t i = 0; i < kUrls; ++i) {
    const std::string url = apple_url(i);
    const std::uint64_t subs = 25 + (i < kExtra ? 1 : 0);
    for (std::uint64_t s = 0; s < subs; ++s) {
      SubmissionRecord r;
      r.url = url;
      r.content_hash = hash;
      r.positives = (i + s) % 4 == 0 ? 1 : 0;
      r.vendor_total = 72;
      r.scan_time = 1575158400 + static_cast<std::int64_t>((i * 31 + s) * 977 % (45 * 86400));
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<std::string> apple_campaign_blocklisted() { return {apple_url(0), apple_url(1)}; }

Cluster planted_cluster(const std::string& content_hash, std::uint64_t unique_urls,
                        std::uint64_t submissions, std::uint64_t positives_sum) {
  if (unique_urls == 0 || submissions < unique_urls) {
    throw std::invalid_argument("planted_cluster needs 1 <= U <= S");
  }
  Cluster c;
  c.content_hash = content_hash;
  c.submission_count = submissions;
  c.positives_sum = positives_sum;
  const std::uint64_t base = submissions / unique_urls;
  const std::uint64_t extra = submissions % unique_urls;
  for (std::uint64_t i = 0; i < unique_urls; ++i) {
    // Zero-padded ids keep insertion in key order.
    c.urls.emplace_hint(c.urls.end(), fmt::format("http://host{:07}.example/p", i),
                        UrlTally{base + (i < extra ? 1 : 0), positives_sum > 0 ? 1u : 0u});
  }
  return c;
}

ReplayFixture replay_fixture() {
  ReplayFixture f;
  f.content_hash = "16f321a6" + fixture_hash("replay-16f3-21a6").substr(8);
  f.first_url = "http://everyday-vouchers.com/";
  f.second_url = "http://sweepstakehunter.com/";
  f.marked_at = 1577966400;  // 2020-01-02T12:00:00Z

  auto make = [&](const std::string& url, std::int64_t t, std::uint32_t positives) {
    SubmissionRecord r;
    r.url = url;
    r.content_hash = f.content_hash;
    r.positives = positives;
    r.vendor_total = 70;
    r.scan_time = t;
    return r;
  };
  // Six clean submissions from 2019-12-20, then the one vendor flag on the
  // marking day.
  const std::int64_t dec20 = 1576800000;
  for (int i = 0; i < 6; ++i) f.before.push_back(make(f.first_url, dec20 + i * 2 * 86400, 0));
  f.before.push_back(make(f.first_url, 1577944800, 1));  // 2020-01-02T06:00:00Z
  // The second URL shows up after the marking and stays unflagged.
  const std::int64_t jan05 = 1578182400;
  for (int i = 0; i < 5; ++i) f.after.push_back(make(f.second_url, jan05 + i * 7 * 86400, 0));
  return f;
}

}  // namespace hashtriage

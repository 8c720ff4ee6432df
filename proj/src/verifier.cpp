#include "hashtriage/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <thread>

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "hashtriage/urlkit.hpp"

namespace hashtriage {

std::string ThreatSet::to_string() const {
  std::string out;
  if (has(kMalware)) out = "MALWARE";
  if (has(kSocialEngineering)) {
    if (!out.empty()) out += ',';
    out += "SOCIAL_ENGINEERING";
  }
  return out;
}

std::optional<ThreatSet> ThreatSet::parse(std::string_view text) {
  ThreatSet set;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto token = trim(text.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start));
    if (token == "MALWARE") {
      set |= ThreatSet(kMalware);
    } else if (token == "SOCIAL_ENGINEERING") {
      set |= ThreatSet(kSocialEngineering);
    } else if (!token.empty()) {
      return std::nullopt;
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return set;
}

std::string_view to_string(CampaignKind kind) {
  return kind == CampaignKind::kSingleUrl ? "single-url" : "multi-url";
}

std::optional<CampaignKind> parse_campaign_kind(std::string_view text) {
  if (text == "single-url") return CampaignKind::kSingleUrl;
  if (text == "multi-url") return CampaignKind::kMultiUrl;
  return std::nullopt;
}

std::string campaign_id_for(std::string_view content_hash) {
  const auto head = content_hash.substr(0, 8);
  if (head.size() < 8) return std::string(head);
  return fmt::format("{}-{}", head.substr(0, 4), head.substr(4, 4));
}

// ---------------------------------------------------------------------------

BlocklistProvider BlocklistProvider::load(std::istream& in) {
  BlocklistProvider p;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos) {
      throw std::runtime_error(fmt::format("blocklist line {}: missing TAB", n));
    }
    const auto threats = ThreatSet::parse(view.substr(tab + 1));
    if (!threats || threats->empty()) {
      throw std::runtime_error(
          fmt::format("blocklist line {}: bad threat types", n));
    }
    p.add(std::string(trim(view.substr(0, tab))), *threats);
  }
  return p;
}

BlocklistProvider BlocklistProvider::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open blocklist " + path.string());
  return load(in);
}

void BlocklistProvider::add(const std::string& url, ThreatSet threats) {
  entries_[normalize_url(url)] |= threats;
}

ThreatSet BlocklistProvider::check(const std::string& normalized_url) {
  const auto it = entries_.find(normalized_url);
  return it == entries_.end() ? ThreatSet{} : it->second;
}

std::string format_blocklist_line(const std::string& url, ThreatSet threats) {
  return url + "\t" + threats.to_string();
}

// ---------------------------------------------------------------------------

void ScriptedProvider::set(const std::string& url, ThreatSet threats) {
  std::lock_guard lock(mu_);
  verdicts_[url] = threats;
}

void ScriptedProvider::fail_next(int n) {
  std::lock_guard lock(mu_);
  global_failures_ = n;
}

void ScriptedProvider::fail_next(const std::string& url, int n) {
  std::lock_guard lock(mu_);
  url_failures_[url] = n;
}

ThreatSet ScriptedProvider::check(const std::string& normalized_url) {
  std::lock_guard lock(mu_);
  ++calls_;
  ++url_calls_[normalized_url];
  if (global_failures_ > 0) {
    --global_failures_;
    throw ProviderUnavailable("scripted failure");
  }
  if (auto it = url_failures_.find(normalized_url);
      it != url_failures_.end() && it->second > 0) {
    --it->second;
    throw ProviderUnavailable("scripted failure for " + normalized_url);
  }
  const auto it = verdicts_.find(normalized_url);
  return it == verdicts_.end() ? ThreatSet{} : it->second;
}

std::uint64_t ScriptedProvider::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::uint64_t ScriptedProvider::calls(const std::string& url) const {
  std::lock_guard lock(mu_);
  const auto it = url_calls_.find(url);
  return it == url_calls_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

EpochClock system_epoch_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

std::chrono::milliseconds RetryPolicy::backoff_before(int attempt) const {
  if (attempt <= 1) return std::chrono::milliseconds{0};
  const double scaled = static_cast<double>(initial_backoff.count()) *
                        std::pow(multiplier, attempt - 2);
  const auto capped = std::min(scaled, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds{static_cast<std::int64_t>(capped)};
}

// ---------------------------------------------------------------------------

std::string verdict_to_json(const Verdict& v) {
  nlohmann::json types = nlohmann::json::array();
  if (v.threats.has(ThreatSet::kMalware)) types.push_back("MALWARE");
  if (v.threats.has(ThreatSet::kSocialEngineering)) {
    types.push_back("SOCIAL_ENGINEERING");
  }
  return JsonLine()
      .str("url", v.url)
      .raw("threat_types", types.dump())
      .num("checked_at", v.checked_at)
      .str("status", v.status == VerdictStatus::kChecked ? "checked" : "unknown")
      .done();
}

std::optional<Verdict> verdict_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    Verdict v;
    v.url = j.at("url").get<std::string>();
    for (const auto& t : j.at("threat_types")) {
      const auto parsed = ThreatSet::parse(t.get<std::string>());
      if (!parsed) return std::nullopt;
      v.threats |= *parsed;
    }
    v.checked_at = j.at("checked_at").get<std::int64_t>();
    v.status = j.value("status", std::string("checked")) == "unknown"
                   ? VerdictStatus::kUnknown
                   : VerdictStatus::kChecked;
    return v;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

VerdictCache::VerdictCache(const std::filesystem::path& journal) {
  {
    std::ifstream in(journal);
    std::string line;
    while (in && std::getline(in, line)) {
      if (trim(line).empty() || is_provenance_line(line)) continue;
      // A torn final line from an interrupted run is skipped.
      if (auto v = verdict_from_json(line);
          v && v->status == VerdictStatus::kChecked) {
        entries_[v->url] = *v;
      }
    }
  }
  journal_.open(journal, std::ios::app);
  if (!journal_) {
    throw std::runtime_error("cannot open lookup journal " + journal.string());
  }
}

std::optional<Verdict> VerdictCache::get(const std::string& url) const {
  std::shared_lock lock(mu_);
  const auto it = entries_.find(url);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void VerdictCache::put(const Verdict& verdict) {
  if (verdict.status != VerdictStatus::kChecked) return;
  std::unique_lock lock(mu_);
  const bool inserted = entries_.insert_or_assign(verdict.url, verdict).second;
  if (inserted && journal_.is_open()) {
    journal_ << verdict_to_json(verdict) << '\n';
    journal_.flush();
  }
}

std::size_t VerdictCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------

VerdictLookup::VerdictLookup(VerdictProvider& provider, LookupOptions options,
                             VerdictCache* cache)
    : provider_(provider),
      options_(std::move(options)),
      cache_(cache ? cache : &own_cache_) {
  if (!options_.sleeper) options_.sleeper = real_sleeper();
  if (!options_.clock) options_.clock = system_epoch_clock();
  if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
  if (options_.max_inflight < 1) options_.max_inflight = 1;
}

Verdict VerdictLookup::query_with_retry(const std::string& url) {
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      {
        std::lock_guard lock(stats_mu_);
        ++stats_.retries;
      }
      options_.sleeper(options_.retry.backoff_before(attempt));
    }
    try {
      {
        std::lock_guard lock(stats_mu_);
        ++stats_.provider_calls;
      }
      const ThreatSet threats = provider_.check(url);
      return Verdict{url, threats, options_.clock(), VerdictStatus::kChecked};
    } catch (const ProviderUnavailable&) {
    }
  }
  {
    std::lock_guard lock(stats_mu_);
    ++stats_.unknown;
  }
  return Verdict{url, ThreatSet{}, options_.clock(), VerdictStatus::kUnknown};
}

std::vector<Verdict> VerdictLookup::lookup(std::span<const std::string> urls) {
  std::vector<Verdict> out(urls.size());
  std::vector<std::string> misses;
  std::unordered_map<std::string, std::size_t> miss_index;
  std::vector<std::size_t> slot(urls.size(), SIZE_MAX);

  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < urls.size(); ++i) {
    if (auto cached = cache_->get(urls[i])) {
      out[i] = std::move(*cached);
      ++hits;
      continue;
    }
    auto [it, inserted] = miss_index.try_emplace(urls[i], misses.size());
    if (inserted) {
      misses.push_back(urls[i]);
    } else {
      ++hits;
    }
    slot[i] = it->second;
  }
  {
    std::lock_guard lock(stats_mu_);
    stats_.cache_hits += hits;
  }

  std::vector<Verdict> fresh(misses.size());
  const std::size_t workers =
      std::min<std::size_t>(options_.max_inflight, misses.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < misses.size(); ++k) {
      fresh[k] = query_with_retry(misses[k]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < misses.size(); k = next++) {
          fresh[k] = query_with_retry(misses[k]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& v : fresh) cache_->put(v);

  for (std::size_t i = 0; i < urls.size(); ++i) {
    if (slot[i] != SIZE_MAX) out[i] = fresh[slot[i]];
  }
  return out;
}

LookupStats VerdictLookup::stats() const {
  std::lock_guard lock(stats_mu_);
  return stats_;
}

// ---------------------------------------------------------------------------

VerifyOutcome verify_cluster(const Cluster& cluster, VerdictLookup& lookup) {
  if (classify_cluster(cluster) != ClusterClass::kFlagged) {
    throw std::invalid_argument("verify_cluster needs a flagged cluster: " +
                                cluster.content_hash);
  }
  std::vector<std::string> urls;
  urls.reserve(cluster.urls.size());
  for (const auto& [url, tally] : cluster.urls) urls.push_back(url);

  auto verdicts = lookup.lookup(urls);
  VerifyOutcome outcome;
  std::size_t confirmed = 0;
  for (const auto& v : verdicts) {
    if (v.status == VerdictStatus::kUnknown) ++outcome.unknown_verdicts;
    if (v.confirmed()) ++confirmed;
  }
  if (confirmed == 0) {
    outcome.status = outcome.unknown_verdicts == verdicts.size()
                         ? VerifyStatus::kIndeterminate
                         : VerifyStatus::kNotConfirmed;
    return outcome;
  }
  Campaign c;
  c.campaign_id = campaign_id_for(cluster.content_hash);
  c.cluster = cluster;
  c.kind = cluster.urls.size() == 1 ? CampaignKind::kSingleUrl
                                    : CampaignKind::kMultiUrl;
  for (auto& v : verdicts) c.verdicts.emplace(v.url, std::move(v));
  outcome.status = VerifyStatus::kConfirmed;
  outcome.campaign = std::move(c);
  return outcome;
}

}  // namespace hashtriage

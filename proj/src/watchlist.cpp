#include "hashtriage/watchlist.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "hashtriage/urlkit.hpp"

namespace hashtriage {

std::string_view to_string(Novelty n) {
  return n == Novelty::kNewUrl ? "new-url" : "known-url";
}

std::string alert_to_json(const EscalationAlert& a) {
  return JsonLine()
      .str("url", a.url)
      .str("content_hash", a.content_hash)
      .str("campaign_id", a.campaign_id)
      .str("novelty", to_string(a.novelty))
      .num("alert_time", a.alert_time)
      .done();
}

void Watchlist::add(WatchlistEntry entry) {
  if (entry.known_urls.empty()) {
    throw std::invalid_argument("watchlist entry without URLs: " + entry.content_hash);
  }
  const std::string key = entry.content_hash;
  if (!entries_.emplace(key, std::move(entry)).second) {
    throw std::invalid_argument("duplicate watchlist hash: " + key);
  }
}

std::optional<EscalationAlert> Watchlist::check_submission(
    const SubmissionRecord& record) {
  if (!record.content_hash) return std::nullopt;
  const auto it = entries_.find(*record.content_hash);
  if (it == entries_.end()) return std::nullopt;

  WatchlistEntry& entry = it->second;
  EscalationAlert alert;
  alert.url = normalize_url(record.url);
  alert.content_hash = entry.content_hash;
  alert.campaign_id = entry.campaign_id;
  alert.alert_time = record.scan_time;
  alert.novelty = entry.known_urls.insert(alert.url).second ? Novelty::kNewUrl
                                                            : Novelty::kKnownUrl;
  return alert;
}

const WatchlistEntry* Watchlist::find(const std::string& content_hash) const {
  const auto it = entries_.find(content_hash);
  return it == entries_.end() ? nullptr : &it->second;
}

void Watchlist::save(std::ostream& out) const {
  for (const auto& [hash, e] : entries_) {
    nlohmann::json urls = e.known_urls;
    out << JsonLine()
               .str("content_hash", e.content_hash)
               .str("campaign_id", e.campaign_id)
               .raw("known_urls", urls.dump())
               .num("first_marked", e.first_marked)
               .done()
        << '\n';
  }
}

void Watchlist::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write watchlist " + path.string());
  out << provenance_line("watchlist", "") << '\n';
  save(out);
}

Watchlist Watchlist::load(std::istream& in) {
  Watchlist w;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty() || is_provenance_line(line)) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      WatchlistEntry e;
      e.content_hash = j.at("content_hash").get<std::string>();
      e.campaign_id = j.at("campaign_id").get<std::string>();
      for (const auto& u : j.at("known_urls")) e.known_urls.insert(u.get<std::string>());
      e.first_marked = j.at("first_marked").get<std::int64_t>();
      w.add(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw std::runtime_error(fmt::format("watchlist line {}: {}", n, ex.what()));
    }
  }
  return w;
}

Watchlist Watchlist::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open watchlist " + path.string());
  return load(in);
}

Watchlist build_watchlist(std::span<const Campaign> campaigns) {
  Watchlist w;
  for (const auto& c : campaigns) {
    WatchlistEntry e;
    e.content_hash = c.cluster.content_hash;
    e.campaign_id = c.campaign_id;
    for (const auto& [url, tally] : c.cluster.urls) e.known_urls.insert(url);
    std::int64_t marked = std::numeric_limits<std::int64_t>::max();
    for (const auto& [url, v] : c.verdicts) {
      if (v.confirmed()) marked = std::min(marked, v.checked_at);
    }
    e.first_marked = marked == std::numeric_limits<std::int64_t>::max() ? 0 : marked;
    w.add(std::move(e));
  }
  return w;
}

}  // namespace hashtriage

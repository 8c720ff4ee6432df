#include "hashtriage/insights.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hashtriage {

std::vector<BrandRule> load_brand_rules(std::istream& in) {
  std::vector<BrandRule> rules;
  try {
    const auto j = nlohmann::json::parse(in);
    if (!j.is_array()) throw std::runtime_error("brand rules must be a JSON array");
    for (const auto& item : j) {
      BrandRule r;
      r.brand = item.at("brand").get<std::string>();
      for (const auto& t : item.at("tokens")) {
        auto token = to_lower_ascii(t.get<std::string>());
        if (!token.empty()) r.tokens.push_back(std::move(token));
      }
      if (r.tokens.empty()) {
        throw std::runtime_error("brand rule '" + r.brand + "' has no tokens");
      }
      for (const auto& d : item.value("legitimate_domains", nlohmann::json::array())) {
        r.legitimate_domains.insert(to_lower_ascii(d.get<std::string>()));
      }
      rules.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("bad brand rules: ") + e.what());
  }
  return rules;
}

std::vector<BrandRule> load_brand_rules_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open brand rules " + path.string());
  return load_brand_rules(in);
}

std::filesystem::path default_brand_rules_path() {
  return std::filesystem::path(HASHTRIAGE_DATA_DIR) / "brand_rules.json";
}

std::vector<ImpersonationHit> brand_impersonation(std::span<const ParsedUrl> urls,
                                                  std::span<const BrandRule> rules) {
  std::vector<ImpersonationHit> hits;
  for (const auto& u : urls) {
    const std::string registrable = u.registrable_domain();
    for (const auto& rule : rules) {
      if (rule.legitimate_domains.contains(registrable)) continue;
      ImpersonationHit hit;
      for (const auto& token : rule.tokens) {
        const bool sub = u.subdomain.find(token) != std::string::npos;
        const bool dom = u.domain.find(token) != std::string::npos;
        if (!sub && !dom) continue;
        hit.matched_tokens.push_back(token);
        hit.in_subdomain |= sub;
        hit.in_domain |= dom;
      }
      if (hit.matched_tokens.empty()) continue;
      hit.url = recompose(u);
      hit.brand = rule.brand;
      hits.push_back(std::move(hit));
    }
  }
  return hits;
}

std::optional<Ratio> TlsSummary::ratio() const {
  if (http + https == 0) return std::nullopt;
  return Ratio{https, http + https};
}

TlsSummary tls_summary(std::span<const ParsedUrl> urls) {
  TlsSummary s;
  for (const auto& u : urls) {
    if (u.scheme == "https") ++s.https;
    else if (u.scheme == "http") ++s.http;
    else ++s.other;
  }
  return s;
}

std::map<std::string, std::uint64_t> extension_census(std::span<const ParsedUrl> urls) {
  std::map<std::string, std::uint64_t> census;
  for (const auto& u : urls) {
    if (auto ext = extract_extension(u)) ++census[*ext];
  }
  return census;
}

bool torrent_pointer_scan(std::string_view url) {
  const std::string lower = to_lower_ascii(url);
  const std::string_view view = lower;
  if (view.find("magnet:?xt=") != std::string_view::npos) return true;
  if (view.find("/announce") != std::string_view::npos) return true;
  const auto path_end = view.find_first_of("?#");
  return view.substr(0, path_end).ends_with(".torrent");
}

ToolNameTable ToolNameTable::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    tokens.emplace_back(t);
  }
  return from_tokens(tokens);
}

ToolNameTable ToolNameTable::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tool table " + path.string());
  return load(in);
}

ToolNameTable ToolNameTable::from_tokens(const std::vector<std::string>& tokens) {
  ToolNameTable table;
  for (const auto& raw : tokens) {
    std::string t = to_lower_ascii(trim(raw));
    if (t.empty()) continue;
    if (std::find(table.tokens_.begin(), table.tokens_.end(), t) == table.tokens_.end()) {
      table.tokens_.push_back(std::move(t));
    }
  }
  if (table.tokens_.empty()) throw std::invalid_argument("empty tool table");
  return table;
}

std::filesystem::path default_tool_table_path() {
  return std::filesystem::path(HASHTRIAGE_DATA_DIR) / "tool_names.txt";
}

std::vector<std::string> embedded_command_scan(std::string_view raw_url,
                                               const ToolNameTable& table) {
  const std::string text = to_lower_ascii(percent_decode_once(raw_url));
  std::vector<std::pair<std::size_t, const std::string*>> found;
  for (const auto& token : table.tokens()) {
    for (auto pos = text.find(token); pos != std::string::npos;
         pos = text.find(token, pos + 1)) {
      found.emplace_back(pos, &token);
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.second->size() != b.second->size()) return a.second->size() > b.second->size();
    return *a.second < *b.second;
  });
  std::vector<std::string> out;
  out.reserve(found.size());
  for (const auto& [pos, token] : found) out.push_back(*token);
  return out;
}

std::int64_t day_index(std::int64_t t) {
  return t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
}

int chunk_of_day(std::int64_t t) {
  const std::int64_t second_of_day = t - day_index(t) * 86400;
  return static_cast<int>(second_of_day / (8 * 3600));
}

std::uint64_t TemporalProfile::total() const {
  std::uint64_t n = 0;
  for (const auto& [day, counts] : buckets) {
    for (auto c : counts) n += c;
  }
  return n;
}

void TemporalAccumulator::add(std::int64_t scan_time) {
  ++buckets_[day_index(scan_time)][static_cast<std::size_t>(chunk_of_day(scan_time))];
}

TemporalAccumulator& TemporalAccumulator::merge(const TemporalAccumulator& other) {
  for (const auto& [day, counts] : other.buckets_) {
    auto& mine = buckets_[day];
    for (int i = 0; i < kChunksPerDay; ++i) mine[i] += counts[i];
  }
  return *this;
}

std::optional<double> ols_slope(std::span<const double> y) {
  if (y.size() < 2) return std::nullopt;
  const double n = static_cast<double>(y.size());
  const double mean_x = (n - 1) / 2;
  double mean_y = 0;
  for (double v : y) mean_y += v;
  mean_y /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dx = static_cast<double>(i) - mean_x;
    sxy += dx * (y[i] - mean_y);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

TemporalProfile TemporalAccumulator::finish() const {
  TemporalProfile p;
  p.buckets = buckets_;
  if (buckets_.empty()) return p;

  const std::int64_t first = buckets_.begin()->first;
  const std::int64_t last = buckets_.rbegin()->first;
  const std::int64_t days = last - first + 1;
  const std::int64_t weeks = (days + 6) / 7;
  std::vector<double> totals(static_cast<std::size_t>(weeks), 0.0);
  for (const auto& [day, counts] : buckets_) {
    double n = 0;
    for (auto c : counts) n += static_cast<double>(c);
    totals[static_cast<std::size_t>((day - first) / 7)] += n;
  }
  for (std::int64_t w = 0; w < weeks; ++w) {
    // The final week may be partial; days without records count as zero.
    const std::int64_t days_in_week = std::min<std::int64_t>(7, days - 7 * w);
    p.weekly_means.push_back(totals[static_cast<std::size_t>(w)] /
                             static_cast<double>(days_in_week));
  }
  p.weekly_slope = ols_slope(p.weekly_means);
  return p;
}

TemporalProfile temporal_profile(std::span<const std::int64_t> scan_times) {
  TemporalAccumulator acc;
  for (auto t : scan_times) acc.add(t);
  return acc.finish();
}

}  // namespace hashtriage

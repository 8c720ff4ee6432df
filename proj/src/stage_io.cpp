#include "hashtriage/stage_io.hpp"

#include <istream>
#include <ostream>

#include <fmt/format.h>

#include <nlohmann/json.hpp>

namespace hashtriage {

namespace {

using nlohmann::json;

json parse_line(std::string_view line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw StageFormatError(e.what(), line_no);
  }
}

template <typename Fn>
auto guarded(std::size_t line_no, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw StageFormatError(e.what(), line_no);
  }
}

// Shortest round-trip text for a double.
std::string num_text(double v) { return fmt::format("{}", v); }

Ratio ratio_from(const json& j) {
  return {j.at("num").get<std::uint64_t>(), j.at("den").get<std::uint64_t>()};
}

std::string verdict_status_name(VerdictStatus s) {
  return s == VerdictStatus::kUnknown ? "unknown" : "checked";
}

}  // namespace

void for_each_data_line(std::istream& in,
                        const std::function<void(std::string_view, std::size_t)>& fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty() || is_provenance_line(line)) continue;
    fn(line, n);
  }
  if (in.bad()) throw std::runtime_error("read error after line " + std::to_string(n));
}

std::string ratio_percent_json(const Ratio& r) {
  return JsonLine()
      .unum("num", r.num)
      .unum("den", r.den)
      .raw("percent", r.den == 0 ? "null" : r.render_percent(2))
      .done();
}

std::string ratio_value_json(const Ratio& r, int decimals) {
  return JsonLine()
      .unum("num", r.num)
      .unum("den", r.den)
      .raw("value", r.den == 0 ? "null" : r.render(decimals))
      .done();
}

// ---- clusters ---------------------------------------------------------------

std::string cluster_to_json(const Cluster& c) {
  std::string urls = "[";
  bool first = true;
  for (const auto& [url, tally] : c.urls) {
    if (!first) urls += ',';
    first = false;
    urls += JsonLine()
                .str("url", url)
                .unum("submissions", tally.submissions)
                .unum("max_positives", tally.max_positives)
                .done();
  }
  urls += ']';
  return JsonLine()
      .str("content_hash", c.content_hash)
      .unum("submission_count", c.submission_count)
      .unum("unique_url_count", c.unique_url_count())
      .unum("positives_sum", c.positives_sum)
      .raw("mean_positive_score", c.mean_positive_score().render(6))
      .str("class", to_string(classify_cluster(c)))
      .raw("urls", urls)
      .done();
}

Cluster cluster_from_json(std::string_view line, std::size_t line_no) {
  const json j = parse_line(line, line_no);
  return guarded(line_no, [&] {
    Cluster c;
    c.content_hash = j.at("content_hash").get<std::string>();
    c.submission_count = j.at("submission_count").get<std::uint64_t>();
    c.positives_sum = j.at("positives_sum").get<std::uint64_t>();
    for (const auto& u : j.at("urls")) {
      c.urls[u.at("url").get<std::string>()] = {u.at("submissions").get<std::uint64_t>(),
                                                u.at("max_positives").get<std::uint32_t>()};
    }
    if (c.urls.size() != j.at("unique_url_count").get<std::uint64_t>()) {
      throw StageFormatError("unique_url_count disagrees with urls", line_no);
    }
    return c;
  });
}

void write_clusters(std::ostream& out, std::span<const Cluster> clusters) {
  for (const auto& c : clusters) out << cluster_to_json(c) << '\n';
}

ClusterTable read_clusters(std::istream& in) {
  ClusterTable table;
  for_each_data_line(in, [&](std::string_view line, std::size_t n) {
    table.push_back(cluster_from_json(line, n));
  });
  return table;
}

// ---- campaigns ----------------------------------------------------------------

std::string campaign_to_json(const Campaign& c) {
  std::string urls = "[";
  bool first = true;
  for (const auto& [url, tally] : c.cluster.urls) {
    if (!first) urls += ',';
    first = false;
    JsonLine u;
    u.str("url", url).unum("submissions", tally.submissions).unum("max_positives", tally.max_positives);
    const auto v = c.verdicts.find(url);
    if (v != c.verdicts.end()) {
      u.str("threat_types", v->second.threats.to_string())
          .str("status", verdict_status_name(v->second.status))
          .num("checked_at", v->second.checked_at);
    }
    urls += u.done();
  }
  urls += ']';
  return JsonLine()
      .str("campaign_id", c.campaign_id)
      .str("content_hash", c.cluster.content_hash)
      .str("kind", to_string(c.kind))
      .unum("submission_count", c.cluster.submission_count)
      .unum("positives_sum", c.cluster.positives_sum)
      .unum("unique_url_count", c.cluster.unique_url_count())
      .raw("urls", urls)
      .done();
}

Campaign campaign_from_json(std::string_view line, std::size_t line_no) {
  const json j = parse_line(line, line_no);
  return guarded(line_no, [&] {
    Campaign c;
    c.campaign_id = j.at("campaign_id").get<std::string>();
    c.cluster.content_hash = j.at("content_hash").get<std::string>();
    const auto kind = parse_campaign_kind(j.at("kind").get<std::string>());
    if (!kind) throw StageFormatError("unknown campaign kind", line_no);
    c.kind = *kind;
    c.cluster.submission_count = j.at("submission_count").get<std::uint64_t>();
    c.cluster.positives_sum = j.at("positives_sum").get<std::uint64_t>();
    for (const auto& u : j.at("urls")) {
      const auto url = u.at("url").get<std::string>();
      c.cluster.urls[url] = {u.at("submissions").get<std::uint64_t>(),
                             u.at("max_positives").get<std::uint32_t>()};
      if (!u.contains("status")) continue;
      Verdict v;
      v.url = url;
      const auto threats = ThreatSet::parse(u.at("threat_types").get<std::string>());
      if (!threats) throw StageFormatError("bad threat_types", line_no);
      v.threats = *threats;
      v.status = u.at("status").get<std::string>() == "unknown" ? VerdictStatus::kUnknown
                                                                 : VerdictStatus::kChecked;
      v.checked_at = u.at("checked_at").get<std::int64_t>();
      c.verdicts.emplace(url, std::move(v));
    }
    return c;
  });
}

std::vector<Campaign> read_campaigns(std::istream& in) {
  std::vector<Campaign> out;
  for_each_data_line(in, [&](std::string_view line, std::size_t n) {
    out.push_back(campaign_from_json(line, n));
  });
  return out;
}

// ---- metrics ------------------------------------------------------------------

std::string metrics_to_json(const Campaign& c) {
  if (!c.metrics) throw std::invalid_argument("campaign " + c.campaign_id + " has no metrics");
  const CampaignMetrics& m = *c.metrics;
  const std::string length = JsonLine()
                                 .unum("count", m.url_length.count)
                                 .raw("mean", num_text(m.url_length.mean))
                                 .raw("stddev", num_text(m.url_length.stddev))
                                 .raw("q1", num_text(m.url_length.q1))
                                 .raw("median", num_text(m.url_length.median))
                                 .raw("q3", num_text(m.url_length.q3))
                                 .done();
  return JsonLine()
      .str("campaign_id", c.campaign_id)
      .str("content_hash", c.cluster.content_hash)
      .str("kind", to_string(c.kind))
      .unum("size", m.size)
      .unum("submissions", m.submissions)
      .raw("source_distribution", ratio_percent_json(m.source_distribution))
      .raw("mu", num_text(m.mu))
      .raw("footprint", num_text(m.footprint))
      .raw("domain_diversity", ratio_percent_json(m.domain_diversity))
      .raw("subdomain_diversity", ratio_percent_json(m.subdomain_diversity))
      .raw("gsb_detection_rate", ratio_percent_json(m.gsb_detection_rate))
      .raw("mean_vendor_flags", ratio_value_json(m.mean_vendor_flags, 6))
      .raw("url_length", length)
      .unum("unknown_verdicts", m.unknown_verdicts)
      .done();
}

MetricsLine metrics_from_json(std::string_view line, std::size_t line_no) {
  const json j = parse_line(line, line_no);
  return guarded(line_no, [&] {
    MetricsLine out;
    out.campaign_id = j.at("campaign_id").get<std::string>();
    out.content_hash = j.at("content_hash").get<std::string>();
    const auto kind = parse_campaign_kind(j.at("kind").get<std::string>());
    if (!kind) throw StageFormatError("unknown campaign kind", line_no);
    out.kind = *kind;
    CampaignMetrics& m = out.metrics;
    m.size = j.at("size").get<std::uint64_t>();
    m.submissions = j.at("submissions").get<std::uint64_t>();
    m.source_distribution = ratio_from(j.at("source_distribution"));
    m.mu = j.at("mu").get<double>();
    m.footprint = j.at("footprint").get<double>();
    m.domain_diversity = ratio_from(j.at("domain_diversity"));
    m.subdomain_diversity = ratio_from(j.at("subdomain_diversity"));
    m.gsb_detection_rate = ratio_from(j.at("gsb_detection_rate"));
    m.mean_vendor_flags = ratio_from(j.at("mean_vendor_flags"));
    const auto& l = j.at("url_length");
    m.url_length.count = l.at("count").get<std::size_t>();
    m.url_length.mean = l.at("mean").get<double>();
    m.url_length.stddev = l.at("stddev").get<double>();
    m.url_length.q1 = l.at("q1").get<double>();
    m.url_length.median = l.at("median").get<double>();
    m.url_length.q3 = l.at("q3").get<double>();
    m.unknown_verdicts = j.at("unknown_verdicts").get<std::uint64_t>();
    return out;
  });
}

namespace {

std::string totals_json(const KindTotals& t) {
  return JsonLine()
      .unum("campaigns", t.campaigns)
      .unum("urls", t.urls)
      .unum("submissions", t.submissions)
      .done();
}

std::string pct(double fraction) { return render_fixed(fraction * 100.0, 2); }

std::string means_json(const MetricMeans& m) {
  return JsonLine()
      .unum("campaigns", m.campaigns)
      .raw("size", render_fixed(m.size, 2))
      .raw("submissions", render_fixed(m.submissions, 2))
      .raw("footprint", render_fixed(m.footprint, 2))
      .raw("source_distribution_percent", pct(m.source_distribution))
      .raw("domain_diversity_percent", pct(m.domain_diversity))
      .raw("subdomain_diversity_percent", pct(m.subdomain_diversity))
      .raw("gsb_detection_rate_percent", pct(m.gsb_detection_rate))
      .raw("mean_vendor_flags", render_fixed(m.mean_vendor_flags, 2))
      .raw("url_length_mean", render_fixed(m.url_length_mean, 2))
      .raw("url_length_mean_stddev", render_fixed(m.url_length_mean_stddev, 2))
      .done();
}

}  // namespace

std::string summary_to_json(const CorpusSummary& s) {
  const std::string totals = JsonLine()
                                 .raw("single_url", totals_json(s.single_url))
                                 .raw("multi_url", totals_json(s.multi_url))
                                 .raw("total", totals_json(s.total))
                                 .done();
  const std::string means = JsonLine()
                                .raw("all", means_json(s.all))
                                .raw("small", means_json(s.small))
                                .raw("large", means_json(s.large))
                                .done();
  return JsonLine()
      .raw("totals", totals)
      .unum("size_threshold", s.size_threshold)
      .raw("means", means)
      .done();
}

// ---- insights -----------------------------------------------------------------

CampaignInsights compute_insights(const Campaign& c, const SuffixTable& table,
                                  std::span<const BrandRule> rules,
                                  const ToolNameTable& tools) {
  CampaignInsights out;
  out.campaign_id = c.campaign_id;
  out.content_hash = c.cluster.content_hash;
  out.urls = c.cluster.unique_url_count();
  std::vector<ParsedUrl> parsed;
  parsed.reserve(c.cluster.urls.size());
  for (const auto& [url, tally] : c.cluster.urls) {
    if (torrent_pointer_scan(url)) ++out.torrent_pointers;
    auto tokens = embedded_command_scan(url, tools);
    if (!tokens.empty()) out.command_matches.emplace(url, std::move(tokens));
    if (auto p = parse_url(url, table)) parsed.push_back(std::move(*p));
  }
  out.tls = tls_summary(parsed);
  out.extensions = extension_census(parsed);
  out.brand_hits = brand_impersonation(parsed, rules);
  return out;
}

std::string insights_to_json(const CampaignInsights& i) {
  JsonLine tls;
  tls.unum("https", i.tls.https).unum("http", i.tls.http).unum("other", i.tls.other);
  if (const auto r = i.tls.ratio()) {
    tls.raw("ratio_percent", r->render_percent(2));
  } else {
    tls.null("ratio_percent");
  }

  JsonLine ext;
  for (const auto& [name, n] : i.extensions) ext.unum(name, n);

  std::string hits = "[";
  for (std::size_t k = 0; k < i.brand_hits.size(); ++k) {
    const auto& h = i.brand_hits[k];
    if (k) hits += ',';
    hits += JsonLine()
                .str("url", h.url)
                .str("brand", h.brand)
                .raw("tokens", json(h.matched_tokens).dump())
                .boolean("in_subdomain", h.in_subdomain)
                .boolean("in_domain", h.in_domain)
                .done();
  }
  hits += ']';

  std::string commands = "[";
  bool first = true;
  for (const auto& [url, tokens] : i.command_matches) {
    if (!first) commands += ',';
    first = false;
    commands += JsonLine().str("url", url).raw("tokens", json(tokens).dump()).done();
  }
  commands += ']';

  const Ratio torrent{i.torrent_pointers, i.urls};
  return JsonLine()
      .str("campaign_id", i.campaign_id)
      .str("content_hash", i.content_hash)
      .unum("urls", i.urls)
      .raw("tls", tls.done())
      .raw("torrent_pointers", ratio_percent_json(torrent))
      .raw("extensions", ext.done())
      .raw("brand_impersonation", hits)
      .raw("embedded_commands", commands)
      .done();
}

// ---- report CSVs ----------------------------------------------------------------

void write_histogram_csv(std::ostream& out,
                         const std::map<std::uint64_t, std::uint64_t>& histogram) {
  out << "submission_count,clusters\n";
  for (const auto& [size, n] : histogram) out << size << ',' << n << '\n';
}

void write_length_csv(std::ostream& out,
                      const std::map<std::uint64_t, std::uint64_t>& lengths) {
  out << "url_length,urls\n";
  for (const auto& [len, n] : lengths) out << len << ',' << n << '\n';
}

void write_temporal_csv(std::ostream& out, const TemporalProfile& profile) {
  out << "date,chunk,submissions\n";
  static constexpr const char* kChunkNames[] = {"00-08", "08-16", "16-24"};
  for (const auto& [day, counts] : profile.buckets) {
    const std::string date = format_rfc3339(day * 86400).substr(0, 10);
    for (int c = 0; c < kChunksPerDay; ++c) {
      out << date << ',' << kChunkNames[c] << ',' << counts[static_cast<std::size_t>(c)] << '\n';
    }
  }
}

}  // namespace hashtriage

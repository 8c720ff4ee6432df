#include "hashtriage/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <unordered_set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hashtriage/clusterer.hpp"
#include "hashtriage/http_provider.hpp"
#include "hashtriage/ingest.hpp"
#include "hashtriage/insights.hpp"
#include "hashtriage/metrics.hpp"
#include "hashtriage/stage_io.hpp"
#include "hashtriage/synth.hpp"
#include "hashtriage/urlkit.hpp"
#include "hashtriage/verifier.hpp"
#include "hashtriage/watchlist.hpp"

namespace hashtriage::cli {

namespace {

constexpr std::size_t kMaxReportedErrors = 20;

// Fatal, non-usage failure; maps to exit code 1.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An output path or "-" for the caller's stream.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path == "-") {
      os_ = &fallback;
      return;
    }
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw RunError("cannot write " + path);
    os_ = &file_;
  }
  std::ostream& operator*() { return *os_; }
  void close(const std::string& what) {
    os_->flush();
    if (!*os_) throw RunError("write failed: " + what);
  }

 private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

class Input {
 public:
  explicit Input(const std::string& path) {
    if (path == "-") {
      is_ = &std::cin;
      return;
    }
    file_.open(path, std::ios::binary);
    if (!file_) throw RunError("cannot open " + path);
    is_ = &file_;
  }
  std::istream& operator*() { return *is_; }

 private:
  std::ifstream file_;
  std::istream* is_ = nullptr;
};

struct Common {
  unsigned threads = 1;
  std::string psl;
};

SuffixTable load_psl(const std::string& path) {
  return SuffixTable::load_file(path.empty() ? default_suffix_list_path()
                                             : std::filesystem::path(path));
}

InputFormat pick_format(const std::string& name, const std::string& path) {
  if (!name.empty()) return *parse_format_name(name);
  return path == "-" ? InputFormat::kJsonLines : format_for_path(path);
}

std::int64_t parse_time_arg(const std::string& text) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc() && p == text.data() + text.size()) return v;
  if (auto t = parse_rfc3339(text)) return *t;
  throw CLI::ValidationError("--as-of", "expected epoch seconds or RFC 3339: " + text);
}

std::string stats_json(std::string_view stage, const IngestStats& s) {
  return JsonLine()
      .str("stage", stage)
      .unum("total_lines", s.total_lines)
      .unum("parsed_ok", s.parsed_ok)
      .unum("missing_hash", s.missing_hash)
      .unum("malformed", s.malformed)
      .done();
}

ErrorSink error_printer(std::ostream& err, std::size_t& shown) {
  return [&err, &shown](const ParseError& e) {
    if (shown++ < kMaxReportedErrors) err << "hashtriage: skipped " << e.to_string() << '\n';
  };
}

// ---- ingest -------------------------------------------------------------------

struct IngestArgs {
  std::string input = "-";
  std::string format;
  std::string out = "-";
  std::string out_format = "json";
};

int do_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  Input in(a.input);
  Output o(a.out, out);
  const bool csv = a.out_format == "csv";
  const std::string header = provenance_line("ingest", "out_format=" + a.out_format);
  if (csv) {
    *o << "# " << header << '\n' << kCsvHeader << '\n';
  } else {
    *o << header << '\n';
  }
  std::size_t shown = 0;
  const IngestStats stats = ingest_stream(
      *in, pick_format(a.format, a.input),
      [&](SubmissionRecord&& r) {
        *o << (csv ? serialize_record_csv(r) : serialize_record(r)) << '\n';
      },
      error_printer(err, shown));
  o.close(a.out);
  err << stats_json("ingest", stats) << '\n';
  return kExitOk;
}

// ---- cluster ------------------------------------------------------------------

struct ClusterArgs {
  std::string input = "-";
  std::string format;
  std::string out = "-";
  bool external = false;
  std::string memory_budget = "256M";
  std::string tmp_dir;
};

int do_cluster(const ClusterArgs& a, const Common& common, std::ostream& out,
               std::ostream& err) {
  std::size_t budget = 0;
  if (!parse_byte_size(a.memory_budget, budget)) {
    throw CLI::ValidationError("--memory-budget", "bad size: " + a.memory_budget);
  }
  Input in(a.input);
  Output o(a.out, out);
  *o << provenance_line("cluster", "") << '\n';

  std::array<std::uint64_t, 3> classes{};
  std::uint64_t clusters = 0;
  auto emit = [&](const Cluster& c) {
    ++clusters;
    ++classes[static_cast<std::size_t>(classify_cluster(c))];
    *o << cluster_to_json(c) << '\n';
  };

  std::size_t shown = 0;
  const InputFormat fmt_in = pick_format(a.format, a.input);
  IngestStats stats;
  if (a.external) {
    ExternalClusterOptions opts;
    opts.memory_budget_bytes = budget;
    if (!a.tmp_dir.empty()) opts.temp_dir = a.tmp_dir;
    ExternalClusterer ext(opts);
    stats = ingest_stream(*in, fmt_in, [&](SubmissionRecord&& r) { ext.add(r); },
                          error_printer(err, shown));
    ext.finish([&](Cluster&& c) { emit(c); });
    err << fmt::format("{{\"stage\":\"cluster\",\"runs\":{}}}\n", ext.run_count());
  } else if (common.threads > 1) {
    std::vector<SubmissionRecord> records;
    stats = ingest_stream(*in, fmt_in,
                          [&](SubmissionRecord&& r) { records.push_back(std::move(r)); },
                          error_printer(err, shown));
    for (const auto& c : build_clusters_parallel(records, common.threads)) emit(c);
  } else {
    ClusterBuilder builder;
    stats = ingest_stream(*in, fmt_in, [&](SubmissionRecord&& r) { builder.add(r); },
                          error_printer(err, shown));
    for (const auto& c : std::move(builder).finish()) emit(c);
  }
  o.close(a.out);
  err << stats_json("ingest", stats) << '\n';
  err << JsonLine()
             .str("stage", "cluster")
             .unum("clusters", clusters)
             .unum("singleton", classes[0])
             .unum("unflagged", classes[1])
             .unum("flagged", classes[2])
             .done()
      << '\n';
  return kExitOk;
}

// ---- verify -------------------------------------------------------------------

struct VerifyArgs {
  std::string clusters = "-";
  std::string out = "-";
  std::string provider = "file";
  std::string blocklist;
  std::string endpoint;
  std::string rate = "10/1s";
  unsigned max_inflight = 4;
  std::string journal;
  std::string as_of;
};

std::unique_ptr<VerdictProvider> make_provider(const VerifyArgs& a) {
  if (a.provider == "file") {
    if (a.blocklist.empty()) throw CLI::RequiredError("--blocklist");
    return std::make_unique<BlocklistProvider>(BlocklistProvider::load_file(a.blocklist));
  }
  if (a.provider == "mock") {
    std::map<std::string, ThreatSet> verdicts;
    if (!a.blocklist.empty()) verdicts = BlocklistProvider::load_file(a.blocklist).entries();
    return std::make_unique<ScriptedProvider>(std::move(verdicts));
  }
  if (a.provider == "http") {
    if (a.endpoint.empty()) throw CLI::RequiredError("--endpoint");
    const auto budget = RateBudget::parse(a.rate);
    if (!budget) throw CLI::ValidationError("--rate", "expected N/INTERVAL: " + a.rate);
    return std::make_unique<HttpVerdictProvider>(make_http_transport(a.endpoint), *budget);
  }
  throw CLI::ValidationError("--provider", "unknown provider " + a.provider);
}

int do_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  if (!RateBudget::parse(a.rate)) {
    throw CLI::ValidationError("--rate", "expected N/INTERVAL: " + a.rate);
  }
  auto provider = make_provider(a);
  LookupOptions opts;
  opts.max_inflight = std::max(1u, a.max_inflight);
  if (!a.as_of.empty()) {
    const std::int64_t t = parse_time_arg(a.as_of);
    opts.clock = [t] { return t; };
  }
  std::unique_ptr<VerdictCache> journal;
  if (!a.journal.empty()) journal = std::make_unique<VerdictCache>(a.journal);
  VerdictLookup lookup(*provider, opts, journal.get());

  Input in(a.clusters);
  Output o(a.out, out);
  *o << provenance_line("verify", "provider=" + a.provider) << '\n';

  std::uint64_t flagged = 0, confirmed = 0, not_confirmed = 0, indeterminate = 0;
  for_each_data_line(*in, [&](std::string_view line, std::size_t n) {
    const Cluster c = cluster_from_json(line, n);
    if (classify_cluster(c) != ClusterClass::kFlagged) return;
    ++flagged;
    const VerifyOutcome v = verify_cluster(c, lookup);
    switch (v.status) {
      case VerifyStatus::kConfirmed:
        ++confirmed;
        *o << campaign_to_json(*v.campaign) << '\n';
        break;
      case VerifyStatus::kNotConfirmed:
        ++not_confirmed;
        break;
      case VerifyStatus::kIndeterminate:
        ++indeterminate;
        break;
    }
  });
  o.close(a.out);
  const LookupStats s = lookup.stats();
  err << JsonLine()
             .str("stage", "verify")
             .unum("flagged", flagged)
             .unum("campaigns", confirmed)
             .unum("not_confirmed", not_confirmed)
             .unum("indeterminate", indeterminate)
             .unum("provider_calls", s.provider_calls)
             .unum("cache_hits", s.cache_hits)
             .unum("retries", s.retries)
             .unum("unknown", s.unknown)
             .done()
      << '\n';
  return kExitOk;
}

// ---- metrics ------------------------------------------------------------------

struct MetricsArgs {
  std::string campaigns = "-";
  std::string out = "-";
  std::string summary;
  double mu = kDefaultMu;
  std::uint64_t size_threshold = 100;
};

int do_metrics(const MetricsArgs& a, const Common& common, std::ostream& out,
               std::ostream& err) {
  const SuffixTable psl = load_psl(common.psl);
  Input in(a.campaigns);
  Output o(a.out, out);
  const std::string config = fmt::format("mu={};psl={}", a.mu, psl.snapshot_id());
  *o << provenance_line("metrics", config) << '\n';
  MetricsAggregator agg(a.size_threshold);
  std::uint64_t n = 0;
  for_each_data_line(*in, [&](std::string_view line, std::size_t no) {
    Campaign c = campaign_from_json(line, no);
    c.metrics = compute_campaign_metrics(c, psl, a.mu);
    agg.add(c.kind, *c.metrics);
    *o << metrics_to_json(c) << '\n';
    ++n;
  });
  o.close(a.out);
  if (!a.summary.empty()) {
    Output s(a.summary, out);
    *s << provenance_line("metrics", config) << '\n' << summary_to_json(agg.summary()) << '\n';
    s.close(a.summary);
  }
  err << JsonLine().str("stage", "metrics").unum("campaigns", n).done() << '\n';
  return kExitOk;
}

// ---- insights -----------------------------------------------------------------

struct InsightsArgs {
  std::string campaigns = "-";
  std::string out = "-";
  std::string brand_rules;
  std::string tools;
};

struct InsightTables {
  std::vector<BrandRule> rules;
  ToolNameTable tools;
};

InsightTables load_insight_tables(const std::string& brand_rules, const std::string& tools) {
  return {load_brand_rules_file(brand_rules.empty() ? default_brand_rules_path()
                                                    : std::filesystem::path(brand_rules)),
          ToolNameTable::load_file(tools.empty() ? default_tool_table_path()
                                                 : std::filesystem::path(tools))};
}

int do_insights(const InsightsArgs& a, const Common& common, std::ostream& out,
                std::ostream& err) {
  const SuffixTable psl = load_psl(common.psl);
  const InsightTables t = load_insight_tables(a.brand_rules, a.tools);
  Input in(a.campaigns);
  Output o(a.out, out);
  *o << provenance_line("insights", "psl=" + psl.snapshot_id()) << '\n';
  std::uint64_t n = 0, with_commands = 0, with_brands = 0;
  for_each_data_line(*in, [&](std::string_view line, std::size_t no) {
    const Campaign c = campaign_from_json(line, no);
    const CampaignInsights ins = compute_insights(c, psl, t.rules, t.tools);
    ++n;
    if (!ins.command_matches.empty()) ++with_commands;
    if (!ins.brand_hits.empty()) ++with_brands;
    *o << insights_to_json(ins) << '\n';
  });
  o.close(a.out);
  err << JsonLine()
             .str("stage", "insights")
             .unum("campaigns", n)
             .unum("with_brand_impersonation", with_brands)
             .unum("with_embedded_commands", with_commands)
             .done()
      << '\n';
  return kExitOk;
}

// ---- watch --------------------------------------------------------------------

struct WatchArgs {
  std::string records = "-";
  std::string format;
  std::string watchlist;
  std::string campaigns;
  std::string save;
  std::string out = "-";
};

int do_watch(const WatchArgs& a, std::ostream& out, std::ostream& err) {
  if (a.watchlist.empty() == a.campaigns.empty()) {
    throw CLI::ValidationError("watch", "give exactly one of --watchlist or --campaigns");
  }
  Watchlist w;
  if (!a.watchlist.empty()) {
    w = Watchlist::load_file(a.watchlist);
  } else {
    Input in(a.campaigns);
    const auto campaigns = read_campaigns(*in);
    w = build_watchlist(campaigns);
  }
  Input in(a.records);
  Output o(a.out, out);
  *o << provenance_line("watch", "") << '\n';
  std::uint64_t alerts = 0, new_urls = 0;
  std::size_t shown = 0;
  const IngestStats stats = ingest_stream(
      *in, pick_format(a.format, a.records),
      [&](SubmissionRecord&& r) {
        if (auto alert = w.check_submission(r)) {
          ++alerts;
          if (alert->novelty == Novelty::kNewUrl) ++new_urls;
          *o << alert_to_json(*alert) << '\n';
        }
      },
      error_printer(err, shown));
  o.close(a.out);
  if (!a.save.empty()) w.save_file(a.save);
  err << stats_json("ingest", stats) << '\n';
  err << JsonLine()
             .str("stage", "watch")
             .unum("watched_hashes", w.size())
             .unum("alerts", alerts)
             .unum("new_url_alerts", new_urls)
             .done()
      << '\n';
  return kExitOk;
}

// ---- synth --------------------------------------------------------------------

struct SynthArgs {
  SynthConfig cfg;
  std::uint64_t giant = 0;
  std::string out;
  std::string fixture;
};

void write_records(const std::filesystem::path& path, std::string_view stage,
                   const std::vector<SubmissionRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RunError("cannot write " + path.string());
  out << provenance_line(stage, "") << '\n';
  for (const auto& r : records) out << serialize_record(r) << '\n';
  if (!out) throw RunError("write failed: " + path.string());
}

void write_blocklist(const std::filesystem::path& path, const std::vector<std::string>& urls,
                     ThreatSet threats) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RunError("cannot write " + path.string());
  out << "# " << provenance_line("synth", "") << '\n';
  for (const auto& u : urls) out << format_blocklist_line(u, threats) << '\n';
}

int do_fixture(const SynthArgs& a, std::ostream& err) {
  const std::filesystem::path dir = a.out;
  std::filesystem::create_directories(dir);
  const ThreatSet se(ThreatSet::kSocialEngineering);
  if (a.fixture == "tls") {
    write_records(dir / "records.jsonl", "synth", tls_campaign_fixture());
    // Confirm every URL so the whole fixture becomes one campaign.
    std::set<std::string> urls;
    for (const auto& r : tls_campaign_fixture()) urls.insert(normalize_url(r.url));
    write_blocklist(dir / "blocklist.tsv", {urls.begin(), urls.end()},
                    ThreatSet(ThreatSet::kMalware));
  } else if (a.fixture == "apple") {
    write_records(dir / "records.jsonl", "synth", apple_campaign_fixture());
    write_blocklist(dir / "blocklist.tsv", apple_campaign_blocklisted(), se);
  } else if (a.fixture == "replay") {
    const ReplayFixture f = replay_fixture();
    write_records(dir / "records.jsonl", "synth", f.before);
    write_records(dir / "replay.jsonl", "synth", f.after);
    write_blocklist(dir / "blocklist.tsv", {f.first_url}, se);
    err << JsonLine().str("fixture", "replay").num("marked_at", f.marked_at).done() << '\n';
  } else if (a.fixture == "largest") {
    Campaign c;
    c.cluster = planted_cluster(std::string(64, 'a'), 1391080, 8584120, 8584120);
    c.campaign_id = campaign_id_for(c.cluster.content_hash);
    c.kind = CampaignKind::kMultiUrl;
    for (const auto& [url, tally] : c.cluster.urls) {
      c.verdicts.emplace(url, Verdict{url, c.verdicts.empty() ? ThreatSet(ThreatSet::kMalware)
                                                              : ThreatSet{},
                                      0, VerdictStatus::kChecked});
    }
    std::ofstream out(dir / "campaigns.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw RunError("cannot write campaigns.jsonl");
    out << provenance_line("synth", "fixture=largest") << '\n' << campaign_to_json(c) << '\n';
    if (!out) throw RunError("write failed: campaigns.jsonl");
  } else {
    throw CLI::ValidationError("--fixture", "unknown fixture " + a.fixture);
  }
  err << JsonLine().str("stage", "synth").str("fixture", a.fixture).done() << '\n';
  return kExitOk;
}

int do_synth(SynthArgs a, std::ostream& err) {
  if (!a.fixture.empty()) return do_fixture(a, err);
  if (a.giant > 0) a.cfg.giant_cluster_size = a.giant;
  const SynthOutputs paths = write_corpus(a.cfg, a.out);
  std::ifstream in(paths.manifest);
  const Manifest m = read_manifest(in);
  err << JsonLine()
             .str("stage", "synth")
             .unum("seed", a.cfg.seed)
             .unum("records", m.records)
             .unum("missing_hash", m.missing_hash)
             .unum("clusters", m.clusters.size())
             .unum("campaigns", m.campaign_count())
             .done()
      << '\n';
  return kExitOk;
}

// ---- report -------------------------------------------------------------------

struct ReportArgs {
  std::string records;
  std::string format;
  std::string clusters;
  std::string campaigns;
  std::string out;
  std::string brand_rules;
  std::string tools;
  double mu = kDefaultMu;
  std::uint64_t size_threshold = 100;
};

int do_report(const ReportArgs& a, const Common& common, std::ostream& err) {
  const SuffixTable psl = load_psl(common.psl);
  const std::filesystem::path dir = a.out;
  std::filesystem::create_directories(dir);
  const std::string config = fmt::format("mu={};psl={};size_threshold={}", a.mu,
                                         psl.snapshot_id(), a.size_threshold);
  const std::string header = provenance_line("report", config);

  // Campaign metrics, insights and URL lengths.
  MetricsAggregator agg(a.size_threshold);
  std::map<std::uint64_t, std::uint64_t> lengths;
  std::unordered_set<std::string> campaign_hashes;
  {
    std::vector<Campaign> campaigns;
    if (!a.campaigns.empty()) {
      Input in(a.campaigns);
      campaigns = read_campaigns(*in);
    }
    std::ofstream ins(dir / "insights.jsonl", std::ios::binary | std::ios::trunc);
    if (!ins) throw RunError("cannot write insights.jsonl");
    ins << header << '\n';
    std::optional<InsightTables> tables;
    if (!campaigns.empty()) tables = load_insight_tables(a.brand_rules, a.tools);
    for (auto& c : campaigns) {
      c.metrics = compute_campaign_metrics(c, psl, a.mu);
      agg.add(c.kind, *c.metrics);
      campaign_hashes.insert(c.cluster.content_hash);
      for (const auto& [url, tally] : c.cluster.urls) ++lengths[utf8_length(url)];
      ins << insights_to_json(compute_insights(c, psl, tables->rules, tables->tools)) << '\n';
    }
    if (!ins) throw RunError("write failed: insights.jsonl");
  }

  // Cluster-size histogram.
  std::map<std::uint64_t, std::uint64_t> histogram;
  std::array<std::uint64_t, 3> classes{};
  if (!a.clusters.empty()) {
    Input in(a.clusters);
    for_each_data_line(*in, [&](std::string_view line, std::size_t n) {
      const Cluster c = cluster_from_json(line, n);
      ++histogram[c.submission_count];
      ++classes[static_cast<std::size_t>(classify_cluster(c))];
    });
  }

  // Temporal buckets over campaign submissions (all hashed records when no
  // campaigns were given).
  TemporalAccumulator temporal;
  std::optional<IngestStats> record_stats;
  if (!a.records.empty()) {
    Input in(a.records);
    std::size_t shown = 0;
    const bool all = a.campaigns.empty();
    record_stats = ingest_stream(
        *in, pick_format(a.format, a.records),
        [&](SubmissionRecord&& r) {
          if (!r.content_hash) return;
          if (all || campaign_hashes.contains(*r.content_hash)) temporal.add(r.scan_time);
        },
        error_printer(err, shown));
  }
  const TemporalProfile profile = temporal.finish();

  auto write_csv = [&](const char* name, auto&& body) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw RunError(std::string("cannot write ") + name);
    f << "# " << header << '\n';
    body(f);
    if (!f) throw RunError(std::string("write failed: ") + name);
  };
  write_csv("cluster_sizes.csv", [&](std::ostream& f) { write_histogram_csv(f, histogram); });
  write_csv("url_lengths.csv", [&](std::ostream& f) { write_length_csv(f, lengths); });
  write_csv("temporal.csv", [&](std::ostream& f) { write_temporal_csv(f, profile); });

  JsonLine clusters_json;
  if (!a.clusters.empty()) {
    std::uint64_t total = 0;
    for (auto n : classes) total += n;
    clusters_json.unum("total", total)
        .unum("singleton", classes[0])
        .unum("unflagged", classes[1])
        .unum("flagged", classes[2])
        .unum("largest_submission_count", histogram.empty() ? 0 : histogram.rbegin()->first);
  }
  JsonLine records_json;
  if (record_stats) {
    records_json.unum("total_lines", record_stats->total_lines)
        .unum("parsed_ok", record_stats->parsed_ok)
        .unum("missing_hash", record_stats->missing_hash)
        .unum("malformed", record_stats->malformed);
  }
  const std::string temporal_json =
      JsonLine()
          .unum("days", profile.buckets.size())
          .unum("submissions", profile.total())
          .raw("weekly_slope",
               profile.weekly_slope ? fmt::format("{}", *profile.weekly_slope) : "null")
          .done();

  JsonLine summary;
  summary.raw("campaigns", summary_to_json(agg.summary()));
  if (!a.clusters.empty()) summary.raw("clusters", clusters_json.done());
  else summary.null("clusters");
  if (record_stats) summary.raw("records", records_json.done());
  else summary.null("records");
  summary.raw("temporal", temporal_json);

  std::ofstream s(dir / "summary.json", std::ios::binary | std::ios::trunc);
  if (!s) throw RunError("cannot write summary.json");
  s << header << '\n' << summary.done() << '\n';
  if (!s) throw RunError("write failed: summary.json");
  err << JsonLine()
             .str("stage", "report")
             .unum("campaigns", agg.summary().total.campaigns)
             .str("out", dir.string())
             .done()
      << '\n';
  return kExitOk;
}

}  // namespace

bool parse_byte_size(const std::string& text, std::size_t& bytes) {
  if (text.empty()) return false;
  std::size_t mult = 1;
  std::string digits = text;
  switch (std::toupper(static_cast<unsigned char>(text.back()))) {
    case 'K': mult = std::size_t{1} << 10; break;
    case 'M': mult = std::size_t{1} << 20; break;
    case 'G': mult = std::size_t{1} << 30; break;
    default: break;
  }
  if (mult != 1) digits.pop_back();
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || p != digits.data() + digits.size() || digits.empty()) return false;
  if (v > std::numeric_limits<std::size_t>::max() / mult) return false;
  bytes = v * mult;
  return bytes > 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Content-hash triage of malicious URL submissions", "hashtriage"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Common common;
  app.add_option("--threads", common.threads, "Worker thread cap")
      ->check(CLI::Range(1u, 256u));
  app.add_option("--psl", common.psl, "Public suffix list file");

  const std::vector<std::string> kFormats = {"json", "jsonl", "csv"};

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Validate and normalise submission records");
  s_ingest->add_option("input", ingest.input, "Input file or - for stdin");
  s_ingest->add_option("--format", ingest.format)->check(CLI::IsMember(kFormats));
  s_ingest->add_option("--out", ingest.out);
  s_ingest->add_option("--out-format", ingest.out_format)->check(CLI::IsMember({"json", "csv"}));

  ClusterArgs cluster;
  auto* s_cluster = app.add_subcommand("cluster", "Group submissions by content hash");
  s_cluster->add_option("input", cluster.input, "Records file or - for stdin");
  s_cluster->add_option("--format", cluster.format)->check(CLI::IsMember(kFormats));
  s_cluster->add_option("--out", cluster.out);
  s_cluster->add_flag("--external", cluster.external, "External-memory sort-merge");
  s_cluster->add_option("--memory-budget", cluster.memory_budget, "e.g. 256M");
  s_cluster->add_option("--tmp-dir", cluster.tmp_dir);

  VerifyArgs verify;
  auto* s_verify = app.add_subcommand("verify", "Confirm flagged clusters against a provider");
  s_verify->add_option("clusters", verify.clusters, "Cluster export or - for stdin");
  s_verify->add_option("--out", verify.out);
  s_verify->add_option("--provider", verify.provider)->check(CLI::IsMember({"file", "mock", "http"}));
  s_verify->add_option("--blocklist", verify.blocklist);
  s_verify->add_option("--endpoint", verify.endpoint);
  s_verify->add_option("--rate", verify.rate, "N/INTERVAL");
  s_verify->add_option("--max-inflight", verify.max_inflight)->check(CLI::Range(1u, 1024u));
  s_verify->add_option("--journal", verify.journal);
  s_verify->add_option("--as-of", verify.as_of, "Verdict timestamp (epoch or RFC 3339)");

  MetricsArgs metrics;
  auto* s_metrics = app.add_subcommand("metrics", "Per-campaign metrics");
  s_metrics->add_option("campaigns", metrics.campaigns, "Campaign export or - for stdin");
  s_metrics->add_option("--out", metrics.out);
  s_metrics->add_option("--summary", metrics.summary, "Corpus summary output");
  s_metrics->add_option("--mu", metrics.mu)->check(CLI::Range(0.0, 1.0));
  s_metrics->add_option("--size-threshold", metrics.size_threshold);

  InsightsArgs insights;
  auto* s_insights = app.add_subcommand("insights", "Per-campaign insight scans");
  s_insights->add_option("campaigns", insights.campaigns);
  s_insights->add_option("--out", insights.out);
  s_insights->add_option("--brand-rules", insights.brand_rules);
  s_insights->add_option("--tools", insights.tools);

  WatchArgs watch;
  auto* s_watch = app.add_subcommand("watch", "Replay records against a watchlist");
  s_watch->add_option("records", watch.records);
  s_watch->add_option("--format", watch.format)->check(CLI::IsMember(kFormats));
  s_watch->add_option("--watchlist", watch.watchlist);
  s_watch->add_option("--campaigns", watch.campaigns);
  s_watch->add_option("--save", watch.save, "Write the updated watchlist here");
  s_watch->add_option("--out", watch.out);

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  s_synth->add_option("--seed", synth.cfg.seed);
  s_synth->add_option("--campaigns", synth.cfg.campaigns);
  s_synth->add_option("--singletons", synth.cfg.singletons);
  s_synth->add_option("--records", synth.cfg.records);
  s_synth->add_option("--missing-hash", synth.cfg.missing_hash)->check(CLI::Range(0.0, 1.0));
  s_synth->add_option("--flagged-fraction", synth.cfg.flagged_fraction)->check(CLI::Range(0.0, 1.0));
  s_synth->add_option("--blocklisted-fraction", synth.cfg.blocklisted_fraction)
      ->check(CLI::Range(0.0, 1.0));
  s_synth->add_option("--flag-probability", synth.cfg.flag_probability)->check(CLI::Range(0.0, 1.0));
  s_synth->add_option("--single-url-fraction", synth.cfg.single_url_fraction)
      ->check(CLI::Range(0.0, 1.0));
  s_synth->add_option("--shared-url-fraction", synth.cfg.shared_url_fraction)
      ->check(CLI::Range(0.0, 1.0));
  s_synth->add_option("--pareto-alpha", synth.cfg.pareto_alpha);
  s_synth->add_option("--giant-cluster", synth.giant);
  s_synth->add_option("--time-start", synth.cfg.time_start);
  s_synth->add_option("--time-span", synth.cfg.time_span);
  s_synth->add_option("--fixture", synth.fixture)
      ->check(CLI::IsMember({"tls", "apple", "replay", "largest"}));
  s_synth->add_option("--out", synth.out)->required();

  ReportArgs report;
  auto* s_report = app.add_subcommand("report", "Summary JSON and CSVs for plotting");
  s_report->add_option("--records", report.records);
  s_report->add_option("--format", report.format)->check(CLI::IsMember(kFormats));
  s_report->add_option("--clusters", report.clusters);
  s_report->add_option("--campaigns", report.campaigns);
  s_report->add_option("--out", report.out)->required();
  s_report->add_option("--mu", report.mu)->check(CLI::Range(0.0, 1.0));
  s_report->add_option("--size-threshold", report.size_threshold);
  s_report->add_option("--brand-rules", report.brand_rules);
  s_report->add_option("--tools", report.tools);

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<const char*> argv{"hashtriage"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s_ingest) return do_ingest(ingest, out, err);
    if (*s_cluster) return do_cluster(cluster, common, out, err);
    if (*s_verify) return do_verify(verify, out, err);
    if (*s_metrics) return do_metrics(metrics, common, out, err);
    if (*s_insights) return do_insights(insights, common, out, err);
    if (*s_watch) return do_watch(watch, out, err);
    if (*s_synth) return do_synth(synth, err);
    if (*s_report) return do_report(report, common, err);
  } catch (const CLI::Error& e) {
    err << "hashtriage: usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SynthError& e) {
    err << "hashtriage: usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "hashtriage: error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace hashtriage::cli

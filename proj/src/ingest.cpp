#include "hashtriage/ingest.hpp"

#include <fmt/format.h>

#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <limits>

#include <nlohmann/json.hpp>

namespace hashtriage {

namespace {

using nlohmann::json;

// Field values after syntax-level extraction, before domain validation.
struct RawFields {
  std::string url;
  std::optional<std::string> hash;
  std::int64_t positives = 0;
  std::int64_t total = 0;
  std::int64_t scan_time = 0;
};

Unexpected<ParseError> fail(std::string field, std::size_t line,
                            std::string message) {
  return {ParseError{std::move(field), line, std::move(message)}};
}

std::string refang(std::string_view url) {
  std::string out;
  out.reserve(url.size());
  for (std::size_t i = 0; i < url.size(); ++i) {
    if (url.compare(i, 3, "[.]") == 0) {
      out.push_back('.');
      i += 2;
    } else {
      out.push_back(url[i]);
    }
  }
  return out;
}

Expected<SubmissionRecord, ParseError> validate(RawFields raw,
                                                std::size_t line) {
  SubmissionRecord rec;
  if (!is_valid_utf8(raw.url)) return fail("url", line, "invalid UTF-8");
  rec.url = refang(trim(raw.url));
  if (rec.url.empty()) return fail("url", line, "empty url");

  if (raw.hash && !raw.hash->empty()) {
    std::string h = to_lower_ascii(*raw.hash);
    if (h.size() != kContentHashHexLength || !is_lower_hex(h)) {
      return fail("content_hash", line,
                  "expected 64 hex characters, got \"" + *raw.hash + "\"");
    }
    rec.content_hash = std::move(h);
  }

  constexpr std::int64_t kMax = std::numeric_limits<std::uint32_t>::max();
  if (raw.positives < 0 || raw.positives > kMax) {
    return fail("positives", line, "out of range");
  }
  if (raw.total < 1 || raw.total > kMax) {
    return fail("total", line, "vendor total must be positive");
  }
  if (raw.positives > raw.total) {
    return fail("positives", line,
                fmt::format("positives {} exceeds vendor total {}",
                            raw.positives, raw.total));
  }
  rec.positives = static_cast<std::uint32_t>(raw.positives);
  rec.vendor_total = static_cast<std::uint32_t>(raw.total);
  rec.scan_time = raw.scan_time;
  return rec;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_scan_time_text(std::string_view s) {
  if (auto v = parse_int(s)) return v;
  return parse_rfc3339(trim(s));
}

bool json_integer(const json& v, std::int64_t& out) {
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      return false;
    }
    out = static_cast<std::int64_t>(u);
    return true;
  }
  if (v.is_number_integer()) {
    out = v.get<std::int64_t>();
    return true;
  }
  return false;
}

int two_digits(std::string_view s, std::size_t at) {
  if (at + 2 > s.size()) return -1;
  const char a = s[at], b = s[at + 1];
  if (a < '0' || a > '9' || b < '0' || b > '9') return -1;
  return (a - '0') * 10 + (b - '0');
}

}  // namespace

IngestStats& IngestStats::operator+=(const IngestStats& other) {
  total_lines += other.total_lines;
  parsed_ok += other.parsed_ok;
  missing_hash += other.missing_hash;
  malformed += other.malformed;
  return *this;
}

std::string ParseError::to_string() const {
  return fmt::format("line {}: field '{}': {}", line, field, message);
}

InputFormat format_for_path(const std::filesystem::path& path) {
  return to_lower_ascii(path.extension().string()) == ".csv"
             ? InputFormat::kCsv
             : InputFormat::kJsonLines;
}

std::optional<InputFormat> parse_format_name(std::string_view name) {
  if (name == "json" || name == "jsonl") return InputFormat::kJsonLines;
  if (name == "csv") return InputFormat::kCsv;
  return std::nullopt;
}

Expected<SubmissionRecord, ParseError> parse_record(std::string_view line,
                                                    std::size_t line_number) {
  if (!is_valid_utf8(line)) {
    return fail("url", line_number, "invalid UTF-8 in record");
  }
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    return fail("record", line_number, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) return fail("record", line_number, "not a JSON object");

  RawFields raw;
  const auto url = j.find("url");
  if (url == j.end() || !url->is_string()) {
    return fail("url", line_number, "missing or not a string");
  }
  raw.url = url->get<std::string>();

  const auto hash = j.find("content_hash");
  if (hash != j.end() && !hash->is_null()) {
    if (!hash->is_string()) return fail("content_hash", line_number, "not a string");
    raw.hash = hash->get<std::string>();
  }

  const auto positives = j.find("positives");
  if (positives == j.end() || !json_integer(*positives, raw.positives)) {
    return fail("positives", line_number, "missing or not an integer");
  }
  const auto total = j.find("total");
  if (total == j.end() || !json_integer(*total, raw.total)) {
    return fail("total", line_number, "missing or not an integer");
  }

  const auto when = j.find("scan_time");
  if (when == j.end()) return fail("scan_time", line_number, "missing");
  if (when->is_string()) {
    const auto t = parse_rfc3339(when->get<std::string>());
    if (!t) return fail("scan_time", line_number, "invalid RFC 3339 timestamp");
    raw.scan_time = *t;
  } else if (!json_integer(*when, raw.scan_time)) {
    return fail("scan_time", line_number, "not epoch seconds or RFC 3339");
  }
  return validate(std::move(raw), line_number);
}

std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool field_was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      if (!cur.empty() || field_was_quoted) return std::nullopt;
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      field_was_quoted = false;
    } else if (c == '\r' && i + 1 == line.size()) {
      // tolerate CRLF framing
    } else {
      if (field_was_quoted) return std::nullopt;
      cur.push_back(c);
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(std::move(cur));
  return fields;
}

Expected<CsvLayout, ParseError> CsvLayout::from_header(std::string_view header) {
  auto cols = split_csv_line(header);
  if (!cols) return fail("header", 0, "unparseable CSV header");
  CsvLayout layout;
  layout.columns_ = cols->size();
  for (std::size_t i = 0; i < cols->size(); ++i) {
    const std::string name = to_lower_ascii(trim((*cols)[i]));
    const int idx = static_cast<int>(i);
    if (name == "url") layout.url_ = idx;
    else if (name == "content_hash") layout.hash_ = idx;
    else if (name == "positives") layout.positives_ = idx;
    else if (name == "total") layout.total_ = idx;
    else if (name == "scan_time") layout.scan_time_ = idx;
  }
  if (layout.url_ < 0 || layout.hash_ < 0 || layout.positives_ < 0 ||
      layout.total_ < 0 || layout.scan_time_ < 0) {
    return fail("header", 0,
                "CSV header must name url, content_hash, positives, total, "
                "scan_time");
  }
  return layout;
}

Expected<SubmissionRecord, ParseError> CsvLayout::parse(
    std::string_view line, std::size_t line_number) const {
  auto cols = split_csv_line(line);
  if (!cols) return fail("record", line_number, "unbalanced CSV quoting");
  if (cols->size() != columns_) {
    return fail("record", line_number,
                fmt::format("expected {} columns, got {}", columns_, cols->size()));
  }
  RawFields raw;
  raw.url = (*cols)[url_];
  if (!trim((*cols)[hash_]).empty()) raw.hash = std::string(trim((*cols)[hash_]));

  const auto positives = parse_int((*cols)[positives_]);
  if (!positives) return fail("positives", line_number, "not an integer");
  raw.positives = *positives;
  const auto total = parse_int((*cols)[total_]);
  if (!total) return fail("total", line_number, "not an integer");
  raw.total = *total;
  const auto when = parse_scan_time_text((*cols)[scan_time_]);
  if (!when) return fail("scan_time", line_number, "not epoch seconds or RFC 3339");
  raw.scan_time = *when;
  return validate(std::move(raw), line_number);
}

std::string serialize_record(const SubmissionRecord& r) {
  JsonLine line;
  line.str("url", r.url);
  if (r.content_hash) {
    line.str("content_hash", *r.content_hash);
  } else {
    line.null("content_hash");
  }
  return line.unum("positives", r.positives)
      .unum("total", r.vendor_total)
      .num("scan_time", r.scan_time)
      .done();
}

std::string serialize_record_csv(const SubmissionRecord& r) {
  std::string url = r.url;
  if (url.find_first_of(",\"") != std::string::npos) {
    std::string quoted = "\"";
    for (char c : url) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    url = quoted + "\"";
  }
  return fmt::format("{},{},{},{},{}", url, r.content_hash.value_or(""),
                     r.positives, r.vendor_total, r.scan_time);
}

std::optional<std::int64_t> parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
  if (s.size() < 20) return std::nullopt;
  const int y1 = two_digits(s, 0), y2 = two_digits(s, 2);
  if (y1 < 0 || y2 < 0 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const int mon = two_digits(s, 5), mday = two_digits(s, 8);
  if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') return std::nullopt;
  const int hh = two_digits(s, 11), mm = two_digits(s, 14), ss = two_digits(s, 17);
  if (s[13] != ':' || s[16] != ':') return std::nullopt;
  if (mon < 0 || mday < 0 || hh < 0 || hh > 23 || mm < 0 || mm > 59 ||
      ss < 0 || ss > 60) {
    return std::nullopt;
  }
  const year_month_day date{year{y1 * 100 + y2}, month{static_cast<unsigned>(mon)},
                            day{static_cast<unsigned>(mday)}};
  if (!date.ok()) return std::nullopt;

  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t digits_start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == digits_start) return std::nullopt;
  }
  if (pos >= s.size()) return std::nullopt;
  std::int64_t offset = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '+' ? 1 : -1;
    const int oh = two_digits(s, pos + 1), om = two_digits(s, pos + 4);
    if (oh < 0 || om < 0 || oh > 23 || om > 59 || pos + 3 >= s.size() ||
        s[pos + 3] != ':') {
      return std::nullopt;
    }
    offset = sign * (oh * 3600 + om * 60);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  const auto days_since_epoch = sys_days{date}.time_since_epoch().count();
  return static_cast<std::int64_t>(days_since_epoch) * 86400 + hh * 3600 +
         mm * 60 + ss - offset;
}

std::string format_rfc3339(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{epoch_seconds}};
  const auto dp = floor<days>(tp);
  const year_month_day ymd{dp};
  const hh_mm_ss hms{tp - dp};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z",
                     static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), hms.hours().count(),
                     hms.minutes().count(), hms.seconds().count());
}

IngestStats ingest_stream(std::istream& in, InputFormat format,
                          const RecordSink& sink, const ErrorSink& on_error) {
  IngestStats stats;
  std::optional<CsvLayout> layout;
  std::string line;
  std::size_t line_number = 0;

  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view view = trim(line);
    if (view.empty() || is_provenance_line(view)) continue;
    // CSV outputs carry the provenance record behind a "# " marker.
    if (format == InputFormat::kCsv && view.starts_with("# ") &&
        is_provenance_line(view.substr(2))) {
      continue;
    }

    if (format == InputFormat::kCsv && !layout) {
      auto parsed = CsvLayout::from_header(view);
      if (!parsed) {
        throw IngestIoError(
            fmt::format("line {}: {}", line_number, parsed.error().message),
            stats);
      }
      layout = std::move(*parsed);
      continue;
    }

    ++stats.total_lines;
    auto rec = format == InputFormat::kCsv ? layout->parse(view, line_number)
                                           : parse_record(view, line_number);
    if (!rec) {
      ++stats.malformed;
      if (on_error) on_error(rec.error());
      continue;
    }
    ++stats.parsed_ok;
    if (!rec->content_hash) ++stats.missing_hash;
    sink(std::move(*rec));
  }
  if (in.bad()) {
    throw IngestIoError(fmt::format("read error after line {}", line_number),
                        stats);
  }
  return stats;
}

IngestStats ingest_file(const std::filesystem::path& path, InputFormat format,
                        const RecordSink& sink, const ErrorSink& on_error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IngestIoError("cannot open " + path.string(), IngestStats{});
  }
  return ingest_stream(in, format, sink, on_error);
}

}  // namespace hashtriage

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hashtriage/common.hpp"

namespace hashtriage {

inline constexpr std::size_t kContentHashHexLength = 64;

// One URL scan event as delivered by the scanning service.
struct SubmissionRecord {
  std::string url;
  // Lowercase SHA-256 hex; absent when the scan captured no content.
  std::optional<std::string> content_hash;
  std::uint32_t positives = 0;
  std::uint32_t vendor_total = 0;
  // Epoch seconds, UTC.
  std::int64_t scan_time = 0;

  bool operator==(const SubmissionRecord&) const = default;
};

struct IngestStats {
  std::uint64_t total_lines = 0;
  std::uint64_t parsed_ok = 0;
  std::uint64_t missing_hash = 0;
  std::uint64_t malformed = 0;

  IngestStats& operator+=(const IngestStats& other);
  bool operator==(const IngestStats&) const = default;
};

struct ParseError {
  std::string field;
  std::size_t line = 0;
  std::string message;

  std::string to_string() const;
};

enum class InputFormat { kJsonLines, kCsv };

// Picks CSV for a ".csv" extension, JSON lines otherwise.
InputFormat format_for_path(const std::filesystem::path& path);
std::optional<InputFormat> parse_format_name(std::string_view name);

// Parses one JSON-lines record. `line_number` is only used for error reports.
Expected<SubmissionRecord, ParseError> parse_record(std::string_view line,
                                                    std::size_t line_number = 0);

// Column positions resolved from a CSV header row.
class CsvLayout {
 public:
  static Expected<CsvLayout, ParseError> from_header(std::string_view header);

  Expected<SubmissionRecord, ParseError> parse(std::string_view line,
                                               std::size_t line_number) const;

 private:
  int url_ = -1;
  int hash_ = -1;
  int positives_ = -1;
  int total_ = -1;
  int scan_time_ = -1;
  std::size_t columns_ = 0;
};

// Splits one CSV line (RFC 4180 quoting, no embedded newlines).
std::optional<std::vector<std::string>> split_csv_line(std::string_view line);

// Canonical JSON-lines rendering; parse_record(serialize_record(r)) == r.
std::string serialize_record(const SubmissionRecord& record);
std::string serialize_record_csv(const SubmissionRecord& record);
inline constexpr std::string_view kCsvHeader =
    "url,content_hash,positives,total,scan_time";

// RFC 3339 timestamps, second resolution. Fractions are truncated.
std::optional<std::int64_t> parse_rfc3339(std::string_view text);
std::string format_rfc3339(std::int64_t epoch_seconds);

class IngestIoError : public std::runtime_error {
 public:
  IngestIoError(const std::string& what, IngestStats partial)
      : std::runtime_error(what), partial_(partial) {}
  const IngestStats& partial_stats() const { return partial_; }

 private:
  IngestStats partial_;
};

using RecordSink = std::function<void(SubmissionRecord&&)>;
using ErrorSink = std::function<void(const ParseError&)>;

// Streams records in input order. Malformed lines are counted and reported
// to `on_error`; they never stop the stream. Blank lines and provenance
// header lines are skipped without being counted.
// Throws IngestIoError (with partial stats) if the stream goes bad.
IngestStats ingest_stream(std::istream& in, InputFormat format,
                          const RecordSink& sink,
                          const ErrorSink& on_error = {});

IngestStats ingest_file(const std::filesystem::path& path, InputFormat format,
                        const RecordSink& sink, const ErrorSink& on_error = {});

}  // namespace hashtriage

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hashtriage/common.hpp"

namespace hashtriage {

enum class HostKind { kRegisteredName, kIpLiteral };

// scheme://[subdomain.]domain[.suffix]path
struct ParsedUrl {
  std::string scheme;     // lowercase; empty when the input had none
  std::string subdomain;  // whole left-of-domain string, e.g. "www.icloud.com"
  std::string domain;     // one label, or the full IP literal
  std::string suffix;     // public suffix; empty for IP hosts
  std::string path;       // everything after the authority, verbatim
  HostKind host_kind = HostKind::kRegisteredName;

  // subdomain.domain.suffix with empty parts omitted.
  std::string host() const;
  // domain.suffix
  std::string registrable_domain() const;

  bool operator==(const ParsedUrl&) const = default;
};

struct UrlError {
  std::string message;
};

// Public-suffix rule set (plain, wildcard "*.x", exception "!x").
class SuffixTable {
 public:
  enum class RuleKind : unsigned char { kPlain = 1, kWildcard = 2, kException = 4 };

  struct Match {
    std::size_t suffix_labels = 0;  // labels of the host that form the suffix
    bool from_rule = false;         // false when the default "*" rule applied
  };

  // Throws std::invalid_argument when the source yields no rules.
  static SuffixTable load(std::istream& in);
  static SuffixTable load_file(const std::filesystem::path& path);
  // Convenience for tests and fixtures: one rule per element.
  static SuffixTable from_rules(const std::vector<std::string>& rules);

  // `host` is lowercase, without a trailing dot, with no empty labels.
  Match match(std::string_view host) const;

  std::size_t rule_count() const { return rule_count_; }
  bool has_rule(std::string_view rule_line) const;
  const std::string& snapshot_id() const { return snapshot_id_; }

 private:
  void add_rule(std::string_view line);

  // Keyed by the rule's domain part (without "*." / "!"), value is a
  // bitmask of RuleKind.
  std::unordered_map<std::string, unsigned char> rules_;
  std::size_t rule_count_ = 0;
  std::string snapshot_id_;
};

// Default snapshot bundled with the project.
std::filesystem::path default_suffix_list_path();

Expected<ParsedUrl, UrlError> parse_url(std::string_view raw,
                                        const SuffixTable& table);

// Rebuilds a URL string from its parts.
std::string recompose(const ParsedUrl& url);

// Trims, lowercases scheme and host. Path, query and fragment bytes are kept.
// Inputs without a recoverable host come back trimmed only.
std::string normalize_url(std::string_view raw);

// Lowercase extension of the final path segment (query/fragment stripped),
// if it is 1-5 alphanumeric characters.
std::optional<std::string> extract_extension(const ParsedUrl& url);
std::optional<std::string> extract_extension(std::string_view path);

bool is_ipv4_literal(std::string_view host);

}  // namespace hashtriage

#include "hashtriage/urlkit.hpp"

#include <fstream>
#include <istream>
#include <sstream>

namespace hashtriage {

namespace {

constexpr unsigned char bit(SuffixTable::RuleKind k) {
  return static_cast<unsigned char>(k);
}

bool is_scheme(std::string_view s) {
  if (s.empty()) return false;
  const auto alpha = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  if (!alpha(s[0])) return false;
  for (char c : s) {
    if (!(alpha(c) || (c >= '0' && c <= '9') || c == '+' || c == '-' ||
          c == '.')) {
      return false;
    }
  }
  return true;
}

bool all_digits(std::string_view s) {
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// Byte ranges of one URL string. Offsets index the trimmed input.
struct Layout {
  std::string_view scheme;     // without "://"
  std::string_view userinfo;   // including the trailing '@'
  std::string_view host;
  std::string_view port;       // including the leading ':'
  std::string_view rest;       // path + query + fragment
  bool has_separator = false;  // "://" or leading "//" present
};

// Splits without validating host contents. Fails for opaque URIs
// (mailto:, data:, ...) and for malformed ports.
std::optional<Layout> split(std::string_view s, std::string& why) {
  Layout out;
  std::string_view rest = s;
  const auto sep = s.find("://");
  if (sep != std::string_view::npos && is_scheme(s.substr(0, sep))) {
    out.scheme = s.substr(0, sep);
    rest = s.substr(sep + 3);
    out.has_separator = true;
  } else if (s.substr(0, 2) == "//") {
    rest = s.substr(2);
    out.has_separator = true;
  } else {
    const auto colon = s.find(':');
    const auto first_delim = s.find_first_of("/?#");
    if (colon != std::string_view::npos && colon < first_delim &&
        is_scheme(s.substr(0, colon))) {
      // "host:port/..." is fine; "mailto:x" is not.
      const auto after = s.substr(colon + 1, first_delim == std::string_view::npos
                                                 ? std::string_view::npos
                                                 : first_delim - colon - 1);
      if (after.empty() || !all_digits(after)) {
        why = "no host in opaque URI";
        return std::nullopt;
      }
    }
  }

  const auto auth_end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, auth_end);
  out.rest = auth_end == std::string_view::npos ? std::string_view{}
                                                : rest.substr(auth_end);
  const auto at = authority.rfind('@');
  if (at != std::string_view::npos) {
    out.userinfo = authority.substr(0, at + 1);
    authority = authority.substr(at + 1);
  }
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) {
      why = "unterminated IPv6 literal";
      return std::nullopt;
    }
    out.host = authority.substr(0, close + 1);
    out.port = authority.substr(close + 1);
  } else {
    const auto colon = authority.rfind(':');
    out.host = authority.substr(0, colon);
    if (colon != std::string_view::npos) out.port = authority.substr(colon);
  }
  if (!out.port.empty() &&
      (out.port.front() != ':' || !all_digits(out.port.substr(1)))) {
    why = "invalid port";
    return std::nullopt;
  }
  return out;
}

std::string join_host(const ParsedUrl& u) {
  std::string h;
  for (const std::string* part : {&u.subdomain, &u.domain, &u.suffix}) {
    if (part->empty()) continue;
    if (!h.empty()) h += '.';
    h += *part;
  }
  return h;
}

}  // namespace

std::string ParsedUrl::host() const { return join_host(*this); }

std::string ParsedUrl::registrable_domain() const {
  if (suffix.empty()) return domain;
  return domain + "." + suffix;
}

void SuffixTable::add_rule(std::string_view line) {
  // A rule is the first whitespace-delimited token on the line.
  line = trim(line);
  const auto ws = line.find_first_of(" \t");
  std::string_view rule = line.substr(0, ws);
  if (rule.empty() || rule.substr(0, 2) == "//") return;

  unsigned char kind = bit(RuleKind::kPlain);
  if (rule.front() == '!') {
    kind = bit(RuleKind::kException);
    rule.remove_prefix(1);
  } else if (rule.substr(0, 2) == "*.") {
    kind = bit(RuleKind::kWildcard);
    rule.remove_prefix(2);
  }
  if (rule.empty()) return;
  unsigned char& slot = rules_[to_lower_ascii(rule)];
  if ((slot & kind) == 0) {
    slot |= kind;
    ++rule_count_;
  }
}

SuffixTable SuffixTable::load(std::istream& in) {
  SuffixTable table;
  std::string line;
  constexpr std::string_view kVersion = "// VERSION:";
  while (std::getline(in, line)) {
    const std::string_view view = trim(line);
    if (table.snapshot_id_.empty() && view.substr(0, kVersion.size()) == kVersion) {
      table.snapshot_id_ = std::string(trim(view.substr(kVersion.size())));
    }
    table.add_rule(view);
  }
  if (table.rule_count_ == 0) {
    throw std::invalid_argument("suffix list contains no rules");
  }
  if (table.snapshot_id_.empty()) table.snapshot_id_ = "unversioned";
  return table;
}

SuffixTable SuffixTable::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open suffix list " + path.string());
  return load(in);
}

SuffixTable SuffixTable::from_rules(const std::vector<std::string>& rules) {
  std::stringstream ss;
  for (const auto& r : rules) ss << r << '\n';
  return load(ss);
}

bool SuffixTable::has_rule(std::string_view rule_line) const {
  unsigned char kind = bit(RuleKind::kPlain);
  if (!rule_line.empty() && rule_line.front() == '!') {
    kind = bit(RuleKind::kException);
    rule_line.remove_prefix(1);
  } else if (rule_line.substr(0, 2) == "*.") {
    kind = bit(RuleKind::kWildcard);
    rule_line.remove_prefix(2);
  }
  const auto it = rules_.find(std::string(rule_line));
  return it != rules_.end() && (it->second & kind) != 0;
}

SuffixTable::Match SuffixTable::match(std::string_view host) const {
  // starts[k] is the offset of the suffix made of the last k+1 labels.
  std::vector<std::size_t> starts;
  starts.push_back(host.rfind('.') == std::string_view::npos
                       ? 0
                       : host.rfind('.') + 1);
  while (starts.back() > 0) {
    if (starts.back() < 2) {
      starts.push_back(0);
      break;
    }
    const auto prev = host.rfind('.', starts.back() - 2);
    starts.push_back(prev == std::string_view::npos ? 0 : prev + 1);
  }
  const std::size_t n = starts.size();

  Match best{1, false};
  for (std::size_t k = 1; k <= n; ++k) {
    const auto it = rules_.find(std::string(host.substr(starts[k - 1])));
    const unsigned char flags = it == rules_.end() ? 0 : it->second;
    if (flags & bit(RuleKind::kException)) {
      // Exception rules win outright; the suffix is the rule minus its
      // leftmost label.
      return Match{k - 1, true};
    }
    if (flags & bit(RuleKind::kPlain)) best = Match{k, true};
    if ((flags & bit(RuleKind::kWildcard)) && k < n) {
      // "*.x" matches one more label to the left of x, unless an exception
      // rule covers that longer name.
      const auto longer = rules_.find(std::string(host.substr(starts[k])));
      if (longer == rules_.end() ||
          (longer->second & bit(RuleKind::kException)) == 0) {
        best = Match{k + 1, true};
      }
    }
  }
  return best;
}

std::filesystem::path default_suffix_list_path() {
  return std::filesystem::path(HASHTRIAGE_DATA_DIR) / "public_suffix_list.dat";
}

bool is_ipv4_literal(std::string_view host) {
  int parts = 0;
  std::size_t start = 0;
  while (true) {
    const auto dot = host.find('.', start);
    const auto part = host.substr(start, dot == std::string_view::npos
                                             ? std::string_view::npos
                                             : dot - start);
    if (part.empty() || part.size() > 3 || !all_digits(part)) return false;
    if (std::stoi(std::string(part)) > 255) return false;
    ++parts;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts == 4;
}

Expected<ParsedUrl, UrlError> parse_url(std::string_view raw,
                                        const SuffixTable& table) {
  const std::string_view s = trim(raw);
  if (s.empty()) return unexpected(UrlError{"empty URL"});
  std::string why;
  const auto layout = split(s, why);
  if (!layout) return unexpected(UrlError{why});

  std::string host = to_lower_ascii(layout->host);
  if (!host.empty() && host.back() == '.') host.pop_back();
  if (host.empty()) return unexpected(UrlError{"empty host"});

  ParsedUrl out;
  out.scheme = to_lower_ascii(layout->scheme);
  out.path = std::string(layout->rest);

  if (host.front() == '[' || is_ipv4_literal(host)) {
    out.host_kind = HostKind::kIpLiteral;
    out.domain = std::move(host);
    return out;
  }
  if (host.find("..") != std::string::npos || host.front() == '.') {
    return unexpected(UrlError{"empty label in host"});
  }

  std::size_t labels = 1;
  for (char c : host) labels += c == '.';
  std::size_t suffix_labels = table.match(host).suffix_labels;
  // No label left for the domain: shrink the suffix, or for single-label
  // hosts keep the whole host as the domain.
  if (suffix_labels >= labels) suffix_labels = labels - 1;

  // Locate the boundaries from the right.
  std::size_t suffix_start = host.size();
  for (std::size_t i = 0; i < suffix_labels; ++i) {
    suffix_start = host.rfind('.', suffix_start - 1);
  }
  const std::string_view left =
      suffix_labels == 0 ? std::string_view(host)
                         : std::string_view(host).substr(0, suffix_start);
  if (suffix_labels > 0) out.suffix = host.substr(suffix_start + 1);
  const auto dot = left.rfind('.');
  if (dot == std::string_view::npos) {
    out.domain = std::string(left);
  } else {
    out.domain = std::string(left.substr(dot + 1));
    out.subdomain = std::string(left.substr(0, dot));
  }
  return out;
}

std::string recompose(const ParsedUrl& url) {
  std::string out;
  if (!url.scheme.empty()) out = url.scheme + "://";
  out += url.host();
  out += url.path;
  return out;
}

std::string normalize_url(std::string_view raw) {
  const std::string_view s = trim(raw);
  std::string why;
  const auto layout = split(s, why);
  if (!layout || layout->host.empty()) return std::string(s);

  std::string out;
  out.reserve(s.size());
  if (!layout->scheme.empty()) {
    out += to_lower_ascii(layout->scheme);
    out += "://";
  } else if (layout->has_separator) {
    out += "//";
  }
  out += layout->userinfo;
  out += to_lower_ascii(layout->host);
  out += layout->port;
  out += layout->rest;
  return out;
}

std::optional<std::string> extract_extension(std::string_view path) {
  path = path.substr(0, path.find_first_of("?#"));
  const auto slash = path.rfind('/');
  const std::string_view segment =
      slash == std::string_view::npos ? path : path.substr(slash + 1);
  const auto dot = segment.rfind('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const std::string_view token = segment.substr(dot + 1);
  if (token.empty() || token.size() > 5) return std::nullopt;
  for (char c : token) {
    const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                       (c >= 'A' && c <= 'Z');
    if (!alnum) return std::nullopt;
  }
  return to_lower_ascii(token);
}

std::optional<std::string> extract_extension(const ParsedUrl& url) {
  return extract_extension(url.path);
}

}  // namespace hashtriage

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace hashtriage {

inline constexpr std::string_view kToolName = "hashtriage";
inline constexpr std::string_view kToolVersion = "0.1.0";

// Reserved key marking the provenance header line of every output file.
inline constexpr std::string_view kProvenanceKey = "_provenance";

template <typename E>
struct Unexpected {
  E error;
};

template <typename E>
Unexpected<std::decay_t<E>> unexpected(E&& e) {
  return {std::forward<E>(e)};
}

// Minimal value-or-error holder.
template <typename T, typename E>
class Expected {
 public:
  Expected(T value) : storage_(std::in_place_index<0>, std::move(value)) {}
  Expected(Unexpected<E> e)
      : storage_(std::in_place_index<1>, std::move(e.error)) {}

  bool has_value() const { return storage_.index() == 0; }
  explicit operator bool() const { return has_value(); }

  T& value() & { return std::get<0>(storage_); }
  const T& value() const& { return std::get<0>(storage_); }
  T&& value() && { return std::get<0>(std::move(storage_)); }
  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

  const E& error() const { return std::get<1>(storage_); }

 private:
  std::variant<T, E> storage_;
};

// Exact non-negative ratio. Kept unreduced; equality is by value.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  }
  bool is_zero() const { return num == 0; }

  // Decimal rendering, rounding half-up at `decimals` places.
  std::string render(int decimals) const;
  std::string render_percent(int decimals) const;

  friend bool operator==(const Ratio& a, const Ratio& b) {
    return static_cast<unsigned __int128>(a.num) * b.den ==
           static_cast<unsigned __int128>(b.num) * a.den;
  }
  friend bool operator<(const Ratio& a, const Ratio& b) {
    return static_cast<unsigned __int128>(a.num) * b.den <
           static_cast<unsigned __int128>(b.num) * a.den;
  }
};

// Renders a non-negative double with a fixed number of decimals
// (half-up on the printed decimal expansion).
std::string render_fixed(double value, int decimals);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool is_lower_hex(std::string_view s);
bool is_valid_utf8(std::string_view s);
// Number of Unicode code points; invalid bytes count as one each.
std::size_t utf8_length(std::string_view s);

// Decodes %XX escapes once. Malformed escapes are left untouched.
std::string percent_decode_once(std::string_view s);

// Stable 64-bit FNV-1a digest, rendered as 16 hex chars.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

// One-line provenance header: {"_provenance":{tool,version,stage,config_digest}}.
std::string provenance_line(std::string_view stage,
                            std::string_view canonical_config);
bool is_provenance_line(std::string_view line);

// Builder for a single-line JSON object with caller-controlled number text.
class JsonLine {
 public:
  JsonLine& str(std::string_view key, std::string_view value);
  JsonLine& num(std::string_view key, std::int64_t value);
  JsonLine& unum(std::string_view key, std::uint64_t value);
  JsonLine& boolean(std::string_view key, bool value);
  // `json_text` is inserted verbatim; caller guarantees it is valid JSON.
  JsonLine& raw(std::string_view key, std::string_view json_text);
  JsonLine& null(std::string_view key);

  std::string done() const { return body_ + "}"; }

 private:
  void key(std::string_view k);
  std::string body_ = "{";
  bool first_ = true;
};

std::string json_quote(std::string_view s);

}  // namespace hashtriage

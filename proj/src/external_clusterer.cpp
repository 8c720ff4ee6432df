#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <queue>
#include <stdexcept>

#include <fmt/format.h>
#include <unistd.h>

#include "hashtriage/clusterer.hpp"
#include "hashtriage/urlkit.hpp"

namespace hashtriage {

namespace {

constexpr std::size_t kHashBytes = 32;
// hash + positives + url length
constexpr std::size_t kEntryHeader = kHashBytes + 4 + 4;
constexpr std::size_t kReaderBuffer = std::size_t{256} << 10;

using Digest = std::array<unsigned char, kHashBytes>;

Digest digest_from_hex(std::string_view hex) {
  Digest d{};
  auto nibble = [](char c) -> unsigned char {
    return static_cast<unsigned char>(c <= '9' ? c - '0' : c - 'a' + 10);
  };
  for (std::size_t i = 0; i < kHashBytes; ++i) {
    d[i] = static_cast<unsigned char>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return d;
}

std::string digest_to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(kHashBytes * 2, '0');
  for (std::size_t i = 0; i < kHashBytes; ++i) {
    out[2 * i] = kHex[d[i] >> 4];
    out[2 * i + 1] = kHex[d[i] & 0xF];
  }
  return out;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& p, const char* mode) {
  File f(std::fopen(p.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open run file " + p.string());
  return f;
}

struct Entry {
  Digest hash{};
  std::uint32_t positives = 0;
  std::string url;
};

bool entry_less(const Entry& a, const Entry& b) {
  const int c = std::memcmp(a.hash.data(), b.hash.data(), kHashBytes);
  if (c != 0) return c < 0;
  return a.url < b.url;
}

void write_entry(std::FILE* f, const Digest& hash, std::uint32_t positives,
                 std::string_view url) {
  const auto len = static_cast<std::uint32_t>(url.size());
  if (std::fwrite(hash.data(), 1, kHashBytes, f) != kHashBytes ||
      std::fwrite(&positives, sizeof positives, 1, f) != 1 ||
      std::fwrite(&len, sizeof len, 1, f) != 1 ||
      std::fwrite(url.data(), 1, url.size(), f) != url.size()) {
    throw std::runtime_error("short write to run file");
  }
}

class RunReader {
 public:
  explicit RunReader(const std::filesystem::path& path)
      : file_(open_file(path, "rb")), buffer_(kReaderBuffer) {
    std::setvbuf(file_.get(), buffer_.data(), _IOFBF, buffer_.size());
  }

  bool next(Entry& e) {
    std::uint32_t len = 0;
    if (std::fread(e.hash.data(), 1, kHashBytes, file_.get()) != kHashBytes) {
      return false;
    }
    if (std::fread(&e.positives, sizeof e.positives, 1, file_.get()) != 1 ||
        std::fread(&len, sizeof len, 1, file_.get()) != 1) {
      throw std::runtime_error("truncated run file");
    }
    e.url.resize(len);
    if (len > 0 && std::fread(e.url.data(), 1, len, file_.get()) != len) {
      throw std::runtime_error("truncated run file");
    }
    return true;
  }

 private:
  File file_;
  std::vector<char> buffer_;
};

// Accumulates sorted entries into clusters and hands them to a sink.
class ClusterAssembler {
 public:
  explicit ClusterAssembler(const std::function<void(Cluster&&)>& sink)
      : sink_(sink) {}

  void push(const Entry& e) {
    if (!open_ || e.hash != current_hash_) {
      flush();
      open_ = true;
      current_hash_ = e.hash;
      current_.content_hash = digest_to_hex(e.hash);
    }
    // URLs arrive sorted within a hash; append at the end.
    ++current_.submission_count;
    current_.positives_sum += e.positives;
    auto it = current_.urls.end();
    if (current_.urls.empty() || std::prev(it)->first != e.url) {
      it = current_.urls.emplace_hint(it, e.url, UrlTally{});
    } else {
      --it;
    }
    ++it->second.submissions;
    it->second.max_positives = std::max(it->second.max_positives, e.positives);
  }

  void flush() {
    if (!open_) return;
    sink_(std::move(current_));
    current_ = Cluster{};
    open_ = false;
  }

 private:
  const std::function<void(Cluster&&)>& sink_;
  Cluster current_;
  Digest current_hash_{};
  bool open_ = false;
};

std::atomic<unsigned> g_spill_dir_counter{0};

}  // namespace

struct ExternalClusterer::Impl {
  ExternalClusterOptions options;
  std::filesystem::path run_dir;
  std::vector<std::filesystem::path> runs;
  std::vector<char> arena;
  std::vector<std::uint64_t> offsets;
  std::size_t arena_capacity = 0;
  std::size_t offsets_capacity = 0;
  std::size_t max_fan_in = 2;
  std::uint64_t added = 0;

  explicit Impl(ExternalClusterOptions opts) : options(std::move(opts)) {
    const std::size_t budget = options.memory_budget_bytes;
    // Buffer shares of the budget; the rest covers the reader buffers used
    // during merging and general process overhead.
    arena_capacity = std::max<std::size_t>(budget / 100 * 55, 1 << 16);
    offsets_capacity = std::max<std::size_t>(budget / 100 * 10 / sizeof(std::uint64_t), 1024);
    max_fan_in = std::max<std::size_t>(budget / 100 * 20 / kReaderBuffer, 2);
    arena.reserve(arena_capacity);
    offsets.reserve(offsets_capacity);
  }

  ~Impl() {
    std::error_code ec;
    if (!run_dir.empty()) std::filesystem::remove_all(run_dir, ec);
  }

  std::filesystem::path next_run_path() {
    if (run_dir.empty()) {
      run_dir = options.temp_dir /
                fmt::format("hashtriage-runs-{}-{}", ::getpid(),
                            g_spill_dir_counter.fetch_add(1));
      std::filesystem::create_directories(run_dir);
    }
    return run_dir / fmt::format("run-{:06}.bin", files_created++);
  }
  std::size_t files_created = 0;

  Entry entry_at(std::uint64_t off) const {
    Entry e;
    std::memcpy(e.hash.data(), arena.data() + off, kHashBytes);
    std::memcpy(&e.positives, arena.data() + off + kHashBytes, 4);
    std::uint32_t len = 0;
    std::memcpy(&len, arena.data() + off + kHashBytes + 4, 4);
    e.url.assign(arena.data() + off + kEntryHeader, len);
    return e;
  }

  std::string_view url_at(std::uint64_t off) const {
    std::uint32_t len = 0;
    std::memcpy(&len, arena.data() + off + kHashBytes + 4, 4);
    return {arena.data() + off + kEntryHeader, len};
  }

  void sort_buffer() {
    std::sort(offsets.begin(), offsets.end(),
              [this](std::uint64_t a, std::uint64_t b) {
                const int c = std::memcmp(arena.data() + a, arena.data() + b,
                                          kHashBytes);
                if (c != 0) return c < 0;
                return url_at(a) < url_at(b);
              });
  }

  void spill() {
    if (offsets.empty()) return;
    sort_buffer();
    const auto path = next_run_path();
    File f = open_file(path, "wb");
    std::vector<char> buf(std::size_t{1} << 20);
    std::setvbuf(f.get(), buf.data(), _IOFBF, buf.size());
    for (auto off : offsets) {
      std::fwrite(arena.data() + off, 1, kEntryHeader + url_at(off).size(), f.get());
    }
    if (std::fflush(f.get()) != 0) throw std::runtime_error("run spill failed");
    f.reset();
    runs.push_back(path);
    arena.clear();
    offsets.clear();
  }

  // Merges `inputs` in (hash, url) order, calling `out` per entry.
  template <typename Out>
  void merge(const std::vector<std::filesystem::path>& inputs, Out&& out) {
    std::vector<RunReader> readers;
    readers.reserve(inputs.size());
    for (const auto& p : inputs) readers.emplace_back(p);
    std::vector<Entry> heads(readers.size());
    auto greater = [&heads](std::size_t a, std::size_t b) {
      return entry_less(heads[b], heads[a]);
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)>
        heap(greater);
    for (std::size_t i = 0; i < readers.size(); ++i) {
      if (readers[i].next(heads[i])) heap.push(i);
    }
    while (!heap.empty()) {
      const std::size_t i = heap.top();
      heap.pop();
      out(heads[i]);
      if (readers[i].next(heads[i])) heap.push(i);
    }
  }

  void reduce_runs() {
    while (runs.size() > max_fan_in) {
      std::vector<std::filesystem::path> batch(runs.begin(),
                                               runs.begin() + max_fan_in);
      std::vector<std::filesystem::path> remaining(runs.begin() + max_fan_in,
                                                   runs.end());
      runs = std::move(remaining);
      const auto path = next_run_path();
      {
        File f = open_file(path, "wb");
        merge(batch, [&](const Entry& e) {
          write_entry(f.get(), e.hash, e.positives, e.url);
        });
      }
      for (const auto& p : batch) std::filesystem::remove(p);
      runs.push_back(path);
    }
  }
};

ExternalClusterer::ExternalClusterer(ExternalClusterOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

ExternalClusterer::~ExternalClusterer() = default;

bool ExternalClusterer::add(const SubmissionRecord& record) {
  if (!record.content_hash) return false;
  if (record.content_hash->size() != kHashBytes * 2 ||
      !is_lower_hex(*record.content_hash)) {
    throw std::invalid_argument("content hash is not 64 lowercase hex digits: " +
                                *record.content_hash);
  }
  Impl& s = *impl_;
  const std::string url = normalize_url(record.url);
  const std::size_t need = kEntryHeader + url.size();
  if (s.arena.size() + need > s.arena_capacity ||
      s.offsets.size() >= s.offsets_capacity) {
    s.spill();
  }
  const Digest d = digest_from_hex(*record.content_hash);
  const auto len = static_cast<std::uint32_t>(url.size());
  s.offsets.push_back(s.arena.size());
  s.arena.insert(s.arena.end(), d.begin(), d.end());
  const char* pos = reinterpret_cast<const char*>(&record.positives);
  s.arena.insert(s.arena.end(), pos, pos + 4);
  const char* l = reinterpret_cast<const char*>(&len);
  s.arena.insert(s.arena.end(), l, l + 4);
  s.arena.insert(s.arena.end(), url.begin(), url.end());
  ++s.added;
  return true;
}

void ExternalClusterer::finish(const std::function<void(Cluster&&)>& sink) {
  Impl& s = *impl_;
  ClusterAssembler assembler(sink);
  if (s.runs.empty()) {
    // Everything fit in memory.
    s.sort_buffer();
    for (auto off : s.offsets) assembler.push(s.entry_at(off));
    assembler.flush();
    s.arena.clear();
    s.offsets.clear();
    return;
  }
  s.spill();
  // Release the run buffer before merging.
  std::vector<char>().swap(s.arena);
  std::vector<std::uint64_t>().swap(s.offsets);
  s.reduce_runs();
  s.merge(s.runs, [&](const Entry& e) { assembler.push(e); });
  assembler.flush();
}

std::size_t ExternalClusterer::run_count() const { return impl_->runs.size(); }

std::uint64_t ExternalClusterer::records_added() const { return impl_->added; }

}  // namespace hashtriage

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hashtriage::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // I/O or provider-fatal
inline constexpr int kExitUsage = 2;

// Entry point behind the hashtriage binary. `args` excludes the program
// name. Data goes to `out` when an output path is "-", diagnostics and
// counters to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

// "4096", "64K", "256M", "2G" -> bytes.
bool parse_byte_size(const std::string& text, std::size_t& bytes);

}  // namespace hashtriage::cli

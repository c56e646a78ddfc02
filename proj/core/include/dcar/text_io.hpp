#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dcar::text {

/// Shortest-roundtrip is not required by the formats; every real is written
/// with 17 significant digits so that write -> read -> write is byte-exact.
std::string format_real(double value);

double parse_real(std::string_view token);
long long parse_integer(std::string_view token);

std::vector<std::string> split_whitespace(std::string_view line);

/// Writes the values of `v` on one line, separated by single spaces.
void write_row(std::ostream& out, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Line reader that tracks line numbers for diagnostics and skips nothing.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source);

  /// Next line split into tokens; throws DataError at end of input.
  std::vector<std::string> tokens();
  /// Next line tokens, or false at clean end of input (blank trailing lines
  /// are ignored).
  bool try_tokens(std::vector<std::string>& out);

  Eigen::VectorXd real_row(Eigen::Index expected);

  [[noreturn]] void fail(const std::string& what) const;

  std::size_t line_number() const { return line_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

/// Stable 64-bit FNV-1a hash, used to derive per-track seeds.
std::uint64_t fnv1a(std::string_view s);

}  // namespace dcar::text

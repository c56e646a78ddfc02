#include "dcar/text_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <system_error>

#include "dcar/error.hpp"

namespace dcar::text {

std::string format_real(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw DataError("not a real number: '" + std::string(token) + "'");
  }
  return value;
}

long long parse_integer(std::string_view token) {
  long long value = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw DataError("not an integer: '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                               line[i] == '\r' || line[i] == '\n')) {
      ++i;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' &&
           line[j] != '\r' && line[j] != '\n') {
      ++j;
    }
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::VectorXd>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out << ' ';
    out << format_real(v(i));
  }
  out << '\n';
}

LineReader::LineReader(std::istream& in, std::string source)
    : in_(in), source_(std::move(source)) {}

bool LineReader::try_tokens(std::vector<std::string>& out) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    out = split_whitespace(line);
    if (!out.empty()) return true;
  }
  return false;
}

std::vector<std::string> LineReader::tokens() {
  std::vector<std::string> out;
  if (!try_tokens(out)) fail("unexpected end of input");
  return out;
}

Eigen::VectorXd LineReader::real_row(Eigen::Index expected) {
  auto toks = tokens();
  if (static_cast<Eigen::Index>(toks.size()) != expected) {
    fail("expected " + std::to_string(expected) + " values, found " +
         std::to_string(toks.size()));
  }
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    try {
      v(i) = parse_real(toks[static_cast<std::size_t>(i)]);
    } catch (const DataError& e) {
      fail(e.what());
    }
  }
  return v;
}

void LineReader::fail(const std::string& what) const {
  throw DataError(source_ + ":" + std::to_string(line_) + ": " + what);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace dcar::text

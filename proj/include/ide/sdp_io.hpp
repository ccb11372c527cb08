#pragma once

// Plain-text problem instances (.sdp):
//
//   n m seed
//   <n lines of A, row-major, m values each>
//   <one line: x, n values>
//   <optional line: s, m values>
//
// Values are written with 17 significant digits so a round trip is exact.

#include "ide/problem.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <algorithm>
#include <vector>

namespace ide {

namespace detail {

inline void write_row(std::ostream& out, const auto& values) {
  char buf[32];
  for (Index i = 0; i < values.size(); ++i) {
    auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<double>(values[i]),
                             std::chars_format::general, 17);
    if (i) out << ' ';
    out.write(buf, res.ptr - buf);
  }
  out << '\n';
}

/// Whitespace tokenizer that remembers which line each token came from.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    while (!(line_stream_ >> tok)) {
      std::string line;
      if (!std::getline(in_, line)) return false;
      ++line_no_;
      line_stream_.clear();
      line_stream_.str(line);
    }
    return true;
  }

  double next_double(const char* what) {
    std::string tok;
    if (!next(tok)) fail(std::string("unexpected end of file while reading ") + what);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      fail("malformed number '" + tok + "' in " + what);
    return v;
  }

  std::uint64_t next_uint(const char* what) {
    std::string tok;
    if (!next(tok)) fail(std::string("unexpected end of file while reading ") + what);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      fail("malformed integer '" + tok + "' in " + what);
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::parse_error, "line " + std::to_string(std::max(line_no_, 1)) + ": " + msg);
  }

  int line() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::istringstream line_stream_;
  int line_no_ = 0;
};

}  // namespace detail

inline void write_sdp(std::ostream& out, const SparseProblem& problem) {
  out << problem.n() << ' ' << problem.m() << ' ' << problem.seed() << '\n';
  for (Index i = 0; i < problem.n(); ++i) detail::write_row(out, problem.a().row(i));
  detail::write_row(out, problem.mixture());
  if (problem.truth()) detail::write_row(out, problem.truth()->values);
}

inline SparseProblem read_sdp(std::istream& in) {
  detail::TokenReader reader(in);
  const auto n = static_cast<Index>(reader.next_uint("header n"));
  const auto m = static_cast<Index>(reader.next_uint("header m"));
  const std::uint64_t seed = reader.next_uint("header seed");
  if (n == 0 || n >= m) reader.fail("header requires 0 < n < m");

  Matrix a(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) a(i, j) = reader.next_double("dictionary");
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = reader.next_double("mixture");

  std::optional<SourceVector> truth;
  std::string tok;
  if (reader.next(tok)) {
    Vector s(m);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      reader.fail("malformed number '" + tok + "' in source");
    s[0] = v;
    for (Index i = 1; i < m; ++i) s[i] = reader.next_double("source");
    if (reader.next(tok)) reader.fail("trailing data after source vector");
    truth = SourceVector{std::move(s), SourceModel::external};
  }

  try {
    return SparseProblem(Dictionary(std::move(a)), std::move(x), std::move(truth), seed);
  } catch (const Error& e) {
    throw Error(ErrorCode::parse_error, std::string("invalid instance: ") + e.what());
  }
}

inline void save_sdp(const std::string& path, const SparseProblem& problem) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
  write_sdp(out, problem);
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

inline SparseProblem load_sdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return read_sdp(in);
}

}  // namespace ide

#include "riffle/permutation.hpp"

#include <numeric>
#include <sstream>

#include "riffle/error.hpp"

namespace riffle {

Permutation identity_permutation(std::size_t n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0U);
  return p;
}

bool is_permutation(const Permutation& p) {
  std::vector<char> seen(p.size(), 0);
  for (auto v : p) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

Permutation inverse(const Permutation& p) {
  Permutation q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[p[i]] = static_cast<std::uint32_t>(i);
  return q;
}

Permutation compose(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) fail(ErrorCode::SizeMismatch, "composing permutations of different sizes");
  Permutation c(a.size());
  for (std::size_t i = 0; i < b.size(); ++i) c[i] = a[b[i]];
  return c;
}

std::uint64_t factorial(std::size_t n) {
  if (n > 20) fail(ErrorCode::TooLarge, "factorial overflows 64 bits");
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

std::uint64_t lehmer_rank(const Permutation& p) {
  const std::size_t n = p.size();
  std::uint64_t rank = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t smaller = 0;
    for (std::size_t j = i + 1; j < n; ++j) smaller += p[j] < p[i];
    rank = rank * (n - i) + smaller;
  }
  return rank;
}

Permutation lehmer_unrank(std::uint64_t rank, std::size_t n) {
  std::vector<std::uint64_t> digits(n);
  for (std::size_t i = n; i-- > 0;) {
    const std::uint64_t base = n - i;
    digits[i] = rank % base;
    rank /= base;
  }
  std::vector<std::uint32_t> pool = identity_permutation(n);
  Permutation p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = pool[digits[i]];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(digits[i]));
  }
  return p;
}

std::string to_string(const Permutation& p) {
  std::ostringstream os;
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? " " : "") << p[i] + 1;
  return os.str();
}

Permutation parse_permutation(const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  Permutation p;
  long long v;
  while (is >> v) {
    if (v < 1) fail(ErrorCode::ParseError, "permutation entries are 1-based");
    p.push_back(static_cast<std::uint32_t>(v - 1));
  }
  if (!is.eof()) fail(ErrorCode::ParseError, "bad permutation text: " + text);
  if (!is_permutation(p)) fail(ErrorCode::ParseError, "not a permutation: " + text);
  return p;
}

}  // namespace riffle

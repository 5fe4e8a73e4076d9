#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace riffle {

/// One-line notation, stored 0-based: perm[i] is the image of i.
///
/// A deck is a permutation read as deck[position] = card; the text form
/// (to_string / parse_permutation) is 1-based.
using Permutation = std::vector<std::uint32_t>;

Permutation identity_permutation(std::size_t n);
bool is_permutation(const Permutation& p);
Permutation inverse(const Permutation& p);
/// (a o b)[i] = a[b[i]].
Permutation compose(const Permutation& a, const Permutation& b);

std::uint64_t factorial(std::size_t n);
/// Lehmer-code rank in [0, n!), identity has rank 0.
std::uint64_t lehmer_rank(const Permutation& p);
Permutation lehmer_unrank(std::uint64_t rank, std::size_t n);

std::string to_string(const Permutation& p);
/// Parses "3 1 2" or "3,1,2" (1-based).
Permutation parse_permutation(const std::string& text);

}  // namespace riffle

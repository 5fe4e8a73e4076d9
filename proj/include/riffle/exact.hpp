#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <string>
#include <vector>

#include "riffle/permutation.hpp"
#include "riffle/shuffle.hpp"

namespace riffle {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

constexpr std::size_t kMaxExactN = 8;

/// Law on S_N held as integer counts over a common denominator; entry r is
/// the deck with Lehmer rank r.
struct ExactDistribution {
  std::size_t N = 0;
  BigInt denominator = 1;
  std::vector<BigInt> counts;

  Rational probability(std::uint64_t rank) const;
  double probability_double(std::uint64_t rank) const;
  /// Exact equality of the two laws (cross-multiplied).
  bool same_law(const ExactDistribution& other) const;
  std::size_t support_size() const;
};

ExactDistribution point_mass_distribution(const Permutation& deck);

/// Law of one step as (interleaving rank, probability): deck d becomes
/// d o tau.
struct StepLaw {
  std::size_t N = 0;
  BigInt denominator = 1;
  std::vector<std::pair<std::uint64_t, BigInt>> weights;
};

/// All interleavings tau for the given piles, one per arrangement of the
/// pile labels over positions.
std::vector<Permutation> interleavings(const PileSizes& piles);

/// Law of the cut at step t as exact rationals. Random cuts are exact for
/// uniform_cut and multinomial (p read as exact binary fractions); cuts
/// drawn from a continuous measure use quadrature probabilities converted
/// to rationals and renormalized.
std::vector<std::pair<PileSizes, Rational>> cut_law(const CutProcess& process, std::size_t N, std::size_t t);

StepLaw step_law(const std::vector<std::pair<PileSizes, Rational>>& cuts, std::size_t N);

/// new[sigma o tau] += old[sigma] w(tau).
ExactDistribution convolve(const ExactDistribution& dist, const StepLaw& step);

/// Law of shuffle_K(identity) for N <= 8; throws TooLarge beyond.
ExactDistribution exact_shuffle_distribution(std::size_t N, const std::vector<PileSizes>& piles);
ExactDistribution exact_shuffle_distribution(std::size_t N, const CutProcess& process, std::size_t K);

struct ExactTv {
  Rational value;
  double approx;
};

/// (1/2) sum_sigma |P(sigma) - 1/N!|, unreached permutations included.
ExactTv exact_tv(const ExactDistribution& dist);

/// Law of (pi^G)^{-1} with G from a uniform shuffle matrix, computed by
/// enumerating every matrix and every pi.
ExactDistribution exact_inverse_construction_law(std::size_t N, const std::vector<PileSizes>& piles);

}  // namespace riffle

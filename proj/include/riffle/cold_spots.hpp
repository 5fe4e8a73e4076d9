#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "riffle/permutation.hpp"
#include "riffle/shuffle.hpp"
#include "riffle/simplex.hpp"

namespace riffle {

struct ColdSpotParams {
  double delta = 0.1;
  double chi = 0.05;
  double rho = 0.0;
  std::size_t prefix_cap = 1000000;
  std::uint64_t seed = 1;
};

struct CellQuota {
  CellKey cell;
  SimplexPoint p;                  // representative used for the targets
  std::size_t steps = 0;           // steps t <= A in this cell
  std::vector<double> target;      // frak p_l times steps, zero outside T
  std::vector<std::size_t> quota;  // integer digit counts
};

/// Union of expected-location intervals of the collision-likely prefixes.
struct ColdSpotSet {
  std::size_t N = 0;
  std::vector<std::pair<std::size_t, std::size_t>> intervals;  // 1-based, inclusive, disjoint, sorted
  std::size_t size = 0;                                        // |H|
  std::size_t boundary = 0;  // #{i < N : exactly one of i, i+1 in H}
  std::size_t prefix_length = 0;  // A = alpha_tot log N
  double prefix_total = 0;        // |Pre_CL|
  std::size_t prefix_count = 0;   // prefixes actually used
  bool subsampled = false;
  double info_sum = 0;  // sum_i h_i I(p^(i), (p^(i))^theta)
  std::vector<CellQuota> quotas;
  ColdSpotParams params;
  bool size_ok = false;      // |H| >= N^{1/2}
  bool boundary_ok = false;  // |dH| <= 2 |H|^{1/2}

  bool contains(std::size_t i) const;
};

/// Throws TooFewSteps unless K > A + 2 rho log N, DegenerateMixture when
/// every atom is a vertex, QuotaInfeasible when a cell has steps but no
/// coordinate above chi.
ColdSpotSet build_cold_spots(const std::vector<PileSizes>& piles, const CellMixture& mu, double theta,
                             const ColdSpotParams& params = {});

/// #{i in H, i < N : sigma(i) < sigma(i+1)}, sigma in the inverse view
/// (sigma(i) = position of card i).
std::size_t ascent_statistic(const Permutation& sigma, const ColdSpotSet& H);
/// Same statistic for a deck (inverts first).
std::size_t ascent_statistic_of_deck(const Permutation& deck, const ColdSpotSet& H);

struct TestReport {
  double statistic;
  double threshold;
  bool reject;  // reject uniformity iff statistic > threshold
};

/// Threshold |H|/2 + |H|^{1/2 + delta/2}.
double cold_spot_threshold(const ColdSpotSet& H, double delta);
TestReport cold_spot_test(const Permutation& sigma, const ColdSpotSet& H, double delta);

}  // namespace riffle

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "riffle/cold_spots.hpp"
#include "riffle/permutation.hpp"
#include "riffle/shuffle.hpp"

namespace riffle {

struct Interval {
  double lo;
  double hi;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence = 0.99);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Rising sequences of a deck: 1 + #{v : pos(v+1) < pos(v)}.
std::size_t rising_sequences(const Permutation& deck);
/// Same count from the inverse view sigma = pos.
std::size_t rising_sequences_of_inverse(const Permutation& sigma);

/// Longest i..j with sigma(i) < ... < sigma(j).
std::size_t longest_increasing_run(const Permutation& sigma);
std::size_t longest_increasing_run_of_deck(const Permutation& deck);

enum class StatisticKind { RisingSequences, LongestRun, ColdSpotAscents };
std::string to_string(StatisticKind kind);
StatisticKind parse_statistic(const std::string& name);

struct StatisticSpec {
  StatisticKind kind = StatisticKind::LongestRun;
  /// Fix the event {stat >= c} (direction +1) or {stat <= c} (-1); when
  /// unset a pilot run picks both.
  std::optional<double> threshold;
  int direction = 0;
  /// Required for ColdSpotAscents.
  std::optional<ColdSpotSet> H;
};

/// Statistic of sigma in the inverse view.
double evaluate_statistic(const StatisticSpec& spec, const Permutation& sigma);

struct TvBoundReport {
  std::size_t N = 0;
  std::size_t K = 0;
  std::string statistic;
  int direction = 0;
  double threshold = 0;
  std::size_t samples = 0;
  std::size_t pilot_samples = 0;
  double p_shuffled = 0;
  Interval ci_shuffled{};
  double p_uniform = 0;
  Interval ci_uniform{};
  double estimate = 0;        // p_shuffled - p_uniform
  Interval ci{};              // [lo_s - hi_u, hi_s - lo_u], clipped to [-1, 1]
  double lower_bound = 0;     // max(0, ci.lo)
  double half_width() const { return 0.5 * (ci.hi - ci.lo); }
};

struct McOptions {
  std::size_t samples = 10000;
  std::size_t pilot_samples = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double confidence = 0.99;
};

/// TV >= P_shuffled(A) - P_uniform(A) for the event A = {stat >= c} or
/// {stat <= c}. Shuffled decks come from sample_inverse_shuffled_perm's
/// inverse view, uniform ones from Fisher-Yates. The pilot that chooses
/// the event uses its own streams.
TvBoundReport tv_lower_bound_mc(const CutProcess& process, std::size_t N, std::size_t K,
                                const StatisticSpec& statistic, const McOptions& options);

/// Every window of L consecutive vertices holds at most floor(L/3) edges.
bool is_L_sparse(const ShuffleGraph& G, std::size_t L);

/// |E(G) intersect E(G')|.
std::size_t shared_edges(const ShuffleGraph& G, const ShuffleGraph& H);

struct FirstMomentRow {
  std::size_t N;
  std::size_t K;
  std::size_t trials;  // pile sequences
  std::size_t pairs;   // trials * C(m, 2)
  double mean;
  double std_error;    // across pile sequences
};

/// Each trial draws one pile sequence and m independent graphs for it; the
/// trial's value is the average of |E(G) cap E(G')| over all C(m, 2) pairs.
/// m = 2 is the plain pair estimator.
std::vector<FirstMomentRow> first_moment_scan(const CutProcess& process, const std::vector<std::size_t>& Ns,
                                              const std::function<std::size_t(std::size_t)>& K_of_N,
                                              std::size_t trials, std::uint64_t seed, unsigned threads = 1,
                                              std::size_t graphs_per_trial = 2);

struct CutoffRow {
  std::size_t N;
  std::size_t K;
  double multiple;     // grid value
  double K_over_logN;  // actual ratio
  double C_bar;
  TvBoundReport bound;
  std::optional<double> exact_tv;
};

/// K = round(multiple * log N) over the grid; N <= 7 adds exact TV.
std::vector<CutoffRow> cutoff_scan(const CutProcess& process, double C_bar, const std::vector<std::size_t>& Ns,
                                   const std::vector<double>& multiples, const StatisticSpec& statistic,
                                   const McOptions& options);

}  // namespace riffle

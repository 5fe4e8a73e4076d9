#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "riffle/permutation.hpp"
#include "riffle/random.hpp"
#include "riffle/simplex.hpp"

namespace riffle {

/// Card counts (n_0, ..., n_{k-1}); pile 0 is the top of the deck.
using PileSizes = std::vector<std::size_t>;

std::size_t total(const PileSizes& piles);
/// argmax with the lowest index winning ties.
std::size_t l_max(const PileSizes& piles);

struct CutProcess;

/// Steps cycle through the list.
struct ExplicitSequence {
  std::vector<PileSizes> steps;
};
/// n ~ Mult(N, p) independently each step.
struct IIDMultinomial {
  SimplexPoint p;
};
enum class Rounding { Multinomial, LargestRemainder };
/// p ~ mu each step, then Mult(N, p) or largest-remainder rounding of N p.
struct IIDFromMeasure {
  SimplexMeasure mu;
  Rounding rounding = Rounding::Multinomial;
};
/// n ~ Unif{0, ..., N}, piles (n, N - n).
struct UniformCut {};
/// (floor(N/2), N - floor(N/2)).
struct ExactBisection {};
/// Largest-remainder rounding of N q, e.g. q = (1/3, 2/3).
struct FixedFraction {
  std::vector<double> q;
};
/// Step t follows rule (t-1) mod cycle length.
struct Periodic {
  std::vector<CutProcess> cycle;
};

struct CutProcess {
  std::variant<ExplicitSequence, IIDMultinomial, IIDFromMeasure, UniformCut, ExactBisection,
               FixedFraction, Periodic>
      rule;
};

CutProcess gsr_process();
std::string describe(const CutProcess& process);
/// Largest number of piles the process can emit.
std::size_t pile_count(const CutProcess& process);

/// Largest-remainder rounding of N q; ties to the lowest index.
PileSizes round_largest_remainder(std::size_t N, const std::vector<double>& q);

/// Pile sizes for step t (1-based).
PileSizes cut_sizes(const CutProcess& process, std::size_t N, std::size_t t, Stream& rng);

/// Steps 1..K, step t drawn from rng.split(t).
std::vector<PileSizes> pile_sequence(const CutProcess& process, std::size_t N, std::size_t K,
                                     const Stream& rng);

/// Cuts deck top-down into the piles and interleaves them, dropping the
/// next card from pile i with probability A_i / (A_0 + ... + A_{k-1}).
Permutation riffle_once(const Permutation& deck, const PileSizes& piles, Stream& rng);

/// K successive riffles; step t uses rng.split(t) for both its cut and its
/// interleaving.
Permutation shuffle_K(const Permutation& deck, const CutProcess& process, std::size_t K,
                      const Stream& rng);

/// N x K digit matrix, column t a uniform arrangement of its pile labels.
struct ShuffleMatrix {
  std::size_t N = 0;
  std::size_t K = 0;
  std::vector<std::uint8_t> digits;  // row-major, N * K
  std::vector<PileSizes> column_counts;

  std::uint8_t at(std::size_t row, std::size_t col) const { return digits[row * K + col]; }
};

ShuffleMatrix sample_shuffle_matrix(const std::vector<PileSizes>& piles, const Stream& rng);

/// Rows in lexicographic order (column 0 most significant), stable.
struct SortedStrings {
  std::size_t N = 0;
  std::size_t K = 0;
  std::vector<std::uint8_t> digits;  // row-major, sorted
  std::vector<std::uint32_t> source_row;

  std::uint8_t at(std::size_t row, std::size_t col) const { return digits[row * K + col]; }
  bool equal_rows(std::size_t i, std::size_t j) const;
};

SortedStrings sort_lex(const ShuffleMatrix& matrix);

/// Subgraph of the path 1 - 2 - ... - N. edges holds i (1-based) for each
/// edge (i, i+1), ascending.
struct ShuffleGraph {
  std::size_t N = 0;
  std::vector<std::uint32_t> edges;

  /// Maximal runs [first, last] of vertices (1-based) joined by edges,
  /// singletons omitted.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> components() const;
};

ShuffleGraph shuffle_graph(const SortedStrings& sorted);

/// sigma^G: values sorted within each G-component.
Permutation graph_sort(const Permutation& sigma, const ShuffleGraph& G);

/// Samples the shuffle graph of a uniform shuffle matrix without building
/// the matrix: tied groups of sorted rows are split column by column with
/// multivariate hypergeometric draws from the remaining digit pool. Equal
/// in law to shuffle_graph(sort_lex(sample_shuffle_matrix(piles, .))).
ShuffleGraph sample_shuffle_graph(const std::vector<PileSizes>& piles, const Stream& rng);

/// pi^G for uniform pi: the inverse of the deck after the shuffles.
Permutation sample_sigma_given_piles(const std::vector<PileSizes>& piles, const Stream& rng);

/// Deck X_K = (pi^G)^{-1} for the given process.
Permutation sample_inverse_shuffled_perm(const CutProcess& process, std::size_t N, std::size_t K,
                                         const Stream& rng);

/// Same law through an explicit matrix and sort; used to cross-check.
Permutation sample_inverse_shuffled_perm_matrix(const CutProcess& process, std::size_t N,
                                                std::size_t K, const Stream& rng);

/// lambda_x = prod_t n^{(t)}_{x[t]} / N.
double lambda_of_prefix(const std::vector<PileSizes>& piles, const std::vector<std::uint8_t>& x);

struct PrefixInterval {
  double t;       // t_x
  double lambda;  // lambda_x
  double end() const { return t + lambda; }
};

/// J_x = [t_x, t_x + lambda_x).
PrefixInterval prefix_interval(const std::vector<PileSizes>& piles, const std::vector<std::uint8_t>& x);

/// Good iff the normalized point is outside every cap {p_i > 1 - chi}.
bool is_chi_good(const PileSizes& piles, double chi);

struct AlmostMuLike {
  bool ok;
  std::optional<std::size_t> t_star;
};

/// Scans t_* in [0, rho log N) and full windows of length rho log N; each
/// window's cell frequencies must be within varphi of the cell masses.
AlmostMuLike is_almost_mu_like(const std::vector<PileSizes>& piles, const CellMixture& mu, double rho,
                               double varphi);

}  // namespace riffle

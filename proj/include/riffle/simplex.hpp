#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "riffle/random.hpp"

namespace riffle {

/// A point of the probability simplex D_k.
using SimplexPoint = std::vector<double>;

/// Throws InvalidArgument unless coordinates lie in [0,1] and sum to 1 (1e-12).
void validate_point(std::span<const double> p);

/// True iff some coordinate equals 1.
bool is_vertex(std::span<const double> p);

struct MaxCoord {
  double value;
  std::size_t index;
};

/// Largest coordinate; ties go to the lowest index.
MaxCoord p_max(std::span<const double> p);

struct PointMass {
  SimplexPoint p;
};

struct FiniteMixture {
  std::vector<double> weights;
  std::vector<SimplexPoint> atoms;
};

/// p = (q, 1-q) with q ~ Beta(a, b).
struct BetaMeasure {
  double a;
  double b;
};

struct Dirichlet {
  std::vector<double> alpha;
};

/// p = (q, 1-q) with q uniform on [lo, hi].
struct UniformInterval {
  double lo;
  double hi;
};

struct Empirical {
  std::vector<SimplexPoint> samples;
};

using SimplexMeasure =
    std::variant<PointMass, FiniteMixture, BetaMeasure, Dirichlet, UniformInterval, Empirical>;

std::size_t dimension(const SimplexMeasure& mu);

/// Checks every invariant of the variant; throws InvalidArgument.
void validate(const SimplexMeasure& mu);

/// True iff mu(V_k) = 1 (only possible for atomic variants).
bool is_degenerate(const SimplexMeasure& mu);

/// Short human-readable name, e.g. "Beta(2,16)".
std::string describe(const SimplexMeasure& mu);

struct PrecisionConfig {
  std::size_t quadrature_nodes = 256;
  std::size_t mc_samples = 1000000;
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
};

void validate(const PrecisionConfig& cfg);

/// A measure replaced by finitely many weighted nodes.
///
/// Quadrature rules for the k = 2 families, Monte-Carlo draws for
/// Dirichlet, atoms for the atomic variants. Logs of the coordinates are
/// cached because every functional we integrate is built from them.
struct DiscreteApprox {
  std::size_t k = 0;
  std::vector<double> coords;  // row-major, size() * k
  std::vector<double> logs;    // log of coords, -inf for zeros
  std::vector<double> weights;
  bool monte_carlo = false;
  std::string method;

  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * k, k}; }
  std::span<const double> log_point(std::size_t i) const { return {logs.data() + i * k, k}; }
};

DiscreteApprox approximate(const SimplexMeasure& mu, const PrecisionConfig& cfg);

struct Expectation {
  double value;
  double std_error;  // 0 for deterministic rules
  std::string method;
};

using PointFunctional = std::function<double(std::span<const double>)>;

Expectation expect_functional(const SimplexMeasure& mu, const PointFunctional& g,
                              const PrecisionConfig& cfg);
Expectation expect_functional(const DiscreteApprox& approx, const PointFunctional& g);

/// One draw p ~ mu. Draws landing exactly on a vertex are redrawn for the
/// continuous families.
SimplexPoint sample_point(const SimplexMeasure& mu, Stream& rng);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

/// Cell key: {-1, i} for the vertex cap around v_i, otherwise the Kuhn
/// simplex given by floor vector and fractional order.
using CellKey = std::vector<std::int32_t>;

/// Partition of D_k into k vertex caps {p_i > 1 - chi} and a Freudenthal
/// triangulation of the rest, built on cumulative coordinates
/// c_j = m (p_0 + ... + p_{j-1}) for j = 1..k-1.
class SimplexPartition {
 public:
  SimplexPartition(std::size_t k, double chi);

  std::size_t k() const { return k_; }
  double chi() const { return chi_; }
  std::size_t resolution() const { return m_; }
  /// Upper bound on the L-infinity diameter of the non-cap cells.
  double cell_diameter() const { return 1.0 / static_cast<double>(m_); }

  CellKey cell_of(std::span<const double> p) const;
  static bool is_cap(const CellKey& key) { return !key.empty() && key[0] < 0; }
  static std::string label(const CellKey& key);

 private:
  std::size_t k_;
  double chi_;
  std::size_t m_;
};

/// Finite approximation sum_i mu(D_i) delta_{p^(i)} with its partition.
struct CellMixture {
  SimplexPartition partition;
  std::vector<CellKey> cells;
  std::vector<double> weights;
  std::vector<SimplexPoint> atoms;

  FiniteMixture mixture() const { return {weights, atoms}; }
  /// Index into cells for this key, or -1.
  std::ptrdiff_t find(const CellKey& key) const;
  double mass(const CellKey& key) const;
};

/// Atoms are the mu-weighted mean of the mass falling in each cell, which
/// lies in the cell because cells are convex. Continuous measures are
/// estimated from cfg.mc_samples draws.
CellMixture discretize_measure(const SimplexMeasure& mu, double chi, const PrecisionConfig& cfg);

}  // namespace riffle

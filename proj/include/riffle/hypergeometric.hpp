#pragma once

#include <cstdint>
#include <vector>

#include "riffle/random.hpp"

namespace riffle {

/// Hyp(n1, n, m): overlap of uniform subsets of [n] of sizes n1 and m.
///
/// Exact inversion sampler driven by the ratio
/// q(k) = p(k+1)/p(k) = (m-k)(n1-k) / ((k+1)(n-n1-m+k+1)).
/// Symmetries reduce to n1, m <= n/2; small means invert from 0, larger
/// ones search outward from the mode.
class HypergeometricSampler {
 public:
  HypergeometricSampler(std::uint64_t n1, std::uint64_t n, std::uint64_t m);
  std::uint64_t operator()(Stream& rng) const;

  double mean() const;

 private:
  std::uint64_t core(Stream& rng) const;

  std::uint64_t n1_, n_, m_;
  std::uint64_t c_, mm_;  // reduced parameters
  bool flip_n1_, flip_m_;
  bool trivial_;
  std::uint64_t trivial_value_;
  bool from_zero_;
  std::uint64_t start_;   // 0 or the mode
  long double p_start_;
  std::uint64_t kmax_;
};

std::uint64_t hypergeometric_sample(std::uint64_t n1, std::uint64_t n, std::uint64_t m, Stream& rng);

/// Direct log pmf from log-factorials (long double).
long double hypergeometric_log_pmf(std::uint64_t k, std::uint64_t n1, std::uint64_t n, std::uint64_t m);

struct HypergeometricPmf {
  std::uint64_t kmin;
  std::vector<long double> p;  // p[i] = P(X = kmin + i)
};

/// Whole pmf from the mode by the q(k) recurrence, the same arithmetic the
/// sampler uses.
HypergeometricPmf hypergeometric_pmf(std::uint64_t n1, std::uint64_t n, std::uint64_t m);

struct ConcentrationRow {
  std::uint64_t n1, n, m;
  double mean;        // E X
  double threshold;   // (E X)^{1/2 + a}
  std::uint64_t trials;
  std::uint64_t hits;
  double frequency;   // P(|X - EX| >= threshold), empirical
  double ci_lo, ci_hi;
  double exact_tail;  // same probability from the pmf
  double hush_scovel; // 2 exp(-2 alpha (t^2 - 1)) with t the threshold
  double c_hat;       // -log(frequency) / (E X)^{2a}
};

ConcentrationRow concentration_report(std::uint64_t n1, std::uint64_t n, std::uint64_t m,
                                      std::uint64_t trials, double a, std::uint64_t seed,
                                      unsigned threads = 1);

}  // namespace riffle

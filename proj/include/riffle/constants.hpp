#pragma once

#include <span>
#include <string>
#include <vector>

#include "riffle/simplex.hpp"

namespace riffle {

/// phi_p(x) = sum_i p_i^x, with 0^x = 0.
double phi(std::span<const double> p, double x);

/// psi_p(x) = -log phi_p(x), evaluated through log-sum-exp.
double psi(std::span<const double> p, double x);

/// Same as psi() but from precomputed log p_i.
double psi_from_logs(std::span<const double> logp, double x);

/// psi_mu(x) = E_mu psi_p(x).
double psi_mu(const SimplexMeasure& mu, double x, const PrecisionConfig& cfg);
double psi_mu(const DiscreteApprox& approx, double x);

constexpr double kThetaTol = 1e-9;

/// Root of psi_mu(theta) = 2 psi_mu(2) on [3, 4] by bisection.
///
/// The approximation is fixed across evaluations, so Monte-Carlo measures
/// see common random numbers and the target stays monotone.
double solve_theta(const SimplexMeasure& mu, const PrecisionConfig& cfg, double tol = kThetaTol);
double solve_theta(const DiscreteApprox& approx, double tol = kThetaTol);

/// H(a) = sum a_i log(a_i / a_tot) / a_tot. Note the sign: H <= 0.
double entropy_H(std::span<const double> a);

/// Conventional Shannon entropy, -entropy_H(a) >= 0.
double shannon_entropy(std::span<const double> a);

/// I(p, p^t) = sum_i p_i^t log(1/p_i) / phi_p(t). Throws VertexPoint.
double info_I(std::span<const double> p, double t);

struct ConstantsBundle {
  double theta;
  double psi2;
  double C;
  double C_tilde;
  double C_bar;
  double psi_theta;       // psi_mu(theta)
  double self_check_rel;  // |C - (3+theta)/(2 psi_theta)| / C
  double psi2_se;         // Monte-Carlo standard error of psi2, 0 otherwise
  bool degenerate;        // mu(V_k) = 1, all constants infinite
  std::string method_note;
};

/// For a degenerate measure returns C = C~ = C_bar = +inf and theta = NaN
/// instead of throwing.
ConstantsBundle constants_bundle(const SimplexMeasure& mu, const PrecisionConfig& cfg);
ConstantsBundle constants_bundle(const DiscreteApprox& approx);

}  // namespace riffle

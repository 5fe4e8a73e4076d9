#include "riffle/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riffle/error.hpp"

namespace riffle {

double phi(std::span<const double> p, double x) {
  double s = 0;
  for (double v : p)
    if (v > 0) s += std::pow(v, x);
  return s;
}

double psi_from_logs(std::span<const double> logp, double x) {
  std::size_t imax = 0;
  for (std::size_t i = 1; i < logp.size(); ++i)
    if (logp[i] > logp[imax]) imax = i;
  const double top = logp[imax];
  double rest = 0;
  for (std::size_t i = 0; i < logp.size(); ++i)
    if (i != imax) rest += std::exp(x * (logp[i] - top));
  return -x * top - std::log1p(rest);
}

double psi(std::span<const double> p, double x) {
  std::vector<double> l(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) l[i] = std::log(p[i]);
  return psi_from_logs(l, x);
}

double psi_mu(const DiscreteApprox& approx, double x) {
  double s = 0;
  for (std::size_t i = 0; i < approx.size(); ++i)
    s += approx.weights[i] * psi_from_logs(approx.log_point(i), x);
  return s;
}

double psi_mu(const SimplexMeasure& mu, double x, const PrecisionConfig& cfg) {
  if (is_degenerate(mu)) fail(ErrorCode::DegenerateMeasure, "mu(V_k) = 1");
  return psi_mu(approximate(mu, cfg), x);
}

namespace {

bool approx_degenerate(const DiscreteApprox& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.weights[i] > 0 && !is_vertex(a.point(i))) return false;
  return true;
}

}  // namespace

double solve_theta(const DiscreteApprox& approx, double tol) {
  if (approx_degenerate(approx)) fail(ErrorCode::DegenerateMeasure, "mu(V_k) = 1");
  const double target = 2 * psi_mu(approx, 2.0);
  auto g = [&](double x) { return psi_mu(approx, x) - target; };
  const double slack = 1e-12 * std::max(1.0, target);
  const double g3 = g(3.0);
  if (g3 > tol) fail(ErrorCode::NoBracket, "psi_mu(3) > 2 psi_mu(2)");
  if (g3 >= -slack) return 3.0;
  if (g(4.0) < -tol) fail(ErrorCode::NoBracket, "psi_mu(4) < 2 psi_mu(2)");
  double lo = 3.0, hi = 4.0;
  for (int it = 0; it < 60 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double solve_theta(const SimplexMeasure& mu, const PrecisionConfig& cfg, double tol) {
  return solve_theta(approximate(mu, cfg), tol);
}

double entropy_H(std::span<const double> a) {
  double total = 0;
  for (double v : a) {
    if (!(v >= 0)) fail(ErrorCode::InvalidArgument, "entropy needs nonnegative masses");
    total += v;
  }
  if (!(total > 0)) fail(ErrorCode::AllZero, "entropy of an all-zero vector");
  double h = 0;
  for (double v : a)
    if (v > 0) h += v * std::log(v / total);
  return h / total;
}

double shannon_entropy(std::span<const double> a) { return -entropy_H(a); }

double info_I(std::span<const double> p, double t) {
  if (is_vertex(p)) fail(ErrorCode::VertexPoint, "I(p, p^t) undefined at a vertex");
  double num = 0, den = 0;
  for (double v : p) {
    if (v <= 0) continue;
    const double w = std::pow(v, t);
    num -= w * std::log(v);
    den += w;
  }
  return num / den;
}

ConstantsBundle constants_bundle(const DiscreteApprox& approx) {
  ConstantsBundle b{};
  b.method_note = approx.method;
  if (approx_degenerate(approx)) {
    const double inf = std::numeric_limits<double>::infinity();
    b.theta = std::numeric_limits<double>::quiet_NaN();
    b.psi2 = 0;
    b.C = b.C_tilde = b.C_bar = inf;
    b.psi_theta = 0;
    b.self_check_rel = 0;
    b.degenerate = true;
    return b;
  }
  b.theta = solve_theta(approx);
  const auto e2 = expect_functional(approx, [](std::span<const double> p) { return psi(p, 2.0); });
  b.psi2 = e2.value;
  b.psi2_se = e2.std_error;
  b.psi_theta = psi_mu(approx, b.theta);
  b.C = (3 + b.theta) / (4 * b.psi2);
  const double alt = (3 + b.theta) / (2 * b.psi_theta);
  b.self_check_rel = std::abs(b.C - alt) / b.C;
  double e_logmax = 0;
  for (std::size_t i = 0; i < approx.size(); ++i) {
    const auto lp = approx.log_point(i);
    e_logmax -= approx.weights[i] * *std::max_element(lp.begin(), lp.end());
  }
  b.C_tilde = e_logmax > 0 ? 1 / e_logmax : std::numeric_limits<double>::infinity();
  b.C_bar = std::max(b.C, b.C_tilde);
  b.degenerate = false;
  return b;
}

ConstantsBundle constants_bundle(const SimplexMeasure& mu, const PrecisionConfig& cfg) {
  return constants_bundle(approximate(mu, cfg));
}

}  // namespace riffle

#include "riffle/psi_class.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "riffle/error.hpp"

namespace riffle {

namespace {

constexpr double kTol = 1e-12;

double log_add(double x, double y) {
  if (x == -std::numeric_limits<double>::infinity()) return y;
  if (y == -std::numeric_limits<double>::infinity()) return x;
  const double m = std::max(x, y);
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

void reject(const std::string& what) { fail(ErrorCode::NotInPsiClass, what); }

}  // namespace

double PsiClassFunction::operator()(double x) const {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& p : pieces_) v = std::min(v, p.a * x - p.b);
  return v;
}

double PsiClassFunction::left_derivative(double x) const {
  const double v = (*this)(x);
  double slope = -std::numeric_limits<double>::infinity();
  for (const auto& p : pieces_)
    if (std::abs(p.a * x - p.b - v) <= kTol * std::max(1.0, std::abs(v))) slope = std::max(slope, p.a);
  return slope;
}

std::vector<double> PsiClassFunction::breakpoints() const {
  std::vector<double> xs{1.0, 4.0};
  for (std::size_t i = 0; i < pieces_.size(); ++i)
    for (std::size_t j = i + 1; j < pieces_.size(); ++j) {
      const double da = pieces_[i].a - pieces_[j].a;
      if (da == 0) continue;
      const double x = (pieces_[i].b - pieces_[j].b) / da;
      if (x > 1 && x < 4 && std::abs((*this)(x) - (pieces_[i].a * x - pieces_[i].b)) <= kTol * std::max(1.0, x * std::abs(pieces_[i].a)))
        xs.push_back(x);
    }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }),
           xs.end());
  return xs;
}

PsiClassFunction make_piecewise_f(std::vector<AffinePiece> pieces) {
  if (pieces.empty()) reject("no pieces");
  for (const auto& p : pieces) {
    if (!std::isfinite(p.a) || !std::isfinite(p.b)) reject("non-finite piece");
    if (p.a < -kTol || p.b < -kTol) reject("pieces need a_j >= 0 and b_j >= 0");
  }
  // equal slopes: keep the lower line
  std::sort(pieces.begin(), pieces.end(), [](const AffinePiece& x, const AffinePiece& y) {
    return x.a != y.a ? x.a > y.a : x.b > y.b;
  });
  std::vector<AffinePiece> merged;
  for (const auto& p : pieces)
    if (merged.empty() || merged.back().a != p.a) merged.push_back(p);
  PsiClassFunction f;
  f.pieces_ = std::move(merged);
  if (std::abs(f(1.0)) > kTol) reject("f(1) must be 0");
  if (!(f(2.0) > 0)) reject("f(2) must be positive");
  double prev = f(1.0) / 1.0;
  for (int i = 1; i <= 3000; ++i) {
    const double x = 1.0 + i * 1e-3;
    const double r = f(x) / x;
    if (r < prev - kTol) reject("f(x)/x must be nondecreasing");
    prev = r;
  }
  return f;
}

PsiConstants theta_and_cbar_of_f(const PsiClassFunction& f, double tol) {
  const double target = 2 * f(2.0);
  // f(x) >= c iff x >= (c + b_j) / a_j for every piece
  double theta = -std::numeric_limits<double>::infinity();
  for (const auto& p : f.pieces()) {
    if (p.a <= 0) continue;
    theta = std::max(theta, (target + p.b) / p.a);
  }
  if (!(theta >= 3 - tol && theta <= 4 + tol))
    fail(ErrorCode::NotInPsiClass, "theta_f outside [3, 4]");
  theta = std::clamp(theta, 3.0, 4.0);
  PsiConstants c{};
  c.theta = theta;
  c.C = (3 + theta) / (4 * f(2.0));
  c.C_tilde = 1 / f.left_derivative(4.0);
  c.C_bar = std::max(c.C, c.C_tilde);
  return c;
}

PsiClassFunction average_f(const PsiClassFunction& f, const PsiClassFunction& g) {
  auto xs = f.breakpoints();
  const auto gx = g.breakpoints();
  xs.insert(xs.end(), gx.begin(), gx.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }),
           xs.end());
  std::vector<AffinePiece> pieces;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i], x1 = xs[i + 1];
    const double y0 = 0.5 * (f(x0) + g(x0)), y1 = 0.5 * (f(x1) + g(x1));
    const double a = (y1 - y0) / (x1 - x0);
    const double b = a * x0 - y0;
    if (!pieces.empty() && std::abs(pieces.back().a - a) <= 1e-12 * std::max(1.0, std::abs(a))) continue;
    pieces.push_back({a, std::abs(b) < kTol ? 0.0 : b});
  }
  return make_piecewise_f(std::move(pieces));
}

PsiClassFunction counterexample_f(double eta) {
  const double v2 = 6.5 - eta;
  const double s = v2 / (1.5 - eta);
  return make_piecewise_f({{v2, v2}, {s, 2 * s - v2}, {4.0, 1 - 2 * eta}});
}

PsiClassFunction counterexample_f_breve(double eta) {
  const double v2 = 6.5 + eta;
  const double s = v2 / (1.5 + eta);
  return make_piecewise_f({{v2, v2}, {s, 2 * s - v2}});
}

NonconvexityReport verify_nonconvexity(double eta, double tol) {
  if (!(eta >= 0 && eta <= 0.05)) fail(ErrorCode::InvalidArgument, "eta must lie in [0, 0.05]");
  NonconvexityReport r{};
  r.eta = eta;
  const auto f = counterexample_f(eta);
  const auto fb = counterexample_f_breve(eta);
  const auto fh = average_f(f, fb);
  r.f = theta_and_cbar_of_f(f);
  r.f_breve = theta_and_cbar_of_f(fb);
  r.f_hat = theta_and_cbar_of_f(fh);
  r.f_hat_at_2 = fh(2.0);
  r.f_hat_at_3_5 = fh(3.5);
  r.predicted_f_hat_at_3_5 = 13 - eta / 6;
  r.gap = r.f_hat.C_bar - 0.25;

  std::ostringstream why;
  if (std::abs(r.f.C_bar - 0.25) > tol) why << "C_bar(f) != 1/4; ";
  if (std::abs(r.f_breve.C_bar - 0.25) > tol) why << "C_bar(f_breve) != 1/4; ";
  if (eta == 0) {
    r.success = false;
    r.message = "eta = 0: f and f_breve agree at 2, no strict gap";
    return r;
  }
  if (!(r.gap > tol)) why << "C_bar(f_hat) not above 1/4; ";
  if (!(r.f_hat.theta > 3.5)) why << "theta(f_hat) <= 3.5; ";
  if (!why.str().empty()) fail(ErrorCode::CounterexampleFailed, why.str());
  r.success = true;
  r.message = "C_bar(f_hat) exceeds 1/4";
  return r;
}

double VirtualSimplexPoint::psi(double x) const {
  double acc = -std::numeric_limits<double>::infinity();
  for (const auto& [lv, lc] : groups) acc = log_add(acc, lc + x * lv);
  if (filler_mass > 0) acc = log_add(acc, filler_log_count + x * filler_log_value);
  return -acc;
}

double VirtualSimplexPoint::log_p_max() const {
  double m = filler_mass > 0 ? filler_log_value : -std::numeric_limits<double>::infinity();
  for (const auto& g : groups) m = std::max(m, g.first);
  return m;
}

double VirtualSimplexPoint::theta(double tol) const {
  const double target = 2 * psi(2.0);
  double lo = 3, hi = 4;
  if (psi(lo) >= target) return 3.0;
  if (psi(hi) <= target) return 4.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (psi(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double VirtualSimplexPoint::C_scaled() const { return (3 + theta()) / (4 * psi_scaled(2.0)); }

double VirtualSimplexPoint::C_tilde_scaled() const { return log_K / -log_p_max(); }

VirtualSimplexPoint discretize_f_to_simplex(const PsiClassFunction& f, double log_K, double delta) {
  if (!(log_K > 0)) fail(ErrorCode::InvalidArgument, "log K must be positive");
  VirtualSimplexPoint v{};
  v.log_K = log_K;
  double log_mass = -std::numeric_limits<double>::infinity();
  double spread = 0;
  for (const auto& p : f.pieces()) {
    const double b = std::max(0.0, std::min(p.b, p.a - delta));
    const double e = b * log_K;
    // ceil(K^b) only matters while K^b is small
    const double log_count = e < 30 ? std::log(std::ceil(std::exp(e))) : e;
    const double log_value = -p.a * log_K;
    v.groups.emplace_back(log_value, log_count);
    log_mass = log_add(log_mass, log_count + log_value);
    spread = std::max(spread, std::abs(p.a) + std::abs(p.b));
  }
  v.total_mass = std::exp(log_mass);
  if (!(v.total_mass < 1)) fail(ErrorCode::ScaleTooSmall, "piece coordinates carry mass >= 1; increase K");
  v.filler_mass = -std::expm1(log_mass);
  v.filler_log_count = 10 * spread * log_K;
  v.filler_log_value = std::log(v.filler_mass) - v.filler_log_count;
  return v;
}

}  // namespace riffle

#pragma once

#include <string>
#include <utility>
#include <vector>

namespace riffle {

struct AffinePiece {
  double a;  // slope
  double b;  // f contains the line a x - b
};

/// f(x) = min_j (a_j x - b_j) on [1, 4].
class PsiClassFunction {
 public:
  const std::vector<AffinePiece>& pieces() const { return pieces_; }
  double operator()(double x) const;
  /// Left derivative at x (largest slope among pieces active at x).
  double left_derivative(double x) const;
  /// Points in (1, 4) where the active piece changes, plus 1 and 4.
  std::vector<double> breakpoints() const;

 private:
  friend PsiClassFunction make_piecewise_f(std::vector<AffinePiece>);
  std::vector<AffinePiece> pieces_;
};

/// Validates membership in the class; throws NotInPsiClass naming the
/// violated condition. Pieces sharing a slope are merged (the smaller line
/// wins).
PsiClassFunction make_piecewise_f(std::vector<AffinePiece> pieces);

struct PsiConstants {
  double theta;
  double C;
  double C_tilde;
  double C_bar;
};

/// theta_f solves f(theta) = 2 f(2); exact for min-of-affine f.
PsiConstants theta_and_cbar_of_f(const PsiClassFunction& f, double tol = 1e-12);

/// Pointwise average (f + g) / 2, exact on the merged breakpoint set.
PsiClassFunction average_f(const PsiClassFunction& f, const PsiClassFunction& g);

/// The three-piece function with f(2) = 6.5 - eta, f(3.5 - eta) = 13 - 2 eta
/// and slope 4 afterwards.
PsiClassFunction counterexample_f(double eta);
/// Two-piece companion with value 6.5 + eta at 2 and 13 + 2 eta at 3.5 + eta.
PsiClassFunction counterexample_f_breve(double eta);

struct NonconvexityReport {
  double eta;
  PsiConstants f, f_breve, f_hat;
  double f_hat_at_2;
  double f_hat_at_3_5;
  double predicted_f_hat_at_3_5;  // 13 - eta / 6
  double gap;                     // C_bar(f_hat) - 1/4
  bool success;
  std::string message;
};

/// Builds f, f_breve and their average and checks C_bar(f) = C_bar(f_breve)
/// = 1/4 < C_bar(f_hat). eta = 0 reports no gap (success = false) without
/// throwing; a failure for eta in (0, 0.05] throws CounterexampleFailed.
NonconvexityReport verify_nonconvexity(double eta, double tol = 1e-9);

/// A simplex point with huge numbers of equal coordinates, kept as
/// (log value, log multiplicity) pairs.
struct VirtualSimplexPoint {
  double log_K;
  std::vector<std::pair<double, double>> groups;  // (log value, log count)
  double filler_log_value;
  double filler_log_count;
  double filler_mass;
  double total_mass;  // mass of the non-filler groups

  /// psi_p(x) = -log sum count * value^x.
  double psi(double x) const;
  double psi_scaled(double x) const { return psi(x) / log_K; }
  double log_p_max() const;
  /// theta_p by bisection on psi (scale free).
  double theta(double tol = 1e-10) const;
  /// C_p / log K and C~_p / log K.
  double C_scaled() const;
  double C_tilde_scaled() const;
};

/// Each piece (a, b) becomes ceil(K^{b'}) coordinates of value K^{-a},
/// with b' = min(b, a - delta) clamped at 0 so the lines pass strictly
/// above (1, 0). The leftover mass is spread over K^{10 max(|a|+|b|)}
/// equal coordinates. Throws ScaleTooSmall if the pieces carry mass >= 1.
VirtualSimplexPoint discretize_f_to_simplex(const PsiClassFunction& f, double log_K,
                                            double delta = 0.01);

}  // namespace riffle

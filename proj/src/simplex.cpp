#include "riffle/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "riffle/error.hpp"
#include "riffle/parallel.hpp"

namespace riffle {

namespace {

constexpr double kSumTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void fill_logs(DiscreteApprox& a) {
  a.logs.resize(a.coords.size());
  for (std::size_t i = 0; i < a.coords.size(); ++i) a.logs[i] = std::log(a.coords[i]);
}

void push_node(DiscreteApprox& a, std::span<const double> p, double w) {
  a.coords.insert(a.coords.end(), p.begin(), p.end());
  a.weights.push_back(w);
}

// Gauss-Legendre on [lo, hi] after the substitution q = lo + (hi-lo) u,
// appended to `out` with weights multiplied by the density `dens`.
void interval_rule(DiscreteApprox& out, double lo, double hi, std::size_t n) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  const double half = 0.5 * (hi - lo);
  for (std::size_t i = 0; i < n; ++i) {
    const double q = lo + half * (x[i] + 1.0);
    const double p[2] = {q, 1.0 - q};
    push_node(out, p, half * w[i]);
  }
}

void normalize(DiscreteApprox& a) {
  const double total = std::accumulate(a.weights.begin(), a.weights.end(), 0.0);
  for (auto& w : a.weights) w /= total;
}

// Beta(a,b) in u with q = sin^2(pi u / 2): density is proportional to
// sin^{2a-1}(pi u/2) cos^{2b-1}(pi u/2). The two halves are split at q = 1/2
// where max(q, 1-q) has its kink.
DiscreteApprox beta_rule(double a, double b, std::size_t nodes) {
  DiscreteApprox out;
  out.k = 2;
  const std::size_t per_half = std::max<std::size_t>(1, nodes / 2);
  std::vector<double> x, w;
  gauss_legendre(per_half, x, w);
  std::vector<double> logw;
  for (int half = 0; half < 2; ++half) {
    for (std::size_t i = 0; i < per_half; ++i) {
      const double u = 0.5 * half + 0.25 * (x[i] + 1.0);
      const double s = std::sin(0.5 * std::numbers::pi * u);
      const double c = std::cos(0.5 * std::numbers::pi * u);
      const double p[2] = {s * s, c * c};
      push_node(out, p, 0.0);
      logw.push_back(std::log(0.25 * w[i]) + (2 * a - 1) * std::log(s) + (2 * b - 1) * std::log(c));
    }
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  for (std::size_t i = 0; i < logw.size(); ++i) out.weights[i] = std::exp(logw[i] - top);
  normalize(out);
  out.method = "gauss-legendre " + std::to_string(2 * per_half) + " nodes (sin^2 map)";
  return out;
}

double gamma_draw(double shape, Stream& rng) {
  std::gamma_distribution<double> g(shape, 1.0);
  return g(rng);
}

SimplexPoint dirichlet_draw(const std::vector<double>& alpha, Stream& rng) {
  SimplexPoint p(alpha.size());
  for (;;) {
    double total = 0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      p[i] = gamma_draw(alpha[i], rng);
      total += p[i];
    }
    if (!(total > 0)) continue;
    for (auto& v : p) v /= total;
    if (!is_vertex(p)) return p;
  }
}

constexpr std::size_t kMcChunk = 1 << 14;

}  // namespace

void validate_point(std::span<const double> p) {
  if (p.empty()) fail(ErrorCode::InvalidArgument, "simplex point has no coordinates");
  double total = 0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0))
      fail(ErrorCode::InvalidArgument, "simplex coordinate outside [0,1]");
    total += v;
  }
  if (std::abs(total - 1.0) > kSumTol)
    fail(ErrorCode::InvalidArgument, "simplex coordinates do not sum to 1");
}

bool is_vertex(std::span<const double> p) {
  return std::any_of(p.begin(), p.end(), [](double v) { return v == 1.0; });
}

MaxCoord p_max(std::span<const double> p) {
  MaxCoord best{p[0], 0};
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > best.value) best = {p[i], i};
  return best;
}

std::size_t dimension(const SimplexMeasure& mu) {
  return std::visit(
      overloaded{
          [](const PointMass& m) { return m.p.size(); },
          [](const FiniteMixture& m) { return m.atoms.empty() ? std::size_t{0} : m.atoms[0].size(); },
          [](const BetaMeasure&) { return std::size_t{2}; },
          [](const Dirichlet& m) { return m.alpha.size(); },
          [](const UniformInterval&) { return std::size_t{2}; },
          [](const Empirical& m) { return m.samples.empty() ? std::size_t{0} : m.samples[0].size(); },
      },
      mu);
}

void validate(const SimplexMeasure& mu) {
  auto same_dim = [](const std::vector<SimplexPoint>& pts) {
    for (const auto& p : pts) {
      validate_point(p);
      if (p.size() != pts[0].size())
        fail(ErrorCode::InvalidArgument, "points of different dimension");
    }
  };
  std::visit(overloaded{
                 [](const PointMass& m) { validate_point(m.p); },
                 [&](const FiniteMixture& m) {
                   if (m.atoms.empty() || m.atoms.size() != m.weights.size())
                     fail(ErrorCode::InvalidArgument, "mixture needs one weight per atom");
                   double total = 0;
                   for (double w : m.weights) {
                     if (!(w >= 0)) fail(ErrorCode::InvalidArgument, "negative mixture weight");
                     total += w;
                   }
                   if (std::abs(total - 1) > kSumTol)
                     fail(ErrorCode::InvalidArgument, "mixture weights do not sum to 1");
                   same_dim(m.atoms);
                 },
                 [](const BetaMeasure& m) {
                   if (!(m.a > 0 && m.b > 0 && std::isfinite(m.a) && std::isfinite(m.b)))
                     fail(ErrorCode::InvalidArgument, "beta parameters must be positive");
                 },
                 [](const Dirichlet& m) {
                   if (m.alpha.size() < 2)
                     fail(ErrorCode::InvalidArgument, "dirichlet needs k >= 2");
                   for (double a : m.alpha)
                     if (!(a > 0 && std::isfinite(a)))
                       fail(ErrorCode::InvalidArgument, "dirichlet parameters must be positive");
                 },
                 [](const UniformInterval& m) {
                   if (!(0 <= m.lo && m.lo < m.hi && m.hi <= 1))
                     fail(ErrorCode::InvalidArgument, "uniform interval needs 0 <= lo < hi <= 1");
                 },
                 [&](const Empirical& m) {
                   if (m.samples.empty()) fail(ErrorCode::InvalidArgument, "empty sample list");
                   same_dim(m.samples);
                 },
             },
             mu);
}

bool is_degenerate(const SimplexMeasure& mu) {
  return std::visit(
      overloaded{
          [](const PointMass& m) { return is_vertex(m.p); },
          [](const FiniteMixture& m) {
            for (std::size_t i = 0; i < m.atoms.size(); ++i)
              if (m.weights[i] > 0 && !is_vertex(m.atoms[i])) return false;
            return true;
          },
          [](const Empirical& m) {
            return std::all_of(m.samples.begin(), m.samples.end(),
                               [](const SimplexPoint& p) { return is_vertex(p); });
          },
          [](const auto&) { return false; },
      },
      mu);
}

std::string describe(const SimplexMeasure& mu) {
  std::ostringstream os;
  os.precision(6);
  auto list = [&os](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  };
  std::visit(overloaded{
                 [&](const PointMass& m) { os << "Point("; list(m.p); os << ")"; },
                 [&](const FiniteMixture& m) { os << "Mixture(" << m.atoms.size() << " atoms)"; },
                 [&](const BetaMeasure& m) { os << "Beta(" << m.a << "," << m.b << ")"; },
                 [&](const Dirichlet& m) { os << "Dirichlet("; list(m.alpha); os << ")"; },
                 [&](const UniformInterval& m) { os << "UniformInterval(" << m.lo << "," << m.hi << ")"; },
                 [&](const Empirical& m) { os << "Empirical(" << m.samples.size() << " samples)"; },
             },
             mu);
  return os.str();
}

void validate(const PrecisionConfig& cfg) {
  if (cfg.quadrature_nodes < 2) fail(ErrorCode::InvalidArgument, "quadrature_nodes must be >= 2");
  if (cfg.mc_samples < 1) fail(ErrorCode::InvalidArgument, "mc_samples must be >= 1");
}

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1, p1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / static_cast<double>(j);
      }
      dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1, p1 = 0;
    for (std::size_t j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / static_cast<double>(j);
    }
    dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

DiscreteApprox approximate(const SimplexMeasure& mu, const PrecisionConfig& cfg) {
  validate(mu);
  validate(cfg);
  DiscreteApprox out;
  out.k = dimension(mu);
  std::visit(
      overloaded{
          [&](const PointMass& m) {
            push_node(out, m.p, 1.0);
            out.method = "point evaluation";
          },
          [&](const FiniteMixture& m) {
            for (std::size_t i = 0; i < m.atoms.size(); ++i)
              if (m.weights[i] > 0) push_node(out, m.atoms[i], m.weights[i]);
            out.method = "exact mixture sum";
          },
          [&](const BetaMeasure& m) { out = beta_rule(m.a, m.b, cfg.quadrature_nodes); },
          [&](const UniformInterval& m) {
            const std::size_t n = cfg.quadrature_nodes;
            if (m.lo < 0.5 && 0.5 < m.hi) {
              interval_rule(out, m.lo, 0.5, std::max<std::size_t>(1, n / 2));
              interval_rule(out, 0.5, m.hi, std::max<std::size_t>(1, n / 2));
            } else {
              interval_rule(out, m.lo, m.hi, n);
            }
            normalize(out);
            out.method = "gauss-legendre " + std::to_string(out.size()) + " nodes";
          },
          [&](const Dirichlet& m) {
            const std::size_t k = m.alpha.size();
            ChunkLayout layout{cfg.mc_samples, kMcChunk};
            out.coords.assign(cfg.mc_samples * k, 0.0);
            const Stream base(cfg.seed, 0xD1D1);
            for_each_chunk(layout.chunks(), cfg.threads, [&](std::size_t c) {
              Stream rng = base.split(c);
              for (std::size_t i = layout.begin(c); i < layout.end(c); ++i) {
                const auto p = dirichlet_draw(m.alpha, rng);
                std::copy(p.begin(), p.end(), out.coords.begin() + static_cast<std::ptrdiff_t>(i * k));
              }
            });
            out.weights.assign(cfg.mc_samples, 1.0 / static_cast<double>(cfg.mc_samples));
            out.monte_carlo = true;
            out.method = "monte carlo " + std::to_string(cfg.mc_samples) + " samples, seed " +
                         std::to_string(cfg.seed);
          },
          [&](const Empirical& m) {
            for (const auto& p : m.samples) push_node(out, p, 1.0 / static_cast<double>(m.samples.size()));
            out.method = "exact empirical average";
          },
      },
      mu);
  fill_logs(out);
  return out;
}

Expectation expect_functional(const DiscreteApprox& approx, const PointFunctional& g) {
  double mean = 0;
  bool all_vertex = true;
  std::vector<double> values(approx.size());
  for (std::size_t i = 0; i < approx.size(); ++i) {
    values[i] = g(approx.point(i));
    if (!is_vertex(approx.point(i))) all_vertex = false;
    mean += approx.weights[i] * values[i];
  }
  if (!std::isfinite(mean)) {
    if (all_vertex) fail(ErrorCode::DegenerateMeasure, "measure supported on vertices; functional diverges");
    fail(ErrorCode::InvalidArgument, "functional is not integrable on this measure");
  }
  double se = 0;
  if (approx.monte_carlo && approx.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double n = static_cast<double>(approx.size());
    se = std::sqrt(ss / (n - 1) / n);
  }
  return {mean, se, approx.method};
}

Expectation expect_functional(const SimplexMeasure& mu, const PointFunctional& g,
                              const PrecisionConfig& cfg) {
  return expect_functional(approximate(mu, cfg), g);
}

SimplexPoint sample_point(const SimplexMeasure& mu, Stream& rng) {
  return std::visit(
      overloaded{
          [](const PointMass& m) { return m.p; },
          [&](const FiniteMixture& m) {
            double u = rng.uniform();
            for (std::size_t i = 0; i < m.atoms.size(); ++i) {
              if (u < m.weights[i]) return m.atoms[i];
              u -= m.weights[i];
            }
            // rounding slack: last atom with positive weight
            for (std::size_t i = m.atoms.size(); i-- > 0;)
              if (m.weights[i] > 0) return m.atoms[i];
            return m.atoms.back();
          },
          [&](const BetaMeasure& m) {
            for (;;) {
              const double x = gamma_draw(m.a, rng);
              const double y = gamma_draw(m.b, rng);
              if (!(x + y > 0)) continue;
              const double q = x / (x + y);
              if (q > 0 && q < 1) return SimplexPoint{q, 1 - q};
            }
          },
          [&](const Dirichlet& m) { return dirichlet_draw(m.alpha, rng); },
          [&](const UniformInterval& m) {
            for (;;) {
              const double q = m.lo + (m.hi - m.lo) * rng.uniform();
              if (q > 0 && q < 1) return SimplexPoint{q, 1 - q};
            }
          },
          [&](const Empirical& m) { return m.samples[rng.below(m.samples.size())]; },
      },
      mu);
}

SimplexPartition::SimplexPartition(std::size_t k, double chi) : k_(k), chi_(chi) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "partition needs k >= 2");
  // caps {p_i > 1 - chi} are pairwise disjoint iff chi <= 1/2
  if (!(chi > 0 && chi <= 0.5)) fail(ErrorCode::InvalidChi, "vertex caps overlap unless 0 < chi <= 1/2");
  const double scale = (k == 2 ? 1.0 : 2.0) / (chi * chi);
  m_ = static_cast<std::size_t>(std::ceil(scale)) + 1;
}

CellKey SimplexPartition::cell_of(std::span<const double> p) const {
  if (p.size() != k_) fail(ErrorCode::SizeMismatch, "point dimension differs from partition");
  for (std::size_t i = 0; i < k_; ++i)
    if (p[i] > 1.0 - chi_) return {-1, static_cast<std::int32_t>(i)};
  const auto m = static_cast<double>(m_);
  CellKey key(2 * (k_ - 1));
  std::vector<double> frac(k_ - 1);
  double cum = 0;
  for (std::size_t j = 0; j + 1 < k_; ++j) {
    cum += p[j];
    const double c = std::clamp(m * cum, 0.0, m);
    const double f = std::min(std::floor(c), m - 1);
    key[j] = static_cast<std::int32_t>(f);
    frac[j] = c - f;
  }
  std::vector<std::int32_t> order(k_ - 1);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) { return frac[a] > frac[b]; });
  std::copy(order.begin(), order.end(), key.begin() + static_cast<std::ptrdiff_t>(k_ - 1));
  return key;
}

std::string SimplexPartition::label(const CellKey& key) {
  std::ostringstream os;
  if (is_cap(key)) {
    os << "cap" << key[1];
    return os.str();
  }
  os << "cell";
  for (std::size_t i = 0; i < key.size(); ++i) os << (i ? "." : ":") << key[i];
  return os.str();
}

std::ptrdiff_t CellMixture::find(const CellKey& key) const {
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i] == key) return static_cast<std::ptrdiff_t>(i);
  return -1;
}

double CellMixture::mass(const CellKey& key) const {
  const auto i = find(key);
  return i < 0 ? 0.0 : weights[static_cast<std::size_t>(i)];
}

CellMixture discretize_measure(const SimplexMeasure& mu, double chi, const PrecisionConfig& cfg) {
  validate(mu);
  validate(cfg);
  const std::size_t k = dimension(mu);
  CellMixture out{SimplexPartition(k, chi), {}, {}, {}};

  struct Acc {
    double mass = 0;
    std::vector<double> sum;
  };
  std::map<CellKey, Acc> acc;
  auto add = [&](std::span<const double> p, double w) {
    auto& a = acc[out.partition.cell_of(p)];
    if (a.sum.empty()) a.sum.assign(k, 0.0);
    a.mass += w;
    for (std::size_t i = 0; i < k; ++i) a.sum[i] += w * p[i];
  };

  const bool atomic = std::holds_alternative<PointMass>(mu) ||
                      std::holds_alternative<FiniteMixture>(mu) ||
                      std::holds_alternative<Empirical>(mu);
  if (atomic) {
    const auto approx = approximate(mu, cfg);
    for (std::size_t i = 0; i < approx.size(); ++i) add(approx.point(i), approx.weights[i]);
  } else {
    ChunkLayout layout{cfg.mc_samples, kMcChunk};
    std::vector<std::map<CellKey, Acc>> partial(layout.chunks());
    const Stream base(cfg.seed, 0xCE11);
    for_each_chunk(layout.chunks(), cfg.threads, [&](std::size_t c) {
      Stream rng = base.split(c);
      auto& local = partial[c];
      for (std::size_t i = layout.begin(c); i < layout.end(c); ++i) {
        const auto p = sample_point(mu, rng);
        auto& a = local[out.partition.cell_of(p)];
        if (a.sum.empty()) a.sum.assign(k, 0.0);
        a.mass += 1;
        for (std::size_t j = 0; j < k; ++j) a.sum[j] += p[j];
      }
    });
    const double n = static_cast<double>(cfg.mc_samples);
    for (const auto& local : partial) {
      for (const auto& [key, a] : local) {
        auto& dst = acc[key];
        if (dst.sum.empty()) dst.sum.assign(k, 0.0);
        dst.mass += a.mass / n;
        for (std::size_t j = 0; j < k; ++j) dst.sum[j] += a.sum[j] / n;
      }
    }
  }

  double total = 0;
  for (const auto& [key, a] : acc) total += a.mass;
  for (const auto& [key, a] : acc) {
    if (!(a.mass > 0)) continue;
    SimplexPoint rep(k);
    double s = 0;
    for (std::size_t j = 0; j < k; ++j) s += rep[j] = a.sum[j] / a.mass;
    for (auto& v : rep) v /= s;
    out.cells.push_back(key);
    out.weights.push_back(a.mass / total);
    out.atoms.push_back(std::move(rep));
  }
  return out;
}

}  // namespace riffle

#include "riffle/hypergeometric.hpp"

#include <algorithm>
#include <utility>
#include <cmath>
#include <limits>

#include "riffle/error.hpp"
#include "riffle/parallel.hpp"
#include "riffle/statistics.hpp"

namespace riffle {

namespace {

long double lfact(std::uint64_t x) { return std::lgammal(static_cast<long double>(x) + 1.0L); }

long double ratio_up(std::uint64_t k, std::uint64_t n1, std::uint64_t n, std::uint64_t m) {
  // p(k+1) / p(k)
  return static_cast<long double>(m - k) * static_cast<long double>(n1 - k) /
         (static_cast<long double>(k + 1) * static_cast<long double>(n - n1 - m + k + 1));
}

constexpr double kInvertBelowMean = 16.0;

}  // namespace

long double hypergeometric_log_pmf(std::uint64_t k, std::uint64_t n1, std::uint64_t n, std::uint64_t m) {
  return lfact(n1) - lfact(k) - lfact(n1 - k) + lfact(n - n1) - lfact(m - k) - lfact(n - n1 - m + k) -
         (lfact(n) - lfact(m) - lfact(n - m));
}

HypergeometricSampler::HypergeometricSampler(std::uint64_t n1, std::uint64_t n, std::uint64_t m)
    : n1_(n1), n_(n), m_(m) {
  if (n1 > n || m > n) fail(ErrorCode::InvalidParams, "hypergeometric needs n1, m <= n");
  trivial_ = true;
  if (m == 0 || n1 == 0) {
    trivial_value_ = 0;
    return;
  }
  if (n1 == n) {
    trivial_value_ = m;
    return;
  }
  if (m == n) {
    trivial_value_ = n1;
    return;
  }
  trivial_ = false;
  flip_n1_ = 2 * n1 > n;
  c_ = flip_n1_ ? n - n1 : n1;
  flip_m_ = 2 * m > n;
  mm_ = flip_m_ ? n - m : m;
  kmax_ = std::min(c_, mm_);
  const double mu = static_cast<double>(c_) * static_cast<double>(mm_) / static_cast<double>(n);
  from_zero_ = mu < kInvertBelowMean;
  if (from_zero_) {
    start_ = 0;
    if (mm_ <= 32) {
      long double p = 1;
      for (std::uint64_t i = 0; i < mm_; ++i)
        p *= static_cast<long double>(n - c_ - i) / static_cast<long double>(n - i);
      p_start_ = p;
    } else {
      p_start_ = std::exp(hypergeometric_log_pmf(0, c_, n, mm_));
    }
  } else {
    start_ = static_cast<std::uint64_t>((static_cast<long double>(mm_ + 1) * (c_ + 1)) / (n + 2));
    start_ = std::min(start_, kmax_);
    p_start_ = std::exp(hypergeometric_log_pmf(start_, c_, n, mm_));
  }
}

double HypergeometricSampler::mean() const {
  return static_cast<double>(n1_) * static_cast<double>(m_) / static_cast<double>(n_);
}

std::uint64_t HypergeometricSampler::core(Stream& rng) const {
  for (;;) {
    long double u = rng.uniform_open();
    if (from_zero_) {
      long double p = p_start_;
      for (std::uint64_t k = 0;; ++k) {
        if (u <= p) return k;
        u -= p;
        if (k == kmax_) break;
        p *= ratio_up(k, c_, n_, mm_);
      }
      continue;  // rounding left u unconsumed; redraw
    }
    if (u <= p_start_) return start_;
    u -= p_start_;
    long double p_hi = p_start_, p_lo = p_start_;
    std::uint64_t hi = start_, lo = start_;
    bool up_open = hi < kmax_, down_open = lo > 0;
    while (up_open || down_open) {
      if (up_open) {
        p_hi *= ratio_up(hi, c_, n_, mm_);
        ++hi;
        if (u <= p_hi) return hi;
        u -= p_hi;
        up_open = hi < kmax_;
      }
      if (down_open) {
        p_lo /= ratio_up(lo - 1, c_, n_, mm_);
        --lo;
        if (u <= p_lo) return lo;
        u -= p_lo;
        down_open = lo > 0;
      }
    }
  }
}

std::uint64_t HypergeometricSampler::operator()(Stream& rng) const {
  if (trivial_) return trivial_value_;
  std::uint64_t x = core(rng);
  if (flip_m_) x = c_ - x;
  if (flip_n1_) x = m_ - x;
  return x;
}

std::uint64_t hypergeometric_sample(std::uint64_t n1, std::uint64_t n, std::uint64_t m, Stream& rng) {
  if (n1 > n || m > n) fail(ErrorCode::InvalidParams, "hypergeometric needs n1, m <= n");
  if (n1 < m) std::swap(n1, m);  // law is symmetric in n1 and m
  if (m <= 8) {
    // draw m balls one at a time
    std::uint64_t x = 0, good = n1, left = n;
    for (std::uint64_t i = 0; i < m && good > 0; ++i, --left)
      if (rng.below(left) < good) ++x, --good;
    return x;
  }
  return HypergeometricSampler(n1, n, m)(rng);
}

HypergeometricPmf hypergeometric_pmf(std::uint64_t n1, std::uint64_t n, std::uint64_t m) {
  if (n1 > n || m > n) fail(ErrorCode::InvalidParams, "hypergeometric needs n1, m <= n");
  const std::uint64_t kmin = m + n1 > n ? m + n1 - n : 0;
  const std::uint64_t kmax = std::min(n1, m);
  HypergeometricPmf out{kmin, std::vector<long double>(kmax - kmin + 1)};
  std::uint64_t mode = static_cast<std::uint64_t>((static_cast<long double>(m + 1) * (n1 + 1)) / (n + 2));
  mode = std::clamp(mode, kmin, kmax);
  out.p[mode - kmin] = std::exp(hypergeometric_log_pmf(mode, n1, n, m));
  for (std::uint64_t k = mode; k < kmax; ++k) out.p[k + 1 - kmin] = out.p[k - kmin] * ratio_up(k, n1, n, m);
  for (std::uint64_t k = mode; k > kmin; --k) out.p[k - 1 - kmin] = out.p[k - kmin] / ratio_up(k - 1, n1, n, m);
  return out;
}

ConcentrationRow concentration_report(std::uint64_t n1, std::uint64_t n, std::uint64_t m,
                                      std::uint64_t trials, double a, std::uint64_t seed,
                                      unsigned threads) {
  const HypergeometricSampler sampler(n1, n, m);
  ConcentrationRow r{};
  r.n1 = n1;
  r.n = n;
  r.m = m;
  r.mean = sampler.mean();
  r.threshold = std::pow(r.mean, 0.5 + a);
  r.trials = trials;

  ChunkLayout layout{trials, 1 << 16};
  std::vector<std::uint64_t> hits(layout.chunks(), 0);
  const Stream base(seed, 0x4879);
  for_each_chunk(layout.chunks(), threads, [&](std::size_t c) {
    Stream rng = base.split(c);
    std::uint64_t h = 0;
    for (std::size_t i = layout.begin(c); i < layout.end(c); ++i) {
      const double x = static_cast<double>(sampler(rng));
      h += std::abs(x - r.mean) >= r.threshold;
    }
    hits[c] = h;
  });
  for (auto h : hits) r.hits += h;
  r.frequency = static_cast<double>(r.hits) / static_cast<double>(trials);
  const auto ci = wilson_interval(r.hits, trials, 0.99);
  r.ci_lo = ci.lo;
  r.ci_hi = ci.hi;

  const auto pmf = hypergeometric_pmf(n1, n, m);
  long double tail = 0;
  for (std::size_t i = 0; i < pmf.p.size(); ++i) {
    const double x = static_cast<double>(pmf.kmin + i);
    if (std::abs(x - r.mean) >= r.threshold) tail += pmf.p[i];
  }
  r.exact_tail = static_cast<double>(tail);
  const double alpha = std::max(1.0 / static_cast<double>(n - n1 + 1) + 1.0 / static_cast<double>(n1 + 1),
                                1.0 / static_cast<double>(n - m + 1) + 1.0 / static_cast<double>(m + 1));
  r.hush_scovel = std::min(1.0, 2 * std::exp(-2 * alpha * (r.threshold * r.threshold - 1)));
  r.c_hat = r.frequency > 0 ? -std::log(r.frequency) / std::pow(r.mean, 2 * a)
                            : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace riffle

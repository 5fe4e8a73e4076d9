#include "riffle/statistics.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>

#include "riffle/error.hpp"
#include "riffle/exact.hpp"
#include "riffle/parallel.hpp"

namespace riffle {

namespace {

constexpr std::size_t kChunk = 64;

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

template <class Fn>
std::vector<double> collect(std::size_t n, unsigned threads, Fn&& one) {
  std::vector<double> out(n);
  ChunkLayout layout{n, kChunk};
  for_each_chunk(layout.chunks(), threads, [&](std::size_t c) {
    for (std::size_t i = layout.begin(c); i < layout.end(c); ++i) out[i] = one(i);
  });
  return out;
}

double fraction_ge(const std::vector<double>& sorted, double c) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), c);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

double fraction_le(const std::vector<double>& sorted, double c) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), c);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

}  // namespace

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence) {
  if (trials == 0) return {0.0, 1.0};
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 0.5 + confidence / 2);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1 + z * z / n;
  const double centre = (p + z * z / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::SizeMismatch, "spearman needs paired data");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::size_t rising_sequences_of_inverse(const Permutation& sigma) {
  std::size_t r = sigma.empty() ? 0 : 1;
  for (std::size_t v = 0; v + 1 < sigma.size(); ++v) r += sigma[v + 1] < sigma[v];
  return r;
}

std::size_t rising_sequences(const Permutation& deck) { return rising_sequences_of_inverse(inverse(deck)); }

std::size_t longest_increasing_run(const Permutation& sigma) {
  if (sigma.empty()) return 0;
  std::size_t best = 1, cur = 1;
  for (std::size_t i = 1; i < sigma.size(); ++i) {
    cur = sigma[i - 1] < sigma[i] ? cur + 1 : 1;
    best = std::max(best, cur);
  }
  return best;
}

std::size_t longest_increasing_run_of_deck(const Permutation& deck) {
  return longest_increasing_run(inverse(deck));
}

std::string to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::RisingSequences:
      return "rising_sequences";
    case StatisticKind::LongestRun:
      return "longest_run";
    case StatisticKind::ColdSpotAscents:
      return "coldspot_ascents";
  }
  return "unknown";
}

StatisticKind parse_statistic(const std::string& name) {
  if (name == "rising_sequences" || name == "rising") return StatisticKind::RisingSequences;
  if (name == "longest_run" || name == "run") return StatisticKind::LongestRun;
  if (name == "coldspot_ascents" || name == "coldspot") return StatisticKind::ColdSpotAscents;
  fail(ErrorCode::InvalidArgument, "unknown statistic: " + name);
}

double evaluate_statistic(const StatisticSpec& spec, const Permutation& sigma) {
  switch (spec.kind) {
    case StatisticKind::RisingSequences:
      return static_cast<double>(rising_sequences_of_inverse(sigma));
    case StatisticKind::LongestRun:
      return static_cast<double>(longest_increasing_run(sigma));
    case StatisticKind::ColdSpotAscents:
      if (!spec.H) fail(ErrorCode::InvalidArgument, "cold-spot statistic needs a cold-spot set");
      return static_cast<double>(ascent_statistic(sigma, *spec.H));
  }
  return 0;
}

TvBoundReport tv_lower_bound_mc(const CutProcess& process, std::size_t N, std::size_t K,
                                const StatisticSpec& statistic, const McOptions& options) {
  if (N < 1) fail(ErrorCode::InvalidArgument, "deck size must be positive");
  if (options.samples < 1) fail(ErrorCode::InvalidArgument, "need at least one sample");
  if (statistic.kind == StatisticKind::ColdSpotAscents && (!statistic.H || statistic.H->N != N))
    fail(ErrorCode::InvalidArgument, "cold-spot statistic needs a cold-spot set for this N");
  const Stream base(options.seed, 0x7B0D);
  auto shuffled = [&](std::uint64_t domain, std::size_t n) {
    const Stream dom = base.split(domain);
    return collect(n, options.threads, [&](std::size_t i) {
      const Stream s = dom.split(i);
      Permutation sigma = identity_permutation(N);
      if (K > 0) sigma = sample_sigma_given_piles(pile_sequence(process, N, K, s.split(0)), s.split(1));
      return evaluate_statistic(statistic, sigma);
    });
  };
  auto uniform = [&](std::uint64_t domain, std::size_t n) {
    const Stream dom = base.split(domain);
    return collect(n, options.threads, [&](std::size_t i) {
      Stream s = dom.split(i);
      Permutation sigma = identity_permutation(N);
      shuffle_range(sigma.begin(), sigma.end(), s);
      return evaluate_statistic(statistic, sigma);
    });
  };

  TvBoundReport r;
  r.N = N;
  r.K = K;
  r.statistic = to_string(statistic.kind);
  r.samples = options.samples;
  if (statistic.threshold && statistic.direction != 0) {
    r.threshold = *statistic.threshold;
    r.direction = statistic.direction;
  } else {
    r.pilot_samples = options.pilot_samples;
    auto ps = shuffled(1, options.pilot_samples);
    auto pu = uniform(2, options.pilot_samples);
    std::sort(ps.begin(), ps.end());
    std::sort(pu.begin(), pu.end());
    std::vector<double> cand;
    if (statistic.threshold) {
      cand.push_back(*statistic.threshold);
    } else {
      cand = ps;
      cand.insert(cand.end(), pu.begin(), pu.end());
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    }
    double best = -2;
    for (double c : cand) {
      const double ge = fraction_ge(ps, c) - fraction_ge(pu, c);
      const double le = fraction_le(ps, c) - fraction_le(pu, c);
      if (statistic.direction >= 0 && ge > best) {
        best = ge;
        r.threshold = c;
        r.direction = 1;
      }
      if (statistic.direction <= 0 && le > best) {
        best = le;
        r.threshold = c;
        r.direction = -1;
      }
    }
  }

  auto hits = [&](const std::vector<double>& v) {
    std::uint64_t h = 0;
    for (double x : v) h += r.direction > 0 ? x >= r.threshold : x <= r.threshold;
    return h;
  };
  const auto hs = hits(shuffled(3, options.samples));
  const auto hu = hits(uniform(4, options.samples));
  const double n = static_cast<double>(options.samples);
  r.p_shuffled = static_cast<double>(hs) / n;
  r.p_uniform = static_cast<double>(hu) / n;
  r.ci_shuffled = wilson_interval(hs, options.samples, options.confidence);
  r.ci_uniform = wilson_interval(hu, options.samples, options.confidence);
  r.estimate = r.p_shuffled - r.p_uniform;
  r.ci = {std::max(-1.0, r.ci_shuffled.lo - r.ci_uniform.hi), std::min(1.0, r.ci_shuffled.hi - r.ci_uniform.lo)};
  r.lower_bound = std::clamp(r.ci.lo, 0.0, 1.0);
  return r;
}

bool is_L_sparse(const ShuffleGraph& G, std::size_t L) {
  if (L < 1) fail(ErrorCode::InvalidArgument, "window length must be positive");
  const std::size_t cap = L / 3;
  if (G.N < L) return G.edges.size() <= cap;
  // window [i, i+L-1] holds edges j with i <= j <= i+L-2
  std::vector<std::uint32_t> has(G.N + 1, 0);
  for (auto e : G.edges) has[e] = 1;
  std::size_t count = 0;
  for (std::size_t j = 1; j + 1 < L; ++j) count += has[j];
  for (std::size_t i = 1; i + L - 1 <= G.N; ++i) {
    if (i > 1) count -= has[i - 1];
    count += has[i + L - 2];
    if (count > cap) return false;
  }
  return true;
}

std::size_t shared_edges(const ShuffleGraph& G, const ShuffleGraph& H) {
  if (G.N != H.N) fail(ErrorCode::SizeMismatch, "graphs on different vertex sets");
  std::size_t count = 0;
  auto a = G.edges.begin(), b = H.edges.begin();
  while (a != G.edges.end() && b != H.edges.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++count;
      ++a;
      ++b;
    }
  }
  return count;
}

std::vector<FirstMomentRow> first_moment_scan(const CutProcess& process, const std::vector<std::size_t>& Ns,
                                              const std::function<std::size_t(std::size_t)>& K_of_N,
                                              std::size_t trials, std::uint64_t seed, unsigned threads,
                                              std::size_t graphs_per_trial) {
  if (trials < 2) fail(ErrorCode::InvalidArgument, "need at least two trials");
  if (graphs_per_trial < 2) fail(ErrorCode::InvalidArgument, "need at least two graphs per trial");
  const std::size_t m = graphs_per_trial;
  const double pairs = 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
  std::vector<FirstMomentRow> rows;
  const Stream base(seed, 0xF1F1);
  for (std::size_t N : Ns) {
    const std::size_t K = K_of_N(N);
    if (K < 1) fail(ErrorCode::InvalidArgument, "K must be positive");
    const Stream dom = base.split(N);
    const auto v = collect(trials, threads, [&](std::size_t i) {
      const Stream s = dom.split(i);
      const auto piles = pile_sequence(process, N, K, s.split(0));
      if (m == 2)
        return static_cast<double>(shared_edges(sample_shuffle_graph(piles, s.split(1)), sample_shuffle_graph(piles, s.split(2))));
      // edge i seen in c_i of the m graphs contributes C(c_i, 2) pairs
      std::vector<std::uint32_t> seen(N + 1, 0);
      double shared = 0;
      for (std::size_t g = 0; g < m; ++g)
        for (auto e : sample_shuffle_graph(piles, s.split(1 + g)).edges) shared += seen[e]++;
      return shared / pairs;
    });
    const double n = static_cast<double>(trials);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    rows.push_back({N, K, trials, trials * (m * (m - 1) / 2), mean, std::sqrt(ss / (n - 1) / n)});
  }
  return rows;
}

std::vector<CutoffRow> cutoff_scan(const CutProcess& process, double C_bar, const std::vector<std::size_t>& Ns,
                                   const std::vector<double>& multiples, const StatisticSpec& statistic,
                                   const McOptions& options) {
  std::vector<CutoffRow> rows;
  for (std::size_t N : Ns) {
    const double logN = std::log(static_cast<double>(N));
    for (double m : multiples) {
      CutoffRow row;
      row.N = N;
      row.multiple = m;
      row.K = static_cast<std::size_t>(std::llround(m * logN));
      row.K_over_logN = logN > 0 ? static_cast<double>(row.K) / logN : 0.0;
      row.C_bar = C_bar;
      row.bound = tv_lower_bound_mc(process, N, row.K, statistic, options);
      if (N <= 7) row.exact_tv = exact_tv(exact_shuffle_distribution(N, process, row.K)).approx;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace riffle

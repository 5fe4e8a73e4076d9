#include "riffle/cold_spots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "riffle/constants.hpp"
#include "riffle/error.hpp"

namespace riffle {

namespace {

struct Walker {
  std::size_t N;
  const std::vector<std::vector<double>>& frac;  // n_l / N per step
  const std::vector<std::size_t>& cell_of_step;  // index into quotas
  std::vector<std::vector<std::size_t>> left;    // remaining quota per cell and digit
  std::vector<std::pair<std::size_t, std::size_t>> out;

  void emit(double t, double lambda) {
    constexpr double eps = 1e-6;
    const double n = static_cast<double>(N);
    const double lo = std::max(1.0, std::ceil(n * t - eps));
    const double hi = std::min(n, std::ceil(n * (t + lambda) - eps) - 1);
    if (lo <= hi) out.emplace_back(static_cast<std::size_t>(lo), static_cast<std::size_t>(hi));
  }

  void dfs(std::size_t pos, double t, double lambda) {
    if (pos == frac.size()) {
      emit(t, lambda);
      return;
    }
    auto& q = left[cell_of_step[pos]];
    const auto& f = frac[pos];
    double below = 0;
    for (std::size_t l = 0; l < f.size(); ++l) {
      if (l < q.size() && q[l] > 0) {
        --q[l];
        dfs(pos + 1, t + lambda * below, lambda * f[l]);
        ++q[l];
      }
      below += f[l];
    }
  }

  void walk(const std::vector<std::uint8_t>& digits) {
    double t = 0, lambda = 1;
    for (std::size_t pos = 0; pos < digits.size(); ++pos) {
      const auto& f = frac[pos];
      for (std::size_t l = 0; l < digits[pos]; ++l) t += lambda * f[l];
      lambda *= f[digits[pos]];
    }
    emit(t, lambda);
  }
};

double log_multinomial(std::size_t n, const std::vector<std::size_t>& parts) {
  double v = std::lgamma(static_cast<double>(n) + 1);
  for (auto p : parts) v -= std::lgamma(static_cast<double>(p) + 1);
  return v;
}

}  // namespace

bool ColdSpotSet::contains(std::size_t i) const {
  auto it = std::upper_bound(intervals.begin(), intervals.end(), std::make_pair(i, N + 1));
  if (it == intervals.begin()) return false;
  --it;
  return it->first <= i && i <= it->second;
}

namespace {

// the step's own cell when the mixture charges it, else the cell of the
// nearest atom in L-infinity
CellKey mixture_cell(const CellMixture& mu, const std::vector<double>& p) {
  auto key = mu.partition.cell_of(p);
  if (mu.find(key) >= 0 || mu.atoms.empty()) return key;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    double d = 0;
    for (std::size_t l = 0; l < p.size(); ++l) d = std::max(d, std::abs(p[l] - mu.atoms[i][l]));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return mu.cells[best];
}

}  // namespace

ColdSpotSet build_cold_spots(const std::vector<PileSizes>& piles, const CellMixture& mu, double theta,
                             const ColdSpotParams& params) {
  if (piles.empty()) fail(ErrorCode::TooFewSteps, "empty pile sequence");
  if (!(params.delta > 0 && params.delta < 1)) fail(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
  const std::size_t N = total(piles[0]);
  const std::size_t k = mu.partition.k();
  const double logN = std::log(static_cast<double>(N));

  ColdSpotSet H;
  H.N = N;
  H.params = params;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    if (!is_vertex(mu.atoms[i])) H.info_sum += mu.weights[i] * info_I(mu.atoms[i], theta);
  if (!(H.info_sum > 0)) fail(ErrorCode::DegenerateMixture, "mixture has no mass off the vertices");

  // floor guard: the product is often an integer up to rounding
  const double alpha_log = (1 - params.delta) / (2 * H.info_sum) * logN;
  const auto A = static_cast<std::size_t>(std::floor(alpha_log + 1e-9));
  H.prefix_length = A;
  if (!(static_cast<double>(piles.size()) > static_cast<double>(A) + 2 * params.rho * logN))
    fail(ErrorCode::TooFewSteps, "pile sequence must be longer than A + 2 rho log N");

  std::vector<std::vector<double>> frac(A);
  std::vector<std::size_t> cell_of_step(A);
  std::map<CellKey, std::size_t> index;
  std::vector<std::vector<double>> realized_sum;
  for (std::size_t t = 0; t < A; ++t) {
    if (total(piles[t]) != N) fail(ErrorCode::SizeMismatch, "pile sizes do not sum to N");
    if (piles[t].size() > k) fail(ErrorCode::SizeMismatch, "more piles than simplex dimension");
    std::vector<double> p(k, 0.0);
    for (std::size_t l = 0; l < piles[t].size(); ++l) p[l] = static_cast<double>(piles[t][l]) / static_cast<double>(N);
    frac[t] = p;
    const auto key = mixture_cell(mu, p);
    auto [it, fresh] = index.try_emplace(key, H.quotas.size());
    if (fresh) {
      CellQuota q;
      q.cell = key;
      H.quotas.push_back(q);
      realized_sum.emplace_back(k, 0.0);
    }
    cell_of_step[t] = it->second;
    ++H.quotas[it->second].steps;
    for (std::size_t l = 0; l < k; ++l) realized_sum[it->second][l] += p[l];
  }

  double log_total = 0;
  for (std::size_t c = 0; c < H.quotas.size(); ++c) {
    auto& q = H.quotas[c];
    const auto m = mu.find(q.cell);
    if (m >= 0) {
      q.p = mu.atoms[static_cast<std::size_t>(m)];
    } else {
      q.p = realized_sum[c];
      for (auto& v : q.p) v /= static_cast<double>(q.steps);
    }
    double norm = 0;
    for (double v : q.p)
      if (v > params.chi) norm += std::pow(v, theta);
    if (!(norm > 0)) fail(ErrorCode::QuotaInfeasible, "cell has no coordinate above chi");
    q.target.assign(k, 0.0);
    std::vector<double> share(k, 0.0);
    for (std::size_t l = 0; l < k; ++l)
      if (q.p[l] > params.chi) share[l] = std::pow(q.p[l], theta) / norm;
    for (std::size_t l = 0; l < k; ++l) q.target[l] = share[l] * static_cast<double>(q.steps);
    q.quota = round_largest_remainder(q.steps, share);
    for (std::size_t l = 0; l < k; ++l) {
      if (share[l] == 0 && q.quota[l] != 0) fail(ErrorCode::QuotaInfeasible, "quota outside T");
      if (std::abs(static_cast<double>(q.quota[l]) - q.target[l]) > 1 + 1e-9)
        fail(ErrorCode::QuotaInfeasible, "digit quota misses its target by more than 1");
    }
    log_total += log_multinomial(q.steps, q.quota);
  }
  // multinomial products are integers; drop the exp/log rounding
  H.prefix_total = std::exp(log_total);
  if (H.prefix_total < 1e15) H.prefix_total = std::round(H.prefix_total);

  Walker w{N, frac, cell_of_step, {}, {}};
  for (const auto& q : H.quotas) w.left.push_back(q.quota);
  if (H.prefix_total <= static_cast<double>(params.prefix_cap) + 0.5) {
    w.dfs(0, 0.0, 1.0);
    H.prefix_count = static_cast<std::size_t>(std::llround(H.prefix_total));
  } else {
    H.subsampled = true;
    H.prefix_count = params.prefix_cap;
    std::vector<std::vector<std::size_t>> positions(H.quotas.size());
    for (std::size_t t = 0; t < A; ++t) positions[cell_of_step[t]].push_back(t);
    const Stream base(params.seed, 0xC01D);
    std::vector<std::uint8_t> digits(A);
    for (std::size_t s = 0; s < params.prefix_cap; ++s) {
      Stream rng = base.split(s);
      for (std::size_t c = 0; c < H.quotas.size(); ++c) {
        std::vector<std::uint8_t> labels;
        for (std::size_t l = 0; l < k; ++l) labels.insert(labels.end(), H.quotas[c].quota[l], static_cast<std::uint8_t>(l));
        shuffle_range(labels.begin(), labels.end(), rng);
        for (std::size_t j = 0; j < labels.size(); ++j) digits[positions[c][j]] = labels[j];
      }
      w.walk(digits);
    }
  }

  auto& iv = w.out;
  std::sort(iv.begin(), iv.end());
  for (const auto& seg : iv) {
    if (!H.intervals.empty() && seg.first <= H.intervals.back().second + 1)
      H.intervals.back().second = std::max(H.intervals.back().second, seg.second);
    else
      H.intervals.push_back(seg);
  }
  for (const auto& [a, b] : H.intervals) {
    H.size += b - a + 1;
    H.boundary += (a > 1) + (b < N);
  }
  H.size_ok = static_cast<double>(H.size) >= std::sqrt(static_cast<double>(N));
  H.boundary_ok = static_cast<double>(H.boundary) <= 2 * std::sqrt(static_cast<double>(H.size));
  return H;
}

std::size_t ascent_statistic(const Permutation& sigma, const ColdSpotSet& H) {
  if (sigma.size() != H.N) fail(ErrorCode::SizeMismatch, "permutation and cold-spot set sizes differ");
  std::size_t count = 0;
  for (const auto& [a, b] : H.intervals)
    for (std::size_t i = a; i <= std::min(b, H.N - 1); ++i) count += sigma[i - 1] < sigma[i];
  return count;
}

std::size_t ascent_statistic_of_deck(const Permutation& deck, const ColdSpotSet& H) {
  return ascent_statistic(inverse(deck), H);
}

double cold_spot_threshold(const ColdSpotSet& H, double delta) {
  const double h = static_cast<double>(H.size);
  return h / 2 + std::pow(h, 0.5 + delta / 2);
}

TestReport cold_spot_test(const Permutation& sigma, const ColdSpotSet& H, double delta) {
  TestReport r{};
  r.statistic = static_cast<double>(ascent_statistic(sigma, H));
  r.threshold = cold_spot_threshold(H, delta);
  r.reject = r.statistic > r.threshold;
  return r;
}

}  // namespace riffle

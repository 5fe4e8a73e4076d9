#include "riffle/exact.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "riffle/constants.hpp"
#include "riffle/error.hpp"

namespace riffle {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_size(std::size_t N) {
  if (N < 1) fail(ErrorCode::InvalidArgument, "deck size must be positive");
  if (N > kMaxExactN) fail(ErrorCode::TooLarge, "exact distributions are limited to N <= 8");
}

BigInt big_factorial(std::size_t n) {
  BigInt f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

BigInt multinomial(const PileSizes& piles) {
  BigInt m = big_factorial(total(piles));
  for (auto n : piles) m /= big_factorial(n);
  return m;
}

void compositions(std::size_t N, std::size_t k, PileSizes& cur, std::vector<PileSizes>& out) {
  if (cur.size() + 1 == k) {
    cur.push_back(N);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (std::size_t n = 0; n <= N; ++n) {
    cur.push_back(n);
    compositions(N - n, k, cur, out);
    cur.pop_back();
  }
}

std::vector<PileSizes> all_compositions(std::size_t N, std::size_t k) {
  std::vector<PileSizes> out;
  PileSizes cur;
  compositions(N, k, cur, out);
  return out;
}

void reduce(ExactDistribution& d) {
  BigInt g = d.denominator;
  for (const auto& c : d.counts) {
    if (g == 1) return;
    if (c != 0) g = boost::multiprecision::gcd(g, c);
  }
  if (g == 1) return;
  d.denominator /= g;
  for (auto& c : d.counts) c /= g;
}

}  // namespace

Rational ExactDistribution::probability(std::uint64_t rank) const { return Rational(counts[rank], denominator); }

double ExactDistribution::probability_double(std::uint64_t rank) const {
  return probability(rank).convert_to<double>();
}

bool ExactDistribution::same_law(const ExactDistribution& other) const {
  if (N != other.N) return false;
  for (std::size_t r = 0; r < counts.size(); ++r)
    if (counts[r] * other.denominator != other.counts[r] * denominator) return false;
  return true;
}

std::size_t ExactDistribution::support_size() const {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](const BigInt& c) { return c != 0; }));
}

ExactDistribution point_mass_distribution(const Permutation& deck) {
  check_size(deck.size());
  ExactDistribution d;
  d.N = deck.size();
  d.counts.assign(factorial(d.N), 0);
  d.counts[lehmer_rank(deck)] = 1;
  return d;
}

std::vector<Permutation> interleavings(const PileSizes& piles) {
  const std::size_t N = total(piles);
  std::vector<std::size_t> labels;
  for (std::size_t l = 0; l < piles.size(); ++l) labels.insert(labels.end(), piles[l], l);
  std::vector<std::size_t> offset(piles.size(), 0);
  for (std::size_t l = 1; l < piles.size(); ++l) offset[l] = offset[l - 1] + piles[l - 1];
  std::vector<Permutation> out;
  do {
    Permutation tau(N);
    auto next = offset;
    for (std::size_t j = 0; j < N; ++j) tau[j] = static_cast<std::uint32_t>(next[labels[j]]++);
    out.push_back(std::move(tau));
  } while (std::next_permutation(labels.begin(), labels.end()));
  return out;
}

std::vector<std::pair<PileSizes, Rational>> cut_law(const CutProcess& process, std::size_t N, std::size_t t) {
  using Law = std::vector<std::pair<PileSizes, Rational>>;
  return std::visit(
      overloaded{
          [&](const ExplicitSequence& e) -> Law {
            if (e.steps.empty()) fail(ErrorCode::InvalidArgument, "empty explicit sequence");
            const auto& s = e.steps[(t - 1) % e.steps.size()];
            if (total(s) != N) fail(ErrorCode::SizeMismatch, "pile sizes do not sum to N");
            return {{s, Rational(1)}};
          },
          [&](const IIDMultinomial& m) -> Law {
            Law law;
            for (const auto& n : all_compositions(N, m.p.size())) {
              Rational pr(multinomial(n));
              for (std::size_t i = 0; i < n.size(); ++i)
                for (std::size_t r = 0; r < n[i]; ++r) pr *= Rational(m.p[i]);
              if (pr != 0) law.emplace_back(n, pr);
            }
            return law;
          },
          [&](const IIDFromMeasure& m) -> Law {
            const auto approx = approximate(m.mu, PrecisionConfig{});
            Law law;
            Rational sum = 0;
            for (const auto& n : all_compositions(N, approx.k)) {
              double pr = 0;
              const double mult = multinomial(n).convert_to<double>();
              for (std::size_t i = 0; i < approx.size(); ++i) {
                const auto p = approx.point(i);
                if (m.rounding == Rounding::Multinomial) {
                  double v = mult;
                  for (std::size_t j = 0; j < n.size(); ++j) v *= std::pow(p[j], static_cast<double>(n[j]));
                  pr += approx.weights[i] * v;
                } else if (round_largest_remainder(N, {p.begin(), p.end()}) == n) {
                  pr += approx.weights[i];
                }
              }
              if (pr > 0) {
                law.emplace_back(n, Rational(pr));
                sum += law.back().second;
              }
            }
            for (auto& entry : law) entry.second /= sum;
            return law;
          },
          [&](const UniformCut&) -> Law {
            Law law;
            for (std::size_t n = 0; n <= N; ++n) law.emplace_back(PileSizes{n, N - n}, Rational(1, N + 1));
            return law;
          },
          [&](const ExactBisection&) -> Law { return {{PileSizes{N / 2, N - N / 2}, Rational(1)}}; },
          [&](const FixedFraction& f) -> Law { return {{round_largest_remainder(N, f.q), Rational(1)}}; },
          [&](const Periodic& p) -> Law {
            if (p.cycle.empty()) fail(ErrorCode::InvalidArgument, "empty periodic cycle");
            return cut_law(p.cycle[(t - 1) % p.cycle.size()], N, t);
          },
      },
      process.rule);
}

StepLaw step_law(const std::vector<std::pair<PileSizes, Rational>>& cuts, std::size_t N) {
  check_size(N);
  std::map<std::uint64_t, Rational> acc;
  for (const auto& [piles, pr] : cuts) {
    const auto taus = interleavings(piles);
    const Rational each = pr / Rational(static_cast<long long>(taus.size()));
    for (const auto& tau : taus) acc[lehmer_rank(tau)] += each;
  }
  StepLaw s;
  s.N = N;
  BigInt den = 1;
  for (const auto& [r, w] : acc) den = boost::multiprecision::lcm(den, denominator(w));
  s.denominator = den;
  for (const auto& [r, w] : acc)
    if (w != 0) s.weights.emplace_back(r, numerator(w) * (den / denominator(w)));
  return s;
}

ExactDistribution convolve(const ExactDistribution& dist, const StepLaw& step) {
  if (dist.N != step.N) fail(ErrorCode::SizeMismatch, "step law and distribution sizes differ");
  const std::size_t N = dist.N;
  std::vector<Permutation> taus;
  taus.reserve(step.weights.size());
  for (const auto& [r, w] : step.weights) taus.push_back(lehmer_unrank(r, N));
  ExactDistribution out;
  out.N = N;
  out.denominator = dist.denominator * step.denominator;
  out.counts.assign(dist.counts.size(), 0);
  for (std::uint64_t r = 0; r < dist.counts.size(); ++r) {
    if (dist.counts[r] == 0) continue;
    const auto sigma = lehmer_unrank(r, N);
    for (std::size_t j = 0; j < taus.size(); ++j)
      out.counts[lehmer_rank(compose(sigma, taus[j]))] += dist.counts[r] * step.weights[j].second;
  }
  reduce(out);
  return out;
}

ExactDistribution exact_shuffle_distribution(std::size_t N, const std::vector<PileSizes>& piles) {
  check_size(N);
  auto d = point_mass_distribution(identity_permutation(N));
  for (const auto& p : piles) {
    if (total(p) != N) fail(ErrorCode::SizeMismatch, "pile sizes do not sum to N");
    d = convolve(d, step_law({{p, Rational(1)}}, N));
  }
  return d;
}

ExactDistribution exact_shuffle_distribution(std::size_t N, const CutProcess& process, std::size_t K) {
  check_size(N);
  auto d = point_mass_distribution(identity_permutation(N));
  for (std::size_t t = 1; t <= K; ++t) d = convolve(d, step_law(cut_law(process, N, t), N));
  return d;
}

ExactTv exact_tv(const ExactDistribution& dist) {
  const BigInt F = big_factorial(dist.N);
  BigInt acc = 0;
  for (const auto& c : dist.counts) {
    const BigInt diff = c * F - dist.denominator;
    acc += diff < 0 ? BigInt(-diff) : diff;
  }
  Rational tv(acc, 2 * dist.denominator * F);
  return {tv, tv.convert_to<double>()};
}

ExactDistribution exact_inverse_construction_law(std::size_t N, const std::vector<PileSizes>& piles) {
  check_size(N);
  const std::size_t K = piles.size();
  if (K > 7) fail(ErrorCode::TooLarge, "matrix enumeration is limited to K <= 7");
  std::vector<std::vector<std::vector<std::uint8_t>>> columns(K);
  for (std::size_t t = 0; t < K; ++t) {
    if (total(piles[t]) != N) fail(ErrorCode::SizeMismatch, "pile sizes do not sum to N");
    std::vector<std::uint8_t> labels;
    for (std::size_t l = 0; l < piles[t].size(); ++l) labels.insert(labels.end(), piles[t][l], static_cast<std::uint8_t>(l));
    do columns[t].push_back(labels);
    while (std::next_permutation(labels.begin(), labels.end()));
  }
  // count matrices by the graph they induce
  std::map<std::uint32_t, std::uint64_t> by_graph;
  std::vector<std::size_t> idx(K, 0);
  std::uint64_t matrices = 0;
  std::vector<std::uint64_t> rows(N);
  for (;;) {
    for (std::size_t i = 0; i < N; ++i) {
      std::uint64_t code = 0;
      for (std::size_t t = 0; t < K; ++t) code = code * 256 + columns[t][idx[t]][i];
      rows[i] = code;
    }
    std::sort(rows.begin(), rows.end());
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i + 1 < N; ++i)
      if (rows[i] == rows[i + 1]) mask |= 1U << i;
    ++by_graph[mask];
    ++matrices;
    std::size_t t = 0;
    while (t < K && ++idx[t] == columns[t].size()) idx[t++] = 0;
    if (t == K) break;
  }
  ExactDistribution d;
  d.N = N;
  d.counts.assign(factorial(N), 0);
  d.denominator = BigInt(matrices) * big_factorial(N);
  for (const auto& [mask, count] : by_graph) {
    ShuffleGraph G;
    G.N = N;
    for (std::size_t i = 0; i + 1 < N; ++i)
      if (mask >> i & 1U) G.edges.push_back(static_cast<std::uint32_t>(i + 1));
    Permutation pi = identity_permutation(N);
    do d.counts[lehmer_rank(inverse(graph_sort(pi, G)))] += count;
    while (std::next_permutation(pi.begin(), pi.end()));
  }
  reduce(d);
  return d;
}

}  // namespace riffle

#include "riffle/shuffle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "riffle/error.hpp"
#include "riffle/hypergeometric.hpp"

namespace riffle {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

PileSizes multinomial_draw(std::size_t N, std::span<const double> p, Stream& rng) {
  PileSizes out(p.size(), 0);
  std::size_t left = N;
  double mass = 1.0;
  for (std::size_t i = 0; i + 1 < p.size() && left > 0; ++i) {
    const double prob = mass > 0 ? std::clamp(p[i] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<long long> bin(static_cast<long long>(left), prob);
    out[i] = static_cast<std::size_t>(bin(rng));
    left -= out[i];
    mass -= p[i];
  }
  out.back() += left;
  return out;
}

void check_total(const PileSizes& piles, std::size_t N) {
  if (total(piles) != N) fail(ErrorCode::SizeMismatch, "pile sizes do not sum to the deck size");
}

}  // namespace

std::size_t total(const PileSizes& piles) { return std::accumulate(piles.begin(), piles.end(), std::size_t{0}); }

std::size_t l_max(const PileSizes& piles) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < piles.size(); ++i)
    if (piles[i] > piles[best]) best = i;
  return best;
}

CutProcess gsr_process() { return {IIDMultinomial{{0.5, 0.5}}}; }

std::string describe(const CutProcess& process) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const ExplicitSequence& e) { os << "explicit(" << e.steps.size() << " steps)"; },
                 [&](const IIDMultinomial& m) {
                   os << "multinomial(";
                   for (std::size_t i = 0; i < m.p.size(); ++i) os << (i ? "," : "") << m.p[i];
                   os << ")";
                 },
                 [&](const IIDFromMeasure& m) {
                   os << "measure(" << describe(m.mu)
                      << (m.rounding == Rounding::Multinomial ? ", multinomial)" : ", largest_remainder)");
                 },
                 [&](const UniformCut&) { os << "uniform_cut"; },
                 [&](const ExactBisection&) { os << "bisection"; },
                 [&](const FixedFraction& f) {
                   os << "fixed_fraction(";
                   for (std::size_t i = 0; i < f.q.size(); ++i) os << (i ? "," : "") << f.q[i];
                   os << ")";
                 },
                 [&](const Periodic& p) {
                   os << "periodic(";
                   for (std::size_t i = 0; i < p.cycle.size(); ++i) os << (i ? "; " : "") << describe(p.cycle[i]);
                   os << ")";
                 },
             },
             process.rule);
  return os.str();
}

std::size_t pile_count(const CutProcess& process) {
  return std::visit(overloaded{
                        [](const ExplicitSequence& e) {
                          std::size_t k = 0;
                          for (const auto& s : e.steps) k = std::max(k, s.size());
                          return k;
                        },
                        [](const IIDMultinomial& m) { return m.p.size(); },
                        [](const IIDFromMeasure& m) { return dimension(m.mu); },
                        [](const UniformCut&) { return std::size_t{2}; },
                        [](const ExactBisection&) { return std::size_t{2}; },
                        [](const FixedFraction& f) { return f.q.size(); },
                        [](const Periodic& p) {
                          std::size_t k = 0;
                          for (const auto& c : p.cycle) k = std::max(k, pile_count(c));
                          return k;
                        },
                    },
                    process.rule);
}

PileSizes round_largest_remainder(std::size_t N, const std::vector<double>& q) {
  PileSizes out(q.size());
  std::vector<double> rem(q.size());
  std::size_t used = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double target = q[i] * static_cast<double>(N);
    out[i] = static_cast<std::size_t>(std::floor(target + 1e-9));
    rem[i] = target - static_cast<double>(out[i]);
    used += out[i];
  }
  if (used > N) fail(ErrorCode::InvalidArgument, "fractions exceed 1");
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t j = 0; used < N; ++j, ++used) ++out[order[j % order.size()]];
  return out;
}

PileSizes cut_sizes(const CutProcess& process, std::size_t N, std::size_t t, Stream& rng) {
  if (N < 1) fail(ErrorCode::InvalidArgument, "deck size must be positive");
  if (t < 1) fail(ErrorCode::InvalidArgument, "steps are numbered from 1");
  return std::visit(
      overloaded{
          [&](const ExplicitSequence& e) {
            if (e.steps.empty()) fail(ErrorCode::InvalidArgument, "empty explicit sequence");
            const auto& s = e.steps[(t - 1) % e.steps.size()];
            check_total(s, N);
            return s;
          },
          [&](const IIDMultinomial& m) { return multinomial_draw(N, m.p, rng); },
          [&](const IIDFromMeasure& m) {
            const auto p = sample_point(m.mu, rng);
            return m.rounding == Rounding::Multinomial ? multinomial_draw(N, p, rng)
                                                        : round_largest_remainder(N, p);
          },
          [&](const UniformCut&) {
            const auto n = static_cast<std::size_t>(rng.below(N + 1));
            return PileSizes{n, N - n};
          },
          [&](const ExactBisection&) { return PileSizes{N / 2, N - N / 2}; },
          [&](const FixedFraction& f) { return round_largest_remainder(N, f.q); },
          [&](const Periodic& p) {
            if (p.cycle.empty()) fail(ErrorCode::InvalidArgument, "empty periodic cycle");
            return cut_sizes(p.cycle[(t - 1) % p.cycle.size()], N, t, rng);
          },
      },
      process.rule);
}

std::vector<PileSizes> pile_sequence(const CutProcess& process, std::size_t N, std::size_t K,
                                     const Stream& rng) {
  std::vector<PileSizes> out;
  out.reserve(K);
  for (std::size_t t = 1; t <= K; ++t) {
    Stream s = rng.split(t).split(0);
    out.push_back(cut_sizes(process, N, t, s));
  }
  return out;
}

Permutation riffle_once(const Permutation& deck, const PileSizes& piles, Stream& rng) {
  const std::size_t N = deck.size();
  check_total(piles, N);
  const std::size_t k = piles.size();
  std::vector<std::size_t> next(k), left(piles.begin(), piles.end());
  for (std::size_t i = 1; i < k; ++i) next[i] = next[i - 1] + piles[i - 1];
  Permutation out(N);
  std::size_t remaining = N;
  for (std::size_t j = 0; j < N; ++j, --remaining) {
    auto r = static_cast<std::size_t>(rng.below(remaining));
    std::size_t i = 0;
    while (r >= left[i]) r -= left[i++];
    out[j] = deck[next[i]++];
    --left[i];
  }
  return out;
}

Permutation shuffle_K(const Permutation& deck, const CutProcess& process, std::size_t K,
                      const Stream& rng) {
  Permutation cur = deck;
  for (std::size_t t = 1; t <= K; ++t) {
    const Stream s = rng.split(t);
    Stream cut = s.split(0), drop = s.split(1);
    cur = riffle_once(cur, cut_sizes(process, cur.size(), t, cut), drop);
  }
  return cur;
}

ShuffleMatrix sample_shuffle_matrix(const std::vector<PileSizes>& piles, const Stream& rng) {
  ShuffleMatrix m;
  m.K = piles.size();
  if (m.K == 0) fail(ErrorCode::InvalidArgument, "shuffle matrix needs at least one column");
  m.N = total(piles[0]);
  m.column_counts = piles;
  m.digits.assign(m.N * m.K, 0);
  std::vector<std::uint8_t> col(m.N);
  for (std::size_t t = 0; t < m.K; ++t) {
    check_total(piles[t], m.N);
    if (piles[t].size() > 256) fail(ErrorCode::InvalidArgument, "at most 256 piles");
    std::size_t pos = 0;
    for (std::size_t l = 0; l < piles[t].size(); ++l)
      for (std::size_t c = 0; c < piles[t][l]; ++c) col[pos++] = static_cast<std::uint8_t>(l);
    Stream s = rng.split(t + 1);
    shuffle_range(col.begin(), col.end(), s);
    for (std::size_t i = 0; i < m.N; ++i) m.digits[i * m.K + t] = col[i];
  }
  return m;
}

bool SortedStrings::equal_rows(std::size_t i, std::size_t j) const {
  return std::equal(digits.begin() + static_cast<std::ptrdiff_t>(i * K),
                    digits.begin() + static_cast<std::ptrdiff_t>((i + 1) * K),
                    digits.begin() + static_cast<std::ptrdiff_t>(j * K));
}

SortedStrings sort_lex(const ShuffleMatrix& matrix) {
  const std::size_t N = matrix.N, K = matrix.K;
  std::vector<std::uint32_t> order(N), tmp(N);
  std::iota(order.begin(), order.end(), 0U);
  // LSD radix: stable counting sort from the last column to the first
  for (std::size_t col = K; col-- > 0;) {
    std::array<std::size_t, 257> start{};
    for (std::size_t i = 0; i < N; ++i) ++start[matrix.at(i, col) + 1];
    for (std::size_t d = 1; d < start.size(); ++d) start[d] += start[d - 1];
    for (auto r : order) tmp[start[matrix.at(r, col)]++] = r;
    order.swap(tmp);
  }
  SortedStrings s;
  s.N = N;
  s.K = K;
  s.source_row = order;
  s.digits.resize(N * K);
  for (std::size_t i = 0; i < N; ++i)
    std::copy_n(matrix.digits.begin() + static_cast<std::ptrdiff_t>(order[i] * K), K,
                s.digits.begin() + static_cast<std::ptrdiff_t>(i * K));
  return s;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> ShuffleGraph::components() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::size_t j = 0; j < edges.size();) {
    std::size_t e = j;
    while (e + 1 < edges.size() && edges[e + 1] == edges[e] + 1) ++e;
    out.emplace_back(edges[j], edges[e] + 1);
    j = e + 1;
  }
  return out;
}

ShuffleGraph shuffle_graph(const SortedStrings& sorted) {
  ShuffleGraph g;
  g.N = sorted.N;
  for (std::size_t i = 0; i + 1 < sorted.N; ++i)
    if (sorted.equal_rows(i, i + 1)) g.edges.push_back(static_cast<std::uint32_t>(i + 1));
  return g;
}

Permutation graph_sort(const Permutation& sigma, const ShuffleGraph& G) {
  if (sigma.size() != G.N) fail(ErrorCode::SizeMismatch, "graph and permutation sizes differ");
  Permutation out = sigma;
  for (const auto& [a, b] : G.components())
    std::sort(out.begin() + (a - 1), out.begin() + b);
  return out;
}

ShuffleGraph sample_shuffle_graph(const std::vector<PileSizes>& piles, const Stream& rng) {
  if (piles.empty()) fail(ErrorCode::InvalidArgument, "need at least one step");
  const std::size_t N = total(piles[0]);
  struct Group {
    std::uint32_t start, size;
  };
  std::vector<Group> groups, next;
  if (N >= 2) groups.push_back({0, static_cast<std::uint32_t>(N)});
  Stream s = rng;
  std::vector<std::uint64_t> pool;
  for (std::size_t t = 0; t < piles.size() && !groups.empty(); ++t) {
    const auto& c = piles[t];
    check_total(c, N);
    if (std::any_of(c.begin(), c.end(), [N](std::size_t v) { return v == N; })) continue;
    next.clear();
    const std::size_t major = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
    const std::uint64_t minor = N - c[major];
    if (minor < groups.size()) {
      // few off-majority labels: scatter them over the grouped rows and
      // split only the groups they land in
      std::uint64_t alive = 0;
      for (const auto& g : groups) alive += g.size;
      const std::uint64_t hits = hypergeometric_sample(minor, N, alive, s);
      std::vector<std::uint8_t> labels;
      std::uint64_t rest = minor, need = hits;
      for (std::size_t l = 0; l < c.size(); ++l) {
        if (l == major) continue;
        const std::uint64_t x = (rest == c[l]) ? need : hypergeometric_sample(c[l], rest, need, s);
        rest -= c[l];
        need -= x;
        labels.insert(labels.end(), x, static_cast<std::uint8_t>(l));
      }
      shuffle_range(labels.begin(), labels.end(), s);
      std::unordered_set<std::uint64_t> seen;
      std::vector<std::uint64_t> pos;
      for (std::uint64_t j = alive - hits; j < alive; ++j) {  // Floyd
        const std::uint64_t r = s.below(j + 1);
        pos.push_back(seen.insert(r).second ? r : j);
        if (pos.back() == j) seen.insert(j);
      }
      std::vector<std::pair<std::uint64_t, std::uint8_t>> marked(hits);
      for (std::size_t j = 0; j < hits; ++j) marked[j] = {pos[j], labels[j]};
      std::sort(marked.begin(), marked.end());
      std::size_t m = 0;
      std::uint64_t base = 0;
      std::vector<std::uint32_t> count(c.size());
      for (const auto& g : groups) {
        if (m == marked.size() || marked[m].first >= base + g.size) {
          next.push_back(g);
          base += g.size;
          continue;
        }
        std::fill(count.begin(), count.end(), 0);
        std::uint32_t in = 0;
        for (; m < marked.size() && marked[m].first < base + g.size; ++m, ++in) ++count[marked[m].second];
        count[major] = g.size - in;
        std::uint32_t offset = g.start;
        for (auto x : count) {
          if (x >= 2) next.push_back({offset, x});
          offset += x;
        }
        base += g.size;
      }
      groups.swap(next);
      continue;
    }
    pool.assign(c.begin(), c.end());
    std::uint64_t remaining = N;
    for (const auto& g : groups) {
      std::uint64_t need = g.size;
      std::uint64_t rest = remaining;  // pool mass over digits >= l
      std::uint32_t offset = g.start;
      for (std::size_t l = 0; l < pool.size() && need > 0; ++l) {
        std::uint64_t x;
        if (l + 1 == pool.size())
          x = need;
        else
          x = hypergeometric_sample(pool[l], rest, need, s);
        rest -= pool[l];
        pool[l] -= x;
        need -= x;
        if (x >= 2) next.push_back({offset, static_cast<std::uint32_t>(x)});
        offset += static_cast<std::uint32_t>(x);
      }
      remaining -= g.size;
    }
    groups.swap(next);
  }
  ShuffleGraph G;
  G.N = N;
  for (const auto& g : groups)
    for (std::uint32_t i = 1; i < g.size; ++i) G.edges.push_back(g.start + i);
  return G;
}

Permutation sample_sigma_given_piles(const std::vector<PileSizes>& piles, const Stream& rng) {
  const std::size_t N = piles.empty() ? 0 : total(piles[0]);
  Permutation pi = identity_permutation(N);
  Stream ps = rng.split(2);
  shuffle_range(pi.begin(), pi.end(), ps);
  return graph_sort(pi, sample_shuffle_graph(piles, rng.split(1)));
}

Permutation sample_inverse_shuffled_perm(const CutProcess& process, std::size_t N, std::size_t K,
                                         const Stream& rng) {
  if (K == 0) return identity_permutation(N);
  const auto piles = pile_sequence(process, N, K, rng.split(0));
  return inverse(sample_sigma_given_piles(piles, rng.split(3)));
}

Permutation sample_inverse_shuffled_perm_matrix(const CutProcess& process, std::size_t N,
                                                std::size_t K, const Stream& rng) {
  if (K == 0) return identity_permutation(N);
  const auto piles = pile_sequence(process, N, K, rng.split(0));
  const auto G = shuffle_graph(sort_lex(sample_shuffle_matrix(piles, rng.split(4))));
  Permutation pi = identity_permutation(N);
  Stream ps = rng.split(5);
  shuffle_range(pi.begin(), pi.end(), ps);
  return inverse(graph_sort(pi, G));
}

double lambda_of_prefix(const std::vector<PileSizes>& piles, const std::vector<std::uint8_t>& x) {
  return prefix_interval(piles, x).lambda;
}

PrefixInterval prefix_interval(const std::vector<PileSizes>& piles, const std::vector<std::uint8_t>& x) {
  if (x.size() > piles.size()) fail(ErrorCode::InvalidArgument, "prefix longer than the pile sequence");
  PrefixInterval r{0.0, 1.0};
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto& n = piles[j];
    const double N = static_cast<double>(total(n));
    if (x[j] >= n.size()) fail(ErrorCode::InvalidArgument, "prefix digit exceeds pile count");
    for (std::size_t l = 0; l < x[j]; ++l) r.t += r.lambda * static_cast<double>(n[l]) / N;
    r.lambda *= static_cast<double>(n[x[j]]) / N;
  }
  return r;
}

bool is_chi_good(const PileSizes& piles, double chi) {
  const double N = static_cast<double>(total(piles));
  for (auto n : piles)
    if (static_cast<double>(n) > (1.0 - chi) * N) return false;
  return true;
}

AlmostMuLike is_almost_mu_like(const std::vector<PileSizes>& piles, const CellMixture& mu, double rho,
                               double varphi) {
  const std::size_t K = piles.size();
  if (K == 0) return {true, 0};
  const std::size_t N = total(piles[0]);
  const std::size_t k = mu.partition.k();
  std::vector<CellKey> cell(K);
  for (std::size_t t = 0; t < K; ++t) {
    if (piles[t].size() > k) fail(ErrorCode::SizeMismatch, "more piles than simplex dimension");
    std::vector<double> p(k, 0.0);
    for (std::size_t l = 0; l < piles[t].size(); ++l)
      p[l] = static_cast<double>(piles[t][l]) / static_cast<double>(N);
    cell[t] = mu.partition.cell_of(p);
  }
  const double w = rho * std::log(static_cast<double>(N));
  if (!(w > 0)) fail(ErrorCode::InvalidArgument, "rho log N must be positive");
  const auto t_limit = static_cast<std::size_t>(std::ceil(w));
  for (std::size_t ts = 0; ts < std::max<std::size_t>(1, t_limit); ++ts) {
    if (static_cast<double>(ts) >= w && ts > 0) break;
    bool ok = true;
    for (std::size_t i = 1; ok; ++i) {
      const double hi = static_cast<double>(ts) + static_cast<double>(i) * w;
      if (hi > static_cast<double>(K)) break;
      const auto first = static_cast<std::size_t>(std::floor(hi - w)) + 1;
      const auto last = static_cast<std::size_t>(std::floor(hi));
      if (last < first) continue;
      std::map<CellKey, std::size_t> counts;
      for (std::size_t t = first; t <= last; ++t) ++counts[cell[t - 1]];
      const double steps = static_cast<double>(last - first + 1);
      for (const auto& key : mu.cells) counts.try_emplace(key, 0);
      for (const auto& [key, c] : counts)
        if (std::abs(static_cast<double>(c) / steps - mu.mass(key)) >= varphi) ok = false;
    }
    if (ok) return {true, ts};
  }
  return {false, std::nullopt};
}

}  // namespace riffle

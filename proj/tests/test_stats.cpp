#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/hypergeometric.hpp>
#include <cmath>

#include "riffle/cold_spots.hpp"
#include "riffle/constants.hpp"
#include "riffle/error.hpp"
#include "riffle/exact.hpp"
#include "riffle/hypergeometric.hpp"
#include "riffle/statistics.hpp"

using namespace riffle;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

ColdSpotSet manual_set(std::size_t N, std::vector<std::pair<std::size_t, std::size_t>> iv) {
  ColdSpotSet H;
  H.N = N;
  H.intervals = std::move(iv);
  for (auto [a, b] : H.intervals) H.size += b - a + 1;
  return H;
}

// rising sequences by walking maximal chains v, v+1, ... left to right
std::size_t rising_by_chains(const Permutation& deck) {
  const auto pos = inverse(deck);
  std::size_t count = 0;
  std::vector<bool> used(deck.size(), false);
  for (std::size_t v = 0; v < deck.size(); ++v) {
    if (used[v]) continue;
    ++count;
    std::size_t w = v;
    used[w] = true;
    while (w + 1 < deck.size() && pos[w + 1] > pos[w]) used[++w] = true;
  }
  return count;
}

}  // namespace

TEST(Exact, ThreeCardsOneCut) {
  const auto d = exact_shuffle_distribution(3, {{2, 1}});
  EXPECT_EQ(d.probability(lehmer_rank(parse_permutation("1 2 3"))), Rational(1, 3));
  EXPECT_EQ(d.probability(lehmer_rank(parse_permutation("1 3 2"))), Rational(1, 3));
  EXPECT_EQ(d.probability(lehmer_rank(parse_permutation("3 1 2"))), Rational(1, 3));
  EXPECT_EQ(d.support_size(), 3u);
  EXPECT_EQ(exact_tv(d).value, Rational(1, 2));
}

TEST(Exact, TrivialLaws) {
  const auto id = exact_shuffle_distribution(4, gsr_process(), 0);
  EXPECT_EQ(id.probability(0), Rational(1));
  const auto full = exact_shuffle_distribution(4, {{4, 0}, {0, 4}, {4, 0}});
  EXPECT_EQ(full.probability(0), Rational(1));
  EXPECT_EQ(exact_tv(point_mass_distribution(identity_permutation(3))).value, Rational(5, 6));
  ExactDistribution uni;
  uni.N = 3;
  uni.denominator = 6;
  uni.counts.assign(6, 1);
  EXPECT_EQ(exact_tv(uni).value, Rational(0));
  EXPECT_EQ(code_of([] { exact_shuffle_distribution(9, {{5, 4}}); }), ErrorCode::TooLarge);
}

TEST(Exact, ProbabilitiesSumToOne) {
  const auto d = exact_shuffle_distribution(6, {{2, 2, 2}, {3, 3}, {1, 5}});
  Rational sum = 0;
  for (std::uint64_t r = 0; r < 720; ++r) sum += d.probability(r);
  EXPECT_EQ(sum, Rational(1));
}

TEST(Exact, GsrMatchesRisingSequenceFormula) {
  // tv values from an independent enumeration of binom(2^K + N - r, N) / 2^{KN}
  struct Row {
    std::size_t N, K;
    Rational tv;
  };
  const std::vector<Row> rows = {{5, 1, Rational(31, 40)},      {5, 2, Rational(929, 2560)},
                                 {5, 3, Rational(6789, 40960)}, {6, 1, Rational(331, 360)},
                                 {6, 2, Rational(873, 2048)},   {6, 4, Rational(258605, 2097152)},
                                 {7, 3, Rational(11944381, 41287680)}};
  for (const auto& r : rows) EXPECT_EQ(exact_tv(exact_shuffle_distribution(r.N, gsr_process(), r.K)).value, r.tv);
}

TEST(Exact, RandomCutLaws) {
  auto law = cut_law({UniformCut{}}, 4, 1);
  ASSERT_EQ(law.size(), 5u);
  for (auto& [piles, p] : law) EXPECT_EQ(p, Rational(1, 5));
  law = cut_law(gsr_process(), 3, 1);
  Rational sum = 0;
  for (auto& [piles, p] : law) {
    sum += p;
    if (piles == PileSizes{1, 2}) EXPECT_EQ(p, Rational(3, 8));
  }
  EXPECT_EQ(sum, Rational(1));
}

TEST(Exact, MonotoneInK) {
  for (const CutProcess& proc : {gsr_process(), CutProcess{UniformCut{}}, CutProcess{ExactBisection{}}}) {
    Rational prev = 2;
    for (std::size_t K = 0; K <= 6; ++K) {
      const auto tv = exact_tv(exact_shuffle_distribution(5, proc, K)).value;
      EXPECT_LE(tv, prev) << describe(proc) << " K=" << K;
      prev = tv;
    }
  }
}

TEST(RisingSequences, Examples) {
  EXPECT_EQ(rising_sequences(identity_permutation(7)), 1u);
  EXPECT_EQ(rising_sequences(parse_permutation("3 2 1")), 3u);
  EXPECT_EQ(rising_sequences(parse_permutation("1 4 2 5 3")), 2u);
  std::vector<std::size_t> euler(6, 0);
  for (std::uint64_t r = 0; r < 120; ++r) {
    const auto p = lehmer_unrank(r, 5);
    const auto rs = rising_sequences(p);
    EXPECT_EQ(rs, rising_by_chains(p));
    EXPECT_EQ(rs == 1, p == identity_permutation(5));
    ++euler[rs];
  }
  EXPECT_EQ(euler, (std::vector<std::size_t>{0, 1, 26, 66, 26, 1}));
}

TEST(RisingSequences, BoundAfterShuffles) {
  const Stream base(12, 0);
  for (std::size_t K = 1; K <= 4; ++K)
    for (std::size_t i = 0; i < 200; ++i) {
      const auto deck = shuffle_K(identity_permutation(40), gsr_process(), K, base.split(K * 1000 + i));
      EXPECT_LE(rising_sequences(deck), std::size_t{1} << K);
      EXPECT_EQ(rising_sequences_of_inverse(inverse(deck)), rising_sequences(deck));
    }
}

TEST(LongestRun, Examples) {
  EXPECT_EQ(longest_increasing_run(identity_permutation(9)), 9u);
  EXPECT_EQ(longest_increasing_run(parse_permutation("3 2 1")), 1u);
  EXPECT_EQ(longest_increasing_run(parse_permutation("2 5 1 3 4 6")), 4u);
}

TEST(Wilson, KnownInterval) {
  const auto ci = wilson_interval(50, 100, 0.95);
  EXPECT_NEAR(ci.lo, 0.4038, 1e-4);
  EXPECT_NEAR(ci.hi, 0.5962, 1e-4);
  const auto zero = wilson_interval(0, 1000, 0.99);
  EXPECT_EQ(zero.lo, 0.0);
  EXPECT_GT(zero.hi, 0.0);
}

TEST(Spearman, Extremes) {
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8, 1e-15);
}

TEST(TvBound, UnshuffledDeck) {
  StatisticSpec s;
  s.kind = StatisticKind::RisingSequences;
  McOptions opt;
  opt.samples = 2000;
  opt.pilot_samples = 500;
  const auto r = tv_lower_bound_mc(gsr_process(), 10, 0, s, opt);
  EXPECT_EQ(r.p_shuffled, 1.0);
  EXPECT_GE(r.lower_bound, 0.99);
}

TEST(TvBound, OneShuffleOfFiftyTwo) {
  StatisticSpec s;
  s.kind = StatisticKind::RisingSequences;
  s.threshold = 2;
  s.direction = -1;
  McOptions opt;
  opt.samples = 2000;
  const auto r = tv_lower_bound_mc(gsr_process(), 52, 1, s, opt);
  EXPECT_EQ(r.p_shuffled, 1.0);
  EXPECT_EQ(r.p_uniform, 0.0);
  EXPECT_GE(r.lower_bound, 0.99);
}

TEST(TvBound, WellMixedIsNearZero) {
  StatisticSpec s;
  s.kind = StatisticKind::LongestRun;
  McOptions opt;
  opt.samples = 5000;
  const double Cbar = 3 / (2 * std::log(2.0));
  const auto K = static_cast<std::size_t>(std::ceil(3 * Cbar * std::log(100.0)));
  const auto r = tv_lower_bound_mc(gsr_process(), 100, K, s, opt);
  EXPECT_LE(r.lower_bound, 0.05);
}

TEST(TvBound, NeverAboveExactTv) {
  StatisticSpec s;
  McOptions opt;
  opt.samples = 3000;
  opt.pilot_samples = 500;
  for (auto kind : {StatisticKind::LongestRun, StatisticKind::RisingSequences})
    for (std::size_t K = 0; K <= 6; ++K) {
      s.kind = kind;
      opt.seed = 100 + K;
      const auto r = tv_lower_bound_mc(gsr_process(), 6, K, s, opt);
      const double tv = exact_tv(exact_shuffle_distribution(6, gsr_process(), K)).approx;
      EXPECT_LE(r.estimate - r.half_width(), tv + 1e-12) << to_string(kind) << " K=" << K;
      EXPECT_GE(r.lower_bound, 0.0);
      EXPECT_LE(r.lower_bound, 1.0);
    }
}

TEST(TvBound, ThreadIndependent) {
  StatisticSpec s;
  McOptions opt;
  opt.samples = 700;
  opt.pilot_samples = 300;
  const auto a = tv_lower_bound_mc(gsr_process(), 200, 5, s, opt);
  opt.threads = 3;
  const auto b = tv_lower_bound_mc(gsr_process(), 200, 5, s, opt);
  EXPECT_EQ(a.p_shuffled, b.p_shuffled);
  EXPECT_EQ(a.p_uniform, b.p_uniform);
  EXPECT_EQ(a.threshold, b.threshold);
}

TEST(ColdSpots, Construction) {
  const std::size_t N = 1 << 14;
  const auto mixture = discretize_measure(PointMass{{0.5, 0.5}}, 0.05, {});
  const auto piles = pile_sequence(gsr_process(), N, 12, Stream(4, 0));
  const auto H = build_cold_spots(piles, mixture, 3.0);
  // A = floor(0.9 / (2 log 2) * log N) = floor(6.3)
  EXPECT_EQ(H.prefix_length, 6u);
  ASSERT_EQ(H.quotas.size(), 1u);
  EXPECT_EQ(H.quotas[0].quota, (std::vector<std::size_t>{3, 3}));
  EXPECT_DOUBLE_EQ(H.prefix_total, 20.0);
  EXPECT_EQ(H.prefix_count, 20u);
  EXPECT_FALSE(H.subsampled);
  EXPECT_NEAR(H.info_sum, std::log(2.0), 1e-12);

  std::size_t size = 0, prev_end = 0, boundary = 0;
  for (auto [a, b] : H.intervals) {
    EXPECT_LE(a, b);
    if (prev_end > 0) EXPECT_GT(a, prev_end + 1);  // disjoint and not adjacent
    EXPECT_GE(a, 1u);
    EXPECT_LE(b, N);
    size += b - a + 1;
    boundary += (a > 1) + (b < N);
    prev_end = b;
  }
  EXPECT_EQ(size, H.size);
  EXPECT_EQ(boundary, H.boundary);
  EXPECT_TRUE(H.size_ok);
  EXPECT_TRUE(H.boundary_ok);
  EXPECT_GE(static_cast<double>(H.size), std::sqrt(static_cast<double>(N)));
  EXPECT_LE(static_cast<double>(H.boundary), 2 * std::sqrt(static_cast<double>(H.size)));
  std::size_t members = 0;
  for (std::size_t i = 1; i <= N; ++i) members += H.contains(i);
  EXPECT_EQ(members, H.size);
}

TEST(ColdSpots, TwentyBitDeck) {
  const std::size_t N = 1 << 20;
  const auto mixture = discretize_measure(PointMass{{0.5, 0.5}}, 0.05, {});
  const auto piles = pile_sequence(gsr_process(), N, 18, Stream(4, 1));
  const auto H = build_cold_spots(piles, mixture, 3.0);
  EXPECT_EQ(H.prefix_length, 9u);
  std::size_t q = H.quotas[0].quota[0];
  EXPECT_TRUE(q == 4 || q == 5);
  EXPECT_EQ(H.quotas[0].quota[0] + H.quotas[0].quota[1], 9u);
  EXPECT_DOUBLE_EQ(H.prefix_total, 126.0);
}

TEST(ColdSpots, Errors) {
  const auto vertex = discretize_measure(PointMass{{1, 0}}, 0.05, {});
  const auto piles = pile_sequence(gsr_process(), 1024, 20, Stream(1, 1));
  EXPECT_EQ(code_of([&] { build_cold_spots(piles, vertex, 3.0); }), ErrorCode::DegenerateMixture);
  const auto point = discretize_measure(PointMass{{0.5, 0.5}}, 0.05, {});
  const auto few = pile_sequence(gsr_process(), 1 << 14, 6, Stream(1, 1));
  EXPECT_EQ(code_of([&] { build_cold_spots(few, point, 3.0); }), ErrorCode::TooFewSteps);
}

TEST(ColdSpots, SubsamplesBeyondCap) {
  const std::size_t N = 1 << 14;
  const auto mixture = discretize_measure(PointMass{{0.5, 0.5}}, 0.05, {});
  const auto piles = pile_sequence(gsr_process(), N, 12, Stream(4, 0));
  ColdSpotParams p;
  p.prefix_cap = 5;
  const auto H = build_cold_spots(piles, mixture, 3.0, p);
  EXPECT_TRUE(H.subsampled);
  EXPECT_EQ(H.prefix_count, 5u);
  EXPECT_DOUBLE_EQ(H.prefix_total, 20.0);
}

TEST(Ascents, Examples) {
  const auto H = manual_set(10, {{2, 4}, {9, 10}});
  EXPECT_EQ(ascent_statistic(identity_permutation(10), H), 4u);  // 2,3,4,9
  Permutation rev(10);
  for (std::uint32_t i = 0; i < 10; ++i) rev[i] = 9 - i;
  EXPECT_EQ(ascent_statistic(rev, H), 0u);
  EXPECT_EQ(ascent_statistic_of_deck(identity_permutation(10), H), 4u);
}

TEST(Ascents, UniformMeanIsHalf) {
  const std::size_t N = 2000;
  const auto H = manual_set(N, {{1, 300}, {1001, 1500}, {1900, 2000}});
  const double inner = 300 + 500 + 100;  // position 2000 has no successor
  const Stream base(8, 0);
  const int n = 10000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    Permutation s = identity_permutation(N);
    Stream r = base.split(i);
    shuffle_range(s.begin(), s.end(), r);
    const double a = static_cast<double>(ascent_statistic(s, H));
    sum += a;
    sq += a * a;
  }
  const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, inner / 2, 3 * se);
}

TEST(ColdSpotTest, Threshold) {
  const auto H = manual_set(200, {{1, 100}});
  EXPECT_NEAR(cold_spot_threshold(H, 0.2), 50 + std::pow(100.0, 0.6), 1e-12);
  EXPECT_NEAR(cold_spot_threshold(H, 0.2), 65.849, 1e-3);
  const auto r = cold_spot_test(identity_permutation(200), H, 0.2);
  EXPECT_EQ(r.statistic, 100);
  EXPECT_TRUE(r.reject);
  Permutation rev(200);
  for (std::uint32_t i = 0; i < 200; ++i) rev[i] = 199 - i;
  EXPECT_FALSE(cold_spot_test(rev, H, 0.2).reject);
}

TEST(LSparse, Examples) {
  EXPECT_TRUE(is_L_sparse(ShuffleGraph{100, {}}, 12));
  ShuffleGraph path{20, {}};
  for (std::uint32_t i = 1; i < 20; ++i) path.edges.push_back(i);
  EXPECT_FALSE(is_L_sparse(path, 12));
  // component of L/3 + 2 = 6 vertices, 5 edges
  EXPECT_FALSE(is_L_sparse(ShuffleGraph{40, {20, 21, 22, 23, 24}}, 12));
  EXPECT_TRUE(is_L_sparse(ShuffleGraph{40, {20, 21, 22, 23}}, 12));
  EXPECT_TRUE(is_L_sparse(ShuffleGraph{40, {1, 2, 3, 4, 30, 31, 32, 33}}, 12));
}

TEST(LSparse, Monotone) {
  Stream rng(3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    ShuffleGraph G{60, {}};
    for (std::uint32_t i = 1; i < 60; ++i)
      if (rng.uniform() < 0.3) G.edges.push_back(i);
    const bool before = is_L_sparse(G, 15);
    while (!G.edges.empty()) {
      G.edges.erase(G.edges.begin() + static_cast<std::ptrdiff_t>(rng.below(G.edges.size())));
      if (before) EXPECT_TRUE(is_L_sparse(G, 15));
    }
  }
}

TEST(SharedEdges, Examples) {
  const ShuffleGraph G{10, {1, 3}}, H{10, {3, 5}};
  EXPECT_EQ(shared_edges(G, G), 2u);
  EXPECT_EQ(shared_edges(G, ShuffleGraph{10, {2, 4}}), 0u);
  EXPECT_EQ(shared_edges(G, H), 1u);
  EXPECT_EQ(code_of([&] { shared_edges(G, ShuffleGraph{11, {}}); }), ErrorCode::SizeMismatch);
}

TEST(FirstMoment, Extremes) {
  auto rows = first_moment_scan({ExplicitSequence{{{64, 0}}}}, {64}, [](std::size_t) { return 1; }, 20, 1);
  EXPECT_EQ(rows[0].mean, 63.0);
  rows = first_moment_scan(gsr_process(), {256}, [](std::size_t) { return 60; }, 50, 1);
  EXPECT_EQ(rows[0].mean, 0.0);
  const auto a = first_moment_scan(gsr_process(), {512}, [](std::size_t) { return 12; }, 40, 9, 1);
  const auto b = first_moment_scan(gsr_process(), {512}, [](std::size_t) { return 12; }, 40, 9, 3);
  EXPECT_EQ(a[0].mean, b[0].mean);
  EXPECT_GT(a[0].mean, 0.0);
  EXPECT_EQ(a[0].pairs, 40u);
  rows = first_moment_scan({ExplicitSequence{{{64, 0}}}}, {64}, [](std::size_t) { return 1; }, 20, 1, 1, 6);
  EXPECT_EQ(rows[0].mean, 63.0);
  EXPECT_EQ(rows[0].pairs, 300u);
}

TEST(FirstMoment, AllPairsEstimatorUnbiased) {
  // same expectation from plain pairs and from all pairs among 8 graphs
  const auto K = [](std::size_t) { return 9; };
  const auto plain = first_moment_scan(gsr_process(), {128}, K, 20000, 3);
  const auto pooled = first_moment_scan(gsr_process(), {128}, K, 5000, 4, 1, 8);
  EXPECT_NEAR(plain[0].mean, pooled[0].mean, 4 * std::hypot(plain[0].std_error, pooled[0].std_error));
  EXPECT_LT(pooled[0].std_error, plain[0].std_error);
}

TEST(Hypergeometric, TrivialCases) {
  Stream rng(1, 1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(hypergeometric_sample(50, 50, 17, rng), 17u);
    EXPECT_EQ(hypergeometric_sample(20, 50, 0, rng), 0u);
    EXPECT_EQ(hypergeometric_sample(0, 50, 30, rng), 0u);
  }
  EXPECT_EQ(code_of([&] { hypergeometric_sample(60, 50, 3, rng); }), ErrorCode::InvalidParams);
}

TEST(Hypergeometric, PmfAgainstIndependentFormula) {
  Stream rng(2024, 11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint64_t n = 2 + rng.below(4000);
    const std::uint64_t n1 = rng.below(n + 1), m = rng.below(n + 1);
    const auto pmf = hypergeometric_pmf(n1, n, m);
    boost::math::hypergeometric_distribution<long double> ref(static_cast<unsigned>(n1), static_cast<unsigned>(m),
                                                             static_cast<unsigned>(n));
    for (std::size_t i = 0; i < pmf.p.size(); ++i) {
      const auto k = pmf.kmin + i;
      const long double expect = boost::math::pdf(ref, static_cast<unsigned>(k));
      if (expect < 1e-300L) continue;
      EXPECT_NEAR(static_cast<double>(pmf.p[i] / expect), 1.0, 1e-10) << n1 << " " << n << " " << m << " k=" << k;
      EXPECT_NEAR(static_cast<double>(std::exp(hypergeometric_log_pmf(k, n1, n, m)) / expect), 1.0, 1e-10);
    }
  }
}

TEST(Hypergeometric, SamplerFrequencies) {
  for (auto [n1, n, m] : std::vector<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>>{
           {30, 100, 20}, {700, 1000, 600}, {5000, 20000, 8000}, {3, 1000000, 400}, {7, 12, 5}, {8, 20, 15}}) {
    const auto pmf = hypergeometric_pmf(n1, n, m);
    std::vector<double> counts(pmf.p.size(), 0);
    Stream rng(n1, m);
    const std::size_t trials = 200000;
    for (std::size_t i = 0; i < trials; ++i) counts[hypergeometric_sample(n1, n, m, rng) - pmf.kmin] += 1;
    // pool cells with small expectation
    std::vector<double> obs, expct;
    double o = 0, e = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      o += counts[i];
      e += static_cast<double>(pmf.p[i]) * trials;
      if (e >= 20) {
        obs.push_back(o);
        expct.push_back(e);
        o = e = 0;
      }
    }
    if (!obs.empty()) {
      obs.back() += o;
      expct.back() += e;
    }
    double stat = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) stat += (obs[i] - expct[i]) * (obs[i] - expct[i]) / expct[i];
    boost::math::chi_squared chi(static_cast<double>(obs.size() - 1));
    EXPECT_GT(boost::math::cdf(boost::math::complement(chi, stat)), 0.001) << n1 << " " << n << " " << m;
  }
}

TEST(Hypergeometric, FarTailIsRare) {
  Stream rng(77, 0);
  std::size_t hits = 0;
  const std::size_t trials = 10000000;
  for (std::size_t i = 0; i < trials; ++i) hits += hypergeometric_sample(1000, 1000000, 1000, rng) >= 10;
  EXPECT_LT(static_cast<double>(hits) / trials, 1e-5);
}

TEST(Hypergeometric, ConcentrationReport) {
  const auto r = concentration_report(1000, 10000, 1000, 200000, 0.1, 5);
  EXPECT_NEAR(r.mean, 100.0, 1e-12);
  EXPECT_NEAR(r.threshold, std::pow(100.0, 0.6), 1e-9);
  EXPECT_LE(r.ci_lo, r.exact_tail);
  EXPECT_GE(r.ci_hi, r.exact_tail);
  const auto again = concentration_report(1000, 10000, 1000, 200000, 0.1, 5, 3);
  EXPECT_EQ(r.hits, again.hits);
}

TEST(CutoffScan, SmallDecksCarryExactTv) {
  StatisticSpec s;
  McOptions opt;
  opt.samples = 500;
  opt.pilot_samples = 200;
  const auto rows = cutoff_scan(gsr_process(), 2.164, {6, 40}, {0.5, 1.0}, s, opt);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_TRUE(rows[0].exact_tv.has_value());
  EXPECT_FALSE(rows[2].exact_tv.has_value());
  EXPECT_EQ(rows[1].K, static_cast<std::size_t>(std::llround(std::log(6.0))));
  EXPECT_NEAR(rows[3].K_over_logN, static_cast<double>(rows[3].K) / std::log(40.0), 1e-12);
}

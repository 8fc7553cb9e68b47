#include <gtest/gtest.h>

#include <cmath>

#include "cclab/cli.hpp"
#include "cclab/gapmaj.hpp"

using namespace cclab;

namespace {

// Appends the same per-row suffix on both sides (XOR pattern unchanged).
GapMajInstance widen(const GapMajInstance& g, size_t k, uint64_t seed) {
  Tape t = Tape::seeded(seed, ~uint64_t{0});
  std::vector<BitString> a, b;
  BitString zext = t.read(k - g.k);
  for (size_t i = 0; i < g.N; ++i) {
    BitString ea = t.read(k - g.k);
    BitString tail = g.xor_row(i) == *check_gapmaj_promise(g) ? zext : t.read(k - g.k);
    a.push_back(g.rows_a[i].concat(ea));
    b.push_back(g.rows_b[i].concat(ea ^ tail));
  }
  return make_gapmaj(a, b, g.eps);
}

}  // namespace

TEST(Constants, SampleSizeAndErConstant) {
  EXPECT_EQ(gapmaj::sample_size(10, 0.1), 231u);
  EXPECT_EQ(gapmaj::sample_size(10, 0.1), static_cast<size_t>(std::ceil(50 * std::log(100.0))));
  EXPECT_NEAR(gapmaj::er_constant(), 3.49, 5e-3);
  EXPECT_EQ(gapmaj::edge_cap(231), static_cast<size_t>(std::floor(2 * gapmaj::er_constant() * 231)));
}

TEST(Trivial, Costs) {
  const std::vector<mpq_class> none;
  EXPECT_EQ(gapmaj_trivial_protocol(8, 5, none, mpq_class(1, 3), TrivialVariant::XorPub)->max_cost, 0u);
  EXPECT_EQ(gapmaj_trivial_protocol(8, 5, none, mpq_class(1, 3), TrivialVariant::XorPriv)->max_cost, 3u);
  EXPECT_EQ(gapmaj_trivial_protocol(8, 5, none, mpq_class(1, 3), TrivialVariant::OpenPub)->max_cost, 10u);
  EXPECT_EQ(gapmaj_trivial_protocol(8, 5, none, mpq_class(1, 3), TrivialVariant::OpenPriv)->max_cost, 13u);
  EXPECT_EQ(gapmaj_trivial_protocol(4, 2, none, mpq_class(1, 4), TrivialVariant::DetUni)->max_cost, 6u);
  EXPECT_THROW(gapmaj_trivial_protocol(4, 2, none, mpq_class(1, 2), TrivialVariant::DetUni), DomainError);
}

TEST(Trivial, XorPubExactErrorAtMostEps) {
  // N = 4 rows, three XOR to z: exact error of sampling one row is 1/4.
  GapMajInstance g = make_gapmaj(
      {BitString::parse("00"), BitString::parse("01"), BitString::parse("10"), BitString::parse("11")},
      {BitString::parse("11"), BitString::parse("10"), BitString::parse("10"), BitString::parse("00")},
      mpq_class(1, 4));
  auto p = gapmaj_trivial_protocol(4, 2, g.mu, g.eps, TrivialVariant::XorPub);
  Truth f = [&](const BitString&, const BitString&) { return Output::of(*check_gapmaj_promise(g)); };
  auto e = exact_error(*p, f, {{flatten(g.rows_a), flatten(g.rows_b)}});
  EXPECT_EQ(e.exact_value, mpq_class(1, 4));
  EXPECT_EQ(execute(*p, flatten(g.rows_a), flatten(g.rows_b), seeded_tapes(*p, 0)).cost, 0u);
}

TEST(Trivial, DetUniExactOnEveryPromiseInstance) {
  // Correctness depends on the row XORs and not on Alice's rows; those are
  // drawn at random per pattern.
  for (size_t k = 1; k <= 3; ++k)
    for (size_t N = 1; N <= 6; ++N) {
      const mpq_class eps(1, 3);
      auto p = gapmaj_trivial_protocol(N, k, {}, eps, TrivialVariant::DetUni);
      const uint64_t V = uint64_t{1} << k;
      uint64_t patterns = 1;
      for (size_t i = 0; i < N; ++i) patterns *= V;
      Tape t = Tape::seeded(N * 10 + k, ~uint64_t{0});
      for (uint64_t pat = 0; pat < patterns; ++pat) {
        std::vector<BitString> a(N), b(N);
        uint64_t q = pat;
        for (size_t i = 0; i < N; ++i, q /= V) {
          a[i] = t.read(k);
          b[i] = a[i] ^ BitString::from_uint(q % V, k);
        }
        GapMajInstance g = make_gapmaj(a, b, eps);
        auto z = check_gapmaj_promise(g);
        if (!z) continue;
        RunRecord r = execute(*p, flatten(a), flatten(b), Tapes{});
        ASSERT_TRUE(resolve(Model::Bob, r, Output::of(*z))) << "N=" << N << " k=" << k << " pat=" << pat;
      }
    }
}

TEST(Trivial, DetUniWeightedMu) {
  for (uint64_t s = 0; s < 300; ++s) {
    Tape t = Tape::seeded(s, ~uint64_t{0});
    const size_t N = 6, k = 2;
    std::vector<mpq_class> mu(N);
    unsigned long tot = 0;
    std::vector<unsigned long> w(N);
    for (auto& v : w) tot += v = 1 + t.uniform(5);
    for (size_t i = 0; i < N; ++i) {
      mu[i] = mpq_class(w[i], tot);
      mu[i].canonicalize();
    }
    std::vector<BitString> a(N), b(N);
    for (size_t i = 0; i < N; ++i) {
      a[i] = t.read(k);
      b[i] = t.read(k);
    }
    const mpq_class eps = mpq_class(1) - gapmaj_majority_weight(make_gapmaj(a, b, 0, mu));
    if (eps >= mpq_class(1, 2)) continue;
    GapMajInstance g = make_gapmaj(a, b, eps, mu);
    auto z = check_gapmaj_promise(g);
    if (!z) continue;
    SolveResult r = solve_trivial(g, TrivialVariant::DetUni, s);
    EXPECT_TRUE(r.correct);
  }
}

TEST(Trivial, RandomizedVariantsWithinEps) {
  const mpq_class eps(3, 10);
  uint64_t fails[4] = {0, 0, 0, 0};
  const TrivialVariant vs[] = {TrivialVariant::XorPub, TrivialVariant::XorPriv, TrivialVariant::OpenPub,
                               TrivialVariant::OpenPriv};
  const uint64_t trials = 2000;
  for (uint64_t i = 0; i < trials; ++i) {
    GapMajInstance g = random_gapmaj(32, 8, eps, i, i % 2);
    for (int v = 0; v < 4; ++v) fails[v] += !solve_trivial(g, vs[v], derive_seed(i, v)).correct;
  }
  for (int v = 0; v < 4; ++v)
    EXPECT_LE(static_cast<double>(fails[v]) / trials, 0.3 + hoeffding_radius(trials, 0.99)) << v;
}

TEST(Trivial, PromiseViolationThrows) {
  GapMajInstance g = make_gapmaj({BitString::parse("0"), BitString::parse("0")},
                                 {BitString::parse("0"), BitString::parse("1")}, mpq_class(1, 4));
  EXPECT_THROW(solve_trivial(g, TrivialVariant::DetUni, 0), PromiseError);
}

TEST(RandomGraph, RowPairIdentity) {
  for (size_t k = 1; k <= 4; ++k) {
    auto all = all_strings(k);
    for (auto& xi : all)
      for (auto& xj : all)
        for (auto& yi : all)
          for (auto& yj : all) ASSERT_EQ((xi ^ yi) == (xj ^ yj), (xi ^ xj) == (yi ^ yj));
  }
}

TEST(RandomGraph, AllRowsAgree) {
  for (uint64_t s = 0; s < 50; ++s) {
    GapMajInstance g = random_gapmaj(40, 16, 0, s, false);
    EXPECT_TRUE(solve_randomgraph(g, 0.05, s).correct);
  }
}

TEST(RandomGraph, MonteCarloSmall) {
  const uint64_t trials = 300;
  uint64_t fails = 0;
  for (uint64_t i = 0; i < trials; ++i) {
    GapMajInstance g = random_gapmaj(60, 16, mpq_class(3, 10), i, i % 2);
    SolveResult r = solve_randomgraph(g, 0.05, derive_seed(i, 1));
    fails += !r.correct;
    EXPECT_LE(r.record.cost, r.protocol->max_cost);
  }
  EXPECT_LE(static_cast<double>(fails) / trials, 0.05 + hoeffding_radius(trials, 0.99));
}

TEST(RandomGraph, RequiresUniformMu) {
  GapMajInstance g = make_gapmaj({BitString::parse("0"), BitString::parse("0")},
                                 {BitString::parse("0"), BitString::parse("0")}, 0,
                                 {mpq_class(1, 3), mpq_class(2, 3)});
  EXPECT_THROW(solve_randomgraph(g, 0.05, 0), DomainError);
}

TEST(RandomGraph, NoKOverhead) {
  // Same XOR pattern widened to several k; with one seed the graph, the
  // candidates and hence the cost are identical.
  EXPECT_EQ(gapmaj_randomgraph_protocol(50, 16, 0.05)->max_cost,
            gapmaj_randomgraph_protocol(50, 256, 0.05)->max_cost);
  for (uint64_t s = 0; s < 10; ++s) {
    GapMajInstance g = random_gapmaj(50, 8, mpq_class(3, 10), s, s % 2);
    std::vector<uint64_t> costs;
    std::vector<std::map<std::string, uint64_t>> parts;
    for (size_t k : {16, 64, 256}) {
      SolveResult r = solve_randomgraph(widen(g, k, s), 0.05, 99 + s);
      EXPECT_TRUE(r.correct);
      costs.push_back(r.record.cost);
      parts.push_back(r.record.parts);
    }
    EXPECT_EQ(costs[0], costs[1]);
    EXPECT_EQ(costs[0], costs[2]);
    EXPECT_EQ(parts[0], parts[2]);
  }
}

TEST(RandomGraph, AbortRate) {
  const size_t T = gapmaj::sample_size(10, 0.05);
  const double c = gapmaj::er_constant();
  const uint64_t trials = 2000;
  uint64_t aborts = 0;
  for (uint64_t s = 0; s < trials; ++s)
    aborts += sample_er(T, c / T, s).edges.size() > gapmaj::edge_cap(T);
  EXPECT_LE(static_cast<double>(aborts) / trials, 0.05 / 5 + hoeffding_radius(trials, 0.99));
}

TEST(Er, ExtremesAndDeterminism) {
  EXPECT_EQ(largest_component(sample_er(30, 1.0, 1)), 30u);
  EXPECT_EQ(sample_er(30, 1.0, 1).edges.size(), 435u);
  EXPECT_EQ(largest_component(sample_er(30, 0.0, 1)), 1u);
  auto g1 = sample_er(40, 0.1, 5), g2 = sample_er(40, 0.1, 5);
  EXPECT_EQ(g1.edges, g2.edges);
}

TEST(Er, ComponentBoundFormula) {
  EXPECT_NEAR(std::log(er_component_bound(20, 3.49, 1.0 / 12)), 11.07, 0.01);
  EXPECT_GT(er_component_bound(20, 3.49, 1.0 / 12), 1.0);
  EXPECT_DOUBLE_EQ(er_component_bound(10, 3.49, 0), 1024.0);
  // αc > 4 ln 2: below 1 and decreasing.
  const double a = 0.5, c = 8;
  ASSERT_GT(a * c, 4 * std::log(2.0));
  EXPECT_LT(er_component_bound(50, c, a), 1.0);
  EXPECT_LT(er_component_bound(100, c, a), er_component_bound(50, c, a));
}

TEST(Er, ComponentBoundMonteCarloSmall) {
  const size_t n = 100;
  const double c = 3.49, alpha = 1.0 / 12;
  const uint64_t trials = 2000;
  uint64_t small = 0;
  for (uint64_t s = 0; s < trials; ++s)
    small += static_cast<double>(largest_component(sample_er(n, c / n, s))) < (1 - alpha) * n;
  EXPECT_LE(static_cast<double>(small) / trials,
            std::min(1.0, er_component_bound(n, c, alpha)) + hoeffding_radius(trials, 0.99));
}

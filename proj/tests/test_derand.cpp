#include <gtest/gtest.h>

#include <random>

#include "cclab/amplify.hpp"
#include "cclab/blocks.hpp"
#include "cclab/derand.hpp"
#include "cclab/gapmaj.hpp"

using namespace cclab;

namespace {

BitString B(const char* s) { return BitString::parse(s); }

// Alice sends `coins` private bits; Bob outputs them.
ProtocolPtr coin_protocol(size_t coins) {
  Protocol p;
  p.id = "coins";
  p.model = Model::Bob;
  p.output_len = coins;
  p.input_len_a = p.input_len_b = 1;
  p.budgets.a = coins;
  p.max_cost = coins;
  p.body = [coins](Session& s) {
    BitString r = s.alice().priv.read(coins);
    s.send(Party::A, r);
    return Outputs{Output::none(), Output::of(r), Output::none()};
  };
  return make_protocol(std::move(p));
}

// 1-bit XOR with 8 leaves: Alice sends three private bits and flips her
// output when the first two are both set (error exactly 1/4).
ProtocolPtr xor_eight_leaves() {
  Protocol p;
  p.id = "xor8";
  p.model = Model::Xor;
  p.output_len = 1;
  p.input_len_a = p.input_len_b = 1;
  p.budgets.a = 3;
  p.max_cost = 3;
  p.body = [](Session& s) {
    BitString r = s.alice().priv.read(3);
    s.send(Party::A, r);
    BitString a = s.alice().input;
    if (r[0] && r[1]) a.flip(0);
    return Outputs{Output::of(a), Output::of(s.bob().input), Output::none()};
  };
  return make_protocol(std::move(p));
}

std::vector<mpq_class> rand_dist(std::mt19937_64& g, size_t n, unsigned den) {
  std::vector<unsigned long> c(n, 0);
  for (unsigned i = 0; i < den; ++i) c[g() % n]++;
  std::vector<mpq_class> d;
  for (auto v : c) {
    mpq_class q(v, den);
    q.canonicalize();
    d.push_back(q);
  }
  return d;
}

RandomProtocolSpec rspec(Model m, size_t k = 2, size_t R = 3, size_t bits = 3) {
  RandomProtocolSpec s;
  s.model = m;
  s.k = k;
  s.R = R;
  s.n_a = s.n_b = 1;
  s.a_bits = s.b_bits = bits;
  return s;
}

}  // namespace

TEST(Factor, ProductEqualsLeafDistribution) {
  for (Model m : {Model::Xor, Model::Local, Model::OneOutOfTwo, Model::Split}) {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      RandomProtocol rp = random_private_protocol(rspec(m), seed);
      LeafTable t = build_leaf_table(rp.protocol);
      for (size_t xi = 0; xi < t.xs.size(); ++xi)
        for (size_t yi = 0; yi < t.ys.size(); ++yi) {
          auto d = leaf_distribution(*rp.protocol, t.xs[xi], t.ys[yi]);
          mpq_class sum = 0;
          for (size_t w = 0; w < t.leaves.size(); ++w) {
            mpq_class prod = t.alpha_q(xi, w) * t.beta_q(yi, w);
            auto it = d.p.find(t.leaves[w]);
            ASSERT_EQ(prod, it == d.p.end() ? mpq_class(0) : it->second);
            sum += prod;
          }
          ASSERT_EQ(sum, 1);
        }
    }
  }
}

TEST(Factor, DeterministicAndFairCoin) {
  ProblemSpec spec = problems::eq(2);
  auto det = deterministic_protocol(spec, Model::Local);
  for (auto& x : all_strings(2)) {
    auto fa = factor_leaf_probabilities(det, x, Party::A);
    for (auto& [w, q] : fa) EXPECT_TRUE(q == 0 || q == 1);
    for (auto& y : all_strings(2)) {
      auto fb = factor_leaf_probabilities(det, y, Party::B);
      int ones = 0;
      for (auto& [w, q] : fa) ones += q * fb.at(w) == 1;
      EXPECT_EQ(ones, 1);
    }
  }
  auto coin = coin_protocol(1);
  auto fa = factor_leaf_probabilities(coin, B("0"), Party::A);
  auto fb = factor_leaf_probabilities(coin, B("1"), Party::B);
  ASSERT_EQ(fa.size(), 2u);
  for (auto& [w, q] : fa) EXPECT_EQ(q, mpq_class(1, 2));
  for (auto& [w, q] : fb) EXPECT_EQ(q, 1);
}

TEST(Factor, PublicCoinsRejected) {
  auto p = eq_protocol(2, 0.25);
  ASSERT_GT(p->budgets.pub, 0u);
  EXPECT_THROW(build_leaf_table(p), WrongModel);
  EXPECT_THROW(derand(p, 0, p->model), WrongModel);
}

TEST(Tde, CostBoundExample) { EXPECT_EQ(tde_cost_bound(8, mpq_class(1, 8), TdeMode::Unilateral), 48u); }

TEST(Tde, DeterministicSendsExtremeGridValues) {
  // d_w < ⌈1/γ⌉, so a probability-1 leaf is sent as 1 − γ and the remainder
  // is spread by renormalization.
  ProblemSpec spec = problems::eq(2);
  LeafTable t = build_leaf_table(deterministic_protocol(spec, Model::Local));
  const size_t L = t.leaves.size();
  const mpq_class delta(1, 8);
  for (size_t xi = 0; xi < t.xs.size(); ++xi)
    for (size_t yi = 0; yi < t.ys.size(); ++yi) {
      TdeRun r = tde(t, xi, yi, delta, TdeMode::Unilateral);
      size_t hit = L;
      for (size_t w = 0; w < L; ++w)
        if (t.alpha_q(xi, w) * t.beta_q(yi, w) == 1) hit = w;
      ASSERT_LT(hit, L);
      const mpq_class spread = r.renorm / static_cast<unsigned long>(L);
      for (size_t w = 0; w < L; ++w) {
        const mpq_class sent = r.estimate[w] - spread;
        if (w == hit)
          EXPECT_EQ(sent, 1 - r.gamma);
        else
          EXPECT_EQ(sent, 0) << w;
      }
      EXPECT_EQ(r.renorm, r.gamma);
      std::vector<mpq_class> truth(L, 0);
      truth[hit] = 1;
      EXPECT_LE(total_variation(r.estimate, truth), delta);
    }
}

TEST(Tde, DistanceWithinDeltaOnRandomProtocols) {
  const mpq_class deltas[] = {mpq_class(1, 8), mpq_class(1, 5), mpq_class(3, 10)};
  for (uint64_t seed = 0; seed < 100; ++seed) {
    RandomProtocol rp = random_private_protocol(rspec(seed % 2 ? Model::Xor : Model::Local, 2, 3), 1000 + seed);
    LeafTable t = build_leaf_table(rp.protocol);
    const mpq_class& delta = deltas[seed % 3];
    for (size_t xi = 0; xi < t.xs.size(); ++xi)
      for (size_t yi = 0; yi < t.ys.size(); ++yi) {
        std::vector<mpq_class> truth;
        for (size_t w = 0; w < t.leaves.size(); ++w) truth.push_back(t.alpha_q(xi, w) * t.beta_q(yi, w));
        for (TdeMode mode : {TdeMode::Unilateral, TdeMode::Open}) {
          TdeRun r = tde(t, xi, yi, delta, mode);
          mpq_class sum = 0;
          for (auto& v : r.estimate) {
            ASSERT_GE(v, 0);
            sum += v;
          }
          ASSERT_EQ(sum, 1);
          ASSERT_LE(total_variation(r.estimate, truth), delta);
          const unsigned long f = mode == TdeMode::Open ? 2 : 1;
          ASSERT_GE(r.renorm, 0);
          ASSERT_LE(r.renorm, r.gamma * (f * t.leaves.size()));
          ASSERT_LE(r.record.cost, tde_cost_bound(t.leaves.size(), delta, mode));
        }
      }
  }
}

TEST(Tde, OpenModeSharedEstimate) {
  // Both players derive the estimate from the transcript alone: rerunning
  // with the roles of the factors swapped gives the same values.
  RandomProtocol rp = random_private_protocol(rspec(Model::Local), 77);
  LeafTable t = build_leaf_table(rp.protocol);
  const mpq_class gamma(1, 64);
  for (size_t xi = 0; xi < t.xs.size(); ++xi)
    for (size_t yi = 0; yi < t.ys.size(); ++yi) {
      Session s1(t.xs[xi], t.ys[yi], Tape::none(), Tape::none(), Tape::none());
      Session s2(t.xs[xi], t.ys[yi], Tape::none(), Tape::none(), Tape::none());
      auto e1 = tde_run(s1, t, xi, yi, gamma, TdeMode::Open);
      auto e2 = tde_run(s2, t, xi, yi, gamma, TdeMode::Open);
      EXPECT_EQ(e1, e2);
      EXPECT_EQ(s1.finish({}).transcript, s2.finish({}).transcript);
    }
}

TEST(Discretize, Examples) {
  GridDist g = discretize({mpq_class(3, 5), mpq_class(2, 5)}, mpq_class(1, 4));
  EXPECT_EQ(g.D, 4u);
  EXPECT_EQ(g.counts, (std::vector<uint64_t>{2, 2}));
  GridDist on = discretize({mpq_class(1, 4), mpq_class(3, 4)}, mpq_class(1, 4));
  EXPECT_EQ(on.counts, (std::vector<uint64_t>{1, 3}));
  GridDist pt = discretize({0, 1, 0}, mpq_class(1, 7));
  EXPECT_EQ(pt.counts, (std::vector<uint64_t>{0, 7, 0}));
  // Tie on the gaps: index order.
  GridDist tie = discretize({mpq_class(1, 2), mpq_class(1, 2)}, mpq_class(1, 3));
  EXPECT_EQ(tie.counts, (std::vector<uint64_t>{2, 1}));
  EXPECT_THROW(discretize({mpq_class(1, 2)}, mpq_class(1, 4)), DomainError);
}

TEST(Discretize, PointwiseWithinGridStep) {
  std::mt19937_64 g(5);
  for (int it = 0; it < 2000; ++it) {
    const size_t n = 1 + g() % 6;
    auto d = rand_dist(g, n, 1 + g() % 40);
    mpq_class delta(1, 2 + g() % 12);
    GridDist r = discretize(d, delta);
    uint64_t sum = 0;
    for (size_t i = 0; i < n; ++i) {
      sum += r.counts[i];
      ASSERT_LE(abs(r.value(i) - d[i]), mpq_class(1, static_cast<unsigned long>(r.D)));
    }
    ASSERT_EQ(sum, r.D);
  }
}

TEST(LinfCompose, IdentityAndRandom) {
  std::vector<mpq_class> U{mpq_class(1, 2), mpq_class(1, 2)};
  std::vector<std::vector<mpq_class>> V{{1, 0}, {mpq_class(1, 4), mpq_class(3, 4)}};
  EXPECT_TRUE(linf_compose_check(U, U, V, V, 0, 0));
  std::mt19937_64 g(9);
  for (int it = 0; it < 10000; ++it) {
    const size_t nu = 1 + g() % 4, nv = 1 + g() % 4;
    const unsigned den = 1 + g() % 12;
    auto u = rand_dist(g, nu, den), u2 = rand_dist(g, nu, den);
    std::vector<std::vector<mpq_class>> v, v2;
    mpq_class dv = 0;
    for (size_t i = 0; i < nu; ++i) {
      v.push_back(rand_dist(g, nv, den));
      v2.push_back(rand_dist(g, nv, den));
      for (size_t j = 0; j < nv; ++j) dv = std::max(dv, mpq_class(abs(v[i][j] - v2[i][j])));
    }
    ASSERT_TRUE(linf_compose_check(u, u2, v, v2, total_variation(u, u2), dv));
  }
}

TEST(LinfCompose, DetectsViolation) {
  std::vector<mpq_class> U{1}, U2{1};
  std::vector<std::vector<mpq_class>> V{{1, 0}}, V2{{0, 1}};
  EXPECT_FALSE(linf_compose_check(U, U2, V, V2, 0, mpq_class(1, 2)));
  EXPECT_TRUE(linf_compose_check(U, U2, V, V2, 0, 1));
}

TEST(Derand, XorRowCountAndPromise) {
  auto p = xor_eight_leaves();
  LeafTable t = build_leaf_table(p);
  ASSERT_EQ(t.leaves.size(), 8u);
  ProblemSpec spec = problems::xor_n(1);
  const mpq_class eps(1, 4);
  EXPECT_EQ(exact_error(*p, spec.truth(), spec.domain()).exact_value, eps);
  EXPECT_EQ(derand_gap(eps), mpq_class(7, 16));
  for (size_t xi = 0; xi < 2; ++xi)
    for (size_t yi = 0; yi < 2; ++yi) {
      DerandRows rows = derand_rows(t, xi, yi, eps);
      EXPECT_EQ(rows.D, 16u);
      EXPECT_EQ(rows.rows(), 2048u);
      GapMajInstance inst = rows.materialize(derand_gap(eps));
      auto z = check_gapmaj_promise(inst);
      ASSERT_TRUE(z.has_value());
      EXPECT_EQ(*z, spec.evaluate(t.xs[xi], t.ys[yi]).value);
      // Margin chain: (1 − ε) − 3δ = 1/2 + (1/2 − ε)/4.
      EXPECT_GE(gapmaj_majority_weight(inst), mpq_class(9, 16));
    }
  DerandResult r = derand(p, eps, Model::Xor);
  EXPECT_EQ(exact_error(*r.protocol, spec.truth(), spec.domain()).exact_value, 0);
  EXPECT_LE(static_cast<double>(r.protocol->max_cost), r.ceiling);
}

TEST(Derand, RejectsLargeErrorAndModelMismatch) {
  auto p = xor_eight_leaves();
  EXPECT_THROW(derand(p, mpq_class(1, 2), Model::Xor), NotDerandomizable);
  EXPECT_THROW(derand(p, mpq_class(1, 4), Model::Local), WrongModel);
}

TEST(Derand, UniformOutputNotDerandomizable) {
  // Bob's output is uniform over 2 values: error 1/2 against either, so
  // only a biased variant is derandomizable.
  auto p = coin_protocol(1);
  EXPECT_THROW(derand(p, mpq_class(1, 2), Model::Bob), NotDerandomizable);
}

class DerandRandom : public ::testing::TestWithParam<Model> {};

TEST_P(DerandRandom, ExactAndWithinCeiling) {
  const Model m = GetParam();
  int small = 0, general = 0;
  for (int i = 0; i < 36; ++i) {
    // R ≤ 4, k ≤ 3, at most 8 private bits in total.
    RandomProtocol rp = random_private_protocol(rspec(m, 1 + i % 3, 2 + (i / 3) % 3, 3 + i % 2), 4000 + i);
    ASSERT_LT(rp.eps, mpq_class(1, 2));
    (rp.eps < mpq_class(1, 3) ? small : general)++;
    DerandResult r = derand(rp.protocol, rp.eps, m);
    EXPECT_EQ(r.protocol->budgets.total(), 0u);
    EXPECT_EQ(exact_error(*r.protocol, rp.truth_fn(), rp.inputs).exact_value, 0)
        << model_name(m) << " seed " << rp.seed << " path " << r.path;
    uint64_t measured = 0;
    for (auto& [x, y] : rp.inputs)
      measured = std::max(measured, execute(*r.protocol, x, y, enumerated_tapes(r.protocol->budgets, 0)).cost);
    EXPECT_LE(measured, r.protocol->max_cost);
    EXPECT_LE(static_cast<double>(r.protocol->max_cost), r.ceiling + 1e-9) << r.path;
  }
  RecordProperty("small_eps", small);
  RecordProperty("general_eps", general);
}

INSTANTIATE_TEST_SUITE_P(Models, DerandRandom,
                         ::testing::Values(Model::Open, Model::Local, Model::Alice, Model::Bob, Model::OneOutOfTwo,
                                           Model::Split, Model::Xor),
                         [](const auto& info) { return std::string(model_name(info.param)); });

TEST(Derand, XorPromiseOnRandomProtocols) {
  for (int i = 0; i < 8; ++i) {
    RandomProtocol rp = random_private_protocol(rspec(Model::Xor, 2, 2), 6000 + i);
    LeafTable t = build_leaf_table(rp.protocol);
    for (size_t xi = 0; xi < t.xs.size(); ++xi)
      for (size_t yi = 0; yi < t.ys.size(); ++yi) {
        GapMajInstance inst = derand_rows(t, xi, yi, rp.eps).materialize(derand_gap(rp.eps));
        auto z = check_gapmaj_promise(inst);
        ASSERT_TRUE(z.has_value());
        const size_t idx = xi * t.ys.size() + yi;
        EXPECT_EQ(*z, rp.truth[idx].value);
      }
  }
}

TEST(Derand, OotGeneralPathOnHighError) {
  // Search seeds for a one-out-of-two protocol with ε ≥ 1/3.
  int hits = 0;
  for (uint64_t seed = 0; seed < 200 && hits < 5; ++seed) {
    RandomProtocol rp = random_private_protocol(rspec(Model::OneOutOfTwo, 2, 3), 9000 + seed);
    if (rp.eps < mpq_class(1, 3)) continue;
    ++hits;
    DerandResult r = derand(rp.protocol, rp.eps, Model::OneOutOfTwo);
    EXPECT_EQ(r.path, "oot_general");
    EXPECT_EQ(exact_error(*r.protocol, rp.truth_fn(), rp.inputs).exact_value, 0);
    EXPECT_LE(static_cast<double>(r.protocol->max_cost), r.ceiling + 1e-9);
  }
  EXPECT_GT(hits, 0);
}

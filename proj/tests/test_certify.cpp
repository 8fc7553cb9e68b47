#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cclab/blocks.hpp"
#include "cclab/certify.hpp"

using namespace cclab;

namespace {

// Row reduction with a fresh pivot search per column; kept separate from the
// library's eliminations.
size_t oracle_rank(QMatrix a) {
  const size_t r = a.size(), c = r ? a[0].size() : 0;
  size_t rank = 0;
  for (size_t col = 0; col < c && rank < r; ++col) {
    size_t piv = r;
    for (size_t i = rank; i < r; ++i)
      if (a[i][col] != 0) {
        piv = i;
        break;
      }
    if (piv == r) continue;
    std::swap(a[piv], a[rank]);
    for (size_t i = rank + 1; i < r; ++i) {
      if (a[i][col] == 0) continue;
      mpq_class f = a[i][col] / a[rank][col];
      for (size_t j = col; j < c; ++j) a[i][j] -= f * a[rank][j];
    }
    ++rank;
  }
  return rank;
}

QMatrix random_matrix(std::mt19937_64& g, size_t r, size_t c) {
  QMatrix m(r, std::vector<mpq_class>(c));
  const int style = static_cast<int>(g() % 3);
  for (auto& row : m)
    for (auto& v : row) {
      long num = static_cast<long>(g() % 7) - 3;
      unsigned long den = 1 + g() % 4;
      if (style == 1 && g() % 2) num = 0;
      v = mpq_class(num, den);
      v.canonicalize();
    }
  if (style == 2 && r > 1)  // force dependencies
    for (size_t j = 0; j < c; ++j) m[r - 1][j] = m[0][j] * 2 - m[1 % r][j];
  return m;
}

std::vector<mpq_class> point_mass(const ProblemSpec& spec, size_t at) {
  std::vector<mpq_class> mu(spec.domain().size(), 0);
  mu[at] = 1;
  return mu;
}

}  // namespace

TEST(CommMatrix, SmallExamples) {
  CommMatrix x1 = build_comm_matrix(problems::xor_n(1));
  EXPECT_EQ(x1.m, (QMatrix{{0, 1}, {1, 0}}));
  CommMatrix ida = build_comm_matrix(problems::id_a(3));
  for (auto& row : ida.m)
    for (auto& v : row) EXPECT_EQ(v, row[0]);
  CommMatrix eo = build_comm_matrix(problems::eqout(3));
  for (size_t i = 0; i < eo.rows(); ++i)
    for (size_t j = 0; j < eo.cols(); ++j)
      EXPECT_EQ(eo.m[i][j], i == j ? mpq_class(static_cast<unsigned long>(eo.xs[i].to_uint())) : mpq_class(8));
  EXPECT_THROW(build_comm_matrix(problems::ghd(4, 1, 3)), DomainError);
}

TEST(Rank, KnownValues) {
  for (size_t k = 1; k <= 8; ++k) EXPECT_EQ(exact_rank(build_comm_matrix(problems::xor_n(k)).m), k + 1) << k;
  EXPECT_EQ(exact_rank(QMatrix(5, std::vector<mpq_class>(7, mpq_class(3, 2)))), 1u);
  EXPECT_EQ(exact_rank(QMatrix(3, std::vector<mpq_class>(3, 0))), 0u);
  const QMatrix ci = build_comm_matrix(problems::condid(3)).m;
  const size_t r = oracle_rank(ci);
  EXPECT_EQ(exact_rank(ci), r);
  EXPECT_EQ(r, 4u);
}

TEST(Rank, AgreesWithIndependentEliminations) {
  std::mt19937_64 g(21);
  for (int it = 0; it < 200; ++it) {
    QMatrix m = random_matrix(g, 1 + g() % 7, 1 + g() % 7);
    const size_t r = oracle_rank(m);
    ASSERT_EQ(exact_rank(m), r);
    ASSERT_EQ(exact_rank_serial(m), r);
    ASSERT_EQ(rank_gauss(m), r);
  }
}

TEST(Rank, TopEmbeddingDoesNotMatter) {
  for (size_t n = 1; n <= 5; ++n) {
    ProblemSpec s = problems::eqout(n);
    const mpq_class alt(static_cast<unsigned long>((1u << n) + 7));
    EXPECT_EQ(exact_rank(build_comm_matrix(s).m), exact_rank(build_comm_matrix(s, alt).m));
  }
}

TEST(Rank, LowerBoundSlack) {
  for (size_t n = 1; n <= 6; ++n) {
    CommMatrix m = build_comm_matrix(problems::xor_n(n));
    EXPECT_NEAR(rank_lower_bound(m, Model::Xor, n), 0.0, 1e-12);
    EXPECT_NEAR(rank_lower_bound(m, Model::OneOutOfTwo, n), std::log2(n + 1.0), 1e-12);
    EXPECT_NEAR(rank_lower_bound(m, Model::Split, n), std::log2(n + 1.0) - 1, 1e-12);
  }
  for (Model md : {Model::Open, Model::Local, Model::Alice, Model::Bob, Model::OneOutOfTwo, Model::Split, Model::Xor})
    EXPECT_LE(rank_lower_bound(1, md, 3), 0.0);
}

TEST(Rank, CatalogSoundness) {
  for (size_t n = 1; n <= 3; ++n)
    for (const RankRow& r : rank_catalog(n))
      if (r.exact) {
        EXPECT_LE(r.bound, static_cast<double>(r.cost) + 1e-9) << r.problem << " " << model_name(r.model);
      }
}

TEST(XorDecomp, GramEqualsMatrix) {
  XorDecomposition d1 = xor_decomposition(1);
  EXPECT_EQ(d1.gram(), (QMatrix{{0, 1}, {1, 0}}));
  for (size_t k = 1; k <= 8; ++k) {
    XorDecomposition d = xor_decomposition(k);
    EXPECT_EQ(d.columns(), k + 1);
    ASSERT_EQ(d.signs.size(), size_t{1} << k);
    EXPECT_EQ(d.gram(), xor_matrix(k)) << k;
    EXPECT_EQ(xor_matrix(k), build_comm_matrix(problems::xor_n(k)).m);
    // Real radicals give the complement (2^k − 1)J − M_XOR.
    QMatrix comp = xor_matrix(k);
    for (auto& row : comp)
      for (auto& v : row) v = mpq_class(static_cast<unsigned long>((1ul << k) - 1)) - v;
    EXPECT_EQ(d.gram_real(), comp);
    // Squared scales 2^{i-1} for bit i = 0..k-1 (columns run from the most
    // significant bit), and 2^{k-1} - 1/2 for the all-ones column.
    for (size_t c = 1; c <= k; ++c) {
      mpq_class w(1ul << (k - c), 2);
      w.canonicalize();
      EXPECT_EQ(abs(d.sq[c]), w);
    }
    EXPECT_EQ(abs(d.sq[0]), mpq_class((1ul << k) - 1, 2));
  }
}

TEST(XorDecomp, HadamardSigns) {
  XorDecomposition d = xor_decomposition(3);
  for (size_t j = 0; j < 8; ++j) {
    EXPECT_EQ(d.signs[j][0], 1);
    BitString b = BitString::from_uint(j, 3);
    for (size_t i = 0; i < 3; ++i) EXPECT_EQ(d.signs[j][i + 1], b[i] ? 1 : -1);
  }
  // Distinct bit columns are orthogonal.
  for (size_t a = 1; a <= 3; ++a)
    for (size_t b = a + 1; b <= 3; ++b) {
      int dot = 0;
      for (size_t j = 0; j < 8; ++j) dot += d.signs[j][a] * d.signs[j][b];
      EXPECT_EQ(dot, 0);
    }
}

TEST(SplitDecomp, Examples) {
  auto h = split_decomposition(BitString::parse("00"));
  EXPECT_EQ(h.S, (QMatrix{{0, 1, 2, 3}}));
  auto v = split_decomposition(BitString::parse("11"));
  EXPECT_EQ(v.S, (QMatrix{{0}, {1}, {2}, {3}}));
}

TEST(SplitDecomp, ExhaustiveUpToSix) {
  for (size_t k = 0; k <= 6; ++k)
    for (auto& s : all_strings(k)) {
      auto d = split_decomposition(s);
      ASSERT_TRUE(verify_split_decomposition(d));
      ASSERT_EQ(mat_mul(d.U, d.V), d.S);
      ASSERT_LE(oracle_rank(d.S), 2u);
      // Preserved shape: second column of U and top row of V are all ones.
      for (auto& row : d.U) ASSERT_EQ(row.at(1), 1);
      for (auto& v : d.V.at(0)) ASSERT_EQ(v, 1);
      ASSERT_EQ(d.S.size() * d.S[0].size(), size_t{1} << k);
    }
}

TEST(LeafRect, CondIdLeavesAreStriped) {
  for (size_t n = 1; n <= 4; ++n) {
    ProblemSpec spec = problems::condid(n);
    CommMatrix m = build_comm_matrix(spec);
    auto p = separation_protocol("CondId", n, 0.25);
    for (const LeafRect& r : leaf_rectangles(*p, m)) {
      EXPECT_TRUE(r.is_rectangle);
      EXPECT_TRUE(leaf_rectangle_check(r.values, Model::OneOutOfTwo, n));
    }
  }
}

TEST(LeafRect, XorSingleLeafHasFullRank) {
  for (size_t n = 1; n <= 5; ++n) {
    CommMatrix m = build_comm_matrix(problems::xor_n(n));
    auto rects = leaf_rectangles(*separation_protocol("XOR", n, 0.25), m);
    ASSERT_EQ(rects.size(), 1u);
    EXPECT_EQ(oracle_rank(rects[0].values), n + 1);
    EXPECT_TRUE(leaf_rectangle_check(rects[0].values, Model::Xor, n));
    EXPECT_FALSE(leaf_rectangle_check(rects[0].values, Model::Split, n) && n >= 2);
  }
}

TEST(LeafRect, CheckRules) {
  const QMatrix mono{{2, 2}, {2, 2}}, stripe_r{{1, 1}, {3, 3}}, stripe_c{{1, 3}, {1, 3}}, mixed{{0, 1}, {1, 0}};
  EXPECT_TRUE(leaf_rectangle_check(mono, Model::Open, 1));
  EXPECT_FALSE(leaf_rectangle_check(stripe_r, Model::Open, 1));
  EXPECT_TRUE(leaf_rectangle_check(stripe_r, Model::Alice, 1));
  EXPECT_TRUE(leaf_rectangle_check(stripe_c, Model::Bob, 1));
  EXPECT_FALSE(leaf_rectangle_check(mixed, Model::OneOutOfTwo, 1));
  EXPECT_TRUE(leaf_rectangle_check(mixed, Model::Split, 1));
  EXPECT_TRUE(leaf_rectangle_check(mixed, Model::Xor, 1));
}

TEST(LeafRect, ErringEqProtocolViolationsAreRecorded) {
  // Fixed tapes can make the hash collide; collect, do not assert.
  CommMatrix m = build_comm_matrix(problems::eq(3));
  auto p = eq_protocol(3, 0.25);
  size_t bad = 0, total = 0;
  for (uint64_t seed = 0; seed < 8; ++seed)
    for (const LeafRect& r : leaf_rectangles(*p, m, seed)) {
      ++total;
      bad += !leaf_rectangle_check(r.values, Model::Local, 1);
    }
  RecordProperty("violations", static_cast<int>(bad));
  EXPECT_GT(total, 0u);
}

TEST(Xi, Examples) {
  ProblemSpec e2 = problems::eqout(2);
  EXPECT_EQ(xi(e2, diagonal_uniform(e2), mpq_class(1, 4)), 3u);
  EXPECT_EQ(xi(e2, point_mass(e2, 5), mpq_class(1, 4)), 1u);
  for (size_t n = 1; n <= 6; ++n) {
    ProblemSpec s = problems::eqout(n);
    const size_t expect = static_cast<size_t>(std::ceil(0.75 * std::ldexp(1.0, static_cast<int>(n))));
    EXPECT_EQ(xi(s, diagonal_uniform(s), mpq_class(1, 4)), expect) << n;
  }
}

TEST(Xi, BoundBelowOpenCatalogCost) {
  for (size_t n = 2; n <= 10; ++n) {
    ProblemSpec s = problems::eqout(n);
    const size_t x = xi(s, diagonal_uniform(s), mpq_class(1, 4));
    auto p = deterministic_protocol(s, Model::Open);
    uint64_t cost = 0;
    for (uint64_t v = 0; v < (uint64_t{1} << n); v += 1 + (v >> 3)) {
      BitString a = BitString::from_uint(v, n);
      cost = std::max(cost, execute(*p, a, a, enumerated_tapes(p->budgets, 0)).cost);
      BitString b = BitString::from_uint(v ^ 1, n);
      cost = std::max(cost, execute(*p, a, b, enumerated_tapes(p->budgets, 0)).cost);
    }
    EXPECT_LE(std::log2(static_cast<double>(x - 1)), static_cast<double>(cost)) << n;
  }
}

TEST(Wprt, PointMass) {
  ProblemSpec s = problems::eqout(2);
  WprtSolution w = wprt_feasible(s, point_mass(s, 3), mpq_class(1, 4));
  EXPECT_EQ(w.alpha, 1);
  for (auto& b : w.beta) EXPECT_EQ(b, 0);
  EXPECT_EQ(w.value, mpq_class(3, 4));
  EXPECT_EQ(w.xi, 1u);
}

TEST(Wprt, EqoutDiagonalExhaustive) {
  ProblemSpec s = problems::eqout(2);
  WprtSolution w = wprt_feasible(s, diagonal_uniform(s), mpq_class(1, 4));
  EXPECT_TRUE(w.closed_form_ok);
  EXPECT_TRUE(w.exhaustive_checked);
  EXPECT_TRUE(w.exhaustive_ok);
  EXPECT_LE(w.max_lhs, 1);
  EXPECT_GE(w.value, 2);
  EXPECT_GE(w.value, mpq_class(static_cast<unsigned long>(w.xi - 1)));
}

TEST(Wprt, ValueAtLeastXiMinusOne) {
  std::mt19937_64 g(3);
  for (const char* name : {"EQout", "IdA", "CondId", "EQ", "XOR"}) {
    for (size_t n = 1; n <= 3; ++n) {
      ProblemSpec s = problems::by_name(name, n);
      const size_t D = s.domain().size();
      for (int it = 0; it < 10; ++it) {
        std::vector<mpq_class> mu(D, 0);
        const unsigned long den = 16;
        for (unsigned long i = 0; i < den; ++i) mu[g() % D] += mpq_class(1, den);
        for (auto& v : mu) v.canonicalize();
        const mpq_class eps(static_cast<unsigned long>(g() % 4), 8);
        WprtSolution w = wprt_feasible(s, mu, eps);
        ASSERT_TRUE(w.closed_form_ok);
        if (w.exhaustive_checked) {
          ASSERT_TRUE(w.exhaustive_ok);
        }
        for (size_t i = 0; i < D; ++i) ASSERT_LE(w.beta[i], w.alpha * mu[i]);
        ASSERT_GE(w.value, mpq_class(static_cast<long>(w.xi) - 1)) << name << n;
      }
    }
  }
}

TEST(Certificates, Kinds) {
  Certificate r = rank_certificate(problems::xor_n(3), Model::Xor);
  EXPECT_EQ(r.kind, Certificate::Kind::Rank);
  EXPECT_EQ(r.value, 4);
  EXPECT_NEAR(r.bits, 0.0, 1e-12);
  ProblemSpec e = problems::eqout(2);
  Certificate c = xi_certificate(e, diagonal_uniform(e), mpq_class(1, 4));
  EXPECT_EQ(c.kind, Certificate::Kind::Xi);
  EXPECT_EQ(c.value, 2);
  EXPECT_NEAR(c.bits, 1.0, 1e-12);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cclab/blocks.hpp"
#include "cclab/engine.hpp"
#include "cclab/problems.hpp"

using namespace cclab;

namespace {

BitString B(const char* s) { return BitString::parse(s); }
SplitString S(const char* s) { return SplitString::parse(s); }

// Alice sends `coins` fair private bits; Bob outputs them.
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

RunRecord record(Output a, Output b, Output open = Output::none()) {
  RunRecord r;
  r.out_a = std::move(a);
  r.out_b = std::move(b);
  r.open = std::move(open);
  return r;
}

}  // namespace

TEST(BitString, ParseAndOrder) {
  BitString x = B("0110");
  EXPECT_EQ(x.size(), 4u);
  EXPECT_EQ(x.to_uint(), 6u);
  EXPECT_EQ(BitString::from_uint(6, 4), x);
  EXPECT_EQ(x.str(), "0110");
  EXPECT_LT(B("0111"), B("1000"));
  EXPECT_LT(B("11"), B("000"));
  EXPECT_THROW(BitString::parse("01x"), DomainError);
  EXPECT_THROW(BitString::from_uint(8, 3), DomainError);
}

TEST(BitString, XorNeedsEqualLengths) {
  EXPECT_EQ(B("110") ^ B("101"), B("011"));
  EXPECT_THROW(B("11") ^ B("101"), DomainError);
}

TEST(BitString, LongStringsCrossWordBoundaries) {
  BitString x(130);
  x.set(0, true);
  x.set(64, true);
  x.set(129, true);
  EXPECT_EQ(x.popcount(), 3u);
  EXPECT_EQ(x.slice(63, 3).str(), "010");
  EXPECT_EQ(x.concat(B("1")).popcount(), 4u);
  EXPECT_THROW(x.slice(128, 3), DomainError);
}

TEST(Weave, DefinitionCases) {
  EXPECT_EQ(weave(S("01*"), S("**1")), S("011"));
  EXPECT_EQ(weave(S("0*"), S("0*")), S("**"));
  EXPECT_EQ(weave(S("***"), S("101")), S("101"));
  EXPECT_THROW(weave(S("0*"), S("0")), DomainError);
  EXPECT_THROW(SplitString::parse("01?"), DomainError);
}

TEST(Weave, IsCommutative) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    SplitString a(6), b(6);
    for (size_t j = 0; j < 6; ++j) {
      a.set(j, static_cast<Sym>(rng() % 3));
      b.set(j, static_cast<Sym>(rng() % 3));
    }
    EXPECT_EQ(weave(a, b), weave(b, a));
  }
}

TEST(Tape, BudgetAndDeterminism) {
  Tape t = Tape::seeded(11, 10);
  BitString r = t.read(10);
  EXPECT_EQ(t.remaining(), 0u);
  EXPECT_THROW(t.bit(), BudgetExceeded);
  Tape u = Tape::seeded(11, 10);
  EXPECT_EQ(u.read(10), r);
  Tape v = Tape::of(B("1011"));
  EXPECT_EQ(v.bits(3), 5u);
  Tape w = Tape::seeded(11, 200);
  Tape sub = w.take(100);
  EXPECT_EQ(w.cursor(), 100u);
  EXPECT_EQ(sub.budget(), 100u);
}

TEST(Models, HierarchyOrder) {
  EXPECT_TRUE(is_weaker(Model::Local, Model::Open));
  EXPECT_TRUE(is_weaker(Model::Alice, Model::Local));
  EXPECT_TRUE(is_weaker(Model::OneOutOfTwo, Model::Bob));
  EXPECT_TRUE(is_weaker(Model::Split, Model::OneOutOfTwo));
  EXPECT_TRUE(is_weaker(Model::Xor, Model::Split));
  EXPECT_FALSE(is_weaker(Model::Alice, Model::Bob));
  EXPECT_FALSE(is_weaker(Model::Bob, Model::Alice));
  for (Model m : {Model::Open, Model::Local, Model::Alice, Model::Bob, Model::OneOutOfTwo, Model::Split, Model::Xor})
    EXPECT_EQ(parse_model(model_name(m)), m);
  EXPECT_THROW(parse_model("nope"), DomainError);
}

TEST(Execute, XorCatalogNeedsNoCommunication) {
  auto p = separation_protocol("XOR", 3, 0.25);
  RunRecord r = execute(*p, B("101"), B("011"), Tapes{});
  EXPECT_EQ(r.cost, 0u);
  EXPECT_TRUE(r.transcript.empty());
  EXPECT_EQ(r.out_a, Output::of(B("101")));
  EXPECT_EQ(r.out_b, Output::of(B("011")));
}

TEST(Execute, CondIdCatalogCostsTwoBits) {
  auto p = separation_protocol("CondId", 3, 0.25);
  for (auto& [x, y] : full_domain(3, 3)) {
    RunRecord r = execute(*p, x, y, Tapes{});
    EXPECT_EQ(r.cost, 2u);
    EXPECT_EQ(r.cost, r.transcript.size());
  }
}

TEST(Execute, DeterministicAndValidatesInputs) {
  auto p = eq_protocol(6, 0.1);
  const BitString x = B("010101"), y = B("010111");
  for (uint64_t seed = 0; seed < 20; ++seed)
    EXPECT_EQ(execute(*p, x, y, seeded_tapes(*p, seed)), execute(*p, x, y, seeded_tapes(*p, seed)));
  EXPECT_THROW(execute(*p, B("01"), y, seeded_tapes(*p, 0)), DomainError);
  EXPECT_THROW(execute(*p, x, y, Tapes{}), DomainError);
}

TEST(Resolve, ModelPredicates) {
  const Output t = Output::of(B("011"));
  EXPECT_TRUE(resolve(Model::Xor, record(Output::of(B("110")), Output::of(B("101"))), t));
  EXPECT_FALSE(resolve(Model::Xor, record(Output::of(B("110")), Output::of(B("100"))), t));
  EXPECT_FALSE(resolve(Model::OneOutOfTwo, record(t, t), t));
  EXPECT_TRUE(resolve(Model::OneOutOfTwo, record(t, Output::silent()), t));
  EXPECT_TRUE(resolve(Model::OneOutOfTwo, record(Output::silent(), t), t));
  EXPECT_FALSE(resolve(Model::OneOutOfTwo, record(Output::silent(), Output::silent()), t));
  const Output t2 = Output::of(B("001"));
  EXPECT_TRUE(resolve(Model::Split, record(Output::of_split(S("0*1")), Output::of_split(S("*0*"))), t2));
  EXPECT_FALSE(resolve(Model::Split, record(Output::of_split(S("0**")), Output::of_split(S("*0*"))), t2));
  EXPECT_TRUE(resolve(Model::Local, record(t, t), t));
  EXPECT_FALSE(resolve(Model::Local, record(t, t2), t));
  EXPECT_TRUE(resolve(Model::Alice, record(t, t2), t));
  EXPECT_TRUE(resolve(Model::Bob, record(t2, t), t));
  EXPECT_TRUE(resolve(Model::Open, record(t2, t2, t), t));
  EXPECT_THROW(resolve(Model::Xor, record(Output::of_split(S("0*1")), t), t), DomainError);
}

TEST(Resolve, VerdictIgnoresForbiddenArguments) {
  // Open reads only the observer's output; unilateral models only one side.
  const Output t = Output::of(B("10"));
  const Output w = Output::of(B("01"));
  for (const Output& junk : {t, w, Output::none(), Output::silent()}) {
    EXPECT_TRUE(resolve(Model::Open, record(junk, junk, t), t));
    EXPECT_TRUE(resolve(Model::Alice, record(t, junk), t));
    EXPECT_TRUE(resolve(Model::Bob, record(junk, t), t));
  }
}

TEST(ExactError, CatalogProtocolsAreExact) {
  for (size_t n = 1; n <= 8; ++n) {
    for (const char* name : {"XOR", "CondId"}) {
      ProblemSpec spec = problems::by_name(name, n);
      auto e = exact_error(*separation_protocol(name, n, 0.25), spec.truth(), spec.domain());
      EXPECT_TRUE(e.exact);
      EXPECT_EQ(e.exact_value, 0) << name << " n=" << n;
      EXPECT_EQ(e.radius, 0);
    }
  }
}

TEST(ExactError, CorruptedWrapperQuarterOnTwoBits) {
  // One of the four values of a 2-bit private tape corrupts.
  ProblemSpec spec = problems::id_b(3);
  auto p = corrupted(separation_protocol("IdB", 3, 0.25), 2, 1);
  auto e = exact_error(*p, spec.truth(), spec.domain());
  EXPECT_EQ(e.exact_value, mpq_class(1, 4));
  EXPECT_DOUBLE_EQ(e.estimate, 0.25);
}

TEST(ExactError, SerialMatchesParallel) {
  ProblemSpec spec = problems::xor_n(3);
  auto p = corrupted(separation_protocol("XOR", 3, 0.25), 3, 3);
  auto a = exact_error(*p, spec.truth(), spec.domain());
  auto b = exact_error_serial(*p, spec.truth(), spec.domain());
  EXPECT_EQ(a.exact_value, b.exact_value);
  EXPECT_EQ(a.exact_value, mpq_class(3, 8));
  EXPECT_EQ(a.worst_input, b.worst_input);
}

TEST(ExactError, OverBoundIsInfeasible) {
  ProblemSpec spec = problems::eq(8);
  auto p = eq_protocol(8, 0.01);
  EXPECT_THROW(exact_error(*p, spec.truth(), {{B("00000000"), B("00000000")}}, 8), OracleInfeasible);
}

TEST(ExactError, DistributionalAverages) {
  ProblemSpec spec = problems::id_b(1);
  auto p = corrupted(separation_protocol("IdB", 1, 0.25), 2, 1);
  auto dom = spec.domain();
  std::vector<mpq_class> mu(dom.size(), mpq_class(1, dom.size()));
  auto e = exact_error_dist(*p, spec.truth(), dom, mu);
  EXPECT_TRUE(e.distributional);
  EXPECT_EQ(e.exact_value, mpq_class(1, 4));
}

TEST(EstimateError, HoeffdingRadius) {
  EXPECT_NEAR(hoeffding_radius(10000, 0.99), std::sqrt(std::log(200.0) / 20000.0), 1e-12);
  EXPECT_NEAR(hoeffding_radius(10000, 0.99), 0.0163, 1e-4);
  EXPECT_GE(hoeffding_radius(1, 0.99), 1.0);
}

TEST(EstimateError, ExactProtocolHasZeroEstimate) {
  ProblemSpec spec = problems::xor_n(4);
  auto e = estimate_error(*separation_protocol("XOR", 4, 0.25), spec.truth(), spec.domain(), 10000, 0.99, 3);
  EXPECT_EQ(e.estimate, 0);
  EXPECT_FALSE(e.exact);
  EXPECT_NEAR(e.radius, hoeffding_radius(10000, 0.99), 1e-15);
}

TEST(EstimateError, CorruptedWrapperWithinRadius) {
  // 0.3 is not dyadic; on a 10-bit tape the wrapper realizes 307/1024.
  ProblemSpec spec = problems::id_a(2);
  auto p = corrupted(separation_protocol("IdA", 2, 0.25), 10, 307);
  std::vector<InputPair> in = {{B("01"), B("10")}};
  auto e = estimate_error(*p, spec.truth(), in, 100000, 0.99, 5);
  EXPECT_NEAR(e.estimate, 307.0 / 1024.0, e.radius);
}

TEST(EstimateError, SerialMatchesParallelAndSeedsReproduce) {
  ProblemSpec spec = problems::xor_n(3);
  auto p = corrupted(separation_protocol("XOR", 3, 0.25), 3, 2);
  auto dom = spec.domain();
  auto a = estimate_error(*p, spec.truth(), dom, 500, 0.99, 9);
  auto b = estimate_error_serial(*p, spec.truth(), dom, 500, 0.99, 9);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.worst_input, b.worst_input);
  EXPECT_THROW(estimate_error(*p, spec.truth(), dom, 0, 0.99, 9), DomainError);
}

TEST(EstimateError, AgreesWithExactAcrossSeeds) {
  // |estimate − exact| ≤ radius in at least 99 of 100 repetitions (single input).
  ProblemSpec spec = problems::id_b(2);
  auto p = corrupted(separation_protocol("IdB", 2, 0.25), 3, 3);
  std::vector<InputPair> in = {{B("11"), B("01")}};
  const double exact = exact_error(*p, spec.truth(), in).estimate;
  int inside = 0;
  for (uint64_t s = 0; s < 100; ++s) {
    auto e = estimate_error(*p, spec.truth(), in, 2000, 0.99, s);
    inside += std::abs(e.estimate - exact) <= e.radius;
  }
  EXPECT_GE(inside, 99);
}

TEST(LeafDistribution, CoinsGiveUniformTranscripts) {
  auto one = leaf_distribution(*coin_protocol(1), B("0"), B("0"));
  ASSERT_EQ(one.p.size(), 2u);
  for (auto& [w, q] : one.p) EXPECT_EQ(q, mpq_class(1, 2));
  auto two = leaf_distribution(*coin_protocol(2), B("0"), B("0"));
  ASSERT_EQ(two.p.size(), 4u);
  for (auto& [w, q] : two.p) EXPECT_EQ(q, mpq_class(1, 4));
  EXPECT_EQ(two.total(), 1);
}

TEST(LeafDistribution, DeterministicHasOneLeafAndSumsToOne) {
  auto p = separation_protocol("CondId", 3, 0.25);
  auto d = leaf_distribution(*p, B("010"), B("110"));
  ASSERT_EQ(d.p.size(), 1u);
  EXPECT_EQ(d.p.begin()->second, 1);
  auto e = leaf_distribution(*eq_protocol(3, 0.25), B("010"), B("011"));
  EXPECT_EQ(e.total(), 1);
}

TEST(CostAccounting, MaxOverEnumeratedTapesWithinDeclared) {
  auto p = eq_protocol(3, 0.25);
  const uint64_t space = uint64_t{1} << p->budgets.total();
  for (auto& [x, y] : full_domain(3, 3))
    for (uint64_t t = 0; t < space; t += 7) {
      RunRecord r = execute(*p, x, y, enumerated_tapes(p->budgets, t));
      EXPECT_EQ(r.cost, r.transcript.size());
      EXPECT_LE(r.cost, p->max_cost);
      uint64_t parts = 0;
      for (auto& [tag, c] : r.parts) parts += c;
      EXPECT_EQ(parts, r.cost);
    }
}

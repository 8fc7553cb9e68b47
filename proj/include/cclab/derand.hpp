#pragma once

#include <gmpxx.h>

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cclab/engine.hpp"
#include "cclab/problems.hpp"

namespace cclab {

// Exhaustive view of a private-coin protocol over all inputs and tapes.
// For leaf w, α(w|x) = Pr_rA[(x, rA) is consistent with w]; by the rectangle
// property p(w|x,y) = α(w|x)·β(w|y).
struct LeafTable {
  ProtocolPtr protocol;
  std::vector<BitString> leaves;  // T_π, sorted
  std::vector<BitString> xs, ys;
  size_t a_bits = 0, b_bits = 0;
  // Consistent tape counts (denominators 2^a_bits, 2^b_bits).
  std::vector<std::vector<uint64_t>> alpha, beta;
  // Output counts over the consistent tapes, per (input, leaf).
  std::vector<std::vector<std::map<Output, uint64_t>>> out_a, out_b;
  std::vector<Output> open_out;  // per leaf
  // Every run had exactly one non-silent player.
  bool single_speaker = true;

  size_t leaf_index(const BitString& w) const;
  mpq_class alpha_q(size_t xi, size_t w) const;
  mpq_class beta_q(size_t yi, size_t w) const;
  // o(z | w, input) as exact rationals; empty when the leaf is unreachable.
  std::map<Output, mpq_class> out_dist(Party side, size_t input, size_t w) const;
};

// Throws WrongModel for public-coin protocols, OracleInfeasible beyond `bound`
// enumerated bits (inputs plus private tapes).
LeafTable build_leaf_table(ProtocolPtr p, unsigned bound = kDefaultOracleBits);

std::map<BitString, mpq_class> factor_leaf_probabilities(ProtocolPtr p, const BitString& input, Party side);

enum class TdeMode { Unilateral, Open };

struct TdeRun {
  std::vector<mpq_class> estimate;  // aligned with LeafTable::leaves
  mpq_class gamma;
  mpq_class renorm;  // C
  RunRecord record;
};

// Runs TDE inside a session on the γ-grid (⌈log ⌈1/γ⌉⌉ bits per value).
// `sender` sends its factors; in the open mode the other player sends the
// products back. A single leaf needs no communication.
std::vector<mpq_class> tde_run(Session& s, const LeafTable& t, size_t xi, size_t yi, const mpq_class& gamma,
                               TdeMode mode, mpq_class* renorm = nullptr, Party sender = Party::A);

// γ = δ/|T| (unilateral) or δ/(2|T|) (open), as rationals.
TdeRun tde(const LeafTable& t, size_t xi, size_t yi, const mpq_class& delta, TdeMode mode);
uint64_t tde_cost_bound(size_t leaves, const mpq_class& delta, TdeMode mode);

mpq_class total_variation(const std::vector<mpq_class>& p, const std::vector<mpq_class>& q);

// Counts on the grid 1/D with D = ⌈δ^-1⌉; sums to D.
struct GridDist {
  uint64_t D = 0;
  std::vector<uint64_t> counts;
  mpq_class value(size_t i) const {
    mpq_class v(counts[i], D);
    v.canonicalize();
    return v;
  }
};
GridDist discretize(const std::vector<mpq_class>& dist, const mpq_class& delta);

// Checks d∞(V, V') ≤ δ_U + δ_V for the marginals of the two compositions.
bool linf_compose_check(const std::vector<mpq_class>& U, const std::vector<mpq_class>& U2,
                        const std::vector<std::vector<mpq_class>>& V, const std::vector<std::vector<mpq_class>>& V2,
                        const mpq_class& delta_u, const mpq_class& delta_v);

// The weighted GapMaj instance built during XOR/split derandomization: per
// leaf, D×D rows with Alice's value depending on the row index i and Bob's on
// the column index j.
struct DerandRows {
  size_t D = 0, k = 0;
  struct Leaf {
    mpq_class weight;  // p̃(w); each row carries weight / D²
    std::vector<BitString> a, b;
    std::vector<SplitString> sa, sb;  // split model
  };
  std::vector<Leaf> leaves;
  bool split = false;

  size_t rows() const { return D * D * leaves.size(); }
  // μ-weight of each row value (XOR, or weave with residual stars dropped).
  std::map<BitString, mpq_class> value_weights() const;
  GapMajInstance materialize(const mpq_class& eps) const;
};

struct DerandResult {
  ProtocolPtr protocol;
  std::string path;
  uint64_t R = 0;  // cost of the protocol actually derandomized
  double ceiling = 0;
  mpq_class sigma;
  std::shared_ptr<const LeafTable> table;
  bool normalized = false;  // one-out-of-two input was normalized first
};

// eps is the protocol's exact error; model must match the protocol.
DerandResult derand(ProtocolPtr p, const mpq_class& eps, Model model);

// Closed-form ceilings; `general` selects the second case where there is one.
double derand_ceiling(Model m, uint64_t R, double eps, size_t k, bool general);

// Rows of the XOR/split construction for one input pair (δ = (1/2−ε)/4).
DerandRows derand_rows(const LeafTable& t, size_t xi, size_t yi, const mpq_class& eps);
// Gap parameter 3/8 + ε/4 (majority weight at least 5/8 − ε/4).
mpq_class derand_gap(const mpq_class& eps);

struct RandomProtocolSpec {
  Model model = Model::Xor;
  size_t n_a = 2, n_b = 2;
  size_t R = 4;
  size_t k = 2;
  size_t a_bits = 4, b_bits = 4;
};

struct RandomProtocol {
  ProtocolPtr protocol;
  std::vector<InputPair> inputs;
  std::vector<Output> truth;  // most likely correct outcome per input
  mpq_class eps;              // exact worst-case error against `truth`
  uint64_t seed = 0;          // seed of the accepted draw

  Truth truth_fn() const;
};

// Random private-coin protocol tree with AND-of-tape-bits noise, redrawn until
// the exact error against its most likely outcome is below 1/2.
RandomProtocol random_private_protocol(const RandomProtocolSpec& spec, uint64_t seed);

}  // namespace cclab

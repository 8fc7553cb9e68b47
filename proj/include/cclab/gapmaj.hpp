#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cclab/blocks.hpp"
#include "cclab/problems.hpp"

namespace cclab {

struct ErGraph {
  size_t n = 0;
  std::vector<std::pair<uint32_t, uint32_t>> edges;
};

// Edge decisions use 32 public bits each, compared against ⌊p·2^32⌋.
ErGraph sample_er(size_t n, double p, Tape& t);
ErGraph sample_er(size_t n, double p, uint64_t seed);
size_t largest_component(const ErGraph& g);
double er_component_bound(size_t n, double c, double alpha);

namespace gapmaj {

// c = (720/143)·ln 2
double er_constant();
// ⌈50·ln(num/eps_target)⌉
size_t sample_size(double num, double eps_target);
// Largest edge count before the abort rule fires: ⌊2cT⌋.
size_t edge_cap(size_t T);

// Per-vertex-pair strings whose equality means "same computed value".
using PairEnc = std::function<BitString(size_t, size_t)>;

struct ClusterResult {
  bool aborted = false;
  size_t edges = 0;
  std::vector<size_t> reps;  // lowest vertex of each cluster above 11/30 of T
  bool fallback = false;     // no cluster qualified; reps holds the two largest
};

// Random-graph clustering on T vertices: one Equality instance per sampled
// edge (total error eq_eps), union-find on confirmed edges.
ClusterResult cluster_run(Session& s, size_t T, const PairEnc& enc_a, const PairEnc& enc_b, size_t enc_len,
                          double eq_eps, const std::string& tag = "eq");
uint64_t cluster_cost(size_t T, double eq_eps);
uint64_t cluster_tape(size_t T, size_t enc_len, double eq_eps);

struct RgResult {
  bool aborted = false;
  size_t row = 0;
  size_t candidates = 0;
  size_t edges = 0;
};

// Steps 1-3 on N rows given as pair encodings over row indices.
RgResult randomgraph_run(Session& s, size_t N, const PairEnc& enc_a, const PairEnc& enc_b, size_t enc_len,
                         double eps_target);
uint64_t randomgraph_cost(size_t N, double eps_target);
uint64_t randomgraph_tape(size_t N, size_t enc_len, double eps_target);

}  // namespace gapmaj

enum class TrivialVariant { XorPub, XorPriv, OpenPub, OpenPriv, DetUni };
const char* variant_name(TrivialVariant v);

// Protocols on flattened N×k matrices (row i at bits [i·k, (i+1)·k)). μ and
// eps are public parameters.
ProtocolPtr gapmaj_trivial_protocol(size_t N, size_t k, const std::vector<mpq_class>& mu, const mpq_class& eps,
                                    TrivialVariant v);
ProtocolPtr gapmaj_randomgraph_protocol(size_t N, size_t k, double eps_target);

BitString flatten(const std::vector<BitString>& rows);

struct SolveResult {
  ProtocolPtr protocol;
  RunRecord record;
  Output truth;
  bool correct = false;
};

SolveResult solve_trivial(const GapMajInstance& inst, TrivialVariant v, uint64_t seed);
SolveResult solve_randomgraph(const GapMajInstance& inst, double eps_target, uint64_t seed);

}  // namespace cclab

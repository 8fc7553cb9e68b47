#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cclab/engine.hpp"
#include "cclab/problems.hpp"

namespace cclab {

struct AmplifyPlan {
  std::string scheme;
  uint64_t repetitions = 0;
  uint64_t secondary_repetitions = 0;  // g-runs of the direct-sum scheme
  std::vector<std::pair<std::string, mpq_class>> ledger;
  double eps = 0, eps_target = 0;
  uint64_t base_cost = 0;
  uint64_t overhead = 0;  // declared max_cost minus repetitions × base cost

  mpq_class ledger_total() const;
};

namespace amp {

// Repetition counts (ceilings of the real-valued constants).
uint64_t standard_reps(double eps, double eps_target);
uint64_t xor_reps(double eps, double eps_target);
uint64_t split_reps(double eps, double eps_target);
uint64_t oot_reps(double eps, double eps_target);
uint64_t direct_sum_f_reps(double eps_target);
uint64_t direct_sum_g_reps(double eps, double eps_target);
uint64_t oot_hash_range(double eps_target);

}  // namespace amp

ProtocolPtr amplify_standard(ProtocolPtr p, double eps, double eps_target, AmplifyPlan* plan = nullptr);
ProtocolPtr amplify_xor(ProtocolPtr p, double eps, double eps_target, AmplifyPlan* plan = nullptr);
// p_f computes g^{⊗k} on k blocks; p_g computes g on one block.
ProtocolPtr amplify_xor_direct_sum(ProtocolPtr p_f, ProtocolPtr p_g, size_t k, double eps, double eps_target,
                                   AmplifyPlan* plan = nullptr);
ProtocolPtr oot_normalize(ProtocolPtr p);
ProtocolPtr amplify_oot(ProtocolPtr p, double eps, double eps_target, AmplifyPlan* plan = nullptr);
ProtocolPtr amplify_split(ProtocolPtr p, double eps, double eps_target, AmplifyPlan* plan = nullptr);

// Per-position compatibility gadgets: index Sym pairs as 3·a + b.
struct SplitGadgets {
  std::array<uint8_t, 9> g_a{}, g_b{};
  unsigned alphabet = 0;

  uint8_t a(Sym i, Sym j) const { return g_a[3 * static_cast<int>(i) + static_cast<int>(j)]; }
  uint8_t b(Sym i, Sym j) const { return g_b[3 * static_cast<int>(i) + static_cast<int>(j)]; }
};

// Frozen tables (alphabet size 8).
const SplitGadgets& split_gadgets();
// Union-find search over the constraints of valid split rows; used to
// re-derive the frozen tables.
SplitGadgets search_split_gadgets();
// Both per-position directions of the compatibility property over the 81
// symbol tuples restricted to valid rows.
bool verify_split_gadgets(const SplitGadgets& g);
// 3 bits per position.
BitString gadget_encode_a(const SplitGadgets& g, const SplitString& xi, const SplitString& xj);
BitString gadget_encode_b(const SplitGadgets& g, const SplitString& yi, const SplitString& yj);

// Conversions along the model hierarchy. With a spec, values use its
// fixed-width encoding (needed for value-or-⊤ alphabets).
ProtocolPtr convert(ProtocolPtr p, Model target, const ProblemSpec* spec = nullptr);
ProtocolPtr convert_pair_to_local(ProtocolPtr alice_side, ProtocolPtr bob_side);

}  // namespace cclab

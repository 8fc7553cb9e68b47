#pragma once

#include <string>
#include <vector>

#include "cclab/engine.hpp"
#include "cclab/problems.hpp"

namespace cclab {

// Random b×n matrix over GF(2); digest = M·x. For fixed x ≠ y the collision
// probability over uniform matrices is exactly 2^-b.
struct LinearHash {
  size_t n = 0, b = 0;
  std::vector<BitString> rows;

  static LinearHash draw(Tape& t, size_t n, size_t b);
  static size_t tape_bits(size_t n, size_t b) { return n * b; }
  BitString apply(const BitString& x) const;
  // Digest of the length-`len` prefix of x.
  BitString apply_prefix(const BitString& x, size_t len) const;
};

// Smallest b with 2^b >= num / eps.
size_t digest_bits(double num, double eps);

namespace blocks {

// Building blocks callable inside a running session. Alice holds the `xs`,
// Bob the `ys`; results are known to both players on return.

// Equality with a b-bit digest from Alice and a verdict bit from Bob.
bool eq_run(Session& s, const BitString& x, const BitString& y, size_t b, const std::string& tag = "eq");
// m instances sharing one hash matrix: digest b = ⌈log(3m/eps)⌉ bits per
// instance plus one verdict bit per instance.
// digest_m > 0 sizes the digest for that many instances (a fixed worst case).
std::vector<bool> eq_batch_run(Session& s, const std::vector<BitString>& xs, const std::vector<BitString>& ys,
                               double eps, const std::string& tag = "eq", size_t digest_m = 0);
size_t eq_batch_digest(size_t m, double eps);
uint64_t eq_batch_cost(size_t m, double eps);
uint64_t eq_batch_tape(size_t m, size_t n, double eps);

// First difference by binary search on prefix equality.
size_t ftfd_run(Session& s, const BitString& x, const BitString& y, double eps, const std::string& tag = "ftfd");
size_t ftfd_steps(size_t n);
size_t ftfd_digest(size_t n, double eps);
uint64_t ftfd_cost(size_t n, double eps);
uint64_t ftfd_tape(size_t n, double eps);

// Full exchange: Alice sends a, Bob replies [d_H(a, b) >= U].
bool ghd_run(Session& s, const BitString& a, const BitString& b, size_t U, const std::string& tag = "ghd");

}  // namespace blocks

ProtocolPtr eq_protocol(size_t n, double eps);
ProtocolPtr eq_batch_protocol(size_t k, size_t n, double eps);
ProtocolPtr ftfd_protocol(size_t n, double eps);
ProtocolPtr ghd_protocol(size_t n, size_t L, size_t U);

// Upper-bound protocols of the separating problems. Names: XOR, SplitId, IdA,
// IdB, CondId, EQout, MAX, t-FtFD, t-INT.
ProtocolPtr separation_protocol(const std::string& name, size_t n, double eps, size_t t = 1);

// Cheapest deterministic protocol for `spec` in `model` among the generic
// exchange protocols and the zero/low-cost constructions above.
ProtocolPtr deterministic_protocol(const ProblemSpec& spec, Model model);

// Fixed-width encoding of problem values (BitsOrTop: flag bit then value).
BitString encode_value(const ProblemSpec& spec, const Output& v);
Output decode_value(const ProblemSpec& spec, const BitString& w);
// The spec's truth as seen by `model`: split and XOR outputs are bit strings,
// so value-or-⊤ alphabets are compared in encoded form there.
Truth model_truth(const ProblemSpec& spec, Model model);

}  // namespace cclab

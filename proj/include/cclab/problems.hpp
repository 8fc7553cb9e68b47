#pragma once

#include <gmpxx.h>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cclab/engine.hpp"

namespace cclab {

enum class Alphabet { Bits, Index, BitsOrTop };

struct ProblemSpec {
  std::string name;
  size_t n_a = 0, n_b = 0;
  size_t k = 0;  // ⌈log |Z|⌉
  Alphabet alphabet = Alphabet::Bits;
  std::function<bool(const BitString&, const BitString&)> promise;  // empty: total function
  std::function<Output(const BitString&, const BitString&)> eval;

  bool in_promise(const BitString& x, const BitString& y) const { return !promise || promise(x, y); }
  // Throws PromiseError off the promise, DomainError on bad lengths.
  Output evaluate(const BitString& x, const BitString& y) const;
  Truth truth() const;
  // All inputs satisfying the promise (small n only).
  std::vector<InputPair> domain() const;
};

namespace problems {

ProblemSpec eq(size_t n);
ProblemSpec eqout(size_t n);
ProblemSpec ftfd(size_t n);
ProblemSpec ghd(size_t n, size_t L, size_t U);
ProblemSpec id_a(size_t n);
ProblemSpec id_b(size_t n);
ProblemSpec condid(size_t n);
ProblemSpec splitid(size_t n);
ProblemSpec xor_n(size_t n);
ProblemSpec max(size_t n);
ProblemSpec t_ftfd(size_t n, size_t t);
ProblemSpec t_int(size_t n, size_t t);
// k instances of n-bit equality, inputs concatenated.
ProblemSpec eq_batch(size_t k, size_t n);

ProblemSpec by_name(const std::string& name, size_t n, size_t t = 1);
std::vector<std::string> names();

// Index value encoded as a big-endian integer of width ⌈log(n+1)⌉.
Output index_value(uint64_t i, size_t n);
size_t index_width(size_t n);

// t-FtFD encoding: indices of 1 bits in increasing order, each on
// ⌈log(n+1)⌉ bits, padded with all-ones blocks up to t blocks.
BitString t_ftfd_encode(const BitString& x, size_t t);

}  // namespace problems

struct GapMajInstance {
  std::vector<BitString> rows_a, rows_b;
  size_t N = 0, k = 0;
  mpq_class eps = 0;
  std::vector<mpq_class> mu;

  BitString xor_row(size_t i) const { return rows_a[i] ^ rows_b[i]; }
  bool uniform() const;
};

GapMajInstance make_gapmaj(std::vector<BitString> a, std::vector<BitString> b, mpq_class eps,
                           std::vector<mpq_class> mu = {});

// The μ-majority witness when its weight is at least 1 − eps and eps < 1/2.
std::optional<BitString> check_gapmaj_promise(const GapMajInstance& inst);
// Weight of the heaviest row-XOR value.
mpq_class gapmaj_majority_weight(const GapMajInstance& inst);

// Random promise instance: ⌈(1−eps)N⌉ rows XOR to a hidden z; the others XOR
// to random strings, or all to one wrong string when `adversarial`.
GapMajInstance random_gapmaj(size_t N, size_t k, mpq_class eps, uint64_t seed, bool adversarial);

uint64_t hamming_ball_size(size_t n, size_t t);
std::vector<BitString> hamming_ball(size_t n, size_t t);
double binary_entropy(double p);

}  // namespace cclab

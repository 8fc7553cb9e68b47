#include "cclab/problems.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

namespace cclab {

Output ProblemSpec::evaluate(const BitString& x, const BitString& y) const {
  if (x.size() != n_a || y.size() != n_b) throw DomainError(name + ": input length mismatch");
  if (!in_promise(x, y)) throw PromiseError(name + ": input outside promise");
  return eval(x, y);
}

Truth ProblemSpec::truth() const {
  return [spec = *this](const BitString& x, const BitString& y) { return spec.evaluate(x, y); };
}

std::vector<InputPair> ProblemSpec::domain() const {
  std::vector<InputPair> d;
  for (auto& in : full_domain(n_a, n_b))
    if (in_promise(in.first, in.second)) d.push_back(std::move(in));
  return d;
}

namespace problems {

size_t index_width(size_t n) { return ceil_log2(n + 1); }

Output index_value(uint64_t i, size_t n) { return Output::of(BitString::from_uint(i, index_width(n))); }

namespace {

size_t first_diff(const BitString& x, const BitString& y) {
  const auto& a = x.words();
  const auto& b = y.words();
  for (size_t w = 0; w < a.size(); ++w)
    if (a[w] != b[w]) return 64 * w + std::countl_zero(a[w] ^ b[w]);
  return x.size();
}

ProblemSpec base(std::string name, size_t n, size_t k, Alphabet al) {
  ProblemSpec s;
  s.name = std::move(name);
  s.n_a = s.n_b = n;
  s.k = k;
  s.alphabet = al;
  return s;
}

}  // namespace

ProblemSpec eq(size_t n) {
  auto s = base("EQ", n, 1, Alphabet::Bits);
  s.eval = [](const BitString& x, const BitString& y) { return Output::of(BitString::from_uint(x == y, 1)); };
  return s;
}

ProblemSpec eqout(size_t n) {
  // |Z| = 2^n + 1
  auto s = base("EQout", n, n + 1, Alphabet::BitsOrTop);
  s.eval = [](const BitString& x, const BitString& y) { return x == y ? Output::of(x) : Output::top(); };
  return s;
}

ProblemSpec ftfd(size_t n) {
  auto s = base("FtFD", n, index_width(n), Alphabet::Index);
  s.eval = [n](const BitString& x, const BitString& y) { return index_value(first_diff(x, y), n); };
  return s;
}

ProblemSpec ghd(size_t n, size_t L, size_t U) {
  if (!(L < U && U <= n)) throw DomainError("GHD: need L < U <= n");
  auto s = base("GHD", n, 1, Alphabet::Bits);
  s.promise = [L, U](const BitString& x, const BitString& y) {
    size_t d = (x ^ y).popcount();
    return d >= U || d <= L;
  };
  s.eval = [U](const BitString& x, const BitString& y) {
    return Output::of(BitString::from_uint((x ^ y).popcount() >= U, 1));
  };
  return s;
}

ProblemSpec id_a(size_t n) {
  auto s = base("IdA", n, n, Alphabet::Bits);
  s.eval = [](const BitString& x, const BitString&) { return Output::of(x); };
  return s;
}

ProblemSpec id_b(size_t n) {
  auto s = base("IdB", n, n, Alphabet::Bits);
  s.eval = [](const BitString&, const BitString& y) { return Output::of(y); };
  return s;
}

ProblemSpec condid(size_t n) {
  if (n == 0) throw DomainError("CondId: n >= 1");
  auto s = base("CondId", n, n, Alphabet::Bits);
  s.eval = [](const BitString& x, const BitString& y) { return Output::of(x[0] == y[0] ? x : y); };
  return s;
}

ProblemSpec splitid(size_t n) {
  auto s = base("SplitId", n, n, Alphabet::Bits);
  s.eval = [n](const BitString& x, const BitString& y) {
    BitString z(n);
    for (size_t i = 0; i < n; ++i) z.set(i, i % 2 == 0 ? x[i] : y[i]);
    return Output::of(z);
  };
  return s;
}

ProblemSpec xor_n(size_t n) {
  auto s = base("XOR", n, n, Alphabet::Bits);
  s.eval = [](const BitString& x, const BitString& y) { return Output::of(x ^ y); };
  return s;
}

ProblemSpec max(size_t n) {
  auto s = base("MAX", n, n, Alphabet::Bits);
  s.eval = [](const BitString& x, const BitString& y) { return Output::of(y < x || x == y ? x : y); };
  return s;
}

ProblemSpec t_ftfd(size_t n, size_t t) {
  auto s = base("t-FtFD", n, index_width(n), Alphabet::Index);
  s.promise = [t](const BitString& x, const BitString& y) { return x.popcount() <= t && y.popcount() <= t; };
  s.eval = [n](const BitString& x, const BitString& y) { return index_value(first_diff(x, y), n); };
  return s;
}

ProblemSpec t_int(size_t n, size_t t) {
  auto s = base("t-INT", n, n, Alphabet::Bits);
  s.promise = [t](const BitString& x, const BitString& y) { return x.popcount() <= t && y.popcount() <= t; };
  s.eval = [](const BitString& x, const BitString& y) { return Output::of(x & y); };
  return s;
}

ProblemSpec eq_batch(size_t k, size_t n) {
  ProblemSpec s;
  s.name = "EQ^k";
  s.n_a = s.n_b = k * n;
  s.k = k;
  s.eval = [k, n](const BitString& x, const BitString& y) {
    BitString z(k);
    for (size_t i = 0; i < k; ++i) z.set(i, x.slice(i * n, n) == y.slice(i * n, n));
    return Output::of(z);
  };
  return s;
}

std::vector<std::string> names() {
  return {"EQ", "EQout", "FtFD", "IdA", "IdB", "CondId", "SplitId", "XOR", "MAX", "t-FtFD", "t-INT"};
}

ProblemSpec by_name(const std::string& name, size_t n, size_t t) {
  if (name == "EQ") return eq(n);
  if (name == "EQout") return eqout(n);
  if (name == "FtFD") return ftfd(n);
  if (name == "IdA") return id_a(n);
  if (name == "IdB") return id_b(n);
  if (name == "CondId") return condid(n);
  if (name == "SplitId") return splitid(n);
  if (name == "XOR") return xor_n(n);
  if (name == "MAX") return max(n);
  if (name == "t-FtFD") return t_ftfd(n, t);
  if (name == "t-INT") return t_int(n, t);
  throw DomainError("unknown problem: " + name);
}

BitString t_ftfd_encode(const BitString& x, size_t t) {
  const size_t n = x.size(), w = index_width(n);
  if (x.popcount() > t) throw PromiseError("t_ftfd_encode: weight above t");
  BitString s = BitString::ones(t * w);
  size_t j = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!x[i]) continue;
    for (size_t b = 0; b < w; ++b) s.set(j * w + b, (i >> (w - 1 - b)) & 1u);
    ++j;
  }
  return s;
}

}  // namespace problems

bool GapMajInstance::uniform() const {
  for (auto& m : mu)
    if (m != mu.front()) return false;
  return true;
}

GapMajInstance make_gapmaj(std::vector<BitString> a, std::vector<BitString> b, mpq_class eps,
                           std::vector<mpq_class> mu) {
  if (a.size() != b.size() || a.empty()) throw DomainError("make_gapmaj: row count mismatch");
  GapMajInstance g;
  g.N = a.size();
  g.k = a[0].size();
  for (size_t i = 0; i < g.N; ++i)
    if (a[i].size() != g.k || b[i].size() != g.k) throw DomainError("make_gapmaj: ragged rows");
  g.rows_a = std::move(a);
  g.rows_b = std::move(b);
  g.eps = eps;
  if (mu.empty()) mu.assign(g.N, mpq_class(1, static_cast<unsigned long>(g.N)));
  mpq_class tot = 0;
  for (auto& m : mu) {
    if (m < 0) throw DomainError("make_gapmaj: negative weight");
    tot += m;
  }
  if (mu.size() != g.N || tot != 1) throw DomainError("make_gapmaj: mu must sum to 1");
  g.mu = std::move(mu);
  return g;
}

namespace {

std::map<BitString, mpq_class> xor_weights(const GapMajInstance& inst) {
  std::map<BitString, mpq_class> w;
  for (size_t i = 0; i < inst.N; ++i) w[inst.xor_row(i)] += inst.mu[i];
  return w;
}

}  // namespace

mpq_class gapmaj_majority_weight(const GapMajInstance& inst) {
  mpq_class best = 0;
  for (auto& [z, m] : xor_weights(inst)) best = std::max(best, m);
  return best;
}

std::optional<BitString> check_gapmaj_promise(const GapMajInstance& inst) {
  if (inst.eps >= mpq_class(1, 2)) return std::nullopt;
  for (auto& [z, m] : xor_weights(inst))
    if (m >= 1 - inst.eps) return z;
  return std::nullopt;
}

GapMajInstance random_gapmaj(size_t N, size_t k, mpq_class eps, uint64_t seed, bool adversarial) {
  Tape t = Tape::seeded(seed, ~uint64_t{0});
  BitString z = t.read(k);
  BitString wrong = t.read(k);
  if (wrong == z) wrong.flip(0);
  mpq_class good_q = (1 - eps) * static_cast<unsigned long>(N);
  mpz_class good_z;
  mpz_cdiv_q(good_z.get_mpz_t(), good_q.get_num_mpz_t(), good_q.get_den_mpz_t());
  size_t good = good_z.get_ui();
  // Place the good rows at random positions.
  std::vector<size_t> perm(N);
  for (size_t i = 0; i < N; ++i) perm[i] = i;
  for (size_t i = N; i > 1; --i) std::swap(perm[i - 1], perm[t.uniform(i)]);
  std::vector<BitString> a(N), b(N);
  for (size_t r = 0; r < N; ++r) {
    size_t i = perm[r];
    a[i] = t.read(k);
    BitString target = r < good ? z : adversarial ? wrong : t.read(k);
    b[i] = a[i] ^ target;
  }
  return make_gapmaj(std::move(a), std::move(b), eps);
}

uint64_t hamming_ball_size(size_t n, size_t t) {
  if (t > n) throw DomainError("hamming_ball: t > n");
  uint64_t c = 1, s = 1;
  for (size_t i = 1; i <= t; ++i) {
    c = c * (n - i + 1) / i;
    s += c;
  }
  return s;
}

std::vector<BitString> hamming_ball(size_t n, size_t t) {
  if (t > n) throw DomainError("hamming_ball: t > n");
  std::vector<BitString> out;
  BitString cur(n);
  auto rec = [&](auto&& self, size_t i, size_t w) -> void {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    self(self, i + 1, w);
    if (w < t) {
      cur.set(i, true);
      self(self, i + 1, w + 1);
      cur.set(i, false);
    }
  };
  rec(rec, 0, 0);
  return out;
}

double binary_entropy(double p) {
  if (p <= 0 || p >= 1) return 0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

}  // namespace cclab

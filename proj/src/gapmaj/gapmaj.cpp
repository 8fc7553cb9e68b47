#include "cclab/gapmaj.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace cclab {

namespace {

struct UnionFind {
  std::vector<uint32_t> parent, size;
  explicit UnionFind(size_t n) : parent(n), size(n, 1) { std::iota(parent.begin(), parent.end(), 0u); }
  uint32_t find(uint32_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }
  void unite(uint32_t a, uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
};

uint64_t edge_threshold(double p) {
  if (p >= 1) return uint64_t{1} << 32;
  if (p <= 0) return 0;
  return static_cast<uint64_t>(std::floor(std::ldexp(p, 32)));
}

}  // namespace

ErGraph sample_er(size_t n, double p, Tape& t) {
  ErGraph g;
  g.n = n;
  const uint64_t thr = edge_threshold(p);
  for (size_t u = 0; u < n; ++u)
    for (size_t v = u + 1; v < n; ++v)
      if (t.bits(32) < thr) g.edges.emplace_back(static_cast<uint32_t>(u), static_cast<uint32_t>(v));
  return g;
}

ErGraph sample_er(size_t n, double p, uint64_t seed) {
  Tape t = Tape::seeded(seed, 32 * (n * (n - (n > 0)) / 2));
  return sample_er(n, p, t);
}

size_t largest_component(const ErGraph& g) {
  if (g.n == 0) return 0;
  UnionFind uf(g.n);
  for (auto [u, v] : g.edges) uf.unite(u, v);
  size_t best = 0;
  for (size_t v = 0; v < g.n; ++v)
    if (uf.find(static_cast<uint32_t>(v)) == v) best = std::max<size_t>(best, uf.size[v]);
  return best;
}

double er_component_bound(size_t n, double c, double alpha) {
  return std::exp((std::log(2.0) - alpha / 2 * (1 - alpha / 2) * c) * static_cast<double>(n));
}

namespace gapmaj {

double er_constant() { return 720.0 / 143.0 * std::log(2.0); }

size_t sample_size(double num, double eps_target) {
  return static_cast<size_t>(std::ceil(50.0 * std::log(num / eps_target)));
}

size_t edge_cap(size_t T) { return static_cast<size_t>(std::floor(2 * er_constant() * static_cast<double>(T))); }

uint64_t cluster_cost(size_t T, double eq_eps) { return blocks::eq_batch_cost(edge_cap(T), eq_eps); }

uint64_t cluster_tape(size_t T, size_t enc_len, double eq_eps) {
  return 32 * (T * (T - (T > 0)) / 2) + blocks::eq_batch_tape(edge_cap(T), enc_len, eq_eps);
}

ClusterResult cluster_run(Session& s, size_t T, const PairEnc& enc_a, const PairEnc& enc_b, size_t enc_len,
                          double eq_eps, const std::string& tag) {
  ClusterResult r;
  const size_t cap = edge_cap(T);
  Tape graph_tape = s.pub().take(32 * (T * (T - (T > 0)) / 2));
  Tape hash_tape = s.pub().take(blocks::eq_batch_tape(cap, enc_len, eq_eps));
  ErGraph g = sample_er(T, er_constant() / static_cast<double>(T), graph_tape);
  r.edges = g.edges.size();
  if (g.edges.size() > cap) {
    r.aborted = true;
    s.abort();
    return r;
  }
  std::vector<BitString> xs, ys;
  xs.reserve(g.edges.size());
  ys.reserve(g.edges.size());
  for (auto [u, v] : g.edges) {
    xs.push_back(enc_a(u, v));
    ys.push_back(enc_b(u, v));
  }
  // The hash matrix comes from a dedicated slice so the digest length and
  // tape layout do not depend on the edge count.
  std::vector<bool> same;
  {
    Tape saved = s.pub();
    s.pub() = hash_tape;
    same = blocks::eq_batch_run(s, xs, ys, eq_eps, tag, cap);
    s.pub() = saved;
  }
  UnionFind uf(T);
  for (size_t e = 0; e < g.edges.size(); ++e)
    if (same[e]) uf.unite(g.edges[e].first, g.edges[e].second);
  std::map<uint32_t, std::pair<size_t, size_t>> comp;  // root -> (size, lowest vertex)
  for (size_t v = 0; v < T; ++v) {
    auto root = uf.find(static_cast<uint32_t>(v));
    auto [it, fresh] = comp.try_emplace(root, 0, v);
    it->second.first++;
  }
  for (auto& [root, sz_low] : comp)
    if (30 * sz_low.first > 11 * T) r.reps.push_back(sz_low.second);
  if (r.reps.empty() && !comp.empty()) {
    // At c ≈ 3.49 the component bound is vacuous and a majority near 1/2 can
    // leave every component below 11/30; the two largest go to the next step.
    std::vector<std::pair<size_t, size_t>> by_size;
    for (auto& [root, sz_low] : comp) by_size.emplace_back(sz_low.first, sz_low.second);
    std::sort(by_size.begin(), by_size.end(),
              [](auto& a, auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    for (size_t i = 0; i < std::min<size_t>(2, by_size.size()); ++i) r.reps.push_back(by_size[i].second);
    r.fallback = true;
    s.note("cluster_fallback", 1);
  }
  std::sort(r.reps.begin(), r.reps.end());
  return r;
}

uint64_t randomgraph_cost(size_t N, double eps_target) {
  const size_t T = sample_size(10, eps_target);
  return cluster_cost(T, eps_target / 5) + blocks::eq_batch_cost(N, eps_target / 5);
}

uint64_t randomgraph_tape(size_t N, size_t enc_len, double eps_target) {
  const size_t T = sample_size(10, eps_target);
  return 64 * T + cluster_tape(T, enc_len, eps_target / 5) + blocks::eq_batch_tape(N, enc_len, eps_target / 5);
}

RgResult randomgraph_run(Session& s, size_t N, const PairEnc& enc_a, const PairEnc& enc_b, size_t enc_len,
                         double eps_target) {
  RgResult r;
  const size_t T = sample_size(10, eps_target);
  // Step 1: multiset S of T uniformly sampled rows (public coins).
  Tape sample_tape = s.pub().take(64 * T);
  std::vector<size_t> S(T);
  for (auto& v : S) v = sample_tape.uniform(N);
  // Step 2: clustering on S.
  auto ea = [&](size_t u, size_t v) { return enc_a(S[u], S[v]); };
  auto eb = [&](size_t u, size_t v) { return enc_b(S[u], S[v]); };
  ClusterResult c = cluster_run(s, T, ea, eb, enc_len, eps_target / 5);
  Tape step3_tape = s.pub().take(blocks::eq_batch_tape(N, enc_len, eps_target / 5));
  r.edges = c.edges;
  if (c.aborted) {
    r.aborted = true;
    return r;
  }
  r.candidates = c.reps.size();
  if (c.reps.empty()) {
    r.row = S[0];
    return r;
  }
  const size_t i1 = S[c.reps[0]];
  if (c.reps.size() == 1) {
    r.row = i1;
    return r;
  }
  const size_t i2 = S[c.reps[1]];
  // Step 3: compare candidate i1 against every row.
  std::vector<BitString> xs, ys;
  for (size_t j = 0; j < N; ++j) {
    if (j == i1) continue;
    xs.push_back(enc_a(i1, j));
    ys.push_back(enc_b(i1, j));
  }
  Tape saved = s.pub();
  s.pub() = step3_tape;
  auto same = blocks::eq_batch_run(s, xs, ys, eps_target / 5, "eq", N);
  s.pub() = saved;
  size_t agree = 1 + static_cast<size_t>(std::count(same.begin(), same.end(), true));
  r.row = 2 * agree >= N ? i1 : i2;
  return r;
}

}  // namespace gapmaj

const char* variant_name(TrivialVariant v) {
  switch (v) {
    case TrivialVariant::XorPub: return "xor_pub";
    case TrivialVariant::XorPriv: return "xor_priv";
    case TrivialVariant::OpenPub: return "open_pub";
    case TrivialVariant::OpenPriv: return "open_priv";
    case TrivialVariant::DetUni: return "det_uni";
  }
  return "?";
}

BitString flatten(const std::vector<BitString>& rows) {
  BitString out;
  for (auto& r : rows) out = out.concat(r);
  return out;
}

namespace {

// Samples i with probability mu[i] from 64 tape bits (uniform μ on a power
// of two uses exactly log N bits).
size_t sample_mu(Tape& t, const std::vector<mpq_class>& mu, bool uniform) {
  const size_t N = mu.size();
  if (uniform) return t.uniform(N);
  uint64_t u = t.bits(64);
  mpq_class cum = 0;
  for (size_t i = 0; i + 1 < N; ++i) {
    cum += mu[i];
    mpz_class lim = cum.get_num() * (mpz_class(1) << 64) / cum.get_den();
    if (mpz_class(static_cast<unsigned long>(u)) < lim) return i;
  }
  return N - 1;
}

uint64_t sample_bits(size_t N, bool uniform) {
  if (uniform && (N & (N - 1)) == 0) return ceil_log2(N);
  return 64;
}

BitString row(const BitString& flat, size_t i, size_t k) { return flat.slice(i * k, k); }

}  // namespace

ProtocolPtr gapmaj_trivial_protocol(size_t N, size_t k, const std::vector<mpq_class>& mu_in, const mpq_class& eps,
                                    TrivialVariant v) {
  std::vector<mpq_class> mu = mu_in;
  if (mu.empty()) mu.assign(N, mpq_class(1, static_cast<unsigned long>(N)));
  bool uniform = std::all_of(mu.begin(), mu.end(), [&](const mpq_class& m) { return m == mu[0]; });
  const size_t idx_bits = ceil_log2(N);
  Protocol p;
  p.id = std::string("gapmaj:") + variant_name(v);
  p.input_len_a = p.input_len_b = N * k;
  p.output_len = k;
  switch (v) {
    case TrivialVariant::XorPub:
      p.model = Model::Xor;
      p.budgets.pub = sample_bits(N, uniform);
      p.body = [=](Session& s) {
        size_t i = sample_mu(s.pub(), mu, uniform);
        return Outputs{Output::of(row(s.alice().input, i, k)), Output::of(row(s.bob().input, i, k)), {}};
      };
      break;
    case TrivialVariant::XorPriv:
      p.model = Model::Xor;
      p.budgets.a = sample_bits(N, uniform);
      p.max_cost = idx_bits;
      p.body = [=](Session& s) {
        size_t i = s.send_uint(Party::A, sample_mu(s.alice().priv, mu, uniform), static_cast<unsigned>(idx_bits));
        return Outputs{Output::of(row(s.alice().input, i, k)), Output::of(row(s.bob().input, i, k)), {}};
      };
      break;
    case TrivialVariant::OpenPub:
    case TrivialVariant::OpenPriv: {
      const bool priv = v == TrivialVariant::OpenPriv;
      p.model = Model::Open;
      (priv ? p.budgets.a : p.budgets.pub) = sample_bits(N, uniform);
      p.max_cost = 2 * k + (priv ? idx_bits : 0);
      p.body = [=](Session& s) {
        size_t i = priv ? s.send_uint(Party::A, sample_mu(s.alice().priv, mu, uniform),
                                      static_cast<unsigned>(idx_bits))
                        : sample_mu(s.pub(), mu, uniform);
        BitString xa = row(s.alice().input, i, k);
        BitString yb = row(s.bob().input, i, k);
        s.send(Party::A, xa);
        s.send(Party::B, yb);
        Output z = Output::of(xa ^ yb);
        return Outputs{z, z, z};
      };
      break;
    }
    case TrivialVariant::DetUni: {
      if (eps >= mpq_class(1, 2)) throw DomainError("det_uni: eps must be < 1/2");
      p.model = Model::Bob;
      // m = min(N, ⌊2εN⌋ + 1) heaviest rows, ties by index.
      mpq_class two_eps_n = 2 * eps * static_cast<unsigned long>(N);
      mpz_class fl;
      mpz_fdiv_q(fl.get_mpz_t(), two_eps_n.get_num_mpz_t(), two_eps_n.get_den_mpz_t());
      const size_t m = std::min<size_t>(N, fl.get_ui() + 1);
      std::vector<size_t> order(N);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return mu[a] > mu[b]; });
      order.resize(m);
      p.max_cost = m * k;
      p.body = [=](Session& s) {
        std::map<BitString, mpq_class> weight;
        for (size_t i : order) {
          BitString xa = row(s.alice().input, i, k);
          s.send(Party::A, xa);
          weight[xa ^ row(s.bob().input, i, k)] += mu[i];
        }
        auto best = weight.begin();
        for (auto it = weight.begin(); it != weight.end(); ++it)
          if (it->second > best->second) best = it;
        return Outputs{{}, Output::of(best->first), {}};
      };
      break;
    }
  }
  return make_protocol(std::move(p));
}

ProtocolPtr gapmaj_randomgraph_protocol(size_t N, size_t k, double eps_target) {
  Protocol p;
  p.id = "gapmaj:randomgraph";
  p.model = Model::Xor;
  p.input_len_a = p.input_len_b = N * k;
  p.output_len = k;
  p.budgets.pub = gapmaj::randomgraph_tape(N, k, eps_target);
  p.max_cost = gapmaj::randomgraph_cost(N, eps_target);
  p.body = [=](Session& s) {
    const BitString& X = s.alice().input;
    const BitString& Y = s.bob().input;
    std::vector<BitString> ra(N), rb(N);
    for (size_t i = 0; i < N; ++i) {
      ra[i] = row(X, i, k);
      rb[i] = row(Y, i, k);
    }
    auto ea = [&](size_t i, size_t j) { return ra[i] ^ ra[j]; };
    auto eb = [&](size_t i, size_t j) { return rb[i] ^ rb[j]; };
    auto r = gapmaj::randomgraph_run(s, N, ea, eb, k, eps_target);
    return Outputs{Output::of(ra[r.row]), Output::of(rb[r.row]), {}};
  };
  return make_protocol(std::move(p));
}

namespace {

SolveResult run_solver(ProtocolPtr p, const GapMajInstance& inst, uint64_t seed) {
  SolveResult r;
  r.protocol = p;
  auto z = check_gapmaj_promise(inst);
  if (!z) throw PromiseError("gapmaj: instance violates the promise");
  r.truth = Output::of(*z);
  r.record = execute(*p, flatten(inst.rows_a), flatten(inst.rows_b), seeded_tapes(*p, seed));
  r.correct = resolve(p->model, r.record, r.truth);
  return r;
}

}  // namespace

SolveResult solve_trivial(const GapMajInstance& inst, TrivialVariant v, uint64_t seed) {
  return run_solver(gapmaj_trivial_protocol(inst.N, inst.k, inst.mu, inst.eps, v), inst, seed);
}

SolveResult solve_randomgraph(const GapMajInstance& inst, double eps_target, uint64_t seed) {
  if (!inst.uniform()) throw DomainError("solve_randomgraph: uniform mu required");
  if (!(eps_target > 0 && inst.eps < mpq_class(1, 2))) throw DomainError("solve_randomgraph: bad parameters");
  return run_solver(gapmaj_randomgraph_protocol(inst.N, inst.k, eps_target), inst, seed);
}

}  // namespace cclab

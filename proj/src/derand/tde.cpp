#include <algorithm>
#include <cstdlib>

#include "cclab/derand.hpp"

namespace cclab {

namespace {

mpz_class ceil_q(const mpq_class& q) {
  mpz_class r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

mpz_class floor_q(const mpq_class& q) {
  mpz_class r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

Tape tape_of(uint64_t v, size_t bits) { return bits ? Tape::of(BitString::from_uint(v, bits)) : Tape::none(); }

}  // namespace

size_t LeafTable::leaf_index(const BitString& w) const {
  auto it = std::lower_bound(leaves.begin(), leaves.end(), w);
  if (it == leaves.end() || *it != w) throw DomainError("leaf_index: not a leaf");
  return static_cast<size_t>(it - leaves.begin());
}

mpq_class LeafTable::alpha_q(size_t xi, size_t w) const {
  mpq_class q(mpz_class(alpha[xi][w]), mpz_class(1) << a_bits);
  q.canonicalize();
  return q;
}

mpq_class LeafTable::beta_q(size_t yi, size_t w) const {
  mpq_class q(mpz_class(beta[yi][w]), mpz_class(1) << b_bits);
  q.canonicalize();
  return q;
}

std::map<Output, mpq_class> LeafTable::out_dist(Party side, size_t input, size_t w) const {
  const auto& counts = side == Party::A ? out_a[input][w] : out_b[input][w];
  const uint64_t total = side == Party::A ? alpha[input][w] : beta[input][w];
  std::map<Output, mpq_class> d;
  for (auto& [o, c] : counts) {
    mpq_class q(static_cast<unsigned long>(c), static_cast<unsigned long>(total));
    q.canonicalize();
    d[o] = q;
  }
  return d;
}

LeafTable build_leaf_table(ProtocolPtr p, unsigned bound) {
  if (p->budgets.pub) throw WrongModel("build_leaf_table: public-coin protocol");
  const size_t na = p->input_len_a, nb = p->input_len_b, a = p->budgets.a, b = p->budgets.b;
  if (na + nb + a + b > bound) throw OracleInfeasible("build_leaf_table: too many enumerated bits");
  LeafTable t;
  t.protocol = p;
  t.xs = all_strings(na);
  t.ys = all_strings(nb);
  t.a_bits = a;
  t.b_bits = b;
  const uint64_t RA = uint64_t{1} << a, RB = uint64_t{1} << b;

  // Output of each consistent view, per discovered leaf; -1 when unseen.
  std::map<BitString, size_t> ids;
  std::vector<std::vector<int>> va, vb;
  std::vector<Output> pool, opens;
  std::map<Output, int> pool_id;
  auto intern = [&](const Output& o) {
    auto [it, fresh] = pool_id.try_emplace(o, static_cast<int>(pool.size()));
    if (fresh) pool.push_back(o);
    return it->second;
  };
  auto record = [](std::vector<int>& slot, size_t pos, int id) {
    if (slot[pos] >= 0 && slot[pos] != id)
      throw DomainError("build_leaf_table: output depends on more than the player's view");
    slot[pos] = id;
  };

  for (size_t xi = 0; xi < t.xs.size(); ++xi)
    for (uint64_t ra = 0; ra < RA; ++ra)
      for (size_t yi = 0; yi < t.ys.size(); ++yi)
        for (uint64_t rb = 0; rb < RB; ++rb) {
          RunRecord r = execute(*p, t.xs[xi], t.ys[yi], Tapes{Tape::none(), tape_of(ra, a), tape_of(rb, b)});
          auto [it, fresh] = ids.try_emplace(r.transcript, va.size());
          if (fresh) {
            va.emplace_back(t.xs.size() * RA, -1);
            vb.emplace_back(t.ys.size() * RB, -1);
            opens.push_back(r.open);
          } else if (opens[it->second] != r.open) {
            throw DomainError("build_leaf_table: open output is not a function of the transcript");
          }
          const size_t w = it->second;
          record(va[w], xi * RA + ra, intern(r.out_a));
          record(vb[w], yi * RB + rb, intern(r.out_b));
          if (r.out_a.speaks() == r.out_b.speaks()) t.single_speaker = false;
        }

  for (auto& [w, id] : ids) t.leaves.push_back(w);
  const size_t L = t.leaves.size();
  t.open_out.resize(L);
  t.alpha.assign(t.xs.size(), std::vector<uint64_t>(L, 0));
  t.beta.assign(t.ys.size(), std::vector<uint64_t>(L, 0));
  t.out_a.assign(t.xs.size(), std::vector<std::map<Output, uint64_t>>(L));
  t.out_b.assign(t.ys.size(), std::vector<std::map<Output, uint64_t>>(L));
  size_t li = 0;
  for (auto& [w, id] : ids) {
    t.open_out[li] = opens[id];
    for (size_t xi = 0; xi < t.xs.size(); ++xi)
      for (uint64_t ra = 0; ra < RA; ++ra)
        if (int o = va[id][xi * RA + ra]; o >= 0) {
          t.alpha[xi][li]++;
          t.out_a[xi][li][pool[o]]++;
        }
    for (size_t yi = 0; yi < t.ys.size(); ++yi)
      for (uint64_t rb = 0; rb < RB; ++rb)
        if (int o = vb[id][yi * RB + rb]; o >= 0) {
          t.beta[yi][li]++;
          t.out_b[yi][li][pool[o]]++;
        }
    ++li;
  }
  return t;
}

std::map<BitString, mpq_class> factor_leaf_probabilities(ProtocolPtr p, const BitString& input, Party side) {
  LeafTable t = build_leaf_table(p);
  const size_t idx = input.to_uint();
  if (input.size() != (side == Party::A ? p->input_len_a : p->input_len_b))
    throw DomainError("factor_leaf_probabilities: input length mismatch");
  std::map<BitString, mpq_class> f;
  for (size_t w = 0; w < t.leaves.size(); ++w) f[t.leaves[w]] = side == Party::A ? t.alpha_q(idx, w) : t.beta_q(idx, w);
  return f;
}

namespace {

// Smallest d ≥ 0 with γd ≤ v ≤ γ(d+1).
uint64_t grid_index(const mpq_class& v, const mpq_class& gamma) {
  mpz_class d = ceil_q(v / gamma) - 1;
  if (d < 0) d = 0;
  return d.get_ui();
}

unsigned grid_width(const mpq_class& gamma) {
  mpz_class levels = ceil_q(1 / gamma);
  if (levels > mpz_class(1) << 62) throw DomainError("tde: grid too fine");
  return static_cast<unsigned>(ceil_log2(levels.get_ui()));
}

}  // namespace

std::vector<mpq_class> tde_run(Session& s, const LeafTable& t, size_t xi, size_t yi, const mpq_class& gamma,
                               TdeMode mode, mpq_class* renorm, Party sender) {
  const size_t L = t.leaves.size();
  if (renorm) *renorm = 0;
  if (L == 1) return {mpq_class(1)};
  const unsigned width = grid_width(gamma);
  const Party other = sender == Party::A ? Party::B : Party::A;
  auto own = [&](Party p, size_t w) { return p == Party::A ? t.alpha_q(xi, w) : t.beta_q(yi, w); };
  // Step 1: the sender's factors on the γ-grid.
  std::vector<mpq_class> est(L);
  for (size_t w = 0; w < L; ++w) {
    uint64_t d = s.send_uint(sender, grid_index(own(sender, w), gamma), width, "tde");
    est[w] = gamma * mpq_class(mpz_class(d)) * own(other, w);
  }
  // Open: the receiver rounds the products back onto the grid and sends them.
  if (mode == TdeMode::Open)
    for (size_t w = 0; w < L; ++w)
      est[w] = gamma * mpq_class(mpz_class(s.send_uint(other, grid_index(est[w], gamma), width, "tde")));
  mpq_class C = 1;
  for (auto& v : est) C -= v;
  const mpq_class cap = gamma * static_cast<unsigned long>(L) * (mode == TdeMode::Open ? 2 : 1);
  if (C < 0 || C > cap) throw std::logic_error("tde: renormalization constant out of range");
  for (auto& v : est) v += C / static_cast<unsigned long>(L);
  if (renorm) *renorm = C;
  return est;
}

TdeRun tde(const LeafTable& t, size_t xi, size_t yi, const mpq_class& delta, TdeMode mode) {
  if (!(delta > 0 && delta < mpq_class(1, 2))) throw DomainError("tde: need 0 < delta < 1/2");
  TdeRun r;
  const unsigned long L = t.leaves.size();
  r.gamma = delta / (mode == TdeMode::Open ? 2 * L : L);
  Session s(t.xs[xi], t.ys[yi], Tape::none(), Tape::none(), Tape::none());
  r.estimate = tde_run(s, t, xi, yi, r.gamma, mode, &r.renorm);
  r.record = s.finish({});
  return r;
}

uint64_t tde_cost_bound(size_t leaves, const mpq_class& delta, TdeMode mode) {
  const uint64_t f = mode == TdeMode::Open ? 2 : 1;
  mpq_class ratio = mpq_class(static_cast<unsigned long>(f * leaves)) / delta;
  return f * leaves * ceil_log2(ceil_q(ratio).get_ui());
}

mpq_class total_variation(const std::vector<mpq_class>& p, const std::vector<mpq_class>& q) {
  if (p.size() != q.size()) throw DomainError("total_variation: size mismatch");
  mpq_class s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += abs(p[i] - q[i]);
  return s / 2;
}

GridDist discretize(const std::vector<mpq_class>& dist, const mpq_class& delta) {
  if (delta <= 0) throw DomainError("discretize: delta must be positive");
  mpq_class sum = 0;
  for (auto& v : dist) {
    if (v < 0) throw DomainError("discretize: negative entry");
    sum += v;
  }
  if (sum != 1) throw DomainError("discretize: distribution does not sum to 1");
  GridDist g;
  g.D = ceil_q(1 / delta).get_ui();
  const mpq_class D(static_cast<unsigned long>(g.D));
  std::vector<mpq_class> gap(dist.size());
  uint64_t used = 0;
  for (size_t i = 0; i < dist.size(); ++i) {
    mpz_class f = floor_q(D * dist[i]);
    g.counts.push_back(f.get_ui());
    gap[i] = D * dist[i] - mpq_class(f);
    used += g.counts.back();
  }
  // Raise the largest remaining gaps to their ceilings; index order on ties.
  for (; used < g.D; ++used) {
    size_t best = dist.size();
    for (size_t i = 0; i < dist.size(); ++i)
      if (gap[i] > 0 && (best == dist.size() || gap[i] > gap[best])) best = i;
    if (best == dist.size()) throw std::logic_error("discretize: no entry left to raise");
    g.counts[best]++;
    gap[best] = 0;
  }
  return g;
}

bool linf_compose_check(const std::vector<mpq_class>& U, const std::vector<mpq_class>& U2,
                        const std::vector<std::vector<mpq_class>>& V, const std::vector<std::vector<mpq_class>>& V2,
                        const mpq_class& delta_u, const mpq_class& delta_v) {
  if (U.size() != U2.size() || V.size() != U.size() || V2.size() != U.size())
    throw DomainError("linf_compose_check: shape mismatch");
  const size_t nv = U.empty() ? 0 : V[0].size();
  for (size_t v = 0; v < nv; ++v) {
    mpq_class m = 0, m2 = 0;
    for (size_t u = 0; u < U.size(); ++u) {
      m += U[u] * V[u][v];
      m2 += U2[u] * V2[u][v];
    }
    if (abs(m - m2) > delta_u + delta_v) return false;
  }
  return true;
}

}  // namespace cclab

#include <cmath>

#include "cclab/amplify.hpp"
#include "cclab/derand.hpp"

namespace cclab {

namespace {

using Dist = std::map<Output, mpq_class>;
using TablePtr = std::shared_ptr<const LeafTable>;

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

mpq_class pow2_inv(unsigned w) {
  mpq_class g(mpz_class(1), mpz_class(1) << w);
  g.canonicalize();
  return g;
}

// Smallest W with f·L·2^-W < c (strict) or ≤ c.
unsigned grid_exponent(size_t L, unsigned f, const mpq_class& c, bool strict) {
  unsigned W = 0;
  for (;; ++W) {
    mpq_class s = mpq_class(static_cast<unsigned long>(f * L)) * pow2_inv(W);
    if (strict ? s < c : s <= c) return W;
  }
}

unsigned width_of(const mpq_class& gamma) { return static_cast<unsigned>(ceil_log2(ceil_q(1 / gamma).get_ui())); }

uint64_t tde_cost(size_t L, const mpq_class& gamma, TdeMode mode) {
  if (L <= 1) return 0;
  return (mode == TdeMode::Open ? 2 : 1) * L * width_of(gamma);
}

// Σ_w est[w]·o(·|w, input) over the player's outputs.
Dist output_estimate(const LeafTable& t, Party side, size_t input, const std::vector<mpq_class>& est) {
  Dist d;
  for (size_t w = 0; w < t.leaves.size(); ++w) {
    if (est[w] == 0) continue;
    for (auto& [o, q] : t.out_dist(side, input, w)) d[o] += est[w] * q;
  }
  return d;
}

Output argmax(const Dist& d, const Output& fallback) {
  const Output* best = nullptr;
  for (auto& [o, q] : d)
    if (!best || q > d.at(*best)) best = &o;
  return best ? *best : fallback;
}

Dist speaking(const Dist& d) {
  Dist s;
  for (auto& [o, q] : d)
    if (o.speaks()) s[o] = q;
  return s;
}

Output zero_value(size_t k) { return Output::of(BitString(k)); }

BitString bits_of(const Output& o, size_t k) { return o.is_value() ? o.value : BitString(k); }

Protocol shell(const Protocol& p, const std::string& path) {
  Protocol q;
  q.id = "derand_" + path + "(" + p.id + ")";
  q.model = p.model;
  q.output_len = p.output_len;
  q.input_len_a = p.input_len_a;
  q.input_len_b = p.input_len_b;
  return q;
}

size_t xi_of(Session& s) { return s.alice().input.to_uint(); }
size_t yi_of(Session& s) { return s.bob().input.to_uint(); }

// Fixed-point value on the step-h grid in [0, 1]: floor, clamped to the top
// level so that ⌈1/h⌉ levels suffice.
struct FixedPoint {
  mpq_class h;
  uint64_t levels = 0;
  unsigned width = 0;

  explicit FixedPoint(const mpq_class& step) : h(step) {
    levels = ceil_q(1 / h).get_ui();
    width = static_cast<unsigned>(ceil_log2(levels));
  }
  uint64_t encode(const mpq_class& v) const {
    mpz_class i = floor_q(v / h);
    if (i < 0) i = 0;
    if (i >= mpz_class(static_cast<unsigned long>(levels))) i = levels - 1;
    return i.get_ui();
  }
  mpq_class decode(uint64_t i) const { return h * mpq_class(mpz_class(static_cast<unsigned long>(i))); }
  mpq_class send(Session& s, Party from, const mpq_class& v) const {
    return decode(s.send_uint(from, encode(v), width, "derand"));
  }
};

// --- open / local / unilateral --------------------------------------------

DerandResult derand_local(TablePtr t, const mpq_class& eps, Model m) {
  const Protocol& p = *t->protocol;
  const size_t L = t->leaves.size();
  const mpq_class gap = mpq_class(1, 2) - eps;
  const bool uni = m == Model::Alice || m == Model::Bob;
  const TdeMode mode = uni ? TdeMode::Unilateral : TdeMode::Open;
  const unsigned f = uni ? 1 : 2;
  const mpq_class gamma = pow2_inv(grid_exponent(L, f, gap, true));
  DerandResult r;
  r.path = uni ? "unilateral" : (m == Model::Open ? "open" : "local");
  r.sigma = gamma * static_cast<unsigned long>(f * L);
  Protocol q = shell(p, r.path);
  q.max_cost = tde_cost(L, gamma, mode);
  const size_t k = p.output_len;
  q.body = [t, gamma, mode, m, k](Session& s) {
    const size_t xi = xi_of(s), yi = yi_of(s);
    // In the Alice model Bob sends his factors so that Alice holds the estimate.
    const Party sender = m == Model::Alice ? Party::B : Party::A;
    auto est = tde_run(s, *t, xi, yi, gamma, mode, nullptr, sender);
    Outputs o;
    if (m == Model::Open) {
      Dist d;
      for (size_t w = 0; w < t->leaves.size(); ++w) d[t->open_out[w]] += est[w];
      o.open = argmax(d, zero_value(k));
    }
    if (m == Model::Local || m == Model::Alice) o.a = argmax(output_estimate(*t, Party::A, xi, est), zero_value(k));
    if (m == Model::Local || m == Model::Bob) o.b = argmax(output_estimate(*t, Party::B, yi, est), zero_value(k));
    return o;
  };
  r.protocol = make_protocol(std::move(q));
  return r;
}

// --- one-out-of-two, eps < 1/3 -----------------------------------------------

// Alice announces whether one of her values has estimated probability above
// 1/3; she then outputs it, otherwise Bob outputs his most likely value.
// σ < (2/3)(1/3 − ε) keeps Bob's argmax correct when Alice stays silent.
DerandResult derand_oot_small(TablePtr t, const mpq_class& eps) {
  const Protocol& p = *t->protocol;
  const size_t L = t->leaves.size(), k = p.output_len;
  const mpq_class bound = mpq_class(2, 3) * (mpq_class(1, 3) - eps);
  const mpq_class gamma = pow2_inv(grid_exponent(L, 2, bound, true));
  DerandResult r;
  r.path = "oot_small";
  r.sigma = gamma * static_cast<unsigned long>(2 * L);
  Protocol q = shell(p, r.path);
  q.max_cost = tde_cost(L, gamma, TdeMode::Open) + 1;
  q.body = [t, gamma, k](Session& s) {
    const size_t xi = xi_of(s), yi = yi_of(s);
    auto est = tde_run(s, *t, xi, yi, gamma, TdeMode::Open);
    Dist da = speaking(output_estimate(*t, Party::A, xi, est));
    bool heavy = false;
    for (auto& [o, q] : da)
      if (q > mpq_class(1, 3)) heavy = true;
    if (s.send_bit(Party::A, heavy, "derand")) return Outputs{argmax(da, zero_value(k)), Output::silent(), {}};
    Dist db = speaking(output_estimate(*t, Party::B, yi, est));
    return Outputs{Output::silent(), argmax(db, zero_value(k)), {}};
  };
  r.protocol = make_protocol(std::move(q));
  return r;
}

// --- one-out-of-two, general -------------------------------------------------

// Requires a single speaker in every run. Layout after TDE (σ < δ/4):
// 2+2 bits of candidate counts, then
//   (2,0): ⌈log k⌉-bit differing index, reply Σ_{z_i=0} p̃ on the σ/2 grid;
//   (1,1): Alice sends Σ_{z≠z_A} p̃_A, Bob sends p̃_B(z_B), both on the σ/2
//          grid; Bob speaks iff their sum exceeds 1/2.
DerandResult derand_oot_general(TablePtr t, const mpq_class& eps) {
  const Protocol& p = *t->protocol;
  const size_t L = t->leaves.size(), k = p.output_len;
  const mpq_class delta = mpq_class(1, 2) - eps;
  const mpq_class gamma = pow2_inv(grid_exponent(L, 2, delta / 4, true));
  const mpq_class sigma = gamma * static_cast<unsigned long>(2 * L);
  const FixedPoint fp(sigma / 2);
  const unsigned iw = static_cast<unsigned>(ceil_log2(k));
  DerandResult r;
  r.path = "oot_general";
  r.sigma = sigma;
  Protocol q = shell(p, r.path);
  q.max_cost = tde_cost(L, gamma, TdeMode::Open) + 4 + std::max(iw + fp.width, 2 * fp.width);
  const mpq_class theta = mpq_class(1, 4) + (delta - sigma) / 2;
  q.body = [t, gamma, fp, iw, k, theta](Session& s) {
    const size_t xi = xi_of(s), yi = yi_of(s);
    auto est = tde_run(s, *t, xi, yi, gamma, TdeMode::Open);
    Dist da = speaking(output_estimate(*t, Party::A, xi, est));
    Dist db = speaking(output_estimate(*t, Party::B, yi, est));
    std::vector<Output> ca, cb;
    for (auto& [o, v] : da)
      if (v >= theta) ca.push_back(o);
    for (auto& [o, v] : db)
      if (v >= theta) cb.push_back(o);
    const size_t na = s.send_uint(Party::A, std::min<size_t>(ca.size(), 3), 2, "derand");
    const size_t nb = s.send_uint(Party::B, std::min<size_t>(cb.size(), 3), 2, "derand");
    auto alice = [](Output z) { return Outputs{std::move(z), Output::silent(), {}}; };
    auto bob = [](Output z) { return Outputs{Output::silent(), std::move(z), {}}; };
    if (na == 1 && (nb == 0 || nb == 2)) return alice(ca[0]);
    if (nb == 1 && (na == 0 || na == 2)) return bob(cb[0]);
    // Two candidates on one side: locate a differing bit, ask for the mass on 0.
    auto resolve_pair = [&](Party owner, const std::vector<Output>& c, const Dist& mine, const Dist& theirs) {
      const BitString z0 = bits_of(c[0], k), z1 = bits_of(c[1], k);
      size_t i = 0;
      while (i < k && z0[i] == z1[i]) ++i;
      if (i == k) i = 0;
      s.send_uint(owner, i, iw, "derand");
      auto mass0 = [&](const Dist& d) {
        mpq_class m = 0;
        for (auto& [o, v] : d)
          if (!bits_of(o, k)[i]) m += v;
        return m;
      };
      mpq_class total = mass0(mine) + fp.send(s, owner == Party::A ? Party::B : Party::A, mass0(theirs));
      const Output& win = (total > mpq_class(1, 2)) == !z0[i] ? c[0] : c[1];
      return owner == Party::A ? alice(win) : bob(win);
    };
    if (na == 2 && nb == 0) return resolve_pair(Party::A, ca, da, db);
    if (na == 0 && nb == 2) return resolve_pair(Party::B, cb, db, da);
    if (na == 1 && nb == 1) {
      mpq_class rest_a = 0;
      for (auto& [o, v] : da)
        if (o != ca[0]) rest_a += v;
      mpq_class x = fp.send(s, Party::A, rest_a);
      x += fp.send(s, Party::B, db.count(cb[0]) ? db.at(cb[0]) : mpq_class(0));
      return x > mpq_class(1, 2) ? bob(cb[0]) : alice(ca[0]);
    }
    // Off the analysed cases (impossible within the error bound).
    return alice(ca.empty() ? zero_value(k) : ca[0]);
  };
  r.protocol = make_protocol(std::move(q));
  return r;
}

// --- split, eps < 1/3 --------------------------------------------------------

DerandResult derand_split_small(TablePtr t, const mpq_class& eps) {
  const Protocol& p = *t->protocol;
  const size_t L = t->leaves.size(), k = p.output_len;
  const mpq_class bound = mpq_class(2, 3) * (mpq_class(1, 3) - eps);
  const mpq_class gamma = pow2_inv(grid_exponent(L, 2, bound, true));
  DerandResult r;
  r.path = "split_small";
  r.sigma = gamma * static_cast<unsigned long>(2 * L);
  Protocol q = shell(p, r.path);
  q.max_cost = tde_cost(L, gamma, TdeMode::Open) + k;
  q.body = [t, gamma, k](Session& s) {
    const size_t xi = xi_of(s), yi = yi_of(s);
    auto est = tde_run(s, *t, xi, yi, gamma, TdeMode::Open);
    // Per position, the estimated probability of emitting each bit.
    auto per_bit = [&](Party side, size_t input) {
      std::vector<std::array<mpq_class, 2>> q(k);
      for (auto& [o, v] : output_estimate(*t, side, input, est))
        if (o.kind == Output::Kind::Split)
          for (size_t i = 0; i < k; ++i)
            if (o.split[i] != Sym::Star) q[i][o.split[i] == Sym::One] += v;
      return q;
    };
    auto qa = per_bit(Party::A, xi), qb = per_bit(Party::B, yi);
    SplitString sa(k), sb(k);
    for (size_t i = 0; i < k; ++i) {
      const bool own = qa[i][0] > mpq_class(1, 3) || qa[i][1] > mpq_class(1, 3);
      if (s.send_bit(Party::A, own, "derand"))
        sa.set(i, qa[i][1] > qa[i][0] ? Sym::One : Sym::Zero);
      else
        sb.set(i, qb[i][1] > qb[i][0] ? Sym::One : Sym::Zero);
    }
    return Outputs{Output::of_split(sa), Output::of_split(sb), {}};
  };
  r.protocol = make_protocol(std::move(q));
  return r;
}

// --- xor / split via weighted GapMaj ------------------------------------------

mpq_class xor_delta(const mpq_class& eps) { return (mpq_class(1, 2) - eps) / 4; }

mpq_class xor_gamma(size_t L, const mpq_class& eps) { return pow2_inv(grid_exponent(L, 2, xor_delta(eps), false)); }

// Slot values of one player at one leaf: ⌈δ^-1⌉ entries following the
// discretized output distribution.
template <class V, class Get>
std::vector<V> slots(const Dist& d, const mpq_class& delta, const V& fallback, Get get) {
  const uint64_t D = ceil_q(1 / delta).get_ui();
  if (d.empty()) return std::vector<V>(D, fallback);
  std::vector<mpq_class> probs;
  std::vector<V> vals;
  for (auto& [o, q] : d) {
    probs.push_back(q);
    vals.push_back(get(o));
  }
  GridDist g = discretize(probs, delta);
  std::vector<V> out;
  for (size_t i = 0; i < vals.size(); ++i)
    for (uint64_t c = 0; c < g.counts[i]; ++c) out.push_back(vals[i]);
  return out;
}

BitString encode_split(const SplitString& v) {
  BitString b(2 * v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    b.set(2 * i, v[i] == Sym::Star);
    b.set(2 * i + 1, v[i] == Sym::One);
  }
  return b;
}

DerandRows build_rows(const LeafTable& t, size_t xi, size_t yi, const std::vector<mpq_class>& est,
                      const mpq_class& eps) {
  const Protocol& p = *t.protocol;
  const size_t k = p.output_len;
  const mpq_class delta = xor_delta(eps);
  DerandRows rows;
  rows.k = k;
  rows.D = ceil_q(1 / delta).get_ui();
  rows.split = p.model == Model::Split;
  for (size_t w = 0; w < t.leaves.size(); ++w) {
    DerandRows::Leaf leaf;
    leaf.weight = est[w];
    Dist da = t.out_dist(Party::A, xi, w), db = t.out_dist(Party::B, yi, w);
    if (rows.split) {
      auto get = [](const Output& o) { return o.split; };
      leaf.sa = slots<SplitString>(da, delta, SplitString(k), get);
      leaf.sb = slots<SplitString>(db, delta, SplitString(k), get);
    } else {
      auto get = [k](const Output& o) { return bits_of(o, k); };
      leaf.a = slots<BitString>(da, delta, BitString(k), get);
      leaf.b = slots<BitString>(db, delta, BitString(k), get);
    }
    rows.leaves.push_back(std::move(leaf));
  }
  return rows;
}

DerandResult derand_gapmaj(TablePtr t, const mpq_class& eps) {
  const Protocol& p = *t->protocol;
  const size_t L = t->leaves.size(), k = p.output_len;
  const bool split = p.model == Model::Split;
  const mpq_class gamma = xor_gamma(L, eps);
  const uint64_t D = ceil_q(1 / xor_delta(eps)).get_ui();
  DerandResult r;
  r.path = split ? "split_gapmaj" : "xor_gapmaj";
  r.sigma = gamma * static_cast<unsigned long>(2 * L);
  Protocol q = shell(p, r.path);
  const uint64_t slot_bits = split ? 2 * k : k;
  q.max_cost = tde_cost(L, gamma, TdeMode::Open) + L * D * slot_bits;
  q.body = [t, gamma, eps, k, split](Session& s) {
    const size_t xi = xi_of(s), yi = yi_of(s);
    auto est = tde_run(s, *t, xi, yi, gamma, TdeMode::Open);
    DerandRows rows = build_rows(*t, xi, yi, est, eps);
    // Alice's rows are constant along j: she sends one value per (leaf, i)
    // and Bob, who then knows the whole instance, outputs the μ-majority.
    for (auto& leaf : rows.leaves) {
      if (split)
        for (auto& v : leaf.sa) s.send(Party::A, encode_split(v), "gapmaj");
      else
        for (auto& v : leaf.a) s.send(Party::A, v, "gapmaj");
    }
    auto weights = rows.value_weights();
    const BitString* best = nullptr;
    for (auto& [z, w] : weights)
      if (!best || w > weights.at(*best)) best = &z;
    BitString z = best ? *best : BitString(k);
    if (split) {
      SplitString out(k);
      for (size_t i = 0; i < k; ++i) out.set(i, z[i] ? Sym::One : Sym::Zero);
      return Outputs{Output::of_split(SplitString(k)), Output::of_split(out), {}};
    }
    return Outputs{Output::of(BitString(k)), Output::of(z), {}};
  };
  r.protocol = make_protocol(std::move(q));
  return r;
}

}  // namespace

std::map<BitString, mpq_class> DerandRows::value_weights() const {
  std::map<BitString, mpq_class> out;
  const mpq_class dd(static_cast<unsigned long>(D * D));
  for (auto& leaf : leaves) {
    if (leaf.weight == 0) continue;
    const mpq_class unit = leaf.weight / dd;
    if (split) {
      std::map<SplitString, uint64_t> ca, cb;
      for (auto& v : leaf.sa) ca[v]++;
      for (auto& v : leaf.sb) cb[v]++;
      for (auto& [u, nu] : ca)
        for (auto& [v, nv] : cb) {
          SplitString w = weave(u, v);
          if (!w.has_star()) out[w.to_bits()] += unit * static_cast<unsigned long>(nu * nv);
        }
    } else {
      std::map<BitString, uint64_t> ca, cb;
      for (auto& v : leaf.a) ca[v]++;
      for (auto& v : leaf.b) cb[v]++;
      for (auto& [u, nu] : ca)
        for (auto& [v, nv] : cb) out[u ^ v] += unit * static_cast<unsigned long>(nu * nv);
    }
  }
  return out;
}

GapMajInstance DerandRows::materialize(const mpq_class& eps) const {
  if (split) throw WrongModel("materialize: split rows have no XOR instance");
  std::vector<BitString> ra, rb;
  std::vector<mpq_class> mu;
  const mpq_class dd(static_cast<unsigned long>(D * D));
  for (auto& leaf : leaves)
    for (size_t i = 0; i < D; ++i)
      for (size_t j = 0; j < D; ++j) {
        ra.push_back(leaf.a[i]);
        rb.push_back(leaf.b[j]);
        mu.push_back(leaf.weight / dd);
      }
  return make_gapmaj(std::move(ra), std::move(rb), eps, std::move(mu));
}

mpq_class derand_gap(const mpq_class& eps) { return mpq_class(3, 8) + eps / 4; }

DerandRows derand_rows(const LeafTable& t, size_t xi, size_t yi, const mpq_class& eps) {
  const mpq_class gamma = xor_gamma(t.leaves.size(), eps);
  Session s(t.xs[xi], t.ys[yi], Tape::none(), Tape::none(), Tape::none());
  auto est = tde_run(s, t, xi, yi, gamma, TdeMode::Open);
  return build_rows(t, xi, yi, est, eps);
}

double derand_ceiling(Model m, uint64_t R, double eps, size_t k, bool general) {
  const double r = static_cast<double>(R), two_r = std::ldexp(1.0, static_cast<int>(R));
  const double g = 0.5 - eps;
  auto xor_form = [&] {
    const double M = 16 / (g * g) * two_r;
    return 2 * two_r * (r + std::log2(8 / g) + 1) + static_cast<double>(k) * ((5 - 2 * eps) / 4 * M + 1);
  };
  auto oot_small = [&] { return 2 * two_r * (r + std::log2(4 / (1.0 / 3 - eps)) + 1); };
  switch (m) {
    case Model::Open:
    case Model::Local: return 2 * two_r * (r + std::log2(1 / g) + 2);
    case Model::Alice:
    case Model::Bob: return two_r * (r + std::log2(1 / g) + 1);
    case Model::OneOutOfTwo:
      if (!general) return oot_small();
      return (2 * two_r + 2) * (r + std::log2(8 / g) + 1) + std::log2(static_cast<double>(k)) + 4;
    case Model::Split: return general ? xor_form() : oot_small() + static_cast<double>(k);
    case Model::Xor: return xor_form();
  }
  return 0;
}

DerandResult derand(ProtocolPtr p, const mpq_class& eps, Model model) {
  if (model != p->model) throw WrongModel("derand: model differs from the protocol's model");
  if (eps >= mpq_class(1, 2) || eps < 0) throw NotDerandomizable("derand: error must be below 1/2");
  if (p->budgets.pub) throw WrongModel("derand: public-coin protocol");
  auto t = std::make_shared<const LeafTable>(build_leaf_table(p));
  const double e = eps.get_d();
  const bool small = eps < mpq_class(1, 3);
  DerandResult r;
  bool normalized = false;
  switch (model) {
    case Model::Open:
    case Model::Local:
    case Model::Alice:
    case Model::Bob: r = derand_local(t, eps, model); break;
    case Model::OneOutOfTwo:
      if (small) {
        r = derand_oot_small(t, eps);
      } else {
        if (!t->single_speaker) {
          t = std::make_shared<const LeafTable>(build_leaf_table(oot_normalize(p)));
          normalized = true;
        }
        r = derand_oot_general(t, eps);
      }
      break;
    case Model::Split: r = small ? derand_split_small(t, eps) : derand_gapmaj(t, eps); break;
    case Model::Xor: r = derand_gapmaj(t, eps); break;
  }
  r.table = t;
  r.normalized = normalized;
  r.R = t->protocol->max_cost;
  const bool general = model == Model::Xor || !small;
  r.ceiling = derand_ceiling(model, r.R, e, p->output_len, general);
  return r;
}

}  // namespace cclab

#include "cclab/amplify.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cclab/blocks.hpp"
#include "cclab/gapmaj.hpp"

namespace cclab {

mpq_class AmplifyPlan::ledger_total() const {
  mpq_class t = 0;
  for (auto& [name, v] : ledger) t += v;
  return t;
}

namespace amp {

namespace {

void check_eps(double eps, double eps_target) {
  if (!(eps_target > 0 && eps_target < eps && eps < 0.5))
    throw DomainError("amplify: need 0 < eps_target < eps < 1/2");
}

uint64_t ceil_pos(double v) { return static_cast<uint64_t>(std::ceil(v - 1e-12)); }

double gap2(double eps) { return (0.5 - eps) * (0.5 - eps); }

}  // namespace

uint64_t standard_reps(double eps, double eps_target) {
  check_eps(eps, eps_target);
  return ceil_pos(2 * eps * (1 - eps) / gap2(eps) * std::log(2 / eps_target));
}

uint64_t xor_reps(double eps, double eps_target) {
  check_eps(eps, eps_target);
  return ceil_pos(2 * eps / gap2(eps) * std::log(4 / eps_target));
}

uint64_t split_reps(double eps, double eps_target) {
  check_eps(eps, eps_target);
  return ceil_pos(8 * eps / gap2(eps) * std::log(4 / eps_target));
}

uint64_t oot_reps(double eps, double eps_target) {
  check_eps(eps, eps_target);
  return ceil_pos(8 * eps * (1 - eps) / gap2(eps) * std::log(4 / eps_target));
}

uint64_t direct_sum_f_reps(double eps_target) { return gapmaj::sample_size(12, eps_target); }

uint64_t direct_sum_g_reps(double eps, double eps_target) {
  check_eps(eps, eps_target);
  return ceil_pos(8 * eps / gap2(eps) * std::log(12 / eps_target));
}

uint64_t oot_hash_range(double eps_target) { return ceil_pos(12 / eps_target); }

}  // namespace amp

namespace {

Output majority(const std::vector<Output>& outs) {
  std::map<Output, size_t> cnt;
  for (auto& o : outs) cnt[o]++;
  Output best;
  size_t bc = 0;
  for (auto& [o, c] : cnt)
    if (c > bc) {
      best = o;
      bc = c;
    }
  return best;
}

void fill_plan(AmplifyPlan* plan, std::string scheme, uint64_t reps, double eps, double eps_target,
               const Protocol& base, const Protocol& result,
               std::vector<std::pair<std::string, mpq_class>> ledger) {
  if (!plan) return;
  plan->scheme = std::move(scheme);
  plan->repetitions = reps;
  plan->eps = eps;
  plan->eps_target = eps_target;
  plan->base_cost = base.max_cost;
  plan->overhead = result.max_cost - reps * base.max_cost;
  plan->ledger = std::move(ledger);
}

// Budgets for `reps` sub-runs of p followed by `pub_extra` public bits.
TapeBudgets repeated(const Protocol& p, uint64_t reps, uint64_t pub_extra = 0) {
  TapeBudgets b = p.budgets * reps;
  b.pub += pub_extra;
  return b;
}

}  // namespace

ProtocolPtr amplify_standard(ProtocolPtr p, double eps, double eps_target, AmplifyPlan* plan) {
  const Model m = p->model;
  if (m != Model::Open && m != Model::Local && m != Model::Alice && m != Model::Bob)
    throw WrongModel("amplify_standard: model must be open, local or unilateral");
  const uint64_t C = amp::standard_reps(eps, eps_target);
  Protocol q = *p;
  q.id = "amp_std(" + p->id + ")";
  q.budgets = repeated(*p, C);
  q.max_cost = C * p->max_cost;
  q.body = [p, C, m](Session& s) {
    std::vector<Output> oa, ob, oo;
    for (uint64_t i = 0; i < C; ++i) {
      Outputs o = s.sub(*p, s.alice().input, s.bob().input, "base");
      oa.push_back(std::move(o.a));
      ob.push_back(std::move(o.b));
      oo.push_back(std::move(o.open));
    }
    Outputs r;
    if (m == Model::Open) r.open = majority(oo);
    if (m == Model::Local || m == Model::Alice) r.a = majority(oa);
    if (m == Model::Local || m == Model::Bob) r.b = majority(ob);
    return r;
  };
  fill_plan(plan, "standard", C, eps, eps_target, *p, q, {{"majority", mpq_class(eps_target)}});
  return make_protocol(std::move(q));
}

namespace {

// Shared driver for the XOR and split schemes: C base runs, then GapMajX on
// the run outputs through the supplied pair encodings.
template <class Row, class EncA, class EncB>
Outputs gapmaj_over_runs(Session& s, const Protocol& p, uint64_t C, double eps_half, size_t enc_len,
                         Row row_of, EncA enc_a, EncB enc_b) {
  std::vector<Output> ra(C), rb(C);
  for (uint64_t i = 0; i < C; ++i) {
    Outputs o = s.sub(p, s.alice().input, s.bob().input, "base");
    ra[i] = std::move(o.a);
    rb[i] = std::move(o.b);
  }
  auto ea = [&](size_t i, size_t j) { return enc_a(row_of(ra[i]), row_of(ra[j])); };
  auto eb = [&](size_t i, size_t j) { return enc_b(row_of(rb[i]), row_of(rb[j])); };
  auto r = gapmaj::randomgraph_run(s, C, ea, eb, enc_len, eps_half);
  s.note("candidates", static_cast<int64_t>(r.candidates));
  s.note("edges", static_cast<int64_t>(r.edges));
  return Outputs{ra[r.row], rb[r.row], {}};
}

}  // namespace

ProtocolPtr amplify_xor(ProtocolPtr p, double eps, double eps_target, AmplifyPlan* plan) {
  if (p->model != Model::Xor) throw WrongModel("amplify_xor: model must be xor");
  const uint64_t C = amp::xor_reps(eps, eps_target);
  const size_t k = p->output_len;
  const double half = eps_target / 2;
  Protocol q = *p;
  q.id = "amp_xor(" + p->id + ")";
  q.budgets = repeated(*p, C, gapmaj::randomgraph_tape(C, k, half));
  q.max_cost = C * p->max_cost + gapmaj::randomgraph_cost(C, half);
  q.body = [p, C, k, half](Session& s) {
    auto row = [](const Output& o) -> const BitString& { return o.value; };
    auto x = [](const BitString& u, const BitString& v) { return u ^ v; };
    return gapmaj_over_runs(s, *p, C, half, k, row, x, x);
  };
  mpq_class h(eps_target);
  h /= 2;
  fill_plan(plan, "xor", C, eps, eps_target, *p, q, {{"promise", h}, {"gapmaj", h}});
  return make_protocol(std::move(q));
}

ProtocolPtr amplify_split(ProtocolPtr p, double eps, double eps_target, AmplifyPlan* plan) {
  if (p->model != Model::Split) throw WrongModel("amplify_split: model must be split");
  const uint64_t C = amp::split_reps(eps, eps_target);
  const size_t k = p->output_len;
  const double half = eps_target / 2;
  Protocol q = *p;
  q.id = "amp_split(" + p->id + ")";
  q.budgets = repeated(*p, C, gapmaj::randomgraph_tape(C, 3 * k, half));
  q.max_cost = C * p->max_cost + gapmaj::randomgraph_cost(C, half);
  q.body = [p, C, k, half](Session& s) {
    const SplitGadgets& g = split_gadgets();
    auto row = [](const Output& o) -> const SplitString& { return o.split; };
    auto ea = [&g](const SplitString& u, const SplitString& v) { return gadget_encode_a(g, u, v); };
    auto eb = [&g](const SplitString& u, const SplitString& v) { return gadget_encode_b(g, u, v); };
    return gapmaj_over_runs(s, *p, C, half, 3 * k, row, ea, eb);
  };
  mpq_class h(eps_target);
  h /= 2;
  fill_plan(plan, "split", C, eps, eps_target, *p, q, {{"promise", h}, {"gapmaj", h}});
  return make_protocol(std::move(q));
}

ProtocolPtr amplify_xor_direct_sum(ProtocolPtr p_f, ProtocolPtr p_g, size_t k, double eps, double eps_target,
                                   AmplifyPlan* plan) {
  if (p_f->model != Model::Xor || p_g->model != Model::Xor)
    throw WrongModel("amplify_xor_direct_sum: both protocols must be xor");
  if (p_g->output_len != 1 || p_f->output_len != k || p_f->input_len_a != k * p_g->input_len_a ||
      p_f->input_len_b != k * p_g->input_len_b)
    throw DomainError("amplify_xor_direct_sum: p_f must compute k copies of p_g");
  const uint64_t T = amp::direct_sum_f_reps(eps_target);
  const uint64_t C = amp::direct_sum_g_reps(eps, eps_target);
  const double sixth = eps_target / 6;
  const size_t U = static_cast<size_t>(std::ceil((0.75 - eps / 2) * static_cast<double>(C)));
  Protocol q = *p_f;
  q.id = "amp_dsum(" + p_f->id + ")";
  q.budgets = repeated(*p_f, T, gapmaj::cluster_tape(T, k, sixth) + blocks::ftfd_tape(k, sixth)) +
              repeated(*p_g, C);
  q.max_cost = T * p_f->max_cost + gapmaj::cluster_cost(T, sixth) + blocks::ftfd_cost(k, sixth) +
               C * p_g->max_cost + C + 1;
  q.body = [p_f, p_g, k, T, C, sixth, U](Session& s) {
    const BitString& X = s.alice().input;
    const BitString& Y = s.bob().input;
    std::vector<BitString> ra(T), rb(T);
    for (uint64_t i = 0; i < T; ++i) {
      Outputs o = s.sub(*p_f, X, Y, "f_runs");
      ra[i] = std::move(o.a.value);
      rb[i] = std::move(o.b.value);
    }
    // Step 1: clustering directly on the runs.
    auto ea = [&](size_t i, size_t j) { return ra[i] ^ ra[j]; };
    auto eb = [&](size_t i, size_t j) { return rb[i] ^ rb[j]; };
    auto c = gapmaj::cluster_run(s, T, ea, eb, k, sixth, "eq");
    s.note("candidates", static_cast<int64_t>(c.reps.size()));
    if (c.aborted || c.reps.empty()) return Outputs{Output::of(ra[0]), Output::of(rb[0]), {}};
    const size_t i1 = c.reps[0];
    if (c.reps.size() == 1) return Outputs{Output::of(ra[i1]), Output::of(rb[i1]), {}};
    const size_t i2 = c.reps[1];
    // Step 2: critical index.
    const size_t l = blocks::ftfd_run(s, ra[i1] ^ ra[i2], rb[i1] ^ rb[i2], sixth, "ftfd");
    s.note("critical_index", static_cast<int64_t>(l));
    if (l >= k) return Outputs{Output::of(ra[i1]), Output::of(rb[i1]), {}};
    // Step 3: g on coordinate l, compared against candidate i1's bit.
    const size_t na = p_g->input_len_a, nb = p_g->input_len_b;
    const BitString xl = X.slice(l * na, na), yl = Y.slice(l * nb, nb);
    BitString a(C), b(C);
    for (uint64_t j = 0; j < C; ++j) {
      Outputs o = s.sub(*p_g, xl, yl, "g_runs");
      a.set(j, o.a.value[0] != ra[i1][l]);
      b.set(j, o.b.value[0] != rb[i1][l]);
    }
    const size_t w = blocks::ghd_run(s, a, b, U, "ghd") ? i2 : i1;
    return Outputs{Output::of(ra[w]), Output::of(rb[w]), {}};
  };
  if (plan) {
    mpq_class part(eps_target);
    part /= 6;
    fill_plan(plan, "direct_sum", T, eps, eps_target, *p_f, q,
              {{"step1_sample", part},
               {"er_component", part},
               {"edge_abort", part},
               {"eq", part},
               {"ftfd", part},
               {"ghd", part}});
    plan->secondary_repetitions = C;
  }
  return make_protocol(std::move(q));
}

ProtocolPtr oot_normalize(ProtocolPtr p) {
  if (p->model != Model::OneOutOfTwo) throw WrongModel("oot_normalize: model must be one-out-of-two");
  const size_t k = p->output_len;
  Protocol q = *p;
  q.id = "norm(" + p->id + ")";
  q.budgets.b += k;
  q.max_cost = p->max_cost + 1;
  q.body = [p, k](Session& s) {
    Outputs o = s.sub(*p, s.alice().input, s.bob().input);
    if (s.send_bit(Party::A, o.a.speaks(), "norm")) return Outputs{o.a, Output::silent(), {}};
    if (o.b.speaks()) return Outputs{Output::silent(), o.b, {}};
    return Outputs{Output::silent(), Output::of(s.bob().priv.read(k)), {}};
  };
  return make_protocol(std::move(q));
}

namespace {

BitString value_bits(const Output& o, size_t k) {
  if (o.is_value() && o.value.size() == k) return o.value;
  BitString w(k);
  if (o.kind == Output::Kind::Top && k) w = BitString::ones(k);
  return w;
}

struct Tally {
  std::map<Output, uint64_t> count;
  std::vector<Output> cands;  // > T/4 occurrences, most frequent first
};

Tally tally(const std::vector<Output>& outs, uint64_t T) {
  Tally t;
  for (auto& o : outs)
    if (o.speaks()) t.count[o]++;
  std::vector<std::pair<uint64_t, Output>> c;
  for (auto& [o, n] : t.count)
    if (4 * n > T) c.emplace_back(n, o);
  std::stable_sort(c.begin(), c.end(), [](auto& u, auto& v) { return u.first > v.first; });
  for (auto& [n, o] : c) t.cands.push_back(o);
  return t;
}

}  // namespace

ProtocolPtr amplify_oot(ProtocolPtr p, double eps, double eps_target, AmplifyPlan* plan) {
  if (p->model != Model::OneOutOfTwo) throw WrongModel("amplify_oot: model must be one-out-of-two");
  ProtocolPtr n = oot_normalize(p);
  const uint64_t T = amp::oot_reps(eps, eps_target);
  const uint64_t m = amp::oot_hash_range(eps_target);
  const size_t k = p->output_len;
  const size_t hb = ceil_log2(m);
  const size_t cw = ceil_log2(T + 1);
  Protocol q = *p;
  q.id = "amp_oot(" + p->id + ")";
  q.budgets = repeated(*n, T, LinearHash::tape_bits(k, hb));
  // 2+2 candidate counts, ≤4 hashes, ≤4 counts, 2-bit choice.
  q.max_cost = T * n->max_cost + 6 + 4 * hb + 4 * cw;
  q.body = [n, T, k, hb, cw](Session& s) {
    std::vector<Output> oa, ob;
    for (uint64_t i = 0; i < T; ++i) {
      Outputs o = s.sub(*n, s.alice().input, s.bob().input, "base");
      oa.push_back(std::move(o.a));
      ob.push_back(std::move(o.b));
    }
    Tally ta = tally(oa, T), tb = tally(ob, T);
    std::vector<Output> joint = ta.cands;
    for (auto& c : tb.cands)
      if (std::find(joint.begin(), joint.end(), c) == joint.end()) joint.push_back(c);
    s.note("cand_a", static_cast<int64_t>(ta.cands.size()));
    s.note("cand_b", static_cast<int64_t>(tb.cands.size()));
    s.note("cand_joint", static_cast<int64_t>(joint.size()));
    if (ta.cands.size() > 2) ta.cands.resize(2);
    if (tb.cands.size() > 2) tb.cands.resize(2);
    const size_t na = s.send_uint(Party::A, ta.cands.size(), 2, "oot");
    const size_t nb = s.send_uint(Party::B, tb.cands.size(), 2, "oot");
    LinearHash h = LinearHash::draw(s.pub(), k, hb);
    std::vector<BitString> H;
    for (auto& c : ta.cands) {
      H.push_back(h.apply(value_bits(c, k)));
      s.send(Party::A, H.back(), "oot");
    }
    for (auto& c : tb.cands) {
      H.push_back(h.apply(value_bits(c, k)));
      s.send(Party::B, H.back(), "oot");
    }
    auto hashed_count = [&](const Tally& t, const BitString& hv) {
      uint64_t c = 0;
      for (auto& [o, cnt] : t.count)
        if (h.apply(value_bits(o, k)) == hv) c += cnt;
      return c;
    };
    std::vector<uint64_t> total(H.size());
    for (size_t i = 0; i < H.size(); ++i)
      total[i] = s.send_uint(Party::A, hashed_count(ta, H[i]), static_cast<unsigned>(cw), "oot") +
                 hashed_count(tb, H[i]);
    if (H.empty()) return Outputs{Output::silent(), Output::of(BitString(k)), {}};
    size_t best = 0;
    for (size_t i = 1; i < H.size(); ++i)
      if (total[i] > total[best] || (total[i] == total[best] && H[i] < H[best])) best = i;
    if (H.size() > 1) s.send_uint(Party::B, best, 2, "oot");
    if (best < na) return Outputs{ta.cands[best], Output::silent(), {}};
    (void)nb;
    return Outputs{Output::silent(), tb.cands[best - na], {}};
  };
  if (plan) {
    mpq_class half(eps_target);
    half /= 2;
    mpq_class hash(6, m);
    hash.canonicalize();
    fill_plan(plan, "oot", T, eps, eps_target, *n, q, {{"runs", half}, {"hash", hash}});
  }
  return make_protocol(std::move(q));
}

namespace {

BitString enc_out(const ProblemSpec* spec, const Output& o, size_t k) {
  if (spec) return encode_value(*spec, o);
  if (!o.is_value() || o.value.size() != k) throw DomainError("convert: output is not a k-bit value");
  return o.value;
}

Output dec_out(const ProblemSpec* spec, const BitString& w) {
  return spec ? decode_value(*spec, w) : Output::of(w);
}

// Fills the star positions of `own` in order from `sym`.
BitString fill_stars(const SplitString& own, const BitString& sym) {
  BitString out(own.size());
  size_t next = 0;
  for (size_t i = 0; i < own.size(); ++i) {
    if (own[i] == Sym::Star)
      out.set(i, next < sym.size() ? sym[next++] : false);
    else
      out.set(i, own[i] == Sym::One);
  }
  return out;
}

BitString non_stars(const SplitString& v, size_t width) {
  BitString out(width);
  size_t j = 0;
  for (size_t i = 0; i < v.size() && j < width; ++i)
    if (v[i] != Sym::Star) out.set(j++, v[i] == Sym::One);
  return out;
}

}  // namespace

ProtocolPtr convert(ProtocolPtr p, Model target, const ProblemSpec* spec_in) {
  const Model from = p->model;
  const size_t k = p->output_len;
  std::shared_ptr<const ProblemSpec> spec = spec_in ? std::make_shared<const ProblemSpec>(*spec_in) : nullptr;
  if (spec && spec->k != k) throw DomainError("convert: spec output width differs from protocol");
  Protocol q = *p;
  q.id = std::string("conv_") + model_name(target) + "(" + p->id + ")";
  q.model = target;
  auto wrap = [&](uint64_t extra, std::function<Outputs(Session&, Outputs)> step, ProtocolPtr inner) {
    q.budgets = inner->budgets;
    q.max_cost = inner->max_cost + extra;
    q.body = [inner, step](Session& s) { return step(s, s.sub(*inner, s.alice().input, s.bob().input)); };
    return make_protocol(q);
  };
  if (target == Model::Open && (from == Model::Local || from == Model::Alice || from == Model::Bob)) {
    const Party who = from == Model::Bob ? Party::B : Party::A;
    return wrap(k, [spec, k, who](Session& s, Outputs o) {
      BitString w = enc_out(spec.get(), who == Party::A ? o.a : o.b, k);
      s.send(who, w, "convert");
      return Outputs{{}, {}, dec_out(spec.get(), w)};
    }, p);
  }
  if (target == Model::Open && from == Model::OneOutOfTwo) {
    return wrap(k, [spec, k](Session& s, Outputs o) {
      // After normalization exactly one side speaks; both know which.
      const Party who = o.a.speaks() ? Party::A : Party::B;
      BitString w = enc_out(spec.get(), who == Party::A ? o.a : o.b, k);
      s.send(who, w, "convert");
      return Outputs{{}, {}, dec_out(spec.get(), w)};
    }, oot_normalize(p));
  }
  if (from == Model::Xor && (target == Model::Alice || target == Model::Bob)) {
    return wrap(k, [spec, k, target](Session& s, Outputs o) {
      BitString v = o.a.value ^ o.b.value;
      s.send(target == Model::Bob ? Party::A : Party::B, target == Model::Bob ? o.a.value : o.b.value,
             "convert");
      Output r = spec ? decode_value(*spec, v) : Output::of(v);
      return target == Model::Bob ? Outputs{{}, r, {}} : Outputs{r, {}, {}};
    }, p);
  }
  if (from == Model::Split && target == Model::OneOutOfTwo) {
    const size_t half = k / 2;
    return wrap(half + 1, [spec, k, half](Session& s, Outputs o) {
      const size_t ca = k - o.a.split.stars();
      if (s.send_bit(Party::A, ca <= half, "convert")) {
        BitString sym = non_stars(o.a.split, half);
        s.send(Party::A, sym, "convert");
        return Outputs{Output::silent(), dec_out(spec.get(), fill_stars(o.b.split, sym)), {}};
      }
      BitString sym = non_stars(o.b.split, half);
      s.send(Party::B, sym, "convert");
      return Outputs{dec_out(spec.get(), fill_stars(o.a.split, sym)), Output::silent(), {}};
    }, p);
  }
  throw WrongModel(std::string("convert: no edge ") + model_name(from) + " -> " + model_name(target));
}

ProtocolPtr convert_pair_to_local(ProtocolPtr pa, ProtocolPtr pb) {
  if (pa->model != Model::Alice || pb->model != Model::Bob)
    throw WrongModel("convert_pair_to_local: need an Alice-model and a Bob-model protocol");
  if (pa->input_len_a != pb->input_len_a || pa->input_len_b != pb->input_len_b ||
      pa->output_len != pb->output_len)
    throw DomainError("convert_pair_to_local: shape mismatch");
  Protocol q = *pa;
  q.id = "pair_local(" + pa->id + "," + pb->id + ")";
  q.model = Model::Local;
  q.budgets = pa->budgets + pb->budgets;
  q.max_cost = pa->max_cost + pb->max_cost;
  q.body = [pa, pb](Session& s) {
    Outputs a = s.sub(*pa, s.alice().input, s.bob().input);
    Outputs b = s.sub(*pb, s.alice().input, s.bob().input);
    return Outputs{a.a, b.b, {}};
  };
  return make_protocol(std::move(q));
}

}  // namespace cclab

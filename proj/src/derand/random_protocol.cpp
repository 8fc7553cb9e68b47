#include <algorithm>
#include <random>

#include "cclab/derand.hpp"

namespace cclab {

namespace {

// AND of a few private tape bits; no positions means no noise.
struct Noise {
  std::vector<size_t> pos;
  bool eval(const BitString& tape) const {
    if (pos.empty()) return false;
    for (size_t p : pos)
      if (!tape[p]) return false;
    return true;
  }
};

struct LeafData {
  BitString open_val;
  std::vector<BitString> ga, gb;  // per input of each player
  Noise na, nb;
  size_t flip_a = 0, flip_b = 0;  // output position each noise flips
  Party speaker = Party::A;
  Noise chatty, mute;  // one-out-of-two: the other speaks / the speaker is silent
  std::vector<Party> owner;  // split: owner of each position
};

struct Node {
  bool leaf = false;
  Party owner = Party::A;
  std::vector<bool> table;  // message bit per owner input
  Noise noise;
  int child[2] = {-1, -1};
  LeafData data;
};

struct Tree {
  std::vector<Node> nodes;
};

class Builder {
 public:
  Builder(const RandomProtocolSpec& s, uint64_t seed) : s_(s), rng_(seed) {}

  Tree build() {
    Tree t;
    grow(t, 0);
    return t;
  }

 private:
  uint64_t below(uint64_t m) { return std::uniform_int_distribution<uint64_t>(0, m - 1)(rng_); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }

  Noise noise(size_t bits, double none) {
    Noise n;
    if (bits == 0 || coin(none)) return n;
    const size_t c = std::min<size_t>(bits, 2 + below(2));
    while (n.pos.size() < c) {
      size_t p = below(bits);
      if (std::find(n.pos.begin(), n.pos.end(), p) == n.pos.end()) n.pos.push_back(p);
    }
    return n;
  }

  BitString value() { return BitString::from_uint(below(uint64_t{1} << s_.k), s_.k); }

  std::vector<BitString> values(size_t n_in) {
    std::vector<BitString> v;
    for (uint64_t i = 0; i < (uint64_t{1} << n_in); ++i) v.push_back(value());
    return v;
  }

  LeafData leaf() {
    LeafData d;
    d.open_val = value();
    d.ga = values(s_.n_a);
    d.gb = values(s_.n_b);
    d.na = noise(s_.a_bits, 0.4);
    d.nb = noise(s_.b_bits, 0.4);
    d.flip_a = below(s_.k);
    d.flip_b = below(s_.k);
    d.speaker = coin(0.5) ? Party::A : Party::B;
    const size_t other_bits = d.speaker == Party::A ? s_.b_bits : s_.a_bits;
    const size_t own_bits = d.speaker == Party::A ? s_.a_bits : s_.b_bits;
    if (coin(0.25)) d.chatty = noise(other_bits, 0);
    if (coin(0.25)) d.mute = noise(own_bits, 0);
    for (size_t i = 0; i < s_.k; ++i) d.owner.push_back(coin(0.5) ? Party::A : Party::B);
    return d;
  }

  int grow(Tree& t, size_t depth) {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    if (depth == s_.R || (depth > 0 && coin(0.25))) {
      t.nodes[id].leaf = true;
      t.nodes[id].data = leaf();
      return id;
    }
    Node n;
    n.owner = coin(0.5) ? Party::A : Party::B;
    const size_t n_in = n.owner == Party::A ? s_.n_a : s_.n_b;
    for (uint64_t i = 0; i < (uint64_t{1} << n_in); ++i) n.table.push_back(coin(0.5));
    n.noise = noise(n.owner == Party::A ? s_.a_bits : s_.b_bits, 0.3);
    t.nodes[id] = n;
    for (int b = 0; b < 2; ++b) {
      int c = grow(t, depth + 1);
      t.nodes[id].child[b] = c;
    }
    return id;
  }

  const RandomProtocolSpec& s_;
  std::mt19937_64 rng_;
};

Output noisy(BitString v, bool flip, size_t pos) {
  if (flip) v.flip(pos);
  return Output::of(std::move(v));
}

ProtocolPtr to_protocol(std::shared_ptr<const Tree> tree, const RandomProtocolSpec& s, uint64_t seed) {
  Protocol p;
  p.id = std::string("random_") + model_name(s.model) + "_" + std::to_string(seed);
  p.model = s.model;
  p.output_len = s.k;
  p.input_len_a = s.n_a;
  p.input_len_b = s.n_b;
  p.budgets = {0, s.a_bits, s.b_bits};
  p.max_cost = s.R;
  const Model m = s.model;
  const size_t k = s.k;
  p.body = [tree, m, k, a_bits = s.a_bits, b_bits = s.b_bits](Session& ss) {
    const BitString ra = ss.alice().priv.read(a_bits), rb = ss.bob().priv.read(b_bits);
    const size_t x = ss.alice().input.to_uint(), y = ss.bob().input.to_uint();
    auto tape = [&](Party q) -> const BitString& { return q == Party::A ? ra : rb; };
    const Node* n = &tree->nodes[0];
    while (!n->leaf) {
      const bool bit = n->table[n->owner == Party::A ? x : y] != n->noise.eval(tape(n->owner));
      n = &tree->nodes[n->child[ss.send_bit(n->owner, bit, "tree")]];
    }
    const LeafData& d = n->data;
    const bool fa = d.na.eval(ra), fb = d.nb.eval(rb);
    Outputs o;
    switch (m) {
      case Model::Open: o.open = Output::of(d.open_val); break;
      case Model::Local:
        o.a = noisy(d.ga[0], fa, d.flip_a);
        o.b = noisy(d.ga[0], fb, d.flip_b);
        break;
      case Model::Alice: o.a = noisy(d.ga[x], fa, d.flip_a); break;
      case Model::Bob: o.b = noisy(d.gb[y], fb, d.flip_b); break;
      case Model::Xor:
        o.a = noisy(d.ga[x], fa, d.flip_a);
        o.b = noisy(d.gb[y], fb, d.flip_b);
        break;
      case Model::OneOutOfTwo: {
        const bool a_speaks = d.speaker == Party::A;
        const BitString& own = a_speaks ? ra : rb;
        const BitString& other = a_speaks ? rb : ra;
        Output sp = d.mute.eval(own) ? Output::silent()
                                     : (a_speaks ? noisy(d.ga[x], fa, d.flip_a) : noisy(d.gb[y], fb, d.flip_b));
        Output ot = d.chatty.eval(other) ? (a_speaks ? Output::of(d.gb[y]) : Output::of(d.ga[x])) : Output::silent();
        o.a = a_speaks ? sp : ot;
        o.b = a_speaks ? ot : sp;
        break;
      }
      case Model::Split: {
        SplitString sa(k), sb(k);
        BitString va = d.ga[x], vb = d.gb[y];
        if (fa) va.flip(d.flip_a);
        if (fb) vb.flip(d.flip_b);
        for (size_t i = 0; i < k; ++i) {
          if (d.owner[i] == Party::A)
            sa.set(i, va[i] ? Sym::One : Sym::Zero);
          else
            sb.set(i, vb[i] ? Sym::One : Sym::Zero);
        }
        o.a = Output::of_split(sa);
        o.b = Output::of_split(sb);
        break;
      }
    }
    return o;
  };
  return make_protocol(std::move(p));
}

// Most likely correct outcome per input and the resulting worst-case error.
void fill_truth(RandomProtocol& r, const RandomProtocolSpec& s) {
  const Protocol& p = *r.protocol;
  const uint64_t tapes = uint64_t{1} << (s.a_bits + s.b_bits);
  const auto zs = all_strings(s.k);
  r.truth.clear();
  r.eps = 0;
  for (auto& [x, y] : r.inputs) {
    std::vector<uint64_t> hits(zs.size(), 0);
    for (uint64_t t = 0; t < tapes; ++t) {
      RunRecord rec = execute(p, x, y, enumerated_tapes(p.budgets, t));
      for (size_t z = 0; z < zs.size(); ++z)
        if (resolve(p.model, rec, Output::of(zs[z]))) hits[z]++;
    }
    size_t best = 0;
    for (size_t z = 1; z < zs.size(); ++z)
      if (hits[z] > hits[best]) best = z;
    r.truth.push_back(Output::of(zs[best]));
    mpq_class e(static_cast<unsigned long>(tapes - hits[best]), static_cast<unsigned long>(tapes));
    e.canonicalize();
    if (e > r.eps) r.eps = e;
  }
}

}  // namespace

Truth RandomProtocol::truth_fn() const {
  auto in = inputs;
  auto tr = truth;
  return [in, tr](const BitString& x, const BitString& y) {
    for (size_t i = 0; i < in.size(); ++i)
      if (in[i].first == x && in[i].second == y) return tr[i];
    throw DomainError("random protocol truth: input outside the domain");
  };
}

RandomProtocol random_private_protocol(const RandomProtocolSpec& spec, uint64_t seed) {
  if (spec.k == 0 || spec.R == 0) throw DomainError("random_private_protocol: need k, R >= 1");
  if (spec.n_a + spec.n_b + spec.a_bits + spec.b_bits > kDefaultOracleBits)
    throw OracleInfeasible("random_private_protocol: too many enumerated bits");
  for (uint64_t attempt = 0;; ++attempt) {
    const uint64_t s = derive_seed(seed, attempt);
    RandomProtocol r;
    r.seed = s;
    r.inputs = full_domain(spec.n_a, spec.n_b);
    r.protocol = to_protocol(std::make_shared<const Tree>(Builder(spec, s).build()), spec, s);
    fill_truth(r, spec);
    if (r.eps < mpq_class(1, 2)) return r;
  }
}

}  // namespace cclab

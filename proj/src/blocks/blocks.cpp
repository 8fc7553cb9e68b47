#include "cclab/blocks.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace cclab {

LinearHash LinearHash::draw(Tape& t, size_t n, size_t b) {
  LinearHash h;
  h.n = n;
  h.b = b;
  h.rows.reserve(b);
  for (size_t r = 0; r < b; ++r) h.rows.push_back(t.read(n));
  return h;
}

BitString LinearHash::apply(const BitString& x) const {
  if (x.size() != n) throw DomainError("LinearHash: input length mismatch");
  BitString d(b);
  const auto& xw = x.words();
  for (size_t r = 0; r < b; ++r) {
    const auto& rw = rows[r].words();
    unsigned par = 0;
    for (size_t i = 0; i < xw.size(); ++i) par ^= std::popcount(rw[i] & xw[i]) & 1u;
    d.set(r, par);
  }
  return d;
}

BitString LinearHash::apply_prefix(const BitString& x, size_t len) const {
  BitString m = x;
  auto& w = m.words_mut();
  for (size_t i = 0; i < w.size(); ++i) {
    size_t lo = 64 * i;
    if (lo >= len)
      w[i] = 0;
    else if (len - lo < 64)
      w[i] &= ~0ULL << (64 - (len - lo));
  }
  return apply(m);
}

size_t digest_bits(double num, double eps) {
  if (!(eps > 0)) throw DomainError("digest_bits: eps must be positive");
  size_t b = 0;
  while (std::ldexp(static_cast<long double>(eps), static_cast<int>(b)) < static_cast<long double>(num)) ++b;
  return b;
}

namespace blocks {

bool eq_run(Session& s, const BitString& x, const BitString& y, size_t b, const std::string& tag) {
  LinearHash h = LinearHash::draw(s.pub(), x.size(), b);
  BitString dx = h.apply(x);
  s.send(Party::A, dx, tag);
  return s.send_bit(Party::B, h.apply(y) == dx, tag);
}

size_t eq_batch_digest(size_t m, double eps) { return digest_bits(3.0 * static_cast<double>(m), eps); }
uint64_t eq_batch_cost(size_t m, double eps) { return m * (eq_batch_digest(m, eps) + 1); }
uint64_t eq_batch_tape(size_t m, size_t n, double eps) { return LinearHash::tape_bits(n, eq_batch_digest(m, eps)); }

std::vector<bool> eq_batch_run(Session& s, const std::vector<BitString>& xs, const std::vector<BitString>& ys,
                               double eps, const std::string& tag, size_t digest_m) {
  const size_t m = xs.size();
  if (ys.size() != m) throw DomainError("eq_batch_run: instance count mismatch");
  std::vector<bool> out(m);
  if (m == 0) return out;
  const size_t n = xs[0].size(), b = eq_batch_digest(digest_m ? digest_m : m, eps);
  LinearHash h = LinearHash::draw(s.pub(), n, b);
  std::vector<BitString> dx(m);
  for (size_t i = 0; i < m; ++i) {
    dx[i] = h.apply(xs[i]);
    s.send(Party::A, dx[i], tag);
  }
  for (size_t i = 0; i < m; ++i) out[i] = s.send_bit(Party::B, h.apply(ys[i]) == dx[i], tag);
  return out;
}

size_t ftfd_steps(size_t n) { return ceil_log2(n + 1); }
size_t ftfd_digest(size_t n, double eps) { return digest_bits(static_cast<double>(ftfd_steps(n)), eps); }
uint64_t ftfd_cost(size_t n, double eps) { return ftfd_steps(n) * (ftfd_digest(n, eps) + 1); }
uint64_t ftfd_tape(size_t n, double eps) { return ftfd_steps(n) * LinearHash::tape_bits(n, ftfd_digest(n, eps)); }

size_t ftfd_run(Session& s, const BitString& x, const BitString& y, double eps, const std::string& tag) {
  const size_t n = x.size();
  if (y.size() != n) throw DomainError("ftfd_run: length mismatch");
  const size_t b = ftfd_digest(n, eps);
  // Invariant: prefixes of length lo agree; the answer lies in [lo, hi].
  size_t lo = 0, hi = n;
  while (lo < hi) {
    size_t mid = lo + (hi - lo + 1) / 2;
    LinearHash h = LinearHash::draw(s.pub(), n, b);
    BitString dx = h.apply_prefix(x, mid);
    s.send(Party::A, dx, tag);
    if (s.send_bit(Party::B, h.apply_prefix(y, mid) == dx, tag))
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

bool ghd_run(Session& s, const BitString& a, const BitString& b, size_t U, const std::string& tag) {
  s.send(Party::A, a, tag);
  return s.send_bit(Party::B, (a ^ b).popcount() >= U, tag);
}

}  // namespace blocks

namespace {

Output bit_out(bool v) { return Output::of(BitString::from_uint(v, 1)); }

}  // namespace

ProtocolPtr eq_protocol(size_t n, double eps) {
  if (!(eps > 0 && eps < 0.5)) throw DomainError("eq_protocol: need 0 < eps < 1/2");
  const size_t b = digest_bits(1, eps);
  Protocol p;
  p.id = "eq";
  p.model = Model::Local;
  p.output_len = 1;
  p.input_len_a = p.input_len_b = n;
  p.budgets.pub = LinearHash::tape_bits(n, b);
  p.max_cost = b + 1;
  p.body = [b](Session& s) {
    bool v = blocks::eq_run(s, s.alice().input, s.bob().input, b);
    return Outputs{bit_out(v), bit_out(v), bit_out(v)};
  };
  return make_protocol(std::move(p));
}

ProtocolPtr eq_batch_protocol(size_t k, size_t n, double eps) {
  if (!(eps > 0 && eps < 0.5)) throw DomainError("eq_batch_protocol: need 0 < eps < 1/2");
  Protocol p;
  p.id = "eq_batch";
  p.model = Model::Local;
  p.output_len = k;
  p.input_len_a = p.input_len_b = k * n;
  p.budgets.pub = blocks::eq_batch_tape(k, n, eps);
  p.max_cost = blocks::eq_batch_cost(k, eps);
  p.body = [k, n, eps](Session& s) {
    std::vector<BitString> xs, ys;
    for (size_t i = 0; i < k; ++i) {
      xs.push_back(s.alice().input.slice(i * n, n));
      ys.push_back(s.bob().input.slice(i * n, n));
    }
    auto v = blocks::eq_batch_run(s, xs, ys, eps);
    BitString z(k);
    for (size_t i = 0; i < k; ++i) z.set(i, v[i]);
    return Outputs{Output::of(z), Output::of(z), Output::of(z)};
  };
  return make_protocol(std::move(p));
}

ProtocolPtr ftfd_protocol(size_t n, double eps) {
  if (!(eps > 0 && eps < 0.5)) throw DomainError("ftfd_protocol: need 0 < eps < 1/2");
  Protocol p;
  p.id = "ftfd";
  p.model = Model::Local;
  p.output_len = problems::index_width(n);
  p.input_len_a = p.input_len_b = n;
  p.budgets.pub = blocks::ftfd_tape(n, eps);
  p.max_cost = blocks::ftfd_cost(n, eps);
  p.body = [n, eps](Session& s) {
    Output v = problems::index_value(blocks::ftfd_run(s, s.alice().input, s.bob().input, eps), n);
    return Outputs{v, v, v};
  };
  return make_protocol(std::move(p));
}

ProtocolPtr ghd_protocol(size_t n, size_t L, size_t U) {
  if (!(L < U && U <= n)) throw DomainError("ghd_protocol: need 0 <= L < U <= n");
  Protocol p;
  p.id = "ghd";
  p.model = Model::Open;
  p.output_len = 1;
  p.input_len_a = p.input_len_b = n;
  p.max_cost = n + 1;
  p.body = [U](Session& s) {
    Output v = bit_out(blocks::ghd_run(s, s.alice().input, s.bob().input, U));
    return Outputs{v, v, v};
  };
  return make_protocol(std::move(p));
}

namespace {

Protocol shell(std::string id, Model m, size_t n, size_t k) {
  Protocol p;
  p.id = std::move(id);
  p.model = m;
  p.output_len = k;
  p.input_len_a = p.input_len_b = n;
  return p;
}

SplitString own_positions(const BitString& v, int parity) {
  SplitString s(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    if (static_cast<int>(i % 2) == parity) s.set(i, v[i] ? Sym::One : Sym::Zero);
  return s;
}

SplitString all_of(const BitString& v) {
  SplitString s(v.size());
  for (size_t i = 0; i < v.size(); ++i) s.set(i, v[i] ? Sym::One : Sym::Zero);
  return s;
}

// Output of a player who knows the value, shaped for the model.
Output speak(Model m, const BitString& v) {
  switch (m) {
    case Model::Split: return Output::of_split(all_of(v));
    default: return Output::of(v);
  }
}

// Output of the other player when one player carries the whole value.
Output quiet(Model m, size_t k) {
  switch (m) {
    case Model::OneOutOfTwo: return Output::silent();
    case Model::Split: return Output::of_split(SplitString(k));
    case Model::Xor: return Output::of(BitString(k));
    default: return Output::none();
  }
}

}  // namespace

ProtocolPtr separation_protocol(const std::string& name, size_t n, double eps, size_t t) {
  if (name == "XOR") {
    Protocol p = shell("sep:XOR", Model::Xor, n, n);
    p.body = [](Session& s) { return Outputs{Output::of(s.alice().input), Output::of(s.bob().input), {}}; };
    return make_protocol(std::move(p));
  }
  if (name == "SplitId") {
    Protocol p = shell("sep:SplitId", Model::Split, n, n);
    p.body = [](Session& s) {
      return Outputs{Output::of_split(own_positions(s.alice().input, 0)),
                     Output::of_split(own_positions(s.bob().input, 1)), {}};
    };
    return make_protocol(std::move(p));
  }
  if (name == "IdA") {
    Protocol p = shell("sep:IdA", Model::Alice, n, n);
    p.body = [](Session& s) { return Outputs{Output::of(s.alice().input), {}, {}}; };
    return make_protocol(std::move(p));
  }
  if (name == "IdB") {
    Protocol p = shell("sep:IdB", Model::Bob, n, n);
    p.body = [](Session& s) { return Outputs{{}, Output::of(s.bob().input), {}}; };
    return make_protocol(std::move(p));
  }
  if (name == "CondId") {
    Protocol p = shell("sep:CondId", Model::OneOutOfTwo, n, n);
    p.max_cost = 2;
    p.body = [](Session& s) {
      bool x0 = s.send_bit(Party::A, s.alice().input[0]);
      bool y0 = s.send_bit(Party::B, s.bob().input[0]);
      if (x0 == y0) return Outputs{Output::of(s.alice().input), Output::silent(), {}};
      return Outputs{Output::silent(), Output::of(s.bob().input), {}};
    };
    return make_protocol(std::move(p));
  }
  if (name == "EQout") {
    const size_t b = digest_bits(1, eps);
    Protocol p = shell("sep:EQout", Model::Local, n, n + 1);
    p.budgets.pub = LinearHash::tape_bits(n, b);
    p.max_cost = b + 1;
    p.body = [b](Session& s) {
      if (blocks::eq_run(s, s.alice().input, s.bob().input, b))
        return Outputs{Output::of(s.alice().input), Output::of(s.bob().input), {}};
      return Outputs{Output::top(), Output::top(), {}};
    };
    return make_protocol(std::move(p));
  }
  if (name == "MAX") {
    Protocol p = shell("sep:MAX", Model::OneOutOfTwo, n, n);
    p.budgets.pub = blocks::ftfd_tape(n, eps);
    p.max_cost = blocks::ftfd_cost(n, eps) + 1;
    p.body = [n, eps](Session& s) {
      const BitString& x = s.alice().input;
      size_t l = blocks::ftfd_run(s, x, s.bob().input, eps);
      // Alice announces whether x >= y given the first difference l.
      if (s.send_bit(Party::A, l == n || x[l])) return Outputs{Output::of(x), Output::silent(), {}};
      return Outputs{Output::silent(), Output::of(s.bob().input), {}};
    };
    return make_protocol(std::move(p));
  }
  if (name == "t-FtFD") {
    const size_t w = problems::index_width(n), len = t * w;
    Protocol p = shell("sep:t-FtFD", Model::OneOutOfTwo, n, w);
    p.budgets.pub = blocks::ftfd_tape(len, eps);
    p.max_cost = blocks::ftfd_cost(len, eps);
    p.body = [n, t, w, len, eps](Session& s) {
      BitString sx = problems::t_ftfd_encode(s.alice().input, t);
      BitString sy = problems::t_ftfd_encode(s.bob().input, t);
      size_t l = blocks::ftfd_run(s, sx, sy, eps);
      if (l == len) return Outputs{problems::index_value(n, n), Output::silent(), {}};
      size_t blk = l / w;
      // The player with a 0 at the difference holds a genuine index there.
      Output oa = sx[l] ? Output::silent() : Output::of(sx.slice(blk * w, w));
      Output ob = sy[l] ? Output::silent() : Output::of(sy.slice(blk * w, w));
      return Outputs{oa, ob, {}};
    };
    return make_protocol(std::move(p));
  }
  if (name == "t-INT") {
    const size_t w = problems::index_width(n);
    Protocol p = shell("sep:t-INT", Model::Bob, n, n);
    p.max_cost = t * w;
    p.body = [n, t, w](Session& s) {
      BitString sx = problems::t_ftfd_encode(s.alice().input, t);
      s.send(Party::A, sx);
      BitString z(n);
      for (size_t j = 0; j < t; ++j) {
        uint64_t i = sx.slice(j * w, w).to_uint();
        if (i < n && s.bob().input[i]) z.set(i, true);
      }
      return Outputs{{}, Output::of(z), {}};
    };
    return make_protocol(std::move(p));
  }
  throw DomainError("separation_protocol: unknown problem " + name);
}

BitString encode_value(const ProblemSpec& spec, const Output& v) {
  if (spec.alphabet != Alphabet::BitsOrTop) {
    if (!v.is_value() || v.value.size() != spec.k) throw DomainError("encode_value: bad value");
    return v.value;
  }
  BitString w(spec.k);
  if (v.kind == Output::Kind::Top) {
    w.set(0, true);
    return w;
  }
  if (!v.is_value() || v.value.size() + 1 != spec.k) throw DomainError("encode_value: bad value");
  for (size_t i = 0; i < v.value.size(); ++i) w.set(i + 1, v.value[i]);
  return w;
}

Output decode_value(const ProblemSpec& spec, const BitString& w) {
  if (spec.alphabet != Alphabet::BitsOrTop) return Output::of(w);
  if (w[0]) return Output::top();
  return Output::of(w.slice(1, w.size() - 1));
}

Truth model_truth(const ProblemSpec& spec, Model model) {
  if (spec.alphabet != Alphabet::BitsOrTop || (model != Model::Split && model != Model::Xor)) return spec.truth();
  return [spec](const BitString& x, const BitString& y) { return Output::of(encode_value(spec, spec.evaluate(x, y))); };
}

namespace {

// Alice sends x; Bob evaluates and, when `reply`, sends the encoded value.
ProtocolPtr exchange_protocol(const ProblemSpec& spec, Model m) {
  Protocol p;
  p.id = std::string("det:") + spec.name + ":" + model_name(m);
  p.model = m;
  p.output_len = spec.k;
  p.input_len_a = spec.n_a;
  p.input_len_b = spec.n_b;
  const bool bob_first = m == Model::Alice;
  const bool reply = m == Model::Open || m == Model::Local;
  p.max_cost = (bob_first ? spec.n_b : spec.n_a) + (reply ? spec.k : 0);
  p.body = [spec, m, bob_first, reply](Session& s) {
    const BitString& x = s.alice().input;
    const BitString& y = s.bob().input;
    if (bob_first) {
      s.send(Party::B, y);
      return Outputs{spec.eval(x, y), {}, {}};
    }
    s.send(Party::A, x);
    Output v = spec.eval(x, y);
    if (reply) {
      BitString w = encode_value(spec, v);
      s.send(Party::B, w);
      Output seen = decode_value(spec, w);
      return Outputs{seen, seen, seen};
    }
    if (m == Model::Bob) return Outputs{{}, v, {}};
    BitString w = encode_value(spec, v);
    if (m == Model::OneOutOfTwo) return Outputs{Output::silent(), v, {}};
    return Outputs{quiet(m, spec.k), speak(m, w), {}};
  };
  return make_protocol(std::move(p));
}

// Zero- or low-cost constructions that fit `m` for `spec`, if any.
ProtocolPtr special_protocol(const ProblemSpec& spec, Model m) {
  const size_t n = spec.n_a, k = spec.k;
  auto holder = [&](bool alice_holds) -> ProtocolPtr {
    Model own = alice_holds ? Model::Alice : Model::Bob;
    if (m != own && m != Model::OneOutOfTwo && m != Model::Split && m != Model::Xor) return nullptr;
    Protocol p = shell(std::string("det:") + spec.name + ":" + model_name(m), m, n, k);
    p.body = [m, k, alice_holds](Session& s) {
      const BitString& v = alice_holds ? s.alice().input : s.bob().input;
      Output on = speak(m, v);
      Output off = m == Model::Alice || m == Model::Bob ? Output::none() : quiet(m, k);
      return alice_holds ? Outputs{on, off, {}} : Outputs{off, on, {}};
    };
    return make_protocol(std::move(p));
  };
  if (spec.name == "IdA") return holder(true);
  if (spec.name == "IdB") return holder(false);
  if (spec.name == "XOR" && m == Model::Xor) return separation_protocol("XOR", n, 0.25);
  if (spec.name == "SplitId" && m == Model::Split) return separation_protocol("SplitId", n, 0.25);
  if (spec.name == "CondId" &&
      (m == Model::OneOutOfTwo || m == Model::Split || m == Model::Xor)) {
    Protocol p = shell(std::string("det:CondId:") + model_name(m), m, n, k);
    p.max_cost = 2;
    p.body = [m, k](Session& s) {
      bool x0 = s.send_bit(Party::A, s.alice().input[0]);
      bool y0 = s.send_bit(Party::B, s.bob().input[0]);
      if (x0 == y0) return Outputs{speak(m, s.alice().input), quiet(m, k), {}};
      return Outputs{quiet(m, k), speak(m, s.bob().input), {}};
    };
    return make_protocol(std::move(p));
  }
  return nullptr;
}

}  // namespace

ProtocolPtr deterministic_protocol(const ProblemSpec& spec, Model m) {
  if (spec.promise) throw DomainError("deterministic_protocol: total functions only");
  ProtocolPtr best = exchange_protocol(spec, m);
  if (ProtocolPtr sp = special_protocol(spec, m); sp && sp->max_cost <= best->max_cost) best = sp;
  return best;
}

}  // namespace cclab

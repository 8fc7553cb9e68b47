#include "cclab/engine.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <mutex>

namespace cclab {

const char* model_name(Model m) {
  switch (m) {
    case Model::Open: return "open";
    case Model::Local: return "local";
    case Model::Alice: return "alice";
    case Model::Bob: return "bob";
    case Model::OneOutOfTwo: return "oot";
    case Model::Split: return "split";
    case Model::Xor: return "xor";
  }
  return "?";
}

Model parse_model(const std::string& s) {
  for (Model m : {Model::Open, Model::Local, Model::Alice, Model::Bob, Model::OneOutOfTwo, Model::Split,
                  Model::Xor})
    if (s == model_name(m)) return m;
  throw DomainError("unknown model: " + s);
}

int model_level(Model m) {
  switch (m) {
    case Model::Open: return 0;
    case Model::Local: return 1;
    case Model::Alice:
    case Model::Bob: return 2;
    case Model::OneOutOfTwo: return 3;
    case Model::Split: return 4;
    case Model::Xor: return 5;
  }
  return -1;
}

bool is_weaker(Model a, Model b) { return model_level(a) > model_level(b); }

bool Output::operator==(const Output& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Value: return value == o.value;
    case Kind::Split: return split == o.split;
    default: return true;
  }
}

bool Output::operator<(const Output& o) const {
  if (kind != o.kind) return kind < o.kind;
  if (kind == Kind::Value) return value < o.value;
  if (kind == Kind::Split) return split < o.split;
  return false;
}

std::string Output::str() const {
  switch (kind) {
    case Kind::None: return "-";
    case Kind::Value: return value.str();
    case Kind::Top: return "T";
    case Kind::Silent: return "_";
    case Kind::Split: return split.str();
  }
  return "?";
}

ProtocolPtr make_protocol(Protocol p) { return std::make_shared<const Protocol>(std::move(p)); }

bool RunRecord::operator==(const RunRecord& o) const {
  return transcript == o.transcript && cost == o.cost && out_a == o.out_a && out_b == o.out_b &&
         open == o.open && aborted == o.aborted && parts == o.parts &&
         stats == o.stats;
}

Session::Session(const BitString& x, const BitString& y, Tape pub, Tape a, Tape b)
    : Session(x, y, std::move(pub), std::move(a), std::move(b), std::make_shared<Wire>()) {}

Session::Session(const BitString& x, const BitString& y, Tape pub, Tape a, Tape b, std::shared_ptr<Wire> w)
    : x_(x), y_(y), tp_(std::move(pub)), ta_(std::move(a)), tb_(std::move(b)), wire_(std::move(w)) {}

void Session::charge(uint64_t n, const std::string& tag) {
  const std::string& t = !wire_->tag_stack.empty() ? wire_->tag_stack.front() : tag;
  wire_->parts[t] += n;
}

void Session::send(Party from, const BitString& msg, const std::string& tag) {
  wire_->buf.append(msg);
  last_owner_ = from;
  charge(msg.size(), tag);
}

bool Session::send_bit(Party from, bool b, const std::string& tag) {
  wire_->buf.push(b);
  last_owner_ = from;
  charge(1, tag);
  return b;
}

uint64_t Session::send_uint(Party from, uint64_t v, unsigned width, const std::string& tag) {
  send(from, BitString::from_uint(v, width), tag);
  return v;
}

Outputs Session::sub(const Protocol& p, const BitString& x, const BitString& y, const std::string& tag) {
  if (x.size() != p.input_len_a || y.size() != p.input_len_b)
    throw DomainError("sub-run input length mismatch for " + p.id);
  Session child(x, y, tp_.take(p.budgets.pub), ta_.take(p.budgets.a), tb_.take(p.budgets.b), wire_);
  if (!tag.empty()) wire_->tag_stack.push_back(tag);
  uint64_t before = cost();
  Outputs out = p.body(child);
  if (!tag.empty()) wire_->tag_stack.pop_back();
  if (cost() - before > p.max_cost) throw std::logic_error("sub-run exceeded max_cost: " + p.id);
  return out;
}

RunRecord Session::finish(Outputs out) {
  RunRecord r;
  r.transcript = wire_->buf.freeze();
  r.cost = r.transcript.size();
  r.out_a = std::move(out.a);
  r.out_b = std::move(out.b);
  r.open = std::move(out.open);
  r.aborted = wire_->aborted;
  r.stats = wire_->stats;
  for (auto& [k, v] : wire_->parts)
    if (v) r.parts[k] = v;
  return r;
}

Tapes seeded_tapes(const Protocol& p, uint64_t seed) {
  return {Tape::seeded(derive_seed(seed, 0x9b), p.budgets.pub), Tape::seeded(derive_seed(seed, 0xa1), p.budgets.a),
          Tape::seeded(derive_seed(seed, 0xb0), p.budgets.b)};
}

RunRecord execute(const Protocol& p, const BitString& x, const BitString& y, Tapes tapes) {
  if (x.size() != p.input_len_a || y.size() != p.input_len_b)
    throw DomainError("execute: input length mismatch for " + p.id);
  if (tapes.pub.budget() < p.budgets.pub || tapes.a.budget() < p.budgets.a || tapes.b.budget() < p.budgets.b)
    throw DomainError("execute: tapes shorter than declared budgets for " + p.id);
  Session s(x, y, std::move(tapes.pub), std::move(tapes.a), std::move(tapes.b));
  Outputs out = p.body(s);
  RunRecord r = s.finish(std::move(out));
  if (r.cost > p.max_cost) throw std::logic_error("execute: cost above max_cost for " + p.id);
  return r;
}

namespace {

bool same_value(const Output& o, const Output& truth) {
  if (truth.kind == Output::Kind::Top) return o.kind == Output::Kind::Top;
  return o.kind == Output::Kind::Value && o.value == truth.value;
}

void need_kind(bool ok, const char* what) {
  if (!ok) throw DomainError(std::string("resolve: record does not match model ") + what);
}

}  // namespace

bool resolve(Model model, const RunRecord& r, const Output& truth) {
  if (r.aborted) return false;
  switch (model) {
    case Model::Open: return same_value(r.open, truth);
    case Model::Local: return same_value(r.out_a, truth) && same_value(r.out_b, truth);
    case Model::Alice: return same_value(r.out_a, truth);
    case Model::Bob: return same_value(r.out_b, truth);
    case Model::OneOutOfTwo:
      return (same_value(r.out_a, truth) && r.out_b.kind == Output::Kind::Silent) ||
             (r.out_a.kind == Output::Kind::Silent && same_value(r.out_b, truth));
    case Model::Split: {
      need_kind(r.out_a.kind == Output::Kind::Split && r.out_b.kind == Output::Kind::Split, "split");
      if (truth.kind != Output::Kind::Value || r.out_a.split.size() != truth.value.size()) return false;
      SplitString w = weave(r.out_a.split, r.out_b.split);
      if (w.has_star()) return false;
      return w.to_bits() == truth.value;
    }
    case Model::Xor: {
      need_kind(r.out_a.kind == Output::Kind::Value && r.out_b.kind == Output::Kind::Value, "xor");
      if (truth.kind != Output::Kind::Value || r.out_a.value.size() != truth.value.size()) return false;
      return (r.out_a.value ^ r.out_b.value) == truth.value;
    }
  }
  return false;
}

std::vector<BitString> all_strings(size_t n) {
  if (n > 24) throw OracleInfeasible("all_strings: n too large");
  std::vector<BitString> v;
  v.reserve(size_t{1} << n);
  for (uint64_t i = 0; i < (uint64_t{1} << n); ++i) v.push_back(BitString::from_uint(i, n));
  return v;
}

std::vector<InputPair> full_domain(size_t na, size_t nb) {
  std::vector<InputPair> d;
  auto xs = all_strings(na), ys = all_strings(nb);
  for (auto& x : xs)
    for (auto& y : ys) d.emplace_back(x, y);
  return d;
}

double hoeffding_radius(uint64_t trials, double confidence) {
  return std::sqrt(std::log(2.0 / (1.0 - confidence)) / (2.0 * static_cast<double>(trials)));
}

Tapes enumerated_tapes(const TapeBudgets& b, uint64_t idx) {
  uint64_t vb = b.b ? idx & ((uint64_t{1} << b.b) - 1) : 0;
  idx >>= b.b;
  uint64_t va = b.a ? idx & ((uint64_t{1} << b.a) - 1) : 0;
  idx >>= b.a;
  return {Tape::of(BitString::from_uint(idx, b.pub)), Tape::of(BitString::from_uint(va, b.a)),
          Tape::of(BitString::from_uint(vb, b.b))};
}

namespace {

void check_oracle(const Protocol& p, unsigned bound) {
  if (p.budgets.total() > bound || p.budgets.total() > 40)
    throw OracleInfeasible("tape budget " + std::to_string(p.budgets.total()) + " bits over oracle bound for " +
                           p.id);
}

bool run_ok(const Protocol& p, const InputPair& in, const Output& truth, uint64_t idx) {
  RunRecord r = execute(p, in.first, in.second, enumerated_tapes(p.budgets, idx));
  return resolve(p.model, r, truth);
}

// Failure counts per input; parallel over tape assignments when `par`.
std::vector<uint64_t> fail_counts(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                                  bool par) {
  const uint64_t space = uint64_t{1} << p.budgets.total();
  std::vector<uint64_t> fails(inputs.size(), 0);
  for (size_t i = 0; i < inputs.size(); ++i) {
    const Output truth = f(inputs[i].first, inputs[i].second);
    uint64_t c = 0;
    if (par) {
      std::exception_ptr err;
      std::mutex mu;
#pragma omp parallel for reduction(+ : c) schedule(static)
      for (int64_t t = 0; t < static_cast<int64_t>(space); ++t) {
        try {
          if (!run_ok(p, inputs[i], truth, static_cast<uint64_t>(t))) ++c;
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
        }
      }
      if (err) std::rethrow_exception(err);
    } else {
      for (uint64_t t = 0; t < space; ++t)
        if (!run_ok(p, inputs[i], truth, t)) ++c;
    }
    fails[i] = c;
  }
  return fails;
}

ErrorReport worst_of(const std::vector<uint64_t>& fails, unsigned total_bits) {
  ErrorReport r;
  r.exact = true;
  mpz_class space = 1;
  space <<= total_bits;
  for (size_t i = 0; i < fails.size(); ++i) {
    mpq_class e(mpz_class(static_cast<unsigned long>(fails[i])), space);
    e.canonicalize();
    if (i == 0 || e > r.exact_value) {
      r.exact_value = e;
      r.worst_input = i;
    }
  }
  r.estimate = r.exact_value.get_d();
  return r;
}

}  // namespace

ErrorReport exact_error(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs, unsigned bound) {
  check_oracle(p, bound);
  return worst_of(fail_counts(p, f, inputs, true), static_cast<unsigned>(p.budgets.total()));
}

ErrorReport exact_error_serial(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                               unsigned bound) {
  check_oracle(p, bound);
  return worst_of(fail_counts(p, f, inputs, false), static_cast<unsigned>(p.budgets.total()));
}

ErrorReport exact_error_dist(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                             const std::vector<mpq_class>& mu, unsigned bound) {
  check_oracle(p, bound);
  if (mu.size() != inputs.size()) throw DomainError("exact_error_dist: weight count mismatch");
  auto fails = fail_counts(p, f, inputs, true);
  mpz_class space = 1;
  space <<= static_cast<unsigned>(p.budgets.total());
  ErrorReport r;
  r.exact = true;
  r.distributional = true;
  for (size_t i = 0; i < fails.size(); ++i) {
    mpq_class f(mpz_class(static_cast<unsigned long>(fails[i])), space);
    f.canonicalize();
    r.exact_value += mu[i] * f;
  }
  r.exact_value.canonicalize();
  r.estimate = r.exact_value.get_d();
  return r;
}

namespace {

ErrorReport estimate_impl(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                          uint64_t trials, double confidence, uint64_t seed, bool par) {
  if (trials < 1) throw DomainError("estimate_error: trials must be >= 1");
  ErrorReport r;
  r.trials = trials;
  r.radius = hoeffding_radius(trials, confidence);
  uint64_t worst = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    const Output truth = f(inputs[i].first, inputs[i].second);
    auto one = [&](uint64_t t) {
      RunRecord rec = execute(p, inputs[i].first, inputs[i].second, seeded_tapes(p, derive_seed(seed, i, t)));
      return resolve(p.model, rec, truth) ? 0 : 1;
    };
    uint64_t c = 0;
    if (par) {
      std::exception_ptr err;
      std::mutex mu;
#pragma omp parallel for reduction(+ : c) schedule(dynamic, 16)
      for (int64_t t = 0; t < static_cast<int64_t>(trials); ++t) {
        try {
          c += one(static_cast<uint64_t>(t));
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
        }
      }
      if (err) std::rethrow_exception(err);
    } else {
      for (uint64_t t = 0; t < trials; ++t) c += one(t);
    }
    if (i == 0 || c > worst) {
      worst = c;
      r.worst_input = i;
    }
  }
  r.estimate = static_cast<double>(worst) / static_cast<double>(trials);
  return r;
}

}  // namespace

ErrorReport estimate_error(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                           uint64_t trials, double confidence, uint64_t seed) {
  return estimate_impl(p, f, inputs, trials, confidence, seed, true);
}

ErrorReport estimate_error_serial(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                                  uint64_t trials, double confidence, uint64_t seed) {
  return estimate_impl(p, f, inputs, trials, confidence, seed, false);
}

mpq_class TranscriptDistribution::total() const {
  mpq_class s = 0;
  for (auto& [w, q] : p) s += q;
  return s;
}

TranscriptDistribution leaf_distribution(const Protocol& p, const BitString& x, const BitString& y,
                                         unsigned bound) {
  check_oracle(p, bound);
  const unsigned bits = static_cast<unsigned>(p.budgets.total());
  const uint64_t space = uint64_t{1} << bits;
  std::map<BitString, uint64_t> count;
  for (uint64_t t = 0; t < space; ++t)
    ++count[execute(p, x, y, enumerated_tapes(p.budgets, t)).transcript];
  TranscriptDistribution d;
  mpz_class den = 1;
  den <<= bits;
  for (auto& [w, c] : count) {
    mpq_class q(mpz_class(static_cast<unsigned long>(c)), den);
    q.canonicalize();
    d.p[w] = q;
  }
  return d;
}

namespace {

Output corrupt_value(const Output& o, size_t k, Tape& t, uint64_t mask_bits) {
  if (o.kind == Output::Kind::Top) return Output::of(t.read(k));
  if (o.kind != Output::Kind::Value) return o;
  BitString d = mask_bits ? t.read(k) : BitString::ones(k);
  if (d.popcount() == 0) d.set(k - 1, true);
  return Output::of(o.value ^ d);
}

SplitString corrupt_split(const SplitString& s, Tape& t) {
  SplitString r = s;
  BitString d = t.read(s.size());
  bool any = false;
  for (size_t i = 0; i < s.size(); ++i)
    if (s[i] != Sym::Star) any = any || d[i];
  if (!any) {
    // Force a change on the first owned position, or collide on position 0.
    for (size_t i = 0; i < s.size(); ++i)
      if (s[i] != Sym::Star) {
        d.set(i, true);
        any = true;
        break;
      }
    if (!any) {
      r.set(0, Sym::Zero);
      return r;
    }
  }
  for (size_t i = 0; i < s.size(); ++i)
    if (s[i] != Sym::Star && d[i]) r.set(i, s[i] == Sym::One ? Sym::Zero : Sym::One);
  return r;
}

}  // namespace

ProtocolPtr corrupted(ProtocolPtr base, unsigned flip_bits, uint64_t flips) {
  Protocol p = *base;
  const size_t k = base->output_len;
  const uint64_t mask_bits = k > 1 ? k : 0;
  const uint64_t extra = flip_bits + mask_bits;
  p.id = base->id + "+corrupt(" + std::to_string(flips) + "/2^" + std::to_string(flip_bits) + ")";
  switch (base->model) {
    case Model::Open: p.budgets.pub += extra; break;
    case Model::Alice:
    case Model::Local:
    case Model::Xor: p.budgets.a += extra; break;
    case Model::Bob: p.budgets.b += extra; break;
    case Model::OneOutOfTwo:
      p.budgets.a += extra;
      p.budgets.b += extra;
      break;
    case Model::Split: p.budgets.a += flip_bits + k; break;
  }
  p.body = [base, flip_bits, flips, k, mask_bits](Session& s) {
    Outputs o = s.sub(*base, s.alice().input, s.bob().input);
    auto flip = [&](Tape& t) { return t.bits(flip_bits) < flips; };
    switch (base->model) {
      case Model::Open:
        if (flip(s.pub())) o.open = corrupt_value(o.open, k, s.pub(), mask_bits);
        break;
      case Model::Alice:
      case Model::Local:
      case Model::Xor:
        if (flip(s.alice().priv)) o.a = corrupt_value(o.a, k, s.alice().priv, mask_bits);
        break;
      case Model::Bob:
        if (flip(s.bob().priv)) o.b = corrupt_value(o.b, k, s.bob().priv, mask_bits);
        break;
      case Model::OneOutOfTwo:
        if (flip(s.alice().priv) && o.a.speaks()) o.a = corrupt_value(o.a, k, s.alice().priv, mask_bits);
        if (flip(s.bob().priv) && o.b.speaks()) o.b = corrupt_value(o.b, k, s.bob().priv, mask_bits);
        break;
      case Model::Split:
        if (flip(s.alice().priv)) o.a = Output::of_split(corrupt_split(o.a.split, s.alice().priv));
        break;
    }
    return o;
  };
  return make_protocol(std::move(p));
}

}  // namespace cclab

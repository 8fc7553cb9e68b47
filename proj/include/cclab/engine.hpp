#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cclab/bits.hpp"

namespace cclab {

enum class Model { Open, Local, Alice, Bob, OneOutOfTwo, Split, Xor };
enum class Party { A, B };

const char* model_name(Model m);
Model parse_model(const std::string& s);
// Position in the chain open ≥ local ≥ unilateral ≥ one-out-of-two ≥ split ≥ xor
// (Alice and Bob share a level). Larger means weaker.
int model_level(Model m);
bool is_weaker(Model a, Model b);

// A player's (or observer's) output. Top is a value of the output alphabet
// (EQout's ⊤); Silent is the one-out-of-two abstention.
struct Output {
  enum class Kind : uint8_t { None, Value, Top, Silent, Split };
  Kind kind = Kind::None;
  BitString value;
  SplitString split;

  static Output none() { return {}; }
  static Output of(BitString b) { return {Kind::Value, std::move(b), {}}; }
  static Output top() { return {Kind::Top, {}, {}}; }
  static Output silent() { return {Kind::Silent, {}, {}}; }
  static Output of_split(SplitString s) { return {Kind::Split, {}, std::move(s)}; }

  bool is_value() const { return kind == Kind::Value; }
  bool speaks() const { return kind == Kind::Value || kind == Kind::Top; }
  bool operator==(const Output& o) const;
  bool operator!=(const Output& o) const { return !(*this == o); }
  bool operator<(const Output& o) const;
  std::string str() const;
};

struct TapeBudgets {
  uint64_t pub = 0, a = 0, b = 0;
  uint64_t total() const { return pub + a + b; }
  TapeBudgets operator+(const TapeBudgets& o) const { return {pub + o.pub, a + o.a, b + o.b}; }
  TapeBudgets operator*(uint64_t c) const { return {pub * c, a * c, b * c}; }
};

struct Outputs {
  Output a, b, open;
};

class Session;

struct Protocol {
  std::string id;
  Model model = Model::Open;
  size_t output_len = 0;
  size_t input_len_a = 0, input_len_b = 0;
  TapeBudgets budgets;
  uint64_t max_cost = 0;
  std::function<Outputs(Session&)> body;
};
using ProtocolPtr = std::shared_ptr<const Protocol>;

ProtocolPtr make_protocol(Protocol p);

struct RunRecord {
  BitString transcript;
  uint64_t cost = 0;
  Output out_a, out_b, open;
  bool aborted = false;
  // Bits per accounting tag; sums to cost.
  std::map<std::string, uint64_t> parts;
  // Diagnostic counters recorded by protocol bodies (not communication).
  std::map<std::string, int64_t> stats;
  bool operator==(const RunRecord& o) const;
};

// One execution in progress. Messages are charged to the wire; sub-runs
// slice fresh tape segments and append their transcript.
class Session {
 public:
  struct View {
    Party who;
    const BitString& input;
    Tape& priv;
    Tape& pub;
  };

  Session(const BitString& x, const BitString& y, Tape pub, Tape a, Tape b);

  View alice() { return {Party::A, x_, ta_, tp_}; }
  View bob() { return {Party::B, y_, tb_, tp_}; }
  View view(Party p) { return p == Party::A ? alice() : bob(); }
  Tape& pub() { return tp_; }

  void send(Party from, const BitString& msg, const std::string& tag = "");
  bool send_bit(Party from, bool b, const std::string& tag = "");
  uint64_t send_uint(Party from, uint64_t v, unsigned width, const std::string& tag = "");

  // Runs p on (x, y) with tape slices of p's declared budgets.
  Outputs sub(const Protocol& p, const BitString& x, const BitString& y, const std::string& tag = "");

  void abort() { wire_->aborted = true; }
  void note(const std::string& key, int64_t v) { wire_->stats[key] = v; }
  bool aborted() const { return wire_->aborted; }
  uint64_t cost() const { return wire_->buf.size(); }
  Party owner_of_last() const { return last_owner_; }

  RunRecord finish(Outputs out);

 private:
  struct Wire {
    BitBuffer buf;
    std::map<std::string, uint64_t> parts;
    std::map<std::string, int64_t> stats;
    std::vector<std::string> tag_stack;
    bool aborted = false;
  };
  Session(const BitString& x, const BitString& y, Tape pub, Tape a, Tape b, std::shared_ptr<Wire> w);
  void charge(uint64_t n, const std::string& tag);

  const BitString& x_;
  const BitString& y_;
  Tape tp_, ta_, tb_;
  std::shared_ptr<Wire> wire_;
  Party last_owner_ = Party::A;
};

struct Tapes {
  Tape pub, a, b;
};

Tapes seeded_tapes(const Protocol& p, uint64_t seed);

RunRecord execute(const Protocol& p, const BitString& x, const BitString& y, Tapes tapes);

// The model's success predicate.
bool resolve(Model model, const RunRecord& r, const Output& truth);

using Truth = std::function<Output(const BitString&, const BitString&)>;
using InputPair = std::pair<BitString, BitString>;

std::vector<BitString> all_strings(size_t n);
std::vector<InputPair> full_domain(size_t na, size_t nb);

struct ErrorReport {
  double estimate = 0;
  double radius = 0;
  uint64_t trials = 0;
  bool exact = false;
  mpq_class exact_value = 0;
  size_t worst_input = 0;
  bool distributional = false;
};

double hoeffding_radius(uint64_t trials, double confidence);

constexpr unsigned kDefaultOracleBits = 24;

// Worst case over inputs of the failure probability, by enumerating every
// assignment of all three tapes. Parallel over tape assignments.
ErrorReport exact_error(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                        unsigned bound = kDefaultOracleBits);
ErrorReport exact_error_serial(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                               unsigned bound = kDefaultOracleBits);
// μ-weighted average instead of the worst case.
ErrorReport exact_error_dist(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                             const std::vector<mpq_class>& mu, unsigned bound = kDefaultOracleBits);

ErrorReport estimate_error(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                           uint64_t trials, double confidence, uint64_t seed);
ErrorReport estimate_error_serial(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                                  uint64_t trials, double confidence, uint64_t seed);

// Tapes for assignment `idx` of an exhaustive enumeration: the low bits feed
// Bob's tape, then Alice's, then the public tape.
Tapes enumerated_tapes(const TapeBudgets& b, uint64_t idx);

struct TranscriptDistribution {
  std::map<BitString, mpq_class> p;
  std::optional<mpq_class> step;  // grid step; empty when exact
  mpq_class total() const;
};

TranscriptDistribution leaf_distribution(const Protocol& p, const BitString& x, const BitString& y,
                                         unsigned bound = kDefaultOracleBits);

// Wraps p so that the outputting side is replaced by a uniformly random wrong
// value with probability flips / 2^flip_bits, decided by the private tape
// (public tape in the open model).
ProtocolPtr corrupted(ProtocolPtr p, unsigned flip_bits, uint64_t flips);

}  // namespace cclab

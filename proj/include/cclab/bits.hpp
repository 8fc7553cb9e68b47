#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cclab {

struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OracleInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PromiseError : std::domain_error {
  using std::domain_error::domain_error;
};
struct WrongModel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NotDerandomizable : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

uint64_t splitmix64(uint64_t x);
// Mixes a seed with a stream index; used to derive per-trial and per-input seeds.
uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0);

// Fixed-length bit vector. Bit 0 is the first (most significant) bit, so
// lexicographic order on equal lengths matches big-endian integer order.
class BitString {
 public:
  BitString() = default;
  explicit BitString(size_t n);

  static BitString parse(std::string_view s);
  static BitString from_uint(uint64_t v, size_t n);
  static BitString ones(size_t n);

  size_t size() const { return n_; }
  bool empty() const { return n_ == 0; }
  bool get(size_t i) const {
    return (w_[i >> 6] >> (63 - (i & 63))) & 1u;
  }
  bool operator[](size_t i) const { return get(i); }
  void set(size_t i, bool v);
  void flip(size_t i) { set(i, !get(i)); }

  BitString operator^(const BitString& o) const;
  BitString& operator^=(const BitString& o);
  BitString operator&(const BitString& o) const;
  bool operator==(const BitString& o) const { return n_ == o.n_ && w_ == o.w_; }
  bool operator!=(const BitString& o) const { return !(*this == o); }
  // Shorter strings first, then lexicographic.
  bool operator<(const BitString& o) const;

  size_t popcount() const;
  bool parity() const { return popcount() & 1u; }
  uint64_t to_uint() const;
  BitString slice(size_t off, size_t len) const;
  BitString concat(const BitString& o) const;
  std::string str() const;

  const std::vector<uint64_t>& words() const { return w_; }
  std::vector<uint64_t>& words_mut() { return w_; }

 private:
  size_t n_ = 0;
  std::vector<uint64_t> w_;
};

struct BitStringHash {
  size_t operator()(const BitString& b) const;
};

// Growable bit buffer used for transcripts while a run is in progress.
class BitBuffer {
 public:
  void push(bool b);
  void append(const BitString& s);
  size_t size() const { return bits_.size(); }
  BitString freeze() const;
  void clear() { bits_.clear(); }

 private:
  std::vector<uint8_t> bits_;
};

enum class Sym : uint8_t { Zero = 0, One = 1, Star = 2 };

class SplitString {
 public:
  SplitString() = default;
  explicit SplitString(size_t n, Sym fill = Sym::Star) : s_(n, fill) {}
  static SplitString parse(std::string_view s);

  size_t size() const { return s_.size(); }
  Sym get(size_t i) const { return s_[i]; }
  Sym operator[](size_t i) const { return s_[i]; }
  void set(size_t i, Sym v) { s_[i] = v; }
  size_t stars() const;
  bool has_star() const { return stars() > 0; }
  // Requires no residual stars.
  BitString to_bits() const;
  std::string str() const;
  bool operator==(const SplitString& o) const { return s_ == o.s_; }
  bool operator!=(const SplitString& o) const { return s_ != o.s_; }
  bool operator<(const SplitString& o) const { return s_ < o.s_; }

 private:
  std::vector<Sym> s_;
};

SplitString weave(const SplitString& a, const SplitString& b);

// Source of random bits addressed in 64-bit blocks.
class TapeSource {
 public:
  virtual ~TapeSource() = default;
  virtual uint64_t block(uint64_t idx) const = 0;
};

// A window onto a TapeSource with a cursor and a hard budget.
class Tape {
 public:
  Tape() = default;
  Tape(std::shared_ptr<const TapeSource> src, uint64_t offset, uint64_t budget)
      : src_(std::move(src)), off_(offset), budget_(budget) {}

  static Tape seeded(uint64_t seed, uint64_t budget);
  static Tape of(const BitString& bits);
  static Tape none() { return Tape(); }

  uint64_t budget() const { return budget_; }
  uint64_t cursor() const { return cur_; }
  uint64_t remaining() const { return budget_ - cur_; }

  bool bit();
  // n <= 64, first bit read is most significant.
  uint64_t bits(unsigned n);
  BitString read(size_t n);
  // Uniform in [0, m) from 64 tape bits (bias at most m / 2^64).
  uint64_t uniform(uint64_t m);
  // Sub-tape over the next n bits; advances the cursor past them.
  Tape take(uint64_t n);

 private:
  uint64_t raw(uint64_t pos, unsigned n) const;
  void need(uint64_t n) const;

  std::shared_ptr<const TapeSource> src_;
  uint64_t off_ = 0;
  uint64_t budget_ = 0;
  uint64_t cur_ = 0;
};

size_t ceil_log2(uint64_t v);  // smallest b with 2^b >= v (0 for v <= 1)

}  // namespace cclab

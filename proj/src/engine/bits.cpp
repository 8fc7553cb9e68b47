#include "cclab/bits.hpp"

#include <algorithm>
#include <bit>

namespace cclab {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

size_t ceil_log2(uint64_t v) {
  if (v <= 1) return 0;
  return 64 - std::countl_zero(v - 1);
}

BitString::BitString(size_t n) : n_(n), w_((n + 63) / 64, 0) {}

BitString BitString::parse(std::string_view s) {
  BitString b(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1')
      b.set(i, true);
    else if (s[i] != '0')
      throw DomainError("BitString::parse: bad character");
  }
  return b;
}

BitString BitString::from_uint(uint64_t v, size_t n) {
  if (n < 64 && (v >> n) != 0) throw DomainError("BitString::from_uint: value too wide");
  BitString b(n);
  for (size_t i = 0; i < n && i < 64; ++i) b.set(n - 1 - i, (v >> i) & 1u);
  return b;
}

BitString BitString::ones(size_t n) {
  BitString b(n);
  for (auto& w : b.w_) w = ~0ULL;
  if (n & 63) b.w_.back() &= ~0ULL << (64 - (n & 63));
  return b;
}

void BitString::set(size_t i, bool v) {
  uint64_t m = 1ULL << (63 - (i & 63));
  if (v)
    w_[i >> 6] |= m;
  else
    w_[i >> 6] &= ~m;
}

BitString BitString::operator^(const BitString& o) const {
  BitString r = *this;
  r ^= o;
  return r;
}

BitString& BitString::operator^=(const BitString& o) {
  if (n_ != o.n_) throw DomainError("BitString xor: length mismatch");
  for (size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
  return *this;
}

BitString BitString::operator&(const BitString& o) const {
  if (n_ != o.n_) throw DomainError("BitString and: length mismatch");
  BitString r = *this;
  for (size_t i = 0; i < w_.size(); ++i) r.w_[i] &= o.w_[i];
  return r;
}

bool BitString::operator<(const BitString& o) const {
  if (n_ != o.n_) return n_ < o.n_;
  return w_ < o.w_;
}

size_t BitString::popcount() const {
  size_t c = 0;
  for (auto w : w_) c += std::popcount(w);
  return c;
}

uint64_t BitString::to_uint() const {
  if (n_ > 64) throw DomainError("BitString::to_uint: longer than 64 bits");
  if (n_ == 0) return 0;
  return w_[0] >> (64 - n_);
}

BitString BitString::slice(size_t off, size_t len) const {
  if (off + len > n_) throw DomainError("BitString::slice: out of range");
  BitString r(len);
  if ((off & 63) == 0) {
    for (size_t i = 0; i < r.w_.size(); ++i) r.w_[i] = w_[(off >> 6) + i];
    if (len & 63) r.w_.back() &= ~0ULL << (64 - (len & 63));
    return r;
  }
  for (size_t i = 0; i < len; ++i)
    if (get(off + i)) r.set(i, true);
  return r;
}

BitString BitString::concat(const BitString& o) const {
  BitString r(n_ + o.n_);
  for (size_t i = 0; i < w_.size(); ++i) r.w_[i] = w_[i];
  for (size_t i = 0; i < o.n_; ++i)
    if (o.get(i)) r.set(n_ + i, true);
  return r;
}

std::string BitString::str() const {
  std::string s(n_, '0');
  for (size_t i = 0; i < n_; ++i)
    if (get(i)) s[i] = '1';
  return s;
}

size_t BitStringHash::operator()(const BitString& b) const {
  uint64_t h = b.size();
  for (auto w : b.words()) h = splitmix64(h ^ w);
  return static_cast<size_t>(h);
}

void BitBuffer::push(bool b) { bits_.push_back(b ? 1 : 0); }

void BitBuffer::append(const BitString& s) {
  for (size_t i = 0; i < s.size(); ++i) bits_.push_back(s.get(i));
}

BitString BitBuffer::freeze() const {
  BitString b(bits_.size());
  for (size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) b.set(i, true);
  return b;
}

SplitString SplitString::parse(std::string_view s) {
  SplitString r(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    switch (s[i]) {
      case '0': r.s_[i] = Sym::Zero; break;
      case '1': r.s_[i] = Sym::One; break;
      case '*': r.s_[i] = Sym::Star; break;
      default: throw DomainError("SplitString::parse: bad character");
    }
  }
  return r;
}

size_t SplitString::stars() const {
  return std::count(s_.begin(), s_.end(), Sym::Star);
}

BitString SplitString::to_bits() const {
  BitString b(s_.size());
  for (size_t i = 0; i < s_.size(); ++i) {
    if (s_[i] == Sym::Star) throw DomainError("SplitString::to_bits: residual *");
    b.set(i, s_[i] == Sym::One);
  }
  return b;
}

std::string SplitString::str() const {
  std::string s(s_.size(), '*');
  for (size_t i = 0; i < s_.size(); ++i)
    if (s_[i] != Sym::Star) s[i] = s_[i] == Sym::One ? '1' : '0';
  return s;
}

SplitString weave(const SplitString& a, const SplitString& b) {
  if (a.size() != b.size()) throw DomainError("weave: length mismatch");
  SplitString r(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (b[i] == Sym::Star && a[i] != Sym::Star)
      r.set(i, a[i]);
    else if (a[i] == Sym::Star && b[i] != Sym::Star)
      r.set(i, b[i]);
  }
  return r;
}

namespace {

class SeededSource final : public TapeSource {
 public:
  explicit SeededSource(uint64_t seed) : seed_(seed) {}
  uint64_t block(uint64_t idx) const override { return splitmix64(seed_ ^ splitmix64(idx)); }

 private:
  uint64_t seed_;
};

class ExplicitSource final : public TapeSource {
 public:
  explicit ExplicitSource(BitString b) : b_(std::move(b)) {}
  uint64_t block(uint64_t idx) const override {
    return idx < b_.words().size() ? b_.words()[idx] : 0;
  }

 private:
  BitString b_;
};

}  // namespace

Tape Tape::seeded(uint64_t seed, uint64_t budget) {
  return Tape(std::make_shared<SeededSource>(splitmix64(seed)), 0, budget);
}

Tape Tape::of(const BitString& bits) {
  return Tape(std::make_shared<ExplicitSource>(bits), 0, bits.size());
}

void Tape::need(uint64_t n) const {
  if (n > budget_ - cur_) throw BudgetExceeded("tape budget exceeded");
}

uint64_t Tape::raw(uint64_t pos, unsigned n) const {
  if (n == 0) return 0;
  uint64_t blk = pos >> 6, sh = pos & 63;
  uint64_t hi = src_->block(blk) << sh;
  if (sh + n > 64) hi |= src_->block(blk + 1) >> (64 - sh);
  return hi >> (64 - n);
}

bool Tape::bit() {
  need(1);
  return raw(off_ + cur_++, 1);
}

uint64_t Tape::bits(unsigned n) {
  if (n > 64) throw DomainError("Tape::bits: n > 64");
  need(n);
  uint64_t v = raw(off_ + cur_, n);
  cur_ += n;
  return v;
}

BitString Tape::read(size_t n) {
  need(n);
  BitString b(n);
  auto& w = b.words_mut();
  for (size_t i = 0; i < w.size(); ++i) {
    unsigned len = static_cast<unsigned>(std::min<size_t>(64, n - 64 * i));
    w[i] = raw(off_ + cur_ + 64 * i, len) << (64 - len);
  }
  cur_ += n;
  return b;
}

uint64_t Tape::uniform(uint64_t m) {
  if (m == 0) throw DomainError("Tape::uniform: empty range");
  if ((m & (m - 1)) == 0) return bits(static_cast<unsigned>(ceil_log2(m)));
  unsigned __int128 p = static_cast<unsigned __int128>(bits(64)) * m;
  return static_cast<uint64_t>(p >> 64);
}

Tape Tape::take(uint64_t n) {
  need(n);
  Tape t(src_, off_ + cur_, n);
  cur_ += n;
  return t;
}

}  // namespace cclab

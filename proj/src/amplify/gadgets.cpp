#include <numeric>

#include "cclab/amplify.hpp"

namespace cclab {

namespace {

constexpr Sym kSyms[3] = {Sym::Zero, Sym::One, Sym::Star};

int idx(Sym i, Sym j) { return 3 * static_cast<int>(i) + static_cast<int>(j); }

bool valid(Sym a, Sym b) { return (a == Sym::Star) != (b == Sym::Star); }

Sym woven(Sym a, Sym b) { return a == Sym::Star ? b : a; }

// Calls f(ai, aj, bi, bj) for every tuple where both rows are valid here.
template <class F>
void for_valid_tuples(F f) {
  for (Sym ai : kSyms)
    for (Sym aj : kSyms)
      for (Sym bi : kSyms)
        for (Sym bj : kSyms)
          if (valid(ai, bi) && valid(aj, bj)) f(ai, aj, bi, bj);
}

}  // namespace

const SplitGadgets& split_gadgets() {
  // Symbols: E=0 D=1 S=2 X=3 a=4 b=5 c=6 d=7. Rows are (first, second)
  // with index 3·first + second over 0, 1, *.
  static const SplitGadgets g = [] {
    SplitGadgets t;
    t.alphabet = 8;
    //           00 01 0* 10 11 1* *0 *1 **
    t.g_a = {0, 1, 4, 1, 0, 5, 6, 7, 2};
    t.g_b = {2, 3, 6, 3, 2, 7, 4, 5, 0};
    return t;
  }();
  return g;
}

SplitGadgets search_split_gadgets() {
  // Nodes 0..8 are Alice pairs, 9..17 Bob pairs; equal weaves force equal
  // symbols, and the classes of the union-find are the alphabet.
  std::vector<int> parent(18);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for_valid_tuples([&](Sym ai, Sym aj, Sym bi, Sym bj) {
    if (woven(ai, bi) == woven(aj, bj)) parent[find(idx(ai, aj))] = find(9 + idx(bi, bj));
  });
  SplitGadgets g;
  std::vector<int> label(18, -1);
  unsigned next = 0;
  for (int v = 0; v < 18; ++v) {
    int r = find(v);
    if (label[r] < 0) label[r] = static_cast<int>(next++);
    (v < 9 ? g.g_a[v] : g.g_b[v - 9]) = static_cast<uint8_t>(label[r]);
  }
  g.alphabet = next;
  if (!verify_split_gadgets(g)) throw std::logic_error("search_split_gadgets: no consistent tables");
  return g;
}

bool verify_split_gadgets(const SplitGadgets& g) {
  bool ok = true;
  for_valid_tuples([&](Sym ai, Sym aj, Sym bi, Sym bj) {
    if ((woven(ai, bi) == woven(aj, bj)) != (g.a(ai, aj) == g.b(bi, bj))) ok = false;
  });
  return ok;
}

namespace {

BitString encode(const std::array<uint8_t, 9>& table, const SplitString& u, const SplitString& v) {
  if (u.size() != v.size()) throw DomainError("gadget_encode: length mismatch");
  BitString out(3 * u.size());
  for (size_t p = 0; p < u.size(); ++p) {
    uint8_t s = table[idx(u[p], v[p])];
    for (int b = 0; b < 3; ++b) out.set(3 * p + b, (s >> (2 - b)) & 1u);
  }
  return out;
}

}  // namespace

BitString gadget_encode_a(const SplitGadgets& g, const SplitString& xi, const SplitString& xj) {
  return encode(g.g_a, xi, xj);
}

BitString gadget_encode_b(const SplitGadgets& g, const SplitString& yi, const SplitString& yj) {
  return encode(g.g_b, yi, yj);
}

}  // namespace cclab

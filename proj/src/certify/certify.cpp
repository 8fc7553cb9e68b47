#include "cclab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace cclab {

mpq_class embed(const Output& v, const mpq_class& top) {
  switch (v.kind) {
    case Output::Kind::Value:
      if (v.value.size() > 63) throw DomainError("embed: value wider than 63 bits");
      return mpq_class(mpz_class(std::to_string(v.value.to_uint())));
    case Output::Kind::Top: return top;
    default: throw DomainError("embed: output is not a function value");
  }
}

CommMatrix build_comm_matrix(const ProblemSpec& spec, std::optional<mpq_class> top) {
  if (spec.promise) throw DomainError("build_comm_matrix: " + spec.name + " is a promise problem");
  if (spec.n_a > 12 || spec.n_b > 12) throw OracleInfeasible("build_comm_matrix: n above 12");
  const mpq_class t = top ? *top : mpq_class(mpz_class(1) << spec.n_a);
  CommMatrix c;
  c.xs = all_strings(spec.n_a);
  c.ys = all_strings(spec.n_b);
  c.m.assign(c.xs.size(), std::vector<mpq_class>(c.ys.size()));
  for (size_t i = 0; i < c.xs.size(); ++i)
    for (size_t j = 0; j < c.ys.size(); ++j) c.m[i][j] = embed(spec.eval(c.xs[i], c.ys[j]), t);
  return c;
}

namespace {

std::vector<std::vector<mpz_class>> integer_rows(const QMatrix& m) {
  std::vector<std::vector<mpz_class>> a(m.size());
  for (size_t i = 0; i < m.size(); ++i) {
    mpz_class l = 1;
    for (auto& v : m[i]) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.get_den_mpz_t());
    a[i].reserve(m[i].size());
    for (auto& v : m[i]) a[i].push_back(v.get_num() * (l / v.get_den()));
  }
  return a;
}

size_t bareiss(const QMatrix& m, bool parallel) {
  auto a = integer_rows(m);
  const size_t R = a.size(), C = R ? a[0].size() : 0;
  size_t rank = 0;
  mpz_class prev = 1;
  for (size_t c = 0; c < C && rank < R; ++c) {
    size_t p = rank;
    while (p < R && a[p][c] == 0) ++p;
    if (p == R) continue;
    std::swap(a[p], a[rank]);
    const auto& piv = a[rank];
    const mpz_class pv = piv[c];
    // Every updated entry is a minor of the input, so the division is exact.
#pragma omp parallel for schedule(static) if (parallel)
    for (size_t i = rank + 1; i < R; ++i) {
      auto& row = a[i];
      const mpz_class f = row[c];
      for (size_t j = c + 1; j < C; ++j) {
        row[j] = pv * row[j] - f * piv[j];
        mpz_divexact(row[j].get_mpz_t(), row[j].get_mpz_t(), prev.get_mpz_t());
      }
      row[c] = 0;
    }
    prev = pv;
    ++rank;
  }
  return rank;
}

}  // namespace

size_t exact_rank(const QMatrix& m) { return bareiss(m, true); }
size_t exact_rank_serial(const QMatrix& m) { return bareiss(m, false); }

size_t rank_gauss(const QMatrix& m) {
  QMatrix a = m;
  const size_t R = a.size(), C = R ? a[0].size() : 0;
  size_t rank = 0;
  for (size_t c = 0; c < C; ++c) {
    size_t p = R;
    for (size_t i = rank; i < R; ++i)
      if (a[i][c] != 0) {
        p = i;
        break;
      }
    if (p == R) continue;
    std::swap(a[p], a[rank]);
    mpq_class inv = 1 / a[rank][c];
    for (size_t j = c; j < C; ++j) a[rank][j] *= inv;
    for (size_t i = 0; i < R; ++i) {
      if (i == rank || a[i][c] == 0) continue;
      mpq_class f = a[i][c];
      for (size_t j = c; j < C; ++j) a[i][j] -= f * a[rank][j];
    }
    ++rank;
  }
  return rank;
}

QMatrix mat_mul(const QMatrix& a, const QMatrix& b) {
  const size_t n = a.size(), k = b.size(), m = k ? b[0].size() : 0;
  if (n && a[0].size() != k) throw DomainError("mat_mul: shape mismatch");
  QMatrix c(n, std::vector<mpq_class>(m, 0));
  for (size_t i = 0; i < n; ++i)
    for (size_t l = 0; l < k; ++l) {
      if (a[i][l] == 0) continue;
      for (size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
    }
  return c;
}

double rank_lower_bound(size_t rank, Model model, size_t k) {
  if (rank == 0) return 0;
  const double lr = std::log2(static_cast<double>(rank));
  switch (model) {
    case Model::Split: return lr - 1;
    case Model::Xor: return lr - std::log2(static_cast<double>(k + 1));
    default: return lr;
  }
}

double rank_lower_bound(const CommMatrix& m, Model model, size_t k) {
  return rank_lower_bound(exact_rank(m.m), model, k);
}

// --- XOR decomposition ---------------------------------------------------------

QMatrix xor_matrix(size_t k) {
  const size_t N = size_t{1} << k;
  QMatrix m(N, std::vector<mpq_class>(N));
  for (size_t x = 0; x < N; ++x)
    for (size_t y = 0; y < N; ++y) m[x][y] = static_cast<unsigned long>(x ^ y);
  return m;
}

XorDecomposition xor_decomposition(size_t k) {
  if (k == 0 || k > 16) throw DomainError("xor_decomposition: need 1 <= k <= 16");
  XorDecomposition d;
  d.k = k;
  const size_t N = size_t{1} << k;
  // x⊕y = Σ_j 2^{k−1−j}(1 − u_j(x)u_j(y))/2 with u_j(x) = (−1)^{1+x_j}.
  d.sq.push_back(mpq_class(static_cast<unsigned long>(N - 1), 2));
  for (size_t j = 0; j < k; ++j) {
    mpq_class w(mpz_class(1) << (k - 1 - j), mpz_class(2));
    w.canonicalize();
    d.sq.push_back(-w);
  }
  d.signs.assign(N, std::vector<int>(k + 1, 1));
  for (size_t x = 0; x < N; ++x) {
    BitString b = BitString::from_uint(x, k);
    for (size_t j = 0; j < k; ++j) d.signs[x][j + 1] = b[j] ? 1 : -1;
  }
  return d;
}

namespace {

QMatrix gram_with(const XorDecomposition& d, const std::vector<mpq_class>& sq) {
  const size_t N = d.signs.size();
  QMatrix g(N, std::vector<mpq_class>(N, 0));
  for (size_t x = 0; x < N; ++x)
    for (size_t y = 0; y < N; ++y)
      for (size_t c = 0; c < sq.size(); ++c)
        if (d.signs[x][c] == d.signs[y][c])
          g[x][y] += sq[c];
        else
          g[x][y] -= sq[c];
  return g;
}

}  // namespace

QMatrix XorDecomposition::gram() const { return gram_with(*this, sq); }

QMatrix XorDecomposition::gram_real() const {
  std::vector<mpq_class> a;
  for (auto& v : sq) a.push_back(abs(v));
  return gram_with(*this, a);
}

// --- split decomposition -------------------------------------------------------

SplitDecomposition split_decomposition(const BitString& s) {
  SplitDecomposition d;
  d.S = {{0}};
  d.U = {{0, 1}};
  d.V = {{1}, {0}};
  for (size_t i = 0; i < s.size(); ++i) {
    const mpq_class c(mpz_class(1) << i);
    if (!s[i]) {
      // [A  A + cJ]: duplicate the columns, shift the second row of V.
      for (auto& row : d.S) {
        const size_t w = row.size();
        for (size_t j = 0; j < w; ++j) row.push_back(row[j] + c);
      }
      for (size_t r = 0; r < 2; ++r) {
        const size_t w = d.V[r].size();
        for (size_t j = 0; j < w; ++j) d.V[r].push_back(d.V[r][j] + (r == 1 ? c : mpq_class(0)));
      }
    } else {
      // [A ; A + cJ]: duplicate the rows, shift the first column of U.
      const size_t h = d.S.size();
      for (size_t r = 0; r < h; ++r) {
        auto row = d.S[r];
        for (auto& v : row) v += c;
        d.S.push_back(std::move(row));
        d.U.push_back({d.U[r][0] + c, d.U[r][1]});
      }
    }
  }
  return d;
}

bool verify_split_decomposition(const SplitDecomposition& d) {
  for (auto& row : d.U)
    if (row.size() != 2 || row[1] != 1) return false;
  if (d.V.size() != 2) return false;
  for (auto& v : d.V[0])
    if (v != 1) return false;
  return mat_mul(d.U, d.V) == d.S && exact_rank(d.S) <= 2;
}

// --- leaf rectangles -----------------------------------------------------------

std::vector<LeafRect> leaf_rectangles(const Protocol& p, const CommMatrix& m, uint64_t seed) {
  std::map<BitString, std::vector<std::pair<size_t, size_t>>> cells;
  for (size_t i = 0; i < m.xs.size(); ++i)
    for (size_t j = 0; j < m.ys.size(); ++j) {
      RunRecord r = execute(p, m.xs[i], m.ys[j], seeded_tapes(p, seed));
      cells[r.transcript].emplace_back(i, j);
    }
  std::vector<LeafRect> out;
  for (auto& [w, c] : cells) {
    LeafRect r;
    r.leaf = w;
    for (auto& [i, j] : c) {
      r.rows.push_back(i);
      r.cols.push_back(j);
    }
    std::sort(r.rows.begin(), r.rows.end());
    r.rows.erase(std::unique(r.rows.begin(), r.rows.end()), r.rows.end());
    std::sort(r.cols.begin(), r.cols.end());
    r.cols.erase(std::unique(r.cols.begin(), r.cols.end()), r.cols.end());
    r.is_rectangle = c.size() == r.rows.size() * r.cols.size();
    for (size_t i : r.rows) {
      std::vector<mpq_class> row;
      for (size_t j : r.cols) row.push_back(m.m[i][j]);
      r.values.push_back(std::move(row));
    }
    out.push_back(std::move(r));
  }
  return out;
}

bool leaf_rectangle_check(const QMatrix& rect, Model model, size_t k) {
  if (rect.empty()) return true;
  auto rows_constant = [&] {
    for (auto& row : rect)
      for (auto& v : row)
        if (v != row[0]) return false;
    return true;
  };
  auto cols_constant = [&] {
    for (auto& row : rect)
      for (size_t j = 0; j < row.size(); ++j)
        if (row[j] != rect[0][j]) return false;
    return true;
  };
  switch (model) {
    case Model::Open:
    case Model::Local: return rows_constant() && cols_constant();
    case Model::Alice:
    case Model::Bob:
    case Model::OneOutOfTwo: return rows_constant() || cols_constant();
    case Model::Split: return exact_rank(rect) <= 2;
    case Model::Xor: return exact_rank(rect) <= k + 1;
  }
  return false;
}

std::vector<RankRow> rank_catalog(size_t n) {
  const Model models[] = {Model::Open,        Model::Local, Model::Alice, Model::Bob,
                          Model::OneOutOfTwo, Model::Split, Model::Xor};
  std::vector<RankRow> out;
  for (auto& name : problems::names()) {
    ProblemSpec spec = problems::by_name(name, n);
    if (spec.promise) continue;
    const size_t rank = exact_rank(build_comm_matrix(spec).m);
    const auto dom = spec.domain();
    for (Model m : models) {
      ProtocolPtr p = deterministic_protocol(spec, m);
      RankRow r;
      r.problem = name;
      r.model = m;
      r.n = n;
      r.rank = rank;
      r.bound = rank_lower_bound(rank, m, spec.k);
      for (auto& [x, y] : dom) r.cost = std::max(r.cost, execute(*p, x, y, seeded_tapes(*p, 0)).cost);
      r.exact = exact_error(*p, model_truth(spec, m), dom).exact_value == 0;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// --- ξ and the weak partition bound ------------------------------------------

namespace {

struct OutputMass {
  Output z;
  mpq_class mass;
  mpq_class key;
};

// Support outputs sorted by mass (descending), ties by embedded value.
std::vector<OutputMass> sorted_outputs(const ProblemSpec& spec, const std::vector<InputPair>& dom,
                                       const std::vector<mpq_class>& mu) {
  if (mu.size() != dom.size()) throw DomainError("xi: mu does not match the domain");
  mpq_class total = 0;
  std::map<Output, mpq_class> mass;
  for (size_t i = 0; i < dom.size(); ++i) {
    if (mu[i] < 0) throw DomainError("xi: negative mass");
    total += mu[i];
    if (mu[i] > 0) mass[spec.eval(dom[i].first, dom[i].second)] += mu[i];
  }
  if (total != 1) throw DomainError("xi: mu does not sum to 1");
  const mpq_class top(mpz_class(1) << spec.n_a);
  std::vector<OutputMass> v;
  for (auto& [z, q] : mass) v.push_back({z, q, embed(z, top)});
  std::sort(v.begin(), v.end(), [](const OutputMass& a, const OutputMass& b) {
    if (a.mass != b.mass) return a.mass > b.mass;
    return a.key < b.key;
  });
  return v;
}

size_t xi_of(const std::vector<OutputMass>& v, const mpq_class& eps) {
  mpq_class acc = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    acc += v[i].mass;
    if (acc >= 1 - eps) return i + 1;
  }
  return v.size();
}

}  // namespace

size_t xi(const ProblemSpec& spec, const std::vector<mpq_class>& mu, const mpq_class& eps) {
  return xi_of(sorted_outputs(spec, spec.domain(), mu), eps);
}

std::vector<mpq_class> diagonal_uniform(const ProblemSpec& spec) {
  const auto dom = spec.domain();
  size_t diag = 0;
  for (auto& [x, y] : dom) diag += x == y;
  if (diag == 0) throw DomainError("diagonal_uniform: no diagonal inputs");
  std::vector<mpq_class> mu;
  for (auto& [x, y] : dom) mu.push_back(x == y ? mpq_class(1, static_cast<unsigned long>(diag)) : mpq_class(0));
  return mu;
}

WprtSolution wprt_feasible(const ProblemSpec& spec, const std::vector<mpq_class>& mu, const mpq_class& eps) {
  const auto dom = spec.domain();
  const auto sorted = sorted_outputs(spec, dom, mu);
  WprtSolution w;
  w.xi = xi_of(sorted, eps);
  const mpq_class zmin = sorted[w.xi - 1].mass;
  w.alpha = 1 / zmin;
  std::map<Output, mpq_class> mass;
  for (auto& o : sorted) mass[o.z] = o.mass;

  // zi[i]: position of f(x, y) in `sorted`, or Z when off the support.
  const size_t Z = sorted.size();
  std::map<Output, size_t> pos;
  for (size_t z = 0; z < Z; ++z) pos[sorted[z].z] = z;
  std::vector<size_t> zi(dom.size(), Z);
  mpq_class beta = 0;
  w.beta.resize(dom.size());
  for (size_t i = 0; i < dom.size(); ++i) {
    if (mu[i] > 0) {
      zi[i] = pos.at(spec.eval(dom[i].first, dom[i].second));
      mpq_class b = mu[i] * (w.alpha - 1 / sorted[zi[i]].mass);
      w.beta[i] = b > 0 ? b : mpq_class(0);
    } else if (auto it = pos.find(spec.eval(dom[i].first, dom[i].second)); it != pos.end()) {
      zi[i] = it->second;
    }
    if (w.beta[i] > w.alpha * mu[i]) throw std::logic_error("wprt_feasible: beta exceeds alpha·mu");
    beta += w.beta[i];
  }
  w.value = (1 - eps) * w.alpha - beta;
  if (w.value < static_cast<long>(w.xi) - 1) throw std::logic_error("wprt_feasible: value below xi − 1");

  // Per z: αμ(R∩f⁻¹(z)) − β(R) ≤ Σ_{f⁻¹(z)} max(0, αμ − β) ≤ 1.
  std::vector<mpq_class> pos_mass(Z, 0);
  for (size_t i = 0; i < dom.size(); ++i)
    if (zi[i] < Z) {
      mpq_class c = w.alpha * mu[i] - w.beta[i];
      if (c > 0) pos_mass[zi[i]] += c;
    }
  w.closed_form_ok = std::all_of(pos_mass.begin(), pos_mass.end(), [](const mpq_class& s) { return s <= 1; });
  if (!w.closed_form_ok) throw std::logic_error("wprt_feasible: constraint violated");

  const size_t X = size_t{1} << spec.n_a, Y = size_t{1} << spec.n_b;
  if (X > 16 || Y > 16 || dom.size() != X * Y) return w;

  // Exhaustive over rectangles A×B: for a fixed A and z the best B takes the
  // columns with positive contribution (or the single best one). Values are
  // scaled to integers by a common denominator.
  mpz_class den = 1;
  for (size_t i = 0; i < dom.size(); ++i) {
    mpq_class am = w.alpha * mu[i];
    mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), am.get_den_mpz_t());
    mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), w.beta[i].get_den_mpz_t());
  }
  // wz[z][x][y] = den·(α μ_xy [f = z] − β_xy)
  std::vector<std::vector<std::vector<mpz_class>>> wz(Z, std::vector<std::vector<mpz_class>>(X, std::vector<mpz_class>(Y)));
  for (size_t i = 0; i < dom.size(); ++i) {
    const size_t x = dom[i].first.to_uint(), y = dom[i].second.to_uint();
    for (size_t z = 0; z < Z; ++z) {
      mpq_class v = -w.beta[i];
      if (zi[i] == z) v += w.alpha * mu[i];
      v *= den;
      wz[z][x][y] = v.get_num();
    }
  }
  std::vector<std::vector<mpz_class>> col(Z, std::vector<mpz_class>(Y, 0));
  std::vector<bool> in(X, false);
  mpz_class best = 0;
  bool first = true;
  for (uint64_t g = 1; g < (uint64_t{1} << X); ++g) {
    // Gray code: flip the row at the lowest set bit of g.
    const size_t x = static_cast<size_t>(__builtin_ctzll(g));
    in[x] = !in[x];
    for (size_t z = 0; z < Z; ++z)
      for (size_t y = 0; y < Y; ++y) {
        if (in[x])
          col[z][y] += wz[z][x][y];
        else
          col[z][y] -= wz[z][x][y];
      }
    for (size_t z = 0; z < Z; ++z) {
      mpz_class s = 0, mx = col[z][0];
      bool any = false;
      for (size_t y = 0; y < Y; ++y) {
        if (col[z][y] > 0) {
          s += col[z][y];
          any = true;
        }
        if (col[z][y] > mx) mx = col[z][y];
      }
      const mpz_class v = any ? s : mx;
      if (first || v > best) best = v;
      first = false;
    }
  }
  w.exhaustive_checked = true;
  w.max_lhs = mpq_class(best, den);
  w.max_lhs.canonicalize();
  w.exhaustive_ok = w.max_lhs <= 1;
  if (!w.exhaustive_ok) throw std::logic_error("wprt_feasible: rectangle constraint violated");
  return w;
}

Certificate rank_certificate(const ProblemSpec& spec, Model model) {
  Certificate c;
  c.kind = Certificate::Kind::Rank;
  c.model = model;
  const size_t r = exact_rank(build_comm_matrix(spec).m);
  c.value = static_cast<unsigned long>(r);
  c.bits = rank_lower_bound(r, model, spec.k);
  return c;
}

Certificate xi_certificate(const ProblemSpec& spec, const std::vector<mpq_class>& mu, const mpq_class& eps) {
  WprtSolution w = wprt_feasible(spec, mu, eps);
  Certificate c;
  c.kind = Certificate::Kind::Xi;
  c.model = Model::Open;
  c.value = static_cast<long>(w.xi) - 1;
  c.bits = w.xi > 1 ? std::log2(static_cast<double>(w.xi - 1)) : 0;
  return c;
}

}  // namespace cclab

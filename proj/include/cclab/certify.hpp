#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <vector>

#include "cclab/blocks.hpp"
#include "cclab/engine.hpp"
#include "cclab/problems.hpp"

namespace cclab {

using QMatrix = std::vector<std::vector<mpq_class>>;

struct CommMatrix {
  std::vector<BitString> xs, ys;
  QMatrix m;  // m[x][y] = embed(f(x, y))

  size_t rows() const { return m.size(); }
  size_t cols() const { return m.empty() ? 0 : m[0].size(); }
};

// Values embed as big-endian integers; ⊤ embeds as `top` (default 2^n_a).
mpq_class embed(const Output& v, const mpq_class& top);
CommMatrix build_comm_matrix(const ProblemSpec& spec, std::optional<mpq_class> top = std::nullopt);

// Fraction-free (Bareiss) elimination on the integer-scaled matrix.
size_t exact_rank(const QMatrix& m);
size_t exact_rank_serial(const QMatrix& m);
// Independent check: Gauss-Jordan over the rationals.
size_t rank_gauss(const QMatrix& m);
QMatrix mat_mul(const QMatrix& a, const QMatrix& b);

// log2 rank minus the model slack (1 for split, log2(k+1) for XOR).
double rank_lower_bound(size_t rank, Model model, size_t k);
double rank_lower_bound(const CommMatrix& m, Model model, size_t k);

// Columns: all-ones, then one ±1 vector per bit (bit j flips the sign on
// x_j). Each column c has a squared scale sq[c]; S·Sᵀ = Σ_c sq[c]·v_c·v_cᵀ.
struct XorDecomposition {
  size_t k = 0;
  std::vector<std::vector<int>> signs;  // 2^k × (k+1)
  std::vector<mpq_class> sq;            // k+1

  size_t columns() const { return sq.size(); }
  // The bilinear product with the stated squared scales.
  QMatrix gram() const;
  // Product with |sq| (real radicals only).
  QMatrix gram_real() const;
};
XorDecomposition xor_decomposition(size_t k);
QMatrix xor_matrix(size_t k);

// Pattern bit s_i = 0 doubles the columns, 1 doubles the rows, with offset
// 2^i. S = U·V with U = [u | 1] and V = [1ᵀ ; v].
struct SplitDecomposition {
  QMatrix S, U, V;
};
SplitDecomposition split_decomposition(const BitString& pattern);
bool verify_split_decomposition(const SplitDecomposition& d);

// Rows/columns reaching one leaf of a deterministic run and the values there.
struct LeafRect {
  BitString leaf;
  std::vector<size_t> rows, cols;  // indices into the matrix
  QMatrix values;
  bool is_rectangle = true;  // every (row, col) pair reached this leaf
};
// Executes p on every input with the tapes fixed by `seed`.
std::vector<LeafRect> leaf_rectangles(const Protocol& p, const CommMatrix& m, uint64_t seed = 0);
bool leaf_rectangle_check(const QMatrix& rect, Model model, size_t k);

// Rank certificate versus a measured deterministic catalog protocol.
struct RankRow {
  std::string problem;
  Model model = Model::Open;
  size_t n = 0;
  size_t rank = 0;
  double bound = 0;
  uint64_t cost = 0;  // largest measured cost over the domain
  bool exact = false;  // catalog protocol has zero error
};
std::vector<RankRow> rank_catalog(size_t n);

// μ over spec.domain() order.
size_t xi(const ProblemSpec& spec, const std::vector<mpq_class>& mu, const mpq_class& eps);
std::vector<mpq_class> diagonal_uniform(const ProblemSpec& spec);

struct WprtSolution {
  mpq_class alpha;
  std::vector<mpq_class> beta;  // aligned with spec.domain()
  mpq_class value;              // (1 − ε)α − Σβ
  size_t xi = 0;
  bool closed_form_ok = false;
  bool exhaustive_checked = false;
  bool exhaustive_ok = false;
  mpq_class max_lhs;  // max over rectangles and z of αμ(R∩f⁻¹(z)) − β(R), when checked
};
// Throws std::logic_error when the construction violates a constraint.
WprtSolution wprt_feasible(const ProblemSpec& spec, const std::vector<mpq_class>& mu, const mpq_class& eps);

struct Certificate {
  enum class Kind { Rank, Xi };
  Kind kind = Kind::Rank;
  mpq_class value;
  Model model = Model::Open;
  double bits = 0;
};
Certificate rank_certificate(const ProblemSpec& spec, Model model);
Certificate xi_certificate(const ProblemSpec& spec, const std::vector<mpq_class>& mu, const mpq_class& eps);

}  // namespace cclab

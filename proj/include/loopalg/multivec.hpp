#ifndef LOOPALG_MULTIVEC_HPP
#define LOOPALG_MULTIVEC_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "loopalg/expr.hpp"
#include "loopalg/varcalc.hpp"

namespace loopalg {

// Evolutionary vector field with characteristics xi^i; acts on expressions by
// prolongation.
struct EvoField {
  std::vector<Expr> xi;

  EvoField() = default;
  explicit EvoField(int n) : xi(static_cast<std::size_t>(n)) {}
  explicit EvoField(std::vector<Expr> x) : xi(std::move(x)) {}
  int n() const { return static_cast<int>(xi.size()); }
  bool is_zero() const;
  EvoField operator+(const EvoField& o) const;
  EvoField operator-() const;
  EvoField operator-(const EvoField& o) const { return *this + (-o); }
  EvoField operator*(const Rat& r) const;
  bool operator==(const EvoField& o) const;
};

Expr apply_field(const EvoField& xi, const Expr& e);
EvoField commutator(const EvoField& xi, const EvoField& eta);

// Local bivector in delta-kernel normal form: for every ordered pair (i,j),
// P^{ij}(x,y) = sum_k A^{ij}_k(jets at x) delta^{(k)}(x-y). All components are
// stored explicitly; antisymmetry is a checkable invariant, not a storage
// convention.
class LocalBivector {
 public:
  LocalBivector() : LocalBivector(1) {}
  explicit LocalBivector(int n) : n_(n), comp_(static_cast<std::size_t>(n) * n) {}

  int n() const { return n_; }
  const std::map<int, Expr>& row(int i, int j) const { return comp_[idx(i, j)]; }
  Expr coeff(int i, int j, int k) const;
  void add_term(int i, int j, int k, const Expr& e);
  void set_term(int i, int j, int k, const Expr& e);

  bool is_zero() const;
  int max_order() const;
  LocalBivector operator+(const LocalBivector& o) const;
  LocalBivector operator-() const;
  LocalBivector operator-(const LocalBivector& o) const { return *this + (-o); }
  LocalBivector operator*(const Rat& r) const;
  bool operator==(const LocalBivector& o) const;

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(j - 1);
  }
  int n_;
  std::vector<std::map<int, Expr>> comp_;
};

// Re-expresses P^{ji}(y,x) in normal form at x via the delta transport
// identity a(y) delta^{(m)}(x-y) = sum_j C(m,j) (dx^j a)(x) delta^{(m-j)}(x-y).
LocalBivector flip(const LocalBivector& p);
bool is_antisymmetric(const LocalBivector& p);
LocalBivector antisymmetrize(const LocalBivector& p);

// Local trivector: T^{ijk}(x,y,z) = sum B^{ijk}_{pq}(jets at x)
// delta^{(p)}(x-y) delta^{(q)}(x-z).
class LocalTrivector {
 public:
  LocalTrivector() : LocalTrivector(1) {}
  explicit LocalTrivector(int n)
      : n_(n), comp_(static_cast<std::size_t>(n) * n * n) {}

  int n() const { return n_; }
  const std::map<std::pair<int, int>, Expr>& row(int i, int j, int k) const {
    return comp_[idx(i, j, k)];
  }
  void add_term(int i, int j, int k, int p, int q, const Expr& e);
  bool is_zero() const;
  LocalTrivector operator+(const LocalTrivector& o) const;
  LocalTrivector operator-() const;
  LocalTrivector operator-(const LocalTrivector& o) const { return *this + (-o); }
  LocalTrivector operator*(const Rat& r) const;
  bool operator==(const LocalTrivector& o) const;
  // A short description of one nonzero coefficient (for failure reports).
  std::string sample_term() const;

 private:
  std::size_t idx(int i, int j, int k) const {
    auto nn = static_cast<std::size_t>(n_);
    return (static_cast<std::size_t>(i - 1) * nn + (j - 1)) * nn + (k - 1);
  }
  int n_;
  std::vector<std::map<std::pair<int, int>, Expr>> comp_;
};

// Simultaneous permutations of (index, point) slots, rewritten to normal form.
LocalTrivector trivector_swap_yz(const LocalTrivector& t);
LocalTrivector trivector_swap_xy(const LocalTrivector& t);
LocalTrivector trivector_antisymmetrize(const LocalTrivector& t);

// ---- brackets ----

// Hamiltonian vector field xi^i = sum_{j,k} A^{ij}_k dx^k (delta F / delta u^j).
EvoField ham_vf(const LocalBivector& p, const LocalFunctional& f);

// Poisson bracket of functionals {F,G}_P.
LocalFunctional bracket_functionals(const LocalBivector& p, const LocalFunctional& f,
                                    const LocalFunctional& g);

// Lie derivative of a bivector along an evolutionary field (the three-term
// formula, y-located term transported to x).
LocalBivector lie_bivector(const LocalBivector& p, const EvoField& xi);

// Schouten-Nijenhuis bracket of two bivectors, in canonical (totally
// antisymmetrized) normal form. Normalization is frozen by
//   pairing(schouten_bb(P,P), F, G, H) = 2 * jacobiator(P, F, G, H).
LocalTrivector schouten_bb(const LocalBivector& p, const LocalBivector& q);

// Evaluation of a trivector kernel on three functional gradients.
LocalFunctional pairing(const LocalTrivector& t, const LocalFunctional& f,
                        const LocalFunctional& g, const LocalFunctional& h);

// {{F,G},H} + {{G,H},F} + {{H,F},G} computed via nested functional brackets
// (the independent oracle channel for schouten_bb).
LocalFunctional jacobiator(const LocalBivector& p, const LocalFunctional& f,
                           const LocalFunctional& g, const LocalFunctional& h);

// ---- the pencil differentials ----

struct PencilContext {
  LocalBivector w1, w2;
};

EvoField d_of(const PencilContext& ctx, int a, const LocalFunctional& f);
LocalBivector d_of(const PencilContext& ctx, int a, const EvoField& x);
LocalTrivector d_of(const PencilContext& ctx, int a, const LocalBivector& p);

// ---- epsilon series ----

template <typename T>
struct EpsSeries {
  int trunc = 0;        // parts with order > trunc are dropped
  std::map<int, T> parts;

  const T* part(int m) const {
    auto it = parts.find(m);
    return it == parts.end() ? nullptr : &it->second;
  }
  void set(int m, T v) {
    if (m <= trunc) parts[m] = std::move(v);
  }
  EpsSeries truncated(int new_trunc) const {
    EpsSeries out;
    out.trunc = new_trunc;
    for (const auto& [m, v] : parts)
      if (m <= new_trunc) out.parts.emplace(m, v);
    return out;
  }
};

using BivectorSeries = EpsSeries<LocalBivector>;
using PencilSeries = std::pair<BivectorSeries, BivectorSeries>;

BivectorSeries series_add(const BivectorSeries& a, const BivectorSeries& b);
BivectorSeries series_neg(const BivectorSeries& a);
bool series_is_zero(const BivectorSeries& a);
EpsSeries<LocalTrivector> series_schouten(const BivectorSeries& p, const BivectorSeries& q,
                                          int trunc);

// Per-part grading validation: part m of a bivector deformation must satisfy
// deg(coeff) + k + 1 = m + 2 termwise. Returns warning strings (log-bearing
// coefficients only warn, per the deg log = 0 convention).
std::vector<std::string> validate_bivector_grading(const LocalBivector& b, int m);

struct PencilReport {
  bool compatible = false;
  bool antisym_ok = false;
  // one entry per (bracket label, eps order): empty string means zero
  std::vector<std::tuple<std::string, int, std::string>> entries;
  std::vector<std::string> warnings;
  std::string to_string() const;
};

// Verifies [P,P], [P,Q], [Q,Q] to eps order N (the lambda expansion of the
// pencil condition) plus antisymmetry of every part.
PencilReport check_pencil(const BivectorSeries& p, const BivectorSeries& q, int order);

}  // namespace loopalg

#endif

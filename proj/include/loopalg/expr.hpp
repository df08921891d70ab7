#ifndef LOOPALG_EXPR_HPP
#define LOOPALG_EXPR_HPP

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "loopalg/errors.hpp"
#include "loopalg/rational.hpp"

namespace loopalg {

class Expr;
struct Atom;
using AtomPtr = std::shared_ptr<const Atom>;

// A jet variable u^{i,s}: the s-th x-derivative of the i-th coordinate.
struct JetVar {
  int coord = 1;  // 1-based
  int order = 0;  // s >= 0
  friend bool operator==(const JetVar&, const JetVar&) = default;
  friend auto operator<=>(const JetVar&, const JetVar&) = default;
};

enum class AtomKind {
  Jet,   // u^{i,s}
  Root,  // named algebraic constant with a monic defining polynomial over Q
  Fn,    // opaque smooth function application (log, sqrt, user symbols)
  Inv,   // irreducible multi-term polynomial, used with negative powers only
};

struct Factor {
  AtomPtr atom;
  int pow = 1;
};

struct Mono {
  Rat coeff;
  std::vector<Factor> factors;  // sorted by atom order, no zero powers
};

// Canonical expression: a sparse sum of monomials with exact rational
// coefficients and integer (possibly negative) powers of interned atoms.
// Immutable; copying is a pointer copy. Two expressions are equal iff their
// canonical representations coincide.
class Expr {
 public:
  Expr();  // zero

  static Expr from_rat(const Rat& r);
  static Expr from_int(long v);
  static Expr jet(int coord, int order);
  static Expr jet(JetVar v) { return jet(v.coord, v.order); }
  static Expr atom_pow(const AtomPtr& a, int pow);

  // Builds a canonical expression out of raw monomials (runs all rewrites).
  static Expr from_monomials(std::vector<Mono> raw);

  bool is_zero() const { return monos_->empty(); }
  bool is_rational() const;
  // Nonzero constant term (the monomial with no factors), if any.
  Rat constant_term() const;
  const std::vector<Mono>& monomials() const { return *monos_; }
  std::size_t size() const { return monos_->size(); }

  Expr operator-() const;
  Expr operator+(const Expr& o) const;
  Expr operator-(const Expr& o) const;
  Expr operator*(const Expr& o) const;
  Expr operator*(const Rat& r) const;
  Expr& operator+=(const Expr& o) { return *this = *this + o; }
  Expr& operator-=(const Expr& o) { return *this = *this - o; }
  Expr& operator*=(const Expr& o) { return *this = *this * o; }

  bool operator==(const Expr& o) const;
  bool operator!=(const Expr& o) const { return !(*this == o); }

  // Integer power; negative exponents require an invertible expression.
  Expr pow(int k) const;
  // Multiplicative inverse. Monomials invert directly; multi-term polynomials
  // become negative powers of an interned Inv atom (the base must be linear in
  // some atom so that irreducibility is guaranteed). Throws DivisionByZero or
  // NotInvertible.
  Expr inverse() const;

  std::string str() const;

 private:
  explicit Expr(std::shared_ptr<const std::vector<Mono>> m) : monos_(std::move(m)) {}
  std::shared_ptr<const std::vector<Mono>> monos_;
};

inline Expr operator*(const Rat& r, const Expr& e) { return e * r; }

struct Atom {
  AtomKind kind;
  // Jet
  JetVar jet{};
  // Root: name plus monic minimal polynomial x^d + c[d-1] x^{d-1} + ... + c[0]
  // (vector holds c[0..d-1]); constant term must be nonzero.
  std::string name;
  std::vector<Rat> minpoly;
  // Fn: name (shared with Root slot), derivative multi-index (sorted, 1-based
  // argument positions) and arguments.
  std::vector<int> derivs;
  std::vector<Expr> args;
  // Inv: primitive multi-term polynomial with positive leading coefficient.
  Expr base;
  // For Inv atoms: base = A * lin + B with lin a free atom, A a monomial and
  // B free of lin; subst_value = -B/A. Divisibility of a polynomial by base
  // reduces to vanishing under lin -> subst_value.
  AtomPtr inv_lin_atom;
  Expr inv_subst_value;

  std::string key;     // canonical serialization, set by interning
  std::size_t id = 0;  // interning sequence number
};

// Interned atom constructors.
AtomPtr make_jet_atom(int coord, int order);
AtomPtr make_root_atom(const std::string& name, const std::vector<Rat>& minpoly);
AtomPtr make_fn_atom(const std::string& name, std::vector<Expr> args,
                     std::vector<int> derivs = {});
// base must have >= 2 monomials; normalized internally. Throws NotInvertible
// if irreducibility cannot be guaranteed.
AtomPtr make_inv_atom(const Expr& base);

// Total order on interned atoms (used for canonical forms).
int atom_cmp(const Atom& a, const Atom& b);
int expr_cmp(const Expr& a, const Expr& b);

// Convenience expression builders.
Expr fn_app(const std::string& name, const std::vector<Expr>& args,
            const std::vector<int>& derivs = {});
Expr sqrt_of(const Expr& arg);
Expr log_of(const Expr& arg);

// ---- Calculus ----

// Partial derivative with respect to a jet variable. Exact; uses declared
// derivative behavior on opaque atoms (chain rule, log/sqrt closed forms).
Expr partial(const Expr& e, JetVar v);
// Derivative of an opaque application with respect to its k-th argument slot
// (0-based); closed forms for log/sqrt, a formal derivative atom otherwise.
Expr fn_slot_derivative(const AtomPtr& fn_atom, int slot);

// Total x-derivative: sum over jets of (de/du^{i,s}) u^{i,s+1}.
Expr total_derivative(const Expr& e);
Expr dx_pow(const Expr& e, int k);  // total_derivative iterated k times

// All jet variables occurring (including inside opaque arguments).
std::set<JetVar> jet_vars(const Expr& e);
// Max jet order occurring; -1 if the expression involves no jet variables.
int max_jet_order(const Expr& e);
// Largest coordinate index occurring.
int max_coord(const Expr& e);

// Gradation with deg u^{i,s} = s; opaque atoms and roots have degree 0.
std::map<long, Expr> degree_decompose(const Expr& e);
// Degree if homogeneous, std::nullopt otherwise (zero is homogeneous of any
// degree and reports 0).
std::optional<long> homogeneous_degree(const Expr& e);

bool is_differential_polynomial(const Expr& e);

// Declared images of whole opaque atoms under a substitution (e.g. a branch
// choice sqrt(w2) -> (u1 - u2)/4 consistent with the coordinate map).
using AtomImages = std::vector<std::pair<AtomPtr, Expr>>;

// Substitution homomorphism: u^{i,s} -> dx^s(map[i-1]); opaque arguments and
// Inv bases are rewritten recursively. map has one entry per coordinate.
// Atoms listed in images are replaced by their declared image instead.
Expr substitute_jets(const Expr& e, const std::vector<Expr>& map,
                     const AtomImages& images = {});

// Collects all distinct atoms in e (recursively including Fn args / Inv bases
// at top level only; nested occurrences count through their enclosing atom).
std::vector<AtomPtr> top_level_atoms(const Expr& e);

// Exact polynomial division: returns q with n == q * d, or nullopt. Both
// operands must be free of Inv atoms.
std::optional<Expr> exact_divide(const Expr& n, const Expr& d);

// Stable serialization of a monomial's factor list (used as a coefficient
// matching key by the linear solvers).
std::string monomial_key(const Mono& m);

}  // namespace loopalg

#endif

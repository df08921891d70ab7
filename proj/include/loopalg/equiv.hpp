#ifndef LOOPALG_EQUIV_HPP
#define LOOPALG_EQUIV_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "loopalg/multivec.hpp"
#include "loopalg/structures.hpp"

namespace loopalg {

// ---- epsilon series of expressions ----

using ExprSeries = EpsSeries<Expr>;

ExprSeries es_const(const Expr& e, int trunc);
ExprSeries es_add(const ExprSeries& a, const ExprSeries& b);
ExprSeries es_sub(const ExprSeries& a, const ExprSeries& b);
ExprSeries es_mul(const ExprSeries& a, const ExprSeries& b);
ExprSeries es_scale(const ExprSeries& a, const Rat& r);
ExprSeries es_dx(const ExprSeries& a);
ExprSeries es_pow(const ExprSeries& a, int k);
// Requires an invertible leading part; geometric series for the corrections.
ExprSeries es_inverse(const ExprSeries& a);
bool es_is_zero(const ExprSeries& a);

// Substitution u^i -> map[i-1] (an eps series), with opaque atoms expanded by
// formal Taylor series in the eps corrections of their arguments. Atoms listed
// in images are replaced by their declared image directly.
ExprSeries subst_series(const Expr& e, const std::vector<ExprSeries>& map, int trunc,
                        const AtomImages& images = {});

// ---- Miura-type transformations ----

// utilde^i = point^i(u) + sum_{k>=1} eps^k corrections[k][i-1](u, u_x, ...).
// The point part defaults to the identity; a genuine point transform must
// supply its inverse.
struct MiuraTransform {
  int dim = 1;
  std::vector<Expr> point, point_inverse;
  std::map<int, std::vector<Expr>> corrections;
  bool quasi = false;  // corrections may be non-polynomial in the jets
  // Branch choices used whenever the inverse map is substituted into old-chart
  // expressions (e.g. sqrt(w2) -> (u1-u2)/4 for the nls chart).
  AtomImages inverse_atom_images;

  static MiuraTransform identity(int n);
  static MiuraTransform point_transform(std::vector<Expr> fwd, std::vector<Expr> inv);
  bool is_identity_point() const;
  // Degree-homogeneity validation: order-k correction should be homogeneous of
  // degree k; returns warning strings.
  std::vector<std::string> validate_grading() const;
  std::string str() const;
};

// The forward map as a series of expressions in the old coordinates.
std::vector<ExprSeries> miura_forward_series(const MiuraTransform& t, int order);
// Inverse map as a series in the new coordinates. Throws NotInvertible.
std::vector<ExprSeries> miura_inverse_series(const MiuraTransform& t, int order);
// t2 after t1 (i.e. the map u -> t2(t1(u))).
MiuraTransform compose(const MiuraTransform& t2, const MiuraTransform& t1, int order);
// exp(eps^k ad_gen) as a coordinate change, truncated.
MiuraTransform exp_transform(int k, const EvoField& gen, int order);

// ---- pushforward ----

// Kernel transport of a bracket through a Miura-type change of coordinates,
// with coefficients re-expressed in the new chart; truncated at eps^order.
BivectorSeries pushforward(const BivectorSeries& p, const MiuraTransform& t, int order);
PencilSeries pushforward_pair(const PencilSeries& p, const MiuraTransform& t, int order);
// Exponential-adjoint route for a single generator (cross-check path).
BivectorSeries pushforward_exp_adjoint(const BivectorSeries& p, int k, const EvoField& gen,
                                       int order);

// ---- equivalence solving ----

struct AnsatzSpec {
  // Cap on the jet order appearing in degree-k correction monomials; 0 means
  // "up to k" (the natural bound).
  int max_jet_order = 0;
  // Coefficient functions of the coordinates only; 1 is always included.
  std::vector<Expr> coeff_basis;
};

// All degree-k evolutionary ansatz fields: one coordinate slot times one
// coefficient basis element times one degree-k jet monomial.
std::vector<EvoField> enumerate_ansatz_fields(int n, int k, const AnsatzSpec& spec);

struct SolveResult {
  bool found = false;
  MiuraTransform transform;
  std::string failure;  // "AnsatzExhausted: ..." when !found
};

// Order-by-order trivialization: finds T with pushforward(P, T) = Q mod
// eps^{order+1}. P and Q must agree at eps order 0. Every returned transform
// is re-verified by pushforward before being handed back.
SolveResult solve_equivalence(const PencilSeries& p, const PencilSeries& q,
                              const AnsatzSpec& ansatz, int order);

// ---- deformation extension ----

struct ExtendResult {
  bool found = false;
  PencilSeries extended;
  EvoField generator;  // X with the new order = d1 X
  std::string failure;
};

// Extends an order-N deformation (second bracket deformed, SZ-type
// conditions assumed) to order N+1 by solving the cohomological equation in
// the ansatz space. Throws InvalidDeformation if the input fails check_pencil
// at order N.
ExtendResult extend_deformation(const PencilSeries& p, int current_order,
                                const AnsatzSpec& ansatz);

// ---- bihamiltonian recursion ----

struct SeriesFunctional {
  int n = 1;
  ExprSeries density;
};

struct SeriesField {
  std::vector<ExprSeries> xi;
  int n() const { return static_cast<int>(xi.size()); }
};

SeriesField series_ham_vf(const BivectorSeries& w, const SeriesFunctional& f, int order);
bool series_field_is_zero(const SeriesField& x);

struct RecursionStep {
  SeriesFunctional hamiltonian;  // H_q
  SeriesField flow;              // d u / d t^q
};

// Bihamiltonian recursion: X_q = factor(q) * ham(omega2, H_{q-1}); the first
// bracket is inverted perturbatively in eps (leading constant-coefficient
// delta' part by integrate_dx, corrections by back-substitution), and H_q is
// rebuilt by the homotopy formula. Throws NotExact when an inversion leaves
// the local class, Error when the leading part is not constant-coefficient.
std::vector<RecursionStep> recursion(const PencilSeries& pencil, const LocalFunctional& casimir,
                                     const std::function<Rat(int)>& factor, int q_max,
                                     int order);

}  // namespace loopalg

#endif

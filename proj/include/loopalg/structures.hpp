#ifndef LOOPALG_STRUCTURES_HPP
#define LOOPALG_STRUCTURES_HPP

#include <string>
#include <vector>

#include "loopalg/multivec.hpp"

namespace loopalg {

// Semisimple hydrodynamic pair in canonical coordinates: both metrics are
// diagonal, g^i = u^i f^i, and the kernels are built from the f^i alone.
struct HydroPair {
  int n = 1;
  std::vector<Expr> f;  // f^i(u), functions of coordinates only
  LocalBivector w1, w2;

  PencilContext context() const { return PencilContext{w1, w2}; }
};

// Builds the pair kernels from the f-data. Throws Degenerate if some f^i is
// identically zero, NotSemisimple on a degenerate chart, Error if f depends on
// jets of order >= 1. Both kernels are antisymmetry-checked.
HydroPair make_hydro_pair(const std::vector<Expr>& f);

// The built-in example pencils, transcribed kernel-by-kernel:
//   kdv0      : the dispersionless KdV pair (n = 1)
//   kdv       : KdV with the eps^2/8 delta''' term in the second bracket
//   ch        : Camassa-Holm pair (eps^2 term in the first bracket)
//   nls0      : the 2-component dispersionless pair in (w1, w2)
//   nls-case1 : nls0 with the -eps delta'' correction in the second bracket
//   nls-case2 : nls0 with the -eps delta'' correction in the first bracket
PencilSeries example_pencil(const std::string& name, int trunc = 4);
std::vector<std::string> example_names();

// Canonical coordinates of the nls0 pair: u^{1,2} = w1 +- 2 sqrt(w2).
struct NlsCoords {
  std::vector<Expr> u_of_w;  // expressions in the w chart
  std::vector<Expr> w_of_u;  // expressions in the u chart
  // branch choice sqrt(w2) -> (u1 - u2)/4, needed when w-chart expressions are
  // rewritten in the u chart
  AtomImages sqrt_images;
};
NlsCoords canonical_coordinates_nls();

// The nls0 pair expressed in its canonical coordinates (f^i = +-8/(u1-u2)).
HydroPair nls_canonical_pair();

// Second-order quasitrivial deformation representative: X = d2 I - d1 J with
// the log-type densities, cross-checked against the closed-form components.
struct DeformationRep {
  std::vector<Expr> c;
  LocalFunctional I, J;
  EvoField X;
  BivectorSeries Q;  // eps^2 part = d1 X, attached to the second bracket
};

// The u^{i,2}-coefficient of X^i equals (3/2) f^i c_i for this normal form.
extern const Rat kCentralCoeffFactor;

// Builds the representative two ways (bracket machinery vs the closed form)
// and verifies they agree; throws MismatchSZ22 otherwise. Each c_i must
// depend on u^i only.
DeformationRep deformation_rep(const HydroPair& pair, const std::vector<Expr>& c);

// Closed-form components of the representative field.
EvoField deformation_rep_closed_form(const HydroPair& pair, const std::vector<Expr>& c);

// Recovers the central functions from a representative field.
std::vector<Expr> extract_central(const HydroPair& pair, const EvoField& x);

}  // namespace loopalg

#endif

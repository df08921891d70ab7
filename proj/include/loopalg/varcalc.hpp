#ifndef LOOPALG_VARCALC_HPP
#define LOOPALG_VARCALC_HPP

#include <vector>

#include "loopalg/expr.hpp"

namespace loopalg {

// A local functional: density modulo Im(d/dx) and additive constants.
struct LocalFunctional {
  int n = 1;  // chart dimension
  Expr density;
};

// Variational derivative delta F / delta u^i = sum_s (-dx)^s d/du^{i,s}.
Expr euler(const Expr& density, int coord);
inline Expr euler(const LocalFunctional& f, int coord) { return euler(f.density, coord); }

// Equality in Lambda = A_1 / d A_0: euler of the difference vanishes for all
// coordinates.
bool functionals_equal(const LocalFunctional& f, const LocalFunctional& g);

// True iff e = dx(g) for some local g (kernel of the Euler operator with no
// constant term).
bool is_total_derivative(const Expr& e);

// Inverts the total derivative by highest-jet stripping. Precondition:
// is_total_derivative(e). Throws NotExact otherwise.
Expr integrate_dx(const Expr& e);

// Reconstructs a functional F with euler(F, i) = g[i-1] via the homotopy
// density  integral_0^1 sum_i u^i g_i[lambda u] dlambda. The gradients must be
// polynomial in all jet atoms (no opaque or Inv coefficients). The result is
// checked a posteriori; throws NotVariational on failure.
LocalFunctional homotopy_density(const std::vector<Expr>& g);

}  // namespace loopalg

#endif

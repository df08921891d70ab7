#ifndef LOOPALG_NUMERIC_HPP
#define LOOPALG_NUMERIC_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "loopalg/expr.hpp"

namespace loopalg {

// A smooth periodic loop per coordinate: finite Fourier sum with analytic jet
// evaluation.
struct FourierLoop {
  // per coordinate: mean, cos and sin coefficients for modes 1..K
  std::vector<double> mean;
  std::vector<std::vector<double>> cosc, sinc;

  int n() const { return static_cast<int>(mean.size()); }
  double jet(int coord, int order, double x) const;
  static FourierLoop random(std::mt19937_64& rng, int n, int modes, double amp);
};

// Pointwise evaluation; supports rational coefficients and jet atoms only.
double eval_expr(const Expr& e, const FourierLoop& loop, double x);

// Trapezoidal value of the functional over [0, 2pi) on a uniform grid.
double functional_value(const Expr& density, const FourierLoop& loop, int grid);

// Relative discrepancy between the finite-difference directional derivative of
// the discretized functional and the Euler-operator pairing <euler(f), dir>.
double euler_fd_discrepancy(const Expr& density, int n, const FourierLoop& loop,
                            const FourierLoop& dir, int grid, double h);

}  // namespace loopalg

#endif

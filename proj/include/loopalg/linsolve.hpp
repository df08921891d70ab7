#ifndef LOOPALG_LINSOLVE_HPP
#define LOOPALG_LINSOLVE_HPP

#include <vector>

#include "loopalg/rational.hpp"

namespace loopalg {

struct LinearSolution {
  bool consistent = false;
  std::vector<Rat> x;  // a particular solution; free variables set to zero
  int rank = 0;
};

// Exact Gaussian elimination over Q for A x = b.
LinearSolution solve_exact(std::vector<std::vector<Rat>> a, std::vector<Rat> b);

}  // namespace loopalg

#endif

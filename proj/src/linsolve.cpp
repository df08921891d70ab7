#include "loopalg/linsolve.hpp"

#include <cstddef>

namespace loopalg {

LinearSolution solve_exact(std::vector<std::vector<Rat>> a, std::vector<Rat> b) {
  const std::size_t rows = a.size();
  const std::size_t cols = rows ? a[0].size() : 0;
  std::vector<std::size_t> pivot_col;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t sel = r;
    while (sel < rows && a[sel][c] == 0) ++sel;
    if (sel == rows) continue;
    std::swap(a[sel], a[r]);
    std::swap(b[sel], b[r]);
    Rat inv = Rat(1) / a[r][c];
    for (std::size_t j = c; j < cols; ++j) a[r][j] *= inv;
    b[r] *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      Rat f = a[i][c];
      for (std::size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
      b[i] -= f * b[r];
    }
    pivot_col.push_back(c);
    ++r;
  }
  LinearSolution sol;
  sol.rank = static_cast<int>(r);
  for (std::size_t i = r; i < rows; ++i)
    if (b[i] != 0) return sol;  // inconsistent
  sol.consistent = true;
  sol.x.assign(cols, Rat(0));
  for (std::size_t i = 0; i < pivot_col.size(); ++i) sol.x[pivot_col[i]] = b[i];
  return sol;
}

}  // namespace loopalg

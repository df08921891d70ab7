#include "loopalg/numeric.hpp"

#include <cmath>

#include "loopalg/varcalc.hpp"

namespace loopalg {

double FourierLoop::jet(int coord, int order, double x) const {
  const auto& cc = cosc[static_cast<std::size_t>(coord - 1)];
  const auto& sc = sinc[static_cast<std::size_t>(coord - 1)];
  double v = order == 0 ? mean[static_cast<std::size_t>(coord - 1)] : 0.0;
  for (std::size_t m = 0; m < cc.size(); ++m) {
    double k = static_cast<double>(m + 1);
    double a = cc[m], b = sc[m];
    // rotate (a cos + b sin) by the derivative order
    for (int d = 0; d < order; ++d) {
      double na = k * b, nb = -k * a;
      a = na;
      b = nb;
    }
    v += a * std::cos(k * x) + b * std::sin(k * x);
  }
  return v;
}

FourierLoop FourierLoop::random(std::mt19937_64& rng, int n, int modes, double amp) {
  std::uniform_real_distribution<double> dist(-amp, amp);
  FourierLoop l;
  l.mean.resize(static_cast<std::size_t>(n));
  l.cosc.resize(static_cast<std::size_t>(n));
  l.sinc.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    l.mean[i] = 2.0 + dist(rng);  // keep loops away from zero
    for (int m = 0; m < modes; ++m) {
      l.cosc[i].push_back(dist(rng) / (m + 1.0));
      l.sinc[i].push_back(dist(rng) / (m + 1.0));
    }
  }
  return l;
}

double eval_expr(const Expr& e, const FourierLoop& loop, double x) {
  double total = 0.0;
  for (const auto& m : e.monomials()) {
    double v = rat_to_double(m.coeff);
    for (const auto& f : m.factors) {
      if (f.atom->kind != AtomKind::Jet)
        throw Error("eval_expr: only jet atoms are supported numerically");
      v *= std::pow(loop.jet(f.atom->jet.coord, f.atom->jet.order, x), f.pow);
    }
    total += v;
  }
  return total;
}

double functional_value(const Expr& density, const FourierLoop& loop, int grid) {
  const double pi = std::acos(-1.0);
  double h = 2.0 * pi / grid;
  double s = 0.0;
  for (int i = 0; i < grid; ++i) s += eval_expr(density, loop, i * h);
  return s * h;
}

double euler_fd_discrepancy(const Expr& density, int n, const FourierLoop& loop,
                            const FourierLoop& dir, int grid, double h) {
  FourierLoop up = loop, dn = loop;
  for (int i = 0; i < n; ++i) {
    up.mean[i] += h * dir.mean[i];
    dn.mean[i] -= h * dir.mean[i];
    for (std::size_t m = 0; m < loop.cosc[i].size(); ++m) {
      up.cosc[i][m] += h * dir.cosc[i][m];
      up.sinc[i][m] += h * dir.sinc[i][m];
      dn.cosc[i][m] -= h * dir.cosc[i][m];
      dn.sinc[i][m] -= h * dir.sinc[i][m];
    }
  }
  double fd = (functional_value(density, up, grid) - functional_value(density, dn, grid)) /
              (2.0 * h);
  const double pi = std::acos(-1.0);
  double step = 2.0 * pi / grid;
  double pairing = 0.0;
  double magnitude = 1.0;  // problem scale, so exact-density cases stay relative
  for (int k = 0; k < grid; ++k) magnitude += std::abs(eval_expr(density, loop, k * step)) * step;
  for (int i = 1; i <= n; ++i) {
    Expr g = euler(density, i);
    for (int k = 0; k < grid; ++k) {
      double x = k * step;
      pairing += eval_expr(g, loop, x) * dir.jet(i, 0, x) * step;
    }
  }
  double scale = std::max({std::abs(fd), std::abs(pairing), magnitude});
  return std::abs(fd - pairing) / scale;
}

}  // namespace loopalg

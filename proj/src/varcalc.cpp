#include "loopalg/varcalc.hpp"

#include <algorithm>

namespace loopalg {

Expr euler(const Expr& density, int coord) {
  Expr acc;
  for (const auto& v : jet_vars(density)) {
    if (v.coord != coord) continue;
    Expr p = partial(density, v);
    if (p.is_zero()) continue;
    Expr term = dx_pow(p, v.order);
    acc += (v.order % 2 == 0) ? term : -term;
  }
  return acc;
}

bool functionals_equal(const LocalFunctional& f, const LocalFunctional& g) {
  Expr diff = f.density - g.density;
  int n = std::max({f.n, g.n, max_coord(diff)});
  for (int i = 1; i <= n; ++i)
    if (!euler(diff, i).is_zero()) return false;
  return true;
}

bool is_total_derivative(const Expr& e) {
  if (e.constant_term() != 0) return false;
  int n = std::max(1, max_coord(e));
  for (int i = 1; i <= n; ++i)
    if (!euler(e, i).is_zero()) return false;
  return true;
}

namespace {

bool atom_contains_jet(const AtomPtr& ap, JetVar v) {
  switch (ap->kind) {
    case AtomKind::Jet:
      return ap->jet == v;
    case AtomKind::Root:
      return false;
    case AtomKind::Fn:
      for (const auto& arg : ap->args)
        if (jet_vars(arg).count(v)) return true;
      return false;
    case AtomKind::Inv:
      return jet_vars(ap->base).count(v) != 0;
  }
  return false;
}

bool is_log_of(const AtomPtr& ap, JetVar v) {
  return ap->kind == AtomKind::Fn && ap->name == "log" && ap->derivs.empty() &&
         ap->args.size() == 1 && ap->args[0] == Expr::jet(v.coord, v.order);
}

// integral of v^k (log v)^m dv as an expression in the jet atom v.
Expr power_log_antiderivative(JetVar v, int k, int m) {
  Expr vv = Expr::jet(v.coord, v.order);
  if (m == 0) {
    if (k == -1) return log_of(vv);
    return vv.pow(k + 1) * Rat(1, k + 1);
  }
  if (k == -1) return log_of(vv).pow(m + 1) * Rat(1, m + 1);
  return vv.pow(k + 1) * log_of(vv).pow(m) * Rat(1, k + 1) -
         power_log_antiderivative(v, k, m - 1) * Rat(m, k + 1);
}

// Antiderivative of a with respect to the single jet variable v. Handles
// Laurent powers of v times integer powers of log v, plus the formal rule
// integral f_{...i...}(u) du^i = f_{...}(u) for opaque derivative atoms.
// Throws NotExact when a depends on v in any other way.
Expr antiderivative(const Expr& a, JetVar v) {
  Expr out;
  for (const auto& m : a.monomials()) {
    int vpow = 0, logpow = 0;
    const Atom* opaque_hit = nullptr;
    AtomPtr opaque_ptr;
    Mono rest;
    rest.coeff = m.coeff;
    for (const auto& f : m.factors) {
      if (f.atom->kind == AtomKind::Jet && f.atom->jet == v) {
        vpow = f.pow;
        continue;
      }
      if (is_log_of(f.atom, v)) {
        if (f.pow < 0) throw NotExact("negative power of log in antiderivative");
        logpow = f.pow;
        continue;
      }
      if (atom_contains_jet(f.atom, v)) {
        if (f.atom->kind == AtomKind::Fn && f.pow == 1 && v.order == 0 && !opaque_hit) {
          opaque_hit = f.atom.get();
          opaque_ptr = f.atom;
          continue;
        }
        throw NotExact("cannot antidifferentiate factor " + Expr::atom_pow(f.atom, f.pow).str() +
                       " with respect to u^{" + std::to_string(v.coord) + "," +
                       std::to_string(v.order) + "}");
      }
      rest.factors.push_back(f);
    }
    if (opaque_hit) {
      // Only the pattern f_{...,i,...}(..., u^i, ...) with plain coordinate
      // arguments integrates formally.
      if (vpow != 0 || logpow != 0)
        throw NotExact("mixed opaque and power dependence in antiderivative");
      const Atom& fa = *opaque_hit;
      auto it = std::find(fa.derivs.begin(), fa.derivs.end(), v.coord);
      bool arg_ok = v.coord >= 1 && v.coord <= static_cast<int>(fa.args.size()) &&
                    fa.args[v.coord - 1] == Expr::jet(v.coord, 0);
      for (std::size_t k = 0; k < fa.args.size(); ++k)
        if (static_cast<int>(k) + 1 != v.coord && jet_vars(fa.args[k]).count(v)) arg_ok = false;
      if (it == fa.derivs.end() || !arg_ok)
        throw NotExact("opaque factor " + Expr::atom_pow(opaque_ptr, 1).str() +
                       " is not a formal derivative in u" + std::to_string(v.coord));
      std::vector<int> derivs(fa.derivs.begin(), fa.derivs.end());
      derivs.erase(derivs.begin() + (it - fa.derivs.begin()));
      out += Expr::from_monomials({rest}) * fn_app(fa.name, fa.args, derivs);
      continue;
    }
    out += Expr::from_monomials({rest}) * power_log_antiderivative(v, vpow, logpow);
  }
  return out;
}

}  // namespace

Expr integrate_dx(const Expr& e) {
  if (!is_total_derivative(e))
    throw NotExact("integrate_dx: input is not a total derivative: " + e.str());
  Expr rem = e;
  Expr g;
  int guard = 0;
  while (!rem.is_zero()) {
    if (++guard > 5000) throw NotExact("integrate_dx: stripping did not terminate");
    int order = max_jet_order(rem);
    if (order <= 0) throw NotExact("integrate_dx: residue is a nonconstant function of u");
    // Strip the highest coordinate present at the top order first.
    int coord = 0;
    for (const auto& v : jet_vars(rem))
      if (v.order == order) coord = std::max(coord, v.coord);
    if (coord == 0) {
      // Top order occurs only inside opaque arguments; no stripping rule.
      throw NotExact("integrate_dx: top jet order occurs only inside opaque atoms");
    }
    Expr a = partial(rem, JetVar{coord, order});
    Expr piece = antiderivative(a, JetVar{coord, order - 1});
    g += piece;
    rem -= total_derivative(piece);
  }
  return g;
}

LocalFunctional homotopy_density(const std::vector<Expr>& g) {
  const int n = static_cast<int>(g.size());
  Expr density;
  for (int i = 1; i <= n; ++i) {
    for (const auto& m : g[i - 1].monomials()) {
      long w = 0;  // lambda-degree of the gradient monomial (all jets scale)
      for (const auto& f : m.factors) {
        if (f.atom->kind == AtomKind::Jet) {
          if (f.pow < 0)
            throw NotVariational("homotopy_density: gradient has negative jet powers");
          w += f.pow;
        } else if (f.atom->kind != AtomKind::Root) {
          throw NotVariational("homotopy_density: gradient is not a jet polynomial");
        }
      }
      density += Expr::jet(i, 0) * Expr::from_monomials({m}) * Rat(1, w + 1);
    }
  }
  LocalFunctional F{n, density};
  for (int i = 1; i <= n; ++i)
    if (euler(F, i) != g[i - 1])
      throw NotVariational("homotopy_density: Euler check failed for coordinate " +
                           std::to_string(i));
  return F;
}

}  // namespace loopalg

#include "loopalg/structures.hpp"

#include <algorithm>

namespace loopalg {

namespace {

Expr U(int i, int s = 0) { return Expr::jet(i, s); }
Expr C(long n, long d = 1) { return Expr::from_rat(Rat(n, d)); }

}  // namespace

HydroPair make_hydro_pair(const std::vector<Expr>& f) {
  const int n = static_cast<int>(f.size());
  if (n < 1) throw Error("make_hydro_pair: empty f-data");
  for (int i = 0; i < n; ++i) {
    if (f[i].is_zero()) throw Degenerate("f^" + std::to_string(i + 1) + " vanishes identically");
    if (max_jet_order(f[i]) > 0)
      throw Error("f^" + std::to_string(i + 1) + " must depend on coordinates only");
  }
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      if ((U(i) - U(j)).is_zero()) throw NotSemisimple("coinciding canonical coordinates");

  HydroPair pair;
  pair.n = n;
  pair.f = f;
  pair.w1 = LocalBivector(n);
  pair.w2 = LocalBivector(n);
  std::vector<Expr> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[i] = U(i + 1) * f[i];

  for (int i = 1; i <= n; ++i) {
    pair.w1.add_term(i, i, 1, f[i - 1]);
    pair.w1.add_term(i, i, 0, total_derivative(f[i - 1]) * Rat(1, 2));
    pair.w2.add_term(i, i, 1, g[i - 1]);
    pair.w2.add_term(i, i, 0, total_derivative(g[i - 1]) * Rat(1, 2));
    for (int j = 1; j <= n; ++j) {
      if (i == j) continue;
      Expr fi = f[i - 1], fj = f[j - 1];
      Expr fj_i = partial(fj, JetVar{i, 0});
      Expr fi_j = partial(fi, JetVar{j, 0});
      Expr a = (fi * fj.inverse() * fj_i * U(j, 1) - fj * fi.inverse() * fi_j * U(i, 1)) * Rat(1, 2);
      Expr b = (U(i) * fi * fj.inverse() * fj_i * U(j, 1) -
                U(j) * fj * fi.inverse() * fi_j * U(i, 1)) *
               Rat(1, 2);
      pair.w1.add_term(i, j, 0, a);
      pair.w2.add_term(i, j, 0, b);
    }
  }
  if (!is_antisymmetric(pair.w1) || !is_antisymmetric(pair.w2))
    throw Error("make_hydro_pair: constructed kernels fail antisymmetry");
  // The f-data must come from a genuine flat pencil; for n >= 2 this is a
  // real constraint, so verify compatibility at the hydrodynamic order.
  BivectorSeries s1, s2;
  s1.trunc = s2.trunc = 0;
  s1.set(0, pair.w1);
  s2.set(0, pair.w2);
  auto rep = check_pencil(s1, s2, 0);
  if (!rep.compatible)
    throw Error("make_hydro_pair: f-data does not define a compatible pencil\n" +
                rep.to_string());
  return pair;
}

namespace {

BivectorSeries single(int trunc, const LocalBivector& b) {
  BivectorSeries s;
  s.trunc = trunc;
  s.set(0, b);
  return s;
}

LocalBivector skew1(const Expr& g) {
  LocalBivector p(1);
  p.add_term(1, 1, 1, g);
  p.add_term(1, 1, 0, total_derivative(g) * Rat(1, 2));
  return p;
}

LocalBivector nls_first0() {
  LocalBivector p(2);
  p.add_term(1, 2, 1, C(1));
  p.add_term(2, 1, 1, C(1));
  return p;
}

LocalBivector nls_second0() {
  LocalBivector p(2);
  p.add_term(1, 1, 1, C(2));
  p.add_term(1, 2, 1, U(1));
  p.add_term(1, 2, 0, U(1, 1));
  p.add_term(2, 1, 1, U(1));
  p.add_term(2, 2, 1, C(2) * U(2));
  p.add_term(2, 2, 0, U(2, 1));
  return p;
}

}  // namespace

PencilSeries example_pencil(const std::string& name, int trunc) {
  if (name == "kdv0") {
    return {single(trunc, skew1(C(1))), single(trunc, skew1(U(1)))};
  }
  if (name == "kdv") {
    auto p = single(trunc, skew1(C(1)));
    auto q = single(trunc, skew1(U(1)));
    LocalBivector d3(1);
    d3.add_term(1, 1, 3, C(1, 8));
    q.set(2, d3);
    return {p, q};
  }
  if (name == "ch") {
    auto p = single(trunc, skew1(C(1)));
    LocalBivector d3(1);
    d3.add_term(1, 1, 3, C(-1, 8));
    p.set(2, d3);
    auto q = single(trunc, skew1(U(1)));
    return {p, q};
  }
  if (name == "nls0") {
    return {single(trunc, nls_first0()), single(trunc, nls_second0())};
  }
  if (name == "nls-case1") {
    auto p = single(trunc, nls_first0());
    auto q = single(trunc, nls_second0());
    LocalBivector e1(2);
    e1.add_term(1, 2, 2, C(-1));
    e1.add_term(2, 1, 2, C(1));
    q.set(1, e1);
    return {p, q};
  }
  if (name == "nls-case2") {
    auto p = single(trunc, nls_first0());
    LocalBivector e1(2);
    e1.add_term(1, 2, 2, C(-1));
    e1.add_term(2, 1, 2, C(1));
    p.set(1, e1);
    auto q = single(trunc, nls_second0());
    return {p, q};
  }
  throw Error("unknown example pencil: " + name);
}

std::vector<std::string> example_names() {
  return {"kdv0", "kdv", "ch", "nls0", "nls-case1", "nls-case2"};
}

NlsCoords canonical_coordinates_nls() {
  NlsCoords c;
  Expr root = sqrt_of(U(2));
  c.u_of_w = {U(1) + C(2) * root, U(1) - C(2) * root};
  Expr diff = (U(1) - U(2)) * Rat(1, 4);
  c.w_of_u = {(U(1) + U(2)) * Rat(1, 2), diff * diff};
  c.sqrt_images.emplace_back(make_fn_atom("sqrt", {U(2)}), diff);
  return c;
}

HydroPair nls_canonical_pair() {
  Expr s_inv = (U(1) - U(2)).inverse();
  return make_hydro_pair({C(8) * s_inv, C(-8) * s_inv});
}

const Rat kCentralCoeffFactor = Rat(3, 2);

EvoField deformation_rep_closed_form(const HydroPair& pair, const std::vector<Expr>& c) {
  const int n = pair.n;
  EvoField x(n);
  for (int i = 1; i <= n; ++i) {
    Expr fi = pair.f[i - 1];
    Expr acc;
    for (int j = 1; j <= n; ++j) {
      Expr fj = pair.f[j - 1];
      Expr cuj = c[j - 1] * U(j, 1);
      // The delta-coefficient of omega1 is exactly (1/2) delta_ij f^i_x + A^{ij}.
      Expr first_coeff = pair.w1.coeff(i, j, 0);
      Expr second_coeff;  // 2 delta_ij f^i - L^{ij}
      if (i == j)
        second_coeff = fi * Rat(3, 2);
      else
        second_coeff =
            -(U(i) - U(j)) * fi * fj.inverse() * partial(fj, JetVar{i, 0}) * Rat(1, 2);
      acc += first_coeff * cuj + second_coeff * total_derivative(cuj);
    }
    x.xi[i - 1] = acc;
  }
  return x;
}

DeformationRep deformation_rep(const HydroPair& pair, const std::vector<Expr>& c) {
  const int n = pair.n;
  if (static_cast<int>(c.size()) != n) throw Error("deformation_rep: wrong number of central functions");
  for (int i = 1; i <= n; ++i)
    for (const auto& v : jet_vars(c[i - 1]))
      if (v != JetVar{i, 0})
        throw Error("central function c_" + std::to_string(i) + " must depend on u^" +
                    std::to_string(i) + " only");

  DeformationRep rep;
  rep.c = c;
  Expr dens_i, dens_j;
  for (int i = 1; i <= n; ++i) {
    Expr uix = U(i, 1);
    dens_i += c[i - 1] * uix * log_of(uix);
    dens_j += U(i) * c[i - 1] * uix * log_of(uix);
  }
  rep.I = LocalFunctional{n, dens_i};
  rep.J = LocalFunctional{n, dens_j};

  PencilContext ctx = pair.context();
  EvoField via_brackets = d_of(ctx, 2, rep.I) - d_of(ctx, 1, rep.J);
  EvoField closed = deformation_rep_closed_form(pair, c);
  if (!(via_brackets == closed))
    throw MismatchSZ22("bracket-machinery field disagrees with the closed-form components");
  for (int i = 0; i < n; ++i)
    if (!is_differential_polynomial(closed.xi[i]))
      throw Error("representative component X^" + std::to_string(i + 1) +
                  " is not a differential polynomial");
  rep.X = closed;
  rep.Q.trunc = 2;
  LocalBivector q2 = d_of(ctx, 1, rep.X);
  if (!q2.is_zero()) rep.Q.set(2, q2);
  return rep;
}

std::vector<Expr> extract_central(const HydroPair& pair, const EvoField& x) {
  std::vector<Expr> c;
  c.reserve(static_cast<std::size_t>(pair.n));
  for (int i = 1; i <= pair.n; ++i) {
    Expr coeff = partial(x.xi[i - 1], JetVar{i, 2});
    if (!partial(coeff, JetVar{i, 2}).is_zero())
      throw Error("extract_central: component is not linear in u^{i,2}");
    c.push_back(coeff * pair.f[i - 1].inverse() * (Rat(1) / kCentralCoeffFactor));
  }
  return c;
}

}  // namespace loopalg

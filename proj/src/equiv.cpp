#include "loopalg/equiv.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

#include "loopalg/linsolve.hpp"

namespace loopalg {

namespace {

Expr U(int i, int s = 0) { return Expr::jet(i, s); }

Rat binom(int n, int k) {
  if (k < 0 || k > n) return Rat(0);
  Rat r(1);
  for (int i = 0; i < k; ++i) r = r * Rat(n - i) / Rat(i + 1);
  return r;
}

Rat factorial(int n) {
  Rat r(1);
  for (int i = 2; i <= n; ++i) r *= Rat(i);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// expression series

ExprSeries es_const(const Expr& e, int trunc) {
  ExprSeries s;
  s.trunc = trunc;
  if (!e.is_zero()) s.parts.emplace(0, e);
  return s;
}

ExprSeries es_add(const ExprSeries& a, const ExprSeries& b) {
  ExprSeries out;
  out.trunc = std::min(a.trunc, b.trunc);
  for (const auto& [m, e] : a.parts)
    if (m <= out.trunc && !e.is_zero()) out.parts.emplace(m, e);
  for (const auto& [m, e] : b.parts) {
    if (m > out.trunc || e.is_zero()) continue;
    auto it = out.parts.find(m);
    if (it == out.parts.end())
      out.parts.emplace(m, e);
    else {
      it->second += e;
      if (it->second.is_zero()) out.parts.erase(it);
    }
  }
  return out;
}

ExprSeries es_sub(const ExprSeries& a, const ExprSeries& b) {
  return es_add(a, es_scale(b, Rat(-1)));
}

ExprSeries es_mul(const ExprSeries& a, const ExprSeries& b) {
  ExprSeries out;
  out.trunc = std::min(a.trunc, b.trunc);
  for (const auto& [ma, ea] : a.parts)
    for (const auto& [mb, eb] : b.parts) {
      if (ma + mb > out.trunc) continue;
      Expr prod = ea * eb;
      if (prod.is_zero()) continue;
      auto it = out.parts.find(ma + mb);
      if (it == out.parts.end())
        out.parts.emplace(ma + mb, prod);
      else {
        it->second += prod;
        if (it->second.is_zero()) out.parts.erase(it);
      }
    }
  return out;
}

ExprSeries es_scale(const ExprSeries& a, const Rat& r) {
  ExprSeries out;
  out.trunc = a.trunc;
  if (r == 0) return out;
  for (const auto& [m, e] : a.parts) out.parts.emplace(m, e * r);
  return out;
}

ExprSeries es_dx(const ExprSeries& a) {
  ExprSeries out;
  out.trunc = a.trunc;
  for (const auto& [m, e] : a.parts) {
    Expr d = total_derivative(e);
    if (!d.is_zero()) out.parts.emplace(m, d);
  }
  return out;
}

ExprSeries es_pow(const ExprSeries& a, int k) {
  if (k < 0) return es_pow(es_inverse(a), -k);
  ExprSeries acc = es_const(Expr::from_int(1), a.trunc);
  for (int i = 0; i < k; ++i) acc = es_mul(acc, a);
  return acc;
}

ExprSeries es_inverse(const ExprSeries& a) {
  const Expr* lead = a.part(0);
  if (!lead || lead->is_zero())
    throw NotInvertible("series inverse requires an invertible leading part");
  Expr inv0 = lead->inverse();
  // a = a0 (1 + a0^{-1} rho); inverse by geometric series.
  ExprSeries rho;
  rho.trunc = a.trunc;
  for (const auto& [m, e] : a.parts)
    if (m >= 1) rho.parts.emplace(m, e * inv0);
  ExprSeries acc = es_const(Expr::from_int(1), a.trunc);
  ExprSeries powr = es_const(Expr::from_int(1), a.trunc);
  for (int m = 1; m <= a.trunc; ++m) {
    powr = es_mul(powr, rho);
    if (powr.parts.empty()) break;
    acc = es_add(acc, es_scale(powr, Rat(m % 2 == 0 ? 1 : -1)));
  }
  return es_mul(acc, es_const(inv0, a.trunc));
}

bool es_is_zero(const ExprSeries& a) {
  for (const auto& [m, e] : a.parts)
    if (!e.is_zero()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// series substitution with formal Taylor expansion of opaque atoms

namespace {

struct SeriesSubstCtx {
  const std::vector<ExprSeries>& map;
  int trunc;
  const AtomImages& images;
  std::map<std::pair<int, int>, ExprSeries> jet_cache;

  const Expr* declared_image(const AtomPtr& ap) const {
    for (const auto& [atom, img] : images)
      if (atom == ap) return &img;
    return nullptr;
  }

  const ExprSeries& jet_image(int coord, int order) {
    auto key = std::make_pair(coord, order);
    auto it = jet_cache.find(key);
    if (it != jet_cache.end()) return it->second;
    if (coord < 1 || coord > static_cast<int>(map.size()))
      throw Error("subst_series: coordinate out of range");
    ExprSeries v = order == 0 ? map[coord - 1].truncated(trunc)
                              : es_dx(jet_image(coord, order - 1));
    return jet_cache.emplace(key, std::move(v)).first->second;
  }
};

ExprSeries subst_series_rec(const Expr& e, SeriesSubstCtx& ctx);

// Taylor expansion of an opaque application whose arguments are series.
// Derivative coefficients are produced by differentiating a placeholder
// expression, so log/sqrt closed forms and formal derivative atoms are
// handled uniformly.
ExprSeries fn_series(const AtomPtr& ap, SeriesSubstCtx& ctx) {
  const Atom& a = *ap;
  const int m = static_cast<int>(a.args.size());
  std::vector<ExprSeries> args;
  args.reserve(a.args.size());
  for (const auto& arg : a.args) args.push_back(subst_series_rec(arg, ctx));
  std::vector<Expr> lead(static_cast<std::size_t>(m));
  std::vector<ExprSeries> rho(static_cast<std::size_t>(m));
  bool any_rho = false;
  for (int k = 0; k < m; ++k) {
    const Expr* l = args[k].part(0);
    lead[k] = l ? *l : Expr();
    rho[k].trunc = ctx.trunc;
    for (const auto& [o, e] : args[k].parts)
      if (o >= 1) rho[k].parts.emplace(o, e);
    if (!es_is_zero(rho[k])) any_rho = true;
  }
  auto coeff_at = [&](const std::vector<int>& d) -> Expr {
    // d^{|d|} f / prod d(arg_k)^{d_k}, evaluated at the leading arguments.
    std::vector<Expr> placeholders;
    placeholders.reserve(a.args.size());
    for (int k = 1; k <= m; ++k) placeholders.push_back(U(k));
    Expr g = Expr::atom_pow(make_fn_atom(a.name, placeholders, a.derivs), 1);
    for (int k = 0; k < m; ++k)
      for (int r = 0; r < d[k]; ++r) g = partial(g, JetVar{k + 1, 0});
    return substitute_jets(g, lead);
  };
  if (!any_rho) return es_const(coeff_at(std::vector<int>(m, 0)), ctx.trunc);

  ExprSeries out;
  out.trunc = ctx.trunc;
  std::vector<int> d(static_cast<std::size_t>(m), 0);
  // enumerate multi-indices with |d| <= trunc (corrections start at eps^1)
  while (true) {
    int total = 0;
    for (int k = 0; k < m; ++k) total += d[k];
    if (total <= ctx.trunc) {
      bool feasible = true;
      for (int k = 0; k < m; ++k)
        if (d[k] > 0 && es_is_zero(rho[k])) feasible = false;
      if (feasible) {
        ExprSeries term = es_const(coeff_at(d), ctx.trunc);
        Rat scale(1);
        for (int k = 0; k < m; ++k) {
          term = es_mul(term, es_pow(rho[k], d[k]));
          scale /= factorial(d[k]);
        }
        out = es_add(out, es_scale(term, scale));
      }
    }
    // next multi-index
    int k = 0;
    while (k < m) {
      if (++d[k] <= ctx.trunc) {
        int t2 = 0;
        for (int kk = 0; kk < m; ++kk) t2 += d[kk];
        if (t2 <= ctx.trunc) break;
      }
      d[k] = 0;
      ++k;
    }
    if (k == m) break;
  }
  return out;
}

ExprSeries atom_series(const AtomPtr& ap, SeriesSubstCtx& ctx) {
  if (const Expr* img = ctx.declared_image(ap)) return es_const(*img, ctx.trunc);
  switch (ap->kind) {
    case AtomKind::Jet:
      return ctx.jet_image(ap->jet.coord, ap->jet.order);
    case AtomKind::Root:
      return es_const(Expr::atom_pow(ap, 1), ctx.trunc);
    case AtomKind::Fn:
      return fn_series(ap, ctx);
    case AtomKind::Inv:
      return subst_series_rec(ap->base, ctx);
  }
  return ExprSeries{ctx.trunc, {}};
}

ExprSeries subst_series_rec(const Expr& e, SeriesSubstCtx& ctx) {
  ExprSeries out;
  out.trunc = ctx.trunc;
  for (const auto& m : e.monomials()) {
    ExprSeries term = es_const(Expr::from_rat(m.coeff), ctx.trunc);
    for (const auto& f : m.factors) term = es_mul(term, es_pow(atom_series(f.atom, ctx), f.pow));
    out = es_add(out, term);
  }
  return out;
}

}  // namespace

ExprSeries subst_series(const Expr& e, const std::vector<ExprSeries>& map, int trunc,
                        const AtomImages& images) {
  SeriesSubstCtx ctx{map, trunc, images, {}};
  return subst_series_rec(e, ctx);
}

// ---------------------------------------------------------------------------
// Miura transforms

MiuraTransform MiuraTransform::identity(int n) {
  MiuraTransform t;
  t.dim = n;
  for (int i = 1; i <= n; ++i) {
    t.point.push_back(U(i));
    t.point_inverse.push_back(U(i));
  }
  return t;
}

MiuraTransform MiuraTransform::point_transform(std::vector<Expr> fwd, std::vector<Expr> inv) {
  MiuraTransform t;
  t.dim = static_cast<int>(fwd.size());
  t.point = std::move(fwd);
  t.point_inverse = std::move(inv);
  return t;
}

bool MiuraTransform::is_identity_point() const {
  for (int i = 1; i <= dim; ++i)
    if (point[i - 1] != U(i)) return false;
  return true;
}

std::vector<std::string> MiuraTransform::validate_grading() const {
  std::vector<std::string> warn;
  for (const auto& [k, fs] : corrections)
    for (int i = 0; i < dim; ++i) {
      if (fs[i].is_zero()) continue;
      auto d = homogeneous_degree(fs[i]);
      if (!d || *d != k) {
        std::ostringstream os;
        os << "order-" << k << " correction of coordinate " << (i + 1)
           << " is not homogeneous of degree " << k << ": " << fs[i].str();
        warn.push_back(os.str());
      }
      if (!quasi && !is_differential_polynomial(fs[i]))
        warn.push_back("non-polynomial correction in a transform not marked quasi");
    }
  return warn;
}

std::string MiuraTransform::str() const {
  std::ostringstream os;
  for (int i = 0; i < dim; ++i) {
    os << "u" << (i + 1) << " -> " << point[i].str();
    for (const auto& [k, fs] : corrections)
      if (!fs[i].is_zero()) os << " + eps^" << k << " * (" << fs[i].str() << ")";
    os << "\n";
  }
  return os.str();
}

std::vector<ExprSeries> miura_forward_series(const MiuraTransform& t, int order) {
  std::vector<ExprSeries> out(static_cast<std::size_t>(t.dim));
  for (int i = 0; i < t.dim; ++i) {
    out[i].trunc = order;
    out[i].set(0, t.point[i]);
    for (const auto& [k, fs] : t.corrections)
      if (k <= order && !fs[i].is_zero()) out[i].set(k, fs[i]);
  }
  return out;
}

std::vector<ExprSeries> miura_inverse_series(const MiuraTransform& t, int order) {
  const int n = t.dim;
  if (static_cast<int>(t.point_inverse.size()) != n)
    throw NotInvertible("transform lacks a point inverse");
  std::vector<ExprSeries> psi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    psi[i].trunc = order;
    psi[i].set(0, t.point_inverse[i]);
  }
  // Jacobian of the point inverse (in the new chart): the linearization that
  // undoes the point part order by order.
  std::vector<std::vector<Expr>> jac(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (int i = 1; i <= n; ++i) jac[j].push_back(partial(t.point_inverse[j], JetVar{i, 0}));

  auto fwd = miura_forward_series(t, order);
  for (int k = 1; k <= order; ++k) {
    // residual of phi(psi) - id at order k
    std::vector<Expr> rk(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      ExprSeries comp;
      comp.trunc = order;
      for (const auto& [m, e] : fwd[i].parts) {
        ExprSeries s = subst_series(e, psi, order - m, t.inverse_atom_images);
        for (const auto& [m2, e2] : s.parts)
          comp = es_add(comp, ExprSeries{order, {{m + m2, e2}}});
      }
      const Expr* part = comp.part(k);
      rk[i] = part ? *part : Expr();
    }
    for (int j = 0; j < n; ++j) {
      Expr delta;
      for (int i = 0; i < n; ++i) {
        if (rk[i].is_zero() || jac[j][i].is_zero()) continue;
        delta -= jac[j][i] * rk[i];
      }
      if (!delta.is_zero()) {
        Expr cur = psi[j].part(k) ? *psi[j].part(k) : Expr();
        psi[j].set(k, cur + delta);
      }
    }
  }
  // verify
  for (int i = 0; i < n; ++i) {
    ExprSeries comp;
    comp.trunc = order;
    for (const auto& [m, e] : fwd[i].parts) {
      ExprSeries s = subst_series(e, psi, order - m, t.inverse_atom_images);
      for (const auto& [m2, e2] : s.parts) comp = es_add(comp, ExprSeries{order, {{m + m2, e2}}});
    }
    comp = es_sub(comp, es_const(U(i + 1), order));
    if (!es_is_zero(comp))
      throw NotInvertible("transform could not be inverted to order " + std::to_string(order));
  }
  return psi;
}

MiuraTransform compose(const MiuraTransform& t2, const MiuraTransform& t1, int order) {
  if (t1.dim != t2.dim) throw Error("compose: dimension mismatch");
  const int n = t1.dim;
  auto phi1 = miura_forward_series(t1, order);
  MiuraTransform out;
  out.dim = n;
  out.quasi = t1.quasi || t2.quasi;
  auto fwd2 = miura_forward_series(t2, order);
  for (int i = 0; i < n; ++i) {
    ExprSeries comp;
    comp.trunc = order;
    for (const auto& [m, e] : fwd2[i].parts) {
      ExprSeries s = subst_series(e, phi1, order - m);
      for (const auto& [m2, e2] : s.parts) comp = es_add(comp, ExprSeries{order, {{m + m2, e2}}});
    }
    const Expr* p0 = comp.part(0);
    out.point.push_back(p0 ? *p0 : Expr());
    for (const auto& [m, e] : comp.parts) {
      if (m == 0 || e.is_zero()) continue;
      auto it = out.corrections.find(m);
      if (it == out.corrections.end())
        it = out.corrections.emplace(m, std::vector<Expr>(static_cast<std::size_t>(n))).first;
      it->second[i] = e;
    }
  }
  for (int j = 0; j < n; ++j)
    out.point_inverse.push_back(
        substitute_jets(t1.point_inverse[j], t2.point_inverse, t2.inverse_atom_images));
  out.inverse_atom_images = t1.inverse_atom_images;
  out.inverse_atom_images.insert(out.inverse_atom_images.end(),
                                 t2.inverse_atom_images.begin(),
                                 t2.inverse_atom_images.end());
  return out;
}

MiuraTransform exp_transform(int k, const EvoField& gen, int order) {
  MiuraTransform t = MiuraTransform::identity(gen.n());
  std::vector<Expr> iter(gen.xi.begin(), gen.xi.end());
  Rat fact(1);
  for (int m = 1; m * k <= order; ++m) {
    fact /= Rat(m);
    auto it = t.corrections.emplace(m * k, std::vector<Expr>(gen.xi.size())).first;
    for (int i = 0; i < gen.n(); ++i) it->second[i] = it->second[i] + iter[i] * fact;
    if ((m + 1) * k <= order)
      for (int i = 0; i < gen.n(); ++i) iter[i] = apply_field(gen, iter[i]);
  }
  for (auto it = t.corrections.begin(); it != t.corrections.end();) {
    bool all_zero = true;
    for (const auto& e : it->second)
      if (!e.is_zero()) all_zero = false;
    it = all_zero ? t.corrections.erase(it) : std::next(it);
  }
  return t;
}

// ---------------------------------------------------------------------------
// pushforward

BivectorSeries pushforward(const BivectorSeries& p, const MiuraTransform& t, int order) {
  const int n = t.dim;
  auto phi = miura_forward_series(t, order);
  auto psi = miura_inverse_series(t, order);

  // Prolonged Jacobian entries dphi^i/du^{k,s} as series in the old chart.
  std::vector<std::map<std::pair<int, int>, ExprSeries>> jac(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (const auto& [m, e] : phi[i].parts)
      for (const auto& v : jet_vars(e)) {
        Expr d = partial(e, v);
        if (d.is_zero()) continue;
        auto key = std::make_pair(v.coord, v.order);
        auto it = jac[i].find(key);
        if (it == jac[i].end()) {
          ExprSeries s;
          s.trunc = order;
          s.set(m, d);
          jac[i].emplace(key, std::move(s));
        } else {
          Expr cur = it->second.part(m) ? *it->second.part(m) : Expr();
          it->second.set(m, cur + d);
        }
      }

  // dx^r caches for jacobian series
  auto dx_series = [&](const ExprSeries& s, int r) {
    ExprSeries out = s;
    for (int q = 0; q < r; ++q) out = es_dx(out);
    return out;
  };

  // accumulate coefficients (still in the old chart)
  std::map<std::tuple<int, int, int>, ExprSeries> acc;
  auto add_acc = [&](int i, int j, int ord, const ExprSeries& s) {
    auto key = std::make_tuple(i, j, ord);
    auto it = acc.find(key);
    if (it == acc.end())
      acc.emplace(key, s);
    else
      it->second = es_add(it->second, s);
  };

  for (int k = 1; k <= n; ++k)
    for (int l = 1; l <= n; ++l)
      for (const auto& [pm, kern] : p.parts) {
        if (pm > order) continue;
        for (const auto& [m, A] : kern.row(k, l)) {
          for (int i = 1; i <= n; ++i) {
            for (auto itI = jac[i - 1].begin(); itI != jac[i - 1].end(); ++itI) {
              if (itI->first.first != k) continue;
              const int s = itI->first.second;
              const ExprSeries& phi_iks = itI->second;
              for (int j = 1; j <= n; ++j) {
                for (auto& [keyJ, phi_jlt] : jac[j - 1]) {
                  if (keyJ.first != l) continue;
                  const int tt = keyJ.second;
                  Rat tsign = (tt % 2 == 0) ? Rat(1) : Rat(-1);
                  for (int aa = 0; aa <= s; ++aa) {
                    Expr dA = dx_pow(A, s - aa);
                    if (dA.is_zero()) continue;
                    ExprSeries dAs;
                    dAs.trunc = order;
                    dAs.set(pm, dA);
                    int base_ord = m + tt + aa;
                    for (int r = 0; r <= base_ord; ++r) {
                      ExprSeries term = es_mul(phi_iks, es_mul(dAs, dx_series(phi_jlt, r)));
                      term = es_scale(term, binom(s, aa) * binom(base_ord, r) * tsign);
                      if (!es_is_zero(term)) add_acc(i, j, base_ord - r, term);
                    }
                  }
                }
              }
            }
          }
        }
      }

  // back-substitute the old coordinates and assemble the series
  BivectorSeries out;
  out.trunc = order;
  for (auto& [key, series] : acc) {
    auto [i, j, ord] = key;
    for (const auto& [m, e] : series.parts) {
      ExprSeries sub = subst_series(e, psi, order - m, t.inverse_atom_images);
      for (const auto& [m2, e2] : sub.parts) {
        int mo = m + m2;
        if (mo > order || e2.is_zero()) continue;
        auto it = out.parts.find(mo);
        if (it == out.parts.end()) it = out.parts.emplace(mo, LocalBivector(n)).first;
        it->second.add_term(i, j, ord, e2);
      }
    }
  }
  for (auto it = out.parts.begin(); it != out.parts.end();)
    it = it->second.is_zero() ? out.parts.erase(it) : std::next(it);
  return out;
}

PencilSeries pushforward_pair(const PencilSeries& p, const MiuraTransform& t, int order) {
  return {pushforward(p.first, t, order), pushforward(p.second, t, order)};
}

BivectorSeries pushforward_exp_adjoint(const BivectorSeries& p, int k, const EvoField& gen,
                                       int order) {
  BivectorSeries out;
  out.trunc = order;
  for (const auto& [m, part] : p.parts) {
    if (m > order) continue;
    LocalBivector cur = part;
    Rat fact(1);
    for (int j = 0; m + j * k <= order; ++j) {
      if (j > 0) {
        cur = lie_bivector(cur, gen);
        fact *= Rat(-1, j);
      }
      if (cur.is_zero()) break;
      LocalBivector scaled = cur * fact;
      int mo = m + j * k;
      auto it = out.parts.find(mo);
      if (it == out.parts.end())
        out.parts.emplace(mo, scaled);
      else
        it->second = it->second + scaled;
    }
  }
  for (auto it = out.parts.begin(); it != out.parts.end();)
    it = it->second.is_zero() ? out.parts.erase(it) : std::next(it);
  return out;
}

// ---------------------------------------------------------------------------
// ansatz enumeration and equivalence solving

namespace {

// degree-k jet monomials with orders in [1, max_order]
void jet_monomials_rec(int n, int k, int max_order, int min_order, const Expr& acc,
                       std::vector<Expr>& out) {
  if (k == 0) {
    out.push_back(acc);
    return;
  }
  for (int s = min_order; s <= std::min(k, max_order); ++s)
    for (int c = 1; c <= n; ++c)
      jet_monomials_rec(n, k - s, max_order, s, acc * U(c, s), out);
}

}  // namespace

std::vector<EvoField> enumerate_ansatz_fields(int n, int k, const AnsatzSpec& spec) {
  int max_order = spec.max_jet_order > 0 ? spec.max_jet_order : k;
  std::vector<Expr> monos;
  jet_monomials_rec(n, k, max_order, 1, Expr::from_int(1), monos);
  std::sort(monos.begin(), monos.end(), [](const Expr& a, const Expr& b) {
    return expr_cmp(a, b) < 0;
  });
  monos.erase(std::unique(monos.begin(), monos.end(),
                          [](const Expr& a, const Expr& b) { return a == b; }),
              monos.end());
  std::vector<Expr> basis = spec.coeff_basis;
  basis.insert(basis.begin(), Expr::from_int(1));
  std::vector<EvoField> fields;
  for (int i = 1; i <= n; ++i)
    for (const auto& b : basis)
      for (const auto& m : monos) {
        EvoField f(n);
        f.xi[i - 1] = b * m;
        fields.push_back(std::move(f));
      }
  return fields;
}

namespace {

struct RowIndex {
  std::map<std::string, std::size_t> index;
  std::size_t get(const std::string& key, std::vector<std::vector<Rat>>& a,
                  std::vector<Rat>& b, std::size_t cols) {
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    std::size_t r = a.size();
    a.emplace_back(cols, Rat(0));
    b.push_back(Rat(0));
    index.emplace(key, r);
    return r;
  }
};

void scatter_bivector(const LocalBivector& v, const std::string& tag, RowIndex& rows,
                      std::vector<std::vector<Rat>>& a, std::vector<Rat>& b,
                      std::size_t cols, std::size_t col, bool rhs) {
  for (int i = 1; i <= v.n(); ++i)
    for (int j = 1; j <= v.n(); ++j)
      for (const auto& [k, e] : v.row(i, j))
        for (const auto& m : e.monomials()) {
          std::ostringstream os;
          os << tag << "|" << i << "," << j << "," << k << "|" << monomial_key(m);
          std::size_t r = rows.get(os.str(), a, b, cols);
          if (rhs)
            b[r] += m.coeff;
          else
            a[r][col] += m.coeff;
        }
}

const LocalBivector* series_part_or_null(const BivectorSeries& s, int m) { return s.part(m); }

LocalBivector series_part_or_zero(const BivectorSeries& s, int m, int n) {
  const LocalBivector* p = s.part(m);
  return p ? *p : LocalBivector(n);
}

}  // namespace

SolveResult solve_equivalence(const PencilSeries& p, const PencilSeries& q,
                              const AnsatzSpec& ansatz, int order) {
  SolveResult res;
  const LocalBivector* p10 = series_part_or_null(p.first, 0);
  const LocalBivector* p20 = series_part_or_null(p.second, 0);
  const LocalBivector* q10 = series_part_or_null(q.first, 0);
  const LocalBivector* q20 = series_part_or_null(q.second, 0);
  if (!p10 || !p20 || !q10 || !q20) throw Error("solve_equivalence: missing leading parts");
  const int n = p10->n();
  if (!(*p10 == *q10) || !(*p20 == *q20))
    throw Error("solve_equivalence: pencils disagree at eps order 0");

  MiuraTransform total = MiuraTransform::identity(n);
  PencilSeries cur = p;
  for (int k = 1; k <= order; ++k) {
    LocalBivector r1 = series_part_or_zero(cur.first, k, n) - series_part_or_zero(q.first, k, n);
    LocalBivector r2 =
        series_part_or_zero(cur.second, k, n) - series_part_or_zero(q.second, k, n);
    if (r1.is_zero() && r2.is_zero()) continue;
    auto fields = enumerate_ansatz_fields(n, k, ansatz);
    std::vector<std::vector<Rat>> a;
    std::vector<Rat> b;
    RowIndex rows;
    const std::size_t cols = fields.size();
    for (std::size_t c = 0; c < cols; ++c) {
      scatter_bivector(lie_bivector(*p10, fields[c]), "1", rows, a, b, cols, c, false);
      scatter_bivector(lie_bivector(*p20, fields[c]), "2", rows, a, b, cols, c, false);
    }
    scatter_bivector(r1, "1", rows, a, b, cols, 0, true);
    scatter_bivector(r2, "2", rows, a, b, cols, 0, true);
    auto sol = solve_exact(a, b);
    if (!sol.consistent) {
      std::ostringstream os;
      os << "AnsatzExhausted: order eps^" << k << " residual cannot be generated by "
         << cols << " ansatz fields (bracket side " << (r1.is_zero() ? "2" : "1") << ")";
      res.failure = os.str();
      return res;
    }
    EvoField gen(n);
    for (std::size_t c = 0; c < cols; ++c) {
      if (sol.x[c] == 0) continue;
      for (int i = 0; i < n; ++i) gen.xi[i] += fields[c].xi[i] * sol.x[c];
    }
    if (!gen.is_zero()) {
      MiuraTransform step = exp_transform(k, gen, order);
      total = compose(step, total, order);
      cur = pushforward_pair(p, total, order);
    }
  }
  // the solver is never trusted bare
  PencilSeries check = pushforward_pair(p, total, order);
  if (!series_is_zero(series_add(check.first, series_neg(q.first.truncated(order)))) ||
      !series_is_zero(series_add(check.second, series_neg(q.second.truncated(order))))) {
    res.failure = "AnsatzExhausted: verification after solving failed";
    return res;
  }
  res.found = true;
  res.transform = total;
  return res;
}

// ---------------------------------------------------------------------------
// deformation extension

namespace {

void scatter_trivector(const LocalTrivector& v, RowIndex& rows,
                       std::vector<std::vector<Rat>>& a, std::vector<Rat>& b,
                       std::size_t cols, std::size_t col, bool rhs) {
  for (int i = 1; i <= v.n(); ++i)
    for (int j = 1; j <= v.n(); ++j)
      for (int k = 1; k <= v.n(); ++k)
        for (const auto& [pq, e] : v.row(i, j, k))
          for (const auto& m : e.monomials()) {
            std::ostringstream os;
            os << i << "," << j << "," << k << "|" << pq.first << "," << pq.second << "|"
               << monomial_key(m);
            std::size_t r = rows.get(os.str(), a, b, cols);
            if (rhs)
              b[r] += m.coeff;
            else
              a[r][col] += m.coeff;
          }
}

}  // namespace

ExtendResult extend_deformation(const PencilSeries& p, int current_order,
                                const AnsatzSpec& ansatz) {
  ExtendResult res;
  auto rep = check_pencil(p.first, p.second, current_order);
  if (!rep.compatible)
    throw InvalidDeformation("input is not a valid deformation at order " +
                             std::to_string(current_order) + "\n" + rep.to_string());
  const int n = series_part_or_zero(p.first, 0, 1).n();
  const int target = current_order + 1;
  const LocalBivector w10 = series_part_or_zero(p.first, 0, n);
  const LocalBivector w20 = series_part_or_zero(p.second, 0, n);

  // residuals of the three pencil brackets at the new order, without the
  // unknown correction
  auto tpp = series_schouten(p.first, p.first, target);
  auto tpq = series_schouten(p.first, p.second, target);
  auto tqq = series_schouten(p.second, p.second, target);
  const LocalTrivector* rpp = tpp.part(target);
  const LocalTrivector* rpq = tpq.part(target);
  if (rpp && !rpp->is_zero()) {
    res.failure = "AnsatzExhausted: the first bracket obstructs at the new order";
    return res;
  }
  LocalTrivector rhs_qq =
      tqq.part(target) ? -*tqq.part(target) : LocalTrivector(n);
  LocalTrivector rhs_pq = rpq ? -*rpq : LocalTrivector(n);

  auto fields = enumerate_ansatz_fields(n, target, ansatz);
  std::vector<std::vector<Rat>> a;
  std::vector<Rat> b;
  RowIndex rows;
  const std::size_t cols = fields.size();
  std::vector<LocalBivector> d1x;
  d1x.reserve(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    LocalBivector d = lie_bivector(w10, fields[c]);
    // [Q,Q] equation: 2 [w2, d1 X] = rhs_qq; [P,Q] equation: [w1, d1 X] = rhs_pq
    scatter_trivector(schouten_bb(w20, d) * Rat(2), rows, a, b, cols, c, false);
    d1x.push_back(std::move(d));
  }
  scatter_trivector(rhs_qq, rows, a, b, cols, 0, true);
  auto sol = solve_exact(a, b);
  if (!sol.consistent) {
    res.failure = "AnsatzExhausted: no order-" + std::to_string(target) +
                  " correction in the ansatz space";
    return res;
  }
  LocalBivector correction(n);
  EvoField gen(n);
  for (std::size_t c = 0; c < cols; ++c) {
    if (sol.x[c] == 0) continue;
    correction = correction + d1x[c] * sol.x[c];
    for (int i = 0; i < n; ++i) gen.xi[i] += fields[c].xi[i] * sol.x[c];
  }
  // the P,Q equation has no freedom left; verify it
  LocalTrivector pq_check = schouten_bb(w10, correction) - rhs_pq;
  if (!pq_check.is_zero()) {
    res.failure = "AnsatzExhausted: mixed bracket obstruction at the new order";
    return res;
  }
  res.extended = p;
  res.extended.first.trunc = std::max(res.extended.first.trunc, target);
  res.extended.second.trunc = std::max(res.extended.second.trunc, target);
  if (!correction.is_zero()) {
    LocalBivector curq = series_part_or_zero(res.extended.second, target, n);
    res.extended.second.parts[target] = curq + correction;
  }
  res.generator = gen;
  auto rep2 = check_pencil(res.extended.first, res.extended.second, target);
  if (!rep2.compatible) {
    res.failure = "AnsatzExhausted: extension failed re-verification";
    return res;
  }
  res.found = true;
  return res;
}

// ---------------------------------------------------------------------------
// bihamiltonian recursion

SeriesField series_ham_vf(const BivectorSeries& w, const SeriesFunctional& f, int order) {
  const int n = f.n;
  SeriesField out;
  out.xi.assign(static_cast<std::size_t>(n), ExprSeries{order, {}});
  for (const auto& [mw, part] : w.parts) {
    if (mw > order) continue;
    for (const auto& [mf, dens] : f.density.parts) {
      if (mw + mf > order) continue;
      EvoField x = ham_vf(part, LocalFunctional{n, dens});
      for (int i = 0; i < n; ++i) {
        if (x.xi[i].is_zero()) continue;
        Expr cur = out.xi[i].part(mw + mf) ? *out.xi[i].part(mw + mf) : Expr();
        out.xi[i].set(mw + mf, cur + x.xi[i]);
      }
    }
  }
  return out;
}

bool series_field_is_zero(const SeriesField& x) {
  for (const auto& c : x.xi)
    if (!es_is_zero(c)) return false;
  return true;
}

std::vector<RecursionStep> recursion(const PencilSeries& pencil, const LocalFunctional& casimir,
                                     const std::function<Rat(int)>& factor, int q_max,
                                     int order) {
  const int n = casimir.n;
  const LocalBivector w10 = series_part_or_zero(pencil.first, 0, n);

  // leading part must be a constant-coefficient delta' kernel
  std::vector<std::vector<Rat>> lead(static_cast<std::size_t>(n),
                                     std::vector<Rat>(static_cast<std::size_t>(n), Rat(0)));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (const auto& [k, e] : w10.row(i, j)) {
        if (k == 1 && e.is_rational()) {
          lead[i - 1][j - 1] = e.constant_term();
        } else if (!e.is_zero()) {
          throw Error("recursion: leading first bracket is not constant-coefficient delta'");
        }
      }
  // invert the constant matrix
  std::vector<std::vector<Rat>> inv(static_cast<std::size_t>(n),
                                    std::vector<Rat>(static_cast<std::size_t>(n), Rat(0)));
  {
    std::vector<std::vector<Rat>> m = lead;
    for (int i = 0; i < n; ++i) inv[i][i] = Rat(1);
    for (int c = 0; c < n; ++c) {
      int sel = c;
      while (sel < n && m[sel][c] == 0) ++sel;
      if (sel == n) throw Error("recursion: leading metric is singular");
      std::swap(m[sel], m[c]);
      std::swap(inv[sel], inv[c]);
      Rat f = Rat(1) / m[c][c];
      for (int j = 0; j < n; ++j) {
        m[c][j] *= f;
        inv[c][j] *= f;
      }
      for (int i = 0; i < n; ++i) {
        if (i == c || m[i][c] == 0) continue;
        Rat g = m[i][c];
        for (int j = 0; j < n; ++j) {
          m[i][j] -= g * m[c][j];
          inv[i][j] -= g * inv[c][j];
        }
      }
    }
  }

  // Casimir check: ham(omega1, casimir) = 0 to the working order.
  SeriesFunctional h_prev{n, es_const(casimir.density, order)};
  if (!series_field_is_zero(series_ham_vf(pencil.first, h_prev, order)))
    throw Error("recursion: seed functional is not a Casimir of the first bracket");

  // residual application of the non-leading part of omega1
  auto apply_w1_rest = [&](const std::vector<ExprSeries>& g) {
    SeriesField out;
    out.xi.assign(static_cast<std::size_t>(n), ExprSeries{order, {}});
    for (const auto& [mw, part] : pencil.first.parts) {
      for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
          for (const auto& [k, a] : part.row(i, j)) {
            if (mw == 0 && k == 1 && a.is_rational()) continue;  // leading part
            for (const auto& [mg, ge] : g[j - 1].parts) {
              if (mw + mg > order) continue;
              Expr t = a * dx_pow(ge, k);
              if (t.is_zero()) continue;
              Expr cur = out.xi[i - 1].part(mw + mg) ? *out.xi[i - 1].part(mw + mg) : Expr();
              out.xi[i - 1].set(mw + mg, cur + t);
            }
          }
    }
    return out;
  };

  std::vector<RecursionStep> steps;
  for (int q = 0; q <= q_max; ++q) {
    SeriesField x = series_ham_vf(pencil.second, h_prev, order);
    Rat f = factor(q);
    for (auto& c : x.xi) c = es_scale(c, f);

    // solve omega1 . grad = x order by order in eps
    std::vector<ExprSeries> grad(static_cast<std::size_t>(n), ExprSeries{order, {}});
    for (int m = 0; m <= order; ++m) {
      SeriesField rest = apply_w1_rest(grad);
      for (int i = 0; i < n; ++i) {
        Expr rhs = (x.xi[i].part(m) ? *x.xi[i].part(m) : Expr()) -
                   (rest.xi[i].part(m) ? *rest.xi[i].part(m) : Expr());
        // row i of lead * dx(grad_m) = rhs; invert the matrix then dx
        if (rhs.is_zero()) continue;
        for (int j = 0; j < n; ++j) {
          if (inv[j][i] == 0) continue;
          Expr cur = grad[j].part(m) ? *grad[j].part(m) : Expr();
          grad[j].set(m, cur + integrate_dx(rhs) * inv[j][i]);
        }
      }
    }
    // rebuild the Hamiltonian by homotopy, order by order
    SeriesFunctional hq{n, ExprSeries{order, {}}};
    for (int m = 0; m <= order; ++m) {
      std::vector<Expr> gm(static_cast<std::size_t>(n));
      bool any = false;
      for (int j = 0; j < n; ++j) {
        gm[j] = grad[j].part(m) ? *grad[j].part(m) : Expr();
        if (!gm[j].is_zero()) any = true;
      }
      if (!any) continue;
      hq.density.set(m, homotopy_density(gm).density);
    }
    // consistency: the flow computed through omega1 must reproduce x
    SeriesField flow = series_ham_vf(pencil.first, hq, order);
    for (int i = 0; i < n; ++i)
      if (!es_is_zero(es_sub(flow.xi[i], x.xi[i])))
        throw Error("recursion: flow mismatch at step " + std::to_string(q));
    steps.push_back(RecursionStep{hq, flow});
    h_prev = hq;
  }
  return steps;
}

}  // namespace loopalg

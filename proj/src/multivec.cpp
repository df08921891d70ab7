#include "loopalg/multivec.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace loopalg {

namespace {

// Raw-monomial accumulators: collect everything, normalize once per kernel
// entry. This keeps the common-denominator reduction out of inner loops.
struct BivAcc {
  int n;
  std::map<std::tuple<int, int, int>, std::vector<Mono>> acc;
  explicit BivAcc(int n_) : n(n_) {}
  void add(int i, int j, int k, const Expr& e) {
    if (e.is_zero()) return;
    auto& v = acc[{i, j, k}];
    v.insert(v.end(), e.monomials().begin(), e.monomials().end());
  }
  LocalBivector build() {
    LocalBivector b(n);
    for (auto& [key, monos] : acc)
      b.add_term(std::get<0>(key), std::get<1>(key), std::get<2>(key),
                 Expr::from_monomials(std::move(monos)));
    return b;
  }
};

struct TriAcc {
  int n;
  std::map<std::tuple<int, int, int, int, int>, std::vector<Mono>> acc;
  explicit TriAcc(int n_) : n(n_) {}
  void add(int i, int j, int k, int p, int q, const Expr& e) {
    if (e.is_zero()) return;
    auto& v = acc[{i, j, k, p, q}];
    v.insert(v.end(), e.monomials().begin(), e.monomials().end());
  }
  void add_trivector(const LocalTrivector& t, const Rat& scale) {
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j)
        for (int k = 1; k <= n; ++k)
          for (const auto& [pq, e] : t.row(i, j, k))
            add(i, j, k, pq.first, pq.second, e * scale);
  }
  LocalTrivector build(const Rat& scale = Rat(1)) {
    LocalTrivector t(n);
    for (auto& [key, monos] : acc) {
      Expr e = Expr::from_monomials(std::move(monos));
      t.add_term(std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key),
                 std::get<4>(key), scale == 1 ? e : e * scale);
    }
    return t;
  }
};

Rat binom(int n, int k) {
  if (k < 0 || k > n) return Rat(0);
  Rat r(1);
  for (int i = 0; i < k; ++i) r = r * Rat(n - i) / Rat(i + 1);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// EvoField

bool EvoField::is_zero() const {
  for (const auto& e : xi)
    if (!e.is_zero()) return false;
  return true;
}

EvoField EvoField::operator+(const EvoField& o) const {
  assert(n() == o.n());
  EvoField r(n());
  for (int i = 0; i < n(); ++i) r.xi[i] = xi[i] + o.xi[i];
  return r;
}

EvoField EvoField::operator-() const {
  EvoField r(n());
  for (int i = 0; i < n(); ++i) r.xi[i] = -xi[i];
  return r;
}

EvoField EvoField::operator*(const Rat& r0) const {
  EvoField r(n());
  for (int i = 0; i < n(); ++i) r.xi[i] = xi[i] * r0;
  return r;
}

bool EvoField::operator==(const EvoField& o) const {
  if (n() != o.n()) return false;
  for (int i = 0; i < n(); ++i)
    if (xi[i] != o.xi[i]) return false;
  return true;
}

Expr apply_field(const EvoField& xi, const Expr& e) {
  std::map<std::pair<int, int>, Expr> cache;
  auto prolong = [&](int coord, int order) -> const Expr& {
    auto key = std::make_pair(coord, order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    Expr v = order == 0 ? xi.xi[static_cast<std::size_t>(coord - 1)]
                        : total_derivative(cache.at({coord, order - 1}));
    return cache.emplace(key, std::move(v)).first->second;
  };
  Expr acc;
  for (const auto& v : jet_vars(e)) {
    if (v.coord > xi.n()) throw Error("apply_field: coordinate out of range");
    for (int s = 0; s <= v.order; ++s) prolong(v.coord, s);
    Expr p = partial(e, v);
    if (!p.is_zero()) acc += prolong(v.coord, v.order) * p;
  }
  return acc;
}

EvoField commutator(const EvoField& xi, const EvoField& eta) {
  assert(xi.n() == eta.n());
  EvoField r(xi.n());
  for (int i = 0; i < xi.n(); ++i)
    r.xi[i] = apply_field(xi, eta.xi[i]) - apply_field(eta, xi.xi[i]);
  return r;
}

// ---------------------------------------------------------------------------
// LocalBivector

Expr LocalBivector::coeff(int i, int j, int k) const {
  const auto& r = comp_[idx(i, j)];
  auto it = r.find(k);
  return it == r.end() ? Expr() : it->second;
}

void LocalBivector::add_term(int i, int j, int k, const Expr& e) {
  if (e.is_zero()) return;
  auto& r = comp_[idx(i, j)];
  auto it = r.find(k);
  if (it == r.end()) {
    r.emplace(k, e);
  } else {
    it->second += e;
    if (it->second.is_zero()) r.erase(it);
  }
}

void LocalBivector::set_term(int i, int j, int k, const Expr& e) {
  auto& r = comp_[idx(i, j)];
  r.erase(k);
  if (!e.is_zero()) r.emplace(k, e);
}

bool LocalBivector::is_zero() const {
  for (const auto& r : comp_)
    if (!r.empty()) return false;
  return true;
}

int LocalBivector::max_order() const {
  int mx = 0;
  for (const auto& r : comp_)
    if (!r.empty()) mx = std::max(mx, r.rbegin()->first);
  return mx;
}

LocalBivector LocalBivector::operator+(const LocalBivector& o) const {
  assert(n_ == o.n_);
  LocalBivector r = *this;
  for (int i = 1; i <= n_; ++i)
    for (int j = 1; j <= n_; ++j)
      for (const auto& [k, e] : o.row(i, j)) r.add_term(i, j, k, e);
  return r;
}

LocalBivector LocalBivector::operator-() const { return *this * Rat(-1); }

LocalBivector LocalBivector::operator*(const Rat& s) const {
  LocalBivector r(n_);
  if (s == 0) return r;
  for (int i = 1; i <= n_; ++i)
    for (int j = 1; j <= n_; ++j)
      for (const auto& [k, e] : row(i, j)) r.add_term(i, j, k, e * s);
  return r;
}

bool LocalBivector::operator==(const LocalBivector& o) const {
  return (*this - o).is_zero();
}

LocalBivector flip(const LocalBivector& p) {
  LocalBivector out(p.n());
  for (int i = 1; i <= p.n(); ++i)
    for (int j = 1; j <= p.n(); ++j)
      for (const auto& [k, a] : p.row(j, i)) {
        // P^{ji}(y,x) = a(y) delta^{(k)}(y-x) = (-1)^k a(y) delta^{(k)}(x-y)
        Rat sign = (k % 2 == 0) ? Rat(1) : Rat(-1);
        Expr d = a;
        for (int l = 0; l <= k; ++l) {
          out.add_term(i, j, k - l, d * (binom(k, l) * sign));
          if (l < k) d = total_derivative(d);
        }
      }
  return out;
}

bool is_antisymmetric(const LocalBivector& p) { return (flip(p) + p).is_zero(); }

LocalBivector antisymmetrize(const LocalBivector& p) {
  return (p - flip(p)) * Rat(1, 2);
}

// ---------------------------------------------------------------------------
// LocalTrivector

void LocalTrivector::add_term(int i, int j, int k, int p, int q, const Expr& e) {
  if (e.is_zero()) return;
  auto& r = comp_[idx(i, j, k)];
  auto key = std::make_pair(p, q);
  auto it = r.find(key);
  if (it == r.end()) {
    r.emplace(key, e);
  } else {
    it->second += e;
    if (it->second.is_zero()) r.erase(it);
  }
}

bool LocalTrivector::is_zero() const {
  for (const auto& r : comp_)
    if (!r.empty()) return false;
  return true;
}

LocalTrivector LocalTrivector::operator+(const LocalTrivector& o) const {
  assert(n_ == o.n_);
  LocalTrivector r = *this;
  for (int i = 1; i <= n_; ++i)
    for (int j = 1; j <= n_; ++j)
      for (int k = 1; k <= n_; ++k)
        for (const auto& [pq, e] : o.row(i, j, k))
          r.add_term(i, j, k, pq.first, pq.second, e);
  return r;
}

LocalTrivector LocalTrivector::operator-() const { return *this * Rat(-1); }

LocalTrivector LocalTrivector::operator*(const Rat& s) const {
  LocalTrivector r(n_);
  if (s == 0) return r;
  for (int i = 1; i <= n_; ++i)
    for (int j = 1; j <= n_; ++j)
      for (int k = 1; k <= n_; ++k)
        for (const auto& [pq, e] : row(i, j, k))
          r.add_term(i, j, k, pq.first, pq.second, e * s);
  return r;
}

bool LocalTrivector::operator==(const LocalTrivector& o) const {
  return (*this - o).is_zero();
}

std::string LocalTrivector::sample_term() const {
  for (int i = 1; i <= n_; ++i)
    for (int j = 1; j <= n_; ++j)
      for (int k = 1; k <= n_; ++k)
        for (const auto& [pq, e] : row(i, j, k)) {
          std::ostringstream os;
          os << "B^{" << i << j << k << "}_{" << pq.first << "," << pq.second
             << "} = " << e.str();
          return os.str();
        }
  return "";
}

LocalTrivector trivector_swap_yz(const LocalTrivector& t) {
  LocalTrivector out(t.n());
  for (int i = 1; i <= t.n(); ++i)
    for (int j = 1; j <= t.n(); ++j)
      for (int k = 1; k <= t.n(); ++k)
        for (const auto& [pq, e] : t.row(i, j, k))
          out.add_term(i, k, j, pq.second, pq.first, e);
  return out;
}

LocalTrivector trivector_swap_xy(const LocalTrivector& t) {
  // out^{jik}(x,y,z) collects T^{ijk}(y,x,z) rewritten at x.
  TriAcc out(t.n());
  for (int i = 1; i <= t.n(); ++i)
    for (int j = 1; j <= t.n(); ++j)
      for (int k = 1; k <= t.n(); ++k)
        for (const auto& [pq, b] : t.row(i, j, k)) {
          int p = pq.first, q = pq.second;
          Rat sign = (p % 2 == 0) ? Rat(1) : Rat(-1);
          // B(y) delta^{(p)}(y-x) delta^{(q)}(y-z); transport y -> x.
          std::vector<Expr> db{b};  // dx^l B
          for (int l = 1; l <= p; ++l) db.push_back(total_derivative(db.back()));
          for (int l = 0; l <= p; ++l)
            for (int r = 0; r <= l; ++r)
              out.add(j, i, k, p - l, q + r,
                      db[static_cast<std::size_t>(l - r)] *
                          (binom(p, l) * binom(l, r) * sign));
        }
  return out.build();
}

LocalTrivector trivector_antisymmetrize(const LocalTrivector& t) {
  const LocalTrivector t_xy = trivector_swap_xy(t);       // (12)
  const LocalTrivector t_yz = trivector_swap_yz(t);       // (23)
  const LocalTrivector t_xz = trivector_swap_yz(t_xy);    // (123): first xy then yz
  const LocalTrivector t_cy = trivector_swap_xy(t_yz);    // (132)
  const LocalTrivector t_sw = trivector_swap_yz(t_cy);    // (13)
  TriAcc sum(t.n());
  sum.add_trivector(t, Rat(1));
  sum.add_trivector(t_xy, Rat(-1));
  sum.add_trivector(t_yz, Rat(-1));
  sum.add_trivector(t_xz, Rat(1));
  sum.add_trivector(t_cy, Rat(1));
  sum.add_trivector(t_sw, Rat(-1));
  return sum.build(Rat(1, 6));
}

// ---------------------------------------------------------------------------
// brackets

EvoField ham_vf(const LocalBivector& p, const LocalFunctional& f) {
  EvoField out(p.n());
  std::vector<Expr> grads(static_cast<std::size_t>(p.n()));
  for (int j = 1; j <= p.n(); ++j) grads[j - 1] = euler(f, j);
  for (int i = 1; i <= p.n(); ++i) {
    Expr acc;
    for (int j = 1; j <= p.n(); ++j) {
      const Expr& g = grads[j - 1];
      if (g.is_zero()) continue;
      std::map<int, Expr> dg{{0, g}};
      for (const auto& [k, a] : p.row(i, j)) {
        for (int s = static_cast<int>(dg.size()); s <= k; ++s)
          dg[s] = total_derivative(dg[s - 1]);
        acc += a * dg[k];
      }
    }
    out.xi[i - 1] = acc;
  }
  return out;
}

LocalFunctional bracket_functionals(const LocalBivector& p, const LocalFunctional& f,
                                    const LocalFunctional& g) {
  std::vector<Mono> raw;
  for (int i = 1; i <= p.n(); ++i) {
    Expr fi = euler(f, i);
    if (fi.is_zero()) continue;
    for (int j = 1; j <= p.n(); ++j) {
      Expr gj = euler(g, j);
      if (gj.is_zero()) continue;
      std::map<int, Expr> dg{{0, gj}};
      for (const auto& [k, a] : p.row(i, j)) {
        for (int s = static_cast<int>(dg.size()); s <= k; ++s)
          dg[s] = total_derivative(dg[s - 1]);
        Expr term = fi * a * dg[k];
        raw.insert(raw.end(), term.monomials().begin(), term.monomials().end());
      }
    }
  }
  return LocalFunctional{p.n(), Expr::from_monomials(std::move(raw))};
}

LocalBivector lie_bivector(const LocalBivector& p, const EvoField& xi) {
  const int n = p.n();
  assert(xi.n() == n);
  BivAcc out(n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      // term 1: prolonged action on the coefficients
      for (const auto& [m, a] : p.row(i, j)) out.add(i, j, m, apply_field(xi, a));
      // term 2: -sum_{k,t} dxi^i/du^{k,t} dx^t [ A^{kj}_m delta^{(m)} ]
      for (const auto& v : jet_vars(xi.xi[i - 1])) {
        Expr dxi = partial(xi.xi[i - 1], v);
        if (dxi.is_zero()) continue;
        const int t = v.order;
        for (const auto& [m, a] : p.row(v.coord, j)) {
          std::vector<Expr> da{a};
          for (int r = 1; r <= t; ++r) da.push_back(total_derivative(da.back()));
          for (int r = 0; r <= t; ++r)
            out.add(i, j, m + r, -dxi * da[static_cast<std::size_t>(t - r)] * binom(t, r));
        }
      }
      // term 3: -sum_{k,t} (dxi^j/du^{k,t})(y) dy^t [ A^{ik}_m delta^{(m)} ],
      // transported to x.
      for (const auto& v : jet_vars(xi.xi[j - 1])) {
        Expr dxj = partial(xi.xi[j - 1], v);
        if (dxj.is_zero()) continue;
        const int t = v.order;
        Rat tsign = (t % 2 == 0) ? Rat(1) : Rat(-1);
        for (const auto& [m, a] : p.row(i, v.coord)) {
          const int mt = m + t;
          std::vector<Expr> db{dxj};
          for (int l = 1; l <= mt; ++l) db.push_back(total_derivative(db.back()));
          for (int l = 0; l <= mt; ++l)
            out.add(i, j, mt - l, -a * db[static_cast<std::size_t>(l)] *
                                       (binom(mt, l) * tsign));
        }
      }
    }
  return out.build();
}

// ---------------------------------------------------------------------------
// Schouten bracket of bivectors

namespace {

// coeff * dx^a(F_i) dx^b(G_j) dx^c(H_k) under an integral sign; reduction to
// a = 0 happens by formal integration by parts.
struct TriWord {
  int i, j, k;
  int a, b, c;
  Expr coeff;
};

void reduce_word(const TriWord& w, TriAcc& out) {
  if (w.coeff.is_zero()) return;
  if (w.a == 0) {
    out.add(w.i, w.j, w.k, w.b, w.c, w.coeff);
    return;
  }
  // integral c dx^a(F) dx^b(G) dx^c(H) = -integral dx(c dx^{a-1}(F)-word)
  Expr neg = -w.coeff;
  reduce_word({w.i, w.j, w.k, w.a - 1, w.b + 1, w.c, neg}, out);
  reduce_word({w.i, w.j, w.k, w.a - 1, w.b, w.c + 1, neg}, out);
  reduce_word({w.i, w.j, w.k, w.a - 1, w.b, w.c, -total_derivative(w.coeff)}, out);
}

// One ordered half of the bracket: the Jacobiator words with the derivative
// falling on A's coefficients and B supplying the inner Hamiltonian operator.
void schouten_half(const LocalBivector& A, const LocalBivector& B, TriAcc& out) {
  const int n = A.n();
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (const auto& [k, akij] : A.row(i, j))
        for (const auto& v : jet_vars(akij)) {
          Expr c = partial(akij, v);
          if (c.is_zero()) continue;
          const int l = v.coord;
          const int s = v.order;
          for (int m = 1; m <= n; ++m) {
            // cyc1: F_i (dA^{ij}_k/du^{l,s}) dx^k G_j dx^s [B^{lm}_t dx^t H_m]
            for (const auto& [t, blm] : B.row(l, m)) {
              std::vector<Expr> db{blm};
              for (int r = 1; r <= s; ++r) db.push_back(total_derivative(db.back()));
              for (int r = 0; r <= s; ++r) {
                Expr co = c * db[static_cast<std::size_t>(s - r)] * binom(s, r);
                reduce_word({i, j, m, 0, k, t + r, co}, out);
              }
            }
          }
        }
  // cyc2 and cyc3 are the same words with the functional roles rotated:
  // generate them by relabeling slots of the cyc1 pattern.
  for (int j = 1; j <= n; ++j)
    for (int m = 1; m <= n; ++m)
      for (const auto& [k, ajm] : A.row(j, m))
        for (const auto& v : jet_vars(ajm)) {
          Expr c = partial(ajm, v);
          if (c.is_zero()) continue;
          const int l = v.coord;
          const int s = v.order;
          for (int i = 1; i <= n; ++i) {
            // cyc2: G_j (dA^{jm}_k/du^{l,s}) dx^k H_m dx^s [B^{li}_t dx^t F_i]
            for (const auto& [t, bli] : B.row(l, i)) {
              std::vector<Expr> db{bli};
              for (int r = 1; r <= s; ++r) db.push_back(total_derivative(db.back()));
              for (int r = 0; r <= s; ++r) {
                Expr co = c * db[static_cast<std::size_t>(s - r)] * binom(s, r);
                reduce_word({i, j, m, t + r, 0, k, co}, out);
              }
            }
          }
        }
  for (int m = 1; m <= n; ++m)
    for (int i = 1; i <= n; ++i)
      for (const auto& [k, ami] : A.row(m, i))
        for (const auto& v : jet_vars(ami)) {
          Expr c = partial(ami, v);
          if (c.is_zero()) continue;
          const int l = v.coord;
          const int s = v.order;
          for (int j = 1; j <= n; ++j) {
            // cyc3: H_m (dA^{mi}_k/du^{l,s}) dx^k F_i dx^s [B^{lj}_t dx^t G_j]
            for (const auto& [t, blj] : B.row(l, j)) {
              std::vector<Expr> db{blj};
              for (int r = 1; r <= s; ++r) db.push_back(total_derivative(db.back()));
              for (int r = 0; r <= s; ++r) {
                Expr co = c * db[static_cast<std::size_t>(s - r)] * binom(s, r);
                reduce_word({i, j, m, k, t + r, 0, co}, out);
              }
            }
          }
        }
}

}  // namespace

LocalTrivector schouten_bb(const LocalBivector& p, const LocalBivector& q) {
  assert(p.n() == q.n());
  TriAcc raw(p.n());
  schouten_half(p, q, raw);
  schouten_half(q, p, raw);
  return trivector_antisymmetrize(raw.build());
}

LocalFunctional pairing(const LocalTrivector& t, const LocalFunctional& f,
                        const LocalFunctional& g, const LocalFunctional& h) {
  const int n = t.n();
  std::vector<Expr> fg(static_cast<std::size_t>(n)), gg(fg), hg(fg);
  for (int i = 1; i <= n; ++i) {
    fg[i - 1] = euler(f, i);
    gg[i - 1] = euler(g, i);
    hg[i - 1] = euler(h, i);
  }
  std::vector<Mono> raw;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k)
        for (const auto& [pq, b] : t.row(i, j, k)) {
          if (fg[i - 1].is_zero()) continue;
          Expr term =
              b * fg[i - 1] * dx_pow(gg[j - 1], pq.first) * dx_pow(hg[k - 1], pq.second);
          raw.insert(raw.end(), term.monomials().begin(), term.monomials().end());
        }
  return LocalFunctional{n, Expr::from_monomials(std::move(raw))};
}

LocalFunctional jacobiator(const LocalBivector& p, const LocalFunctional& f,
                           const LocalFunctional& g, const LocalFunctional& h) {
  LocalFunctional fg = bracket_functionals(p, f, g);
  LocalFunctional gh = bracket_functionals(p, g, h);
  LocalFunctional hf = bracket_functionals(p, h, f);
  Expr density = bracket_functionals(p, fg, h).density +
                 bracket_functionals(p, gh, f).density +
                 bracket_functionals(p, hf, g).density;
  return LocalFunctional{p.n(), density};
}

// ---------------------------------------------------------------------------
// pencil differentials

EvoField d_of(const PencilContext& ctx, int a, const LocalFunctional& f) {
  return ham_vf(a == 1 ? ctx.w1 : ctx.w2, f);
}

LocalBivector d_of(const PencilContext& ctx, int a, const EvoField& x) {
  return lie_bivector(a == 1 ? ctx.w1 : ctx.w2, x);
}

LocalTrivector d_of(const PencilContext& ctx, int a, const LocalBivector& p) {
  return schouten_bb(a == 1 ? ctx.w1 : ctx.w2, p);
}

// ---------------------------------------------------------------------------
// series

BivectorSeries series_add(const BivectorSeries& a, const BivectorSeries& b) {
  BivectorSeries out;
  out.trunc = std::min(a.trunc, b.trunc);
  for (const auto& [m, v] : a.parts)
    if (m <= out.trunc) out.parts.emplace(m, v);
  for (const auto& [m, v] : b.parts) {
    if (m > out.trunc) continue;
    auto it = out.parts.find(m);
    if (it == out.parts.end())
      out.parts.emplace(m, v);
    else
      it->second = it->second + v;
  }
  for (auto it = out.parts.begin(); it != out.parts.end();)
    it = it->second.is_zero() ? out.parts.erase(it) : std::next(it);
  return out;
}

BivectorSeries series_neg(const BivectorSeries& a) {
  BivectorSeries out;
  out.trunc = a.trunc;
  for (const auto& [m, v] : a.parts) out.parts.emplace(m, -v);
  return out;
}

bool series_is_zero(const BivectorSeries& a) {
  for (const auto& [m, v] : a.parts)
    if (!v.is_zero()) return false;
  return true;
}

EpsSeries<LocalTrivector> series_schouten(const BivectorSeries& p, const BivectorSeries& q,
                                          int trunc) {
  EpsSeries<LocalTrivector> out;
  out.trunc = trunc;
  for (const auto& [a, pa] : p.parts)
    for (const auto& [b, qb] : q.parts) {
      if (a + b > trunc) continue;
      LocalTrivector t = schouten_bb(pa, qb);
      if (t.is_zero()) continue;
      auto it = out.parts.find(a + b);
      if (it == out.parts.end())
        out.parts.emplace(a + b, t);
      else
        it->second = it->second + t;
    }
  for (auto it = out.parts.begin(); it != out.parts.end();)
    it = it->second.is_zero() ? out.parts.erase(it) : std::next(it);
  return out;
}

std::vector<std::string> validate_bivector_grading(const LocalBivector& b, int m) {
  std::vector<std::string> warnings;
  for (int i = 1; i <= b.n(); ++i)
    for (int j = 1; j <= b.n(); ++j)
      for (const auto& [k, a] : b.row(i, j)) {
        auto parts = degree_decompose(a);
        for (const auto& [d, e] : parts) {
          if (d + k + 1 == m + 2) continue;
          std::ostringstream os;
          os << "eps^" << m << " part, component (" << i << "," << j << "), delta order "
             << k << ": coefficient term of degree " << d << " breaks the grading ("
             << e.str() << ")";
          warnings.push_back(os.str());
        }
      }
  return warnings;
}

std::string PencilReport::to_string() const {
  std::ostringstream os;
  os << (compatible ? "compatible pencil" : "NOT a compatible pencil") << "\n";
  os << "antisymmetry: " << (antisym_ok ? "ok" : "FAILED") << "\n";
  for (const auto& [label, order, bad] : entries) {
    os << "  [" << label << "] eps^" << order << ": ";
    os << (bad.empty() ? "zero" : ("nonzero, e.g. " + bad)) << "\n";
  }
  for (const auto& w : warnings) os << "  warning: " << w << "\n";
  return os.str();
}

PencilReport check_pencil(const BivectorSeries& p, const BivectorSeries& q, int order) {
  PencilReport rep;
  rep.antisym_ok = true;
  for (const auto* s : {&p, &q})
    for (const auto& [m, part] : s->parts) {
      if (m > order) continue;
      if (!is_antisymmetric(part)) {
        rep.antisym_ok = false;
        std::ostringstream os;
        os << "eps^" << m << " part of " << (s == &p ? "omega1" : "omega2")
           << " is not antisymmetric";
        rep.warnings.push_back(os.str());
      }
      for (auto& w : validate_bivector_grading(part, m)) rep.warnings.push_back(w);
    }
  bool all_zero = true;
  const std::pair<std::string, std::pair<const BivectorSeries*, const BivectorSeries*>>
      brackets[] = {{"P,P", {&p, &p}}, {"P,Q", {&p, &q}}, {"Q,Q", {&q, &q}}};
  for (const auto& [label, ab] : brackets) {
    auto t = series_schouten(*ab.first, *ab.second, order);
    for (int m = 0; m <= order; ++m) {
      const LocalTrivector* tm = t.part(m);
      std::string bad = (tm && !tm->is_zero()) ? tm->sample_term() : "";
      if (!bad.empty()) all_zero = false;
      rep.entries.emplace_back(label, m, bad);
    }
  }
  rep.compatible = all_zero && rep.antisym_ok;
  return rep;
}

}  // namespace loopalg

#include "loopalg/expr.hpp"

#include <algorithm>
#include <cassert>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace loopalg {

namespace {

std::string expr_serial(const Expr& e);

std::string atom_serial(const Atom& a) {
  std::ostringstream os;
  switch (a.kind) {
    case AtomKind::Jet:
      os << "J" << a.jet.coord << "," << a.jet.order;
      break;
    case AtomKind::Root: {
      os << "R" << a.name << "[";
      for (const auto& c : a.minpoly) os << rat_to_string(c) << ";";
      os << "]";
      break;
    }
    case AtomKind::Fn: {
      os << "F" << a.name << "[";
      for (int d : a.derivs) os << d << ",";
      os << "](";
      for (const auto& arg : a.args) os << expr_serial(arg) << "|";
      os << ")";
      break;
    }
    case AtomKind::Inv:
      os << "I(" << expr_serial(a.base) << ")";
      break;
  }
  return os.str();
}

std::string expr_serial(const Expr& e) {
  std::ostringstream os;
  for (const auto& m : e.monomials()) {
    os << rat_to_string(m.coeff);
    for (const auto& f : m.factors) os << "*" << f.atom->key << "^" << f.pow;
    os << "+";
  }
  return os.str();
}

struct Registry {
  std::mutex mu;
  std::unordered_map<std::string, AtomPtr> table;
  std::size_t next_id = 1;
};

Registry& registry() {
  static Registry* r = new Registry;  // never destroyed; atoms outlive statics
  return *r;
}

AtomPtr intern(Atom&& a) {
  a.key = atom_serial(a);
  auto& reg = registry();
  std::lock_guard<std::mutex> lock(reg.mu);
  auto it = reg.table.find(a.key);
  if (it != reg.table.end()) return it->second;
  a.id = reg.next_id++;
  auto p = std::make_shared<const Atom>(std::move(a));
  reg.table.emplace(p->key, p);
  return p;
}

int rat_cmp(const Rat& a, const Rat& b) { return a < b ? -1 : (a == b ? 0 : 1); }

// Deterministic total order on monomial keys (factor lists).
int factors_cmp(const std::vector<Factor>& x, const std::vector<Factor>& y) {
  std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].atom != y[i].atom) {
      int c = atom_cmp(*x[i].atom, *y[i].atom);
      if (c) return c;
    }
    if (x[i].pow != y[i].pow) return x[i].pow > y[i].pow ? -1 : 1;
  }
  if (x.size() != y.size()) return x.size() > y.size() ? -1 : 1;
  return 0;
}

bool mono_less(const Mono& a, const Mono& b) { return factors_cmp(a.factors, b.factors) < 0; }

// x^p modulo the monic minimal polynomial (coefficients c[0..d-1]).
std::vector<Rat> root_power_mod(const std::vector<Rat>& mp, long p) {
  const std::size_t d = mp.size();
  auto mul_x = [&](std::vector<Rat> v) {
    Rat top = v[d - 1];
    for (std::size_t k = d - 1; k > 0; --k) v[k] = v[k - 1];
    v[0] = Rat(0);
    if (top != 0)
      for (std::size_t k = 0; k < d; ++k) v[k] -= top * mp[k];
    return v;
  };
  std::vector<Rat> acc(d, Rat(0));
  if (p >= 0) {
    acc[0] = Rat(1);
    for (long i = 0; i < p; ++i) acc = mul_x(std::move(acc));
    return acc;
  }
  // x^{-1} = -(x^{d-1} + c_{d-1} x^{d-2} + ... + c_1) / c_0
  std::vector<Rat> inv(d, Rat(0));
  Rat c0 = mp[0];
  assert(c0 != 0);
  inv[d - 1] = Rat(-1) / c0;
  for (std::size_t k = 1; k < d; ++k) inv[k - 1] = -mp[k] / c0;
  // Multiply inv |p| times together (naive; |p| is tiny in practice).
  std::vector<Rat> res(d, Rat(0));
  res[0] = Rat(1);
  for (long i = 0; i < -p; ++i) {
    std::vector<Rat> nxt(d, Rat(0));
    for (std::size_t k = 0; k < d; ++k) {
      if (res[k] == 0) continue;
      // res[k] * x^k * inv
      std::vector<Rat> shifted = inv;
      for (std::size_t s = 0; s < k; ++s) shifted = mul_x(std::move(shifted));
      for (std::size_t j = 0; j < d; ++j) nxt[j] += res[k] * shifted[j];
    }
    res = std::move(nxt);
  }
  return res;
}

bool has_inv_factor(const Mono& m) {
  for (const auto& f : m.factors)
    if (f.atom->kind == AtomKind::Inv) return true;
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// atom / expr comparison

int atom_cmp(const Atom& a, const Atom& b) {
  if (&a == &b) return 0;
  if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
  switch (a.kind) {
    case AtomKind::Jet: {
      if (a.jet.coord != b.jet.coord) return a.jet.coord < b.jet.coord ? -1 : 1;
      if (a.jet.order != b.jet.order) return a.jet.order < b.jet.order ? -1 : 1;
      return 0;
    }
    case AtomKind::Root: {
      if (int c = a.name.compare(b.name)) return c < 0 ? -1 : 1;
      if (a.minpoly.size() != b.minpoly.size()) return a.minpoly.size() < b.minpoly.size() ? -1 : 1;
      for (std::size_t i = 0; i < a.minpoly.size(); ++i)
        if (int c = rat_cmp(a.minpoly[i], b.minpoly[i])) return c;
      return 0;
    }
    case AtomKind::Fn: {
      if (int c = a.name.compare(b.name)) return c < 0 ? -1 : 1;
      if (a.derivs != b.derivs) return a.derivs < b.derivs ? -1 : 1;
      if (a.args.size() != b.args.size()) return a.args.size() < b.args.size() ? -1 : 1;
      for (std::size_t i = 0; i < a.args.size(); ++i)
        if (int c = expr_cmp(a.args[i], b.args[i])) return c;
      return 0;
    }
    case AtomKind::Inv:
      return expr_cmp(a.base, b.base);
  }
  return 0;
}

int expr_cmp(const Expr& a, const Expr& b) {
  const auto& ma = a.monomials();
  const auto& mb = b.monomials();
  std::size_t n = std::min(ma.size(), mb.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = factors_cmp(ma[i].factors, mb[i].factors)) return c;
    if (int c = rat_cmp(ma[i].coeff, mb[i].coeff)) return c;
  }
  if (ma.size() != mb.size()) return ma.size() < mb.size() ? -1 : 1;
  return 0;
}

// ---------------------------------------------------------------------------
// interned atom constructors

AtomPtr make_jet_atom(int coord, int order) {
  assert(coord >= 1 && order >= 0);
  Atom a;
  a.kind = AtomKind::Jet;
  a.jet = JetVar{coord, order};
  return intern(std::move(a));
}

AtomPtr make_root_atom(const std::string& name, const std::vector<Rat>& minpoly) {
  if (minpoly.size() < 2 || minpoly[0] == 0)
    throw Error("root atom needs a monic minimal polynomial of degree >= 2 with nonzero constant term");
  Atom a;
  a.kind = AtomKind::Root;
  a.name = name;
  a.minpoly = minpoly;
  return intern(std::move(a));
}

AtomPtr make_fn_atom(const std::string& name, std::vector<Expr> args, std::vector<int> derivs) {
  std::sort(derivs.begin(), derivs.end());
  Atom a;
  a.kind = AtomKind::Fn;
  a.name = name;
  a.args = std::move(args);
  a.derivs = std::move(derivs);
  return intern(std::move(a));
}

AtomPtr make_inv_atom(const Expr& base) {
  if (base.size() < 2) throw Error("make_inv_atom: base must be a multi-term polynomial");
  for (const auto& m : base.monomials())
    for (const auto& f : m.factors)
      if (f.atom->kind == AtomKind::Inv) throw Error("make_inv_atom: nested Inv base");
  // Irreducibility guarantee: the base (already content-free, see
  // Expr::inverse) must be linear in some atom with a monomial coefficient,
  // the atom not occurring inside any other atom of the base.
  AtomPtr lin;
  Expr coeff_a, rest_b;
  std::vector<AtomPtr> atoms = top_level_atoms(base);
  for (const auto& cand : atoms) {
    int maxp = 0, with = 0;
    bool nested = false;
    std::vector<Mono> a_part, b_part;
    for (const auto& m : base.monomials()) {
      bool has = false;
      for (const auto& f : m.factors) {
        if (f.atom == cand) {
          maxp = std::max(maxp, f.pow);
          has = true;
        } else if (f.atom->key.find(cand->key) != std::string::npos) {
          nested = true;
        }
      }
      if (has) {
        ++with;
        Mono stripped = m;
        std::erase_if(stripped.factors, [&](const Factor& f) { return f.atom == cand; });
        a_part.push_back(std::move(stripped));
      } else {
        b_part.push_back(m);
      }
    }
    if (maxp != 1 || with != 1 || nested) continue;
    lin = cand;
    coeff_a = Expr::from_monomials(std::move(a_part));
    rest_b = Expr::from_monomials(std::move(b_part));
    break;
  }
  if (!lin)
    throw NotInvertible("cannot certify irreducibility of divisor: " + base.str());
  Atom a;
  a.kind = AtomKind::Inv;
  a.base = base;
  a.inv_lin_atom = lin;
  a.inv_subst_value = -rest_b * coeff_a.inverse();
  return intern(std::move(a));
}

// ---------------------------------------------------------------------------
// normalization

namespace {

void mono_normalize(Mono m, std::vector<Mono>& out);

void mul_into(const Mono& rest, const Expr& repl, std::vector<Mono>& out) {
  for (const auto& rm : repl.monomials()) {
    Mono prod;
    prod.coeff = rest.coeff * rm.coeff;
    prod.factors = rest.factors;
    prod.factors.insert(prod.factors.end(), rm.factors.begin(), rm.factors.end());
    mono_normalize(std::move(prod), out);
  }
}

void mono_normalize(Mono m, std::vector<Mono>& out) {
  if (m.coeff == 0) return;
  std::sort(m.factors.begin(), m.factors.end(), [](const Factor& a, const Factor& b) {
    return a.atom == b.atom ? false : atom_cmp(*a.atom, *b.atom) < 0;
  });
  std::vector<Factor> merged;
  for (const auto& f : m.factors) {
    if (!merged.empty() && merged.back().atom == f.atom)
      merged.back().pow += f.pow;
    else
      merged.push_back(f);
  }
  std::erase_if(merged, [](const Factor& f) { return f.pow == 0; });
  m.factors = std::move(merged);

  for (std::size_t i = 0; i < m.factors.size(); ++i) {
    const Factor& f = m.factors[i];
    const Atom& a = *f.atom;
    // Root powers reduce modulo the defining polynomial.
    if (a.kind == AtomKind::Root && (f.pow < 0 || f.pow >= static_cast<int>(a.minpoly.size()))) {
      std::vector<Rat> coeffs = root_power_mod(a.minpoly, f.pow);
      Mono rest;
      rest.coeff = m.coeff;
      rest.factors = m.factors;
      rest.factors.erase(rest.factors.begin() + static_cast<long>(i));
      std::vector<Mono> repl;
      for (std::size_t k = 0; k < coeffs.size(); ++k) {
        if (coeffs[k] == 0) continue;
        Mono t;
        t.coeff = coeffs[k];
        if (k > 0) t.factors.push_back({f.atom, static_cast<int>(k)});
        repl.push_back(std::move(t));
      }
      Expr re = Expr::from_monomials(std::move(repl));
      mul_into(rest, re, out);
      return;
    }
    // sqrt(a)^2 -> a; powers fold down to exponent 0 or 1.
    if (a.kind == AtomKind::Fn && a.name == "sqrt" && a.derivs.empty() &&
        (f.pow < 0 || f.pow > 1)) {
      int q = f.pow >= 0 ? f.pow / 2 : (f.pow - 1) / 2;
      int r = f.pow - 2 * q;
      Mono rest;
      rest.coeff = m.coeff;
      rest.factors = m.factors;
      rest.factors.erase(rest.factors.begin() + static_cast<long>(i));
      if (r == 1) rest.factors.push_back({f.atom, 1});
      mul_into(rest, a.args[0].pow(q), out);
      return;
    }
    // Positive powers of an Inv atom expand back into the base polynomial.
    if (a.kind == AtomKind::Inv && f.pow > 0) {
      Mono rest;
      rest.coeff = m.coeff;
      rest.factors = m.factors;
      rest.factors.erase(rest.factors.begin() + static_cast<long>(i));
      mul_into(rest, a.base.pow(f.pow), out);
      return;
    }
  }
  out.push_back(std::move(m));
}

std::vector<Mono> combine_sorted(std::vector<Mono> monos) {
  std::sort(monos.begin(), monos.end(), mono_less);
  std::vector<Mono> res;
  for (auto& m : monos) {
    if (!res.empty() && factors_cmp(res.back().factors, m.factors) == 0) {
      res.back().coeff += m.coeff;
      if (res.back().coeff == 0) res.pop_back();
    } else if (m.coeff != 0) {
      res.push_back(std::move(m));
    }
  }
  return res;
}

}  // namespace

Expr::Expr() {
  static const auto empty = std::make_shared<const std::vector<Mono>>();
  monos_ = empty;
}

Expr Expr::from_rat(const Rat& r) {
  if (r == 0) return Expr();
  Mono m;
  m.coeff = r;
  auto v = std::make_shared<std::vector<Mono>>();
  v->push_back(std::move(m));
  return Expr(std::move(v));
}

Expr Expr::from_int(long v) { return from_rat(Rat(v)); }

Expr Expr::jet(int coord, int order) { return atom_pow(make_jet_atom(coord, order), 1); }

Expr Expr::atom_pow(const AtomPtr& a, int pow) {
  if (pow == 0) return from_int(1);
  Mono m;
  m.coeff = Rat(1);
  m.factors.push_back({a, pow});
  return from_monomials({std::move(m)});
}

namespace {

// Common-denominator reduction for Inv atoms: rewrites the monomial list as
// N * prod(base^{-E}) with N exactly reduced by every base. This is what makes
// cancellations like (u1 - u2) * (u1 - u2)^{-1} -> 1 happen across monomials.
std::vector<Mono> reduce_inv(std::vector<Mono> monos);

std::optional<Expr> poly_sqrt(const Expr& p);

}  // namespace

Expr Expr::from_monomials(std::vector<Mono> raw) {
  std::vector<Mono> flat;
  flat.reserve(raw.size());
  for (auto& m : raw) mono_normalize(std::move(m), flat);
  auto combined = combine_sorted(std::move(flat));
  bool any_inv = false;
  for (const auto& m : combined)
    if (has_inv_factor(m)) {
      any_inv = true;
      break;
    }
  if (any_inv) combined = reduce_inv(std::move(combined));
  if (combined.empty()) return Expr();
  return Expr(std::make_shared<const std::vector<Mono>>(std::move(combined)));
}

bool Expr::is_rational() const {
  return monos_->empty() || (monos_->size() == 1 && (*monos_)[0].factors.empty());
}

Rat Expr::constant_term() const {
  for (const auto& m : *monos_)
    if (m.factors.empty()) return m.coeff;
  return Rat(0);
}

Expr Expr::operator-() const { return *this * Rat(-1); }

Expr Expr::operator+(const Expr& o) const {
  if (is_zero()) return o;
  if (o.is_zero()) return *this;
  std::vector<Mono> all;
  all.reserve(size() + o.size());
  all.insert(all.end(), monos_->begin(), monos_->end());
  all.insert(all.end(), o.monos_->begin(), o.monos_->end());
  auto combined = combine_sorted(std::move(all));
  bool any_inv = false;
  for (const auto& m : combined)
    if (has_inv_factor(m)) {
      any_inv = true;
      break;
    }
  if (any_inv) combined = reduce_inv(std::move(combined));
  if (combined.empty()) return Expr();
  return Expr(std::make_shared<const std::vector<Mono>>(std::move(combined)));
}

Expr Expr::operator-(const Expr& o) const { return *this + (-o); }

Expr Expr::operator*(const Expr& o) const {
  if (is_zero() || o.is_zero()) return Expr();
  std::vector<Mono> raw;
  raw.reserve(size() * o.size());
  for (const auto& m1 : *monos_)
    for (const auto& m2 : *o.monos_) {
      Mono p;
      p.coeff = m1.coeff * m2.coeff;
      p.factors = m1.factors;
      p.factors.insert(p.factors.end(), m2.factors.begin(), m2.factors.end());
      raw.push_back(std::move(p));
    }
  return from_monomials(std::move(raw));
}

Expr Expr::operator*(const Rat& r) const {
  if (r == 0 || is_zero()) return Expr();
  if (r == 1) return *this;
  auto v = std::make_shared<std::vector<Mono>>(*monos_);
  for (auto& m : *v) m.coeff *= r;
  return Expr(std::move(v));
}

bool Expr::operator==(const Expr& o) const {
  if (monos_ == o.monos_) return true;
  return expr_cmp(*this, o) == 0;
}

Expr Expr::pow(int k) const {
  if (k == 0) return from_int(1);
  if (k < 0) return inverse().pow(-k);
  Expr acc = from_int(1);
  Expr b = *this;
  int e = k;
  while (e > 0) {
    if (e & 1) acc = acc * b;
    if (e >>= 1) b = b * b;
  }
  return acc;
}

Expr Expr::inverse() const {
  if (is_zero()) throw DivisionByZero("inverse of zero expression");
  if (size() == 1) {
    const Mono& m = (*monos_)[0];
    Mono inv;
    inv.coeff = Rat(1) / m.coeff;
    for (const auto& f : m.factors) inv.factors.push_back({f.atom, -f.pow});
    return from_monomials({std::move(inv)});
  }
  // Factor out monomial content (rational scale and common atom powers), then
  // wrap the remaining primitive polynomial in an Inv atom.
  std::map<AtomPtr, int> minpow;
  bool first = true;
  for (const auto& m : *monos_) {
    std::map<AtomPtr, int> present;
    for (const auto& f : m.factors) present[f.atom] = f.pow;
    if (first) {
      minpow = present;
      first = false;
    } else {
      for (auto& [atom, mp] : minpow) {
        auto jt = present.find(atom);
        mp = std::min(mp, jt == present.end() ? 0 : jt->second);
      }
      for (auto& [atom, p] : present)
        if (p < 0 && !minpow.count(atom)) minpow[atom] = p;
    }
  }
  Mono content;
  content.coeff = Rat(1);
  for (auto& [atom, p] : minpow)
    if (p != 0) content.factors.push_back({atom, p});
  // Rational content: gcd of numerators over lcm of denominators; sign from
  // the leading monomial.
  BigInt num_gcd = 0, den_lcm = 1;
  for (const auto& m : *monos_) {
    num_gcd = gcd(num_gcd, numerator(m.coeff) < 0 ? BigInt(-numerator(m.coeff)) : numerator(m.coeff));
    den_lcm = lcm(den_lcm, denominator(m.coeff));
  }
  Rat scale(num_gcd, den_lcm);
  if ((*monos_)[0].coeff < 0) scale = -scale;
  content.coeff = scale;

  Mono content_inv;
  content_inv.coeff = Rat(1) / content.coeff;
  for (const auto& f : content.factors) content_inv.factors.push_back({f.atom, -f.pow});
  Expr base = *this * from_monomials({content_inv});
  if (base.size() < 2) return base.inverse() * from_monomials({content_inv});
  // Perfect squares (e.g. the expanded (u1-u2)^2) invert through their root.
  if (auto root = poly_sqrt(base); root && root->size() >= 2)
    return root->inverse().pow(2) * from_monomials({content_inv});
  AtomPtr inv_atom = make_inv_atom(base);
  Mono res;
  res.coeff = content_inv.coeff;
  res.factors = content_inv.factors;
  res.factors.push_back({inv_atom, -1});
  return from_monomials({std::move(res)});
}

// ---------------------------------------------------------------------------
// exact division (free polynomial ring over Jet and non-sqrt Fn atoms)

namespace {

bool division_safe(const Expr& e) {
  for (const auto& m : e.monomials())
    for (const auto& f : m.factors) {
      if (f.atom->kind == AtomKind::Inv) return false;
      if (f.atom->kind == AtomKind::Root) return false;
      if (f.atom->kind == AtomKind::Fn && f.atom->name == "sqrt" && f.atom->derivs.empty())
        return false;
    }
  return true;
}

// Lex compare of monomials as exponent vectors over the (sorted) atom union.
int lex_cmp(const Mono& a, const Mono& b) {
  std::size_t i = 0, j = 0;
  while (i < a.factors.size() || j < b.factors.size()) {
    if (i == a.factors.size()) {
      // b has an extra atom with pow != 0 (positive after shifting)
      return b.factors[j].pow > 0 ? -1 : 1;
    }
    if (j == b.factors.size()) return a.factors[i].pow > 0 ? 1 : -1;
    const Factor& fa = a.factors[i];
    const Factor& fb = b.factors[j];
    if (fa.atom == fb.atom) {
      if (fa.pow != fb.pow) return fa.pow > fb.pow ? 1 : -1;
      ++i;
      ++j;
      continue;
    }
    int c = atom_cmp(*fa.atom, *fb.atom);
    if (c < 0) return fa.pow > 0 ? 1 : -1;
    return fb.pow > 0 ? -1 : 1;
  }
  return 0;
}

const Mono* leading(const Expr& e) {
  const Mono* best = nullptr;
  for (const auto& m : e.monomials())
    if (!best || lex_cmp(m, *best) > 0) best = &m;
  return best;
}

std::optional<Mono> mono_divide(const Mono& n, const Mono& d) {
  Mono q;
  q.coeff = n.coeff / d.coeff;
  std::size_t i = 0;
  for (const auto& fd : d.factors) {
    while (i < n.factors.size() && atom_cmp(*n.factors[i].atom, *fd.atom) < 0) {
      q.factors.push_back(n.factors[i]);
      ++i;
    }
    if (i == n.factors.size() || n.factors[i].atom != fd.atom) return std::nullopt;
    if (n.factors[i].pow < fd.pow) return std::nullopt;
    if (n.factors[i].pow > fd.pow) q.factors.push_back({fd.atom, n.factors[i].pow - fd.pow});
    ++i;
  }
  for (; i < n.factors.size(); ++i) q.factors.push_back(n.factors[i]);
  return q;
}

Mono laurent_shift(const Expr& e) {
  // Monomial that clears all negative powers in e.
  std::map<AtomPtr, int> neg;
  for (const auto& m : e.monomials())
    for (const auto& f : m.factors)
      if (f.pow < 0) {
        auto [it, _] = neg.emplace(f.atom, 0);
        it->second = std::min(it->second, f.pow);
      }
  Mono s;
  s.coeff = Rat(1);
  for (auto& [atom, p] : neg) s.factors.push_back({atom, -p});
  return s;
}

}  // namespace

namespace {

// Exact square root of a rational, if it exists.
std::optional<Rat> rat_sqrt(const Rat& r) {
  if (r < 0) return std::nullopt;
  BigInt num = numerator(r), den = denominator(r);
  BigInt sn = sqrt(num), sd = sqrt(den);
  if (sn * sn != num || sd * sd != den) return std::nullopt;
  return Rat(sn, sd);
}

// Exact polynomial square root (free polynomial ring only).
std::optional<Expr> poly_sqrt(const Expr& p) {
  if (p.is_zero()) return Expr();
  if (!division_safe(p)) return std::nullopt;
  const Mono* lt = leading(p);
  auto c = rat_sqrt(lt->coeff);
  if (!c) return std::nullopt;
  Mono root;
  root.coeff = *c;
  for (const auto& f : lt->factors) {
    if (f.pow % 2 != 0) return std::nullopt;
    root.factors.push_back({f.atom, f.pow / 2});
  }
  Expr g = Expr::from_monomials({root});
  Mono lead2 = root;
  lead2.coeff = root.coeff * Rat(2);
  int guard = 0;
  while (true) {
    if (++guard > 2000) return std::nullopt;
    Expr r = p - g * g;
    if (r.is_zero()) return g;
    const Mono* lr = leading(r);
    auto t = mono_divide(*lr, lead2);
    if (!t) return std::nullopt;
    // ensure progress: the correction must be lex-smaller than the root head
    if (lex_cmp(*t, root) >= 0) return std::nullopt;
    g = g + Expr::from_monomials({*t});
  }
}

}  // namespace

std::optional<Expr> exact_divide(const Expr& n, const Expr& d) {
  if (n.is_zero()) return Expr();
  if (d.is_zero()) return std::nullopt;
  if (!division_safe(n) || !division_safe(d)) return std::nullopt;
  Mono sn = laurent_shift(n);
  Mono sd = laurent_shift(d);
  Expr np = n * Expr::from_monomials({sn});
  Expr dp = d * Expr::from_monomials({sd});
  Expr r = np;
  std::vector<Mono> q;
  const Mono* ld = leading(dp);
  int guard = 0;
  while (!r.is_zero()) {
    if (++guard > 200000) return std::nullopt;
    const Mono* lr = leading(r);
    auto tq = mono_divide(*lr, *ld);
    if (!tq) return std::nullopt;
    q.push_back(*tq);
    r = r - Expr::from_monomials({*tq}) * dp;
  }
  // Unshift: quotient for originals is q * sd / sn.
  Mono unshift;
  unshift.coeff = Rat(1);
  for (const auto& f : sd.factors) unshift.factors.push_back(f);
  for (const auto& f : sn.factors) unshift.factors.push_back({f.atom, -f.pow});
  Expr quotient = Expr::from_monomials(std::move(q)) * Expr::from_monomials({unshift});
  return quotient;
}

namespace {

// Cheap divisibility test: base = A*lin + B divides n iff n vanishes under
// lin -> -B/A. Returns nullopt when the test does not apply (nested
// occurrences of lin inside other atoms, or negative lin powers).
std::optional<bool> divides_via_root(const Expr& n, const Atom& inv) {
  if (!inv.inv_lin_atom) return std::nullopt;
  const AtomPtr& a = inv.inv_lin_atom;
  int max_pow = 0;
  for (const auto& m : n.monomials())
    for (const auto& f : m.factors) {
      if (f.atom == a) {
        if (f.pow < 0) return std::nullopt;
        max_pow = std::max(max_pow, f.pow);
      } else if (f.atom->key.find(a->key) != std::string::npos) {
        return std::nullopt;
      }
    }
  std::vector<Expr> powers{Expr::from_int(1)};
  for (int k = 1; k <= max_pow; ++k) powers.push_back(powers.back() * inv.inv_subst_value);
  std::vector<Mono> raw;
  for (const auto& m : n.monomials()) {
    int k = 0;
    Mono rest;
    rest.coeff = m.coeff;
    for (const auto& f : m.factors) {
      if (f.atom == a)
        k = f.pow;
      else
        rest.factors.push_back(f);
    }
    for (const auto& pm : powers[static_cast<std::size_t>(k)].monomials()) {
      Mono prod;
      prod.coeff = rest.coeff * pm.coeff;
      prod.factors = rest.factors;
      prod.factors.insert(prod.factors.end(), pm.factors.begin(), pm.factors.end());
      raw.push_back(std::move(prod));
    }
  }
  return Expr::from_monomials(std::move(raw)).is_zero();
}

std::vector<Mono> reduce_inv(std::vector<Mono> monos) {
  std::map<AtomPtr, int> depth;  // base atom -> max negative power magnitude
  for (const auto& m : monos)
    for (const auto& f : m.factors)
      if (f.atom->kind == AtomKind::Inv) {
        auto [it, _] = depth.emplace(f.atom, 0);
        it->second = std::max(it->second, -f.pow);
      }
  if (depth.empty()) return monos;

  // Numerator over the common denominator prod(base^E).
  Expr numer;
  for (const auto& m : monos) {
    Mono stripped;
    stripped.coeff = m.coeff;
    std::map<AtomPtr, int> mine;
    for (const auto& f : m.factors) {
      if (f.atom->kind == AtomKind::Inv)
        mine[f.atom] = -f.pow;
      else
        stripped.factors.push_back(f);
    }
    Expr term = Expr::from_monomials({stripped});
    for (auto& [atom, e] : depth) {
      int have = mine.count(atom) ? mine[atom] : 0;
      int complement = e - have;
      if (complement > 0) term = term * atom->base.pow(complement);
    }
    numer = numer + term;
  }
  // Cancel each base out of the numerator as often as possible.
  std::vector<std::pair<AtomPtr, int>> bases(depth.begin(), depth.end());
  std::sort(bases.begin(), bases.end(),
            [](const auto& a, const auto& b) { return atom_cmp(*a.first, *b.first) < 0; });
  for (auto& [atom, e] : bases) {
    while (e > 0) {
      auto pre = divides_via_root(numer, *atom);
      if (pre.has_value() && !*pre) break;
      auto q = exact_divide(numer, atom->base);
      if (!q) break;
      numer = *q;
      --e;
    }
  }
  if (numer.is_zero()) return {};
  std::vector<Mono> out;
  out.reserve(numer.size());
  for (const auto& m : numer.monomials()) {
    Mono r = m;
    for (auto& [atom, e] : bases)
      if (e > 0) r.factors.push_back({atom, -e});
    std::sort(r.factors.begin(), r.factors.end(), [](const Factor& a, const Factor& b) {
      return a.atom == b.atom ? false : atom_cmp(*a.atom, *b.atom) < 0;
    });
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), mono_less);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// expression builders

Expr fn_app(const std::string& name, const std::vector<Expr>& args, const std::vector<int>& derivs) {
  return Expr::atom_pow(make_fn_atom(name, args, derivs), 1);
}

Expr sqrt_of(const Expr& arg) { return fn_app("sqrt", {arg}); }
Expr log_of(const Expr& arg) { return fn_app("log", {arg}); }

// ---------------------------------------------------------------------------
// calculus

Expr fn_slot_derivative(const AtomPtr& fn_atom, int slot) {
  const Atom& a = *fn_atom;
  assert(a.kind == AtomKind::Fn);
  if (a.name == "log" && a.derivs.empty() && a.args.size() == 1)
    return a.args[0].inverse();
  if (a.name == "sqrt" && a.derivs.empty() && a.args.size() == 1)
    return Expr::atom_pow(fn_atom, 1) * a.args[0].inverse() * Rat(1, 2);
  std::vector<int> derivs = a.derivs;
  derivs.push_back(slot + 1);
  return fn_app(a.name, a.args, derivs);
}

namespace {

Expr atom_partial(const AtomPtr& ap, JetVar v) {
  const Atom& a = *ap;
  switch (a.kind) {
    case AtomKind::Jet:
      return a.jet == v ? Expr::from_int(1) : Expr();
    case AtomKind::Root:
      return Expr();
    case AtomKind::Fn: {
      Expr acc;
      for (std::size_t k = 0; k < a.args.size(); ++k) {
        Expr pa = partial(a.args[k], v);
        if (pa.is_zero()) continue;
        acc += fn_slot_derivative(ap, static_cast<int>(k)) * pa;
      }
      return acc;
    }
    case AtomKind::Inv:
      return partial(a.base, v);
  }
  return Expr();
}

}  // namespace

Expr partial(const Expr& e, JetVar v) {
  // raw accumulation; a single normalization pass at the end
  std::vector<Mono> raw;
  for (const auto& m : e.monomials()) {
    for (std::size_t i = 0; i < m.factors.size(); ++i) {
      const Factor& f = m.factors[i];
      Expr da = atom_partial(f.atom, v);
      if (da.is_zero()) continue;
      Mono rest;
      rest.coeff = m.coeff * Rat(f.pow);
      for (std::size_t j = 0; j < m.factors.size(); ++j) {
        if (j == i) {
          if (f.pow != 1) rest.factors.push_back({f.atom, f.pow - 1});
        } else {
          rest.factors.push_back(m.factors[j]);
        }
      }
      for (const auto& dm : da.monomials()) {
        Mono prod;
        prod.coeff = rest.coeff * dm.coeff;
        prod.factors = rest.factors;
        prod.factors.insert(prod.factors.end(), dm.factors.begin(), dm.factors.end());
        raw.push_back(std::move(prod));
      }
    }
  }
  return Expr::from_monomials(std::move(raw));
}

namespace {

void collect_jets(const Expr& e, std::set<JetVar>& out) {
  for (const auto& m : e.monomials())
    for (const auto& f : m.factors) {
      const Atom& a = *f.atom;
      switch (a.kind) {
        case AtomKind::Jet:
          out.insert(a.jet);
          break;
        case AtomKind::Fn:
          for (const auto& arg : a.args) collect_jets(arg, out);
          break;
        case AtomKind::Inv:
          collect_jets(a.base, out);
          break;
        case AtomKind::Root:
          break;
      }
    }
}

}  // namespace

std::set<JetVar> jet_vars(const Expr& e) {
  std::set<JetVar> s;
  collect_jets(e, s);
  return s;
}

int max_jet_order(const Expr& e) {
  int mx = -1;
  for (const auto& v : jet_vars(e)) mx = std::max(mx, v.order);
  return mx;
}

int max_coord(const Expr& e) {
  int mx = 0;
  for (const auto& v : jet_vars(e)) mx = std::max(mx, v.coord);
  return mx;
}

Expr total_derivative(const Expr& e) {
  Expr acc;
  for (const auto& v : jet_vars(e)) {
    Expr p = partial(e, v);
    if (!p.is_zero()) acc += p * Expr::jet(v.coord, v.order + 1);
  }
  return acc;
}

Expr dx_pow(const Expr& e, int k) {
  Expr r = e;
  for (int i = 0; i < k; ++i) r = total_derivative(r);
  return r;
}

// ---------------------------------------------------------------------------
// grading

namespace {

long atom_degree(const AtomPtr& ap) {
  const Atom& a = *ap;
  switch (a.kind) {
    case AtomKind::Jet:
      return a.jet.order;
    case AtomKind::Root:
    case AtomKind::Fn:
      // Smooth coefficient atoms carry degree 0; this fixes deg log u_x = 0.
      return 0;
    case AtomKind::Inv: {
      auto d = homogeneous_degree(a.base);
      if (!d) throw NotGradable("Inv base is not homogeneous: " + a.base.str());
      return *d;
    }
  }
  return 0;
}

long mono_degree(const Mono& m) {
  long d = 0;
  for (const auto& f : m.factors) d += static_cast<long>(f.pow) * atom_degree(f.atom);
  return d;
}

}  // namespace

std::map<long, Expr> degree_decompose(const Expr& e) {
  std::map<long, std::vector<Mono>> buckets;
  for (const auto& m : e.monomials()) buckets[mono_degree(m)].push_back(m);
  std::map<long, Expr> out;
  for (auto& [d, ms] : buckets) out.emplace(d, Expr::from_monomials(std::move(ms)));
  return out;
}

std::optional<long> homogeneous_degree(const Expr& e) {
  if (e.is_zero()) return 0;
  std::optional<long> deg;
  for (const auto& m : e.monomials()) {
    long d = mono_degree(m);
    if (!deg)
      deg = d;
    else if (*deg != d)
      return std::nullopt;
  }
  return deg;
}

bool is_differential_polynomial(const Expr& e) {
  for (const auto& m : e.monomials())
    for (const auto& f : m.factors) {
      const Atom& a = *f.atom;
      switch (a.kind) {
        case AtomKind::Jet:
          if (a.jet.order >= 1 && f.pow < 0) return false;
          break;
        case AtomKind::Fn:
          for (const auto& arg : a.args)
            if (max_jet_order(arg) >= 1) return false;
          break;
        case AtomKind::Inv:
          if (max_jet_order(a.base) >= 1) return false;
          break;
        case AtomKind::Root:
          break;
      }
    }
  return true;
}

// ---------------------------------------------------------------------------
// substitution

namespace {

struct SubstCtx {
  const std::vector<Expr>& map;
  const AtomImages& images;
  std::map<std::pair<int, int>, Expr> cache;

  const Expr* declared_image(const AtomPtr& ap) const {
    for (const auto& [atom, img] : images)
      if (atom == ap) return &img;
    return nullptr;
  }

  const Expr& jet_image(int coord, int order) {
    auto key = std::make_pair(coord, order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    if (order == 0) {
      if (coord < 1 || coord > static_cast<int>(map.size()))
        throw Error("substitute_jets: coordinate out of range");
      return cache.emplace(key, map[coord - 1]).first->second;
    }
    Expr img = total_derivative(jet_image(coord, order - 1));
    return cache.emplace(key, std::move(img)).first->second;
  }
};

Expr subst_rec(const Expr& e, SubstCtx& ctx);

Expr atom_image(const AtomPtr& ap, SubstCtx& ctx) {
  if (const Expr* img = ctx.declared_image(ap)) return *img;
  const Atom& a = *ap;
  switch (a.kind) {
    case AtomKind::Jet:
      return ctx.jet_image(a.jet.coord, a.jet.order);
    case AtomKind::Root:
      return Expr::atom_pow(ap, 1);
    case AtomKind::Fn: {
      std::vector<Expr> new_args;
      new_args.reserve(a.args.size());
      bool changed = false;
      for (const auto& arg : a.args) {
        Expr na = subst_rec(arg, ctx);
        if (!(na == arg)) changed = true;
        new_args.push_back(std::move(na));
      }
      if (!changed) return Expr::atom_pow(ap, 1);
      return fn_app(a.name, new_args, a.derivs);
    }
    case AtomKind::Inv:
      return subst_rec(a.base, ctx);
  }
  return Expr();
}

Expr subst_rec(const Expr& e, SubstCtx& ctx) {
  Expr out;
  for (const auto& m : e.monomials()) {
    Expr term = Expr::from_rat(m.coeff);
    for (const auto& f : m.factors) term = term * atom_image(f.atom, ctx).pow(f.pow);
    out += term;
  }
  return out;
}

}  // namespace

Expr substitute_jets(const Expr& e, const std::vector<Expr>& map, const AtomImages& images) {
  SubstCtx ctx{map, images, {}};
  return subst_rec(e, ctx);
}

std::string monomial_key(const Mono& m) {
  std::ostringstream os;
  for (const auto& f : m.factors) os << f.atom->key << "^" << f.pow << "*";
  return os.str();
}

std::vector<AtomPtr> top_level_atoms(const Expr& e) {
  std::set<AtomPtr> seen;
  std::vector<AtomPtr> out;
  for (const auto& m : e.monomials())
    for (const auto& f : m.factors)
      if (seen.insert(f.atom).second) out.push_back(f.atom);
  return out;
}

// ---------------------------------------------------------------------------
// printing

namespace {

std::string atom_str(const Atom& a) {
  std::ostringstream os;
  switch (a.kind) {
    case AtomKind::Jet: {
      os << "u" << a.jet.coord;
      if (a.jet.order >= 1 && a.jet.order <= 3)
        for (int i = 0; i < a.jet.order; ++i) os << "x";
      else if (a.jet.order > 3)
        os << "x" << a.jet.order;
      break;
    }
    case AtomKind::Root:
      os << a.name;
      break;
    case AtomKind::Fn: {
      os << a.name;
      if (!a.derivs.empty()) {
        if (a.args.size() == 1 && a.derivs.size() <= 3) {
          for (std::size_t i = 0; i < a.derivs.size(); ++i) os << "'";
        } else {
          os << "_d[";
          for (std::size_t i = 0; i < a.derivs.size(); ++i)
            os << (i ? "," : "") << a.derivs[i];
          os << "]";
        }
      }
      os << "(";
      for (std::size_t i = 0; i < a.args.size(); ++i) os << (i ? "," : "") << a.args[i].str();
      os << ")";
      break;
    }
    case AtomKind::Inv:
      os << "(" << a.base.str() << ")";
      break;
  }
  return os.str();
}

}  // namespace

std::string Expr::str() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& m : *monos_) {
    Rat c = m.coeff;
    if (first) {
      if (c < 0) {
        os << "-";
        c = -c;
      }
    } else {
      os << (c < 0 ? " - " : " + ");
      if (c < 0) c = -c;
    }
    first = false;
    bool wrote = false;
    if (c != 1 || m.factors.empty()) {
      os << rat_to_string(c);
      wrote = true;
    }
    for (const auto& f : m.factors) {
      if (wrote) os << "*";
      os << atom_str(*f.atom);
      if (f.pow != 1) os << "^" << f.pow;
      wrote = true;
    }
  }
  return os.str();
}

}  // namespace loopalg

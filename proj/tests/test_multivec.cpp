#include "loopalg/multivec.hpp"

#include <random>

#include "doctest.h"

using namespace loopalg;

namespace {

Expr U(int i, int s = 0) { return Expr::jet(i, s); }
Expr C(long n, long d = 1) { return Expr::from_rat(Rat(n, d)); }

// n=1 kernel g delta' + (1/2) g' delta (antisymmetric for any g).
LocalBivector skew1(const Expr& g) {
  LocalBivector p(1);
  p.add_term(1, 1, 1, g);
  p.add_term(1, 1, 0, total_derivative(g) * Rat(1, 2));
  return p;
}

LocalBivector gardner() { return skew1(C(1)); }          // delta'
LocalBivector virasoro0() { return skew1(U(1)); }        // u delta' + 1/2 u_x delta

LocalFunctional F_half_u2() { return {1, C(1, 2) * U(1) * U(1)}; }
LocalFunctional F_u3_over_6() { return {1, C(1, 6) * U(1) * U(1) * U(1)}; }
LocalFunctional F_u() { return {1, U(1)}; }

}  // namespace

TEST_CASE("commutator basics") {
  EvoField xi({U(1, 1)});
  CHECK(commutator(xi, xi).is_zero());
  // zeroth-jet Lie bracket: [a(u), b(u)] = (a b' - b a')
  EvoField a({fn_app("a", {U(1)})}), b({fn_app("b", {U(1)})});
  EvoField c = commutator(a, b);
  Expr expect = fn_app("a", {U(1)}) * fn_app("b", {U(1)}, {1}) -
                fn_app("b", {U(1)}) * fn_app("a", {U(1)}, {1});
  CHECK(c.xi[0] == expect);
  // translation commutes with everything evolutionary
  EvoField tr({U(1, 1)});
  EvoField h({U(1) * U(1, 1)});
  EvoField ch = commutator(tr, h);
  // [dx-translation, X] = 0 since characteristics are x-independent: the
  // bracket is dx(eta) - eta-prolonged(u_x) = 0
  CHECK(ch.is_zero());
}

TEST_CASE("flip and antisymmetry") {
  CHECK(is_antisymmetric(gardner()));
  CHECK(is_antisymmetric(virasoro0()));
  CHECK(is_antisymmetric(skew1(U(1) * U(1))));
  LocalBivector bad(1);
  bad.add_term(1, 1, 0, U(1, 1));
  CHECK(!is_antisymmetric(bad));
  // flip is an involution; antisymmetrize is a projection
  std::mt19937_64 rng(5);
  for (int it = 0; it < 10; ++it) {
    LocalBivector p(2);
    std::uniform_int_distribution<int> ord(0, 2), coord(1, 2), pick(0, 2);
    for (int t = 0; t < 4; ++t) {
      Expr c = U(coord(rng), ord(rng)) * C(pick(rng) - 1);
      p.add_term(coord(rng), coord(rng), ord(rng), c);
    }
    CHECK(flip(flip(p)) == p);
    LocalBivector a = antisymmetrize(p);
    CHECK(is_antisymmetric(a));
    CHECK(antisymmetrize(a) == a);
  }
}

TEST_CASE("ham_vf examples") {
  // delta' with F = int u^2/2: xi = u_x
  EvoField x1 = ham_vf(gardner(), F_half_u2());
  CHECK(x1.xi[0] == U(1, 1));
  // z2 second bracket with F = int u^2/2: xi = (3/2) u u_x
  EvoField x2 = ham_vf(virasoro0(), F_half_u2());
  CHECK(x2.xi[0] == C(3, 2) * U(1) * U(1, 1));
  // z8 second bracket with F = int u: only (1/2) u_x survives
  LocalBivector kdv2 = virasoro0();
  kdv2.add_term(1, 1, 3, C(1, 8));  // the eps^2 delta''' term, eps suppressed
  EvoField x3 = ham_vf(kdv2, F_u());
  CHECK(x3.xi[0] == C(1, 2) * U(1, 1));
}

TEST_CASE("lie_bivector: translation invariance and exact fields") {
  EvoField tr({U(1, 1)});
  CHECK(lie_bivector(gardner(), tr).is_zero());
  CHECK(lie_bivector(virasoro0(), tr).is_zero());
  // d1 of a d1-Hamiltonian field vanishes: xi = u u_x = ham(delta', u^3/6)
  EvoField h = ham_vf(gardner(), F_u3_over_6());
  CHECK(lie_bivector(gardner(), h).is_zero());
}

TEST_CASE("lie_bivector hand-computed kernel") {
  // X = -(1/16)(u_x^2 + u u_xx); [delta', X] = (1/8)u d''' + (3/16)u_x d'' +
  // (1/16)u_xx d'  (the c = -u/24 deformation representative at eps^2).
  EvoField x({C(-1, 16) * (U(1, 1) * U(1, 1) + U(1) * U(1, 2))});
  LocalBivector q = lie_bivector(gardner(), x);
  CHECK(q.coeff(1, 1, 3) == C(1, 8) * U(1));
  CHECK(q.coeff(1, 1, 2) == C(3, 16) * U(1, 1));
  CHECK(q.coeff(1, 1, 1) == C(1, 16) * U(1, 2));
  CHECK(q.coeff(1, 1, 0).is_zero());
  CHECK(is_antisymmetric(q));
}

TEST_CASE("schouten_bb: Poisson kernels have zero self-bracket") {
  CHECK(schouten_bb(gardner(), gardner()).is_zero());
  CHECK(schouten_bb(virasoro0(), virasoro0()).is_zero());
  CHECK(schouten_bb(gardner(), virasoro0()).is_zero());
  // any n=1 hydrodynamic kernel g(u) delta' + ... is Poisson
  CHECK(schouten_bb(skew1(U(1) * U(1)), skew1(U(1) * U(1))).is_zero());
  LocalBivector kdv2 = virasoro0();
  kdv2.add_term(1, 1, 3, C(1, 8));
  CHECK(schouten_bb(kdv2, kdv2).is_zero());
}

TEST_CASE("schouten_bb: non-Poisson kernel detected and oracle matches") {
  // g depending on u_x is antisymmetric but not Poisson
  LocalBivector p = skew1(U(1, 1));
  LocalTrivector t = schouten_bb(p, p);
  CHECK(!t.is_zero());
  LocalFunctional f = F_half_u2(), g = F_u3_over_6(), h = F_u();
  LocalFunctional lhs = pairing(t, f, g, h);
  LocalFunctional rhs = jacobiator(p, f, g, h);
  rhs.density = rhs.density * Rat(2);
  CHECK(functionals_equal(lhs, rhs));
  CHECK(!functionals_equal(lhs, LocalFunctional{1, Expr()}));
}

TEST_CASE("pairing examples") {
  LocalTrivector z(1);
  CHECK(pairing(z, F_u(), F_u(), F_u()).density.is_zero());
  LocalTrivector t(1);
  t.add_term(1, 1, 1, 0, 0, C(1));
  LocalFunctional p = pairing(t, F_half_u2(), F_half_u2(), F_half_u2());
  CHECK(p.density == U(1) * U(1) * U(1));
}

TEST_CASE("pairing oracle on random antisymmetric bivectors (n=1)") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> ord(0, 2), cf(-2, 2);
  for (int it = 0; it < 6; ++it) {
    Expr g0 = C(cf(rng)) * U(1, ord(rng)) + C(cf(rng));
    LocalBivector p = skew1(g0);
    LocalTrivector t = schouten_bb(p, p);
    LocalFunctional f1{1, C(1, 2) * U(1) * U(1)};
    LocalFunctional f2{1, C(1, 6) * U(1).pow(3) + U(1) * U(1, 1).pow(2)};
    LocalFunctional f3{1, U(1) + U(1, 1) * U(1, 1)};
    LocalFunctional lhs = pairing(t, f1, f2, f3);
    LocalFunctional rhs = jacobiator(p, f1, f2, f3);
    rhs.density = rhs.density * Rat(2);
    CHECK(functionals_equal(lhs, rhs));
  }
}

TEST_CASE("pairing oracle on random antisymmetric bivectors (n=2)") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> ord(0, 1), cf(-2, 2), coord(1, 2), k(0, 2);
  for (int it = 0; it < 4; ++it) {
    LocalBivector raw(2);
    for (int t = 0; t < 3; ++t)
      raw.add_term(coord(rng), coord(rng), k(rng), C(cf(rng)) * U(coord(rng), ord(rng)));
    LocalBivector p = antisymmetrize(raw);
    LocalTrivector t = schouten_bb(p, p);
    LocalFunctional f1{2, C(1, 2) * U(1) * U(1) + U(2)};
    LocalFunctional f2{2, U(1) * U(2)};
    LocalFunctional f3{2, U(2) * U(2) * U(1) + U(1, 1) * U(2, 1)};
    LocalFunctional lhs = pairing(t, f1, f2, f3);
    LocalFunctional rhs = jacobiator(p, f1, f2, f3);
    rhs.density = rhs.density * Rat(2);
    CHECK(functionals_equal(lhs, rhs));
  }
}

TEST_CASE("pencil differentials: d_a^2 = 0 and anticommutation") {
  PencilContext ctx{gardner(), virasoro0()};
  std::mt19937_64 rng(37);
  std::uniform_int_distribution<int> cf(-3, 3), ord(0, 2);
  for (int it = 0; it < 5; ++it) {
    LocalFunctional f{1, C(cf(rng)) * U(1).pow(2) + C(cf(rng)) * U(1, ord(rng)).pow(2) +
                             C(cf(rng)) * U(1).pow(3)};
    for (int a = 1; a <= 2; ++a) {
      EvoField df = d_of(ctx, a, f);
      CHECK(d_of(ctx, a, df).is_zero());
    }
    // d1 d2 + d2 d1 = 0 on functionals (pencil compatibility)
    LocalBivector m12 = d_of(ctx, 1, d_of(ctx, 2, f));
    LocalBivector m21 = d_of(ctx, 2, d_of(ctx, 1, f));
    CHECK((m12 + m21).is_zero());
  }
  // d1 of the Casimir field of omega1
  EvoField cas = d_of(ctx, 1, F_u());
  CHECK(cas.is_zero());
}

TEST_CASE("check_pencil on the dispersionless KdV pair") {
  BivectorSeries p, q;
  p.trunc = q.trunc = 2;
  p.set(0, gardner());
  q.set(0, virasoro0());
  auto rep = check_pencil(p, q, 0);
  CHECK(rep.compatible);
  // deformed: kdv (z8)
  LocalBivector kdv2(1);
  kdv2.add_term(1, 1, 3, C(1, 8));
  q.set(2, kdv2);
  auto rep2 = check_pencil(p, q, 2);
  CHECK(rep2.compatible);
  // corrupted kdv: 1/7 coefficient breaks the pencil
  BivectorSeries qq = q;
  LocalBivector bad(1);
  bad.add_term(1, 1, 3, C(1, 7));
  qq.parts[2] = bad;
  // still antisymmetric but [Q,Q] no longer vanishes? For constant
  // coefficients both pass; the corruption shows up against omega2 mixing.
  // (The real negative control lives in the acceptance suite; here just check
  // a kernel that breaks antisymmetry is reported.)
  LocalBivector asym(1);
  asym.add_term(1, 1, 0, U(1) * U(1));
  BivectorSeries r;
  r.trunc = 0;
  r.set(0, asym);
  auto rep3 = check_pencil(r, q, 0);
  CHECK(!rep3.compatible);
  CHECK(!rep3.antisym_ok);
}

TEST_CASE("trivector swaps are involutions and antisymmetrize projects") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> ord(0, 2), cf(-2, 2), coord(1, 2);
  for (int it = 0; it < 5; ++it) {
    LocalTrivector t(2);
    for (int k = 0; k < 3; ++k)
      t.add_term(coord(rng), coord(rng), coord(rng), ord(rng), ord(rng),
                 C(cf(rng)) * U(coord(rng), ord(rng)));
    CHECK(trivector_swap_yz(trivector_swap_yz(t)) == t);
    CHECK(trivector_swap_xy(trivector_swap_xy(t)) == t);
    LocalTrivector a = trivector_antisymmetrize(t);
    CHECK(trivector_antisymmetrize(a) == a);
    CHECK(trivector_swap_yz(a) == -a);
    CHECK(trivector_swap_xy(a) == -a);
  }
}

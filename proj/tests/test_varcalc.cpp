#include "loopalg/varcalc.hpp"

#include <random>

#include "doctest.h"
#include "loopalg/expr.hpp"

using namespace loopalg;

namespace {

Expr U(int i, int s = 0) { return Expr::jet(i, s); }
Expr C(long n, long d = 1) { return Expr::from_rat(Rat(n, d)); }

Expr random_poly(std::mt19937_64& rng, int n, int max_order, int terms) {
  std::uniform_int_distribution<int> coord(1, n), order(0, max_order), deg(1, 2),
      coef(-4, 4), nfact(1, 3);
  Expr e;
  for (int t = 0; t < terms; ++t) {
    int c = coef(rng);
    if (c == 0) c = 1;
    Expr m = C(c);
    int k = nfact(rng);
    for (int j = 0; j < k; ++j) m = m * U(coord(rng), order(rng)).pow(deg(rng));
    e += m;
  }
  return e;
}

}  // namespace

TEST_CASE("euler operator examples") {
  CHECK(euler(U(1) * U(1, 1), 1).is_zero());
  CHECK(euler(C(1, 2) * U(1) * U(1), 1) == U(1));
  CHECK(euler(C(1, 2) * U(1, 1) * U(1, 1), 1) == -U(1, 2));
}

TEST_CASE("euler kills total derivatives (random)") {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 30; ++it) {
    Expr f = random_poly(rng, 2, 2, 3);
    Expr df = total_derivative(f);
    for (int i = 1; i <= 2; ++i) CHECK(euler(df, i).is_zero());
  }
}

TEST_CASE("functionals_equal") {
  CHECK(functionals_equal({1, U(1) * U(1, 1)}, {1, Expr()}));
  CHECK(!functionals_equal({1, C(1, 2) * U(1) * U(1)}, {1, U(1) * U(1)}));
  // integration by parts: u u_xx ~ -u_x^2
  CHECK(functionals_equal({1, U(1) * U(1, 2)}, {1, -(U(1, 1) * U(1, 1))}));
}

TEST_CASE("is_total_derivative") {
  CHECK(is_total_derivative(U(1) * U(1, 1)));
  CHECK(!is_total_derivative(U(1, 1) * U(2, 1)));
  CHECK(is_total_derivative(U(1, 2) * log_of(U(1, 1)) + U(1, 2)));
  CHECK(!is_total_derivative(C(3)));
}

TEST_CASE("integrate_dx examples") {
  CHECK(integrate_dx(C(2) * U(1) * U(1, 1)) == U(1) * U(1));
  CHECK(integrate_dx(U(1, 2)) == U(1, 1));
  CHECK(integrate_dx(U(1, 2) * log_of(U(1, 1)) + U(1, 2)) == U(1, 1) * log_of(U(1, 1)));
  CHECK_THROWS_AS(integrate_dx(U(1, 1) * U(2, 1)), NotExact);
  // d/dx log u = u_x / u
  CHECK(integrate_dx(U(1, 1) * U(1).pow(-1)) == log_of(U(1)));
  // multi-coordinate density
  CHECK(integrate_dx(U(1, 1) * U(2) + U(1) * U(2, 1)) == U(1) * U(2));
  // opaque coefficients: dx f(u1,u2) = f_1 u1x + f_2 u2x
  Expr f = fn_app("f", {U(1), U(2)});
  CHECK(integrate_dx(total_derivative(f)) == f);
}

TEST_CASE("integrate_dx round trip (random)") {
  std::mt19937_64 rng(17);
  for (int it = 0; it < 30; ++it) {
    Expr g = random_poly(rng, 2, 2, 3);
    Expr e = total_derivative(g);
    Expr back = integrate_dx(e);
    CHECK(total_derivative(back) == e);
  }
}

TEST_CASE("homotopy_density examples") {
  auto F = homotopy_density({U(1)});
  CHECK(F.density == C(1, 2) * U(1) * U(1));
  auto G = homotopy_density({-U(1, 2)});
  CHECK(functionals_equal(G, {1, C(1, 2) * U(1, 1) * U(1, 1)}));
  CHECK_THROWS_AS(homotopy_density({U(1, 1)}), NotVariational);  // u_x is not a gradient
}

TEST_CASE("homotopy consistency (random)") {
  std::mt19937_64 rng(23);
  int done = 0;
  for (int it = 0; it < 40 && done < 25; ++it) {
    Expr f = random_poly(rng, 2, 2, 3);
    if (f.constant_term() != 0) f -= Expr::from_rat(f.constant_term());
    std::vector<Expr> g = {euler(f, 1), euler(f, 2)};
    auto F = homotopy_density(g);
    CHECK(functionals_equal(F, {2, f}));
    ++done;
  }
  CHECK(done >= 25);
}

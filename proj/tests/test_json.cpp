#include "loopalg/json_io.hpp"

#include <random>

#include "doctest.h"
#include "loopalg/parse.hpp"
#include "loopalg/structures.hpp"

using namespace loopalg;

namespace {

Expr U(int i, int s = 0) { return Expr::jet(i, s); }
Expr C(long n, long d = 1) { return Expr::from_rat(Rat(n, d)); }

}  // namespace

TEST_CASE("expression json round trip") {
  std::vector<Expr> samples = {
      Expr(),
      C(3, 8),
      U(1, 2) * U(2).pow(-1) * C(-5, 7) + U(1) * U(1),
      log_of(U(1, 1)) * U(1, 1),
      sqrt_of(U(2)) * C(2) + fn_app("c", {U(1)}, {1, 1}),
      (U(1) - U(2)).inverse() * C(8),
      Expr::atom_pow(make_root_atom("r3", {Rat(-3), Rat(0)}), 1) * U(1),
  };
  for (const auto& e : samples) {
    Json j = expr_to_json(e);
    CHECK(expr_from_json(j) == e);
  }
}

TEST_CASE("expression json schema errors") {
  CHECK_THROWS_AS(expr_from_json(Json{{"op", "?"}, {"args", Json::array()}}), SchemaError);
  CHECK_THROWS_AS(expr_from_json(Json{{"jet", Json::array({0, 0})}}), SchemaError);
  CHECK_THROWS_AS(expr_from_json(Json::object()), SchemaError);
}

TEST_CASE("structure json round trip and validation") {
  auto kdv = example_pencil("kdv", 2);
  Json doc = pencil_to_json(kdv, 1);
  auto loaded = structure_from_json(doc);
  CHECK(loaded.n == 1);
  CHECK(series_is_zero(series_add(loaded.pencil.first, series_neg(kdv.first))));
  CHECK(series_is_zero(series_add(loaded.pencil.second, series_neg(kdv.second))));
  // f-data form
  Json fdoc = {{"type", "pair_f"}, {"n", 1}, {"f", Json::array({expr_to_json(C(1))})}};
  auto pf = structure_from_json(fdoc);
  CHECK(pf.pencil.second.part(0)->coeff(1, 1, 1) == U(1));
  CHECK_THROWS_AS(structure_from_json(Json{{"type", "nope"}}), SchemaError);
  CHECK_THROWS_AS(structure_from_json(Json{{"type", "pencil"}, {"n", 1}}), SchemaError);
}

TEST_CASE("nls-case2 pencil json round trip") {
  auto pencil = example_pencil("nls-case2", 2);
  auto loaded = structure_from_json(pencil_to_json(pencil, 2));
  CHECK(loaded.n == 2);
  CHECK(series_is_zero(series_add(loaded.pencil.first, series_neg(pencil.first))));
  CHECK(series_is_zero(series_add(loaded.pencil.second, series_neg(pencil.second))));
}

TEST_CASE("transform json round trip") {
  MiuraTransform t = MiuraTransform::identity(2);
  t.corrections[1] = {Expr(), C(1, 2) * U(1) * U(1, 1) - U(2, 1)};
  t.corrections[2] = {U(1, 2) * C(1, 24), Expr()};
  Json j = transform_to_json(t);
  MiuraTransform back = transform_from_json(j);
  CHECK(back.dim == 2);
  CHECK(back.corrections.at(1)[1] == t.corrections.at(1)[1]);
  CHECK(back.corrections.at(2)[0] == t.corrections.at(2)[0]);
  CHECK(back.point[0] == U(1));
}

TEST_CASE("infix parser") {
  CHECK(parse_expr("3/8") == C(3) * C(8).inverse());
  CHECK(parse_expr("-1/24") == C(-1, 24));
  CHECK(parse_expr("u1x^2 - u2") == U(1, 1).pow(2) - U(2));
  CHECK(parse_expr("w2xx") == U(2, 2));
  CHECK(parse_expr("u1x4") == U(1, 4));
  CHECK(parse_expr("-(u1)^2/24") == C(-1, 24) * U(1) * U(1));
  CHECK(parse_expr("c(u1)*u1x") == fn_app("c", {U(1)}) * U(1, 1));
  CHECK(parse_expr("log(u1x) + sqrt(u2)") == log_of(U(1, 1)) + sqrt_of(U(2)));
  CHECK(parse_expr("2*(u1 + 3)^2") == C(2) * (U(1) + C(3)).pow(2));
  auto list = parse_expr_list("-(u1)^2/24, -(u2)^2/24");
  REQUIRE(list.size() == 2);
  CHECK(list[1] == C(-1, 24) * U(2) * U(2));
  CHECK_THROWS_AS(parse_expr("u0"), SchemaError);
  CHECK_THROWS_AS(parse_expr("2 +"), SchemaError);
  CHECK_THROWS_AS(parse_expr("foo + "), SchemaError);
}

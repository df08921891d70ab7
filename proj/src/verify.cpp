#include "loopalg/verify.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "loopalg/json_io.hpp"
#include "loopalg/numeric.hpp"
#include "loopalg/parse.hpp"
#include "loopalg/proptest.hpp"

namespace loopalg {

namespace {

Expr U(int i, int s = 0) { return Expr::jet(i, s); }
Expr C(long n, long d = 1) { return Expr::from_rat(Rat(n, d)); }

bool pencils_equal(const PencilSeries& a, const PencilSeries& b, int order) {
  return series_is_zero(series_add(a.first.truncated(order),
                                   series_neg(b.first.truncated(order)))) &&
         series_is_zero(series_add(a.second.truncated(order),
                                   series_neg(b.second.truncated(order))));
}

PencilSeries z2_plus_rep(const DeformationRep& rep) {
  HydroPair z2 = make_hydro_pair({C(1)});
  PencilSeries p;
  p.first.trunc = p.second.trunc = 2;
  p.first.set(0, z2.w1);
  p.second.set(0, z2.w2);
  if (const LocalBivector* q2 = rep.Q.part(2)) p.second.set(2, *q2);
  return p;
}

std::string series_brief(const ExprSeries& s) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, e] : s.parts) {
    if (e.is_zero()) continue;
    if (!first) os << " + ";
    first = false;
    if (m == 0)
      os << e.str();
    else
      os << "eps^" << m << " * (" << e.str() << ")";
  }
  return first ? "0" : os.str();
}

// ---------------------------------------------------------------------------
// shared pipeline pieces

void check_compat(CaseReport& rep, const std::string& name, int order) {
  auto [p, q] = example_pencil(name, order);
  auto r = check_pencil(p, q, order);
  rep.add("pencil " + name + " compatible to eps^" + std::to_string(order), r.compatible,
          r.compatible ? "" : r.to_string());
}

void kdv_correspondence(CaseReport& rep) {
  HydroPair z2 = make_hydro_pair({C(1)});
  auto dr = deformation_rep(z2, {C(-1, 24)});
  auto kdv = example_pencil("kdv", 2);
  const LocalBivector* q2 = dr.Q.part(2);
  bool exact = q2 && *q2 == *kdv.second.part(2);
  rep.add("representative with c = -1/24 equals the KdV eps^2 kernel", exact,
          exact ? "d1 X = (1/8) delta'''" : "kernels differ");
  // solver route with the documented ansatz (jets <= 2, coefficients deg <= 2)
  PencilSeries p = z2_plus_rep(dr);
  AnsatzSpec spec;
  spec.coeff_basis = {U(1), U(1) * U(1)};
  auto sol = solve_equivalence(p, kdv, spec, 2);
  bool verified = false;
  if (sol.found) {
    auto moved = pushforward_pair(p, sol.transform, 2);
    verified = pencils_equal(moved, kdv, 2);
  }
  rep.add("solver equivalence to kdv re-verified by pushforward", sol.found && verified,
          sol.found ? "" : sol.failure);
}

void ch_miura(CaseReport& rep) {
  HydroPair z2 = make_hydro_pair({C(1)});
  auto dr = deformation_rep(z2, {C(-1, 24) * U(1)});
  PencilSeries target = z2_plus_rep(dr);
  auto ch = example_pencil("ch", 2);
  MiuraTransform t = MiuraTransform::identity(1);
  t.corrections[2] = {C(1, 16) * U(1, 2)};
  bool fwd = pencils_equal(pushforward_pair(ch, t, 2), target, 2);
  rep.add("pushforward of the ch pair under u -> u + (eps^2/16) u_xx equals z2 + rep(c=-u/24)",
          fwd);
  MiuraTransform ti = MiuraTransform::identity(1);
  ti.corrections[2] = {C(-1, 16) * U(1, 2)};
  bool bwd = pencils_equal(pushforward_pair(target, ti, 2), ch, 2);
  rep.add("inverse direction: z2 + rep maps back to the ch pair", bwd);
}

struct ChRecursionData {
  std::vector<RecursionStep> steps;
  ExprSeries flow_in_v;
};

ChRecursionData ch_recursion_core(CaseReport& rep) {
  ChRecursionData out;
  auto ch = example_pencil("ch", 2);
  out.steps = recursion(ch, LocalFunctional{1, U(1)},
                        [](int q) { return Rat(2, 2 * q + 1); }, 1, 2);
  const SeriesField& flow = out.steps[1].flow;
  std::vector<ExprSeries> vmap(1);
  vmap[0].trunc = 2;
  vmap[0].set(0, U(1));
  vmap[0].set(2, C(-1, 8) * U(1, 2));
  ExprSeries in_v;
  in_v.trunc = 2;
  for (const auto& [m, e] : flow.xi[0].parts) {
    ExprSeries s = subst_series(e, vmap, 2 - m);
    for (const auto& [m2, e2] : s.parts)
      in_v = es_add(in_v, ExprSeries{2, {{m + m2, e2}}});
  }
  out.flow_in_v = in_v;
  bool p0 = in_v.part(0) && *in_v.part(0) == U(1) * U(1, 1);
  bool p2 = in_v.part(2) &&
            *in_v.part(2) == C(-1, 12) * U(1, 1) * U(1, 2) + C(-1, 24) * U(1) * U(1, 3);
  bool p1 = in_v.part(1) == nullptr;
  rep.add("t^1 flow after u = v - (eps^2/8) v_xx equals the Camassa-Holm equation",
          p0 && p1 && p2, series_brief(in_v));
  // H_0 and H_1 are in involution with respect to both brackets
  bool involution = true;
  for (int a = 0; a < 2 && involution; ++a) {
    const BivectorSeries& w = a == 0 ? ch.first : ch.second;
    for (int ord = 0; ord <= 2 && involution; ++ord) {
      Expr density;
      for (const auto& [mw, part] : w.parts)
        for (const auto& [m1, h1] : out.steps[0].hamiltonian.density.parts)
          for (const auto& [m2, h2] : out.steps[1].hamiltonian.density.parts)
            if (mw + m1 + m2 == ord)
              density += bracket_functionals(part, {1, h1}, {1, h2}).density;
      if (!is_total_derivative(density)) involution = false;
    }
  }
  rep.add("H_0 and H_1 are in involution under both brackets", involution);
  return out;
}

struct TwoChData {
  std::vector<RecursionStep> steps;
};

// series substitution helper: applies an eps-series map to an eps-series of
// expressions
ExprSeries subst_into_series(const ExprSeries& s, const std::vector<ExprSeries>& map,
                             int trunc) {
  ExprSeries out;
  out.trunc = trunc;
  for (const auto& [m, e] : s.parts) {
    if (m > trunc) continue;
    ExprSeries sub = subst_series(e, map, trunc - m);
    for (const auto& [m2, e2] : sub.parts) out = es_add(out, ExprSeries{trunc, {{m + m2, e2}}});
  }
  return out;
}

TwoChData two_ch_recursion(CaseReport& rep, int trunc) {
  TwoChData out;
  auto pencil = example_pencil("nls-case2", trunc);
  out.steps = recursion(pencil, LocalFunctional{2, U(2)},
                        [](int q) { return Rat(1, q + 1); }, 2, trunc);
  // flow 0 is the x translation
  bool t0 = out.steps[0].flow.xi[0].part(0) && *out.steps[0].flow.xi[0].part(0) == U(1, 1) &&
            out.steps[0].flow.xi[1].part(0) && *out.steps[0].flow.xi[1].part(0) == U(2, 1);
  for (const auto& comp : out.steps[0].flow.xi)
    for (const auto& [m, e] : comp.parts)
      if (m > 0 && !e.is_zero()) t0 = false;
  rep.add("t^0 flow is the x translation", t0);

  // w1 = phi1 - eps phi1_x, w2 = phi2 + eps phi2_x
  std::vector<ExprSeries> phimap(2);
  phimap[0].trunc = phimap[1].trunc = trunc;
  phimap[0].set(0, U(1));
  phimap[0].set(1, -U(1, 1));
  phimap[1].set(0, U(2));
  phimap[1].set(1, U(2, 1));

  ExprSeries s1 = subst_into_series(out.steps[1].flow.xi[0], phimap, trunc);
  ExprSeries s2 = subst_into_series(out.steps[1].flow.xi[1], phimap, trunc);

  // (phi1 - eps phi1x)_t = (phi2 + phi1^2/2 - (eps/2) phi1 phi1x)_x
  ExprSeries d1;
  d1.trunc = trunc;
  d1.set(0, U(2) + C(1, 2) * U(1) * U(1));
  d1.set(1, C(-1, 2) * U(1) * U(1, 1));
  bool eq1 = es_is_zero(es_sub(s1, es_dx(d1)));
  rep.add("first flow component matches the 2-component CH form in phi variables", eq1,
          eq1 ? "" : series_brief(s1));
  // (phi2 + eps phi2x)_t = (phi1 phi2 + (eps/2) phi1 phi2x)_x
  ExprSeries d2;
  d2.trunc = trunc;
  d2.set(0, U(1) * U(2));
  d2.set(1, C(1, 2) * U(1) * U(2, 1));
  bool eq2 = es_is_zero(es_sub(s2, es_dx(d2)));
  rep.add("second flow component matches the 2-component CH form in phi variables", eq2,
          eq2 ? "" : series_brief(s2));

  // phi time derivatives: phi1_t = (1 - eps dx)^{-1} s1, phi2_t = (1 + eps dx)^{-1} s2
  auto op_inverse = [&](const ExprSeries& s, int sign) {
    ExprSeries acc;
    acc.trunc = trunc;
    for (int k = 0; k <= trunc; ++k) {
      ExprSeries term = s;
      for (int j = 0; j < k; ++j) term = es_dx(term);
      // shift by eps^k with sign^k
      ExprSeries shifted;
      shifted.trunc = trunc;
      for (const auto& [m, e] : term.parts)
        if (m + k <= trunc)
          shifted.parts.emplace(m + k, sign > 0 || k % 2 == 0 ? e : -e);
      acc = es_add(acc, shifted);
    }
    return acc;
  };
  ExprSeries phi1_t = op_inverse(s1, +1);   // (1 - eps dx)^{-1} = sum eps^k dx^k
  ExprSeries phi2_t = op_inverse(s2, -1);   // (1 + eps dx)^{-1} = sum (-eps)^k dx^k

  // v1 = phi1, v2 = phi2 + eps phi2x - (1/4)(phi1 - eps phi1x)^2
  ExprSeries v1 = es_const(U(1), trunc);
  ExprSeries w1phi;
  w1phi.trunc = trunc;
  w1phi.set(0, U(1));
  w1phi.set(1, -U(1, 1));
  ExprSeries v2;
  v2.trunc = trunc;
  v2.set(0, U(2));
  v2.set(1, U(2, 1));
  v2 = es_sub(v2, es_scale(es_mul(w1phi, w1phi), Rat(1, 4)));

  ExprSeries v1_t = phi1_t;
  // v2_t = (1 + eps dx) phi2_t - (1/2) w1(phi) (1 - eps dx) phi1_t
  auto eps_shift_dx = [&](const ExprSeries& s, int sign) {
    ExprSeries d = es_dx(s);
    ExprSeries shifted;
    shifted.trunc = trunc;
    for (const auto& [m, e] : d.parts)
      if (m + 1 <= trunc) shifted.parts.emplace(m + 1, sign > 0 ? e : -e);
    return es_add(s, shifted);
  };
  ExprSeries v2_t =
      es_sub(eps_shift_dx(phi2_t, +1),
             es_scale(es_mul(w1phi, eps_shift_dx(phi1_t, -1)), Rat(1, 2)));

  // z12-a: (v1 - eps^2 v1_xx)_t = (v2 + 3/4 v1^2 - eps^2 (1/2 v1 v1_xx + 1/4 v1_x^2))_x
  ExprSeries lhs_a = v1_t;
  {
    ExprSeries d2v = es_dx(es_dx(v1_t));
    ExprSeries shifted;
    shifted.trunc = trunc;
    for (const auto& [m, e] : d2v.parts)
      if (m + 2 <= trunc) shifted.parts.emplace(m + 2, -e);
    lhs_a = es_add(lhs_a, shifted);
  }
  ExprSeries v1x = es_dx(v1), v1xx = es_dx(es_dx(v1));
  ExprSeries rhs_density = es_add(v2, es_scale(es_mul(v1, v1), Rat(3, 4)));
  {
    ExprSeries corr = es_add(es_scale(es_mul(v1, v1xx), Rat(1, 2)),
                             es_scale(es_mul(v1x, v1x), Rat(1, 4)));
    ExprSeries shifted;
    shifted.trunc = trunc;
    for (const auto& [m, e] : corr.parts)
      if (m + 2 <= trunc) shifted.parts.emplace(m + 2, -e);
    rhs_density = es_add(rhs_density, shifted);
  }
  bool z12a = es_is_zero(es_sub(lhs_a, es_dx(rhs_density)));
  rep.add("flow in v variables satisfies the first 2-component CH equation", z12a);

  // z12-b: v2_t = 1/2 v1 v2_x + v2 v1_x
  ExprSeries rhs_b = es_add(es_scale(es_mul(v1, es_dx(v2)), Rat(1, 2)),
                            es_mul(v2, es_dx(v1)));
  bool z12b = es_is_zero(es_sub(v2_t, rhs_b));
  rep.add("flow in v variables satisfies the second 2-component CH equation", z12b);

  // v2 = 0 reduction with t -> (3/2) t and eps^2 -> eps^2/8 gives the CH equation
  {
    // abstract v-equation: set v2 jets to zero in z12-a, rescale, compare
    // against (v - eps^2/8 v_xx)_t = v v_x - eps^2/12 v_x v_xx - eps^2/24 v v_xxx.
    Expr v = U(1), vx = U(1, 1), vxx = U(1, 2), vxxx = U(1, 3);
    // reduced rhs density at v2 = 0: (3/4) v^2 - eps^2 (1/2 v v_xx + 1/4 v_x^2)
    // time rescaling multiplies the rhs by 2/3; eps^2 -> eps^2/8 scales the
    // eps^2 part by 1/8.
    Expr r0 = C(3, 4) * v * v * Rat(2, 3);
    Expr r2 = -(C(1, 2) * v * vxx + C(1, 4) * vx * vx) * Rat(2, 3) * Rat(1, 8);
    Expr rhs0 = total_derivative(r0);
    Expr rhs2 = total_derivative(r2);
    bool red = (rhs0 == v * vx) &&
               (rhs2 == C(-1, 12) * vx * vxx + C(-1, 24) * v * vxxx);
    // the lhs operator (v - eps^2 v_xx) becomes v - (eps^2/8) v_xx, matching
    // the CH normalization exactly
    rep.add("v2 = 0 reduction with the stated rescaling recovers the CH equation", red);
  }
  return out;
}

struct Case2Result {
  MiuraTransform printed;  // the closed-form corrections
  std::string direction;
  SolveResult solved;
  PencilSeries rep_w;
};

Case2Result case2_miura(CaseReport& rep) {
  Case2Result out;
  HydroPair upair = nls_canonical_pair();
  auto dr =
      deformation_rep(upair, {C(-1, 24) * U(1) * U(1), C(-1, 24) * U(2) * U(2)});
  PencilSeries rep_u;
  rep_u.first.trunc = rep_u.second.trunc = 2;
  rep_u.first.set(0, upair.w1);
  rep_u.second.set(0, upair.w2);
  rep_u.second.set(2, *dr.Q.part(2));

  NlsCoords co = canonical_coordinates_nls();
  MiuraTransform to_w = MiuraTransform::point_transform(co.w_of_u, co.u_of_w);
  out.rep_w = pushforward_pair(rep_u, to_w, 2);
  auto nls0 = example_pencil("nls0", 2);
  bool base_ok = series_is_zero(series_add(out.rep_w.first.truncated(0),
                                           series_neg(nls0.first.truncated(0)))) &&
                 series_is_zero(series_add(out.rep_w.second.truncated(0),
                                           series_neg(nls0.second.truncated(0))));
  rep.add("transported representative sits over the dispersionless 2-component pair",
          base_ok);

  auto z11 = example_pencil("nls-case2", 2);
  // the printed Miura corrections
  Expr ratio = (U(1) * U(1) + C(4) * U(2)) * (C(24) * U(2)).inverse();
  MiuraTransform printed = MiuraTransform::identity(2);
  printed.corrections[1] = {Expr(), total_derivative(C(1, 4) * U(1) * U(1) - U(2))};
  printed.corrections[2] = {total_derivative(ratio * U(1, 1)),
                            -total_derivative((ratio - C(1)) * U(2, 1))};
  out.printed = printed;
  bool fwd = pencils_equal(pushforward_pair(z11, printed, 2), out.rep_w, 2);
  bool bwd = false;
  if (!fwd) bwd = pencils_equal(pushforward_pair(out.rep_w, printed, 2), z11, 2);
  rep.add("printed Miura corrections map between z11 pair and the representative",
          fwd || bwd, fwd ? "direction: z11 -> representative" : (bwd ? "direction: representative -> z11" : "neither direction holds"));
  out.direction = fwd ? "z11->rep" : "rep->z11";

  AnsatzSpec spec;
  for (int a = 0; a <= 2; ++a)
    for (int b = -2; b <= 1; ++b) {
      if (a == 0 && b == 0) continue;
      spec.coeff_basis.push_back(U(1).pow(a) * U(2).pow(b));
    }
  auto sol = fwd ? solve_equivalence(z11, out.rep_w, spec, 2)
                 : solve_equivalence(out.rep_w, z11, spec, 2);
  bool verified = false;
  if (sol.found) {
    auto moved = fwd ? pushforward_pair(z11, sol.transform, 2)
                     : pushforward_pair(out.rep_w, sol.transform, 2);
    verified = pencils_equal(moved, fwd ? out.rep_w : z11, 2);
  }
  rep.add("solver finds the equivalence and it re-verifies by pushforward",
          sol.found && verified, sol.found ? "" : sol.failure);
  out.solved = sol;
  return out;
}

// ---------------------------------------------------------------------------
// golden files

Json field_series_to_json(const SeriesField& f) {
  Json arr = Json::array();
  for (const auto& c : f.xi) arr.push_back(series_to_json(c));
  return arr;
}

bool field_series_matches(const SeriesField& f, const Json& j) {
  if (!j.is_array() || j.size() != f.xi.size()) return false;
  for (std::size_t i = 0; i < f.xi.size(); ++i) {
    ExprSeries want = series_from_json(j[i]);
    if (!es_is_zero(es_sub(want, f.xi[i]))) return false;
  }
  return true;
}

void golden_compare(CaseReport& rep, const std::string& dir, bool regen,
                    const std::string& file, const Json& computed,
                    const std::function<bool(const Json&)>& matches) {
  namespace fs = std::filesystem;
  fs::path path = fs::path(dir) / file;
  if (regen) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << computed.dump(1) << "\n";
    rep.add("golden file " + file + " regenerated", true, path.string());
    return;
  }
  std::ifstream in(path);
  if (!in) {
    rep.add("golden comparison " + file, false, "missing golden file; run --regen-golden");
    return;
  }
  Json want;
  in >> want;
  rep.add("golden comparison " + file, matches(want));
}

}  // namespace

void CaseReport::add(const std::string& label, bool ok, const std::string& detail) {
  lines.push_back(CheckLine{label, ok, detail});
}

std::string CaseReport::to_string() const {
  std::ostringstream os;
  os << (pass() ? "[PASS] " : "[FAIL] ") << name;
  if (seconds > 0) os << "  (" << seconds << " s)";
  os << "\n";
  for (const auto& l : lines) {
    os << "    " << (l.pass ? "ok   " : "FAIL ") << l.label;
    if (!l.detail.empty()) os << "  -- " << l.detail;
    os << "\n";
  }
  return os.str();
}

std::string default_golden_dir() { return std::string(LOOPALG_DATA_DIR) + "/golden"; }

std::vector<std::string> verify_case_names() {
  return {"kdv", "ch", "nls-case1", "nls-case2", "ch-recursion", "2ch-recursion"};
}

CaseReport verify_case(const std::string& name, std::uint64_t seed) {
  (void)seed;  // sub-checks are deterministic; the seed feeds future extensions
  CaseReport rep;
  rep.name = "verify-paper --case " + name;
  auto t0 = std::chrono::steady_clock::now();
  if (name == "kdv") {
    check_compat(rep, "kdv", 2);
    kdv_correspondence(rep);
  } else if (name == "ch") {
    check_compat(rep, "ch", 2);
    ch_miura(rep);
    ch_recursion_core(rep);
  } else if (name == "nls-case1") {
    check_compat(rep, "nls-case1", 2);
  } else if (name == "nls-case2") {
    check_compat(rep, "nls-case2", 2);
    case2_miura(rep);
  } else if (name == "ch-recursion") {
    ch_recursion_core(rep);
  } else if (name == "2ch-recursion") {
    two_ch_recursion(rep, 3);
  } else {
    throw Error("unknown verify-paper case: " + name);
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::vector<CaseReport> run_acceptance(const AcceptanceOptions& opt) {
  std::string golden = opt.golden_dir.empty() ? default_golden_dir() : opt.golden_dir;
  std::vector<CaseReport> reports;
  auto want = [&](int id) {
    return opt.only.empty() ||
           std::find(opt.only.begin(), opt.only.end(), id) != opt.only.end();
  };
  auto run = [&](int id, const std::string& label, const std::function<void(CaseReport&)>& f) {
    if (!want(id)) return;
    CaseReport rep;
    rep.name = "criterion " + std::to_string(id) + ": " + label;
    auto t0 = std::chrono::steady_clock::now();
    try {
      f(rep);
    } catch (const std::exception& ex) {
      rep.add("unexpected exception", false, ex.what());
    }
    rep.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    reports.push_back(std::move(rep));
  };

  run(1, "dispersionless pencils are compatible at eps^0", [&](CaseReport& rep) {
    check_compat(rep, "kdv0", 0);
    check_compat(rep, "nls0", 0);
  });

  run(2, "deformed pencils are compatible at eps^2", [&](CaseReport& rep) {
    for (const char* name : {"kdv", "ch", "nls-case1", "nls-case2"}) check_compat(rep, name, 2);
  });

  run(3, "normal-form representative for symbolic c(u)", [&](CaseReport& rep) {
    HydroPair pair = make_hydro_pair({C(1)});
    Expr c = fn_app("c", {U(1)});
    auto dr = deformation_rep(pair, {c});  // internally cross-checks both routes
    rep.add("X = d2 I - d1 J agrees with the closed-form components", true);
    rep.add("X has differential-polynomial components",
            is_differential_polynomial(dr.X.xi[0]));
    Expr coeff = partial(dr.X.xi[0], JetVar{1, 2});
    bool match = coeff == Expr::from_rat(kCentralCoeffFactor) * pair.f[0] * c;
    rep.add("u_xx coefficient equals (3/2) f c", match,
            "the printed factor 2 f c is inconsistent with the closed form; (3/2) f c "
            "reproduces the KdV kernel for c = -1/24");
    PencilContext ctx = pair.context();
    LocalBivector d1x = d_of(ctx, 1, dr.X);
    rep.add("d2 d1 X = 0 exactly", schouten_bb(ctx.w2, d1x).is_zero());
    rep.add("d1 d1 X = 0 exactly", schouten_bb(ctx.w1, d1x).is_zero());
    auto back = extract_central(pair, dr.X);
    rep.add("central function round trip", back[0] == c);
  });

  run(4, "KdV correspondence for c = -1/24", kdv_correspondence);

  run(5, "Camassa-Holm Miura correspondence for c = -u/24", ch_miura);

  run(6, "Camassa-Holm recursion reproduces the CH flow", [&](CaseReport& rep) {
    auto data = ch_recursion_core(rep);
    golden_compare(rep, golden, opt.regen_golden, "ch_recursion.json",
                   Json{{"h0", series_to_json(data.steps[0].hamiltonian.density)},
                        {"h1", series_to_json(data.steps[1].hamiltonian.density)},
                        {"flow1", field_series_to_json(data.steps[1].flow)}},
                   [&](const Json& want) {
                     return es_is_zero(es_sub(series_from_json(want.at("h0")),
                                              data.steps[0].hamiltonian.density)) &&
                            es_is_zero(es_sub(series_from_json(want.at("h1")),
                                              data.steps[1].hamiltonian.density)) &&
                            field_series_matches(data.steps[1].flow, want.at("flow1"));
                   });
    // KdV flow golden (same machinery, different pencil)
    auto kdv = example_pencil("kdv", 2);
    auto steps = recursion(kdv, LocalFunctional{1, U(1)},
                           [](int q) { return Rat(2, 2 * q + 1); }, 1, 2);
    golden_compare(rep, golden, opt.regen_golden, "kdv_recursion.json",
                   Json{{"flow1", field_series_to_json(steps[1].flow)}},
                   [&](const Json& want) {
                     return field_series_matches(steps[1].flow, want.at("flow1"));
                   });
  });

  run(7, "2-component CH recursion and its v2 = 0 reduction", [&](CaseReport& rep) {
    auto data = two_ch_recursion(rep, 4);
    golden_compare(rep, golden, opt.regen_golden, "2ch_recursion.json",
                   Json{{"flow1", field_series_to_json(data.steps[1].flow)}},
                   [&](const Json& want) {
                     return field_series_matches(data.steps[1].flow, want.at("flow1"));
                   });
    // flows of the hierarchy commute pairwise (orders up to eps^2)
    auto flow_part = [](const SeriesField& f, int i, int m) {
      return f.xi[i].part(m) ? *f.xi[i].part(m) : Expr();
    };
    for (int p1 = 0; p1 <= 2; ++p1)
      for (int q1 = p1 + 1; q1 <= 2; ++q1) {
        bool commute = true;
        for (int m = 0; m <= 2 && commute; ++m) {
          EvoField acc(2);
          for (int m1 = 0; m1 <= m; ++m1) {
            EvoField a(2), b(2);
            for (int i = 0; i < 2; ++i) {
              a.xi[i] = flow_part(data.steps[p1].flow, i, m1);
              b.xi[i] = flow_part(data.steps[q1].flow, i, m - m1);
            }
            acc = acc + commutator(a, b);
          }
          if (!acc.is_zero()) commute = false;
        }
        rep.add("t^" + std::to_string(p1) + " and t^" + std::to_string(q1) +
                    " flows commute to eps^2",
                commute);
      }
  });

  run(8, "case-2 Miura equivalence", [&](CaseReport& rep) {
    auto data = case2_miura(rep);
    golden_compare(rep, golden, opt.regen_golden, "case2_transform.json",
                   transform_to_json(data.solved.transform), [&](const Json& want) {
                     MiuraTransform w = transform_from_json(want);
                     if (w.dim != data.solved.transform.dim) return false;
                     for (const auto& [k, fs] : w.corrections) {
                       auto it = data.solved.transform.corrections.find(k);
                       if (it == data.solved.transform.corrections.end()) return false;
                       for (std::size_t i = 0; i < fs.size(); ++i)
                         if (fs[i] != it->second[i]) return false;
                     }
                     return w.corrections.size() == data.solved.transform.corrections.size();
                   });
  });

  run(9, "randomized property suites", [&](CaseReport& rep) {
    const int cases = 50;
    for (const std::string suite : {"brackets", "varcalc", "pushforward", "oracle"}) {
      auto r = run_property_suite(suite, opt.seed + std::hash<std::string>{}(suite), cases);
      std::ostringstream os;
      os << r.checks << " checks over " << r.cases_run << " cases";
      if (!r.ok()) os << "; first failure: " << r.failures.front();
      rep.add("suite " + suite, r.ok(), os.str());
    }
  });

  run(10, "numerical Euler-operator cross-check", [&](CaseReport& rep) {
    auto r = run_property_suite("numeric", opt.seed + 104729, 20);
    std::ostringstream os;
    os << r.checks << " finite-difference comparisons at grid 256, tol 1e-6";
    if (!r.ok()) os << "; first failure: " << r.failures.front();
    rep.add("finite-difference gradients match euler()", r.ok(), os.str());
  });

  run(11, "negative controls", [&](CaseReport& rep) {
    // jet-dependent corruption of the kdv eps^2 kernel breaks the pencil
    auto kdv = example_pencil("kdv", 2);
    LocalBivector bad(1);
    bad.add_term(1, 1, 1, U(1, 1));
    bad.add_term(1, 1, 0, C(1, 2) * U(1, 2));
    kdv.second.parts[2] = bad;
    auto r = check_pencil(kdv.first, kdv.second, 2);
    rep.add("corrupted kdv kernel fails check_pencil", !r.compatible,
            "note: rescaling the delta''' coefficient alone (e.g. to 1/7) stays "
            "compatible, by the scaling freedom of the pencil");
    // distinct constant central functions are not solver-equivalent
    HydroPair z2 = make_hydro_pair({C(1)});
    auto pa = z2_plus_rep(deformation_rep(z2, {C(-1, 24)}));
    auto pb = z2_plus_rep(deformation_rep(z2, {C(-1, 12)}));
    AnsatzSpec spec;
    spec.coeff_basis = {U(1), U(1) * U(1)};
    auto sol = solve_equivalence(pa, pb, spec, 2);
    rep.add("c != c~ representatives are not trivialized (AnsatzExhausted)",
            !sol.found && sol.failure.find("AnsatzExhausted") == 0, sol.failure);
  });

  return reports;
}

}  // namespace loopalg

// Command-line interface: pencil compatibility checks, deformation
// representatives, paper-example verification and randomized property suites.
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "loopalg/json_io.hpp"
#include "loopalg/parse.hpp"
#include "loopalg/proptest.hpp"
#include "loopalg/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMath = 1;    // a mathematical check failed
constexpr int kExitSchema = 2;  // bad input / schema violation

std::uint64_t default_seed() {
  if (const char* env = std::getenv("LOOPALG_SEED"))
    return std::strtoull(env, nullptr, 10);
  return 1;
}

int cmd_check(const std::string& input, int order, const std::string& format) {
  loopalg::LoadedStructure s;
  try {
    s = loopalg::load_structure(input);
  } catch (const loopalg::SchemaError& ex) {
    std::cerr << "schema error: " << ex.what() << "\n";
    return kExitSchema;
  }
  auto rep = loopalg::check_pencil(s.pencil.first, s.pencil.second, order);
  if (format == "json") {
    loopalg::Json out;
    out["compatible"] = rep.compatible;
    out["antisymmetric"] = rep.antisym_ok;
    loopalg::Json entries = loopalg::Json::array();
    for (const auto& [label, m, bad] : rep.entries)
      entries.push_back({{"bracket", label}, {"eps", m}, {"zero", bad.empty()}, {"sample", bad}});
    out["brackets"] = entries;
    out["warnings"] = rep.warnings;
    std::cout << out.dump(1) << "\n";
  } else {
    std::cout << rep.to_string();
  }
  return rep.compatible ? kExitOk : kExitMath;
}

int cmd_deform(const std::string& input, const std::string& c_arg, const std::string& emit,
               const std::string& out_path) {
  loopalg::HydroPair pair;
  try {
    if (input == "kdv0") {
      pair = loopalg::make_hydro_pair({loopalg::Expr::from_int(1)});
    } else if (input == "nls0") {
      pair = loopalg::nls_canonical_pair();
    } else {
      std::ifstream in(input);
      if (!in) throw loopalg::SchemaError("cannot open " + input);
      loopalg::Json j;
      in >> j;
      if (j.value("type", "") != "pair_f")
        throw loopalg::SchemaError("deform needs a pair_f structure or a built-in pair name");
      std::vector<loopalg::Expr> f;
      for (const auto& fe : j.at("f")) f.push_back(loopalg::expr_from_json(fe));
      pair = loopalg::make_hydro_pair(f);
    }
  } catch (const loopalg::SchemaError& ex) {
    std::cerr << "schema error: " << ex.what() << "\n";
    return kExitSchema;
  }
  try {
    std::vector<loopalg::Expr> c = loopalg::parse_expr_list(c_arg);
    auto rep = loopalg::deformation_rep(pair, c);
    for (int i = 0; i < pair.n; ++i)
      std::cout << "X^" << (i + 1) << " = " << rep.X.xi[i].str() << "\n";
    auto back = loopalg::extract_central(pair, rep.X);
    bool roundtrip = true;
    for (int i = 0; i < pair.n; ++i) roundtrip = roundtrip && back[i] == c[i];
    std::cout << "central function round trip: " << (roundtrip ? "ok" : "FAILED") << "\n";
    loopalg::PencilContext ctx = pair.context();
    loopalg::LocalBivector d1x = d_of(ctx, 1, rep.X);
    bool cocycle = loopalg::schouten_bb(ctx.w2, d1x).is_zero();
    std::cout << "d2 d1 X = 0: " << (cocycle ? "ok" : "FAILED") << "\n";
    loopalg::Json doc;
    if (emit == "rep") {
      loopalg::Json xs = loopalg::Json::array();
      for (const auto& x : rep.X.xi) xs.push_back(loopalg::expr_to_json(x));
      doc = loopalg::Json{{"type", "deformation_rep"},
                          {"n", pair.n},
                          {"I", loopalg::expr_to_json(rep.I.density)},
                          {"J", loopalg::expr_to_json(rep.J.density)},
                          {"X", xs}};
    } else {
      loopalg::PencilSeries p;
      p.first.trunc = p.second.trunc = 2;
      p.first.set(0, pair.w1);
      p.second.set(0, pair.w2);
      if (const auto* q2 = rep.Q.part(2)) p.second.set(2, *q2);
      doc = loopalg::pencil_to_json(p, pair.n);
    }
    if (out_path.empty()) {
      std::cout << doc.dump(1) << "\n";
    } else {
      std::ofstream out(out_path);
      out << doc.dump(1) << "\n";
      std::cout << "wrote " << out_path << "\n";
    }
    if (!roundtrip || !cocycle) return kExitMath;
    return kExitOk;
  } catch (const loopalg::SchemaError& ex) {
    std::cerr << "schema error: " << ex.what() << "\n";
    return kExitSchema;
  } catch (const loopalg::Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitMath;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact calculus for semisimple bihamiltonian structures on formal loop spaces"};
  app.require_subcommand(1);

  // check
  std::string check_input, check_format = "text";
  int check_order = 2;
  auto* check = app.add_subcommand("check", "verify pencil compatibility of a structure");
  check->add_option("structure", check_input,
                    "structure file or built-in name (kdv0, kdv, ch, nls0, nls-case1, nls-case2)")
      ->required();
  check->add_option("--order", check_order, "epsilon order to verify to");
  check->add_option("--format", check_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  // deform
  std::string deform_input, deform_c, deform_emit = "rep", deform_out;
  auto* deform =
      app.add_subcommand("deform", "build the quasitrivial deformation representative");
  deform->add_option("pair", deform_input, "pair name (kdv0, nls0) or pair_f file")->required();
  deform->add_option("--c", deform_c, "comma-separated central functions c_i(u^i)")->required();
  deform->add_option("--emit", deform_emit, "rep or bivector")
      ->check(CLI::IsMember({"rep", "bivector"}));
  deform->add_option("--out", deform_out, "output file (stdout when omitted)");

  // verify-paper
  std::string vp_case;
  std::uint64_t vp_seed = default_seed();
  auto* vp = app.add_subcommand("verify-paper", "run a named verification pipeline");
  vp->add_option("--case", vp_case, "one of kdv, ch, nls-case1, nls-case2, ch-recursion, 2ch-recursion")
      ->required();
  vp->add_option("--seed", vp_seed, "seed for randomized sub-checks");

  // proptest
  std::string pt_suite = "all";
  std::uint64_t pt_seed = default_seed();
  int pt_cases = 50;
  auto* pt = app.add_subcommand("proptest", "run randomized property suites");
  pt->add_option("--suite", pt_suite, "brackets, varcalc, pushforward, oracle, numeric or all");
  pt->add_option("--seed", pt_seed, "RNG seed");
  pt->add_option("--cases", pt_cases, "cases per property suite");

  // acceptance
  std::uint64_t acc_seed = default_seed();
  bool acc_regen = false;
  std::string acc_golden;
  std::vector<int> acc_only;
  auto* acc = app.add_subcommand("acceptance", "run the full acceptance suite");
  acc->add_option("--seed", acc_seed, "seed for randomized criteria");
  acc->add_option("--criterion", acc_only, "run only these criterion ids");
  acc->add_option("--golden-dir", acc_golden, "directory holding golden files");
  acc->add_flag("--regen-golden", acc_regen, "regenerate golden files instead of comparing");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return cmd_check(check_input, check_order, check_format);
    if (deform->parsed()) return cmd_deform(deform_input, deform_c, deform_emit, deform_out);
    if (vp->parsed()) {
      auto rep = loopalg::verify_case(vp_case, vp_seed);
      std::cout << rep.to_string();
      return rep.pass() ? kExitOk : kExitMath;
    }
    if (pt->parsed()) {
      std::vector<std::string> suites;
      if (pt_suite == "all")
        suites = loopalg::property_suite_names();
      else
        suites.push_back(pt_suite);
      bool ok = true;
      for (const auto& s : suites) {
        auto r = loopalg::run_property_suite(s, pt_seed, pt_cases);
        std::cout << "[" << (r.ok() ? "PASS" : "FAIL") << "] suite " << s << ": " << r.checks
                  << " checks over " << r.cases_run << " cases\n";
        for (const auto& f : r.failures) std::cout << "    " << f << "\n";
        ok = ok && r.ok();
      }
      return ok ? kExitOk : kExitMath;
    }
    if (acc->parsed()) {
      loopalg::AcceptanceOptions opt;
      opt.seed = acc_seed;
      opt.regen_golden = acc_regen;
      opt.golden_dir = acc_golden;
      opt.only = acc_only;
      auto reports = loopalg::run_acceptance(opt);
      bool ok = true;
      for (const auto& rep : reports) {
        std::cout << rep.to_string();
        ok = ok && rep.pass();
      }
      return ok ? kExitOk : kExitMath;
    }
  } catch (const loopalg::SchemaError& ex) {
    std::cerr << "schema error: " << ex.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitMath;
  }
  return kExitSchema;
}

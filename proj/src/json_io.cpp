#include "loopalg/json_io.hpp"

#include <fstream>

#include "loopalg/structures.hpp"

namespace loopalg {

namespace {

Json atom_to_json(const AtomPtr& ap) {
  const Atom& a = *ap;
  switch (a.kind) {
    case AtomKind::Jet:
      return Json{{"jet", Json::array({a.jet.coord, a.jet.order})}};
    case AtomKind::Root: {
      Json mp = Json::array();
      for (const auto& c : a.minpoly) mp.push_back(rat_to_string(c));
      return Json{{"root", Json{{"name", a.name}, {"minpoly", mp}}}};
    }
    case AtomKind::Fn: {
      Json args = Json::array();
      for (const auto& arg : a.args) args.push_back(expr_to_json(arg));
      Json derivs = Json::array();
      for (int d : a.derivs) derivs.push_back(d);
      return Json{{"fn", a.name}, {"args", args}, {"derivs", derivs}};
    }
    case AtomKind::Inv:
      return expr_to_json(a.base);
  }
  return Json();
}

Json mono_to_json(const Mono& m) {
  Json args = Json::array();
  args.push_back(rat_to_string(m.coeff));
  for (const auto& f : m.factors) {
    Json a = atom_to_json(f.atom);
    if (f.pow == 1)
      args.push_back(a);
    else
      args.push_back(Json{{"op", "^"}, {"args", Json::array({a, f.pow})}});
  }
  if (args.size() == 1) return args[0];
  return Json{{"op", "*"}, {"args", args}};
}

}  // namespace

Json expr_to_json(const Expr& e) {
  if (e.is_zero()) return "0";
  const auto& ms = e.monomials();
  if (ms.size() == 1) return mono_to_json(ms[0]);
  Json args = Json::array();
  for (const auto& m : ms) args.push_back(mono_to_json(m));
  return Json{{"op", "+"}, {"args", args}};
}

Expr expr_from_json(const Json& j) {
  try {
    if (j.is_string()) return Expr::from_rat(rat_from_string(j.get<std::string>()));
    if (j.is_number_integer()) return Expr::from_int(j.get<long>());
    if (!j.is_object()) throw SchemaError("expression node must be a string or object");
    if (j.contains("jet")) {
      const auto& a = j.at("jet");
      if (!a.is_array() || a.size() != 2) throw SchemaError("jet needs [coord, order]");
      int coord = a[0].get<int>(), order = a[1].get<int>();
      if (coord < 1 || order < 0) throw SchemaError("jet indices out of range");
      return Expr::jet(coord, order);
    }
    if (j.contains("root")) {
      const auto& r = j.at("root");
      std::vector<Rat> mp;
      for (const auto& c : r.at("minpoly")) mp.push_back(rat_from_string(c.get<std::string>()));
      return Expr::atom_pow(make_root_atom(r.at("name").get<std::string>(), mp), 1);
    }
    if (j.contains("fn")) {
      std::vector<Expr> args;
      for (const auto& a : j.at("args")) args.push_back(expr_from_json(a));
      std::vector<int> derivs;
      if (j.contains("derivs"))
        for (const auto& d : j.at("derivs")) derivs.push_back(d.get<int>());
      return fn_app(j.at("fn").get<std::string>(), args, derivs);
    }
    if (j.contains("op")) {
      std::string op = j.at("op").get<std::string>();
      const auto& args = j.at("args");
      if (op == "+") {
        Expr acc;
        for (const auto& a : args) acc += expr_from_json(a);
        return acc;
      }
      if (op == "*") {
        Expr acc = Expr::from_int(1);
        for (const auto& a : args) acc *= expr_from_json(a);
        return acc;
      }
      if (op == "-") {
        if (args.size() == 1) return -expr_from_json(args[0]);
        if (args.size() == 2) return expr_from_json(args[0]) - expr_from_json(args[1]);
        throw SchemaError("'-' takes one or two arguments");
      }
      if (op == "/") {
        if (args.size() != 2) throw SchemaError("'/' takes two arguments");
        return expr_from_json(args[0]) * expr_from_json(args[1]).inverse();
      }
      if (op == "^") {
        if (args.size() != 2 || !args[1].is_number_integer())
          throw SchemaError("'^' takes a base and an integer");
        return expr_from_json(args[0]).pow(args[1].get<int>());
      }
      throw SchemaError("unknown operator " + op);
    }
    throw SchemaError("unrecognized expression node: " + j.dump());
  } catch (const Json::exception& ex) {
    throw SchemaError(std::string("malformed expression document: ") + ex.what());
  }
}

Json series_to_json(const ExprSeries& s) {
  Json parts = Json::object();
  for (const auto& [m, e] : s.parts)
    if (!e.is_zero()) parts[std::to_string(m)] = expr_to_json(e);
  return Json{{"trunc", s.trunc}, {"parts", parts}};
}

ExprSeries series_from_json(const Json& j) {
  ExprSeries s;
  try {
    s.trunc = j.at("trunc").get<int>();
    for (const auto& [key, val] : j.at("parts").items())
      s.parts.emplace(std::stoi(key), expr_from_json(val));
  } catch (const Json::exception& ex) {
    throw SchemaError(std::string("malformed series document: ") + ex.what());
  }
  return s;
}

namespace {

Json bivector_series_to_json(const BivectorSeries& s, int n, int a) {
  Json comps = Json::object();
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      Json terms = Json::array();
      for (const auto& [m, part] : s.parts)
        for (const auto& [k, coeff] : part.row(i, j))
          terms.push_back(
              Json{{"k", k}, {"eps", m}, {"coeff", expr_to_json(coeff)}});
      if (!terms.empty()) comps[std::to_string(i) + "," + std::to_string(j)] = terms;
    }
  return Json{{"a", a}, {"components", comps}};
}

BivectorSeries bivector_series_from_json(const Json& j, int n, int trunc) {
  BivectorSeries s;
  s.trunc = trunc;
  for (const auto& [key, terms] : j.at("components").items()) {
    auto comma = key.find(',');
    if (comma == std::string::npos) throw SchemaError("component key must be \"i,j\"");
    int i = std::stoi(key.substr(0, comma));
    int jj = std::stoi(key.substr(comma + 1));
    if (i < 1 || i > n || jj < 1 || jj > n) throw SchemaError("component index out of range");
    for (const auto& t : terms) {
      int k = t.at("k").get<int>();
      int eps = t.contains("eps") ? t.at("eps").get<int>() : 0;
      if (k < 0 || eps < 0) throw SchemaError("negative kernel indices");
      Expr coeff = expr_from_json(t.at("coeff"));
      auto it = s.parts.find(eps);
      if (it == s.parts.end()) it = s.parts.emplace(eps, LocalBivector(n)).first;
      it->second.add_term(i, jj, k, coeff);
    }
  }
  return s;
}

}  // namespace

Json pencil_to_json(const PencilSeries& p, int n) {
  int trunc = std::max(p.first.trunc, p.second.trunc);
  return Json{{"type", "pencil"},
              {"n", n},
              {"truncation", trunc},
              {"brackets", Json::array({bivector_series_to_json(p.first, n, 1),
                                        bivector_series_to_json(p.second, n, 2)})}};
}

LoadedStructure structure_from_json(const Json& j) {
  try {
    std::string type = j.at("type").get<std::string>();
    if (type == "pair_f") {
      int n = j.at("n").get<int>();
      std::vector<Expr> f;
      for (const auto& fe : j.at("f")) f.push_back(expr_from_json(fe));
      if (static_cast<int>(f.size()) != n) throw SchemaError("f-data length != n");
      HydroPair pair = make_hydro_pair(f);
      LoadedStructure out;
      out.n = n;
      out.pencil.first.trunc = out.pencil.second.trunc = 0;
      out.pencil.first.set(0, pair.w1);
      out.pencil.second.set(0, pair.w2);
      return out;
    }
    if (type == "pencil") {
      int n = j.at("n").get<int>();
      if (n < 1) throw SchemaError("n must be >= 1");
      int trunc = j.at("truncation").get<int>();
      LoadedStructure out;
      out.n = n;
      bool have1 = false, have2 = false;
      for (const auto& b : j.at("brackets")) {
        int a = b.at("a").get<int>();
        if (a == 1) {
          out.pencil.first = bivector_series_from_json(b, n, trunc);
          have1 = true;
        } else if (a == 2) {
          out.pencil.second = bivector_series_from_json(b, n, trunc);
          have2 = true;
        } else {
          throw SchemaError("bracket index must be 1 or 2");
        }
      }
      if (!have1 || !have2) throw SchemaError("both brackets (a=1, a=2) are required");
      return out;
    }
    throw SchemaError("unknown structure type " + type);
  } catch (const Json::exception& ex) {
    throw SchemaError(std::string("malformed structure document: ") + ex.what());
  }
}

LoadedStructure load_structure(const std::string& path_or_name) {
  for (const auto& name : example_names())
    if (name == path_or_name) {
      LoadedStructure out;
      out.pencil = example_pencil(name);
      out.n = out.pencil.first.parts.begin()->second.n();
      return out;
    }
  std::ifstream in(path_or_name);
  if (!in) throw SchemaError("cannot open structure file " + path_or_name);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& ex) {
    throw SchemaError(std::string("invalid JSON: ") + ex.what());
  }
  return structure_from_json(j);
}

Json transform_to_json(const MiuraTransform& t) {
  Json point = Json::array(), pinv = Json::array();
  for (const auto& e : t.point) point.push_back(expr_to_json(e));
  for (const auto& e : t.point_inverse) pinv.push_back(expr_to_json(e));
  Json corr = Json::object();
  for (const auto& [k, fs] : t.corrections) {
    Json arr = Json::array();
    for (const auto& e : fs) arr.push_back(expr_to_json(e));
    corr[std::to_string(k)] = arr;
  }
  return Json{{"dim", t.dim},
              {"point", point},
              {"point_inverse", pinv},
              {"corrections", corr},
              {"quasi", t.quasi}};
}

MiuraTransform transform_from_json(const Json& j) {
  MiuraTransform t;
  try {
    t.dim = j.at("dim").get<int>();
    for (const auto& e : j.at("point")) t.point.push_back(expr_from_json(e));
    for (const auto& e : j.at("point_inverse")) t.point_inverse.push_back(expr_from_json(e));
    for (const auto& [k, arr] : j.at("corrections").items()) {
      std::vector<Expr> fs;
      for (const auto& e : arr) fs.push_back(expr_from_json(e));
      t.corrections.emplace(std::stoi(k), std::move(fs));
    }
    t.quasi = j.value("quasi", false);
  } catch (const Json::exception& ex) {
    throw SchemaError(std::string("malformed transform document: ") + ex.what());
  }
  return t;
}

}  // namespace loopalg

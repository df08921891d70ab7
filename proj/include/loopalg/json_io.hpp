#ifndef LOOPALG_JSON_IO_HPP
#define LOOPALG_JSON_IO_HPP

#include <string>

#include "json.hpp"
#include "loopalg/equiv.hpp"
#include "loopalg/multivec.hpp"

namespace loopalg {

using Json = nlohmann::json;

// ExprDoc: rationals as strings ("3/8"), jets as {"jet":[i,s]}, opaque
// applications as {"fn":...,"args":[...],"derivs":[...]}, named roots as
// {"root":{"name":...,"minpoly":[...]}}, sums/products/powers as
// {"op":...,"args":[...]}.
Json expr_to_json(const Expr& e);
Expr expr_from_json(const Json& j);  // throws SchemaError

Json series_to_json(const ExprSeries& s);
ExprSeries series_from_json(const Json& j);

// StructureDoc: either f-data {"type":"pair_f","n":...,"f":[...]} or explicit
// kernels {"type":"pencil","n":...,"truncation":...,"brackets":[...]}.
Json pencil_to_json(const PencilSeries& p, int n);

struct LoadedStructure {
  int n = 1;
  PencilSeries pencil;
};
LoadedStructure structure_from_json(const Json& j);  // throws SchemaError
LoadedStructure load_structure(const std::string& path_or_name);

Json transform_to_json(const MiuraTransform& t);
MiuraTransform transform_from_json(const Json& j);

}  // namespace loopalg

#endif

#ifndef LOOPALG_PARSE_HPP
#define LOOPALG_PARSE_HPP

#include <string>
#include <vector>

#include "loopalg/expr.hpp"

namespace loopalg {

// Small infix parser for command-line expressions.
//
// grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := atom ('^' int)?
//   atom   := rational | jet | name '(' expr (',' expr)* ')' | '(' expr ')'
//             | '-' factor
//   jet    := ('u'|'w') digits ('x' digits? | 'x'{1..3})?
//
// Throws SchemaError on malformed input.
Expr parse_expr(const std::string& src);

// Comma-separated list of expressions (used by --c).
std::vector<Expr> parse_expr_list(const std::string& src);

}  // namespace loopalg

#endif

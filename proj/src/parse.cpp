#include "loopalg/parse.hpp"

#include <cctype>

namespace loopalg {

namespace {

struct Parser {
  const std::string& s;
  std::size_t pos = 0;

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  char peek() {
    skip();
    return pos < s.size() ? s[pos] : '\0';
  }
  [[noreturn]] void fail(const std::string& what) {
    throw SchemaError("parse error at position " + std::to_string(pos) + ": " + what +
                      " in \"" + s + "\"");
  }

  long integer() {
    skip();
    bool neg = eat('-');
    if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected integer");
    long v = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
      v = v * 10 + (s[pos++] - '0');
    return neg ? -v : v;
  }

  Expr expr() {
    Expr acc = term();
    while (true) {
      if (eat('+'))
        acc += term();
      else if (eat('-'))
        acc -= term();
      else
        return acc;
    }
  }

  Expr term() {
    Expr acc = factor();
    while (true) {
      if (eat('*'))
        acc *= factor();
      else if (eat('/'))
        acc *= factor().inverse();
      else
        return acc;
    }
  }

  Expr factor() {
    Expr base = atom();
    if (eat('^')) return base.pow(static_cast<int>(integer()));
    return base;
  }

  Expr atom() {
    skip();
    if (eat('-')) return -factor();
    if (eat('(')) {
      Expr e = expr();
      if (!eat(')')) fail("expected )");
      return e;
    }
    char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      long v = integer();
      return Expr::from_int(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected character");
  }

  Expr identifier() {
    std::size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    std::string name = s.substr(start, pos - start);
    if (peek() == '(') {
      eat('(');
      std::vector<Expr> args{expr()};
      while (eat(',')) args.push_back(expr());
      if (!eat(')')) fail("expected ) after arguments");
      if (name == "sqrt" && args.size() == 1) return sqrt_of(args[0]);
      if (name == "log" && args.size() == 1) return log_of(args[0]);
      return fn_app(name, args);
    }
    // jet variable: u1, w2, u1x, u1xx, u1xxx, u1x4
    if ((name[0] == 'u' || name[0] == 'w') && name.size() >= 2 &&
        std::isdigit(static_cast<unsigned char>(name[1]))) {
      std::size_t i = 1;
      int coord = 0;
      while (i < name.size() && std::isdigit(static_cast<unsigned char>(name[i])))
        coord = coord * 10 + (name[i++] - '0');
      int order = 0;
      if (i < name.size()) {
        if (name[i] != 'x') fail("bad jet suffix in " + name);
        ++i;
        if (i == name.size()) {
          order = 1;
        } else if (std::isdigit(static_cast<unsigned char>(name[i]))) {
          while (i < name.size() && std::isdigit(static_cast<unsigned char>(name[i])))
            order = order * 10 + (name[i++] - '0');
        } else {
          order = 1;
          while (i < name.size() && name[i] == 'x') {
            ++order;
            ++i;
          }
        }
        if (i != name.size()) fail("bad jet suffix in " + name);
      }
      if (coord < 1) fail("coordinate index must be >= 1");
      return Expr::jet(coord, order);
    }
    fail("unknown identifier " + name);
  }
};

}  // namespace

Expr parse_expr(const std::string& src) {
  Parser p{src};
  Expr e = p.expr();
  p.skip();
  if (p.pos != src.size()) p.fail("trailing input");
  return e;
}

std::vector<Expr> parse_expr_list(const std::string& src) {
  std::vector<Expr> out;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i <= src.size(); ++i) {
    if (i == src.size() || (src[i] == ',' && depth == 0)) {
      out.push_back(parse_expr(src.substr(start, i - start)));
      start = i + 1;
    } else if (src[i] == '(') {
      ++depth;
    } else if (src[i] == ')') {
      --depth;
    }
  }
  return out;
}

}  // namespace loopalg

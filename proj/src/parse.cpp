#include "usl/parse.h"

#include <cctype>
#include <sstream>

namespace usl {

namespace {

struct token {
  enum class kind_t { ident, number, punct, end };
  kind_t kind = kind_t::end;
  std::string text;
  integer number;
  int line = 1, column = 1;
};

struct lexer {
  const std::string& src;
  size_t pos = 0;
  int line = 1, column = 1;
  token current;

  explicit lexer(const std::string& s) : src(s) { advance(); }

  void bump(char c) {
    ++pos;
    if (c == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }

  void skip_space() {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '#') {
        while (pos < src.size() && src[pos] != '\n') bump(src[pos]);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump(c);
      } else {
        break;
      }
    }
  }

  void advance() {
    skip_space();
    current = token{};
    current.line = line;
    current.column = column;
    if (pos >= src.size()) {
      current.kind = token::kind_t::end;
      return;
    }
    char c = src[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
        digits += src[pos];
        bump(src[pos]);
      }
      current.kind = token::kind_t::number;
      current.number = integer(digits);
      current.text = digits;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string name;
      while (pos < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) {
        name += src[pos];
        bump(src[pos]);
      }
      current.kind = token::kind_t::ident;
      current.text = std::move(name);
      return;
    }
    // Multi-character punctuation first.
    auto two = [&](const char* p) {
      return pos + 1 < src.size() && src[pos] == p[0] && src[pos + 1] == p[1];
    };
    for (const char* p : {"<-", "==", "&&", "||"}) {
      if (two(p)) {
        current.kind = token::kind_t::punct;
        current.text = p;
        bump(src[pos]);
        bump(src[pos]);
        return;
      }
    }
    static const std::string singles = "()[]{},;=<>+-*/%!.";
    if (singles.find(c) != std::string::npos) {
      current.kind = token::kind_t::punct;
      current.text = std::string(1, c);
      bump(c);
      return;
    }
    throw parse_error(std::string("unexpected character '") + c + "'", line, column);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw parse_error(msg, current.line, current.column);
  }

  bool is_punct(const char* p) const {
    return current.kind == token::kind_t::punct && current.text == p;
  }
  bool is_ident(const char* p) const {
    return current.kind == token::kind_t::ident && current.text == p;
  }

  bool eat_punct(const char* p) {
    if (!is_punct(p)) return false;
    advance();
    return true;
  }

  void expect_punct(const char* p) {
    if (!eat_punct(p)) fail(std::string("expected '") + p + "'");
  }

  std::string expect_ident() {
    if (current.kind != token::kind_t::ident) fail("expected a name");
    std::string out = current.text;
    advance();
    return out;
  }

  bool eat_ident(const char* p) {
    if (!is_ident(p)) return false;
    advance();
    return true;
  }
};

struct expr_parser {
  lexer& lx;

  expr parse() { return parse_or(); }

  expr parse_or() {
    expr e = parse_and();
    while (lx.eat_punct("||")) e = e || parse_and();
    return e;
  }

  expr parse_and() {
    expr e = parse_cmp();
    while (lx.eat_punct("&&")) e = e && parse_cmp();
    return e;
  }

  expr parse_cmp() {
    expr e = parse_add();
    while (true) {
      if (lx.eat_punct("<")) {
        e = e < parse_add();
      } else if (lx.eat_punct(">")) {
        e = e > parse_add();
      } else if (lx.eat_punct("==")) {
        e = equals(e, parse_add());
      } else {
        return e;
      }
    }
  }

  expr parse_add() {
    expr e = parse_mul();
    while (true) {
      if (lx.eat_punct("+")) {
        e = e + parse_mul();
      } else if (lx.eat_punct("-")) {
        e = e - parse_mul();
      } else {
        return e;
      }
    }
  }

  expr parse_mul() {
    expr e = parse_unary();
    while (true) {
      if (lx.eat_punct("*")) {
        e = e * parse_unary();
      } else if (lx.eat_punct("/")) {
        e = e / parse_unary();
      } else if (lx.eat_punct("%")) {
        e = e % parse_unary();
      } else {
        return e;
      }
    }
  }

  expr parse_unary() {
    if (lx.eat_punct("!")) return logic_not(parse_unary());
    if (lx.eat_punct("-")) {
      expr e = parse_unary();
      if (e.is_const()) return expr::constant(-e.const_value());
      return expr::constant(0) - e;
    }
    return parse_primary();
  }

  std::vector<expr> call_args(size_t arity, const char* what) {
    lx.expect_punct("(");
    std::vector<expr> args;
    if (!lx.is_punct(")")) {
      args.push_back(parse());
      while (lx.eat_punct(",")) args.push_back(parse());
    }
    lx.expect_punct(")");
    if (args.size() != arity) lx.fail(std::string(what) + " takes " + std::to_string(arity) +
                                      " arguments");
    return args;
  }

  expr parse_primary() {
    if (lx.current.kind == token::kind_t::number) {
      integer n = lx.current.number;
      lx.advance();
      return expr::constant(std::move(n));
    }
    if (lx.eat_punct("(")) {
      expr e = parse();
      lx.expect_punct(")");
      return e;
    }
    if (lx.current.kind != token::kind_t::ident) lx.fail("expected an expression");
    if (lx.is_ident("select")) {
      lx.advance();
      std::vector<expr> args = call_args(3, "select");
      return expr::make_op(op_kind::select, std::move(args));
    }
    if (lx.is_ident("min") || lx.is_ident("max")) {
      op_kind op = lx.is_ident("min") ? op_kind::min : op_kind::max;
      lx.advance();
      std::vector<expr> args = call_args(2, "min/max");
      return expr::make_op(op, std::move(args));
    }
    std::string name = lx.expect_ident();
    if (lx.eat_punct("[")) {
      std::vector<expr> idx;
      if (!lx.is_punct("]")) {
        idx.push_back(parse());
        while (lx.eat_punct(",")) idx.push_back(parse());
      }
      lx.expect_punct("]");
      return expr::access(std::move(name), std::nullopt, std::nullopt, std::move(idx));
    }
    return expr::variable(std::move(name));
  }
};

interval parse_interval(lexer& lx) {
  expr_parser ep{lx};
  lx.expect_punct("(");
  expr mn = ep.parse();
  lx.expect_punct(",");
  expr ln = ep.parse();
  lx.expect_punct(")");
  return {std::move(mn), std::move(ln)};
}

stage parse_stage(lexer& lx, const std::vector<std::string>& vars) {
  if (lx.is_ident("rdom")) {
    lx.advance();
    stage s;
    lx.expect_punct("(");
    while (!lx.is_punct(")")) {
      std::string rv = lx.expect_ident();
      lx.expect_punct("=");
      s.rdom.emplace_back(std::move(rv), parse_interval(lx));
      if (!lx.eat_punct(",")) break;
    }
    lx.expect_punct(")");
    if (!lx.eat_ident("in")) lx.fail("expected 'in' after rdom");
    lx.expect_punct("(");
    expr_parser ep{lx};
    if (!lx.is_punct(")")) {
      s.lhs.push_back(ep.parse());
      while (lx.eat_punct(",")) s.lhs.push_back(ep.parse());
    }
    lx.expect_punct(")");
    lx.expect_punct("<-");
    s.rhs = ep.parse();
    if (lx.eat_ident("if")) {
      s.predicate = ep.parse();
    } else {
      s.predicate = expr::constant(1);
    }
    return s;
  }
  expr_parser ep{lx};
  return func_def::pure_stage(vars, ep.parse());
}

func_def parse_func(lexer& lx) {
  func_def f;
  if (!lx.eat_ident("fun")) lx.fail("expected 'fun'");
  f.name = lx.expect_ident();
  lx.expect_punct("(");
  while (!lx.is_punct(")")) {
    f.vars.push_back(lx.expect_ident());
    if (!lx.eat_punct(",")) break;
  }
  lx.expect_punct(")");
  lx.expect_punct("=");
  lx.expect_punct("{");
  f.stages.push_back(parse_stage(lx, f.vars));
  while (lx.eat_punct(";")) {
    if (lx.is_punct("}")) break;  // trailing separator
    f.stages.push_back(parse_stage(lx, f.vars));
  }
  lx.expect_punct("}");
  return f;
}

}  // namespace

pipeline parse_pipeline(const std::string& text) {
  lexer lx(text);
  pipeline p;
  if (!lx.eat_ident("pipeline")) lx.fail("expected 'pipeline'");
  p.output = lx.expect_ident();
  lx.expect_punct("(");
  while (!lx.is_punct(")")) {
    p.params.push_back(lx.expect_ident());
    if (!lx.eat_punct(",")) break;
  }
  lx.expect_punct(")");
  lx.expect_punct("{");
  while (!lx.is_punct("}")) {
    p.funcs.push_back(parse_func(lx));
    lx.eat_punct(";");
  }
  lx.expect_punct("}");
  if (lx.current.kind != token::kind_t::end) lx.fail("trailing input after pipeline");
  return p;
}

namespace {

// func[.z<i>][.s<j>].var
loop_name parse_loop_name(lexer& lx) {
  loop_name ln;
  std::vector<std::string> parts;
  parts.push_back(lx.expect_ident());
  while (lx.eat_punct(".")) parts.push_back(lx.expect_ident());
  if (parts.size() < 2) lx.fail("loop names are func.var");
  ln.func = parts.front();
  ln.var = parts.back();
  auto tagged = [](const std::string& s, char tag, int& out) {
    if (s.size() < 2 || s[0] != tag) return false;
    for (size_t i = 1; i < s.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    out = std::stoi(s.substr(1));
    return true;
  };
  size_t i = 1;
  int idx = 0;
  if (i + 1 < parts.size() && tagged(parts[i], 'z', idx)) {
    ln.spec = idx;
    ++i;
  }
  if (i + 1 < parts.size() && tagged(parts[i], 's', idx)) {
    ln.stage = idx;
    ++i;
  }
  if (i + 1 != parts.size()) lx.fail("malformed loop name");
  return ln;
}

directive parse_directive(lexer& lx) {
  std::string name = lx.expect_ident();
  // Hyphenated directive names.
  if (lx.is_punct("-") && (name == "compute" || name == "store" || name == "bound" ||
                           name == "align")) {
    lx.advance();
    name += "-" + lx.expect_ident();
  }
  expr_parser ep{lx};
  lx.expect_punct("(");
  directive d;
  if (name == "specialize") {
    std::string func = lx.expect_ident();
    std::vector<expr> conds;
    while (lx.eat_punct(",")) conds.push_back(ep.parse());
    d = directive::specialize(std::move(func), std::move(conds));
  } else if (name == "split") {
    loop_name ln = parse_loop_name(lx);
    lx.expect_punct(",");
    std::string outer = lx.expect_ident();
    lx.expect_punct(",");
    std::string inner = lx.expect_ident();
    lx.expect_punct(",");
    expr factor = ep.parse();
    split_strategy strategy = split_strategy::guard;
    if (lx.eat_punct(",")) {
      std::string s = lx.expect_ident();
      if (s == "guard") {
        strategy = split_strategy::guard;
      } else if (s == "shift") {
        strategy = split_strategy::shift;
      } else if (s == "round") {
        strategy = split_strategy::round;
      } else {
        lx.fail("unknown split strategy '" + s + "'");
      }
    }
    d = directive::split(std::move(ln), std::move(outer), std::move(inner), std::move(factor),
                         strategy);
  } else if (name == "fuse") {
    loop_name ln = parse_loop_name(lx);
    lx.expect_punct(",");
    d = directive::fuse(std::move(ln), lx.expect_ident());
  } else if (name == "swap") {
    d = directive::swap_loops(parse_loop_name(lx));
  } else if (name == "traverse") {
    loop_name ln = parse_loop_name(lx);
    lx.expect_punct(",");
    std::string t = lx.expect_ident();
    if (t != "serial" && t != "parallel") lx.fail("traversal is 'serial' or 'parallel'");
    d = directive::traverse(std::move(ln),
                            t == "parallel" ? traversal::parallel : traversal::serial);
  } else if (name == "compute-at" || name == "store-at") {
    std::string func = lx.expect_ident();
    lx.expect_punct(",");
    loop_name ln = parse_loop_name(lx);
    d = name == "compute-at" ? directive::compute_at(std::move(func), std::move(ln))
                             : directive::store_at(std::move(func), std::move(ln));
  } else if (name == "bound") {
    std::string func = lx.expect_ident();
    lx.expect_punct(",");
    std::string dim = lx.expect_ident();
    lx.expect_punct(",");
    expr mn = ep.parse();
    lx.expect_punct(",");
    expr ln = ep.parse();
    d = directive::bound(std::move(func), std::move(dim), std::move(mn), std::move(ln));
  } else if (name == "bound-extent") {
    std::string func = lx.expect_ident();
    lx.expect_punct(",");
    std::string dim = lx.expect_ident();
    lx.expect_punct(",");
    d = directive::bound_extent(std::move(func), std::move(dim), ep.parse());
  } else if (name == "align-bounds") {
    std::string func = lx.expect_ident();
    lx.expect_punct(",");
    std::string dim = lx.expect_ident();
    lx.expect_punct(",");
    expr mod = ep.parse();
    lx.expect_punct(",");
    expr rem = ep.parse();
    d = directive::align_bounds(std::move(func), std::move(dim), std::move(mod), std::move(rem));
  } else {
    lx.fail("unknown directive '" + name + "'");
  }
  lx.expect_punct(")");
  return d;
}

}  // namespace

schedule parse_schedule(const std::string& text) {
  lexer lx(text);
  schedule out;
  while (lx.current.kind != token::kind_t::end) {
    out.push_back(parse_directive(lx));
    lx.eat_punct(";");
  }
  return out;
}

expr parse_expr_text(const std::string& text) {
  lexer lx(text);
  expr_parser ep{lx};
  expr e = ep.parse();
  if (lx.current.kind != token::kind_t::end) lx.fail("trailing input after expression");
  return e;
}

std::string to_string(const pipeline& p) {
  std::ostringstream os;
  os << "pipeline " << p.output << "(";
  for (size_t i = 0; i < p.params.size(); ++i) {
    if (i) os << ", ";
    os << p.params[i];
  }
  os << ") {\n";
  for (const func_def& f : p.funcs) {
    os << "  fun " << f.name << "(";
    for (size_t i = 0; i < f.vars.size(); ++i) {
      if (i) os << ", ";
      os << f.vars[i];
    }
    os << ") = {\n";
    for (size_t si = 0; si < f.stages.size(); ++si) {
      const stage& s = f.stages[si];
      os << "    ";
      if (si == 0) {
        os << to_string(s.rhs);
      } else {
        os << "rdom(";
        for (size_t r = 0; r < s.rdom.size(); ++r) {
          if (r) os << ", ";
          os << s.rdom[r].first << " = " << to_string(s.rdom[r].second);
        }
        os << ") in (";
        for (size_t d = 0; d < s.lhs.size(); ++d) {
          if (d) os << ", ";
          os << to_string(s.lhs[d]);
        }
        os << ") <- " << to_string(s.rhs) << " if " << to_string(s.predicate);
      }
      os << (si + 1 < f.stages.size() ? ";\n" : "\n");
    }
    os << "  };\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace usl

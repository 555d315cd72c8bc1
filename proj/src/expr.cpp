#include "usl/expr.h"

#include <algorithm>
#include <cassert>
#include <ostream>
#include <sstream>

namespace usl {

struct expr_node {
  expr_kind kind;
  integer const_value;
  std::string name;
  std::optional<int> stage, spec;
  op_kind op = op_kind::add;
  std::vector<expr> args;
  hole_id hole;
  hole_part part = hole_part::min;
};

std::string hole_id::name() const {
  std::string s = kind == hole_kind::mem ? "?mem:" : "?cpu:";
  s += func;
  if (stage) s += ".s" + std::to_string(*stage);
  if (spec) s += ".z" + std::to_string(*spec);
  s += "." + dim;
  return s;
}

expr expr::constant(integer n) {
  auto node = std::make_shared<expr_node>();
  node->kind = expr_kind::constant;
  node->const_value = std::move(n);
  return expr(std::move(node));
}

expr expr::variable(std::string name) {
  auto node = std::make_shared<expr_node>();
  node->kind = expr_kind::variable;
  node->name = std::move(name);
  return expr(std::move(node));
}

expr expr::access(std::string func, std::optional<int> stage, std::optional<int> spec,
                  std::vector<expr> index) {
  auto node = std::make_shared<expr_node>();
  node->kind = expr_kind::access;
  node->name = std::move(func);
  node->stage = stage;
  node->spec = spec;
  node->args = std::move(index);
  return expr(std::move(node));
}

expr expr::make_op(op_kind op, std::vector<expr> args) {
  assert(static_cast<int>(args.size()) == op_arity(op));
  auto node = std::make_shared<expr_node>();
  node->kind = expr_kind::op;
  node->op = op;
  node->args = std::move(args);
  return expr(std::move(node));
}

expr expr::hole_ref(hole_id id, hole_part part) {
  auto node = std::make_shared<expr_node>();
  node->kind = expr_kind::hole;
  node->hole = std::move(id);
  node->part = part;
  return expr(std::move(node));
}

expr expr::pos_inf() {
  auto node = std::make_shared<expr_node>();
  node->kind = expr_kind::pos_inf;
  return expr(std::move(node));
}

expr expr::neg_inf() {
  auto node = std::make_shared<expr_node>();
  node->kind = expr_kind::neg_inf;
  return expr(std::move(node));
}

expr_kind expr::kind() const { return node_->kind; }
const integer& expr::const_value() const { return node_->const_value; }
const std::string& expr::name() const { return node_->name; }
std::optional<int> expr::access_stage() const { return node_->stage; }
std::optional<int> expr::access_spec() const { return node_->spec; }
op_kind expr::op() const { return node_->op; }
const std::vector<expr>& expr::args() const { return node_->args; }
const hole_id& expr::hole() const { return node_->hole; }
hole_part expr::part() const { return node_->part; }

expr operator+(expr a, expr b) { return expr::make_op(op_kind::add, {std::move(a), std::move(b)}); }
expr operator-(expr a, expr b) { return expr::make_op(op_kind::sub, {std::move(a), std::move(b)}); }
expr operator*(expr a, expr b) { return expr::make_op(op_kind::mul, {std::move(a), std::move(b)}); }
expr operator/(expr a, expr b) { return expr::make_op(op_kind::div, {std::move(a), std::move(b)}); }
expr operator%(expr a, expr b) { return expr::make_op(op_kind::mod, {std::move(a), std::move(b)}); }
expr operator<(expr a, expr b) { return expr::make_op(op_kind::lt, {std::move(a), std::move(b)}); }
expr operator>(expr a, expr b) { return expr::make_op(op_kind::gt, {std::move(a), std::move(b)}); }
expr operator&&(expr a, expr b) {
  return expr::make_op(op_kind::logic_and, {std::move(a), std::move(b)});
}
expr operator||(expr a, expr b) {
  return expr::make_op(op_kind::logic_or, {std::move(a), std::move(b)});
}
expr equals(expr a, expr b) { return expr::make_op(op_kind::eq, {std::move(a), std::move(b)}); }
expr logic_not(expr a) { return expr::make_op(op_kind::logic_not, {std::move(a)}); }
expr select(expr c, expr t, expr f) {
  return expr::make_op(op_kind::select, {std::move(c), std::move(t), std::move(f)});
}
expr min(expr a, expr b) { return expr::make_op(op_kind::min, {std::move(a), std::move(b)}); }
expr max(expr a, expr b) { return expr::make_op(op_kind::max, {std::move(a), std::move(b)}); }

bool equal(const expr& a, const expr& b) {
  if (a.same_as(b)) return true;
  if (!a.defined() || !b.defined()) return false;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
  case expr_kind::constant: return a.const_value() == b.const_value();
  case expr_kind::variable: return a.name() == b.name();
  case expr_kind::pos_inf:
  case expr_kind::neg_inf: return true;
  case expr_kind::hole: return a.hole() == b.hole() && a.part() == b.part();
  case expr_kind::access:
    if (a.name() != b.name() || a.access_stage() != b.access_stage() ||
        a.access_spec() != b.access_spec()) {
      return false;
    }
    break;
  case expr_kind::op:
    if (a.op() != b.op()) return false;
    break;
  }
  if (a.args().size() != b.args().size()) return false;
  for (size_t i = 0; i < a.args().size(); ++i) {
    if (!equal(a.args()[i], b.args()[i])) return false;
  }
  return true;
}

bool equal(const interval& a, const interval& b) {
  return equal(a.min, b.min) && equal(a.len, b.len);
}

value eval_expr(const expr& e, const std::map<std::string, value>& env,
                const access_reader& reader) {
  switch (e.kind()) {
  case expr_kind::constant: return value(e.const_value());
  case expr_kind::variable: {
    auto it = env.find(e.name());
    if (it == env.end()) throw eval_error("unbound variable: " + e.name());
    return it->second;
  }
  case expr_kind::access: {
    std::vector<value> point;
    point.reserve(e.args().size());
    for (const expr& idx : e.args()) point.push_back(eval_expr(idx, env, reader));
    if (!reader) throw eval_error("func access with no reader: " + e.name());
    return reader(e.name(), e.access_stage(), e.access_spec(), point);
  }
  case expr_kind::op: {
    std::vector<value> args;
    args.reserve(e.args().size());
    for (const expr& a : e.args()) args.push_back(eval_expr(a, env, reader));
    return eval_op(e.op(), args);
  }
  case expr_kind::hole: throw eval_error("unsubstituted hole: " + e.hole().name());
  case expr_kind::pos_inf:
  case expr_kind::neg_inf: throw eval_error("infinity in executable expression");
  }
  throw eval_error("malformed expression");
}

void visit_exprs(const expr& e, const std::function<void(const expr&)>& fn) {
  if (!e.defined()) return;
  fn(e);
  if (e.kind() == expr_kind::op || e.kind() == expr_kind::access) {
    for (const expr& a : e.args()) visit_exprs(a, fn);
  }
}

expr rewrite_exprs(const expr& e, const std::function<expr(const expr&)>& fn) {
  if (!e.defined()) return e;
  expr replaced = fn(e);
  if (replaced.defined()) return replaced;
  if (e.kind() != expr_kind::op && e.kind() != expr_kind::access) return e;
  std::vector<expr> args;
  args.reserve(e.args().size());
  bool changed = false;
  for (const expr& a : e.args()) {
    expr r = rewrite_exprs(a, fn);
    changed = changed || !r.same_as(a);
    args.push_back(std::move(r));
  }
  if (!changed) return e;
  if (e.kind() == expr_kind::op) return expr::make_op(e.op(), std::move(args));
  return expr::access(e.name(), e.access_stage(), e.access_spec(), std::move(args));
}

bool contains_access(const expr& e) {
  bool found = false;
  visit_exprs(e, [&](const expr& n) { found = found || n.kind() == expr_kind::access; });
  return found;
}

bool contains_hole(const expr& e) {
  bool found = false;
  visit_exprs(e, [&](const expr& n) { found = found || n.kind() == expr_kind::hole; });
  return found;
}

bool contains_inf(const expr& e) {
  bool found = false;
  visit_exprs(e, [&](const expr& n) { found = found || n.is_inf(); });
  return found;
}

bool contains_var(const expr& e, const std::string& name) {
  bool found = false;
  visit_exprs(e, [&](const expr& n) {
    found = found || (n.kind() == expr_kind::variable && n.name() == name);
  });
  return found;
}

bool is_startup_expr(const expr& e, const std::vector<std::string>& params) {
  bool ok = true;
  visit_exprs(e, [&](const expr& n) {
    switch (n.kind()) {
    case expr_kind::access:
    case expr_kind::hole:
    case expr_kind::pos_inf:
    case expr_kind::neg_inf: ok = false; break;
    case expr_kind::variable:
      if (std::find(params.begin(), params.end(), n.name()) == params.end()) ok = false;
      break;
    default: break;
    }
  });
  return ok;
}

namespace {

// Binding strength; calls and atoms never need parentheses.
int op_prec(op_kind op) {
  switch (op) {
  case op_kind::logic_or: return 1;
  case op_kind::logic_and: return 2;
  case op_kind::lt:
  case op_kind::gt:
  case op_kind::eq: return 3;
  case op_kind::add:
  case op_kind::sub: return 4;
  case op_kind::mul:
  case op_kind::div:
  case op_kind::mod: return 5;
  default: return 6;
  }
}

// All binary operators associate to the left; a right operand at the same
// level keeps its parentheses so rendering round-trips the exact tree.
void render(std::ostream& os, const expr& e, int parent_prec, bool right_operand) {
  switch (e.kind()) {
  case expr_kind::constant: os << e.const_value().str(); return;
  case expr_kind::variable: os << e.name(); return;
  case expr_kind::pos_inf: os << "inf"; return;
  case expr_kind::neg_inf: os << "-inf"; return;
  case expr_kind::hole:
    os << "(" << e.hole().name() << ")." << (e.part() == hole_part::min ? "min" : "len");
    return;
  case expr_kind::access:
    os << e.name();
    if (e.access_stage()) os << ".s" << *e.access_stage();
    if (e.access_spec()) os << ".z" << *e.access_spec();
    os << "[";
    for (size_t i = 0; i < e.args().size(); ++i) {
      if (i) os << ", ";
      render(os, e.args()[i], 0, false);
    }
    os << "]";
    return;
  case expr_kind::op: break;
  }

  op_kind op = e.op();
  if (op == op_kind::select || op == op_kind::min || op == op_kind::max) {
    os << op_token(op) << "(";
    for (size_t i = 0; i < e.args().size(); ++i) {
      if (i) os << ", ";
      render(os, e.args()[i], 0, false);
    }
    os << ")";
    return;
  }
  if (op == op_kind::logic_not) {
    os << "!";
    render(os, e.args()[0], op_prec(op), false);
    return;
  }
  int prec = op_prec(op);
  bool parens = prec < parent_prec || (prec == parent_prec && right_operand);
  if (parens) os << "(";
  render(os, e.args()[0], prec, false);
  os << " " << op_token(op) << " ";
  render(os, e.args()[1], prec, true);
  if (parens) os << ")";
}

}  // namespace

std::string to_string(const expr& e) {
  if (!e.defined()) return "<undefined>";
  std::ostringstream os;
  render(os, e, 0, false);
  return os.str();
}

std::string to_string(const interval& i) {
  return "(" + to_string(i.min) + ", " + to_string(i.len) + ")";
}

}  // namespace usl

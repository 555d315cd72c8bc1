#include "usl/bounds.h"

#include "usl/lower.h"
#include "usl/simplify.h"

#include <cassert>
#include <sstream>

namespace usl {

struct constraint_node {
  constraint_kind kind;
  expr guard;
  std::string name;
  interval range;
  std::vector<hole_id> holes;
  std::vector<expr> coords;
  std::vector<interval> window;
  expr let_value;
  constraint a, b;
};

constraint constraint::truth() {
  auto n = std::make_shared<constraint_node>();
  n->kind = constraint_kind::truth;
  return constraint(std::move(n));
}

constraint constraint::atom(expr e) {
  auto n = std::make_shared<constraint_node>();
  n->kind = constraint_kind::atom;
  n->guard = std::move(e);
  return constraint(std::move(n));
}

constraint constraint::conj(constraint a, constraint b) {
  if (a.defined() && a.kind() == constraint_kind::truth) return b;
  if (b.defined() && b.kind() == constraint_kind::truth) return a;
  auto n = std::make_shared<constraint_node>();
  n->kind = constraint_kind::conj;
  n->a = std::move(a);
  n->b = std::move(b);
  return constraint(std::move(n));
}

constraint constraint::implies(expr antecedent, constraint body) {
  if (body.defined() && body.kind() == constraint_kind::truth) return body;
  auto n = std::make_shared<constraint_node>();
  n->kind = constraint_kind::implies;
  n->guard = std::move(antecedent);
  n->a = std::move(body);
  return constraint(std::move(n));
}

constraint constraint::forall_var(std::string var, interval range, constraint body) {
  auto n = std::make_shared<constraint_node>();
  n->kind = constraint_kind::forall_var;
  n->name = std::move(var);
  n->range = std::move(range);
  n->a = std::move(body);
  return constraint(std::move(n));
}

constraint constraint::forall_param(std::string param, constraint body) {
  auto n = std::make_shared<constraint_node>();
  n->kind = constraint_kind::forall_param;
  n->name = std::move(param);
  n->a = std::move(body);
  return constraint(std::move(n));
}

constraint constraint::exists_holes(std::string group, std::vector<hole_id> holes,
                                    constraint body) {
  auto n = std::make_shared<constraint_node>();
  n->kind = constraint_kind::exists_holes;
  n->name = std::move(group);
  n->holes = std::move(holes);
  n->a = std::move(body);
  return constraint(std::move(n));
}

constraint constraint::let_c(std::string var, expr value, constraint body) {
  auto n = std::make_shared<constraint_node>();
  n->kind = constraint_kind::let_c;
  n->name = std::move(var);
  n->let_value = std::move(value);
  n->a = std::move(body);
  return constraint(std::move(n));
}

constraint constraint::point_in(std::vector<expr> coords, std::vector<hole_id> targets) {
  assert(coords.size() == targets.size());
  auto n = std::make_shared<constraint_node>();
  n->kind = constraint_kind::point_in;
  n->coords = std::move(coords);
  n->holes = std::move(targets);
  return constraint(std::move(n));
}

constraint constraint::window_in(std::vector<interval> window, std::vector<hole_id> targets) {
  assert(window.size() == targets.size());
  auto n = std::make_shared<constraint_node>();
  n->kind = constraint_kind::window_in;
  n->window = std::move(window);
  n->holes = std::move(targets);
  return constraint(std::move(n));
}

constraint_kind constraint::kind() const { return node_->kind; }
const expr& constraint::guard() const { return node_->guard; }
const std::string& constraint::name() const { return node_->name; }
const interval& constraint::range() const { return node_->range; }
const std::vector<hole_id>& constraint::holes() const { return node_->holes; }
const std::vector<expr>& constraint::coords() const { return node_->coords; }
const std::vector<interval>& constraint::window() const { return node_->window; }
const expr& constraint::let_value() const { return node_->let_value; }
const constraint& constraint::first() const { return node_->a; }
const constraint& constraint::second() const { return node_->b; }

namespace {

void print_constraint(std::ostream& os, const constraint& c, int depth) {
  std::string ind(2 * depth, ' ');
  switch (c.kind()) {
  case constraint_kind::truth: os << ind << "true\n"; return;
  case constraint_kind::atom: os << ind << "(atom " << to_string(c.guard()) << ")\n"; return;
  case constraint_kind::conj:
    os << ind << "(and\n";
    print_constraint(os, c.first(), depth + 1);
    print_constraint(os, c.second(), depth + 1);
    os << ind << ")\n";
    return;
  case constraint_kind::implies:
    os << ind << "(implies " << to_string(c.guard()) << "\n";
    print_constraint(os, c.first(), depth + 1);
    os << ind << ")\n";
    return;
  case constraint_kind::forall_var:
    os << ind << "(forall " << c.name() << " in " << to_string(c.range()) << "\n";
    print_constraint(os, c.first(), depth + 1);
    os << ind << ")\n";
    return;
  case constraint_kind::forall_param:
    os << ind << "(forall-param " << c.name() << "\n";
    print_constraint(os, c.first(), depth + 1);
    os << ind << ")\n";
    return;
  case constraint_kind::exists_holes:
    os << ind << "(exists " << c.name() << "\n";
    print_constraint(os, c.first(), depth + 1);
    os << ind << ")\n";
    return;
  case constraint_kind::let_c:
    os << ind << "(let " << c.name() << " = " << to_string(c.let_value()) << "\n";
    print_constraint(os, c.first(), depth + 1);
    os << ind << ")\n";
    return;
  case constraint_kind::point_in: {
    os << ind << "(in (";
    for (size_t i = 0; i < c.coords().size(); ++i) {
      if (i) os << ", ";
      os << to_string(c.coords()[i]);
    }
    os << ")";
    for (const hole_id& h : c.holes()) os << " " << h.name();
    os << ")\n";
    return;
  }
  case constraint_kind::window_in: {
    os << ind << "(window (";
    for (size_t i = 0; i < c.window().size(); ++i) {
      if (i) os << ", ";
      os << to_string(c.window()[i]);
    }
    os << ")";
    for (const hole_id& h : c.holes()) os << " " << h.name();
    os << ")\n";
    return;
  }
  }
}

}  // namespace

std::string to_string(const constraint& c) {
  std::ostringstream os;
  if (c.defined()) print_constraint(os, c, 0);
  return os.str();
}

namespace {

struct extractor {
  const tgt_program& p;

  std::vector<hole_id> mem_holes(const std::string& func) const {
    std::vector<hole_id> out;
    for (const std::string& dim : p.funcs.at(func).dims) {
      out.push_back(hole_id{hole_kind::mem, func, dim, std::nullopt, std::nullopt});
    }
    return out;
  }

  std::vector<hole_id> cpu_holes_at(const std::string& func, std::optional<int> stage,
                                    std::optional<int> spec) const {
    std::vector<hole_id> out;
    for (const std::string& dim : p.funcs.at(func).dims) {
      out.push_back(resolve_cpu_hole(p, func, dim, stage, spec));
    }
    return out;
  }

  std::vector<hole_id> all_cpu_holes(const std::string& func) const {
    std::vector<hole_id> out;
    for (const hole_id& h : p.holes) {
      if (h.kind == hole_kind::cpu && h.func == func) out.push_back(h);
    }
    return out;
  }

  // Membership of a point in a func's compute window, as an expression over
  // the hole parts; used as the antecedent of the store implication.
  expr membership_expr(const std::vector<expr>& coords, const std::vector<hole_id>& holes) const {
    expr out;
    for (size_t d = 0; d < coords.size(); ++d) {
      expr mn = expr::hole_ref(holes[d], hole_part::min);
      expr ln = expr::hole_ref(holes[d], hole_part::len);
      expr in_dim = logic_not(coords[d] < mn) && coords[d] < mn + ln;
      out = out.defined() ? out && in_dim : in_dim;
    }
    return out.defined() ? out : expr::constant(1);
  }

  constraint cpu_of(const expr& e) const {
    if (!e.defined()) return constraint::truth();
    switch (e.kind()) {
    case expr_kind::access: {
      constraint c = constraint::truth();
      for (const expr& idx : e.args()) c = constraint::conj(c, cpu_of(idx));
      c = constraint::conj(c, constraint::point_in(e.args(), mem_holes(e.name())));
      return constraint::conj(
          c, constraint::point_in(e.args(),
                                  cpu_holes_at(e.name(), e.access_stage(), e.access_spec())));
    }
    case expr_kind::op: {
      constraint c = constraint::truth();
      for (const expr& a : e.args()) c = constraint::conj(c, cpu_of(a));
      return c;
    }
    default: return constraint::truth();
    }
  }

  constraint mem_of(const expr& e) const {
    if (!e.defined()) return constraint::truth();
    switch (e.kind()) {
    case expr_kind::access: {
      constraint c = constraint::truth();
      for (const expr& idx : e.args()) c = constraint::conj(c, cpu_of(idx));
      return constraint::conj(c, constraint::point_in(e.args(), mem_holes(e.name())));
    }
    case expr_kind::op: {
      constraint c = constraint::truth();
      for (const expr& a : e.args()) c = constraint::conj(c, mem_of(a));
      return c;
    }
    default: return constraint::truth();
    }
  }

  constraint of_stmts(const std::vector<stmt>& list, size_t i) {
    if (i >= list.size()) return constraint::truth();
    const stmt& s = list[i];
    if (s.kind() == stmt_kind::alloc) {
      // The allocation binds its holes over the rest of the sequence.
      return constraint::exists_holes("?mem:" + s.name(), mem_holes(s.name()),
                                      of_stmts(list, i + 1));
    }
    return constraint::conj(of_stmt(s), of_stmts(list, i + 1));
  }

  // A stage leaves every point it does not write with the previous stage's
  // value, so within each lowered dimension every stage's window must contain
  // the window of the next stage that lowers it (and transitively the func's
  // final window, which consumers and the realization constrain).
  constraint stage_window_chain(const std::string& func) const {
    const tgt_program::func_info& info = p.funcs.at(func);
    int last = info.stage_count - 1;
    std::vector<std::optional<int>> specs;
    if (info.specs.empty()) {
      specs.push_back(std::nullopt);
    } else {
      for (int j : info.specs) specs.push_back(j);
    }
    constraint c = constraint::truth();
    for (const std::string& dim : info.dims) {
      std::vector<int> lowering;
      for (int k = 0; k <= last; ++k) {
        if (info.stage_dims[k].count(dim)) lowering.push_back(k);
      }
      for (std::optional<int> spec : specs) {
        auto hole_at = [&](int k) {
          if (k == last) return hole_id{hole_kind::cpu, func, dim, std::nullopt, std::nullopt};
          return hole_id{hole_kind::cpu, func, dim, k, spec};
        };
        for (size_t j = 0; j + 1 < lowering.size(); ++j) {
          hole_id upper = hole_at(lowering[j + 1]);
          interval upper_iv{expr::hole_ref(upper, hole_part::min),
                            expr::hole_ref(upper, hole_part::len)};
          c = constraint::conj(c, constraint::window_in({upper_iv}, {hole_at(lowering[j])}));
        }
      }
    }
    return c;
  }

  constraint of_stmt(const stmt& s) {
    if (!s.defined()) return constraint::truth();
    switch (s.kind()) {
    case stmt_kind::nop: return constraint::truth();
    case stmt_kind::assert_check: return constraint::atom(s.cond());
    case stmt_kind::alloc:
    case stmt_kind::seq: {
      std::vector<stmt> list = flatten_seq(s);
      if (list.size() == 1 && list[0].kind() != stmt_kind::alloc) return of_stmt(list[0]);
      return of_stmts(list, 0);
    }
    case stmt_kind::labeled:
      if (s.label().kind == label_kind::func) {
        return constraint::exists_holes(
            "?cpu:" + s.label().func, all_cpu_holes(s.label().func),
            constraint::conj(stage_window_chain(s.label().func), of_stmt(s.first())));
      }
      return of_stmt(s.first());
    case stmt_kind::let_bind:
      return constraint::conj(cpu_of(s.let_value()),
                              constraint::let_c(s.name(), s.let_value(), of_stmt(s.first())));
    case stmt_kind::if_branch:
      return constraint::conj(
          constraint::conj(cpu_of(s.cond()), constraint::implies(s.cond(), of_stmt(s.first()))),
          constraint::implies(logic_not(s.cond()), of_stmt(s.second())));
    case stmt_kind::for_loop: {
      expr nonneg = logic_not(s.loop_bounds().len < expr::constant(0));
      return constraint::conj(constraint::atom(nonneg),
                              constraint::forall_var(s.name(), s.loop_bounds(),
                                                     of_stmt(s.first())));
    }
    case stmt_kind::store: {
      std::vector<hole_id> cpu = cpu_holes_at(s.name(), s.store_stage(), s.store_spec());
      constraint c = constraint::point_in(s.store_index(), mem_holes(s.name()));
      for (const expr& idx : s.store_index()) c = constraint::conj(c, cpu_of(idx));
      c = constraint::conj(c, mem_of(s.store_rhs()));
      return constraint::conj(
          c, constraint::implies(membership_expr(s.store_index(), cpu), cpu_of(s.store_rhs())));
    }
    }
    return constraint::truth();
  }
};

}  // namespace

constraint extract(const tgt_program& p) {
  extractor ex{p};
  constraint body = ex.of_stmt(p.body);

  // The requested window must land inside the output's compute holes.
  const auto& out_info = p.funcs.at(p.output);
  constraint c = body;
  for (size_t d = 0; d < out_info.dims.size(); ++d) {
    interval w{expr::variable(p.window_params[2 * d]),
               expr::variable(p.window_params[2 * d + 1])};
    hole_id target = resolve_cpu_hole(p, p.output, out_info.dims[d], std::nullopt, std::nullopt);
    c = constraint::conj(c, constraint::window_in({w}, {target}));
  }

  std::vector<std::string> names = p.all_params();
  for (auto it = names.rbegin(); it != names.rend(); ++it) {
    c = constraint::forall_param(*it, c);
  }
  return c;
}

bool is_finite(const sym_interval& i) {
  return i.min.defined() && i.len.defined() && !contains_inf(i.min) && !contains_inf(i.len);
}

std::string to_string(const sym_interval& i) {
  return "(" + to_string(i.min) + ", " + to_string(i.len) + ")";
}

namespace {

const sym_interval unbounded{expr::neg_inf(), expr::pos_inf()};

// Inclusive upper endpoint; only valid for finite nonempty intervals.
expr end_of(const sym_interval& i) { return simplify(i.min + i.len - expr::constant(1)); }

sym_interval from_min_end(const expr& mn, const expr& en) {
  return {mn, simplify(en - mn + expr::constant(1))};
}

expr sym_min(const expr& a, const expr& b) {
  if (auto d = constant_difference(a, b)) return *d >= 0 ? a : b;
  return simplify(min(a, b));
}

expr sym_max(const expr& a, const expr& b) {
  if (auto d = constant_difference(a, b)) return *d >= 0 ? b : a;
  return simplify(max(a, b));
}

}  // namespace

sym_interval hull(const sym_interval& a, const sym_interval& b) {
  if (!a.min.defined()) return b;
  if (!b.min.defined()) return a;
  if (equal(a.min, b.min) && equal(a.len, b.len)) return a;
  bool min_inf = contains_inf(a.min) || contains_inf(b.min);
  bool len_inf = contains_inf(a.len) || contains_inf(b.len);
  if (min_inf) return unbounded;
  expr mn = sym_min(a.min, b.min);
  if (len_inf) return {mn, expr::pos_inf()};
  expr en = sym_max(end_of(a), end_of(b));
  return from_min_end(mn, en);
}

sym_interval interval_of(const expr& e, const std::map<std::string, sym_interval>& env) {
  switch (e.kind()) {
  case expr_kind::constant: return {e, expr::constant(1)};
  case expr_kind::hole: return {e, expr::constant(1)};  // a fixed, if unknown, integer
  case expr_kind::variable: {
    auto it = env.find(e.name());
    if (it == env.end()) throw eval_error("unbound variable in interval analysis: " + e.name());
    return it->second;
  }
  case expr_kind::access: return unbounded;
  case expr_kind::pos_inf:
  case expr_kind::neg_inf: return unbounded;
  case expr_kind::op: break;
  }

  std::vector<sym_interval> args;
  args.reserve(e.args().size());
  for (const expr& a : e.args()) args.push_back(interval_of(a, env));

  op_kind op = e.op();
  // Comparisons and logic land in {0, 1} whatever the operands are.
  switch (op) {
  case op_kind::lt:
  case op_kind::gt:
  case op_kind::eq:
  case op_kind::logic_or:
  case op_kind::logic_and:
  case op_kind::logic_not: return {expr::constant(0), expr::constant(2)};
  case op_kind::select: return hull(args[1], args[2]);
  default: break;
  }

  for (const sym_interval& a : args) {
    if (!is_finite(a)) return unbounded;
  }
  const sym_interval& a = args[0];
  const sym_interval& b = args[1];
  switch (op) {
  case op_kind::add:
    return {simplify(a.min + b.min), simplify(a.len + b.len - expr::constant(1))};
  case op_kind::sub:
    return {simplify(a.min - end_of(b)), simplify(a.len + b.len - expr::constant(1))};
  case op_kind::mul: {
    expr corners[4] = {simplify(a.min * b.min), simplify(a.min * end_of(b)),
                       simplify(end_of(a) * b.min), simplify(end_of(a) * end_of(b))};
    expr mn = sym_min(sym_min(corners[0], corners[1]), sym_min(corners[2], corners[3]));
    expr en = sym_max(sym_max(corners[0], corners[1]), sym_max(corners[2], corners[3]));
    return from_min_end(mn, en);
  }
  case op_kind::div: {
    // Quotients never exceed the numerator in magnitude.
    expr m = sym_max(simplify(expr::constant(0) - a.min), end_of(a));
    return {simplify(expr::constant(0) - m), simplify(expr::constant(2) * m + expr::constant(1))};
  }
  case op_kind::mod: {
    // Remainders are bounded by the divisor (and zero divisors yield zero).
    expr m = sym_max(simplify(expr::constant(0) - b.min), end_of(b));
    return {simplify(expr::constant(0) - m), simplify(expr::constant(2) * m + expr::constant(1))};
  }
  case op_kind::min:
    return from_min_end(sym_min(a.min, b.min), sym_min(end_of(a), end_of(b)));
  case op_kind::max:
    return from_min_end(sym_max(a.min, b.min), sym_max(end_of(a), end_of(b)));
  default: break;
  }
  return unbounded;
}

namespace {

struct baseline_pass {
  std::map<std::string, sym_interval> env;
  sym_substitution holes;

  void hull_into(const hole_id& h, const sym_interval& i) {
    auto it = holes.find(h);
    if (it == holes.end()) {
      holes.emplace(h, i);
    } else {
      it->second = hull(it->second, i);
    }
  }

  void visit(const constraint& c) {
    if (!c.defined()) return;
    switch (c.kind()) {
    case constraint_kind::truth:
    case constraint_kind::atom: return;  // runtime checks carry no intervals
    case constraint_kind::conj:
      // Reverse program order: later conjuncts first, so consumer holes are
      // known before their producers are scanned.
      visit(c.second());
      visit(c.first());
      return;
    case constraint_kind::implies: visit(c.first()); return;  // guard ignored
    case constraint_kind::exists_holes: visit(c.first()); return;
    case constraint_kind::forall_param: {
      auto saved = env.find(c.name());
      sym_interval prev;
      bool had = saved != env.end();
      if (had) prev = saved->second;
      env[c.name()] = {expr::variable(c.name()), expr::constant(1)};
      visit(c.first());
      if (had) {
        env[c.name()] = prev;
      } else {
        env.erase(c.name());
      }
      return;
    }
    case constraint_kind::forall_var: {
      auto it = env.find(c.name());
      sym_interval prev;
      bool had = it != env.end();
      if (had) prev = it->second;
      env[c.name()] = {c.range().min, c.range().len};
      visit(c.first());
      if (had) {
        env[c.name()] = prev;
      } else {
        env.erase(c.name());
      }
      return;
    }
    case constraint_kind::let_c: {
      auto it = env.find(c.name());
      sym_interval prev;
      bool had = it != env.end();
      if (had) prev = it->second;
      env[c.name()] = interval_of(c.let_value(), env);
      visit(c.first());
      if (had) {
        env[c.name()] = prev;
      } else {
        env.erase(c.name());
      }
      return;
    }
    case constraint_kind::point_in:
      for (size_t d = 0; d < c.coords().size(); ++d) {
        hull_into(c.holes()[d], interval_of(c.coords()[d], env));
      }
      return;
    case constraint_kind::window_in:
      for (size_t d = 0; d < c.window().size(); ++d) {
        hull_into(c.holes()[d], {c.window()[d].min, c.window()[d].len});
      }
      return;
    }
  }
};

}  // namespace

sym_substitution infer_baseline(const constraint& c) {
  baseline_pass pass;
  pass.visit(c);
  return std::move(pass.holes);
}

namespace {

// Conservative sign analysis over closed expressions; nonneg_vars lists
// variables known to be >= 0 (the window lengths).
bool provably_nonneg(const expr& e, const std::set<std::string>& nonneg_vars) {
  switch (e.kind()) {
  case expr_kind::constant: return e.const_value() >= 0;
  case expr_kind::variable: return nonneg_vars.count(e.name()) > 0;
  case expr_kind::op: break;
  default: return false;
  }
  const auto& args = e.args();
  auto all = [&]() {
    for (const expr& a : args) {
      if (!provably_nonneg(a, nonneg_vars)) return false;
    }
    return true;
  };
  switch (e.op()) {
  case op_kind::add:
  case op_kind::mul:
  case op_kind::min:
  case op_kind::div: return all();
  case op_kind::max:
    return provably_nonneg(args[0], nonneg_vars) || provably_nonneg(args[1], nonneg_vars);
  case op_kind::mod: return provably_nonneg(args[1], nonneg_vars);  // sign of the divisor
  case op_kind::lt:
  case op_kind::gt:
  case op_kind::eq:
  case op_kind::logic_or:
  case op_kind::logic_and:
  case op_kind::logic_not: return true;
  case op_kind::select:
    return provably_nonneg(args[1], nonneg_vars) && provably_nonneg(args[2], nonneg_vars);
  default: return false;
  }
}

}  // namespace

resolve_result resolve(const sym_substitution& sym, const tgt_program& p) {
  const std::vector<hole_id>& registry = p.holes;
  std::set<std::string> nonneg_vars;
  for (size_t d = 0; 2 * d + 1 < p.window_params.size(); ++d) {
    nonneg_vars.insert(p.window_params[2 * d + 1]);
  }
  resolve_result out;
  std::map<hole_id, sym_interval> remaining;
  for (const hole_id& h : registry) {
    auto it = sym.find(h);
    if (it == sym.end()) {
      out.failed.push_back(h);
      out.reason = "undetermined hole";
    } else {
      remaining.emplace(h, sym_interval{simplify(it->second.min), simplify(it->second.len)});
    }
  }
  if (!out.failed.empty()) return out;

  std::map<hole_id, interval> done;
  while (!remaining.empty()) {
    std::vector<hole_id> ready;
    for (const auto& [h, i] : remaining) {
      if (!contains_hole(i.min) && !contains_hole(i.len)) ready.push_back(h);
    }
    if (ready.empty()) {
      for (const auto& [h, i] : remaining) out.failed.push_back(h);
      out.reason = "cyclic hole dependencies";
      return out;
    }
    for (const hole_id& h : ready) {
      sym_interval i = remaining.at(h);
      remaining.erase(h);
      if (contains_inf(i.min) || contains_inf(i.len)) {
        out.failed.push_back(h);
        continue;
      }
      expr len = i.len;
      if (!provably_nonneg(len, nonneg_vars)) len = simplify(max(expr::constant(0), len));
      done.emplace(h, interval{i.min, len});
    }
    // Substitute everything settled so far into the rest.
    auto rewrite = [&](const expr& e) -> expr {
      if (e.kind() != expr_kind::hole) return expr();
      auto it = done.find(e.hole());
      if (it != done.end()) {
        return e.part() == hole_part::min ? it->second.min : it->second.len;
      }
      for (const hole_id& f : out.failed) {
        if (f == e.hole()) return e.part() == hole_part::min ? expr::neg_inf() : expr::pos_inf();
      }
      return expr();
    };
    for (auto& [h, i] : remaining) {
      i.min = simplify(rewrite_exprs(i.min, rewrite));
      i.len = simplify(rewrite_exprs(i.len, rewrite));
    }
  }

  if (!out.failed.empty()) {
    out.reason = "unbounded interval";
    return out;
  }
  out.ok = true;
  out.closed = std::move(done);
  return out;
}

tgt_program substitute_holes(const tgt_program& p, const std::map<hole_id, interval>& sub) {
  for (const hole_id& h : p.holes) {
    auto it = sub.find(h);
    if (it == sub.end()) {
      throw std::invalid_argument("substitution is missing hole " + h.name());
    }
    if (contains_inf(it->second.min) || contains_inf(it->second.len) ||
        contains_hole(it->second.min) || contains_hole(it->second.len)) {
      throw std::invalid_argument("substitution for " + h.name() + " is not closed");
    }
  }
  tgt_program out = p;
  out.body = rewrite_stmt_exprs(p.body, [&](const expr& e) -> expr {
    if (e.kind() != expr_kind::hole) return expr();
    const interval& i = sub.at(e.hole());
    return e.part() == hole_part::min ? i.min : i.len;
  });
  out.holes.clear();
  return out;
}

tgt_program complete_baseline(const tgt_program& p) {
  resolve_result r = resolve(infer_baseline(extract(p)), p);
  if (!r.ok) {
    tgt_program failed = p;
    failed.body = stmt::assert_check(expr::constant(0));
    failed.holes.clear();
    return failed;
  }
  return substitute_holes(p, r.closed);
}

bounds_engine baseline_engine() {
  return [](const tgt_program& p) { return complete_baseline(p); };
}

bounds_engine assert_false_engine() {
  return [](const tgt_program& p) {
    tgt_program out = p;
    out.body = stmt::assert_check(expr::constant(0));
    out.holes.clear();
    return out;
  };
}

namespace {

// Signals a conjunct whose ground value depends on buffer contents.
struct data_dependent {};

enum class ground_status { ok, stopped, violated };

struct ground_checker {
  const std::map<hole_id, interval>& sub;
  std::map<std::string, value> env;
  ground_report report;

  expr substituted(const expr& e) const {
    return rewrite_exprs(e, [&](const expr& n) -> expr {
      if (n.kind() != expr_kind::hole) return expr();
      auto it = sub.find(n.hole());
      if (it == sub.end()) throw std::invalid_argument("missing hole " + n.hole().name());
      return n.part() == hole_part::min ? it->second.min : it->second.len;
    });
  }

  value geval(const expr& e) {
    access_reader reader = [](const std::string&, std::optional<int>, std::optional<int>,
                              const std::vector<value>&) -> value { throw data_dependent{}; };
    return eval_expr(substituted(e), env, reader);
  }

  std::pair<integer, integer> ground_interval(const interval& i) {
    value mn = geval(i.min);
    value ln = geval(i.len);
    if (!mn.is_int() || !ln.is_int()) throw data_dependent{};
    return {mn.as_int(), ln.as_int()};
  }

  ground_status check(const constraint& c) {
    if (!c.defined()) return ground_status::ok;
    switch (c.kind()) {
    case constraint_kind::truth: return ground_status::ok;
    case constraint_kind::atom:
      try {
        // A failed assertion stops the program; everything sequenced after
        // it is vacuously fine.
        return geval(c.guard()).truthy() ? ground_status::ok : ground_status::stopped;
      } catch (const data_dependent&) {
        ++report.indeterminate;
        return ground_status::ok;
      }
    case constraint_kind::conj: {
      ground_status a = check(c.first());
      if (a != ground_status::ok) return a;
      return check(c.second());
    }
    case constraint_kind::implies:
      try {
        if (!geval(c.guard()).truthy()) return ground_status::ok;
      } catch (const data_dependent&) {
        ++report.indeterminate;
        return ground_status::ok;
      }
      return check(c.first());
    case constraint_kind::exists_holes: return check(c.first());
    case constraint_kind::forall_param: return check(c.first());  // bound from the input
    case constraint_kind::forall_var: {
      std::pair<integer, integer> range;
      try {
        range = ground_interval(c.range());
      } catch (const data_dependent&) {
        ++report.indeterminate;
        return ground_status::ok;
      }
      auto saved = env.find(c.name()) != env.end() ? std::optional<value>(env[c.name()])
                                                   : std::nullopt;
      ground_status st = ground_status::ok;
      for (integer i = range.first; i < range.first + range.second; ++i) {
        env[c.name()] = value(i);
        st = check(c.first());
        if (st != ground_status::ok) break;
      }
      if (saved) {
        env[c.name()] = *saved;
      } else {
        env.erase(c.name());
      }
      return st;
    }
    case constraint_kind::let_c: {
      std::optional<value> bound;
      try {
        bound = geval(c.let_value());
      } catch (const data_dependent&) {
        // Conservatively skip the scope; the case is counted.
        ++report.indeterminate;
        return ground_status::ok;
      }
      auto saved = env.find(c.name()) != env.end() ? std::optional<value>(env[c.name()])
                                                   : std::nullopt;
      env[c.name()] = *bound;
      ground_status st = check(c.first());
      if (saved) {
        env[c.name()] = *saved;
      } else {
        env.erase(c.name());
      }
      return st;
    }
    case constraint_kind::point_in: {
      for (size_t d = 0; d < c.coords().size(); ++d) {
        try {
          value pt = geval(c.coords()[d]);
          auto it = sub.find(c.holes()[d]);
          if (it == sub.end()) throw std::invalid_argument("missing hole");
          auto [mn, ln] = ground_interval(it->second);
          if (!pt.is_int() || pt.as_int() < mn || pt.as_int() >= mn + ln) {
            report.violations.push_back("point " + to_string(pt) + " outside " +
                                        c.holes()[d].name() + " = (" + mn.str() + ", " +
                                        ln.str() + ")");
            report.satisfied = false;
            return ground_status::violated;
          }
        } catch (const data_dependent&) {
          ++report.indeterminate;
        }
      }
      return ground_status::ok;
    }
    case constraint_kind::window_in: {
      for (size_t d = 0; d < c.window().size(); ++d) {
        try {
          auto [wmn, wln] = ground_interval(c.window()[d]);
          if (wln <= 0) continue;  // empty request
          auto it = sub.find(c.holes()[d]);
          if (it == sub.end()) throw std::invalid_argument("missing hole");
          auto [hmn, hln] = ground_interval(it->second);
          if (wmn < hmn || wmn + wln > hmn + hln) {
            report.violations.push_back("window (" + wmn.str() + ", " + wln.str() +
                                        ") outside " + c.holes()[d].name());
            report.satisfied = false;
            return ground_status::violated;
          }
        } catch (const data_dependent&) {
          ++report.indeterminate;
        }
      }
      return ground_status::ok;
    }
    }
    return ground_status::ok;
  }
};

}  // namespace

ground_report check_satisfies(const tgt_program& p, const std::map<hole_id, interval>& sub,
                              const realize_input& z) {
  ground_checker gc{sub, {}, {}};
  for (size_t i = 0; i < p.params.size(); ++i) {
    gc.env[p.params[i]] = value(z.param_values[i]);
  }
  for (size_t d = 0; d < z.window.size(); ++d) {
    gc.env[p.window_params[2 * d]] = value(z.window[d].min);
    gc.env[p.window_params[2 * d + 1]] = value(z.window[d].len);
  }
  ground_status st = gc.check(extract(p));
  gc.report.stopped = st == ground_status::stopped;
  return std::move(gc.report);
}

}  // namespace usl

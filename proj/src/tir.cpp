#include "usl/tir.h"

#include <cassert>
#include <sstream>

namespace usl {

struct stmt_node {
  stmt_kind kind;
  expr e;
  std::string name;
  std::optional<int> stage, spec;
  std::vector<expr> index;
  std::vector<interval> bounds;
  interval loop_bounds;
  traversal trav = traversal::serial;
  label_id label{label_kind::func, "", 0};
  stmt a, b;
};

std::string label_id::name() const {
  switch (kind) {
  case label_kind::func: return func;
  case label_kind::stage: return "s" + std::to_string(index);
  case label_kind::spec: return "z" + std::to_string(index);
  }
  return "?";
}

stmt stmt::nop() {
  auto n = std::make_shared<stmt_node>();
  n->kind = stmt_kind::nop;
  return stmt(std::move(n));
}

stmt stmt::assert_check(expr cond) {
  auto n = std::make_shared<stmt_node>();
  n->kind = stmt_kind::assert_check;
  n->e = std::move(cond);
  return stmt(std::move(n));
}

stmt stmt::seq(stmt a, stmt b) {
  auto n = std::make_shared<stmt_node>();
  n->kind = stmt_kind::seq;
  n->a = std::move(a);
  n->b = std::move(b);
  return stmt(std::move(n));
}

stmt stmt::alloc(std::string func, std::vector<interval> bounds) {
  auto n = std::make_shared<stmt_node>();
  n->kind = stmt_kind::alloc;
  n->name = std::move(func);
  n->bounds = std::move(bounds);
  return stmt(std::move(n));
}

stmt stmt::store(std::string func, std::optional<int> stage, std::optional<int> spec,
                 std::vector<expr> index, expr rhs) {
  auto n = std::make_shared<stmt_node>();
  n->kind = stmt_kind::store;
  n->name = std::move(func);
  n->stage = stage;
  n->spec = spec;
  n->index = std::move(index);
  n->e = std::move(rhs);
  return stmt(std::move(n));
}

stmt stmt::if_branch(expr cond, stmt then_s, stmt else_s) {
  auto n = std::make_shared<stmt_node>();
  n->kind = stmt_kind::if_branch;
  n->e = std::move(cond);
  n->a = std::move(then_s);
  n->b = std::move(else_s);
  return stmt(std::move(n));
}

stmt stmt::for_loop(traversal t, std::string var, interval bounds, stmt body) {
  auto n = std::make_shared<stmt_node>();
  n->kind = stmt_kind::for_loop;
  n->trav = t;
  n->name = std::move(var);
  n->loop_bounds = std::move(bounds);
  n->a = std::move(body);
  return stmt(std::move(n));
}

stmt stmt::let_bind(std::string var, expr value, stmt body) {
  auto n = std::make_shared<stmt_node>();
  n->kind = stmt_kind::let_bind;
  n->name = std::move(var);
  n->e = std::move(value);
  n->a = std::move(body);
  return stmt(std::move(n));
}

stmt stmt::labeled(label_id l, stmt body) {
  auto n = std::make_shared<stmt_node>();
  n->kind = stmt_kind::labeled;
  n->label = std::move(l);
  n->a = std::move(body);
  return stmt(std::move(n));
}

stmt_kind stmt::kind() const { return node_->kind; }
const expr& stmt::cond() const { return node_->e; }
const expr& stmt::let_value() const { return node_->e; }
const expr& stmt::store_rhs() const { return node_->e; }
const std::string& stmt::name() const { return node_->name; }
std::optional<int> stmt::store_stage() const { return node_->stage; }
std::optional<int> stmt::store_spec() const { return node_->spec; }
const std::vector<expr>& stmt::store_index() const { return node_->index; }
const std::vector<interval>& stmt::alloc_bounds() const { return node_->bounds; }
const interval& stmt::loop_bounds() const { return node_->loop_bounds; }
traversal stmt::loop_traversal() const { return node_->trav; }
const label_id& stmt::label() const { return node_->label; }
const stmt& stmt::first() const { return node_->a; }
const stmt& stmt::second() const { return node_->b; }

stmt seq_of(std::vector<stmt> stmts) {
  stmt out;
  for (auto it = stmts.rbegin(); it != stmts.rend(); ++it) {
    if (!it->defined()) continue;
    out = out.defined() ? stmt::seq(*it, out) : *it;
  }
  return out.defined() ? out : stmt::nop();
}

std::vector<stmt> flatten_seq(const stmt& s) {
  std::vector<stmt> out;
  std::function<void(const stmt&)> walk = [&](const stmt& n) {
    if (!n.defined()) return;
    if (n.kind() == stmt_kind::seq) {
      walk(n.first());
      walk(n.second());
    } else {
      out.push_back(n);
    }
  };
  walk(s);
  return out;
}

void visit_stmts(const stmt& s, const std::function<void(const stmt&)>& fn) {
  if (!s.defined()) return;
  fn(s);
  switch (s.kind()) {
  case stmt_kind::seq:
  case stmt_kind::if_branch:
    visit_stmts(s.first(), fn);
    visit_stmts(s.second(), fn);
    break;
  case stmt_kind::for_loop:
  case stmt_kind::let_bind:
  case stmt_kind::labeled: visit_stmts(s.first(), fn); break;
  default: break;
  }
}

void visit_stmt_exprs(const stmt& s, const std::function<void(const expr&)>& fn) {
  visit_stmts(s, [&](const stmt& n) {
    switch (n.kind()) {
    case stmt_kind::assert_check:
    case stmt_kind::if_branch: fn(n.cond()); break;
    case stmt_kind::let_bind: fn(n.let_value()); break;
    case stmt_kind::store:
      for (const expr& e : n.store_index()) fn(e);
      fn(n.store_rhs());
      break;
    case stmt_kind::alloc:
      for (const interval& i : n.alloc_bounds()) {
        fn(i.min);
        fn(i.len);
      }
      break;
    case stmt_kind::for_loop:
      fn(n.loop_bounds().min);
      fn(n.loop_bounds().len);
      break;
    default: break;
    }
  });
}

stmt rewrite_stmt_exprs(const stmt& s, const std::function<expr(const expr&)>& fn) {
  if (!s.defined()) return s;
  auto rw = [&](const expr& e) { return rewrite_exprs(e, fn); };
  switch (s.kind()) {
  case stmt_kind::nop: return s;
  case stmt_kind::assert_check: return stmt::assert_check(rw(s.cond()));
  case stmt_kind::seq:
    return stmt::seq(rewrite_stmt_exprs(s.first(), fn), rewrite_stmt_exprs(s.second(), fn));
  case stmt_kind::alloc: {
    std::vector<interval> bounds;
    for (const interval& i : s.alloc_bounds()) bounds.push_back({rw(i.min), rw(i.len)});
    return stmt::alloc(s.name(), std::move(bounds));
  }
  case stmt_kind::store: {
    std::vector<expr> idx;
    for (const expr& e : s.store_index()) idx.push_back(rw(e));
    return stmt::store(s.name(), s.store_stage(), s.store_spec(), std::move(idx),
                       rw(s.store_rhs()));
  }
  case stmt_kind::if_branch:
    return stmt::if_branch(rw(s.cond()), rewrite_stmt_exprs(s.first(), fn),
                           rewrite_stmt_exprs(s.second(), fn));
  case stmt_kind::for_loop:
    return stmt::for_loop(s.loop_traversal(), s.name(),
                          {rw(s.loop_bounds().min), rw(s.loop_bounds().len)},
                          rewrite_stmt_exprs(s.first(), fn));
  case stmt_kind::let_bind:
    return stmt::let_bind(s.name(), rw(s.let_value()), rewrite_stmt_exprs(s.first(), fn));
  case stmt_kind::labeled: return stmt::labeled(s.label(), rewrite_stmt_exprs(s.first(), fn));
  }
  return s;
}

std::vector<std::string> tgt_program::all_params() const {
  std::vector<std::string> out = params;
  out.insert(out.end(), window_params.begin(), window_params.end());
  return out;
}

int tgt_program::last_stage(const std::string& func) const {
  auto it = funcs.find(func);
  return it == funcs.end() ? 0 : it->second.stage_count - 1;
}

bool program_has_holes(const tgt_program& p) {
  bool found = false;
  visit_stmt_exprs(p.body, [&](const expr& e) { found = found || contains_hole(e); });
  return found;
}

hole_id resolve_cpu_hole(const tgt_program& p, const std::string& func, const std::string& dim,
                         std::optional<int> stage, std::optional<int> spec) {
  auto it = p.funcs.find(func);
  assert(it != p.funcs.end());
  const tgt_program::func_info& info = it->second;
  int last = info.stage_count - 1;
  int s = stage ? *stage : last;
  assert(s >= 0 && s <= last);
  for (int k = s; k >= 0; --k) {
    if (static_cast<int>(info.stage_dims.size()) > k && info.stage_dims[k].count(dim)) {
      if (k == last) return hole_id{hole_kind::cpu, func, dim, std::nullopt, std::nullopt};
      // Holes delegated down from the shared last stage must themselves be
      // shared; specialization is restricted to funcs whose last stage lowers
      // every dimension, so a specialized delegation target keeps its spec.
      std::optional<int> use_spec = spec;
      if (!stage || *stage == last) {
        assert(info.specs.empty());
        use_spec = std::nullopt;
      }
      return hole_id{hole_kind::cpu, func, dim, k, use_spec};
    }
  }
  assert(false && "stage 0 lowers every dimension");
  return hole_id{hole_kind::cpu, func, dim, std::nullopt, std::nullopt};
}

std::vector<diagnostic> check_shadowing(const tgt_program& p) {
  std::vector<diagnostic> out;
  std::set<std::string> scope;
  for (const std::string& s : p.params) scope.insert(s);
  for (const std::string& s : p.window_params) scope.insert(s);
  std::function<void(const stmt&)> walk = [&](const stmt& s) {
    if (!s.defined()) return;
    switch (s.kind()) {
    case stmt_kind::for_loop:
    case stmt_kind::let_bind: {
      if (scope.count(s.name())) {
        out.push_back({"shadowing", "variable '" + s.name() + "' shadows an outer binding"});
      }
      scope.insert(s.name());
      walk(s.first());
      scope.erase(s.name());
      break;
    }
    case stmt_kind::seq:
    case stmt_kind::if_branch:
      walk(s.first());
      walk(s.second());
      break;
    case stmt_kind::labeled: walk(s.first()); break;
    default: break;
    }
  };
  walk(p.body);
  return out;
}

std::vector<diagnostic> validate_ir(const tgt_program& p) {
  std::vector<diagnostic> out;
  if (program_has_holes(p)) out.push_back({"no-holes", "program contains bounds holes"});
  for (diagnostic& d : check_shadowing(p)) out.push_back(std::move(d));
  return out;
}

long run_outcome::write_count(const std::string& func, const std::vector<integer>& point) const {
  long n = 0;
  for (const auto& [k, c] : writes) {
    if (std::get<0>(k) == func && std::get<1>(k) == point) n += c;
  }
  return n;
}

std::set<int> run_outcome::specs_written(const std::string& func) const {
  std::set<int> out;
  for (const auto& [k, c] : writes) {
    if (std::get<0>(k) == func && c > 0) out.insert(std::get<2>(k));
  }
  return out;
}

std::string to_string(run_outcome::kind_t k) {
  switch (k) {
  case run_outcome::kind_t::completed: return "completed";
  case run_outcome::kind_t::assert_failed: return "assert_failed";
  case run_outcome::kind_t::rdom_failed: return "rdom_failed";
  case run_outcome::kind_t::mem_error: return "mem_error";
  }
  return "?";
}

namespace {

// Renders an interval, collapsing a matched pair of hole parts back to the
// bare hole name.
std::string interval_str(const interval& i) {
  if (i.min.defined() && i.min.kind() == expr_kind::hole && i.len.kind() == expr_kind::hole &&
      i.min.part() == hole_part::min && i.len.part() == hole_part::len &&
      i.min.hole() == i.len.hole()) {
    return i.min.hole().name();
  }
  return to_string(i);
}

std::string access_head(const std::string& func, std::optional<int> stage,
                        std::optional<int> spec) {
  std::string s = func;
  if (stage) s += ".s" + std::to_string(*stage);
  if (spec) s += ".z" + std::to_string(*spec);
  return s;
}

void print_stmt(std::ostream& os, const stmt& s, int depth) {
  std::string ind(2 * depth, ' ');
  if (!s.defined()) return;
  switch (s.kind()) {
  case stmt_kind::nop: os << ind << "nop\n"; return;
  case stmt_kind::assert_check: os << ind << "assert " << to_string(s.cond()) << "\n"; return;
  case stmt_kind::seq:
    print_stmt(os, s.first(), depth);
    print_stmt(os, s.second(), depth);
    return;
  case stmt_kind::alloc: {
    os << ind << "allocate " << s.name() << "(";
    for (size_t i = 0; i < s.alloc_bounds().size(); ++i) {
      if (i) os << ", ";
      os << interval_str(s.alloc_bounds()[i]);
    }
    os << ")\n";
    return;
  }
  case stmt_kind::store: {
    os << ind << access_head(s.name(), s.store_stage(), s.store_spec()) << "[";
    for (size_t i = 0; i < s.store_index().size(); ++i) {
      if (i) os << ", ";
      os << to_string(s.store_index()[i]);
    }
    os << "] <- " << to_string(s.store_rhs()) << "\n";
    return;
  }
  case stmt_kind::if_branch:
    os << ind << "if " << to_string(s.cond()) << " then\n";
    print_stmt(os, s.first(), depth + 1);
    if (s.second().defined() && s.second().kind() != stmt_kind::nop) {
      os << ind << "else\n";
      print_stmt(os, s.second(), depth + 1);
    }
    return;
  case stmt_kind::for_loop:
    os << ind << (s.loop_traversal() == traversal::parallel ? "parallel for " : "for ")
       << s.name() << " in " << interval_str(s.loop_bounds()) << " do\n";
    print_stmt(os, s.first(), depth + 1);
    return;
  case stmt_kind::let_bind:
    os << ind << "let " << s.name() << " = " << to_string(s.let_value()) << " in\n";
    print_stmt(os, s.first(), depth + 1);
    return;
  case stmt_kind::labeled:
    os << ind << "label " << s.label().name() << ":\n";
    print_stmt(os, s.first(), depth + 1);
    return;
  }
}

}  // namespace

std::string to_string(const stmt& s) {
  std::ostringstream os;
  print_stmt(os, s, 0);
  return os.str();
}

std::string to_string(const tgt_program& p) {
  std::ostringstream os;
  os << "pipeline " << p.output << "(";
  std::vector<std::string> names = p.all_params();
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) os << ", ";
    os << names[i];
  }
  os << "):\n";
  print_stmt(os, p.body, 1);
  return os.str();
}

}  // namespace usl

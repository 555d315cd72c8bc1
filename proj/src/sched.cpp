#include "usl/sched.h"

#include "usl/lower.h"
#include "usl/simplify.h"

#include <cassert>
#include <sstream>

namespace usl {

std::string loop_name::str() const {
  std::string s = func;
  if (spec) s += ".z" + std::to_string(*spec);
  if (stage) s += ".s" + std::to_string(*stage);
  return s + "." + var;
}

directive directive::specialize(std::string func, std::vector<expr> conds) {
  directive d;
  d.kind = kind_t::specialize;
  d.func = std::move(func);
  d.conds = std::move(conds);
  return d;
}

directive directive::split(loop_name l, std::string outer, std::string inner, expr factor,
                           split_strategy s) {
  directive d;
  d.kind = kind_t::split;
  d.loop = std::move(l);
  d.outer = std::move(outer);
  d.inner = std::move(inner);
  d.factor = std::move(factor);
  d.strategy = s;
  return d;
}

directive directive::fuse(loop_name l, std::string fused) {
  directive d;
  d.kind = kind_t::fuse;
  d.loop = std::move(l);
  d.outer = std::move(fused);
  return d;
}

directive directive::swap_loops(loop_name l) {
  directive d;
  d.kind = kind_t::swap_loops;
  d.loop = std::move(l);
  return d;
}

directive directive::traverse(loop_name l, traversal t) {
  directive d;
  d.kind = kind_t::traverse;
  d.loop = std::move(l);
  d.trav = t;
  return d;
}

directive directive::compute_at(std::string func, loop_name l) {
  directive d;
  d.kind = kind_t::compute_at;
  d.func = std::move(func);
  d.loop = std::move(l);
  return d;
}

directive directive::store_at(std::string func, loop_name l) {
  directive d;
  d.kind = kind_t::store_at;
  d.func = std::move(func);
  d.loop = std::move(l);
  return d;
}

directive directive::bound(std::string func, std::string dim, expr mn, expr ln) {
  directive d;
  d.kind = kind_t::bound;
  d.func = std::move(func);
  d.dim = std::move(dim);
  d.arg0 = std::move(mn);
  d.arg1 = std::move(ln);
  return d;
}

directive directive::bound_extent(std::string func, std::string dim, expr ln) {
  directive d;
  d.kind = kind_t::bound_extent;
  d.func = std::move(func);
  d.dim = std::move(dim);
  d.arg0 = std::move(ln);
  return d;
}

directive directive::align_bounds(std::string func, std::string dim, expr mod, expr rem) {
  directive d;
  d.kind = kind_t::align_bounds;
  d.func = std::move(func);
  d.dim = std::move(dim);
  d.arg0 = std::move(mod);
  d.arg1 = std::move(rem);
  return d;
}

int directive_phase(const directive& d) {
  switch (d.kind) {
  case directive::kind_t::specialize: return 0;
  case directive::kind_t::split:
  case directive::kind_t::fuse:
  case directive::kind_t::swap_loops:
  case directive::kind_t::traverse: return 1;
  case directive::kind_t::compute_at: return 2;
  case directive::kind_t::store_at: return 3;
  default: return 4;
  }
}

std::string to_string(const directive& d) {
  std::ostringstream os;
  switch (d.kind) {
  case directive::kind_t::specialize:
    os << "specialize(" << d.func;
    for (const expr& e : d.conds) os << ", " << to_string(e);
    os << ")";
    break;
  case directive::kind_t::split:
    os << "split(" << d.loop.str() << ", " << d.outer << ", " << d.inner << ", "
       << to_string(d.factor) << ", "
       << (d.strategy == split_strategy::guard  ? "guard"
           : d.strategy == split_strategy::shift ? "shift"
                                                  : "round")
       << ")";
    break;
  case directive::kind_t::fuse: os << "fuse(" << d.loop.str() << ", " << d.outer << ")"; break;
  case directive::kind_t::swap_loops: os << "swap(" << d.loop.str() << ")"; break;
  case directive::kind_t::traverse:
    os << "traverse(" << d.loop.str() << ", "
       << (d.trav == traversal::parallel ? "parallel" : "serial") << ")";
    break;
  case directive::kind_t::compute_at:
    os << "compute-at(" << d.func << ", " << d.loop.str() << ")";
    break;
  case directive::kind_t::store_at:
    os << "store-at(" << d.func << ", " << d.loop.str() << ")";
    break;
  case directive::kind_t::bound:
    os << "bound(" << d.func << ", " << d.dim << ", " << to_string(d.arg0) << ", "
       << to_string(d.arg1) << ")";
    break;
  case directive::kind_t::bound_extent:
    os << "bound-extent(" << d.func << ", " << d.dim << ", " << to_string(d.arg0) << ")";
    break;
  case directive::kind_t::align_bounds:
    os << "align-bounds(" << d.func << ", " << d.dim << ", " << to_string(d.arg0) << ", "
       << to_string(d.arg1) << ")";
    break;
  }
  return os.str();
}

std::string to_string(const schedule& s) {
  std::string out;
  for (const directive& d : s) out += to_string(d) + "\n";
  return out;
}

namespace {

struct resolved_loop {
  std::string func;
  int spec = -1;
  int stage = -1;
  std::string var;
};

struct sched_error {
  diagnostic d;
};

[[noreturn]] void bail(const std::string& rule, const std::string& detail) {
  throw sched_error{{rule, detail}};
}

resolved_loop resolve_name(const tgt_program& p, const loop_name& ln) {
  auto it = p.funcs.find(ln.func);
  if (it == p.funcs.end()) bail("loop-name", "unknown func '" + ln.func + "'");
  const auto& info = it->second;
  resolved_loop r;
  r.func = ln.func;
  r.var = ln.var;
  if (ln.spec) {
    if (std::find(info.specs.begin(), info.specs.end(), *ln.spec) == info.specs.end()) {
      bail("loop-name", "func '" + ln.func + "' has no specialization z" +
                            std::to_string(*ln.spec));
    }
    r.spec = *ln.spec;
  } else {
    if (!info.specs.empty()) {
      bail("loop-name", "func '" + ln.func + "' is specialized; name the branch");
    }
    r.spec = -1;
  }
  r.stage = ln.stage ? *ln.stage : info.stage_count - 1;
  if (r.stage < 0 || r.stage >= info.stage_count) {
    bail("loop-name", "func '" + ln.func + "' has no stage s" + std::to_string(r.stage));
  }
  return r;
}

// Rewrites the unique loop named by target through fn; count reports matches.
stmt transform_loop(const stmt& s, const std::string& func, int spec, int stage,
                    const resolved_loop& target, const std::function<stmt(const stmt&)>& fn,
                    int& count) {
  if (!s.defined()) return s;
  switch (s.kind()) {
  case stmt_kind::seq:
    return stmt::seq(transform_loop(s.first(), func, spec, stage, target, fn, count),
                     transform_loop(s.second(), func, spec, stage, target, fn, count));
  case stmt_kind::if_branch:
    return stmt::if_branch(s.cond(),
                           transform_loop(s.first(), func, spec, stage, target, fn, count),
                           transform_loop(s.second(), func, spec, stage, target, fn, count));
  case stmt_kind::let_bind:
    return stmt::let_bind(s.name(), s.let_value(),
                          transform_loop(s.first(), func, spec, stage, target, fn, count));
  case stmt_kind::labeled: {
    const label_id& l = s.label();
    std::string f2 = func;
    int sp2 = spec, st2 = stage;
    if (l.kind == label_kind::func) {
      f2 = l.func;
      sp2 = -1;
      st2 = -1;
    } else if (l.kind == label_kind::spec) {
      sp2 = l.index;
    } else {
      st2 = l.index;
    }
    return stmt::labeled(l, transform_loop(s.first(), f2, sp2, st2, target, fn, count));
  }
  case stmt_kind::for_loop: {
    if (func == target.func && spec == target.spec && stage == target.stage &&
        s.name() == target.var) {
      ++count;
      return fn(s);
    }
    return stmt::for_loop(s.loop_traversal(), s.name(), s.loop_bounds(),
                          transform_loop(s.first(), func, spec, stage, target, fn, count));
  }
  default: return s;
  }
}

stmt transform_loop(const tgt_program& p, const resolved_loop& target,
                    const std::function<stmt(const stmt&)>& fn) {
  int count = 0;
  stmt out = transform_loop(p.body, "", -1, -1, target, fn, count);
  if (count == 0) {
    bail("loop-name", "no loop named <" + target.func + ", " + std::to_string(target.spec) +
                          ", " + std::to_string(target.stage) + ", " + target.var + ">");
  }
  if (count > 1) bail("loop-name", "loop name resolves to more than one loop");
  return out;
}

// Removes the unique statement matching pred; an undefined stmt marks the
// hole, which sequence nodes splice out.
stmt remove_matching(const stmt& s, const std::function<bool(const stmt&)>& pred, stmt& extracted,
                     bool& found) {
  if (!s.defined() || found) return s;
  if (pred(s)) {
    extracted = s;
    found = true;
    return stmt();
  }
  switch (s.kind()) {
  case stmt_kind::seq: {
    stmt a = remove_matching(s.first(), pred, extracted, found);
    stmt b = remove_matching(s.second(), pred, extracted, found);
    if (!a.defined()) return b;
    if (!b.defined()) return a;
    if (a.same_as(s.first()) && b.same_as(s.second())) return s;
    return stmt::seq(a, b);
  }
  case stmt_kind::if_branch: {
    stmt a = remove_matching(s.first(), pred, extracted, found);
    stmt b = remove_matching(s.second(), pred, extracted, found);
    if (a.same_as(s.first()) && b.same_as(s.second())) return s;
    return stmt::if_branch(s.cond(), a.defined() ? a : stmt::nop(),
                           b.defined() ? b : stmt::nop());
  }
  case stmt_kind::for_loop: {
    stmt body = remove_matching(s.first(), pred, extracted, found);
    if (body.same_as(s.first())) return s;
    return stmt::for_loop(s.loop_traversal(), s.name(), s.loop_bounds(),
                          body.defined() ? body : stmt::nop());
  }
  case stmt_kind::let_bind: {
    stmt body = remove_matching(s.first(), pred, extracted, found);
    if (body.same_as(s.first())) return s;
    return stmt::let_bind(s.name(), s.let_value(), body.defined() ? body : stmt::nop());
  }
  case stmt_kind::labeled: {
    stmt body = remove_matching(s.first(), pred, extracted, found);
    if (body.same_as(s.first())) return s;
    return stmt::labeled(s.label(), body.defined() ? body : stmt::nop());
  }
  default: return s;
  }
}

void collect_bound_names(const tgt_program& p, std::set<std::string>& names) {
  for (const std::string& s : p.params) names.insert(s);
  for (const std::string& s : p.window_params) names.insert(s);
  visit_stmts(p.body, [&](const stmt& s) {
    if (s.kind() == stmt_kind::for_loop || s.kind() == stmt_kind::let_bind) {
      names.insert(s.name());
    }
  });
}

void require_fresh(const tgt_program& p, std::initializer_list<std::string> names) {
  std::set<std::string> bound;
  collect_bound_names(p, bound);
  std::set<std::string> fresh;
  for (const std::string& n : names) {
    if (n.empty()) bail("fresh-names", "empty variable name");
    if (bound.count(n)) bail("fresh-names", "name '" + n + "' is already in use");
    if (!fresh.insert(n).second) bail("fresh-names", "name '" + n + "' used twice");
  }
}

void require_startup(const tgt_program& p, const expr& e, const std::string& what) {
  if (!e.defined() || !is_startup_expr(e, p.all_params())) {
    bail("startup-expr", what + " must be a startup expression over the parameters");
  }
}

// Pushes the rebinding wrappers past nested loops and lets. A header that
// mentions one of the variables being rebound stops the descent: the let from
// an earlier split of the same loop must stay in the new binding's scope.
stmt push_down(const stmt& s, const std::function<stmt(const stmt&)>& phi,
               const std::vector<std::string>& rebound) {
  auto mentions = [&](const expr& e) {
    for (const std::string& v : rebound) {
      if (contains_var(e, v)) return true;
    }
    return false;
  };
  if (s.defined() && s.kind() == stmt_kind::for_loop && !mentions(s.loop_bounds().min) &&
      !mentions(s.loop_bounds().len)) {
    return stmt::for_loop(s.loop_traversal(), s.name(), s.loop_bounds(),
                          push_down(s.first(), phi, rebound));
  }
  if (s.defined() && s.kind() == stmt_kind::let_bind && !mentions(s.let_value())) {
    return stmt::let_bind(s.name(), s.let_value(), push_down(s.first(), phi, rebound));
  }
  return phi(s);
}

void apply_split(tgt_program& p, const directive& d) {
  resolved_loop target = resolve_name(p, d.loop);
  require_fresh(p, {d.outer, d.inner});
  require_startup(p, d.factor, "split factor");
  expr factor = simplify(d.factor);
  // A nonpositive or input-dependent factor could leave the outer loop with
  // a negative extent at runtime, turning a valid schedule into an rdom
  // failure; demand a positive constant.
  if (!factor.is_const() || factor.const_value() <= 0) {
    bail("split-factor", "split factor must be a positive constant");
  }
  if (d.strategy != split_strategy::guard) {
    if (p.funcs.at(target.func).stage_count != 1) {
      bail("split-strategy", "shift and round apply only to single-stage funcs");
    }
  }

  bool pure = p.is_pure_loop(target.func, target.spec, target.stage, target.var);
  p.body = transform_loop(p, target, [&](const stmt& loop) {
    expr mn = loop.loop_bounds().min;
    expr ln = loop.loop_bounds().len;
    expr x_of_tile = expr::variable(d.inner) + factor * expr::variable(d.outer);
    std::function<stmt(const stmt&)> phi;
    switch (d.strategy) {
    case split_strategy::guard:
      phi = [&](const stmt& s) {
        return stmt::let_bind(d.loop.var, simplify(mn + x_of_tile),
                              stmt::if_branch(expr::variable(d.loop.var) < simplify(mn + ln), s,
                                              stmt::nop()));
      };
      break;
    case split_strategy::shift:
      phi = [&](const stmt& s) {
        expr shifted = mn + expr::variable(d.inner) +
                       min(factor * expr::variable(d.outer),
                           max(expr::constant(0), ln - factor));
        return stmt::let_bind(d.loop.var, simplify(shifted), s);
      };
      break;
    case split_strategy::round:
      phi = [&](const stmt& s) {
        return stmt::let_bind(d.loop.var, simplify(mn + x_of_tile), s);
      };
      break;
    }
    expr tiles = simplify((ln + factor - expr::constant(1)) / factor);
    return stmt::for_loop(
        loop.loop_traversal(), d.outer, {expr::constant(0), tiles},
        stmt::for_loop(loop.loop_traversal(), d.inner, {expr::constant(0), factor},
                       push_down(loop.first(), phi, {d.loop.var})));
  });

  p.pure_loops.erase({target.func, target.spec, target.stage, target.var});
  if (pure) {
    p.pure_loops.insert({target.func, target.spec, target.stage, d.outer});
    p.pure_loops.insert({target.func, target.spec, target.stage, d.inner});
  }
}

void apply_fuse(tgt_program& p, const directive& d) {
  resolved_loop target = resolve_name(p, d.loop);
  require_fresh(p, {d.outer});
  bool outer_pure = p.is_pure_loop(target.func, target.spec, target.stage, target.var);
  std::string inner_var;

  p.body = transform_loop(p, target, [&](const stmt& loop) {
    const stmt& in = loop.first();
    if (!in.defined() || in.kind() != stmt_kind::for_loop) {
      bail("fuse", "loop '" + d.loop.str() + "' has no immediately nested loop");
    }
    inner_var = in.name();
    bool inner_pure = p.is_pure_loop(target.func, target.spec, target.stage, in.name());
    if (outer_pure != inner_pure) {
      bail("fuse", "fused loops must both be pure or both be reduction loops");
    }
    expr mn1 = loop.loop_bounds().min, ln1 = loop.loop_bounds().len;
    expr mn2 = in.loop_bounds().min, ln2 = in.loop_bounds().len;
    expr y = expr::variable(d.outer);
    auto phi = [&](const stmt& s) {
      return stmt::let_bind(
          loop.name(), simplify(mn1 + y / ln2),
          stmt::let_bind(in.name(), simplify(mn2 + y % ln2), s));
    };
    return stmt::for_loop(loop.loop_traversal(), d.outer,
                          {expr::constant(0), simplify(ln1 * ln2)},
                          push_down(in.first(), phi, {loop.name(), in.name()}));
  });

  p.pure_loops.erase({target.func, target.spec, target.stage, target.var});
  p.pure_loops.erase({target.func, target.spec, target.stage, inner_var});
  if (outer_pure) p.pure_loops.insert({target.func, target.spec, target.stage, d.outer});
}

void apply_swap(tgt_program& p, const directive& d) {
  resolved_loop target = resolve_name(p, d.loop);
  bool outer_pure = p.is_pure_loop(target.func, target.spec, target.stage, target.var);
  p.body = transform_loop(p, target, [&](const stmt& loop) {
    const stmt& in = loop.first();
    if (!in.defined() || in.kind() != stmt_kind::for_loop) {
      bail("swap", "loop '" + d.loop.str() + "' has no immediately nested loop");
    }
    bool inner_pure = p.is_pure_loop(target.func, target.spec, target.stage, in.name());
    if (!outer_pure && !inner_pure) {
      bail("swap", "swap may not reorder two reduction loops");
    }
    if (contains_var(in.loop_bounds().min, loop.name()) ||
        contains_var(in.loop_bounds().len, loop.name())) {
      bail("swap", "inner loop bounds depend on the outer variable");
    }
    return stmt::for_loop(in.loop_traversal(), in.name(), in.loop_bounds(),
                          stmt::for_loop(loop.loop_traversal(), loop.name(), loop.loop_bounds(),
                                         in.first()));
  });
}

void apply_traverse(tgt_program& p, const directive& d) {
  resolved_loop target = resolve_name(p, d.loop);
  if (!p.is_pure_loop(target.func, target.spec, target.stage, target.var)) {
    bail("traverse", "traversal order applies only to pure loops");
  }
  p.body = transform_loop(p, target, [&](const stmt& loop) {
    return stmt::for_loop(d.trav, loop.name(), loop.loop_bounds(), loop.first());
  });
}

void apply_move(tgt_program& p, const directive& d, bool move_label) {
  if (!p.funcs.count(d.func)) bail("loop-name", "unknown func '" + d.func + "'");
  auto pred = [&](const stmt& s) {
    if (move_label) {
      return s.kind() == stmt_kind::labeled && s.label().kind == label_kind::func &&
             s.label().func == d.func;
    }
    return s.kind() == stmt_kind::alloc && s.name() == d.func;
  };
  stmt moved;
  bool found = false;
  stmt without = remove_matching(p.body, pred, moved, found);
  if (!found) {
    bail("loop-name", std::string(move_label ? "label" : "allocation") + " of '" + d.func +
                          "' not found");
  }

  tgt_program trial = p;
  trial.body = without;
  resolved_loop target = resolve_name(trial, d.loop);
  trial.body = transform_loop(trial, target, [&](const stmt& loop) {
    return stmt::for_loop(loop.loop_traversal(), loop.name(), loop.loop_bounds(),
                          stmt::seq(moved, loop.first()));
  });

  std::vector<diagnostic> broken = check_structure(trial);
  if (!broken.empty()) {
    bail("dominance", to_string(d) + " breaks a structural invariant: " + broken[0].detail);
  }
  std::vector<diagnostic> shadowed = check_shadowing(trial);
  if (!shadowed.empty()) {
    bail("fresh-names", to_string(d) + " would nest same-named loops: " + shadowed[0].detail);
  }
  p.body = trial.body;
}

// Inserts bound-phase assertions after any assertions already at the head of
// the func's label, keeping directive order.
void apply_asserts(tgt_program& p, const std::string& func, std::vector<stmt> asserts) {
  bool found = false;
  std::function<stmt(const stmt&)> walk = [&](const stmt& s) -> stmt {
    if (!s.defined() || found) return s;
    switch (s.kind()) {
    case stmt_kind::seq: {
      stmt a = walk(s.first());
      stmt b = found ? s.second() : walk(s.second());
      return a.same_as(s.first()) && b.same_as(s.second()) ? s : stmt::seq(a, b);
    }
    case stmt_kind::labeled: {
      if (s.label().kind == label_kind::func && s.label().func == func) {
        found = true;
        std::vector<stmt> parts = flatten_seq(s.first());
        size_t at = 0;
        while (at < parts.size() && parts[at].kind() == stmt_kind::assert_check) ++at;
        parts.insert(parts.begin() + at, asserts.begin(), asserts.end());
        return stmt::labeled(s.label(), seq_of(std::move(parts)));
      }
      stmt body = walk(s.first());
      return body.same_as(s.first()) ? s : stmt::labeled(s.label(), body);
    }
    case stmt_kind::if_branch: {
      stmt a = walk(s.first());
      stmt b = found ? s.second() : walk(s.second());
      return a.same_as(s.first()) && b.same_as(s.second()) ? s
                                                           : stmt::if_branch(s.cond(), a, b);
    }
    case stmt_kind::for_loop: {
      stmt body = walk(s.first());
      return body.same_as(s.first())
                 ? s
                 : stmt::for_loop(s.loop_traversal(), s.name(), s.loop_bounds(), body);
    }
    case stmt_kind::let_bind: {
      stmt body = walk(s.first());
      return body.same_as(s.first()) ? s : stmt::let_bind(s.name(), s.let_value(), body);
    }
    default: return s;
    }
  };
  stmt body = walk(p.body);
  if (!found) bail("loop-name", "label of '" + func + "' not found");
  p.body = body;
}

void check_bound_target(const tgt_program& p, const directive& d) {
  auto it = p.funcs.find(d.func);
  if (it == p.funcs.end()) bail("loop-name", "unknown func '" + d.func + "'");
  const auto& dims = it->second.dims;
  if (std::find(dims.begin(), dims.end(), d.dim) == dims.end()) {
    bail("loop-name", "func '" + d.func + "' has no dimension '" + d.dim + "'");
  }
}

void apply_bound(tgt_program& p, const directive& d) {
  check_bound_target(p, d);
  hole_id h = resolve_cpu_hole(p, d.func, d.dim, std::nullopt, std::nullopt);
  expr hmin = expr::hole_ref(h, hole_part::min);
  expr hlen = expr::hole_ref(h, hole_part::len);
  std::vector<stmt> asserts;
  switch (d.kind) {
  case directive::kind_t::bound:
    require_startup(p, d.arg0, "bound minimum");
    require_startup(p, d.arg1, "bound length");
    asserts.push_back(stmt::assert_check(equals(hmin, d.arg0) && equals(hlen, d.arg1)));
    break;
  case directive::kind_t::bound_extent:
    require_startup(p, d.arg0, "bound length");
    asserts.push_back(stmt::assert_check(equals(hlen, d.arg0)));
    break;
  case directive::kind_t::align_bounds:
    require_startup(p, d.arg0, "alignment modulus");
    require_startup(p, d.arg1, "alignment remainder");
    asserts.push_back(stmt::assert_check(equals(hmin % d.arg0, d.arg1)));
    asserts.push_back(stmt::assert_check(equals(hlen % d.arg0, expr::constant(0))));
    break;
  default: assert(false);
  }
  apply_asserts(p, d.func, std::move(asserts));
}

// Clones a specialization branch: self-references and stores carrying an
// explicit (non-final) stage, and the holes in their loop bounds, move to the
// branch's private holes. Final-stage labels stay shared.
expr spec_fix_expr(const expr& e, const std::string& func, int j) {
  if (!e.defined()) return e;
  switch (e.kind()) {
  case expr_kind::access: {
    std::vector<expr> idx;
    idx.reserve(e.args().size());
    for (const expr& a : e.args()) idx.push_back(spec_fix_expr(a, func, j));
    std::optional<int> spec = e.access_spec();
    if (e.name() == func && e.access_stage()) spec = j;
    return expr::access(e.name(), e.access_stage(), spec, std::move(idx));
  }
  case expr_kind::op: {
    std::vector<expr> args;
    args.reserve(e.args().size());
    for (const expr& a : e.args()) args.push_back(spec_fix_expr(a, func, j));
    return expr::make_op(e.op(), std::move(args));
  }
  case expr_kind::hole:
    if (e.hole().func == func && e.hole().kind == hole_kind::cpu && e.hole().stage) {
      hole_id h = e.hole();
      h.spec = j;
      return expr::hole_ref(h, e.part());
    }
    return e;
  default: return e;
  }
}

stmt spec_clone(const stmt& s, const std::string& func, int j) {
  if (!s.defined()) return s;
  auto fix_expr = [&](const expr& root) { return spec_fix_expr(root, func, j); };
  switch (s.kind()) {
  case stmt_kind::nop: return s;
  case stmt_kind::assert_check: return stmt::assert_check(fix_expr(s.cond()));
  case stmt_kind::seq: return stmt::seq(spec_clone(s.first(), func, j), spec_clone(s.second(), func, j));
  case stmt_kind::alloc: {
    std::vector<interval> bounds;
    for (const interval& i : s.alloc_bounds()) bounds.push_back({fix_expr(i.min), fix_expr(i.len)});
    return stmt::alloc(s.name(), std::move(bounds));
  }
  case stmt_kind::store: {
    std::vector<expr> idx;
    for (const expr& e : s.store_index()) idx.push_back(fix_expr(e));
    std::optional<int> spec = s.store_spec();
    if (s.name() == func && s.store_stage()) spec = j;
    return stmt::store(s.name(), s.store_stage(), spec, std::move(idx), fix_expr(s.store_rhs()));
  }
  case stmt_kind::if_branch:
    return stmt::if_branch(fix_expr(s.cond()), spec_clone(s.first(), func, j),
                           spec_clone(s.second(), func, j));
  case stmt_kind::for_loop:
    return stmt::for_loop(s.loop_traversal(), s.name(),
                          {fix_expr(s.loop_bounds().min), fix_expr(s.loop_bounds().len)},
                          spec_clone(s.first(), func, j));
  case stmt_kind::let_bind:
    return stmt::let_bind(s.name(), fix_expr(s.let_value()), spec_clone(s.first(), func, j));
  case stmt_kind::labeled: return stmt::labeled(s.label(), spec_clone(s.first(), func, j));
  }
  return s;
}

void apply_specialize(tgt_program& p, const directive& d) {
  auto it = p.funcs.find(d.func);
  if (it == p.funcs.end()) bail("loop-name", "unknown func '" + d.func + "'");
  tgt_program::func_info& info = it->second;
  if (!info.specs.empty()) bail("specialize", "func '" + d.func + "' is already specialized");
  if (d.conds.empty()) bail("specialize", "specialize needs at least one condition");
  for (const expr& e : d.conds) require_startup(p, e, "specialization condition");
  // The shared last-stage hole must govern every dimension; otherwise a
  // dimension would delegate to a branch-private hole that consumers cannot
  // name.
  std::set<std::string> all_dims(info.dims.begin(), info.dims.end());
  if (!info.stage_dims.empty() && info.stage_dims.back() != all_dims) {
    bail("specialize",
         "func '" + d.func + "' drops a pure dimension in its last stage; cannot specialize");
  }

  bool found = false;
  std::function<stmt(const stmt&)> walk = [&](const stmt& s) -> stmt {
    if (!s.defined() || found) return s;
    switch (s.kind()) {
    case stmt_kind::seq: {
      stmt a = walk(s.first());
      stmt b = found ? s.second() : walk(s.second());
      return stmt::seq(a, b);
    }
    case stmt_kind::labeled: {
      if (s.label().kind == label_kind::func && s.label().func == d.func) {
        found = true;
        int n = static_cast<int>(d.conds.size());
        stmt chain = stmt::labeled({label_kind::spec, "", 0}, spec_clone(s.first(), d.func, 0));
        for (int i = n - 1; i >= 0; --i) {
          chain = stmt::if_branch(
              d.conds[i],
              stmt::labeled({label_kind::spec, "", i + 1}, spec_clone(s.first(), d.func, i + 1)),
              chain);
        }
        return stmt::labeled(s.label(), chain);
      }
      return stmt::labeled(s.label(), walk(s.first()));
    }
    case stmt_kind::for_loop:
      return stmt::for_loop(s.loop_traversal(), s.name(), s.loop_bounds(), walk(s.first()));
    case stmt_kind::let_bind: return stmt::let_bind(s.name(), s.let_value(), walk(s.first()));
    case stmt_kind::if_branch: {
      stmt a = walk(s.first());
      stmt b = found ? s.second() : walk(s.second());
      return stmt::if_branch(s.cond(), a, b);
    }
    default: return s;
    }
  };
  stmt body = walk(p.body);
  if (!found) bail("loop-name", "label of '" + d.func + "' not found");
  p.body = body;

  std::vector<int> branches;
  for (int i = 1; i <= static_cast<int>(d.conds.size()); ++i) branches.push_back(i);
  branches.push_back(0);

  // Registry: branch-private copies of the staged cpu holes.
  std::vector<hole_id> holes;
  for (const hole_id& h : p.holes) {
    if (h.kind == hole_kind::cpu && h.func == d.func && h.stage) {
      for (int j : branches) {
        hole_id hj = h;
        hj.spec = j;
        holes.push_back(hj);
      }
    } else {
      holes.push_back(h);
    }
  }
  p.holes = std::move(holes);

  std::set<std::tuple<std::string, int, int, std::string>> pure;
  for (const auto& [func, spec, stage, var] : p.pure_loops) {
    if (func == d.func) {
      for (int j : branches) pure.insert({func, j, stage, var});
    } else {
      pure.insert({func, spec, stage, var});
    }
  }
  p.pure_loops = std::move(pure);
  info.specs = std::move(branches);
}

}  // namespace

tgt_program apply_directive(const tgt_program& p, const directive& d,
                            std::vector<diagnostic>& diags) {
  tgt_program out = p;
  try {
    switch (d.kind) {
    case directive::kind_t::specialize: apply_specialize(out, d); break;
    case directive::kind_t::split: apply_split(out, d); break;
    case directive::kind_t::fuse: apply_fuse(out, d); break;
    case directive::kind_t::swap_loops: apply_swap(out, d); break;
    case directive::kind_t::traverse: apply_traverse(out, d); break;
    case directive::kind_t::compute_at: apply_move(out, d, /*move_label=*/true); break;
    case directive::kind_t::store_at: apply_move(out, d, /*move_label=*/false); break;
    case directive::kind_t::bound:
    case directive::kind_t::bound_extent:
    case directive::kind_t::align_bounds: apply_bound(out, d); break;
    }
  } catch (const sched_error& e) {
    diags.push_back(e.d);
    return p;
  }
  return out;
}

tgt_program apply_schedule(const tgt_program& p, const schedule& s,
                           std::vector<diagnostic>& diags) {
  tgt_program cur = p;
  int phase = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    std::string at = "directive " + std::to_string(i) + " (" + to_string(s[i]) + ")";
    int dp = directive_phase(s[i]);
    if (dp < phase) {
      diags.push_back({"phase-order", at + " appears after a later phase"});
      return cur;
    }
    phase = dp;
    size_t before = diags.size();
    tgt_program next = apply_directive(cur, s[i], diags);
    if (diags.size() > before) {
      diags[before].detail = at + ": " + diags[before].detail;
      return cur;
    }
    std::vector<diagnostic> structure = check_structure(next);
    if (!structure.empty()) {
      diags.push_back({"structure", at + " broke an invariant: " + structure[0].detail});
      return cur;
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<diagnostic> validate_schedule(const tgt_program& p, const schedule& s) {
  std::vector<diagnostic> diags;
  apply_schedule(p, s, diags);
  return diags;
}

}  // namespace usl

#include "usl/generate.h"

#include "usl/lower.h"

#include <cassert>

namespace usl {

namespace {

long pick(std::mt19937_64& rng, long lo, long hi) {
  return lo + static_cast<long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

bool chance(std::mt19937_64& rng, int percent) { return pick(rng, 0, 99) < percent; }

template <typename T>
const T& choose(std::mt19937_64& rng, const std::vector<T>& from) {
  assert(!from.empty());
  return from[rng() % from.size()];
}

struct expr_gen {
  std::mt19937_64& rng;
  const pipeline& p;
  const fuzz_config& caps;
  // Funcs defined so far (accessible), with their arities.
  std::vector<std::pair<std::string, int>> callable;
  std::vector<std::string> vars;    // pure vars usable in this stage
  std::vector<std::string> rvars;   // reduction vars of this stage
  std::string self;                 // self-access target for update stages
  std::vector<int> self_free_dims;  // dims whose self index is unconstrained
  std::vector<std::string> self_pinned;  // per-dim pinned index (empty = free)

  expr leaf() {
    std::vector<expr> opts;
    opts.push_back(expr::constant(pick(rng, -3, 3)));
    for (const std::string& v : vars) opts.push_back(expr::variable(v));
    for (const std::string& v : rvars) opts.push_back(expr::variable(v));
    for (const std::string& v : p.params) opts.push_back(expr::variable(v));
    return choose(rng, opts);
  }

  expr index_expr(int depth) {
    if (depth <= 0 || chance(rng, 55)) return leaf();
    if (chance(rng, 12) && !callable.empty()) return access(depth - 1);  // data-dependent
    expr a = index_expr(depth - 1);
    expr b = index_expr(depth - 1);
    switch (pick(rng, 0, 3)) {
    case 0: return a + b;
    case 1: return a - b;
    case 2: return std::move(a) * expr::constant(pick(rng, -2, 2));
    default: return min(a, b);
    }
  }

  expr access(int depth) {
    const auto& [name, arity] = choose(rng, callable);
    std::vector<expr> idx;
    for (int d = 0; d < arity; ++d) idx.push_back(index_expr(std::min(depth, 2)));
    return expr::access(name, std::nullopt, std::nullopt, std::move(idx));
  }

  expr self_access() {
    std::vector<expr> idx;
    for (size_t d = 0; d < self_pinned.size(); ++d) {
      if (!self_pinned[d].empty()) {
        idx.push_back(expr::variable(self_pinned[d]));
      } else {
        // Unused dimensions may be indexed by anything but this func's own
        // pure variables.
        std::vector<expr> opts;
        opts.push_back(expr::constant(pick(rng, -2, 2)));
        for (const std::string& v : rvars) opts.push_back(expr::variable(v));
        for (const std::string& v : p.params) opts.push_back(expr::variable(v));
        idx.push_back(choose(rng, opts));
      }
    }
    return expr::access(self, std::nullopt, std::nullopt, std::move(idx));
  }

  expr gen(int depth) {
    if (depth <= 0 || chance(rng, 30)) {
      if (!callable.empty() && chance(rng, 35)) return access(depth);
      return leaf();
    }
    switch (pick(rng, 0, 9)) {
    case 0: return gen(depth - 1) + gen(depth - 1);
    case 1: return gen(depth - 1) - gen(depth - 1);
    case 2: return gen(depth - 1) * gen(depth - 1);
    case 3: return gen(depth - 1) / gen(depth - 1);
    case 4: return gen(depth - 1) % gen(depth - 1);
    case 5: return min(gen(depth - 1), gen(depth - 1));
    case 6: return max(gen(depth - 1), gen(depth - 1));
    case 7:
      return select(gen(depth - 1) < gen(depth - 1), gen(depth - 1), gen(depth - 1));
    case 8:
      if (!self.empty()) return self_access() + gen(depth - 1);
      return gen(depth - 1) + gen(depth - 1);
    default:
      return expr::make_op(chance(rng, 50) ? op_kind::lt : op_kind::eq,
                           {gen(depth - 1), gen(depth - 1)});
    }
  }

  // Startup expression for rdom bounds: constants, sometimes a parameter so
  // negative extents can occur at runtime.
  expr startup(long lo, long hi, int param_percent) {
    if (!p.params.empty() && chance(rng, param_percent)) {
      expr base = expr::variable(choose(rng, p.params));
      if (chance(rng, 50)) return base;
      return base + expr::constant(pick(rng, -1, 2));
    }
    return expr::constant(pick(rng, lo, hi));
  }
};

}  // namespace

pipeline generate_pipeline(std::mt19937_64& rng, const fuzz_config& caps) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    pipeline p;
    int nparams = static_cast<int>(pick(rng, 0, 2));
    for (int i = 1; i <= nparams; ++i) p.params.push_back("p" + std::to_string(i));
    int nfuncs = static_cast<int>(pick(rng, 1, caps.max_funcs));
    static const char* var_names[] = {"x", "y", "w"};

    for (int fi = 0; fi < nfuncs; ++fi) {
      func_def f;
      f.name = std::string(1, static_cast<char>('f' + fi));
      bool is_output = fi == nfuncs - 1;
      int dims = static_cast<int>(is_output ? pick(rng, 1, caps.max_dims)
                                            : pick(rng, 0, caps.max_dims));
      for (int d = 0; d < dims; ++d) f.vars.push_back(var_names[d]);

      expr_gen gen{rng, p, caps, {}, {}, {}, {}, {}, {}};
      for (int fj = 0; fj < fi; ++fj) {
        gen.callable.emplace_back(p.funcs[fj].name,
                                  static_cast<int>(p.funcs[fj].vars.size()));
      }

      // Pure stage: all dims in scope, usually referencing the previous func
      // so that bounds inference has something to determine.
      gen.vars = f.vars;
      expr rhs = gen.gen(static_cast<int>(pick(rng, 1, caps.max_expr_depth)));
      if (fi > 0 && chance(rng, 90)) {
        expr_gen forced = gen;
        forced.callable = {{p.funcs[fi - 1].name,
                            static_cast<int>(p.funcs[fi - 1].vars.size())}};
        rhs = rhs + forced.access(1);
      }
      f.stages.push_back(func_def::pure_stage(f.vars, rhs));

      int nstages = static_cast<int>(pick(rng, 1, caps.max_stages));
      for (int sj = 1; sj < nstages; ++sj) {
        stage s;
        // Choose which pure dimensions this stage uses.
        std::vector<int> used;
        for (int d = 0; d < dims; ++d) {
          if (chance(rng, 70)) used.push_back(d);
        }

        int nr = static_cast<int>(pick(rng, 0, 2));
        for (int r = 1; r <= nr; ++r) {
          std::string rv = "r" + std::to_string(r);
          interval bounds{expr_gen{rng, p, caps, {}, {}, {}, {}, {}, {}}.startup(-1, 2, 10),
                          expr_gen{rng, p, caps, {}, {}, {}, {}, {}, {}}.startup(
                              0, caps.max_rdom_extent, 12)};
          s.rdom.emplace_back(std::move(rv), std::move(bounds));
        }

        expr_gen ugen = gen;
        ugen.vars.clear();
        for (int d : used) ugen.vars.push_back(f.vars[d]);
        for (const auto& [rv, b] : s.rdom) ugen.rvars.push_back(rv);
        ugen.self = f.name;
        ugen.self_pinned.assign(dims, "");
        for (int d : used) ugen.self_pinned[d] = f.vars[d];

        // Left-hand side: pinned variables on used dims, free elsewhere.
        for (int d = 0; d < dims; ++d) {
          if (!ugen.self_pinned[d].empty()) {
            s.lhs.push_back(expr::variable(f.vars[d]));
          } else {
            s.lhs.push_back(ugen.index_expr(1));
          }
        }
        s.rhs = ugen.gen(static_cast<int>(pick(rng, 1, caps.max_expr_depth)));
        if (chance(rng, 50)) s.rhs = ugen.self_access() + s.rhs;
        s.predicate = chance(rng, 60) ? expr::constant(1)
                                      : expr::make_op(op_kind::lt,
                                                      {ugen.gen(1), ugen.gen(1)});
        f.stages.push_back(std::move(s));
      }
      p.funcs.push_back(std::move(f));
    }
    p.output = p.funcs.back().name;
    if (validate(p).empty()) return p;
  }
  assert(false && "pipeline generation failed to produce a valid program");
  return {};
}

std::vector<loop_desc> collect_loops(const tgt_program& p) {
  std::vector<loop_desc> out;
  std::function<void(const stmt&, std::string, int, int)> walk = [&](const stmt& s,
                                                                     std::string func, int spec,
                                                                     int stage) {
    if (!s.defined()) return;
    switch (s.kind()) {
    case stmt_kind::seq:
    case stmt_kind::if_branch:
      walk(s.first(), func, spec, stage);
      walk(s.second(), func, spec, stage);
      return;
    case stmt_kind::let_bind: walk(s.first(), func, spec, stage); return;
    case stmt_kind::labeled: {
      const label_id& l = s.label();
      if (l.kind == label_kind::func) {
        walk(s.first(), l.func, -1, -1);
      } else if (l.kind == label_kind::spec) {
        walk(s.first(), func, l.index, stage);
      } else {
        walk(s.first(), func, spec, l.index);
      }
      return;
    }
    case stmt_kind::for_loop: {
      loop_desc d;
      d.func = func;
      d.spec = spec;
      d.stage = stage;
      d.var = s.name();
      d.pure = p.is_pure_loop(func, spec, stage, s.name());
      if (s.first().defined() && s.first().kind() == stmt_kind::for_loop) {
        d.has_direct_inner = true;
        d.inner_var = s.first().name();
        d.inner_pure = p.is_pure_loop(func, spec, stage, s.first().name());
      }
      out.push_back(std::move(d));
      walk(s.first(), func, spec, stage);
      return;
    }
    default: return;
    }
  };
  walk(p.body, "", -1, -1);
  return out;
}

namespace {

expr startup_over(std::mt19937_64& rng, const tgt_program& t) {
  std::vector<std::string> names = t.all_params();
  if (names.empty() || chance(rng, 30)) return expr::constant(pick(rng, 0, 8));
  expr e = expr::variable(choose(rng, names));
  switch (pick(rng, 0, 2)) {
  case 0: return e;
  case 1: return e + expr::constant(pick(rng, -2, 2));
  default: return std::move(e) > expr::constant(pick(rng, -1, 4));
  }
}

}  // namespace

schedule generate_schedule(std::mt19937_64& rng, const tgt_program& lowered,
                           const fuzz_config& caps) {
  (void)caps;
  schedule out;
  tgt_program cur = lowered;
  int fresh = 0;
  auto fresh_name = [&]() { return "v" + std::to_string(fresh++); };

  auto try_apply = [&](const directive& d) {
    std::vector<diagnostic> diags;
    tgt_program next = apply_directive(cur, d, diags);
    if (!diags.empty() || !check_structure(next).empty()) return false;
    cur = std::move(next);
    out.push_back(d);
    return true;
  };

  std::vector<std::string> func_names;
  for (const auto& [name, info] : cur.funcs) func_names.push_back(name);

  // Specialization phase.
  if (chance(rng, 25)) {
    const std::string& f = choose(rng, func_names);
    std::vector<expr> conds;
    int n = static_cast<int>(pick(rng, 1, 2));
    for (int i = 0; i < n; ++i) conds.push_back(startup_over(rng, cur));
    try_apply(directive::specialize(f, std::move(conds)));
  }

  // Loop phase.
  int loop_directives = static_cast<int>(pick(rng, 0, 3));
  for (int i = 0; i < loop_directives; ++i) {
    std::vector<loop_desc> loops = collect_loops(cur);
    if (loops.empty()) break;
    const loop_desc& l = choose(rng, loops);
    switch (pick(rng, 0, 3)) {
    case 0: {
      split_strategy strategy = split_strategy::guard;
      if (cur.funcs.at(l.func).stage_count == 1 && chance(rng, 40)) {
        strategy = chance(rng, 50) ? split_strategy::shift : split_strategy::round;
      }
      try_apply(directive::split(l.name(), fresh_name(), fresh_name(),
                                 expr::constant(pick(rng, 1, 5)), strategy));
      break;
    }
    case 1:
      if (l.has_direct_inner && l.pure == l.inner_pure) {
        try_apply(directive::fuse(l.name(), fresh_name()));
      }
      break;
    case 2:
      if (l.has_direct_inner && (l.pure || l.inner_pure)) {
        try_apply(directive::swap_loops(l.name()));
      }
      break;
    default:
      if (l.pure) {
        try_apply(directive::traverse(l.name(), chance(rng, 70) ? traversal::parallel
                                                                : traversal::serial));
      }
      break;
    }
  }

  // Compute phase, then storage phase for the funcs that moved.
  std::vector<std::pair<std::string, loop_name>> moved;
  for (const std::string& f : func_names) {
    if (f == cur.output || !chance(rng, 50)) continue;
    std::vector<loop_desc> loops = collect_loops(cur);
    for (int attempt = 0; attempt < 3 && !loops.empty(); ++attempt) {
      const loop_desc& l = choose(rng, loops);
      if (l.func == f) continue;
      if (try_apply(directive::compute_at(f, l.name()))) {
        moved.emplace_back(f, l.name());
        break;
      }
    }
  }
  for (const auto& [f, at] : moved) {
    if (chance(rng, 60)) try_apply(directive::store_at(f, at));
  }

  // Bounds phase.
  if (chance(rng, 30)) {
    const std::string& f = choose(rng, func_names);
    const auto& dims = cur.funcs.at(f).dims;
    if (!dims.empty()) {
      const std::string& d = choose(rng, dims);
      switch (pick(rng, 0, 2)) {
      case 0:
        try_apply(directive::bound_extent(f, d, expr::constant(pick(rng, 0, 8))));
        break;
      case 1:
        try_apply(directive::align_bounds(f, d, expr::constant(pick(rng, 2, 4)),
                                          expr::constant(pick(rng, 0, 1))));
        break;
      default:
        try_apply(directive::bound(f, d, expr::constant(pick(rng, -2, 2)),
                                   expr::constant(pick(rng, 0, 8))));
        break;
      }
    }
  }
  return out;
}

realize_input generate_input(std::mt19937_64& rng, const pipeline& p, const fuzz_config& caps) {
  realize_input z;
  for (size_t i = 0; i < p.params.size(); ++i) {
    z.param_values.push_back(integer(pick(rng, -4, 4)));
  }
  for (size_t d = 0; d < p.funcs.back().vars.size(); ++d) {
    z.window.push_back({integer(pick(rng, -2, 2)),
                        integer(chance(rng, 8) ? 0 : pick(rng, 1, caps.max_window_len))});
  }
  return z;
}

}  // namespace usl

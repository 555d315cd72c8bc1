#include "usl/lower.h"

#include <cassert>

namespace usl {

namespace {

interval hole_interval(const hole_id& h) {
  return {expr::hole_ref(h, hole_part::min), expr::hole_ref(h, hole_part::len)};
}

}  // namespace

tgt_program lower(const pipeline& p) {
  assert(validate(p).empty());
  tgt_program out;
  out.output = p.output;
  out.params = p.params;
  const func_def& output_func = p.funcs.back();
  for (const std::string& v : output_func.vars) {
    out.window_params.push_back(v + "_min");
    out.window_params.push_back(v + "_len");
  }

  std::vector<stmt> top;
  for (const func_def& f : p.funcs) {
    int last = static_cast<int>(f.stages.size()) - 1;
    auto pure_dims = classify_dims(f);

    tgt_program::func_info info;
    info.dims = f.vars;
    info.stage_count = static_cast<int>(f.stages.size());

    std::vector<interval> alloc_bounds;
    for (const std::string& v : f.vars) {
      hole_id h{hole_kind::mem, f.name, v, std::nullopt, std::nullopt};
      out.holes.push_back(h);
      alloc_bounds.push_back(hole_interval(h));
    }
    top.push_back(stmt::alloc(f.name, std::move(alloc_bounds)));

    std::vector<stmt> stage_stmts;
    for (int i = 0; i <= last; ++i) {
      const stage& s = f.stages[i];
      std::optional<int> stage_label = i == last ? std::nullopt : std::optional<int>(i);

      stmt body = stmt::if_branch(s.predicate,
                                  stmt::store(f.name, stage_label, std::nullopt, s.lhs, s.rhs),
                                  stmt::nop());

      // Reduction loops, first variable innermost.
      for (const auto& [rv, bounds] : s.rdom) {
        body = stmt::for_loop(traversal::serial, rv, bounds, body);
      }

      // Pure loops over compute holes, first dimension innermost.
      std::set<std::string> lowered;
      for (size_t d = 0; d < f.vars.size(); ++d) {
        if (!pure_dims[i].count(static_cast<int>(d))) continue;
        hole_id h{hole_kind::cpu, f.name, f.vars[d], stage_label, std::nullopt};
        out.holes.push_back(h);
        body = stmt::for_loop(traversal::serial, f.vars[d], hole_interval(h), body);
        lowered.insert(f.vars[d]);
        out.pure_loops.insert({f.name, -1, i, f.vars[d]});
      }
      info.stage_dims.push_back(std::move(lowered));

      // Self-references read the previous stage.
      if (i > 0) {
        body = rewrite_stmt_exprs(body, [&](const expr& e) {
          if (e.kind() == expr_kind::access && e.name() == f.name && !e.access_stage()) {
            std::vector<expr> idx = e.args();
            return expr::access(f.name, i - 1, std::nullopt, std::move(idx));
          }
          return expr();
        });
      }

      stage_stmts.push_back(stmt::labeled({label_kind::stage, "", i}, body));
    }
    top.push_back(stmt::labeled({label_kind::func, f.name, 0}, seq_of(std::move(stage_stmts))));
    out.funcs[f.name] = std::move(info);
  }
  out.body = seq_of(std::move(top));
  return out;
}

namespace {

struct structure_checker {
  const tgt_program& p;
  std::vector<diagnostic> diags;

  std::set<std::tuple<std::string, int, int, std::string>> loop_names;
  std::set<std::string> seen_func_labels;

  struct facts {
    std::set<std::string> allocated;
    std::set<std::string> completed;  // label statement fully executed
  };
  std::vector<std::string> label_stack;

  void fail(const std::string& rule, const std::string& detail) {
    diags.push_back({rule, detail});
  }

  bool in_label(const std::string& func) const {
    return std::find(label_stack.begin(), label_stack.end(), func) != label_stack.end();
  }

  void check_reads(const expr& e, const facts& f) {
    visit_exprs(e, [&](const expr& n) {
      if (n.kind() != expr_kind::access) return;
      if (!f.allocated.count(n.name())) {
        fail("dominance", "read of '" + n.name() + "' before its allocation");
      }
      if (!in_label(n.name()) && !f.completed.count(n.name())) {
        fail("dominance", "read of '" + n.name() + "' not dominated by its label");
      }
    });
  }

  // Walks in execution order tracking what has definitely executed. Facts
  // established inside a loop body do not survive it (the loop may run zero
  // times); branches contribute the intersection of their gains.
  void walk(const stmt& s, facts& f, const std::string& func, int spec, int stage) {
    if (!s.defined()) return;
    switch (s.kind()) {
    case stmt_kind::nop: return;
    case stmt_kind::seq:
      walk(s.first(), f, func, spec, stage);
      walk(s.second(), f, func, spec, stage);
      return;
    case stmt_kind::assert_check: check_reads(s.cond(), f); return;
    case stmt_kind::alloc:
      for (const interval& i : s.alloc_bounds()) {
        check_reads(i.min, f);
        check_reads(i.len, f);
      }
      f.allocated.insert(s.name());
      return;
    case stmt_kind::store:
      check_reads(s.store_rhs(), f);
      for (const expr& e : s.store_index()) check_reads(e, f);
      if (!f.allocated.count(s.name())) {
        fail("dominance", "store to '" + s.name() + "' before its allocation");
      }
      return;
    case stmt_kind::if_branch: {
      check_reads(s.cond(), f);
      facts ft = f, fe = f;
      walk(s.first(), ft, func, spec, stage);
      walk(s.second(), fe, func, spec, stage);
      f = facts{};
      std::set_intersection(ft.allocated.begin(), ft.allocated.end(), fe.allocated.begin(),
                            fe.allocated.end(), std::inserter(f.allocated, f.allocated.end()));
      std::set_intersection(ft.completed.begin(), ft.completed.end(), fe.completed.begin(),
                            fe.completed.end(), std::inserter(f.completed, f.completed.end()));
      return;
    }
    case stmt_kind::for_loop: {
      check_reads(s.loop_bounds().min, f);
      check_reads(s.loop_bounds().len, f);
      auto key = std::make_tuple(func, spec, stage, s.name());
      if (!loop_names.insert(key).second) {
        fail("loop-naming", "duplicate loop <" + func + ", " +
                                (spec < 0 ? "-" : "z" + std::to_string(spec)) + ", " +
                                (stage < 0 ? "-" : "s" + std::to_string(stage)) + ", " +
                                s.name() + ">");
      }
      facts body = f;
      walk(s.first(), body, func, spec, stage);
      return;  // f unchanged: zero-trip loops establish nothing
    }
    case stmt_kind::let_bind:
      check_reads(s.let_value(), f);
      walk(s.first(), f, func, spec, stage);
      return;
    case stmt_kind::labeled: {
      const label_id& l = s.label();
      if (l.kind == label_kind::func) {
        if (!seen_func_labels.insert(l.func).second) {
          fail("loop-naming", "duplicate label '" + l.func + "'");
        }
        if (!f.allocated.count(l.func)) {
          fail("dominance", "allocation of '" + l.func + "' does not dominate its label");
        }
        label_stack.push_back(l.func);
        walk(s.first(), f, l.func, -1, -1);
        label_stack.pop_back();
        f.completed.insert(l.func);
      } else if (l.kind == label_kind::spec) {
        walk(s.first(), f, func, l.index, stage);
      } else {
        walk(s.first(), f, func, spec, l.index);
      }
      return;
    }
    }
  }
};

}  // namespace

std::vector<diagnostic> check_structure(const tgt_program& p) {
  structure_checker c{p, {}, {}, {}, {}};
  structure_checker::facts f;
  c.walk(p.body, f, "", -1, -1);
  return std::move(c.diags);
}

}  // namespace usl

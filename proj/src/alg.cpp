#include "usl/alg.h"

#include <algorithm>
#include <sstream>

namespace usl {

stage func_def::pure_stage(const std::vector<std::string>& vars, expr rhs) {
  stage s;
  for (const std::string& v : vars) s.lhs.push_back(expr::variable(v));
  s.rhs = std::move(rhs);
  s.predicate = expr::constant(1);
  return s;
}

const func_def* pipeline::find(const std::string& name) const {
  for (const func_def& f : funcs) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

int pipeline::func_index(const std::string& name) const {
  for (size_t i = 0; i < funcs.size(); ++i) {
    if (funcs[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::string to_string(const std::vector<diagnostic>& diags) {
  std::ostringstream os;
  for (const diagnostic& d : diags) os << d.rule << ": " << d.detail << "\n";
  return os.str();
}

namespace {

bool occurs_in_stage(const stage& s, const std::string& var) {
  for (const expr& e : s.lhs) {
    if (contains_var(e, var)) return true;
  }
  return contains_var(s.rhs, var) || contains_var(s.predicate, var);
}

void each_stage_expr(const stage& s, const std::function<void(const expr&)>& fn) {
  for (const expr& e : s.lhs) fn(e);
  fn(s.rhs);
  fn(s.predicate);
}

}  // namespace

std::vector<diagnostic> validate(const pipeline& p) {
  std::vector<diagnostic> out;
  auto fail = [&](const std::string& rule, const std::string& detail) {
    out.push_back({rule, detail});
  };

  if (p.funcs.empty()) {
    fail("output-func", "pipeline has no funcs");
    return out;
  }
  if (p.funcs.back().name != p.output) {
    fail("output-func", "output '" + p.output + "' is not the last func defined");
  }

  std::set<std::string> param_set(p.params.begin(), p.params.end());
  if (param_set.size() != p.params.size()) fail("unique-names", "duplicate parameter name");

  // Window parameter names are appended to the signature by lowering; a user
  // parameter with one of those names would collide.
  for (const std::string& v : p.funcs.back().vars) {
    for (const char* suffix : {"_min", "_len"}) {
      if (param_set.count(v + suffix)) {
        fail("unique-names", "parameter '" + v + suffix + "' collides with a window parameter");
      }
    }
  }

  std::set<std::string> seen_funcs;
  std::map<std::string, size_t> arity;
  for (size_t fi = 0; fi < p.funcs.size(); ++fi) {
    const func_def& f = p.funcs[fi];
    const std::string where = "func '" + f.name + "'";
    if (!seen_funcs.insert(f.name).second) fail("unique-names", "duplicate " + where);

    std::set<std::string> var_set(f.vars.begin(), f.vars.end());
    if (var_set.size() != f.vars.size()) fail("unique-names", "duplicate pure variable in " + where);
    for (const std::string& v : f.vars) {
      if (param_set.count(v)) fail("unique-names", "pure variable '" + v + "' shadows a parameter");
    }

    if (f.stages.empty()) {
      fail("pure-first-stage", where + " has no stages");
      continue;
    }

    for (size_t si = 0; si < f.stages.size(); ++si) {
      const stage& s = f.stages[si];
      const std::string at = where + " stage " + std::to_string(si);

      std::set<std::string> rvar_set;
      for (const auto& [rv, bounds] : s.rdom) {
        if (!rvar_set.insert(rv).second) fail("unique-names", "duplicate rvar '" + rv + "' in " + at);
        if (var_set.count(rv) || param_set.count(rv)) {
          fail("unique-names", "rvar '" + rv + "' shadows another name in " + at);
        }
        if (!is_startup_expr(bounds.min, p.params) || !is_startup_expr(bounds.len, p.params)) {
          fail("startup-rdom-bounds", "rdom bounds of '" + rv + "' in " + at +
                                          " are not startup expressions");
        }
      }

      if (s.lhs.size() != f.vars.size()) {
        fail("arity", at + " writes " + std::to_string(s.lhs.size()) + " of " +
                          std::to_string(f.vars.size()) + " dimensions");
      }

      if (si == 0) {
        if (!s.rdom.empty()) fail("pure-first-stage", at + " has a reduction domain");
        for (size_t d = 0; d < s.lhs.size() && d < f.vars.size(); ++d) {
          if (!equal(s.lhs[d], expr::variable(f.vars[d]))) {
            fail("pure-first-stage", at + " left-hand side is not the pure variables");
          }
        }
        if (!s.predicate.is_const(1)) fail("pure-first-stage", at + " has a predicate");
        each_stage_expr(s, [&](const expr& root) {
          visit_exprs(root, [&](const expr& e) {
            if (e.kind() == expr_kind::access && e.name() == f.name) {
              fail("pure-first-stage", at + " references " + where + " itself");
            }
          });
        });
      }

      // Accesses: defined-before-use (self allowed past stage 0), arity, and
      // no labels or holes in algorithm expressions.
      each_stage_expr(s, [&](const expr& root) {
        visit_exprs(root, [&](const expr& e) {
          if (e.kind() == expr_kind::hole) fail("no-holes", at + " contains a bounds hole");
          if (e.kind() != expr_kind::access) return;
          if (e.access_stage() || e.access_spec()) {
            fail("no-labels", at + " has a labeled access");
          }
          if (e.name() == f.name) {
            if (e.args().size() != f.vars.size()) fail("arity", at + " self-access arity");
            return;
          }
          auto it = arity.find(e.name());
          if (it == arity.end()) {
            fail("definition-before-use", at + " references undefined func '" + e.name() + "'");
          } else if (e.args().size() != it->second) {
            fail("arity", at + " access to '" + e.name() + "' has arity " +
                              std::to_string(e.args().size()) + ", expected " +
                              std::to_string(it->second));
          }
        });
      });

      // Syntactic separation: a pure variable occurring anywhere in the stage
      // pins the matching coordinate of every self-access and of the lhs.
      for (size_t d = 0; d < f.vars.size(); ++d) {
        if (!occurs_in_stage(s, f.vars[d])) continue;
        expr xd = expr::variable(f.vars[d]);
        if (d < s.lhs.size() && !equal(s.lhs[d], xd)) {
          fail("separation", at + " writes dimension '" + f.vars[d] +
                                 "' with an expression other than the variable");
        }
        each_stage_expr(s, [&](const expr& root) {
          visit_exprs(root, [&](const expr& e) {
            if (e.kind() != expr_kind::access || e.name() != f.name) return;
            if (d < e.args().size() && !equal(e.args()[d], xd)) {
              fail("separation", at + " self-access is not '" + f.vars[d] +
                                     "' in dimension " + std::to_string(d));
            }
          });
        });
      }
    }
    arity[f.name] = f.vars.size();
  }
  return out;
}

std::vector<std::set<int>> classify_dims(const func_def& f) {
  std::vector<std::set<int>> pure_dims;
  pure_dims.reserve(f.stages.size());
  for (const stage& s : f.stages) {
    std::set<int> dims;
    for (size_t d = 0; d < f.vars.size(); ++d) {
      if (occurs_in_stage(s, f.vars[d])) dims.insert(static_cast<int>(d));
    }
    pure_dims.push_back(std::move(dims));
  }
  return pure_dims;
}

}  // namespace usl

#include "usl/alg.h"

#include <cassert>
#include <stdexcept>

namespace usl {

namespace {

// Evaluation state for one realization. Func values are computed pointwise by
// need. A state (func, stage j, step t) denotes the func after stages
// 0..j-1 and the first t unrolled updates of stage j; reduction domains are
// unrolled with their first variable changing fastest. Values are memoized
// per state and point, which is invisible because funcs are referentially
// transparent.
struct interp {
  const pipeline& p;
  bool memoize;
  long budget = 50000000;
  std::map<std::string, value> param_env;

  struct stage_info {
    std::vector<std::pair<std::string, integer>> rmin;  // rvar -> min
    std::vector<integer> rlen;
    integer steps = 1;  // product of extents, clamped at >= 0
  };
  // Indexed [func][stage].
  std::vector<std::vector<stage_info>> stages;
  std::vector<bool> bad_rdom;  // any stage extent negative, checked at startup

  using key = std::tuple<int, int, integer, std::vector<value>>;
  std::map<key, value> memo;

  explicit interp(const pipeline& p_, const realize_input& z, bool memoize_)
      : p(p_), memoize(memoize_) {
    if (z.param_values.size() != p.params.size()) {
      throw std::invalid_argument("parameter count mismatch");
    }
    for (size_t i = 0; i < p.params.size(); ++i) {
      param_env[p.params[i]] = value(z.param_values[i]);
    }

    stages.resize(p.funcs.size());
    bad_rdom.assign(p.funcs.size(), false);
    for (size_t fi = 0; fi < p.funcs.size(); ++fi) {
      for (const stage& s : p.funcs[fi].stages) {
        stage_info info;
        for (const auto& [rv, bounds] : s.rdom) {
          value mn = eval_expr(bounds.min, param_env, nullptr);
          value ln = eval_expr(bounds.len, param_env, nullptr);
          assert(mn.is_int() && ln.is_int());  // startup expressions are total
          if (ln.as_int() < 0) bad_rdom[fi] = true;
          info.rmin.emplace_back(rv, mn.as_int());
          info.rlen.push_back(ln.as_int());
          info.steps *= ln.as_int() < 0 ? integer(0) : ln.as_int();
        }
        stages[fi].push_back(std::move(info));
      }
    }
  }

  value func_value(int fi, const std::vector<value>& point) {
    const func_def& f = p.funcs[fi];
    if (point.size() != f.vars.size()) throw std::invalid_argument("access arity mismatch");
    if (bad_rdom[fi]) return value::rdom_error();
    int last = static_cast<int>(f.stages.size()) - 1;
    return state_value(fi, last, stages[fi][last].steps, point);
  }

  value state_value(int fi, int j, const integer& t, const std::vector<value>& point) {
    if (--budget < 0) throw resource_limit("algorithm evaluation budget exceeded");
    if (t == 0) {
      if (j == 0) return pure_value(fi, point);
      return state_value(fi, j - 1, stages[fi][j - 1].steps, point);
    }
    key k{fi, j, t, point};
    if (memoize) {
      auto it = memo.find(k);
      if (it != memo.end()) return it->second;
    }
    value out = update_value(fi, j, t, point);
    if (memoize) memo.emplace(std::move(k), out);
    return out;
  }

  value pure_value(int fi, const std::vector<value>& point) {
    const func_def& f = p.funcs[fi];
    std::map<std::string, value> env = param_env;
    for (size_t d = 0; d < f.vars.size(); ++d) env[f.vars[d]] = point[d];
    access_reader reader = [&](const std::string& callee, std::optional<int>, std::optional<int>,
                               const std::vector<value>& pt) {
      int ci = p.func_index(callee);
      assert(ci >= 0 && ci < fi);  // validity: no self or forward reference
      return func_value(ci, pt);
    };
    return eval_expr(f.stages[0].rhs, env, reader);
  }

  // The t-th unrolled update of stage j, evaluated as
  // select(lhs == point && predicate, rhs, previous value), with all parts
  // reading the previous state. Errors absorb through the select.
  value update_value(int fi, int j, const integer& t, const std::vector<value>& point) {
    const func_def& f = p.funcs[fi];
    const stage& s = f.stages[j];
    const stage_info& info = stages[fi][j];

    std::map<std::string, value> env = param_env;
    for (size_t d = 0; d < f.vars.size(); ++d) env[f.vars[d]] = point[d];
    integer idx = t - 1;
    for (size_t r = 0; r < info.rmin.size(); ++r) {
      // First reduction variable varies fastest.
      env[info.rmin[r].first] = value(info.rmin[r].second + idx % info.rlen[r]);
      idx /= info.rlen[r];
    }

    access_reader reader = [&](const std::string& callee, std::optional<int>, std::optional<int>,
                               const std::vector<value>& pt) {
      if (callee == f.name) return state_value(fi, j, t - 1, pt);
      int ci = p.func_index(callee);
      assert(ci >= 0 && ci < fi);
      return func_value(ci, pt);
    };

    value cond = eval_expr(s.predicate, env, reader);
    for (size_t d = 0; d < s.lhs.size(); ++d) {
      value at = eval_expr(s.lhs[d], env, reader);
      value eq = eval_op(op_kind::eq, std::vector<value>{at, point[d]});
      cond = eval_op(op_kind::logic_and, std::vector<value>{eq, cond});
    }
    value body = eval_expr(s.rhs, env, reader);
    value prev = state_value(fi, j, t - 1, point);
    return eval_op(op_kind::select, std::vector<value>{cond, body, prev});
  }
};

buffer_image realize_impl(const pipeline& p, const realize_input& z, bool memoize) {
  interp in(p, z, memoize);
  const func_def& out_func = p.funcs.back();
  if (z.window.size() != out_func.vars.size()) {
    throw std::invalid_argument("window dimension mismatch");
  }

  buffer_image img;
  img.dims = static_cast<int>(z.window.size());
  for (const const_interval& w : z.window) {
    if (w.len <= 0) return img;  // empty request
  }

  std::vector<integer> pt(z.window.size());
  for (size_t d = 0; d < z.window.size(); ++d) pt[d] = z.window[d].min;
  int fi = static_cast<int>(p.funcs.size()) - 1;
  while (true) {
    std::vector<value> vpt;
    vpt.reserve(pt.size());
    for (const integer& c : pt) vpt.push_back(value(c));
    img.points[pt] = in.func_value(fi, vpt);

    // Advance odometer, first dimension fastest.
    size_t d = 0;
    for (; d < pt.size(); ++d) {
      pt[d] += 1;
      if (pt[d] < z.window[d].min + z.window[d].len) break;
      pt[d] = z.window[d].min;
    }
    if (d == pt.size()) break;
  }
  return img;
}

}  // namespace

buffer_image realize(const pipeline& p, const realize_input& z) {
  return realize_impl(p, z, /*memoize=*/true);
}

buffer_image realize_unmemoized(const pipeline& p, const realize_input& z) {
  return realize_impl(p, z, /*memoize=*/false);
}

}  // namespace usl

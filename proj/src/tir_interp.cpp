#include "usl/tir.h"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace usl {

namespace {

struct buffer {
  std::vector<std::pair<value, value>> bounds;  // evaluated (min, len) per dim
  std::map<std::vector<integer>, value> data;   // written points only
};

struct stuck {
  run_outcome outcome;
};

struct interp {
  const tgt_program& p;
  run_options opts;
  long budget = 0;
  std::map<std::string, value> env;
  std::map<std::string, buffer> store;
  std::map<std::tuple<std::string, std::vector<integer>, int>, long> writes;
  int current_spec = -1;
  std::uint64_t parallel_entries = 0;

  [[noreturn]] void fail_assert(const std::string& site) {
    run_outcome o;
    o.kind = run_outcome::kind_t::assert_failed;
    o.site = site;
    throw stuck{std::move(o)};
  }

  [[noreturn]] void fail_rdom(const std::string& site) {
    run_outcome o;
    o.kind = run_outcome::kind_t::rdom_failed;
    o.site = site;
    throw stuck{std::move(o)};
  }

  [[noreturn]] void fail_mem(const std::string& func, const std::vector<value>& point,
                             const std::string& site) {
    run_outcome o;
    o.kind = run_outcome::kind_t::mem_error;
    o.fault_func = func;
    std::string pt = "(";
    for (size_t i = 0; i < point.size(); ++i) {
      if (i) pt += ", ";
      pt += to_string(point[i]);
    }
    o.fault_point = pt + ")";
    o.site = site;
    throw stuck{std::move(o)};
  }

  bool in_bounds(const buffer& b, const std::vector<value>& point) const {
    if (point.size() != b.bounds.size()) return false;
    for (size_t d = 0; d < point.size(); ++d) {
      const auto& [mn, ln] = b.bounds[d];
      if (!point[d].is_int() || !mn.is_int() || !ln.is_int()) return false;
      if (point[d].as_int() < mn.as_int() || point[d].as_int() >= mn.as_int() + ln.as_int()) {
        return false;
      }
    }
    return true;
  }

  value eval(const expr& e) {
    access_reader reader = [this](const std::string& func, std::optional<int>,
                                  std::optional<int>, const std::vector<value>& point) {
      auto it = store.find(func);
      if (it == store.end() || !in_bounds(it->second, point)) {
        fail_mem(func, point, "read " + func);
      }
      std::vector<integer> key;
      key.reserve(point.size());
      for (const value& v : point) key.push_back(v.as_int());
      auto vit = it->second.data.find(key);
      return vit == it->second.data.end() ? value::mem_error() : vit->second;
    };
    return eval_expr(e, env, reader);
  }

  void exec(const stmt& s) {
    if (--budget < 0) throw resource_limit("execution budget exceeded");
    if (!s.defined()) return;
    switch (s.kind()) {
    case stmt_kind::nop: return;
    case stmt_kind::seq:
      exec(s.first());
      exec(s.second());
      return;
    case stmt_kind::assert_check: {
      value c = eval(s.cond());
      // An error value is not truthy; the check fails closed.
      if (!c.truthy()) fail_assert("assert " + to_string(s.cond()));
      return;
    }
    case stmt_kind::alloc: {
      buffer b;
      for (const interval& i : s.alloc_bounds()) {
        b.bounds.emplace_back(eval(i.min), eval(i.len));
      }
      store[s.name()] = std::move(b);  // re-allocation resets to err_mem
      return;
    }
    case stmt_kind::store: {
      // Right-hand side first, then index coordinates left to right.
      value v = eval(s.store_rhs());
      std::vector<value> point;
      point.reserve(s.store_index().size());
      for (const expr& e : s.store_index()) point.push_back(eval(e));
      auto it = store.find(s.name());
      if (it == store.end() || !in_bounds(it->second, point)) {
        fail_mem(s.name(), point, "write " + s.name());
      }
      std::vector<integer> key;
      key.reserve(point.size());
      for (const value& c : point) key.push_back(c.as_int());
      it->second.data[key] = std::move(v);
      writes[{s.name(), std::move(key), current_spec}] += 1;
      return;
    }
    case stmt_kind::if_branch: {
      value c = eval(s.cond());
      if (c.truthy()) {
        exec(s.first());
      } else {
        exec(s.second());
      }
      return;
    }
    case stmt_kind::for_loop: {
      value mn = eval(s.loop_bounds().min);
      value ln = eval(s.loop_bounds().len);
      std::string site = "for " + s.name() + " in " + to_string(s.loop_bounds());
      if (!mn.is_int() || !ln.is_int() || ln.as_int() < 0) fail_rdom(site);
      const integer& len = ln.as_int();
      bool permute = opts.permute_seed && s.loop_traversal() == traversal::parallel && len > 1;
      if (len > 10000000) throw resource_limit("loop extent too large: " + site);
      long n = len.convert_to<long>();

      std::vector<long> order;
      if (permute) {
        order.resize(n);
        for (long i = 0; i < n; ++i) order[i] = i;
        std::mt19937_64 rng(*opts.permute_seed ^
                            (0x9e3779b97f4a7c15ull * ++parallel_entries));
        std::shuffle(order.begin(), order.end(), rng);
      }

      auto saved = env.find(s.name()) != env.end() ? std::optional<value>(env[s.name()])
                                                   : std::nullopt;
      for (long i = 0; i < n; ++i) {
        long k = permute ? order[i] : i;
        env[s.name()] = value(mn.as_int() + k);
        exec(s.first());
      }
      if (saved) {
        env[s.name()] = *saved;
      } else {
        env.erase(s.name());
      }
      return;
    }
    case stmt_kind::let_bind: {
      value v = eval(s.let_value());
      auto saved = env.find(s.name()) != env.end() ? std::optional<value>(env[s.name()])
                                                   : std::nullopt;
      env[s.name()] = std::move(v);
      exec(s.first());
      if (saved) {
        env[s.name()] = *saved;
      } else {
        env.erase(s.name());
      }
      return;
    }
    case stmt_kind::labeled: {
      int saved = current_spec;
      if (s.label().kind == label_kind::spec) {
        current_spec = s.label().index;
      } else if (s.label().kind == label_kind::func) {
        current_spec = -1;
      }
      exec(s.first());
      current_spec = saved;
      return;
    }
    }
  }
};

}  // namespace

run_outcome run(const tgt_program& p, const realize_input& z, const run_options& opts) {
  std::vector<diagnostic> diags = validate_ir(p);
  if (!diags.empty()) throw std::invalid_argument("invalid IR: " + to_string(diags));
  if (z.param_values.size() != p.params.size()) {
    throw std::invalid_argument("parameter count mismatch");
  }
  if (z.window.size() * 2 != p.window_params.size()) {
    throw std::invalid_argument("window dimension mismatch");
  }

  interp in{p, opts, opts.max_steps, {}, {}, {}, -1, 0};
  for (size_t i = 0; i < p.params.size(); ++i) {
    in.env[p.params[i]] = value(z.param_values[i]);
  }
  for (size_t d = 0; d < z.window.size(); ++d) {
    in.env[p.window_params[2 * d]] = value(z.window[d].min);
    in.env[p.window_params[2 * d + 1]] = value(z.window[d].len);
  }

  try {
    in.exec(p.body);
  } catch (const stuck& s) {
    run_outcome o = s.outcome;
    o.writes = std::move(in.writes);
    return o;
  }

  run_outcome o;
  o.kind = run_outcome::kind_t::completed;
  o.writes = std::move(in.writes);
  for (auto& [name, buf] : in.store) {
    buffer_image img;
    img.dims = static_cast<int>(buf.bounds.size());
    img.points = std::move(buf.data);
    o.buffers[name] = std::move(img);
  }
  auto it = o.buffers.find(p.output);
  if (it != o.buffers.end()) o.output = it->second;
  return o;
}

run_outcome run_permuted(const tgt_program& p, const realize_input& z, std::uint64_t seed) {
  run_options opts;
  opts.permute_seed = seed;
  return run(p, z, opts);
}

}  // namespace usl

#include "usl/simplify.h"

#include <algorithm>
#include <cassert>
#include <map>
#include <vector>

namespace usl {

namespace {

int kind_rank(const expr& e) {
  switch (e.kind()) {
  case expr_kind::constant: return 0;
  case expr_kind::hole: return 1;  // hole parts lead canonical sums
  case expr_kind::variable: return 2;
  case expr_kind::access: return 3;
  case expr_kind::op: return 4;
  case expr_kind::neg_inf: return 5;
  case expr_kind::pos_inf: return 6;
  }
  return 7;
}

template <typename T>
int cmp3(const T& a, const T& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

}  // namespace

int compare(const expr& a, const expr& b) {
  if (a.same_as(b)) return 0;
  if (int c = cmp3(kind_rank(a), kind_rank(b))) return c;
  switch (a.kind()) {
  case expr_kind::constant: return cmp3(a.const_value(), b.const_value());
  case expr_kind::variable: return a.name().compare(b.name());
  case expr_kind::hole:
    if (int c = cmp3(a.hole(), b.hole())) return c;
    return cmp3(a.part(), b.part());
  case expr_kind::pos_inf:
  case expr_kind::neg_inf: return 0;
  case expr_kind::access:
    if (int c = a.name().compare(b.name())) return c;
    if (int c = cmp3(a.access_stage(), b.access_stage())) return c;
    if (int c = cmp3(a.access_spec(), b.access_spec())) return c;
    break;
  case expr_kind::op:
    if (int c = cmp3(a.op(), b.op())) return c;
    break;
  }
  if (int c = cmp3(a.args().size(), b.args().size())) return c;
  for (size_t i = 0; i < a.args().size(); ++i) {
    if (int c = compare(a.args()[i], b.args()[i])) return c;
  }
  return 0;
}

namespace {

struct expr_less {
  bool operator()(const expr& a, const expr& b) const { return compare(a, b) < 0; }
};

// Product of non-affine atoms. Sorted for canonical form; empty = 1.
using term = std::vector<expr>;

struct term_less {
  bool operator()(const term& a, const term& b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), expr_less());
  }
};

// Sum of coeff * term plus a constant. overflowed marks forms we refuse to
// normalize (too many terms); dropped_access marks a cancellation that would
// erase an access-containing term, which must not be folded away.
struct linear {
  std::map<term, integer, term_less> terms;
  integer constant = 0;
  bool overflowed = false;
  bool dropped_access = false;

  void add_term(term t, integer coeff) {
    if (coeff == 0 && !t.empty()) {
      // Multiplying an access by zero still propagates errors.
      for (const expr& a : t) {
        if (contains_access(a)) dropped_access = true;
      }
      if (!dropped_access) return;
    }
    auto [it, inserted] = terms.emplace(std::move(t), coeff);
    if (!inserted) {
      it->second += coeff;
      if (it->second == 0) {
        for (const expr& a : it->first) {
          if (contains_access(a)) dropped_access = true;
        }
        if (!dropped_access) terms.erase(it);
      }
    }
    if (terms.size() > 24) overflowed = true;
  }
};

struct simplifier;
expr simplified(const expr& e, simplifier& ctx);

// Early-exit size probe; shared subtrees count repeatedly, which is the
// point: the probe bounds the work a tree-walk would do.
bool within_budget(const expr& e, long& budget) {
  if (--budget < 0) return false;
  if (e.kind() == expr_kind::op || e.kind() == expr_kind::access) {
    for (const expr& a : e.args()) {
      if (!within_budget(a, budget)) return false;
    }
  }
  return true;
}

linear to_linear(const expr& e) {
  linear out;
  if (e.kind() == expr_kind::constant) {
    out.constant = e.const_value();
    return out;
  }
  if (e.kind() == expr_kind::op) {
    op_kind op = e.op();
    if (op == op_kind::add || op == op_kind::sub) {
      linear a = to_linear(e.args()[0]);
      linear b = to_linear(e.args()[1]);
      integer sign = op == op_kind::add ? 1 : -1;
      out = std::move(a);
      out.constant += sign * b.constant;
      out.overflowed = out.overflowed || b.overflowed;
      out.dropped_access = out.dropped_access || b.dropped_access;
      for (auto& [t, c] : b.terms) out.add_term(t, sign * c);
      return out;
    }
    if (op == op_kind::mul) {
      linear a = to_linear(e.args()[0]);
      linear b = to_linear(e.args()[1]);
      out.overflowed = a.overflowed || b.overflowed;
      out.dropped_access = a.dropped_access || b.dropped_access;
      if (a.terms.size() * b.terms.size() > 16) {
        out.overflowed = true;
        return out;
      }
      out.constant = a.constant * b.constant;
      for (auto& [ta, ca] : a.terms) out.add_term(ta, ca * b.constant);
      for (auto& [tb, cb] : b.terms) out.add_term(tb, cb * a.constant);
      for (auto& [ta, ca] : a.terms) {
        for (auto& [tb, cb] : b.terms) {
          term t = ta;
          t.insert(t.end(), tb.begin(), tb.end());
          std::sort(t.begin(), t.end(), expr_less());
          out.add_term(std::move(t), ca * cb);
        }
      }
      return out;
    }
  }
  out.add_term({e}, 1);
  return out;
}

expr from_linear(const linear& lin) {
  // Positive terms first in canonical order, then subtracted terms, then the
  // constant tail.
  auto one_term = [](const term& t, const integer& coeff) {
    assert(coeff > 0);
    expr prod;
    for (const expr& a : t) prod = prod.defined() ? prod * a : a;
    if (coeff == 1) return prod;
    return expr::constant(coeff) * prod;
  };

  expr pos, neg;
  for (const auto& [t, c] : lin.terms) {
    if (c > 0) {
      expr e = one_term(t, c);
      pos = pos.defined() ? pos + e : e;
    } else {
      expr e = one_term(t, -c);
      neg = neg.defined() ? neg + e : e;
    }
  }
  if (!pos.defined()) {
    if (!neg.defined()) return expr::constant(lin.constant);
    return expr::constant(lin.constant) - neg;
  }
  expr out = pos;
  if (neg.defined()) out = out - neg;
  if (lin.constant > 0) out = out + expr::constant(lin.constant);
  if (lin.constant < 0) out = out - expr::constant(-lin.constant);
  return out;
}

bool all_const(const std::vector<expr>& args) {
  return std::all_of(args.begin(), args.end(), [](const expr& a) { return a.is_const(); });
}

expr fold_const_op(op_kind op, const std::vector<expr>& args) {
  std::vector<value> vals;
  vals.reserve(args.size());
  for (const expr& a : args) vals.push_back(value(a.const_value()));
  return expr::constant(eval_op(op, vals).as_int());
}

expr simplify_op(const expr& e, simplifier& ctx) {
  op_kind op = e.op();
  std::vector<expr> args;
  args.reserve(e.args().size());
  for (const expr& a : e.args()) args.push_back(simplified(a, ctx));

  for (const expr& a : args) {
    if (a.is_inf()) return expr::make_op(op, std::move(args));
  }
  if (all_const(args)) return fold_const_op(op, args);

  switch (op) {
  case op_kind::add:
  case op_kind::sub:
  case op_kind::mul: {
    linear lin = to_linear(expr::make_op(op, args));
    if (lin.overflowed || lin.dropped_access) break;
    return from_linear(lin);
  }
  case op_kind::div:
  case op_kind::mod:
    if (args[1].is_const(0) && !contains_access(args[0])) return expr::constant(0);
    if (args[1].is_const(1)) {
      if (op == op_kind::div) return args[0];
      if (!contains_access(args[0])) return expr::constant(0);
    }
    break;
  case op_kind::lt:
  case op_kind::gt:
  case op_kind::eq:
  case op_kind::min:
  case op_kind::max: {
    if (contains_access(args[0]) || contains_access(args[1])) break;
    std::optional<integer> d = constant_difference(args[0], args[1]);  // b - a
    if (!d) break;
    switch (op) {
    case op_kind::lt: return expr::constant(*d > 0 ? 1 : 0);
    case op_kind::gt: return expr::constant(*d < 0 ? 1 : 0);
    case op_kind::eq: return expr::constant(*d == 0 ? 1 : 0);
    case op_kind::min: return *d >= 0 ? args[0] : args[1];
    case op_kind::max: return *d >= 0 ? args[1] : args[0];
    default: break;
    }
    break;
  }
  case op_kind::select:
    if (args[0].is_const()) {
      const expr& kept = args[0].is_const(0) ? args[2] : args[1];
      const expr& dropped = args[0].is_const(0) ? args[1] : args[2];
      if (!contains_access(dropped)) return kept;
    }
    break;
  default: break;
  }
  return expr::make_op(op, std::move(args));
}

struct simplifier {
  std::map<const void*, expr> memo;
};

expr simplified(const expr& e, simplifier& ctx) {
  auto it = ctx.memo.find(e.identity());
  if (it != ctx.memo.end()) return it->second;
  expr out;
  switch (e.kind()) {
  case expr_kind::op: out = simplify_op(e, ctx); break;
  case expr_kind::access: {
    std::vector<expr> idx;
    idx.reserve(e.args().size());
    for (const expr& a : e.args()) idx.push_back(simplified(a, ctx));
    out = expr::access(e.name(), e.access_stage(), e.access_spec(), std::move(idx));
    break;
  }
  default: out = e; break;
  }
  ctx.memo.emplace(e.identity(), out);
  return out;
}

}  // namespace

expr simplify(const expr& e) {
  if (!e.defined()) return e;
  simplifier ctx;
  return simplified(e, ctx);
}

interval simplify(const interval& i) { return {simplify(i.min), simplify(i.len)}; }

std::optional<integer> constant_difference(const expr& a, const expr& b) {
  if (!a.defined() || !b.defined()) return std::nullopt;
  if (contains_inf(a) || contains_inf(b)) return std::nullopt;
  // Callers pass already-simplified operands; re-simplifying here would make
  // nested min/max chains exponential. The probe keeps degenerate trees from
  // being walked at all.
  long budget = 2000;
  if (!within_budget(a, budget) || !within_budget(b, budget)) return std::nullopt;
  linear lin = to_linear(b - a);
  if (lin.overflowed || lin.dropped_access || !lin.terms.empty()) return std::nullopt;
  return lin.constant;
}

}  // namespace usl

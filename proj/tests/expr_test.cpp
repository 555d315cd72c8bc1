#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "usl/expr.h"
#include "usl/simplify.h"

#include <random>

using namespace usl;

namespace {

value vi(long n) { return value(integer(n)); }

const std::vector<op_kind> all_ops = {
    op_kind::add, op_kind::sub,       op_kind::mul,       op_kind::div,
    op_kind::mod, op_kind::logic_or,  op_kind::logic_and, op_kind::logic_not,
    op_kind::lt,  op_kind::gt,        op_kind::eq,        op_kind::select,
    op_kind::min, op_kind::max,
};

}  // namespace

TEST_CASE("total arithmetic on integers") {
  CHECK(eval_op(op_kind::div, std::vector<value>{vi(7), vi(0)}) == vi(0));
  CHECK(eval_op(op_kind::mod, std::vector<value>{vi(7), vi(0)}) == vi(0));
  CHECK(eval_op(op_kind::div, std::vector<value>{vi(-7), vi(2)}) == vi(-4));
  CHECK(eval_op(op_kind::div, std::vector<value>{vi(7), vi(-2)}) == vi(-4));
  CHECK(eval_op(op_kind::mod, std::vector<value>{vi(-7), vi(2)}) == vi(1));
  CHECK(eval_op(op_kind::mod, std::vector<value>{vi(7), vi(-2)}) == vi(-1));
  CHECK(eval_op(op_kind::lt, std::vector<value>{vi(2), vi(3)}) == vi(1));
  CHECK(eval_op(op_kind::select, std::vector<value>{vi(0), vi(10), vi(20)}) == vi(20));
  CHECK(eval_op(op_kind::select, std::vector<value>{vi(-3), vi(10), vi(20)}) == vi(10));
}

TEST_CASE("division and modulo identities") {
  for (long a = -24; a <= 24; ++a) {
    for (long b = -6; b <= 6; ++b) {
      value q = eval_op(op_kind::div, std::vector<value>{vi(a), vi(b)});
      value r = eval_op(op_kind::mod, std::vector<value>{vi(a), vi(b)});
      REQUIRE(q.is_int());
      REQUIRE(r.is_int());
      if (b == 0) {
        CHECK(q == vi(0));
        CHECK(r == vi(0));
      } else {
        CHECK(integer(b) * q.as_int() + r.as_int() == a);
        // Remainder takes the divisor's sign and is smaller in magnitude.
        CHECK(abs(r.as_int()) < abs(integer(b)));
        if (r.as_int() != 0) CHECK((r.as_int() < 0) == (b < 0));
      }
    }
  }
}

TEST_CASE("error absorption across every operator") {
  value er = value::rdom_error();
  value em = value::mem_error();
  CHECK(eval_op(op_kind::add, std::vector<value>{er, em}) == em);
  CHECK(eval_op(op_kind::add, std::vector<value>{em, er}) == em);

  for (op_kind op : all_ops) {
    int n = op_arity(op);
    std::vector<value> args(n, vi(1));
    for (int i = 0; i < n; ++i) {
      args[i] = er;
      CHECK(eval_op(op, args) == er);
      args[i] = em;
      CHECK(eval_op(op, args) == em);
      args[i] = vi(1);
    }
  }
  // select does not shortcut around an error in the unused branch.
  CHECK(eval_op(op_kind::select, std::vector<value>{vi(1), vi(5), em}) == em);
}

TEST_CASE("totality fuzz over small operands") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> d(-9, 9);
  for (int iter = 0; iter < 2000; ++iter) {
    op_kind op = all_ops[rng() % all_ops.size()];
    std::vector<value> args;
    for (int i = 0; i < op_arity(op); ++i) args.push_back(vi(d(rng)));
    value out = eval_op(op, args);
    CHECK(out.is_int());
  }
}

TEST_CASE("strict evaluation of accesses") {
  std::map<std::string, value> env = {{"x", vi(4)}};
  expr e = expr::variable("x") + expr::constant(1);
  CHECK(eval_expr(e, env, nullptr) == vi(5));

  int reads = 0;
  access_reader reader = [&](const std::string& f, std::optional<int>, std::optional<int>,
                             const std::vector<value>& pt) {
    ++reads;
    if (f == "g" && pt.size() == 1 && pt[0] == vi(4)) return value::mem_error();
    return vi(100);
  };
  expr g4 = expr::access("g", std::nullopt, std::nullopt, {expr::variable("x")});
  CHECK(eval_expr(g4, env, reader) == value::mem_error());

  // select evaluates both branches.
  reads = 0;
  expr both = select(expr::constant(1),
                     expr::access("g", std::nullopt, std::nullopt, {expr::constant(0)}),
                     expr::access("g", std::nullopt, std::nullopt, {expr::constant(1)}));
  CHECK(eval_expr(both, {}, reader) == vi(100));
  CHECK(reads == 2);

  CHECK_THROWS_AS(eval_expr(expr::variable("nope"), env, nullptr), eval_error);
}

TEST_CASE("startup expressions") {
  std::vector<std::string> params = {"p1"};
  CHECK(is_startup_expr(expr::variable("p1") + expr::constant(3), params));
  CHECK_FALSE(is_startup_expr(expr::access("g", std::nullopt, std::nullopt, {expr::constant(0)}),
                              params));
  CHECK_FALSE(is_startup_expr(expr::variable("x"), params));
}

TEST_CASE("simplify folds constants") {
  expr x = expr::variable("x");
  CHECK(to_string(simplify((expr::constant(2) + expr::constant(3)) * x)) == "5 * x");
  CHECK(to_string(simplify(min(expr::constant(4), expr::constant(7)))) == "4");
  CHECK(to_string(simplify(x / expr::constant(0))) == "0");
  CHECK(to_string(simplify(x + expr::constant(1) - x)) == "1");
  CHECK(to_string(simplify(min(x, x + expr::constant(1)))) == "x");
  CHECK(to_string(simplify(max(x, x + expr::constant(1)))) == "x + 1");
  // Accesses are never erased by algebra that would hide their errors.
  expr g = expr::access("g", std::nullopt, std::nullopt, {expr::constant(0)});
  CHECK(contains_access(simplify(g / expr::constant(0))));
  CHECK(contains_access(simplify(g * expr::constant(0))));
  CHECK(contains_access(simplify(g - g)));
}

namespace {

expr random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  if (depth <= 0 || pick(rng) < 3) {
    switch (pick(rng) % 3) {
    case 0: return expr::constant((long)(rng() % 11) - 5);
    case 1: return expr::variable(std::string(1, 'a' + rng() % 3));
    default:
      return expr::access("g", std::nullopt, std::nullopt,
                          {expr::constant((long)(rng() % 5))});
    }
  }
  op_kind op = all_ops[rng() % all_ops.size()];
  std::vector<expr> args;
  for (int i = 0; i < op_arity(op); ++i) args.push_back(random_expr(rng, depth - 1));
  return expr::make_op(op, std::move(args));
}

}  // namespace

TEST_CASE("simplify is idempotent and meaning preserving") {
  std::mt19937_64 rng(42);
  access_reader reader = [](const std::string&, std::optional<int>, std::optional<int>,
                            const std::vector<value>& pt) {
    if (pt.size() == 1 && pt[0].is_int() && pt[0].as_int() == 3) return value::mem_error();
    return pt.empty() ? value(integer(0)) : pt[0];
  };
  for (int iter = 0; iter < 500; ++iter) {
    expr e = random_expr(rng, 4);
    expr s = simplify(e);
    CHECK(equal(simplify(s), s));
    for (int trial = 0; trial < 4; ++trial) {
      std::map<std::string, value> env;
      for (char v : {'a', 'b', 'c'}) {
        env[std::string(1, v)] = value(integer((long)(rng() % 9) - 4));
      }
      CHECK(eval_expr(e, env, reader) == eval_expr(s, env, reader));
    }
  }
}

TEST_CASE("rendering") {
  expr x = expr::variable("x");
  expr g1 = expr::access("g", std::nullopt, std::nullopt, {x + expr::constant(1)});
  expr g0 = expr::access("g", std::nullopt, std::nullopt, {x});
  CHECK(to_string(g0 + g1) == "g[x] + g[x + 1]");
  CHECK(to_string((x + expr::constant(2)) * x) == "(x + 2) * x");
  CHECK(to_string(select(x < expr::constant(3), g0, expr::constant(7))) ==
        "select(x < 3, g[x], 7)");
  CHECK(to_string(expr::access("f", 0, 1, {x})) == "f.s0.z1[x]");
  hole_id h{hole_kind::cpu, "f", "x", std::nullopt, std::nullopt};
  CHECK(h.name() == "?cpu:f.x");
  hole_id h2{hole_kind::cpu, "f", "x", 0, 1};
  CHECK(h2.name() == "?cpu:f.s0.z1.x");
  CHECK(to_string(expr::hole_ref(h, hole_part::len)) == "(?cpu:f.x).len");
}

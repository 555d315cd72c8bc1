#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "usl/lower.h"

using namespace usl;

namespace {

expr var(const char* n) { return expr::variable(n); }
expr cst(long n) { return expr::constant(n); }
expr acc(const char* f, std::vector<expr> idx) {
  return expr::access(f, std::nullopt, std::nullopt, std::move(idx));
}

func_def fn(const char* name, std::vector<std::string> vars, expr pure_rhs) {
  func_def f;
  f.name = name;
  f.vars = std::move(vars);
  f.stages.push_back(func_def::pure_stage(f.vars, std::move(pure_rhs)));
  return f;
}

pipeline adjacent_sum() {
  pipeline p;
  p.output = "f";
  p.funcs.push_back(fn("g", {"x"}, var("x")));
  p.funcs.push_back(fn("f", {"x"}, acc("g", {var("x")}) + acc("g", {var("x") + cst(1)})));
  return p;
}

pipeline two_stage() {
  // g(x) = x; h(x) = { 0; rdom(r=(0,3)) in (x) <- h[x] + g[r] }
  pipeline p;
  p.output = "h";
  p.funcs.push_back(fn("g", {"x"}, var("x")));
  func_def h = fn("h", {"x"}, cst(0));
  stage u;
  u.rdom = {{"r", {cst(0), cst(3)}}};
  u.lhs = {var("x")};
  u.rhs = acc("h", {var("x")}) + acc("g", {var("r")});
  u.predicate = cst(1);
  h.stages.push_back(std::move(u));
  p.funcs.push_back(std::move(h));
  return p;
}

}  // namespace

TEST_CASE("default lowering of the two-func pipeline") {
  tgt_program t = lower(adjacent_sum());
  CHECK(to_string(t) ==
        "pipeline f(x_min, x_len):\n"
        "  allocate g(?mem:g.x)\n"
        "  label g:\n"
        "    label s0:\n"
        "      for x in ?cpu:g.x do\n"
        "        if 1 then\n"
        "          g[x] <- x\n"
        "  allocate f(?mem:f.x)\n"
        "  label f:\n"
        "    label s0:\n"
        "      for x in ?cpu:f.x do\n"
        "        if 1 then\n"
        "          f[x] <- g[x] + g[x + 1]\n");
  CHECK(check_structure(t).empty());
  REQUIRE(t.holes.size() == 4);
  CHECK(t.holes[0].name() == "?mem:g.x");
  CHECK(t.holes[1].name() == "?cpu:g.x");
  CHECK(t.holes[2].name() == "?mem:f.x");
  CHECK(t.holes[3].name() == "?cpu:f.x");
  CHECK(t.is_pure_loop("f", -1, 0, "x"));
}

TEST_CASE("two-stage lowering relabels self-references") {
  tgt_program t = lower(two_stage());
  CHECK(to_string(t) ==
        "pipeline h(x_min, x_len):\n"
        "  allocate g(?mem:g.x)\n"
        "  label g:\n"
        "    label s0:\n"
        "      for x in ?cpu:g.x do\n"
        "        if 1 then\n"
        "          g[x] <- x\n"
        "  allocate h(?mem:h.x)\n"
        "  label h:\n"
        "    label s0:\n"
        "      for x in ?cpu:h.s0.x do\n"
        "        if 1 then\n"
        "          h.s0[x] <- 0\n"
        "    label s1:\n"
        "      for x in ?cpu:h.x do\n"
        "        for r in (0, 3) do\n"
        "          if 1 then\n"
        "            h[x] <- h.s0[x] + g[r]\n");
  CHECK(check_structure(t).empty());
  // The reduction loop is not a pure loop.
  CHECK(t.is_pure_loop("h", -1, 1, "x"));
  CHECK_FALSE(t.is_pure_loop("h", -1, 1, "r"));
}

TEST_CASE("multi-dimensional loop order puts the first variable innermost") {
  pipeline p;
  p.output = "f";
  p.funcs.push_back(fn("f", {"x", "y"}, var("x") + var("y")));
  tgt_program t = lower(p);
  CHECK(to_string(t) ==
        "pipeline f(x_min, x_len, y_min, y_len):\n"
        "  allocate f(?mem:f.x, ?mem:f.y)\n"
        "  label f:\n"
        "    label s0:\n"
        "      for y in ?cpu:f.y do\n"
        "        for x in ?cpu:f.x do\n"
        "          if 1 then\n"
        "            f[x, y] <- x + y\n");
}

TEST_CASE("unused pure dimensions are not lowered") {
  // stage 1 only mentions x; no y loop, no y hole for that stage.
  pipeline p;
  p.output = "f";
  p.funcs.push_back(fn("f", {"x", "y"}, var("x") + var("y")));
  stage u;
  u.rdom = {};
  u.lhs = {var("x"), cst(0)};
  u.rhs = acc("f", {var("x"), cst(0)}) * cst(2);
  u.predicate = cst(1);
  p.funcs.back().stages.push_back(std::move(u));
  REQUIRE(validate(p).empty());
  tgt_program t = lower(p);
  for (const hole_id& h : t.holes) {
    if (h.kind == hole_kind::cpu && !h.stage) CHECK(h.dim == "x");
  }
  CHECK(t.funcs.at("f").stage_dims[1] == std::set<std::string>{"x"});
  CHECK(check_structure(t).empty());
}

TEST_CASE("hole registry matches the holes in the program") {
  for (const pipeline& p : {adjacent_sum(), two_stage()}) {
    tgt_program t = lower(p);
    std::set<hole_id> in_program;
    visit_stmt_exprs(t.body, [&](const expr& root) {
      visit_exprs(root, [&](const expr& e) {
        if (e.kind() == expr_kind::hole) in_program.insert(e.hole());
      });
    });
    std::set<hole_id> registry(t.holes.begin(), t.holes.end());
    CHECK(registry == in_program);
  }
}

TEST_CASE("structure violations are diagnosed") {
  tgt_program t = lower(adjacent_sum());

  // Label before allocation.
  {
    std::vector<stmt> parts = flatten_seq(t.body);
    REQUIRE(parts.size() == 4);
    tgt_program bad = t;
    bad.body = seq_of({parts[1], parts[0], parts[2], parts[3]});
    bool found = false;
    for (const auto& d : check_structure(bad)) found = found || d.rule == "dominance";
    CHECK(found);
  }

  // Consumer before producer.
  {
    std::vector<stmt> parts = flatten_seq(t.body);
    tgt_program bad = t;
    bad.body = seq_of({parts[0], parts[2], parts[3], parts[1]});
    bool found = false;
    for (const auto& d : check_structure(bad)) found = found || d.rule == "dominance";
    CHECK(found);
  }

  // Duplicate loop name within one stage.
  {
    stmt dup = stmt::labeled(
        {label_kind::func, "q", 0},
        stmt::labeled({label_kind::stage, "", 0},
                      stmt::seq(stmt::for_loop(traversal::serial, "x", {cst(0), cst(1)},
                                               stmt::nop()),
                                stmt::for_loop(traversal::serial, "x", {cst(0), cst(1)},
                                               stmt::nop()))));
    tgt_program bad;
    bad.output = "q";
    bad.body = seq_of({stmt::alloc("q", {}), dup});
    bool found = false;
    for (const auto& d : check_structure(bad)) found = found || d.rule == "loop-naming";
    CHECK(found);
  }
}

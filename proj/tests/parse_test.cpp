#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "usl/parse.h"

using namespace usl;

TEST_CASE("parse the two-func pipeline") {
  pipeline p = parse_pipeline(
      "pipeline f(p1) {\n"
      "  fun g(x) = { x * p1 };\n"
      "  fun f(x) = { g[x] + g[x+1] };\n"
      "}\n");
  CHECK(p.output == "f");
  CHECK(p.params == std::vector<std::string>{"p1"});
  REQUIRE(p.funcs.size() == 2);
  CHECK(p.funcs[0].name == "g");
  CHECK(p.funcs[1].stages.size() == 1);
  CHECK(validate(p).empty());
  CHECK(to_string(p.funcs[1].stages[0].rhs) == "g[x] + g[x + 1]");
}

TEST_CASE("parse update stages") {
  pipeline p = parse_pipeline(
      "pipeline h(p1) {\n"
      "  fun g(x) = { x };\n"
      "  fun h(x) = {\n"
      "    0;\n"
      "    rdom(r = (0, 3)) in (x) <- h[x] + g[r] if 1;\n"
      "    rdom() in (x) <- h[x] * 2 if p1 > 0\n"
      "  };\n"
      "}\n");
  REQUIRE(p.funcs.size() == 2);
  const func_def& h = p.funcs[1];
  REQUIRE(h.stages.size() == 3);
  CHECK(h.stages[1].rdom.size() == 1);
  CHECK(h.stages[1].rdom[0].first == "r");
  CHECK(h.stages[2].rdom.empty());
  CHECK(to_string(h.stages[2].predicate) == "p1 > 0");
  CHECK(validate(p).empty());
}

TEST_CASE("zero-dimensional funcs parse") {
  pipeline p = parse_pipeline("pipeline f() { fun f() = { 3 }; }");
  CHECK(p.funcs[0].vars.empty());
  CHECK(validate(p).empty());
}

TEST_CASE("negative literals and precedence") {
  expr e = parse_expr_text("-7 + 2 * -x");
  CHECK(to_string(eval_expr(e, {{"x", value(integer(5))}}, nullptr)) == "-17");
  expr cmp = parse_expr_text("a < b == c");
  CHECK(to_string(cmp) == "a < b == c");  // left-assoc chain round-trips bare
  expr sel = parse_expr_text("select(x < 3, min(x, 4), max(x, 0))");
  CHECK(to_string(sel) == "select(x < 3, min(x, 4), max(x, 0))");
  expr assoc = parse_expr_text("a - (b - c)");
  CHECK(to_string(assoc) == "a - (b - c)");
  expr assoc2 = parse_expr_text("a - b - c");
  CHECK(to_string(assoc2) == "a - b - c");
}

TEST_CASE("rendered pipelines re-parse to the same rendering") {
  const char* text =
      "pipeline f(p1, p2) {\n"
      "  fun g(x, y) = { x * p1 + y };\n"
      "  fun f(x) = {\n"
      "    g[x, 0];\n"
      "    rdom(r = (0, p2), q = (1, 2)) in (x) <- f[x] + g[r, q] if r < p1\n"
      "  };\n"
      "}\n";
  pipeline p = parse_pipeline(text);
  std::string first = to_string(p);
  pipeline again = parse_pipeline(first);
  CHECK(to_string(again) == first);
}

TEST_CASE("parse schedules") {
  schedule s = parse_schedule(
      "# the recompute schedule\n"
      "split(f.x, xo, xi, 3, guard)\n"
      "compute-at(g, f.xo)\n"
      "store-at(g, f.xo)\n");
  REQUIRE(s.size() == 3);
  CHECK(s[0].kind == directive::kind_t::split);
  CHECK(s[0].loop.func == "f");
  CHECK(s[0].loop.var == "x");
  CHECK_FALSE(s[0].loop.stage.has_value());
  CHECK(s[1].kind == directive::kind_t::compute_at);
  CHECK(s[2].kind == directive::kind_t::store_at);

  schedule s2 = parse_schedule(
      "specialize(f, p1 > 8, p1 > 0)\n"
      "split(f.z1.x, xo, xi, 4, round)\n"
      "fuse(f.z2.s0.y, t)\n"
      "swap(h.s1.x)\n"
      "traverse(f.z1.xo, parallel)\n"
      "bound(f, x, 0, 16)\n"
      "bound-extent(g, x, 8)\n"
      "align-bounds(g, x, 4, 0)\n");
  REQUIRE(s2.size() == 8);
  CHECK(s2[0].conds.size() == 2);
  CHECK(s2[1].loop.spec == 1);
  CHECK(s2[1].strategy == split_strategy::round);
  CHECK(s2[2].loop.spec == 2);
  CHECK(s2[2].loop.stage == 0);
  CHECK(s2[3].loop.stage == 1);
  CHECK(s2[4].trav == traversal::parallel);
  CHECK(to_string(s2[7]) == "align-bounds(g, x, 4, 0)");

  // Rendering round-trips.
  std::string text = to_string(s2);
  schedule again = parse_schedule(text);
  CHECK(to_string(again) == text);

  CHECK(parse_schedule("").empty());
  CHECK(parse_schedule("# nothing but a comment\n").empty());
}

TEST_CASE("split with a default strategy") {
  schedule s = parse_schedule("split(f.x, xo, xo, 3)");
  REQUIRE(s.size() == 1);
  CHECK(s[0].strategy == split_strategy::guard);
  // Syntactically fine; rejected later by name uniqueness.
  CHECK(s[0].outer == s[0].inner);
}

TEST_CASE("syntax errors carry positions") {
  CHECK_THROWS_AS(parse_pipeline("pipeline f( { }"), parse_error);
  CHECK_THROWS_AS(parse_pipeline("pipeline f() { fun f(x) = { } }"), parse_error);
  CHECK_THROWS_AS(parse_schedule("warp(f.x)"), parse_error);
  CHECK_THROWS_AS(parse_expr_text("1 +"), parse_error);
  CHECK_THROWS_AS(parse_expr_text("min(1)"), parse_error);
  try {
    parse_pipeline("pipeline f() {\n  fun f(x) = { @ };\n}");
    FAIL("expected a parse error");
  } catch (const parse_error& e) {
    CHECK(e.line == 2);
  }
}

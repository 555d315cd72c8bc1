#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "usl/tir.h"

using namespace usl;

namespace {

expr var(const char* n) { return expr::variable(n); }
expr cst(long n) { return expr::constant(n); }
expr acc(const char* f, std::vector<expr> idx) {
  return expr::access(f, std::nullopt, std::nullopt, std::move(idx));
}

interval iv(long mn, long ln) { return {cst(mn), cst(ln)}; }

tgt_program prog(stmt body, std::string output = "f") {
  tgt_program p;
  p.output = std::move(output);
  p.body = std::move(body);
  return p;
}

realize_input no_input() { return {}; }

}  // namespace

TEST_CASE("store and read back") {
  stmt body = seq_of({
      stmt::alloc("f", {iv(0, 1)}),
      stmt::for_loop(traversal::serial, "x", iv(0, 1),
                     stmt::store("f", std::nullopt, std::nullopt, {var("x")}, cst(42))),
  });
  run_outcome o = run(prog(body), no_input());
  REQUIRE(o.kind == run_outcome::kind_t::completed);
  CHECK(o.output.at({integer(0)}) == value(integer(42)));
  CHECK(o.write_count("f", {integer(0)}) == 1);
}

TEST_CASE("out of bounds write is a memory error") {
  stmt body = seq_of({
      stmt::alloc("f", {iv(0, 1)}),
      stmt::store("f", std::nullopt, std::nullopt, {cst(5)}, cst(0)),
  });
  run_outcome o = run(prog(body), no_input());
  CHECK(o.kind == run_outcome::kind_t::mem_error);
  CHECK(o.fault_func == "f");
  CHECK(o.fault_point == "(5)");
}

TEST_CASE("negative loop extent is an rdom failure") {
  stmt body = stmt::for_loop(traversal::serial, "r", iv(0, -1), stmt::nop());
  run_outcome o = run(prog(body), no_input());
  CHECK(o.kind == run_outcome::kind_t::rdom_failed);
}

TEST_CASE("uninitialized reads propagate err_mem without faulting") {
  stmt body = seq_of({
      stmt::alloc("f", {iv(0, 2)}),
      stmt::store("f", std::nullopt, std::nullopt, {cst(0)}, acc("f", {cst(1)})),
  });
  run_outcome o = run(prog(body), no_input());
  REQUIRE(o.kind == run_outcome::kind_t::completed);
  CHECK(o.output.at({integer(0)}) == value::mem_error());
}

TEST_CASE("assert failures, including error conditions") {
  run_outcome ok = run(prog(stmt::assert_check(cst(1))), no_input());
  CHECK(ok.kind == run_outcome::kind_t::completed);

  run_outcome bad = run(prog(stmt::assert_check(cst(0))), no_input());
  CHECK(bad.kind == run_outcome::kind_t::assert_failed);

  // Reading an uninitialized point inside the condition fails the check.
  stmt body = seq_of({
      stmt::alloc("g", {iv(0, 1)}),
      stmt::assert_check(acc("g", {cst(0)})),
  });
  CHECK(run(prog(body), no_input()).kind == run_outcome::kind_t::assert_failed);
}

TEST_CASE("re-allocation resets a buffer to err_mem") {
  stmt body = seq_of({
      stmt::alloc("f", {iv(0, 2)}),
      stmt::alloc("g", {iv(0, 1)}),
      stmt::store("g", std::nullopt, std::nullopt, {cst(0)}, cst(7)),
      stmt::alloc("g", {iv(0, 1)}),
      stmt::store("f", std::nullopt, std::nullopt, {cst(0)}, acc("g", {cst(0)})),
      stmt::store("f", std::nullopt, std::nullopt, {cst(1)}, cst(1)),
  });
  run_outcome o = run(prog(body), no_input());
  REQUIRE(o.kind == run_outcome::kind_t::completed);
  CHECK(o.output.at({integer(0)}) == value::mem_error());
  CHECK(o.output.at({integer(1)}) == value(integer(1)));
}

TEST_CASE("window parameters bind like parameters") {
  tgt_program p;
  p.output = "f";
  p.window_params = {"x_min", "x_len"};
  p.body = seq_of({
      stmt::alloc("f", {{var("x_min"), var("x_len")}}),
      stmt::for_loop(traversal::serial, "x", {var("x_min"), var("x_len")},
                     stmt::store("f", std::nullopt, std::nullopt, {var("x")},
                                 var("x") * cst(2))),
  });
  realize_input z;
  z.window = {{integer(3), integer(2)}};
  run_outcome o = run(p, z);
  REQUIRE(o.kind == run_outcome::kind_t::completed);
  CHECK(o.output.at({integer(3)}) == value(integer(6)));
  CHECK(o.output.at({integer(4)}) == value(integer(8)));
}

TEST_CASE("serial determinism and permutation invariance for disjoint writes") {
  stmt body = seq_of({
      stmt::alloc("f", {iv(0, 6)}),
      stmt::for_loop(traversal::parallel, "x", iv(0, 6),
                     stmt::store("f", std::nullopt, std::nullopt, {var("x")}, var("x") * var("x"))),
  });
  tgt_program p = prog(body);
  run_outcome base = run(p, no_input());
  REQUIRE(base.kind == run_outcome::kind_t::completed);
  for (std::uint64_t seed : {1, 2, 3}) {
    run_outcome perm = run_permuted(p, no_input(), seed);
    REQUIRE(perm.kind == run_outcome::kind_t::completed);
    CHECK(perm.output.points == base.output.points);
  }
}

TEST_CASE("a racy parallel loop is observable across permutations") {
  // Two iterations writing different values to one point.
  stmt body = seq_of({
      stmt::alloc("f", {iv(0, 1)}),
      stmt::for_loop(traversal::parallel, "x", iv(0, 2),
                     stmt::store("f", std::nullopt, std::nullopt, {cst(0)}, var("x"))),
  });
  tgt_program p = prog(body);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    run_outcome o = run_permuted(p, no_input(), seed);
    REQUIRE(o.kind == run_outcome::kind_t::completed);
    seen.insert(to_string(o.output.at({integer(0)})));
  }
  CHECK(seen.size() == 2);  // both orders occur over enough seeds
}

TEST_CASE("shadowing is rejected") {
  stmt body = stmt::for_loop(
      traversal::serial, "x", iv(0, 2),
      stmt::let_bind("x", cst(0), stmt::nop()));
  CHECK_THROWS_AS(run(prog(body), no_input()), std::invalid_argument);
}

TEST_CASE("spec labels group the write trace") {
  stmt branch1 = stmt::labeled({label_kind::spec, "", 1},
                               stmt::store("f", std::nullopt, 1, {cst(0)}, cst(10)));
  stmt branch0 = stmt::labeled({label_kind::spec, "", 0},
                               stmt::store("f", std::nullopt, 0, {cst(0)}, cst(20)));
  tgt_program p;
  p.output = "f";
  p.params = {"p1"};
  p.body = seq_of({
      stmt::alloc("f", {iv(0, 1)}),
      stmt::labeled({label_kind::func, "f", 0},
                    stmt::if_branch(var("p1") > cst(0), branch1, branch0)),
  });
  realize_input z;
  z.param_values = {integer(5)};
  run_outcome o = run(p, z);
  REQUIRE(o.kind == run_outcome::kind_t::completed);
  CHECK(o.specs_written("f") == std::set<int>{1});
}

TEST_CASE("dump is stable") {
  stmt body = seq_of({
      stmt::alloc("g", {iv(0, 3)}),
      stmt::labeled({label_kind::func, "g", 0},
                    stmt::labeled({label_kind::stage, "", 0},
                                  stmt::for_loop(traversal::serial, "x", iv(0, 3),
                                                 stmt::if_branch(cst(1),
                                                                 stmt::store("g", std::nullopt,
                                                                             std::nullopt,
                                                                             {var("x")},
                                                                             var("x") + cst(1)),
                                                                 stmt::nop())))),
  });
  tgt_program p = prog(body, "g");
  CHECK(to_string(p) ==
        "pipeline g():\n"
        "  allocate g((0, 3))\n"
        "  label g:\n"
        "    label s0:\n"
        "      for x in (0, 3) do\n"
        "        if 1 then\n"
        "          g[x] <- x + 1\n");
}

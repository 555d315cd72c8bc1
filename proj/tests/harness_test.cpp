#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "usl/harness.h"
#include "usl/lower.h"
#include "usl/parse.h"
#include "usl/simplify.h"

using namespace usl;

namespace {

pipeline adjacent_sum() {
  return parse_pipeline(
      "pipeline f() {\n"
      "  fun g(x) = { x };\n"
      "  fun f(x) = { g[x] + g[x+1] };\n"
      "}\n");
}

realize_input window1(long mn, long ln, std::vector<integer> params = {}) {
  return {std::move(params), {{integer(mn), integer(ln)}}};
}

schedule recompute_schedule() {
  return parse_schedule(
      "split(f.x, xo, xi, 3, guard)\n"
      "compute-at(g, f.xo)\n"
      "store-at(g, f.xo)\n");
}

schedule round_schedule() { return parse_schedule("split(f.x, xo, xi, 4, round)"); }

// Baseline completion with every allocation length nudged by delta; broken
// for negative delta, wasteful but safe for positive.
bounds_engine mem_adjusted_engine(long delta) {
  return [delta](const tgt_program& p) {
    resolve_result r = resolve(infer_baseline(extract(p)), p);
    if (!r.ok) return assert_false_engine()(p);
    for (auto& [h, i] : r.closed) {
      if (h.kind == hole_kind::mem) i.len = simplify(i.len + expr::constant(delta));
    }
    return substitute_holes(p, r.closed);
  };
}

}  // namespace

TEST_CASE("the three reference schedules are confluent") {
  pipeline p = adjacent_sum();
  bounds_engine engine = baseline_engine();
  for (const schedule& s : {schedule{}, recompute_schedule(), round_schedule()}) {
    confluence_verdict v = check_confluence(p, s, engine, window1(0, 6));
    CHECK(v.kind == confluence_verdict::kind_t::equivalent);
  }
}

TEST_CASE("algorithm errors short-circuit the comparison") {
  pipeline p = parse_pipeline(
      "pipeline f(p1) {\n"
      "  fun f(x) = { 1; rdom(r = (0, p1)) in (x) <- f[x] * 2 };\n"
      "}\n");
  confluence_verdict v =
      check_confluence(p, {}, baseline_engine(), window1(0, 4, {integer(-1)}));
  CHECK(v.kind == confluence_verdict::kind_t::alg_error);
}

TEST_CASE("round split overcomputes but stays equivalent on the window") {
  pipeline p = adjacent_sum();
  std::vector<diagnostic> diags;
  tgt_program completed =
      baseline_engine()(apply_schedule(lower(p), round_schedule(), diags));
  REQUIRE(diags.empty());
  confluence_verdict v = check_confluence(p, completed, window1(0, 6));
  CHECK(v.kind == confluence_verdict::kind_t::equivalent);

  // The write trace of f covers exactly the rounded-up window.
  run_outcome o = run(completed, window1(0, 6));
  REQUIRE(o.kind == run_outcome::kind_t::completed);
  for (long i = 0; i < 8; ++i) CHECK(o.write_count("f", {integer(i)}) == 1);
  CHECK(o.write_count("f", {integer(-1)}) == 0);
  CHECK(o.write_count("f", {integer(8)}) == 0);
}

TEST_CASE("the recompute schedule recomputes the tile boundary") {
  pipeline p = adjacent_sum();
  std::vector<diagnostic> diags;
  tgt_program completed =
      baseline_engine()(apply_schedule(lower(p), recompute_schedule(), diags));
  REQUIRE(diags.empty());
  run_outcome o = run(completed, window1(0, 6));
  REQUIRE(o.kind == run_outcome::kind_t::completed);
  // The baseline recomputes the full producer window per tile, so the
  // boundary point is written once per outer iteration.
  CHECK(o.write_count("g", {integer(3)}) == 2);
}

TEST_CASE("specialized programs execute exactly one branch") {
  pipeline p = adjacent_sum();
  schedule s = parse_schedule("specialize(f, x_len > 4)");
  std::vector<diagnostic> diags;
  tgt_program completed = baseline_engine()(apply_schedule(lower(p), s, diags));
  REQUIRE(diags.empty());
  for (long len : {2, 6}) {
    run_outcome o = run(completed, window1(0, len));
    REQUIRE(o.kind == run_outcome::kind_t::completed);
    CHECK(o.specs_written("f") == std::set<int>{len > 4 ? 1 : 0});
    CHECK(check_confluence(p, completed, window1(0, len)).kind ==
          confluence_verdict::kind_t::equivalent);
  }
}

TEST_CASE("a broken engine is caught by the fuzzer") {
  fuzz_config cfg;
  cfg.seed = 7;
  cfg.pipelines = 12;
  cfg.schedules_per_pipeline = 2;
  cfg.inputs_per_schedule = 3;
  fuzz_report bad = run_fuzz(cfg, mem_adjusted_engine(-1));
  CHECK(bad.mem_faults > 0);
  CHECK_FALSE(bad.ok());
  REQUIRE(!bad.failures.empty());
  // Shrinking keeps the failing verdict class.
  CHECK(bad.failures[0].find("MEMFAULT") != std::string::npos);
}

TEST_CASE("fuzzing the baseline engine is clean and deterministic per seed") {
  fuzz_config cfg;
  cfg.seed = 11;
  cfg.pipelines = 10;
  cfg.schedules_per_pipeline = 3;
  cfg.inputs_per_schedule = 2;
  fuzz_report a = run_fuzz(cfg, baseline_engine());
  CHECK(a.ok());
  CHECK(a.cases == 60);
  fuzz_report b = run_fuzz(cfg, baseline_engine());
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].verdict == b.records[i].verdict);
    CHECK(a.records[i].seed == b.records[i].seed);
  }
}

TEST_CASE("engine quality: reflexive, vacuous, and widened candidates") {
  fuzz_config cfg;
  cfg.seed = 5;
  cfg.pipelines = 8;
  cfg.schedules_per_pipeline = 2;
  cfg.inputs_per_schedule = 2;
  std::vector<quality_case> corpus = generate_corpus(cfg);

  quality_report self = check_engine_quality(baseline_engine(), corpus);
  CHECK(self.ok());
  CHECK(self.premise_met > 0);

  quality_report vacuous = check_engine_quality(assert_false_engine(), corpus);
  CHECK_FALSE(vacuous.ok());
  // Compliant-but-useless: it violates the quality bar on every clean case.
  CHECK(static_cast<long>(vacuous.violations.size()) == self.premise_met);

  quality_report widened = check_engine_quality(mem_adjusted_engine(7), corpus);
  CHECK(widened.ok());
}

TEST_CASE("rdom stops are cross-checked against the reduction bounds") {
  // The algorithm never reads g because the consumer's reduction is empty,
  // but the baseline widens the guarded read to the whole window, so the
  // eager target program still reaches g's negative loop.
  pipeline p = parse_pipeline(
      "pipeline h(p1) {\n"
      "  fun g(x) = { 0; rdom(r = (0, p1)) in (x) <- g[x] + r };\n"
      "  fun h(x) = { 7; rdom(r2 = (0, 0)) in (x) <- h[x] + g[x] + r2 };\n"
      "}\n");
  REQUIRE(validate(p).empty());
  confluence_verdict v =
      check_confluence(p, {}, baseline_engine(), window1(0, 3, {integer(-2)}));
  CHECK(v.kind == confluence_verdict::kind_t::rdom_stop);
  CHECK_FALSE(v.anomalous);
}

#pragma once

#include "usl/alg.h"
#include "usl/sched.h"

#include <random>

namespace usl {

struct fuzz_config {
  std::uint64_t seed = 42;
  int pipelines = 60;
  int schedules_per_pipeline = 5;
  int inputs_per_schedule = 4;

  int max_funcs = 4;
  int max_dims = 2;
  int max_stages = 3;
  int max_rdom_extent = 4;
  int max_window_len = 8;
  int max_expr_depth = 4;
};

// Random but always-valid pipelines: separation-compliant update stages,
// startup rdom bounds, definition-before-use accesses. Occasionally leaves a
// func unreferenced or nests an access inside an index to exercise the
// failing paths of bounds inference.
pipeline generate_pipeline(std::mt19937_64& rng, const fuzz_config& caps);

// A phase-ordered schedule valid for the lowered program; directives that a
// trial application rejects are simply not emitted.
schedule generate_schedule(std::mt19937_64& rng, const tgt_program& lowered,
                           const fuzz_config& caps);

realize_input generate_input(std::mt19937_64& rng, const pipeline& p, const fuzz_config& caps);

// Loop inventory of a program, in syntactic order.
struct loop_desc {
  std::string func;
  int spec = -1;
  int stage = 0;
  std::string var;
  bool pure = false;
  bool has_direct_inner = false;
  std::string inner_var;
  bool inner_pure = false;

  loop_name name() const {
    return loop_name{func, spec < 0 ? std::nullopt : std::optional<int>(spec), stage, var};
  }
};

std::vector<loop_desc> collect_loops(const tgt_program& p);

}  // namespace usl

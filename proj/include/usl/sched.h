#pragma once

#include "usl/tir.h"

namespace usl {

enum class split_strategy : std::uint8_t { guard, shift, round };

// Names one for loop: func, specialization branch (absent when the func is
// not specialized), stage (absent means the last stage), and loop variable.
struct loop_name {
  std::string func;
  std::optional<int> spec;
  std::optional<int> stage;
  std::string var;

  std::string str() const;
};

struct directive {
  enum class kind_t : std::uint8_t {
    specialize,
    split,
    fuse,
    swap_loops,
    traverse,
    compute_at,
    store_at,
    bound,
    bound_extent,
    align_bounds,
  };
  kind_t kind;

  std::string func;        // specialize, compute-at, store-at, bound*
  std::vector<expr> conds;  // specialize
  loop_name loop;          // loop-targeting directives
  std::string outer, inner;  // split names; fuse reuses outer as the fused var
  expr factor;             // split
  split_strategy strategy = split_strategy::guard;
  traversal trav = traversal::serial;
  std::string dim;         // bound*
  expr arg0, arg1;         // bound min/len, bound-extent len, align mod/rem

  static directive specialize(std::string func, std::vector<expr> conds);
  static directive split(loop_name l, std::string outer, std::string inner, expr factor,
                         split_strategy s);
  static directive fuse(loop_name l, std::string fused);
  static directive swap_loops(loop_name l);
  static directive traverse(loop_name l, traversal t);
  static directive compute_at(std::string func, loop_name l);
  static directive store_at(std::string func, loop_name l);
  static directive bound(std::string func, std::string dim, expr mn, expr ln);
  static directive bound_extent(std::string func, std::string dim, expr ln);
  static directive align_bounds(std::string func, std::string dim, expr mod, expr rem);
};

using schedule = std::vector<directive>;

// Phases: specialize < loops < compute < storage < bounds. Schedules must be
// pre-sorted; out-of-order directives are diagnosed, not reordered.
int directive_phase(const directive& d);

std::string to_string(const directive& d);
std::string to_string(const schedule& s);

// Applies one directive. On any failure (unresolvable loop, phase rule,
// purity rule, broken dominance) the program is returned unchanged and the
// problem reported.
tgt_program apply_directive(const tgt_program& p, const directive& d,
                            std::vector<diagnostic>& diags);

// Left fold of apply_directive with phase-order enforcement and a structure
// check after every step; stops at the first failing directive.
tgt_program apply_schedule(const tgt_program& p, const schedule& s,
                           std::vector<diagnostic>& diags);

// Dry run of apply_schedule.
std::vector<diagnostic> validate_schedule(const tgt_program& p, const schedule& s);

}  // namespace usl

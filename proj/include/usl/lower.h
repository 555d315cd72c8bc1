#pragma once

#include "usl/alg.h"
#include "usl/tir.h"

namespace usl {

// Translates a valid pipeline into hole-bearing IR under the default eager
// schedule: every func computed in full, in definition order. Per stage, pure
// dimension loops (first dimension innermost) wrap reduction loops (first
// reduction variable innermost) around the guarded store. Self-references on
// a stage's right-hand side are relabeled to the previous stage. Pure
// dimensions a stage does not mention are not lowered.
tgt_program lower(const pipeline& p);

// Structural invariants that lowering establishes and every scheduling
// rewrite must maintain: loops uniquely named by (func, specialization,
// stage, variable); each func's allocation dominates its label; each func's
// label dominates every external access to it.
std::vector<diagnostic> check_structure(const tgt_program& p);

}  // namespace usl

#pragma once

#include "usl/bounds.h"
#include "usl/generate.h"

namespace usl {

// Outcome of comparing one completed program against the reference
// interpreter. divergent and mem_fault indicate soundness bugs; the rest are
// permitted. rdom_stop is cross-checked against the algorithm's reduction
// bounds; a stop with no negative extent is flagged anomalous.
struct confluence_verdict {
  enum class kind_t : std::uint8_t {
    alg_error,
    assert_stop,
    equivalent,
    divergent,
    mem_fault,
    rdom_stop,
  };
  kind_t kind = kind_t::equivalent;
  std::string detail;
  bool anomalous = false;

  bool sound() const { return kind != kind_t::divergent && kind != kind_t::mem_fault && !anomalous; }
};

std::string to_string(const confluence_verdict& v);

// Compares a completed program with the algorithm on one input: the
// algorithm erring inside the window excuses everything; assertion and rdom
// stops halt comparison; otherwise outputs must agree on every window point.
confluence_verdict check_confluence(const pipeline& alg, const tgt_program& completed,
                                    const realize_input& z, const run_options& opts = {});

// Convenience form: lower, schedule, complete, compare.
confluence_verdict check_confluence(const pipeline& alg, const schedule& s,
                                    const bounds_engine& engine, const realize_input& z);

struct fuzz_case {
  std::uint64_t seed = 0;
  int pipeline_id = 0, schedule_id = 0, input_id = 0;
  std::string verdict;
  bool determinism_ok = true;
  double millis = 0;
};

struct fuzz_report {
  long cases = 0;
  std::map<std::string, long> verdict_counts;
  long divergences = 0;
  long mem_faults = 0;
  long determinism_mismatches = 0;
  long anomalies = 0;
  std::vector<std::string> failures;  // minimized counterexample descriptions
  std::vector<fuzz_case> records;

  bool ok() const {
    return divergences == 0 && mem_faults == 0 && determinism_mismatches == 0 && anomalies == 0;
  }
  std::string summary() const;
};

// Differential fuzzing: generated pipelines, schedules, and inputs; requires
// no divergence, no memory faults, and permutation-invariant parallel loops.
// Failing cases are shrunk by dropping directives while the verdict class
// persists.
fuzz_report run_fuzz(const fuzz_config& config, const bounds_engine& engine);

struct quality_case {
  pipeline p;
  schedule s;
  std::vector<realize_input> inputs;
};

struct quality_report {
  long cases = 0;
  long premise_met = 0;  // baseline clean and equivalent
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// The engine quality bar: wherever the baseline engine completes a schedule
// cleanly and matches the algorithm, the candidate must match it too.
quality_report check_engine_quality(const bounds_engine& candidate,
                                    const std::vector<quality_case>& corpus);

// Deterministic corpus built with the same generators as run_fuzz.
std::vector<quality_case> generate_corpus(const fuzz_config& config);

}  // namespace usl

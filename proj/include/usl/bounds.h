#pragma once

#include "usl/tir.h"

#include <functional>

namespace usl {

enum class constraint_kind : std::uint8_t {
  truth,
  atom,        // runtime-checked assertion; a failure stops execution
  conj,        // association mirrors program sequencing
  implies,
  forall_var,  // bound loop variable over an interval
  forall_param,
  exists_holes,
  let_c,
  point_in,    // point membership, one target hole per dimension
  window_in,   // requested-window containment in the output's compute holes
};

struct constraint_node;

class constraint {
public:
  constraint() = default;

  static constraint truth();
  static constraint atom(expr e);
  static constraint conj(constraint a, constraint b);  // a sequenced before b
  static constraint implies(expr antecedent, constraint body);
  static constraint forall_var(std::string var, interval range, constraint body);
  static constraint forall_param(std::string param, constraint body);
  static constraint exists_holes(std::string group, std::vector<hole_id> holes, constraint body);
  static constraint let_c(std::string var, expr value, constraint body);
  static constraint point_in(std::vector<expr> coords, std::vector<hole_id> targets);
  static constraint window_in(std::vector<interval> window, std::vector<hole_id> targets);

  bool defined() const { return node_ != nullptr; }
  constraint_kind kind() const;
  const expr& guard() const;            // atom, implies
  const std::string& name() const;      // var, param, group
  const interval& range() const;
  const std::vector<hole_id>& holes() const;
  const std::vector<expr>& coords() const;
  const std::vector<interval>& window() const;
  const expr& let_value() const;
  const constraint& first() const;
  const constraint& second() const;

private:
  explicit constraint(std::shared_ptr<const constraint_node> n) : node_(std::move(n)) {}
  std::shared_ptr<const constraint_node> node_;
};

std::string to_string(const constraint& c);

// Extraction: turns a structurally valid program into the membership
// predicate its bounds must satisfy. Every read or written point must lie in
// the allocation bounds; points written inside the compute bounds must read
// only compute-bounds values; indexing and branching expressions are held to
// compute bounds unconditionally.
constraint extract(const tgt_program& p);

// Symbolic interval with possibly infinite endpoints (pos_inf/neg_inf
// expressions). Arithmetic is conservative: any infinity widens fully.
struct sym_interval {
  expr min, len;
};

bool is_finite(const sym_interval& i);
std::string to_string(const sym_interval& i);

// Interval arithmetic over expressions; env gives the range of bound
// variables (loop variables widen to their whole range, parameters and hole
// references are exact symbolic singletons, func accesses are unbounded).
sym_interval interval_of(const expr& e, const std::map<std::string, sym_interval>& env);

sym_interval hull(const sym_interval& a, const sym_interval& b);

using sym_substitution = std::map<hole_id, sym_interval>;

// The baseline engine pass: scans the constraint right-to-left (reverse
// program order, consumers before producers), ignores implication guards and
// atoms, and hulls every membership into its target hole.
sym_substitution infer_baseline(const constraint& c);

struct resolve_result {
  bool ok = false;
  std::map<hole_id, interval> closed;
  std::vector<hole_id> failed;  // undetermined, infinite, or cyclic
  std::string reason;
};

// Closes the symbolic substitution by substituting hole references through
// the (acyclic) consumer-before-producer dependencies. Fails when a hole is
// undetermined or an infinity survives. Lengths are clamped to max(0, len)
// unless provably non-negative: the extracted constraint requires every loop
// extent to be non-negative, and window lengths are the only variables known
// to satisfy that on their own.
resolve_result resolve(const sym_substitution& sym, const tgt_program& p);

// Replaces every hole reference; the result must be closed. Values may
// reference parameters, window parameters, and loop variables in scope at
// the hole's use sites.
tgt_program substitute_holes(const tgt_program& p, const std::map<hole_id, interval>& sub);

// Baseline completion: extract, infer, resolve, substitute; when resolution
// fails the body is replaced by a single failing assertion.
tgt_program complete_baseline(const tgt_program& p);

// Any map from hole-bearing to hole-free programs.
using bounds_engine = std::function<tgt_program(const tgt_program&)>;

bounds_engine baseline_engine();
bounds_engine assert_false_engine();

// Ground validation of a substitution against the extracted constraint for
// one input: quantifiers run over concrete ranges, memberships are checked,
// and a failing atom stops evaluation the way the program would stop.
struct ground_report {
  bool satisfied = true;       // no membership violated before any stop
  bool stopped = false;        // an assertion atom failed
  int indeterminate = 0;       // conjuncts with data-dependent accesses
  std::vector<std::string> violations;
};

ground_report check_satisfies(const tgt_program& p, const std::map<hole_id, interval>& sub,
                              const realize_input& z);

}  // namespace usl

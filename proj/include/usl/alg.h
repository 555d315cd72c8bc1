#pragma once

#include "usl/expr.h"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace usl {

// One rule of a func body. Stage 0 is the pure stage: no rdom, lhs is the
// func's own variables, predicate 1, and no self-reference. Update stages may
// carry a reduction domain whose first variable changes fastest.
struct stage {
  std::vector<std::pair<std::string, interval>> rdom;
  std::vector<expr> lhs;
  expr rhs;
  expr predicate;
};

struct func_def {
  std::string name;
  std::vector<std::string> vars;
  std::vector<stage> stages;

  // Builds the implicit pure stage around a bare expression.
  static stage pure_stage(const std::vector<std::string>& vars, expr rhs);
};

struct pipeline {
  std::string output;
  std::vector<std::string> params;
  std::vector<func_def> funcs;

  const func_def* find(const std::string& name) const;
  int func_index(const std::string& name) const;  // -1 when absent
};

// Concrete realization request: parameter values plus a constant window per
// output dimension.
struct const_interval {
  integer min, len;
};

struct realize_input {
  std::vector<integer> param_values;
  std::vector<const_interval> window;
};

struct buffer_image {
  int dims = 0;
  std::map<std::vector<integer>, value> points;

  // Reads a point; absent points are uninitialized memory.
  value at(const std::vector<integer>& pt) const {
    auto it = points.find(pt);
    return it == points.end() ? value::mem_error() : it->second;
  }
};

struct diagnostic {
  std::string rule;
  std::string detail;
};

// Thrown when an evaluation exceeds its step budget. Valid programs always
// terminate, but generated cases can be impractically large; the harness
// records these instead of waiting them out.
struct resource_limit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string to_string(const std::vector<diagnostic>& diags);

// Validity: unique names, startup rdom bounds, output defined last,
// definition before use, pure first stage, arity checks, and the syntactic
// separation restriction.
std::vector<diagnostic> validate(const pipeline& p);

// Per-stage pure/reduction dimension split: dimension i is pure in a stage
// iff the func's i-th variable occurs anywhere in it.
std::vector<std::set<int>> classify_dims(const func_def& f);

// Big-step reference semantics: evaluates the output func on every point of
// the requested window. Requires a valid pipeline. Always terminates; errors
// surface only as error values in the image.
buffer_image realize(const pipeline& p, const realize_input& z);

// Same semantics without the memo table; used to check that caching is
// observationally invisible.
buffer_image realize_unmemoized(const pipeline& p, const realize_input& z);

}  // namespace usl

#pragma once

#include "usl/expr.h"

#include <optional>

namespace usl {

// Meaning-preserving simplification: folds constant subtrees with eval_op and
// normalizes sums/products of affine terms into a canonical ordering. Terms
// containing func accesses are never dropped, so error propagation is
// preserved (e.g. x / 0 folds to 0, g[x] / 0 does not).
expr simplify(const expr& e);
interval simplify(const interval& i);

// simplify(b - a) when it is a constant; the workhorse behind symbolic
// min/max decisions in interval hulls.
std::optional<integer> constant_difference(const expr& a, const expr& b);

// Total deterministic ordering on expressions, used for canonical term order.
int compare(const expr& a, const expr& b);

}  // namespace usl

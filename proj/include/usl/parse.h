#pragma once

#include "usl/alg.h"
#include "usl/sched.h"

#include <stdexcept>

namespace usl {

struct parse_error : std::runtime_error {
  int line, column;
  parse_error(const std::string& msg, int line_, int column_)
      : std::runtime_error(msg + " at " + std::to_string(line_) + ":" + std::to_string(column_)),
        line(line_),
        column(column_) {}
};

// Pipeline text:
//   pipeline f(p1) {
//     fun g(x) = { x * p1 };
//     fun f(x) = { g[x] + g[x+1]; rdom(r = (0, 3)) in (x) <- f[x] + g[r] if 1 };
//   }
// The first stage is a bare expression; update stages take an rdom (possibly
// empty), a write site, a rule, and an optional predicate. '#' starts a
// comment. Syntax only; semantic checks live in validate().
pipeline parse_pipeline(const std::string& text);

// Schedules are one directive per line:
//   specialize(f, p1 > 8)
//   split(f.x, xo, xi, 3, guard)
//   fuse(f.s1.y, t)
//   swap(f.xo)
//   traverse(f.xo, parallel)
//   compute-at(g, f.xo)
//   store-at(g, f.xo)
//   bound(f, x, 0, 16)
//   bound-extent(f, x, 16)
//   align-bounds(f, x, 4, 0)
// Loop names are func[.z<i>][.s<j>].var; the stage defaults to the last.
schedule parse_schedule(const std::string& text);

// Expressions alone, mostly for tests and directive arguments.
expr parse_expr_text(const std::string& text);

// Canonical pipeline rendering; parses back to an equal tree.
std::string to_string(const pipeline& p);

}  // namespace usl

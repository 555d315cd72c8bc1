#pragma once

#include "usl/value.h"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace usl {

enum class expr_kind : std::uint8_t {
  constant,
  variable,
  access,    // f[e1, ..., en], optionally labeled with stage/specialization
  op,
  hole,      // one part (min or len) of a labeled bounds hole
  pos_inf,   // only inside interval endpoints built by bounds inference
  neg_inf,
};

enum class hole_kind : std::uint8_t { mem, cpu };
enum class hole_part : std::uint8_t { min, len };

// Identity of a bounds hole: allocation (mem) holes are per func/dimension;
// compute (cpu) holes additionally carry a stage and specialization. A
// missing stage means the last stage of the func, which shares one hole
// across all specializations.
struct hole_id {
  hole_kind kind = hole_kind::mem;
  std::string func;
  std::string dim;  // pure variable name of the dimension
  std::optional<int> stage;
  std::optional<int> spec;

  friend auto operator<=>(const hole_id&, const hole_id&) = default;
  friend bool operator==(const hole_id&, const hole_id&) = default;

  // "?mem:f.x", "?cpu:f.s0.z1.x"
  std::string name() const;
};

struct expr_node;

// Immutable shared expression tree with value semantics.
class expr {
public:
  expr() = default;

  static expr constant(integer n);
  static expr constant(long n) { return constant(integer(n)); }
  static expr variable(std::string name);
  static expr access(std::string func, std::optional<int> stage, std::optional<int> spec,
                     std::vector<expr> index);
  static expr make_op(op_kind op, std::vector<expr> args);
  static expr hole_ref(hole_id id, hole_part part);
  static expr pos_inf();
  static expr neg_inf();

  bool defined() const { return node_ != nullptr; }
  expr_kind kind() const;

  const integer& const_value() const;
  const std::string& name() const;  // variable name or accessed func
  std::optional<int> access_stage() const;
  std::optional<int> access_spec() const;
  op_kind op() const;
  const std::vector<expr>& args() const;  // operands or access indices
  const hole_id& hole() const;
  hole_part part() const;

  bool is_const() const { return defined() && kind() == expr_kind::constant; }
  bool is_const(long n) const { return is_const() && const_value() == n; }
  bool is_inf() const {
    return defined() && (kind() == expr_kind::pos_inf || kind() == expr_kind::neg_inf);
  }

  bool same_as(const expr& other) const { return node_ == other.node_; }

  // Node identity for caches; valid while the tree is alive.
  const void* identity() const { return node_.get(); }

private:
  explicit expr(std::shared_ptr<const expr_node> n) : node_(std::move(n)) {}
  std::shared_ptr<const expr_node> node_;
};

// Convenience builders used throughout lowering and scheduling.
expr operator+(expr a, expr b);
expr operator-(expr a, expr b);
expr operator*(expr a, expr b);
expr operator/(expr a, expr b);
expr operator%(expr a, expr b);
expr operator<(expr a, expr b);
expr operator>(expr a, expr b);
expr operator&&(expr a, expr b);
expr operator||(expr a, expr b);
expr equals(expr a, expr b);
expr logic_not(expr a);
expr select(expr c, expr t, expr f);
expr min(expr a, expr b);
expr max(expr a, expr b);

// A half-open window [min, min + len); empty when len <= 0.
struct interval {
  expr min, len;
};

// Structural equality.
bool equal(const expr& a, const expr& b);
bool equal(const interval& a, const interval& b);

// Resolves a labeled access at a fully evaluated point. May return error
// values, which propagate through the enclosing expression.
using access_reader = std::function<value(const std::string& func, std::optional<int> stage,
                                          std::optional<int> spec,
                                          const std::vector<value>& point)>;

struct eval_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strict evaluation: all subexpressions evaluate, index expressions before
// the access itself. Unbound variables, holes, and infinities are structural
// errors (eval_error).
value eval_expr(const expr& e, const std::map<std::string, value>& env,
                const access_reader& reader);

// Walks every node of the tree (pre-order).
void visit_exprs(const expr& e, const std::function<void(const expr&)>& fn);

// Rewrites leaves: fn returns a replacement or an undefined expr to keep
// descending. Op/access nodes are rebuilt around rewritten children.
expr rewrite_exprs(const expr& e, const std::function<expr(const expr&)>& fn);

bool contains_access(const expr& e);
bool contains_hole(const expr& e);
bool contains_inf(const expr& e);
bool contains_var(const expr& e, const std::string& name);

// True iff e has no func access and every variable is one of params.
bool is_startup_expr(const expr& e, const std::vector<std::string>& params);

// Canonical rendering: infix with parentheses around compound operands,
// select(c,t,f), f[e1,...,en], holes as (?cpu:f.x).min.
std::string to_string(const expr& e);
std::string to_string(const interval& i);

}  // namespace usl

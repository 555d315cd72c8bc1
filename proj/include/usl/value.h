#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <span>
#include <string>

namespace usl {

using integer = boost::multiprecision::cpp_int;

// The scalar domain shared by both languages: arbitrary-precision integers
// extended with two ordered error sentinels, err_rdom < err_mem. Any operator
// applied to one or more errors yields the greatest error among its
// arguments.
class value {
public:
  enum class kind_t : std::uint8_t { int_v, err_rdom, err_mem };

  value() : kind_(kind_t::int_v), n_(0) {}
  explicit value(integer n) : kind_(kind_t::int_v), n_(std::move(n)) {}
  explicit value(long n) : kind_(kind_t::int_v), n_(n) {}

  static value rdom_error() { return value(kind_t::err_rdom); }
  static value mem_error() { return value(kind_t::err_mem); }

  kind_t kind() const { return kind_; }
  bool is_int() const { return kind_ == kind_t::int_v; }
  bool is_error() const { return kind_ != kind_t::int_v; }

  const integer& as_int() const { return n_; }

  // Int(0) is false, any other Int is true. Errors are neither; callers must
  // check is_error() first.
  bool truthy() const { return is_int() && n_ != 0; }

  friend bool operator==(const value& a, const value& b) {
    return a.kind_ == b.kind_ && (a.kind_ != kind_t::int_v || a.n_ == b.n_);
  }
  friend bool operator!=(const value& a, const value& b) { return !(a == b); }
  friend bool operator<(const value& a, const value& b) {
    if (a.kind_ != b.kind_) return a.kind_ < b.kind_;
    return a.kind_ == kind_t::int_v && a.n_ < b.n_;
  }

private:
  explicit value(kind_t k) : kind_(k), n_(0) {}

  kind_t kind_;
  integer n_;
};

enum class op_kind : std::uint8_t {
  add,
  sub,
  mul,
  div,
  mod,
  logic_or,
  logic_and,
  logic_not,
  lt,
  gt,
  eq,
  select,
  min,
  max,
};

int op_arity(op_kind op);
const char* op_token(op_kind op);

// Division rounds toward negative infinity; the remainder carries the sign of
// the divisor. Both require b != 0.
integer floor_div(const integer& a, const integer& b);
integer floor_mod(const integer& a, const integer& b);

// Total evaluation: errors absorb (greatest wins), division and modulo by
// zero are zero, logic yields Int(0)/Int(1), select takes its (already
// evaluated) second or third argument by the truthiness of the first.
value eval_op(op_kind op, std::span<const value> args);

std::string to_string(const value& v);

}  // namespace usl

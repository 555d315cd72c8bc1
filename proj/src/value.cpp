#include "usl/value.h"

#include <cassert>
#include <stdexcept>

namespace usl {

int op_arity(op_kind op) {
  switch (op) {
  case op_kind::logic_not: return 1;
  case op_kind::select: return 3;
  default: return 2;
  }
}

const char* op_token(op_kind op) {
  switch (op) {
  case op_kind::add: return "+";
  case op_kind::sub: return "-";
  case op_kind::mul: return "*";
  case op_kind::div: return "/";
  case op_kind::mod: return "%";
  case op_kind::logic_or: return "||";
  case op_kind::logic_and: return "&&";
  case op_kind::logic_not: return "!";
  case op_kind::lt: return "<";
  case op_kind::gt: return ">";
  case op_kind::eq: return "==";
  case op_kind::select: return "select";
  case op_kind::min: return "min";
  case op_kind::max: return "max";
  }
  return "?";
}

integer floor_div(const integer& a, const integer& b) {
  assert(b != 0);
  integer q = a / b;  // truncates toward zero
  if (q * b != a && ((a < 0) != (b < 0))) q -= 1;
  return q;
}

integer floor_mod(const integer& a, const integer& b) {
  assert(b != 0);
  return a - b * floor_div(a, b);
}

value eval_op(op_kind op, std::span<const value> args) {
  if (static_cast<int>(args.size()) != op_arity(op)) {
    throw std::invalid_argument("operator arity mismatch");
  }
  value err;
  bool has_err = false;
  for (const value& v : args) {
    if (v.is_error() && (!has_err || err < v)) {
      err = v;
      has_err = true;
    }
  }
  if (has_err) return err;

  auto b = [](bool x) { return value(integer(x ? 1 : 0)); };
  const integer& a0 = args[0].as_int();
  switch (op) {
  case op_kind::add: return value(a0 + args[1].as_int());
  case op_kind::sub: return value(a0 - args[1].as_int());
  case op_kind::mul: return value(a0 * args[1].as_int());
  case op_kind::div:
    if (args[1].as_int() == 0) return value(integer(0));
    return value(floor_div(a0, args[1].as_int()));
  case op_kind::mod:
    if (args[1].as_int() == 0) return value(integer(0));
    return value(floor_mod(a0, args[1].as_int()));
  case op_kind::logic_or: return b(a0 != 0 || args[1].as_int() != 0);
  case op_kind::logic_and: return b(a0 != 0 && args[1].as_int() != 0);
  case op_kind::logic_not: return b(a0 == 0);
  case op_kind::lt: return b(a0 < args[1].as_int());
  case op_kind::gt: return b(a0 > args[1].as_int());
  case op_kind::eq: return b(a0 == args[1].as_int());
  case op_kind::select: return args[0].truthy() ? args[1] : args[2];
  case op_kind::min: return value(a0 < args[1].as_int() ? a0 : args[1].as_int());
  case op_kind::max: return value(a0 > args[1].as_int() ? a0 : args[1].as_int());
  }
  throw std::logic_error("unhandled operator");
}

std::string to_string(const value& v) {
  switch (v.kind()) {
  case value::kind_t::err_rdom: return "err_rdom";
  case value::kind_t::err_mem: return "err_mem";
  default: return v.as_int().str();
  }
}

}  // namespace usl

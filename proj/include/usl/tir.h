#pragma once

#include "usl/alg.h"
#include "usl/expr.h"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace usl {

enum class traversal : std::uint8_t { serial, parallel };

enum class label_kind : std::uint8_t { func, stage, spec };

// Statement labels have no runtime meaning; they are handles for scheduling
// and bounds extraction. Func labels name the func, stage labels s<i> and
// specialization labels z<j> carry an index.
struct label_id {
  label_kind kind;
  std::string func;  // func labels only
  int index = 0;     // stage/spec labels only

  std::string name() const;
  friend bool operator==(const label_id&, const label_id&) = default;
};

enum class stmt_kind : std::uint8_t {
  nop,
  assert_check,
  seq,
  alloc,
  store,
  if_branch,
  for_loop,
  let_bind,
  labeled,
};

struct stmt_node;

class stmt {
public:
  stmt() = default;

  static stmt nop();
  static stmt assert_check(expr cond);
  static stmt seq(stmt a, stmt b);
  static stmt alloc(std::string func, std::vector<interval> bounds);
  // A missing stage labels a write to the func's last stage; spec is set only
  // inside specialization branches.
  static stmt store(std::string func, std::optional<int> stage, std::optional<int> spec,
                    std::vector<expr> index, expr rhs);
  static stmt if_branch(expr cond, stmt then_s, stmt else_s);
  static stmt for_loop(traversal t, std::string var, interval bounds, stmt body);
  static stmt let_bind(std::string var, expr value, stmt body);
  static stmt labeled(label_id l, stmt body);

  bool defined() const { return node_ != nullptr; }
  stmt_kind kind() const;

  const expr& cond() const;              // assert, if
  const expr& let_value() const;
  const expr& store_rhs() const;
  const std::string& name() const;       // alloc/store func, for/let var
  std::optional<int> store_stage() const;
  std::optional<int> store_spec() const;
  const std::vector<expr>& store_index() const;
  const std::vector<interval>& alloc_bounds() const;
  const interval& loop_bounds() const;
  traversal loop_traversal() const;
  const label_id& label() const;
  const stmt& first() const;   // seq head, if-then, loop/let/label body
  const stmt& second() const;  // seq tail, if-else

  bool same_as(const stmt& other) const { return node_ == other.node_; }

private:
  explicit stmt(std::shared_ptr<const stmt_node> n) : node_(std::move(n)) {}
  std::shared_ptr<const stmt_node> node_;
};

// Sequencing helpers. seq_of builds a right-nested chain; flatten recovers
// the statement list in program order.
stmt seq_of(std::vector<stmt> stmts);
std::vector<stmt> flatten_seq(const stmt& s);

void visit_stmts(const stmt& s, const std::function<void(const stmt&)>& fn);
void visit_stmt_exprs(const stmt& s, const std::function<void(const expr&)>& fn);
stmt rewrite_stmt_exprs(const stmt& s, const std::function<expr(const expr&)>& fn);

// The IR program. Window parameters (<dim>_min, <dim>_len per output
// dimension) follow the user parameters. Metadata below the body is carried
// from lowering so scheduling and bounds extraction can resolve stages,
// dimensions, and loop purity without the original pipeline.
struct tgt_program {
  std::string output;
  std::vector<std::string> params;
  std::vector<std::string> window_params;
  stmt body;
  std::vector<hole_id> holes;

  struct func_info {
    std::vector<std::string> dims;
    int stage_count = 1;
    // Dimensions lowered to loops per stage; a stage omits dimensions it
    // does not mention.
    std::vector<std::set<std::string>> stage_dims;
    std::vector<int> specs;  // specialization labels in branch order, if any
  };
  std::map<std::string, func_info> funcs;

  // (func, spec or -1, stage, var) of every pure loop.
  std::set<std::tuple<std::string, int, int, std::string>> pure_loops;

  std::vector<std::string> all_params() const;
  bool is_pure_loop(const std::string& func, int spec, int stage, const std::string& var) const {
    return pure_loops.count({func, spec, stage, var}) > 0;
  }
  int last_stage(const std::string& func) const;
};

bool program_has_holes(const tgt_program& p);

// The compute hole governing (func, dim) at a given stage. Stages that do
// not lower a dimension delegate it to the most recent stage that does; the
// last stage's holes drop the stage index and are shared across
// specializations.
hole_id resolve_cpu_hole(const tgt_program& p, const std::string& func, const std::string& dim,
                         std::optional<int> stage, std::optional<int> spec);

// Lexical shadowing: for and let bindings may not reuse a live name; the
// small-step environment drops a loop variable when its loop finishes.
std::vector<diagnostic> check_shadowing(const tgt_program& p);

// Structural checks independent of scheduling: no holes and no variable
// shadowing. run() requires these to hold.
std::vector<diagnostic> validate_ir(const tgt_program& p);

struct run_outcome {
  enum class kind_t : std::uint8_t { completed, assert_failed, rdom_failed, mem_error };
  kind_t kind = kind_t::completed;

  // completed
  buffer_image output;
  std::map<std::string, buffer_image> buffers;
  // writes: (func, point, enclosing spec label or -1) -> count
  std::map<std::tuple<std::string, std::vector<integer>, int>, long> writes;

  // stuck states
  std::string site;
  std::string fault_func;
  std::string fault_point;

  long write_count(const std::string& func, const std::vector<integer>& point) const;
  std::set<int> specs_written(const std::string& func) const;
};

std::string to_string(run_outcome::kind_t k);

struct run_options {
  // When set, each parallel loop executes its iterations in a seeded
  // pseudo-random order. Serial loops are unaffected.
  std::optional<std::uint64_t> permute_seed;
  // Statement budget before a resource_limit is thrown.
  long max_steps = 200000000;
};

// Executes a hole-free program. Gets stuck only in the four declared ways:
// assert failure (errors in the condition fail the check), negative loop
// extent, and out-of-bounds reads or writes. Uninitialized reads inside an
// allocation yield err_mem values rather than faults.
run_outcome run(const tgt_program& p, const realize_input& z, const run_options& opts = {});

run_outcome run_permuted(const tgt_program& p, const realize_input& z, std::uint64_t seed);

// Deterministic textual dump, one statement per line, two-space indents.
std::string to_string(const tgt_program& p);
std::string to_string(const stmt& s);

}  // namespace usl

#include "usl/bounds.h"
#include "usl/harness.h"
#include "usl/lower.h"
#include "usl/parse.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace usl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

pipeline load_pipeline(const std::string& path) {
  pipeline p = parse_pipeline(slurp(path));
  std::vector<diagnostic> diags = validate(p);
  if (!diags.empty()) {
    throw std::runtime_error("invalid pipeline:\n" + to_string(diags));
  }
  return p;
}

schedule load_schedule(const std::string& path) { return parse_schedule(slurp(path)); }

tgt_program schedule_program(const pipeline& p, const schedule& s) {
  std::vector<diagnostic> diags;
  tgt_program t = apply_schedule(lower(p), s, diags);
  if (!diags.empty()) throw std::runtime_error("invalid schedule:\n" + to_string(diags));
  return t;
}

realize_input parse_input(const pipeline& p, const std::vector<std::string>& params,
                          const std::string& window) {
  realize_input z;
  std::map<std::string, integer> by_name;
  for (const std::string& kv : params) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos) throw std::runtime_error("--param expects name=value");
    by_name[kv.substr(0, eq)] = integer(kv.substr(eq + 1));
  }
  for (const std::string& name : p.params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("missing --param " + name + "=<value>");
    z.param_values.push_back(it->second);
    by_name.erase(it);
  }
  if (!by_name.empty()) {
    throw std::runtime_error("unknown parameter '" + by_name.begin()->first + "'");
  }

  size_t dims = p.funcs.back().vars.size();
  std::stringstream ws(window);
  std::string piece;
  while (std::getline(ws, piece, ',')) {
    size_t colon = piece.find(':');
    if (colon == std::string::npos) throw std::runtime_error("--window expects min:len[,...]");
    z.window.push_back({integer(piece.substr(0, colon)), integer(piece.substr(colon + 1))});
  }
  if (z.window.size() != dims) {
    throw std::runtime_error("--window needs " + std::to_string(dims) + " dimension(s)");
  }
  return z;
}

void print_image(const std::string& name, const buffer_image& img) {
  for (const auto& [pt, v] : img.points) {
    std::cout << name << "[";
    for (size_t i = 0; i < pt.size(); ++i) {
      if (i) std::cout << ", ";
      std::cout << pt[i].str();
    }
    std::cout << "]=" << to_string(v) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"user-schedulable array language tools"};
  app.require_subcommand(1);

  std::string pipeline_path, schedule_path, window;
  std::vector<std::string> params;

  auto add_input_flags = [&](CLI::App* cmd, bool with_input) {
    cmd->add_option("pipeline", pipeline_path, "pipeline source file")->required();
    if (with_input) {
      cmd->add_option("--param", params, "parameter binding name=value");
      cmd->add_option("--window", window, "output window min:len per dimension")->required();
    }
  };

  CLI::App* validate_cmd = app.add_subcommand("validate", "check a pipeline's validity rules");
  add_input_flags(validate_cmd, false);

  CLI::App* run_alg_cmd = app.add_subcommand("run-alg", "evaluate with the reference semantics");
  add_input_flags(run_alg_cmd, true);

  CLI::App* lower_cmd = app.add_subcommand("lower", "dump the default-schedule program");
  add_input_flags(lower_cmd, false);

  CLI::App* sched_cmd = app.add_subcommand("schedule", "dump the scheduled program");
  add_input_flags(sched_cmd, false);
  sched_cmd->add_option("schedule", schedule_path, "schedule file")->required();

  CLI::App* constraint_cmd = app.add_subcommand("constraint", "dump the bounds constraint");
  add_input_flags(constraint_cmd, false);
  constraint_cmd->add_option("schedule", schedule_path, "schedule file")->required();

  CLI::App* bounds_cmd = app.add_subcommand("bounds", "dump the inferred bounds");
  add_input_flags(bounds_cmd, false);
  bounds_cmd->add_option("schedule", schedule_path, "schedule file")->required();

  CLI::App* run_cmd = app.add_subcommand("run", "complete with the baseline engine and execute");
  add_input_flags(run_cmd, true);
  run_cmd->add_option("schedule", schedule_path, "schedule file")->required();

  CLI::App* difftest_cmd =
      app.add_subcommand("difftest", "compare the scheduled program with the reference");
  add_input_flags(difftest_cmd, true);
  difftest_cmd->add_option("schedule", schedule_path, "schedule file")->required();

  CLI::App* fuzz_cmd = app.add_subcommand("fuzz", "differential fuzzing of random cases");
  fuzz_config cfg;
  std::string records_path;
  fuzz_cmd->add_option("--seed", cfg.seed, "random seed");
  fuzz_cmd->add_option("--pipelines", cfg.pipelines, "pipelines to generate");
  fuzz_cmd->add_option("--schedules", cfg.schedules_per_pipeline, "schedules per pipeline");
  fuzz_cmd->add_option("--inputs", cfg.inputs_per_schedule, "inputs per schedule");
  fuzz_cmd->add_option("--max-funcs", cfg.max_funcs, "func count cap");
  fuzz_cmd->add_option("--max-dims", cfg.max_dims, "dimension cap");
  fuzz_cmd->add_option("--max-stages", cfg.max_stages, "stage count cap");
  fuzz_cmd->add_option("--max-window", cfg.max_window_len, "window length cap");
  fuzz_cmd->add_option("--records", records_path, "write one structured record per case");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) {
      pipeline p = parse_pipeline(slurp(pipeline_path));
      std::vector<diagnostic> diags = validate(p);
      if (!diags.empty()) {
        std::cout << to_string(diags);
        return 1;
      }
      std::cout << "valid\n";
      return 0;
    }

    if (run_alg_cmd->parsed()) {
      pipeline p = load_pipeline(pipeline_path);
      realize_input z = parse_input(p, params, window);
      print_image(p.output, realize(p, z));
      return 0;
    }

    if (lower_cmd->parsed()) {
      std::cout << to_string(lower(load_pipeline(pipeline_path)));
      return 0;
    }

    if (sched_cmd->parsed()) {
      pipeline p = load_pipeline(pipeline_path);
      std::cout << to_string(schedule_program(p, load_schedule(schedule_path)));
      return 0;
    }

    if (constraint_cmd->parsed()) {
      pipeline p = load_pipeline(pipeline_path);
      std::cout << to_string(extract(schedule_program(p, load_schedule(schedule_path))));
      return 0;
    }

    if (bounds_cmd->parsed()) {
      pipeline p = load_pipeline(pipeline_path);
      tgt_program t = schedule_program(p, load_schedule(schedule_path));
      resolve_result r = resolve(infer_baseline(extract(t)), t);
      if (!r.ok) {
        std::cout << "FAIL " << r.reason << "\n";
        for (const hole_id& h : r.failed) std::cout << h.name() << "\n";
        return 1;
      }
      for (const hole_id& h : t.holes) {
        std::cout << h.name() << " = " << to_string(r.closed.at(h)) << "\n";
      }
      return 0;
    }

    if (run_cmd->parsed()) {
      pipeline p = load_pipeline(pipeline_path);
      realize_input z = parse_input(p, params, window);
      tgt_program completed =
          complete_baseline(schedule_program(p, load_schedule(schedule_path)));
      run_outcome o = run(completed, z);
      if (o.kind != run_outcome::kind_t::completed) {
        std::cout << to_string(o.kind) << ": " << o.site << "\n";
        return 1;
      }
      print_image(p.output, o.output);
      return 0;
    }

    if (difftest_cmd->parsed()) {
      pipeline p = load_pipeline(pipeline_path);
      realize_input z = parse_input(p, params, window);
      confluence_verdict v =
          check_confluence(p, load_schedule(schedule_path), baseline_engine(), z);
      std::cout << to_string(v) << "\n";
      return v.sound() ? 0 : 2;
    }

    if (fuzz_cmd->parsed()) {
      fuzz_report r = run_fuzz(cfg, baseline_engine());
      std::cout << r.summary();
      if (!records_path.empty()) {
        std::ofstream out(records_path);
        for (const fuzz_case& c : r.records) {
          nlohmann::json j{{"seed", c.seed},           {"pipeline", c.pipeline_id},
                           {"schedule", c.schedule_id}, {"input", c.input_id},
                           {"verdict", c.verdict},      {"deterministic", c.determinism_ok},
                           {"ms", c.millis}};
          out << j.dump() << "\n";
        }
      }
      return r.ok() ? 0 : 2;
    }
  } catch (const parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

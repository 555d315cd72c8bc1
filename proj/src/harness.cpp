#include "usl/harness.h"

#include "usl/lower.h"
#include "usl/parse.h"

#include <chrono>
#include <sstream>

namespace usl {

std::string to_string(const confluence_verdict& v) {
  std::string out;
  switch (v.kind) {
  case confluence_verdict::kind_t::alg_error: out = "AlgError"; break;
  case confluence_verdict::kind_t::assert_stop: out = "AssertStop"; break;
  case confluence_verdict::kind_t::equivalent: out = "Equivalent"; break;
  case confluence_verdict::kind_t::divergent: out = "DIVERGENT"; break;
  case confluence_verdict::kind_t::mem_fault: out = "MEMFAULT"; break;
  case confluence_verdict::kind_t::rdom_stop: out = "RdomStop"; break;
  }
  if (!v.detail.empty()) out += " " + v.detail;
  if (v.anomalous) out += " [anomalous]";
  return out;
}

namespace {

std::string point_str(const std::vector<integer>& pt) {
  std::string s = "(";
  for (size_t i = 0; i < pt.size(); ++i) {
    if (i) s += ", ";
    s += pt[i].str();
  }
  return s + ")";
}

// Does any reduction extent in the pipeline evaluate negative on this input?
bool has_negative_rdom(const pipeline& p, const realize_input& z) {
  std::map<std::string, value> env;
  for (size_t i = 0; i < p.params.size(); ++i) env[p.params[i]] = value(z.param_values[i]);
  for (const func_def& f : p.funcs) {
    for (const stage& s : f.stages) {
      for (const auto& [rv, bounds] : s.rdom) {
        value len = eval_expr(bounds.len, env, nullptr);
        if (len.is_int() && len.as_int() < 0) return true;
      }
    }
  }
  return false;
}

}  // namespace

confluence_verdict check_confluence(const pipeline& alg, const tgt_program& completed,
                                    const realize_input& z, const run_options& opts) {
  confluence_verdict v;
  buffer_image reference = realize(alg, z);
  for (const auto& [pt, val] : reference.points) {
    if (val.is_error()) {
      v.kind = confluence_verdict::kind_t::alg_error;
      v.detail = "at " + point_str(pt);
      return v;
    }
  }

  run_outcome o = run(completed, z, opts);
  switch (o.kind) {
  case run_outcome::kind_t::assert_failed:
    v.kind = confluence_verdict::kind_t::assert_stop;
    v.detail = o.site;
    return v;
  case run_outcome::kind_t::rdom_failed:
    v.kind = confluence_verdict::kind_t::rdom_stop;
    v.detail = o.site;
    // A stuck loop must trace back to a negative reduction extent; the
    // algorithm side is then an error unless the func is never read.
    v.anomalous = !has_negative_rdom(alg, z);
    return v;
  case run_outcome::kind_t::mem_error:
    v.kind = confluence_verdict::kind_t::mem_fault;
    v.detail = o.fault_func + o.fault_point + " during " + o.site;
    return v;
  case run_outcome::kind_t::completed: break;
  }

  for (const auto& [pt, want] : reference.points) {
    value got = o.output.at(pt);
    if (!(got == want)) {
      v.kind = confluence_verdict::kind_t::divergent;
      v.detail = "at " + point_str(pt) + ": reference=" + to_string(want) +
                 " target=" + to_string(got);
      return v;
    }
  }
  v.kind = confluence_verdict::kind_t::equivalent;
  return v;
}

confluence_verdict check_confluence(const pipeline& alg, const schedule& s,
                                    const bounds_engine& engine, const realize_input& z) {
  std::vector<diagnostic> diags;
  tgt_program scheduled = apply_schedule(lower(alg), s, diags);
  if (!diags.empty()) {
    throw std::invalid_argument("invalid schedule: " + to_string(diags));
  }
  return check_confluence(alg, engine(scheduled), z);
}

std::string fuzz_report::summary() const {
  std::ostringstream os;
  os << "cases: " << cases << "\n";
  for (const auto& [verdict, count] : verdict_counts) {
    os << "  " << verdict << ": " << count << "\n";
  }
  os << "divergences: " << divergences << ", mem faults: " << mem_faults
     << ", determinism mismatches: " << determinism_mismatches << ", anomalies: " << anomalies
     << "\n";
  for (const std::string& f : failures) os << f << "\n";
  return os.str();
}

namespace {

const char* verdict_name(confluence_verdict::kind_t k) {
  switch (k) {
  case confluence_verdict::kind_t::alg_error: return "AlgError";
  case confluence_verdict::kind_t::assert_stop: return "AssertStop";
  case confluence_verdict::kind_t::equivalent: return "Equivalent";
  case confluence_verdict::kind_t::divergent: return "DIVERGENT";
  case confluence_verdict::kind_t::mem_fault: return "MEMFAULT";
  case confluence_verdict::kind_t::rdom_stop: return "RdomStop";
  }
  return "?";
}

struct case_failure {
  bool failed = false;
  bool determinism = false;
  bool over_budget = false;
  confluence_verdict verdict;
};

// Evaluates one (pipeline, schedule, input) case end to end, including the
// permutation determinism check on completed runs.
case_failure evaluate_case(const pipeline& p, const schedule& s, const bounds_engine& engine,
                           const realize_input& z, std::uint64_t perm_salt,
                           confluence_verdict* out_verdict) {
  case_failure result;
  std::vector<diagnostic> diags;
  tgt_program scheduled = apply_schedule(lower(p), s, diags);
  if (!diags.empty()) throw std::logic_error("generated schedule failed to apply");
  tgt_program completed = engine(scheduled);
  run_options budget;
  budget.max_steps = 4000000;
  try {
    result.verdict = check_confluence(p, completed, z, budget);
    if (out_verdict) *out_verdict = result.verdict;
    result.failed = !result.verdict.sound();

    run_outcome base = run(completed, z, budget);
    for (std::uint64_t i = 1; i <= 3 && !result.failed; ++i) {
      run_options opts = budget;
      opts.permute_seed = perm_salt * 8191 + i;
      run_outcome perm = run(completed, z, opts);
      bool same = perm.kind == base.kind;
      if (same && base.kind == run_outcome::kind_t::completed) {
        same = perm.output.points == base.output.points;
      }
      if (!same) {
        result.failed = true;
        result.determinism = true;
      }
    }
  } catch (const resource_limit&) {
    result.over_budget = true;
    result.failed = false;
  }
  return result;
}

}  // namespace

fuzz_report run_fuzz(const fuzz_config& config, const bounds_engine& engine) {
  fuzz_report report;
  std::mt19937_64 master(config.seed);

  for (int pi = 0; pi < config.pipelines; ++pi) {
    std::uint64_t pipeline_seed = master();
    std::mt19937_64 rng(pipeline_seed);
    pipeline p = generate_pipeline(rng, config);
    tgt_program lowered = lower(p);

    for (int si = 0; si < config.schedules_per_pipeline; ++si) {
      // The first schedule of every pipeline is empty: lowering alone must
      // already be sound.
      schedule s = si == 0 ? schedule{} : generate_schedule(rng, lowered, config);

      for (int zi = 0; zi < config.inputs_per_schedule; ++zi) {
        realize_input z = generate_input(rng, p, config);
        auto t0 = std::chrono::steady_clock::now();
        confluence_verdict verdict;
        case_failure outcome =
            evaluate_case(p, s, engine, z, pipeline_seed + 131 * si + zi, &verdict);
        auto t1 = std::chrono::steady_clock::now();

        fuzz_case rec;
        rec.seed = pipeline_seed;
        rec.pipeline_id = pi;
        rec.schedule_id = si;
        rec.input_id = zi;
        rec.verdict = outcome.over_budget        ? "ResourceLimit"
                      : outcome.determinism ? "NONDETERMINISTIC"
                                            : verdict_name(verdict.kind);
        rec.determinism_ok = !outcome.determinism;
        rec.millis = std::chrono::duration<double, std::milli>(t1 - t0).count();
        report.records.push_back(rec);

        ++report.cases;
        ++report.verdict_counts[rec.verdict];
        if (!outcome.over_budget) {
          if (verdict.kind == confluence_verdict::kind_t::divergent) ++report.divergences;
          if (verdict.kind == confluence_verdict::kind_t::mem_fault) ++report.mem_faults;
          if (verdict.anomalous) ++report.anomalies;
          if (outcome.determinism) ++report.determinism_mismatches;
        }

        if (outcome.failed) {
          // Shrink: drop directives while the failure class persists.
          schedule best = s;
          bool shrunk = true;
          while (shrunk && !best.empty()) {
            shrunk = false;
            for (size_t drop = 0; drop < best.size(); ++drop) {
              schedule candidate = best;
              candidate.erase(candidate.begin() + drop);
              if (!validate_schedule(lower(p), candidate).empty()) continue;
              confluence_verdict cv;
              case_failure redo = evaluate_case(p, candidate, engine, z,
                                                pipeline_seed + 131 * si + zi, &cv);
              bool same_class = outcome.determinism ? redo.determinism
                                                    : (redo.failed && cv.kind == verdict.kind);
              if (same_class) {
                best = std::move(candidate);
                shrunk = true;
                break;
              }
            }
          }
          std::ostringstream os;
          os << "FAILURE case " << pi << "/" << si << "/" << zi << " seed " << pipeline_seed
             << ": " << (outcome.determinism ? "permutation mismatch" : to_string(verdict))
             << "\n--- pipeline ---\n"
             << to_string(p) << "--- schedule (minimized) ---\n"
             << to_string(best) << "--- input ---\nparams:";
          for (const integer& v : z.param_values) os << " " << v.str();
          os << " window:";
          for (const const_interval& w : z.window) {
            os << " " << w.min.str() << ":" << w.len.str();
          }
          report.failures.push_back(os.str());
        }
      }
    }
  }
  return report;
}

std::vector<quality_case> generate_corpus(const fuzz_config& config) {
  std::vector<quality_case> corpus;
  std::mt19937_64 master(config.seed);
  for (int pi = 0; pi < config.pipelines; ++pi) {
    std::mt19937_64 rng(master());
    pipeline p = generate_pipeline(rng, config);
    tgt_program lowered = lower(p);
    for (int si = 0; si < config.schedules_per_pipeline; ++si) {
      quality_case qc;
      qc.p = p;
      qc.s = si == 0 ? schedule{} : generate_schedule(rng, lowered, config);
      for (int zi = 0; zi < config.inputs_per_schedule; ++zi) {
        qc.inputs.push_back(generate_input(rng, p, config));
      }
      corpus.push_back(std::move(qc));
    }
  }
  return corpus;
}

quality_report check_engine_quality(const bounds_engine& candidate,
                                    const std::vector<quality_case>& corpus) {
  quality_report report;
  bounds_engine base = baseline_engine();
  for (size_t ci = 0; ci < corpus.size(); ++ci) {
    const quality_case& qc = corpus[ci];
    std::vector<diagnostic> diags;
    tgt_program scheduled = apply_schedule(lower(qc.p), qc.s, diags);
    if (!diags.empty()) continue;
    tgt_program base_done = base(scheduled);
    tgt_program cand_done = candidate(scheduled);

    for (size_t zi = 0; zi < qc.inputs.size(); ++zi) {
      const realize_input& z = qc.inputs[zi];
      ++report.cases;

      // Premises: the algorithm is clean and the baseline completion runs
      // without stopping and matches it.
      buffer_image reference = realize(qc.p, z);
      bool clean = true;
      for (const auto& [pt, val] : reference.points) clean = clean && !val.is_error();
      if (!clean) continue;
      confluence_verdict base_v = check_confluence(qc.p, base_done, z);
      if (base_v.kind != confluence_verdict::kind_t::equivalent) continue;
      ++report.premise_met;

      confluence_verdict cand_v = check_confluence(qc.p, cand_done, z);
      if (cand_v.kind != confluence_verdict::kind_t::equivalent) {
        report.violations.push_back("case " + std::to_string(ci) + " input " +
                                    std::to_string(zi) + ": baseline equivalent but candidate " +
                                    to_string(cand_v));
      }
    }
  }
  return report;
}

}  // namespace usl

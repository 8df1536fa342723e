// flc: parse, inspect, transform, evaluate, differentially test and
// benchmark .flc programs.
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "flc/ast.hpp"
#include "flc/deftree.hpp"
#include "flc/eval.hpp"
#include "flc/parser.hpp"
#include "flc/prelude.hpp"
#include "flc/transform.hpp"

using namespace flc;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct EvalFlags {
  std::string scheme = "basic";
  bool fallback = false;
  int limit = 100;
  long long steps = 100000;
  std::string strategy = "bfs";
  std::string int_range;
};

TransformScheme parse_scheme(const std::string& s) {
  if (s == "basic") return TransformScheme::Basic;
  if (s == "cont") return TransformScheme::Continuation;
  if (s == "replace") return TransformScheme::Replacement;
  throw CLI::ValidationError("--scheme must be basic|cont|replace");
}

EvalConfig make_config(const EvalFlags& f) {
  EvalConfig cfg;
  cfg.value_limit = f.limit;
  cfg.step_limit = f.steps;
  if (f.strategy == "bfs")
    cfg.strategy = EvalConfig::Strategy::BFS;
  else if (f.strategy == "dfs")
    cfg.strategy = EvalConfig::Strategy::DFS;
  else
    throw CLI::ValidationError("--strategy must be bfs|dfs");
  if (!f.int_range.empty()) {
    auto dots = f.int_range.find("..");
    if (dots == std::string::npos)
      throw CLI::ValidationError("--int-range expects LO..HI");
    cfg.has_int_range = true;
    cfg.int_lo = std::stoll(f.int_range.substr(0, dots));
    cfg.int_hi = std::stoll(f.int_range.substr(dots + 2));
  }
  return cfg;
}

Program transformed_program(const Program& p, const std::string& scheme,
                            bool fallback,
                            std::vector<ApplicabilityEntry>* report = nullptr) {
  // "none" drops default rules without compensation: the reference program
  // for completeness comparisons in `diff`.
  Program t = scheme == "none" ? drop_default_rules(p)
                               : apply_scheme(p, parse_scheme(scheme), fallback,
                                              report);
  normalize_program(t);
  return t;
}

struct EvalOutcome {
  std::vector<std::string> lines; // canonically sorted
  RunResult run;
};

EvalOutcome run_goal(const Program& p, const std::string& goal_text,
                     const std::string& scheme, bool fallback,
                     const EvalConfig& cfg) {
  Program t = transformed_program(p, scheme, fallback);
  std::vector<std::string> free_vars;
  ExprPtr goal = parse_expr(goal_text, t, &free_vars);
  EvalOutcome out;
  out.run = enumerate_values(goal, free_vars, t, cfg);
  for (const auto& v : out.run.values) out.lines.push_back(render_result(v));
  std::sort(out.lines.begin(), out.lines.end());
  return out;
}

int cmd_parse(const std::string& file) {
  Program p = load_program(slurp(file));
  std::cout << pretty_print(p);
  return 0;
}

int cmd_tree(const std::string& file, const std::string& op_name) {
  Program p = load_program(slurp(file));
  normalize_program(p);
  auto show = [&](const std::string& name) {
    const OperationDef* def = p.find_op(name);
    if (!def) throw std::runtime_error("unknown operation " + name);
    auto tree = build_definitional_tree(p, *def);
    std::cout << render_tree(*tree, *def);
  };
  if (!op_name.empty()) {
    show(op_name);
    return 0;
  }
  bool first = true;
  for (const auto& name : p.op_order) {
    if (p.ops.at(name).builtin) continue;
    if (p.ops.at(name).standard_rules.empty()) continue;
    if (!first) std::cout << '\n';
    first = false;
    show(name);
  }
  return 0;
}

int cmd_transform(const std::string& file, const std::string& scheme,
                  bool fallback) {
  Program p = load_program(slurp(file));
  std::vector<ApplicabilityEntry> report;
  Program t = apply_scheme(p, parse_scheme(scheme), fallback, &report);
  std::cout << pretty_print(t);
  if (scheme == "replace")
    for (const auto& e : report)
      std::cerr << e.op << '\t' << e.scheme
                << (e.reason.empty() ? "" : "\t" + e.reason) << '\n';
  return 0;
}

int cmd_eval(const std::string& file, const std::string& goal,
             const EvalFlags& flags) {
  Program p = load_program(slurp(file));
  EvalOutcome out =
      run_goal(p, goal, flags.scheme, flags.fallback, make_config(flags));
  for (const auto& l : out.lines) std::cout << l << '\n';
  if (!out.lines.empty()) return 0;
  return out.run.exhausted ? 2 : 3;
}

int cmd_diff(const std::string& file, const std::string& goal,
             const std::string& schemes_csv, bool skip_inapplicable,
             const EvalFlags& flags) {
  Program p = load_program(slurp(file));
  std::vector<std::string> schemes;
  std::stringstream ss(schemes_csv);
  std::string item;
  while (std::getline(ss, item, ',')) schemes.push_back(item);
  if (schemes.size() < 2) throw std::runtime_error("need at least two schemes");

  std::vector<std::pair<std::string, std::vector<std::string>>> results;
  for (const auto& s : schemes) {
    try {
      EvalOutcome out = run_goal(p, goal, s, flags.fallback, make_config(flags));
      if (!out.run.exhausted)
        throw std::runtime_error("budget exhausted under scheme " + s);
      results.emplace_back(s, out.lines);
    } catch (const TransformError& e) {
      if (skip_inapplicable && s == "replace") {
        std::cerr << "skipping replace: " << e.what() << '\n';
        continue;
      }
      throw;
    }
  }
  bool equal = true;
  for (size_t i = 1; i < results.size(); ++i)
    if (results[i].second != results[0].second) equal = false;
  if (equal) {
    std::cout << "EQUAL\n";
    return 0;
  }
  for (size_t i = 0; i < results.size(); ++i) {
    std::cout << "--- " << results[i].first << '\n';
    for (const auto& l : results[i].second) std::cout << l << '\n';
  }
  return 1;
}

int cmd_bench(const std::string& file, const std::vector<std::string>& goals,
              const std::string& schemes_csv, bool tsv, const EvalFlags& flags) {
  Program p = load_program(slurp(file));
  std::vector<std::string> schemes;
  std::stringstream ss(schemes_csv);
  std::string item;
  while (std::getline(ss, item, ',')) schemes.push_back(item);

  if (tsv)
    std::cout << "goal\tscheme\tvalues\tsteps\tset_evals\trules_std\trules_dflt"
                 "\tgenerators\ttime_ms\n";
  else
    std::cout << "goal | scheme | values | steps | set-evals | rules(std) | "
                 "rules(dflt) | generators | time-ms\n";
  for (const auto& goal : goals) {
    for (const auto& s : schemes) {
      std::string cell_error;
      RunResult run;
      double ms = 0;
      size_t nvalues = 0;
      try {
        auto t0 = std::chrono::steady_clock::now();
        EvalOutcome out = run_goal(p, goal, s, flags.fallback, make_config(flags));
        auto t1 = std::chrono::steady_clock::now();
        ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        run = std::move(out.run);
        nvalues = out.lines.size();
        if (!run.exhausted) cell_error = "budget";
      } catch (const std::exception& e) {
        cell_error = e.what();
      }
      char sep = tsv ? '\t' : ' ';
      std::cout << goal << sep << s << sep;
      if (!cell_error.empty() && cell_error != "budget") {
        std::cout << "error: " << cell_error << '\n';
        continue;
      }
      std::cout << nvalues << (cell_error == "budget" ? "(cut)" : "") << sep
                << run.counters.steps << sep << run.counters.set_evals << sep
                << run.counters.rule_apps_standard << sep
                << run.counters.rule_apps_default << sep
                << run.counters.generator_instantiations << sep << ms << '\n';
    }
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"flc: default rules for a functional logic language"};
  app.require_subcommand(1);

  std::string file, goal, op_name, schemes = "basic,cont";
  std::vector<std::string> goals;
  bool skip_inapplicable = false, tsv = false;
  EvalFlags flags;

  auto add_eval_flags = [&](CLI::App* c) {
    c->add_option("--scheme", flags.scheme, "basic|cont|replace");
    c->add_flag("--fallback", flags.fallback,
                "fall back to basic where replace is inapplicable");
    c->add_option("--limit", flags.limit, "maximum number of values");
    c->add_option("--steps", flags.steps, "step budget per alternative");
    c->add_option("--strategy", flags.strategy, "bfs|dfs");
    c->add_option("--int-range", flags.int_range,
                  "LO..HI generator range for integer variables");
  };

  CLI::App* parse = app.add_subcommand("parse", "parse and pretty-print");
  parse->add_option("file", file)->required();

  CLI::App* tree = app.add_subcommand("tree", "show definitional trees");
  tree->add_option("file", file)->required();
  tree->add_option("--op", op_name, "single operation to show");

  CLI::App* transform =
      app.add_subcommand("transform", "eliminate default rules");
  transform->add_option("file", file)->required();
  transform->add_option("--scheme", flags.scheme, "basic|cont|replace");
  transform->add_flag("--fallback", flags.fallback);

  CLI::App* eval = app.add_subcommand("eval", "enumerate values of a goal");
  eval->add_option("file", file)->required();
  eval->add_option("-e,--expr", goal, "goal expression")->required();
  add_eval_flags(eval);

  CLI::App* diff =
      app.add_subcommand("diff", "compare value sets across schemes");
  diff->add_option("file", file)->required();
  diff->add_option("-e,--expr", goal)->required();
  diff->add_option("--schemes", schemes, "comma-separated scheme list");
  diff->add_flag("--skip-inapplicable", skip_inapplicable);
  add_eval_flags(diff);

  CLI::App* bench = app.add_subcommand("bench", "counter benchmarks");
  bench->add_option("file", file)->required();
  bench->add_option("-e,--expr", goals, "goal expression (repeatable)")
      ->required();
  bench->add_option("--schemes", schemes);
  bench->add_flag("--tsv", tsv);
  add_eval_flags(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse->parsed()) return cmd_parse(file);
    if (tree->parsed()) return cmd_tree(file, op_name);
    if (transform->parsed())
      return cmd_transform(file, flags.scheme, flags.fallback);
    if (eval->parsed()) return cmd_eval(file, goal, flags);
    if (diff->parsed())
      return cmd_diff(file, goal, schemes, skip_inapplicable, flags);
    if (bench->parsed()) return cmd_bench(file, goals, schemes, tsv, flags);
  } catch (const std::exception& e) {
    std::cerr << "flc: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

// Shared helpers for the test suites: corpus loading and goal evaluation
// through the same transform -> normalize -> enumerate pipeline as the CLI.
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flc/ast.hpp"
#include "flc/eval.hpp"
#include "flc/parser.hpp"
#include "flc/prelude.hpp"
#include "flc/transform.hpp"

namespace flc::testutil {

inline std::string corpus_dir() {
  for (auto cand : {"../corpus", "../../corpus", "corpus"}) {
    if (std::filesystem::exists(std::filesystem::path(cand) / "zip.flc"))
      return cand;
  }
  return "corpus";
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Program load_corpus(const std::string& name) {
  return load_program(slurp(corpus_dir() + "/" + name + ".flc"));
}

struct GoalResult {
  std::vector<std::string> lines; // canonical sorted rendering
  RunResult run;
};

inline GoalResult eval_goal(const Program& p, const std::string& goal_text,
                            TransformScheme scheme = TransformScheme::Basic,
                            EvalConfig cfg = {}) {
  Program t = apply_scheme(p, scheme, false);
  normalize_program(t);
  std::vector<std::string> fv;
  ExprPtr goal = parse_expr(goal_text, t, &fv);
  GoalResult out;
  out.run = enumerate_values(goal, fv, t, cfg);
  for (const auto& v : out.run.values) out.lines.push_back(render_result(v));
  std::sort(out.lines.begin(), out.lines.end());
  return out;
}

inline GoalResult eval_goal_src(const std::string& src,
                                const std::string& goal_text,
                                TransformScheme scheme = TransformScheme::Basic,
                                EvalConfig cfg = {}) {
  return eval_goal(load_program(src), goal_text, scheme, cfg);
}

} // namespace flc::testutil

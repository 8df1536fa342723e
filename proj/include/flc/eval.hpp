// Lazy needed-narrowing evaluator with call-time choice, generator-based
// instantiation of free variables and level-tagged set functions.
//
// Evaluation rewrites a shared term graph in place. All non-determinism
// (choice rules, generators, set elements) forks the search by cloning the
// reachable graph, so two occurrences of one bound variable always resolve
// identically within an alternative. Every node carries the encapsulation
// level it was created at: inside a set-function scope with outer level L,
// choice and failure events of level <= L abort the whole scope and
// propagate outward, while deeper events stay encapsulated.
#pragma once

#include <deque>
#include <string>
#include <vector>

#include "flc/ast.hpp"
#include "flc/deftree.hpp"

namespace flc {

struct EvalConfig {
  enum class Strategy { BFS, DFS };
  Strategy strategy = Strategy::BFS;
  int value_limit = 100;
  long long step_limit = 100000;
  bool has_int_range = false;
  long long int_lo = 0, int_hi = 0;
};

struct Counters {
  long long steps = 0;
  long long set_evals = 0; // capsule runs started (restarts included)
  long long rule_apps_standard = 0;
  long long rule_apps_default = 0; // rules originating from a default rule
  long long generator_instantiations = 0;
};

struct ResultValue {
  ExprPtr value;
  // Instantiated goal variables, in goal order; identity bindings omitted.
  std::vector<std::pair<std::string, ExprPtr>> bindings;
  bool used_default_rule = false;
};

struct RunResult {
  std::vector<ResultValue> values;
  bool exhausted = true; // cleared when a step budget cut an alternative
  Counters counters;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Enumerates the values of `goal` (with free variables `goal_free`) under
// program `p`. The program must not contain default rules any more.
RunResult enumerate_values(const ExprPtr& goal,
                           const std::vector<std::string>& goal_free,
                           const Program& p, const EvalConfig& cfg);

// Generator alternatives for a free variable demanded at a branch whose
// constructors belong to `type_name`: one constructor application with
// fresh arguments per constructor, paired with the induced substitution.
std::vector<std::pair<Subst, ExprPtr>> instantiate_free_variable(
    const Program& p, const std::string& var, const std::string& type_name);

// Canonical rendering of values and bindings: free variables are renamed
// _a, _b, ... in order of appearance so output is reproducible.
std::string render_result(const ResultValue& v);
std::string render_value(const ExprPtr& value);

} // namespace flc

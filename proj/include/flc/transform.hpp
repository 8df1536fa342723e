// The three default-rule elimination schemes: guarded transformational
// semantics, continuation-based tests, and replacement by standard rules.
#pragma once

#include <string>
#include <vector>

#include "flc/ast.hpp"
#include "flc/deftree.hpp"

namespace flc {

enum class TransformScheme { Basic, Continuation, Replacement };

struct TransformError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One line per operation that carried a default rule.
struct ApplicabilityEntry {
  std::string op;
  std::string scheme; // "replace" or "basic" (fallback)
  std::string reason; // empty when replace applied
};

// For every operation with a default rule, emits
//   f'TEST  : standard rules with the right-hand side replaced by ()
//   f'INIT  : standard rules verbatim
//   f'DFLT  : default rule guarded by isEmpty (f'TEST'S ...) && c
//   f x..   = f'INIT x.. ? f'DFLT x..
// Patterns and conditions of the original rules are not changed.
Program transform_basic(const Program& p);

// Continuation variant: f'TESTC wraps each right-hand side in \_ -> e, and
// f chooses between f'DFLT and applying a collected continuation.
Program transform_cont(const Program& p);

struct ReplacementResult {
  std::vector<Rule> rules;              // replacement of the default rule
  std::vector<OperationDef> helper_ops; // per-leaf condition tests
};

// Replacement of a default rule by standard rules (requires an inductively
// sequential operation whose minimal tree has no literal-complement exempt
// regions). Exempt patterns instantiate the default rule; a non-most-general
// default left-hand side is unified with each exempt pattern instead.
// Conditional rule leaves contribute a negated-condition rule backed by a
// per-leaf test operation.
ReplacementResult replace_default_rule(const Program& p,
                                       const OperationDef& op,
                                       const DefTree& tree);

// Applies replace_default_rule to every operation with a default rule.
// Inapplicable operations fall back to the basic scheme when `fallback` is
// set and otherwise produce an aggregated error. The program is normalized
// on the way in.
Program transform_replace(const Program& p, bool fallback,
                          std::vector<ApplicabilityEntry>* report = nullptr);

Program apply_scheme(const Program& p, TransformScheme scheme, bool fallback,
                     std::vector<ApplicabilityEntry>* report = nullptr);

// Removes all default rules without compensation (reference program for the
// completeness checks).
Program drop_default_rules(const Program& p);

} // namespace flc

// Minimal definitional trees: construction from normalized standard rules,
// operation classification, and exempt-pattern extraction.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flc/ast.hpp"

namespace flc {

// Path to a subterm of the argument tuple: first index selects the
// argument, the rest descend into constructor arguments.
using Path = std::vector<int>;

struct DefTree {
  enum class Tag { Branch, Rule, Exempt };
  Tag tag = Tag::Exempt;
  std::vector<ExprPtr> pattern; // full argument-tuple pattern of this node

  // Branch fields.
  Path inductive_pos;
  std::vector<std::unique_ptr<DefTree>> children;
  // For literal-typed positions the children cover exactly the literals
  // occurring in rules; everything else is an implicit exempt region.
  bool literal_branch = false;
  bool has_literal_complement = false;
  std::vector<long long> literals; // per-child literal when literal_branch
  bool char_literals = false;

  // Rule fields: indices into the operation's standard rules. More than one
  // entry only for variant left-hand sides (overlapping case).
  std::vector<int> rule_indices;
};

struct OpClassification {
  enum class Tag { InductivelySequential, OverlappingInductivelySequential, NotSequential };
  Tag tag;
  std::string witness; // description of conflicting rules for NotSequential
};

struct TreeError : std::runtime_error {
  enum class Code { NotSequential, MixedTypes };
  Code code;
  TreeError(Code c, const std::string& msg)
      : std::runtime_error(msg), code(c) {}
};

// Builds the minimal definitional tree of op's standard rules. Requires
// normalized rules (linear constructor patterns) and at least one rule.
// The leftmost-outermost position demanded by every rule is chosen at each
// branch. Throws TreeError (NotSequential, MixedTypes).
std::unique_ptr<DefTree> build_definitional_tree(const Program& p,
                                                 const OperationDef& op);

OpClassification classify_operation(const Program& p, const OperationDef& op);

struct ExemptPatterns {
  std::vector<std::vector<ExprPtr>> patterns; // left-to-right tree order
  bool has_literal_complement = false;
};

ExemptPatterns exempt_patterns(const DefTree& t);

// Indented textual rendering used by the CLI `tree` command:
//   branch <pattern> on <position>
//   rule <lhs> = <rhs>
//   exempt <pattern>
std::string render_tree(const DefTree& t, const OperationDef& op);

} // namespace flc

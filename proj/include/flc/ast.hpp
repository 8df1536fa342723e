// Core term, rule and program representation for the flc toolkit, plus the
// pattern algebra (matching, unification, substitution) and the two rule
// normalization passes (linearization, functional-pattern desugaring).
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flc {

enum class Kind {
  Var,      // free or pattern variable
  Con,      // saturated constructor application
  Op,       // saturated operation application
  SymRef,   // unapplied (or partially applied via Apply) operation/constructor
  Int,      // integer literal
  Char,     // character literal
  Lambda,   // \x -> e  (param may be a wildcard variable)
  Let,      // non-recursive let bindings
  SetApp,   // f'S e1 ... ek, set function application
  If,       // if c then t else e
  Failed,   // builtin failure
  Guard,    // runtime only: condition gate produced by rule application
  ValueSet, // runtime only: (partially) computed result of a SetApp
  Ref,      // runtime only: indirection to a shared node
};

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

class Capsule; // defined by the evaluator

// Runtime payload of a ValueSet node.
struct SetPayload {
  std::vector<ExprPtr> elems;
  bool exhausted = false;
  // Paused inner enumeration (kept only within one search alternative;
  // dropped when the owning state is cloned).
  std::shared_ptr<Capsule> paused;
};

// One term-graph node. Static program trees and the evaluator's mutable
// graphs share this representation; the evaluator rewrites nodes in place.
struct Expr {
  Kind kind = Kind::Failed;
  std::string name;               // Var/Con/Op/SymRef/SetApp symbol, Lambda param
  std::vector<ExprPtr> kids;      // arguments; Guard: [cond, rhs]; If: [c,t,e];
                                  // Lambda: [body]; Let: binding exprs + body last
  std::vector<std::string> let_names;
  long long ival = 0;             // Int value / Char code point
  int level = 0;                  // encapsulation level at creation
  bool symref_is_con = false;     // SymRef: constructor vs operation
  std::shared_ptr<SetPayload> set;

  Expr() = default;
};

ExprPtr mkVar(std::string name, int level = 0);
ExprPtr mkCon(std::string name, std::vector<ExprPtr> kids = {}, int level = 0);
ExprPtr mkOp(std::string name, std::vector<ExprPtr> kids = {}, int level = 0);
ExprPtr mkSymRef(std::string name, bool isCon, int level = 0);
ExprPtr mkInt(long long v, int level = 0);
ExprPtr mkChar(long long c, int level = 0);
ExprPtr mkLambda(std::string param, ExprPtr body, int level = 0);
ExprPtr mkSetApp(std::string op, std::vector<ExprPtr> kids, int level = 0);
ExprPtr mkIf(ExprPtr c, ExprPtr t, ExprPtr e, int level = 0);
ExprPtr mkFailed(int level = 0);
ExprPtr mkApply(ExprPtr f, ExprPtr arg, int level = 0);

// List/tuple/string helpers over the builtin constructors.
ExprPtr mkNil(int level = 0);
ExprPtr mkCons(ExprPtr h, ExprPtr t, int level = 0);
ExprPtr mkList(std::vector<ExprPtr> elems, int level = 0);
ExprPtr mkTuple(std::vector<ExprPtr> elems, int level = 0);
ExprPtr mkUnit(int level = 0);
ExprPtr mkString(const std::string& s, int level = 0);

bool isWildcardName(const std::string& name);

// A rewrite rule: op lhs1 .. lhsk | cond = rhs  where free_vars free.
struct Rule {
  std::string op;
  std::vector<ExprPtr> lhs;
  ExprPtr cond;  // null when unconditional
  ExprPtr rhs;
  std::vector<std::string> free_vars;
  bool is_default = false;
  // Instrumentation: set on rules that originate from a default rule
  // (guarded default, replacement rules, negation rules).
  bool from_default = false;
};

struct OperationDef {
  std::string name;
  int arity = 0;
  std::vector<Rule> standard_rules;
  std::optional<Rule> default_rule;
  bool builtin = false; // part of the implicit prelude, not printed
};

struct Ctor {
  std::string name;
  int arity = 0;
};

struct DataDecl {
  std::string type_name;
  std::vector<Ctor> ctors;
  bool builtin = false;
};

struct CtorInfo {
  std::string type_name;
  int arity = 0;
};

struct Program {
  std::vector<DataDecl> data_decls;
  std::vector<std::string> op_order; // declaration order, drives printing
  std::map<std::string, OperationDef> ops;

  const OperationDef* find_op(const std::string& name) const;
  OperationDef* find_op(const std::string& name);
  void add_op(OperationDef def); // keeps op_order in sync
  // Constructor lookup across user and builtin data declarations.
  std::optional<CtorInfo> find_ctor(const std::string& name) const;
  const DataDecl* find_data(const std::string& type_name) const;
};

// Builtin data declarations (Bool, lists, tuples, Maybe, unit).
const std::vector<DataDecl>& builtin_data_decls();
// Arity of a native operation (==, +, -, <, abs, isDigit, isEmpty,
// chooseValue, @), or nullopt if `name` is not native.
std::optional<int> native_op_arity(const std::string& name);

struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Idempotent substitution: variable name -> replacement term.
using Subst = std::map<std::string, ExprPtr>;

// Applies `s` to `e`, building a fresh tree; unmapped variables are kept.
ExprPtr apply_subst(const Subst& s, const ExprPtr& e);

// Matches a linear constructor pattern against a constructor-rooted subject.
// Returns the unique substitution with subst(pattern) == subject, or nullopt
// on a constructor/literal clash. Never evaluates the subject; an operation
// node at an inspected position is a clash.
std::optional<Subst> match(const ExprPtr& pattern, const ExprPtr& subject);
std::optional<Subst> match_all(const std::vector<ExprPtr>& patterns,
                               const std::vector<ExprPtr>& subjects);

// Most general unifier of two linear patterns with disjoint variables.
std::optional<Subst> unify(const ExprPtr& p, const ExprPtr& q);
std::optional<Subst> unify_all(const std::vector<ExprPtr>& ps,
                               const std::vector<ExprPtr>& qs);

// Structural identity (names included); used by tests and the oracles.
bool expr_equal(const ExprPtr& a, const ExprPtr& b);
// Alpha-equivalence: equal up to a consistent renaming of variables.
bool alpha_equal_exprs(const std::vector<ExprPtr>& as, const std::vector<ExprPtr>& bs);
bool alpha_equal(const Rule& a, const Rule& b);
bool alpha_equal(const Program& a, const Program& b);

void collect_vars(const ExprPtr& e, std::vector<std::string>& out);
bool contains_op_node(const ExprPtr& e);

// Renames repeated lhs variables apart and equates them via == conjuncts
// prepended to the condition. Requires constructor-only patterns.
Rule linearize_rule(const Rule& r);

// Replaces every lhs argument containing an operation node by a fresh
// variable v and prepends the conjunct `v == <functional pattern>`; pattern
// variables of the functional pattern move into the rule's free variables.
Rule desugar_functional_patterns(const Rule& r);

// desugar + linearize over every rule of every operation.
void normalize_program(Program& p);

// Structural validation of program invariants (arities, known symbols,
// non-recursive lets, unbound variables). Throws LoadError.
void validate_program(const Program& p);

std::string fresh_name(const std::string& base, const std::vector<std::string>& taken);

} // namespace flc

#include "flc/eval.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

#include "flc/parser.hpp"

namespace flc {

namespace {

constexpr long long kYieldQuantum = 4096;

// Control-flow events raised during graph rewriting.
struct FlowFail {
  int level;
};

struct ForkAlt {
  ExprPtr content;
  int rule_flag = -1; // -1 none, 0 standard rule, 1 default-derived rule
};

struct FlowFork {
  int level;
  ExprPtr node;
  std::vector<ForkAlt> alts;
  bool generator = false;
};

struct FlowBudget {};
struct FlowYield {};

void overwrite(const ExprPtr& dst, const Expr& src) {
  Expr tmp = src; // copy first: src may live inside dst's kids
  *dst = tmp;
}

// Rewrites `n` to an indirection onto `target`. Used whenever the new
// content is (or may be) a node shared elsewhere in the graph, so that a
// later in-place binding of that node stays visible to every occurrence.
void redirect(const ExprPtr& n, const ExprPtr& target) {
  if (n.get() == target.get()) return;
  Expr tmp;
  tmp.kind = Kind::Ref;
  tmp.level = target->level;
  tmp.kids = {target};
  *n = tmp;
}

ExprPtr resolve(ExprPtr n) {
  while (n->kind == Kind::Ref) {
    ExprPtr t = n->kids[0];
    while (t->kind == Kind::Ref) t = t->kids[0];
    n->kids[0] = t; // path compression
    n = t;
  }
  return n;
}

struct SearchState {
  ExprPtr root;
  std::vector<std::pair<std::string, ExprPtr>> goal_vars;
  long long steps = 0;
  bool used_default = false;
};

struct Machine;

// Nested enumeration of one set-function application. Inner alternatives
// clone only nodes above the outer level; everything else stays shared with
// the enclosing graph, so escaping events refer to the original nodes.
class CapsuleImpl {
 public:
  Machine& m;
  int outer_level;
  std::deque<ExprPtr> frontier;
  std::vector<ExprPtr> found;

  CapsuleImpl(Machine& machine, int outer) : m(machine), outer_level(outer) {}

  enum class Outcome { Exhausted, FoundFirst };
  Outcome run(bool until_first);
};

} // namespace

// Public alias so ast.hpp's forward declaration has a definition.
class Capsule : public CapsuleImpl {
 public:
  using CapsuleImpl::CapsuleImpl;
};

namespace {

struct Machine {
  const Program& prog;
  EvalConfig cfg;
  Counters counters;
  std::map<std::string, std::unique_ptr<DefTree>> trees;
  SearchState* cur = nullptr;
  long long fresh_counter = 0;
  int capsule_depth = 0;
  long long steps_since_yield = 0;

  Machine(const Program& p, const EvalConfig& c) : prog(p), cfg(c) {}

  const DefTree& tree_for(const std::string& op) {
    auto it = trees.find(op);
    if (it != trees.end()) return *it->second;
    const OperationDef* def = prog.find_op(op);
    if (!def) throw EvalError("unknown operation " + op);
    try {
      auto t = build_definitional_tree(prog, *def);
      return *trees.emplace(op, std::move(t)).first->second;
    } catch (const TreeError& e) {
      throw EvalError("operation " + op + " is not evaluable: " + e.what());
    }
  }

  std::string fresh_var_name(const std::string& base) {
    return base + "#" + std::to_string(++fresh_counter);
  }

  void count_step() {
    ++counters.steps;
    if (cur) {
      if (++cur->steps > cfg.step_limit) throw FlowBudget{};
    }
    if (capsule_depth == 0 && ++steps_since_yield > kYieldQuantum) {
      steps_since_yield = 0;
      throw FlowYield{};
    }
  }

  // --- instantiation --------------------------------------------------

  // Builds a fresh graph for a static rule/goal expression. Variables map
  // to existing graph nodes (shared references give call-time choice);
  // let bindings are inlined as shared nodes.
  ExprPtr instantiate(const ExprPtr& e, std::map<std::string, ExprPtr>& env,
                      int level) {
    switch (e->kind) {
      case Kind::Var: {
        auto it = env.find(e->name);
        if (it == env.end())
          throw EvalError("internal: unbound variable " + e->name);
        return it->second;
      }
      case Kind::Int:
        return mkInt(e->ival, level);
      case Kind::Char:
        return mkChar(e->ival, level);
      case Kind::Failed:
        return mkFailed(level);
      case Kind::SymRef:
        return mkSymRef(e->name, e->symref_is_con, level);
      case Kind::Lambda: {
        // The parameter stays symbolic inside the opaque body.
        auto saved = env.find(e->name);
        ExprPtr old;
        bool had = saved != env.end();
        if (had) {
          old = saved->second;
          env.erase(saved);
        }
        env[e->name] = mkVar(e->name, level); // placeholder occurrence
        ExprPtr body = instantiate(e->kids[0], env, level);
        env.erase(e->name);
        if (had) env[e->name] = old;
        return mkLambda(e->name, body, level);
      }
      case Kind::Let: {
        std::vector<std::pair<std::string, ExprPtr>> saved;
        for (size_t i = 0; i + 1 < e->kids.size(); ++i) {
          ExprPtr bound = instantiate(e->kids[i], env, level);
          const std::string& n = e->let_names[i];
          auto it = env.find(n);
          if (it != env.end()) saved.emplace_back(n, it->second);
          env[n] = bound;
        }
        ExprPtr body = instantiate(e->kids.back(), env, level);
        for (size_t i = 0; i + 1 < e->kids.size(); ++i)
          env.erase(e->let_names[i]);
        for (auto& [n, v] : saved) env[n] = v;
        return body;
      }
      default: {
        auto c = std::make_shared<Expr>(*e);
        c->level = level;
        c->kids.clear();
        for (const auto& k : e->kids) c->kids.push_back(instantiate(k, env, level));
        return c;
      }
    }
  }

  // Beta reduction: copies the body, renaming occurrences of the parameter
  // to the argument. Nodes below the lambda's level are shared (they belong
  // to the enclosing world); copied nodes move to the application's level.
  ExprPtr beta(const ExprPtr& body_in, const std::string& param,
               const ExprPtr& arg, int lambda_level, int target_level,
               std::unordered_map<Expr*, ExprPtr>& memo) {
    ExprPtr body = body_in;
    while (body->kind == Kind::Ref) body = body->kids[0];
    if (body->kind == Kind::Var && body->name == param) return arg;
    if (body->level < lambda_level) return body;
    auto it = memo.find(body.get());
    if (it != memo.end()) return it->second;
    if (body->kind == Kind::Lambda && body->name == param) {
      // Shadowed parameter: copy without substituting inside.
      auto c = std::make_shared<Expr>(*body);
      c->level = target_level;
      memo[body.get()] = c;
      return c;
    }
    auto c = std::make_shared<Expr>(*body);
    c->level = target_level;
    memo[body.get()] = c;
    for (auto& k : c->kids)
      k = beta(k, param, arg, lambda_level, target_level, memo);
    if (c->set) {
      auto sp = std::make_shared<SetPayload>(*c->set);
      sp->paused = nullptr;
      for (auto& el : sp->elems)
        el = beta(el, param, arg, lambda_level, target_level, memo);
      c->set = sp;
    }
    return c;
  }

  // --- cloning ---------------------------------------------------------

  // Clones the graph reachable from `e`; nodes with level <= cutoff are
  // shared instead of copied. Indirections are compacted away. ValueSets
  // that are not exhausted revert to their originating SetApp (their paused
  // enumeration cannot be cloned).
  ExprPtr clone_rt(const ExprPtr& e_in, std::unordered_map<Expr*, ExprPtr>& memo,
                   int cutoff) {
    ExprPtr e = e_in;
    while (e->kind == Kind::Ref) e = e->kids[0];
    if (e->level <= cutoff) return e;
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second;
    auto c = std::make_shared<Expr>(*e);
    memo[e.get()] = c;
    for (auto& k : c->kids) k = clone_rt(k, memo, cutoff);
    if (c->kind == Kind::ValueSet && c->set) {
      if (!c->set->exhausted) {
        c->kind = Kind::SetApp;
        c->set = nullptr;
      } else {
        auto sp = std::make_shared<SetPayload>();
        sp->exhausted = true;
        for (const auto& el : e->set->elems)
          sp->elems.push_back(clone_rt(el, memo, cutoff));
        c->set = sp;
      }
    }
    return c;
  }

  // --- head normal form -------------------------------------------------

  // Reduces to head normal form (or a free variable) and returns the
  // resolved node. `keep_sets` makes SetApp/ValueSet head normal forms
  // (used by isEmpty/chooseValue).
  ExprPtr hnf(ExprPtr n, bool keep_sets = false) {
    while (true) {
      n = resolve(n);
      switch (n->kind) {
        case Kind::Var:
        case Kind::Con:
        case Kind::Int:
        case Kind::Char:
        case Kind::Lambda:
        case Kind::SymRef:
          return n;
        case Kind::ValueSet:
          if (keep_sets) return n;
          complete_set(n);
          return n;
        case Kind::Failed:
          throw FlowFail{n->level};
        case Kind::SetApp: {
          if (keep_sets) return n;
          run_capsule_full(n);
          return n;
        }
        case Kind::Guard: {
          int lvl = n->level;
          bool flag = n->ival == 1;
          if (eval_condition(n->kids[0])) {
            if (flag && cur) cur->used_default = true;
            count_step();
            redirect(n, n->kids[1]);
          } else {
            throw FlowFail{lvl};
          }
          break;
        }
        case Kind::If: {
          count_step();
          redirect(n, eval_condition(n->kids[0]) ? n->kids[1] : n->kids[2]);
          break;
        }
        case Kind::Let:
        case Kind::Ref:
          throw EvalError("internal: unexpected node in head reduction");
        case Kind::Op: {
          if (native_step(n)) break;   // rewritten; keep reducing
          if (n->kind == Kind::Op && n->name == "@") return n; // partial value
          if (n->kind != Kind::Op) break;
          step_user_op(n);
          break;
        }
      }
    }
  }

  // Evaluates a Boolean expression to True/False, narrowing a demanded
  // free variable over the Bool generator.
  bool eval_condition(const ExprPtr& c) {
    ExprPtr r = hnf(c);
    if (r->kind == Kind::Con) {
      if (r->name == "True") return true;
      if (r->name == "False") return false;
      throw EvalError("condition evaluated to non-Boolean " + r->name);
    }
    if (r->kind == Kind::Var) narrow_over_type(r, "Bool");
    throw EvalError("condition evaluated to non-Boolean value");
  }

  [[noreturn]] void narrow_over_type(const ExprPtr& var,
                                     const std::string& type_name) {
    const DataDecl* data = prog.find_data(type_name);
    if (!data) throw EvalError("unknown type " + type_name);
    FlowFork fork{var->level, var, {}, true};
    for (const auto& ctor : data->ctors) {
      std::vector<ExprPtr> fresh;
      for (int i = 0; i < ctor.arity; ++i)
        fresh.push_back(mkVar(fresh_var_name("_g"), var->level));
      fork.alts.push_back({mkCon(ctor.name, std::move(fresh), var->level), -1});
    }
    throw fork;
  }

  [[noreturn]] void narrow_over_int_range(const ExprPtr& var) {
    if (!cfg.has_int_range)
      throw EvalError(
          "UnboundedGenerator: integer variable demanded without --int-range");
    FlowFork fork{var->level, var, {}, true};
    for (long long v = cfg.int_lo; v <= cfg.int_hi; ++v)
      fork.alts.push_back({mkInt(v, var->level), -1});
    throw fork;
  }

  // --- user operations ---------------------------------------------------

  ExprPtr subject_at(const ExprPtr& n, const Path& pos) {
    ExprPtr cur_node = resolve(n->kids.at(pos.at(0)));
    for (size_t i = 1; i < pos.size(); ++i)
      cur_node = resolve(cur_node->kids.at(pos[i]));
    return cur_node;
  }

  void step_user_op(const ExprPtr& n) {
    const OperationDef* def = prog.find_op(n->name);
    if (!def) throw EvalError("unknown operation " + n->name);
    const DefTree* node = &tree_for(n->name);
    while (true) {
      switch (node->tag) {
        case DefTree::Tag::Exempt:
          throw FlowFail{n->level};
        case DefTree::Tag::Rule: {
          if (node->rule_indices.size() == 1) {
            fire_rule(n, def->standard_rules[node->rule_indices[0]]);
            return;
          }
          FlowFork fork{n->level, n, {}, false};
          for (int ri : node->rule_indices)
            fork.alts.push_back(build_alt(n, def->standard_rules[ri]));
          throw fork;
        }
        case DefTree::Tag::Branch: {
          ExprPtr subj = hnf(subject_at(n, node->inductive_pos));
          if (subj->kind == Kind::Var) {
            if (node->literal_branch) {
              if (node->char_literals)
                throw EvalError(
                    "UnboundedGenerator: character variable demanded at a "
                    "literal match");
              narrow_over_int_range(subj);
            }
            // Generator over the constructors this branch dispatches on.
            FlowFork fork{subj->level, subj, {}, true};
            for (const auto& child : node->children) {
              ExprPtr cpat = subject_at_pattern(*child, node->inductive_pos);
              std::vector<ExprPtr> fresh;
              for (size_t i = 0; i < cpat->kids.size(); ++i)
                fresh.push_back(mkVar(fresh_var_name("_g"), subj->level));
              fork.alts.push_back(
                  {mkCon(cpat->name, std::move(fresh), subj->level), -1});
            }
            throw fork;
          }
          if (node->literal_branch) {
            if (subj->kind != Kind::Int && subj->kind != Kind::Char)
              throw EvalError("literal pattern matched against non-literal");
            bool found = false;
            for (size_t i = 0; i < node->literals.size(); ++i) {
              if (node->literals[i] == subj->ival) {
                node = node->children[i].get();
                found = true;
                break;
              }
            }
            if (!found) throw FlowFail{n->level}; // implicit complement
            continue;
          }
          if (subj->kind != Kind::Con)
            throw EvalError("pattern match against non-constructor value in " +
                            n->name);
          bool found = false;
          for (const auto& child : node->children) {
            ExprPtr cpat = subject_at_pattern(*child, node->inductive_pos);
            if (cpat->name == subj->name) {
              node = child.get();
              found = true;
              break;
            }
          }
          if (!found)
            throw EvalError("constructor " + subj->name +
                            " not covered by patterns of " + n->name);
          continue;
        }
      }
    }
  }

  ExprPtr subject_at_pattern(const DefTree& t, const Path& pos) {
    ExprPtr cur_node = t.pattern.at(pos.at(0));
    for (size_t i = 1; i < pos.size(); ++i) cur_node = cur_node->kids.at(pos[i]);
    return cur_node;
  }

  // What `n` becomes when `rule` is applied: the rhs instance, wrapped in a
  // Guard when the rule is conditional.
  ForkAlt build_alt(const ExprPtr& n, const Rule& rule) {
    auto m = match_all(rule.lhs, n->kids);
    if (!m) throw EvalError("internal: rule selected but lhs does not match");
    std::map<std::string, ExprPtr> env;
    for (auto& [k, v] : *m) env[k] = v;
    for (const auto& fv : rule.free_vars)
      if (!env.count(fv)) env[fv] = mkVar(fresh_var_name(fv), n->level);
    ExprPtr rhs = instantiate(rule.rhs, env, n->level);
    if (!rule.cond) return {rhs, rule.from_default ? 1 : 0};
    ExprPtr cond = instantiate(rule.cond, env, n->level);
    auto g = std::make_shared<Expr>();
    g->kind = Kind::Guard;
    g->level = n->level;
    g->ival = rule.from_default ? 1 : 0;
    g->kids = {cond, rhs};
    return {g, rule.from_default ? 1 : 0};
  }

  void fire_rule(const ExprPtr& n, const Rule& rule) {
    ForkAlt alt = build_alt(n, rule);
    count_step();
    if (rule.from_default) {
      ++counters.rule_apps_default;
      if (cur) cur->used_default = true;
    } else {
      ++counters.rule_apps_standard;
    }
    redirect(n, alt.content);
  }

  // --- native operations --------------------------------------------------

  // Returns true when the node was rewritten (continue the hnf loop);
  // false when the node is not a native redex.
  bool native_step(const ExprPtr& n) {
    const std::string& op = n->name;
    if (op == "==") return equal_step(n);
    if (op == "+" || op == "-" || op == "<") return arith_step(n);
    if (op == "abs") return abs_step(n);
    if (op == "isDigit") return isdigit_step(n);
    if (op == "isEmpty") return isempty_step(n);
    if (op == "chooseValue") return choose_step(n);
    if (op == "@") return apply_step(n);
    return false;
  }

  long long force_int(const ExprPtr& kid) {
    ExprPtr k = hnf(kid);
    if (k->kind == Kind::Int) return k->ival;
    if (k->kind == Kind::Var) narrow_over_int_range(k);
    throw EvalError("arithmetic on non-integer value");
  }

  bool arith_step(const ExprPtr& n) {
    long long a = force_int(n->kids[0]);
    long long b = force_int(n->kids[1]);
    count_step();
    if (n->name == "+")
      overwrite(n, *mkInt(a + b, n->level));
    else if (n->name == "-")
      overwrite(n, *mkInt(a - b, n->level));
    else
      overwrite(n, *mkCon(a < b ? "True" : "False", {}, n->level));
    return true;
  }

  bool abs_step(const ExprPtr& n) {
    long long a = force_int(n->kids[0]);
    count_step();
    overwrite(n, *mkInt(a < 0 ? -a : a, n->level));
    return true;
  }

  bool isdigit_step(const ExprPtr& n) {
    ExprPtr k = hnf(n->kids[0]);
    if (k->kind == Kind::Var)
      throw EvalError(
          "UnboundedGenerator: character variable demanded by isDigit");
    if (k->kind != Kind::Char) throw EvalError("isDigit on non-character");
    count_step();
    bool d = k->ival >= '0' && k->ival <= '9';
    overwrite(n, *mkCon(d ? "True" : "False", {}, n->level));
    return true;
  }

  // Strict equality. Demanded free variables are narrowed: against a
  // constructor via the type's generator (yielding True and False
  // derivations), against a literal by direct binding.
  bool equal_step(const ExprPtr& n) {
    ExprPtr a = hnf(n->kids[0]);
    ExprPtr b = hnf(n->kids[1]);
    if (a->kind == Kind::Var && b->kind == Kind::Var) {
      if (a.get() == b.get()) {
        count_step();
        overwrite(n, *mkCon("True", {}, n->level));
        return true;
      }
      // Bind the deeper variable to the shallower one: the binding is then
      // internal to the deeper encapsulation level and the shallower world
      // keeps an unconstrained variable.
      ++counters.generator_instantiations;
      count_step();
      if (a->level >= b->level)
        redirect(a, b);
      else
        redirect(b, a);
      return true;
    }
    if (a->kind == Kind::Var || b->kind == Kind::Var) {
      ExprPtr var = a->kind == Kind::Var ? a : b;
      ExprPtr other = a->kind == Kind::Var ? b : a;
      if (other->kind == Kind::Int || other->kind == Kind::Char) {
        // Decomposition forces the variable; no False alternative exists
        // over the unbounded literal types.
        FlowFork fork{var->level, var, {}, true};
        fork.alts.push_back({std::make_shared<Expr>(*other), -1});
        fork.alts.back().content->level = var->level;
        throw fork;
      }
      if (other->kind == Kind::Con) {
        auto info = prog.find_ctor(other->name);
        if (!info) throw EvalError("unknown constructor " + other->name);
        narrow_over_type(var, info->type_name);
      }
      throw EvalError("equality on non-data value");
    }
    auto boolean = [&](bool v) {
      count_step();
      overwrite(n, *mkCon(v ? "True" : "False", {}, n->level));
      return true;
    };
    if (a->kind == Kind::Int && b->kind == Kind::Int)
      return boolean(a->ival == b->ival);
    if (a->kind == Kind::Char && b->kind == Kind::Char)
      return boolean(a->ival == b->ival);
    if (a->kind == Kind::Con && b->kind == Kind::Con) {
      if (a->name != b->name) return boolean(false);
      if (a->kids.empty()) return boolean(true);
      // Decompose into a conjunction over the arguments.
      ExprPtr acc;
      for (size_t i = a->kids.size(); i-- > 0;) {
        ExprPtr eq = mkOp("==", {a->kids[i], b->kids[i]}, n->level);
        acc = acc ? mkOp("&&", {eq, acc}, n->level) : eq;
      }
      count_step();
      overwrite(n, *acc);
      return true;
    }
    throw EvalError("equality on incomparable values");
  }

  bool apply_step(const ExprPtr& n) {
    ExprPtr f = hnf(n->kids[0]);
    if (f->kind == Kind::Lambda) {
      std::unordered_map<Expr*, ExprPtr> memo;
      ExprPtr res = beta(f->kids[0], f->name, n->kids[1], f->level, n->level, memo);
      count_step();
      redirect(n, res);
      return true;
    }
    // Partial application spine: head symbol plus collected arguments.
    std::vector<ExprPtr> args{n->kids[1]};
    ExprPtr head = f;
    while (head->kind == Kind::Op && head->name == "@") {
      args.push_back(head->kids[1]);
      head = resolve(head->kids[0]);
    }
    if (head->kind != Kind::SymRef) {
      if (f->kind == Kind::Op && f->name == "@") return false; // still partial
      throw EvalError("application of a non-functional value");
    }
    size_t arity;
    bool is_con = head->symref_is_con;
    if (is_con) {
      auto info = prog.find_ctor(head->name);
      if (!info) throw EvalError("unknown constructor " + head->name);
      arity = static_cast<size_t>(info->arity);
    } else if (const OperationDef* def = prog.find_op(head->name)) {
      arity = static_cast<size_t>(def->arity);
    } else if (auto nat = native_op_arity(head->name)) {
      arity = static_cast<size_t>(*nat);
    } else {
      throw EvalError("unknown operation " + head->name);
    }
    if (args.size() < arity) return false; // still a partial value
    std::reverse(args.begin(), args.end());
    count_step();
    if (is_con)
      overwrite(n, *mkCon(head->name, std::move(args), n->level));
    else
      overwrite(n, *mkOp(head->name, std::move(args), n->level));
    return true;
  }

  // --- set functions -------------------------------------------------------

  void ensure_value_set(const ExprPtr& n) {
    // n: SetApp -> ValueSet conversion preserving op/args for re-runs.
    if (n->kind == Kind::ValueSet) return;
    n->kind = Kind::ValueSet;
    n->set = std::make_shared<SetPayload>();
  }

  std::shared_ptr<Capsule> start_capsule(const ExprPtr& n) {
    ++counters.set_evals;
    auto cap = std::make_shared<Capsule>(*this, n->level);
    std::vector<ExprPtr> args = n->kids;
    cap->frontier.push_back(mkOp(n->name, args, n->level + 1));
    return cap;
  }

  void run_capsule_full(const ExprPtr& n) {
    std::shared_ptr<Capsule> cap;
    if (n->kind == Kind::ValueSet && n->set && n->set->paused) {
      cap = n->set->paused;
      cap->found = n->set->elems;
      n->set->paused = nullptr;
    } else {
      cap = start_capsule(n);
    }
    ++capsule_depth;
    try {
      cap->run(false);
      --capsule_depth;
    } catch (...) {
      --capsule_depth;
      throw;
    }
    ensure_value_set(n);
    n->set->elems = cap->found;
    n->set->exhausted = true;
    n->set->paused = nullptr;
  }

  // Decides emptiness, stopping at the first element; a non-exhausted
  // enumeration stays paused on the node for later resumption.
  bool set_is_empty(const ExprPtr& n) {
    if (n->kind == Kind::ValueSet && n->set) {
      if (!n->set->elems.empty()) return false;
      if (n->set->exhausted) return true;
    }
    auto cap = start_capsule(n);
    ++capsule_depth;
    CapsuleImpl::Outcome out;
    try {
      out = cap->run(true);
      --capsule_depth;
    } catch (...) {
      --capsule_depth;
      throw;
    }
    ensure_value_set(n);
    n->set->elems = cap->found;
    if (out == CapsuleImpl::Outcome::Exhausted) {
      n->set->exhausted = true;
      n->set->paused = nullptr;
      return n->set->elems.empty();
    }
    n->set->exhausted = false;
    n->set->paused = cap;
    return false;
  }

  bool isempty_step(const ExprPtr& n) {
    ExprPtr arg = hnf(n->kids[0], /*keep_sets=*/true);
    if (arg->kind != Kind::SetApp && arg->kind != Kind::ValueSet)
      throw EvalError("isEmpty applied to a non-set value");
    bool empty = set_is_empty(arg);
    count_step();
    overwrite(n, *mkCon(empty ? "True" : "False", {}, n->level));
    return true;
  }

  bool choose_step(const ExprPtr& n) {
    ExprPtr arg = hnf(n->kids[0], /*keep_sets=*/true);
    if (arg->kind != Kind::SetApp && arg->kind != Kind::ValueSet)
      throw EvalError("chooseValue applied to a non-set value");
    if (arg->kind != Kind::ValueSet || !arg->set || !arg->set->exhausted)
      run_capsule_full(arg);
    const auto& elems = arg->set->elems;
    if (elems.empty()) throw FlowFail{n->level};
    if (elems.size() == 1) {
      count_step();
      redirect(n, elems[0]);
      return true;
    }
    FlowFork fork{n->level, n, {}, false};
    for (const auto& el : elems) fork.alts.push_back({el, -1});
    throw fork;
  }

  // --- deep evaluation ------------------------------------------------------

  void deep_eval(const ExprPtr& n) {
    ExprPtr r = hnf(n);
    switch (r->kind) {
      case Kind::Con:
        for (const auto& k : r->kids) deep_eval(k);
        return;
      case Kind::ValueSet:
        complete_set(r);
        return;
      default:
        return; // variables, literals, lambdas, partial applications
    }
  }

  void complete_set(const ExprPtr& n) {
    if (!n->set || !n->set->exhausted) run_capsule_full(n);
  }
};

// Counter updates for one installed fork alternative.
void install_fork(Machine& m, const FlowFork& f, size_t i) {
  if (f.generator) ++m.counters.generator_instantiations;
  int flag = f.alts[i].rule_flag;
  if (flag >= 0) {
    ++m.counters.steps;
    if (flag == 1)
      ++m.counters.rule_apps_default;
    else
      ++m.counters.rule_apps_standard;
  }
}

CapsuleImpl::Outcome CapsuleImpl::run(bool until_first) {
  while (!frontier.empty()) {
    ExprPtr root;
    if (m.cfg.strategy == EvalConfig::Strategy::BFS) {
      root = frontier.front();
      frontier.pop_front();
    } else {
      root = frontier.back();
      frontier.pop_back();
    }
    try {
      m.deep_eval(root);
      found.push_back(root);
      if (until_first) return Outcome::FoundFirst;
    } catch (FlowFork& f) {
      if (f.level <= outer_level) throw; // escapes the encapsulation
      std::vector<ExprPtr> branches;
      for (size_t i = 0; i + 1 < f.alts.size(); ++i) {
        std::unordered_map<Expr*, ExprPtr> memo;
        ExprPtr r2 = m.clone_rt(root, memo, outer_level);
        auto it = memo.find(f.node.get());
        if (it == memo.end())
          throw EvalError("internal: fork node not reachable from inner goal");
        ExprPtr content = m.clone_rt(f.alts[i].content, memo, outer_level);
        redirect(it->second, content);
        install_fork(m, f, i);
        if (f.alts[i].rule_flag == 1 && m.cur) m.cur->used_default = true;
        branches.push_back(std::move(r2));
      }
      // The last alternative takes over the original graph.
      size_t last = f.alts.size() - 1;
      redirect(f.node, f.alts[last].content);
      install_fork(m, f, last);
      if (f.alts[last].rule_flag == 1 && m.cur) m.cur->used_default = true;
      branches.push_back(root);
      if (m.cfg.strategy == EvalConfig::Strategy::BFS) {
        for (auto& b : branches) frontier.push_back(std::move(b));
      } else {
        for (auto it2 = branches.rbegin(); it2 != branches.rend(); ++it2)
          frontier.push_back(std::move(*it2));
      }
    } catch (FlowFail& f) {
      if (f.level <= outer_level) throw;
      // pruned element
    }
  }
  return Outcome::Exhausted;
}

std::vector<std::pair<std::string, ExprPtr>> clone_goal_vars(
    Machine& m, const SearchState& s, std::unordered_map<Expr*, ExprPtr>& memo) {
  std::vector<std::pair<std::string, ExprPtr>> out;
  for (const auto& [name, node] : s.goal_vars)
    out.emplace_back(name, m.clone_rt(node, memo, -1));
  return out;
}

} // namespace

RunResult enumerate_values(const ExprPtr& goal,
                           const std::vector<std::string>& goal_free,
                           const Program& p, const EvalConfig& cfg) {
  for (const auto& name : p.op_order)
    if (p.ops.at(name).default_rule)
      throw EvalError("program still contains a default rule for " + name +
                      "; run a transformation first");

  Machine m(p, cfg);
  RunResult res;

  std::map<std::string, ExprPtr> env;
  SearchState init;
  for (const auto& v : goal_free) {
    ExprPtr node = mkVar(v, 0);
    env[v] = node;
    init.goal_vars.emplace_back(v, node);
  }
  init.root = m.instantiate(goal, env, 0);

  std::deque<SearchState> queue;
  queue.push_back(std::move(init));

  bool bfs = cfg.strategy == EvalConfig::Strategy::BFS;
  while (!queue.empty() &&
         res.values.size() < static_cast<size_t>(cfg.value_limit)) {
    SearchState s = bfs ? std::move(queue.front()) : std::move(queue.back());
    if (bfs)
      queue.pop_front();
    else
      queue.pop_back();

    m.cur = &s;
    m.steps_since_yield = 0;
    try {
      m.deep_eval(s.root);
      ResultValue v;
      v.value = s.root;
      for (const auto& [name, node] : s.goal_vars)
        if (!(node->kind == Kind::Var && node->name == name))
          v.bindings.emplace_back(name, node);
      v.used_default_rule = s.used_default;
      res.values.push_back(std::move(v));
    } catch (FlowFork& f) {
      std::vector<SearchState> branches;
      for (size_t i = 0; i + 1 < f.alts.size(); ++i) {
        std::unordered_map<Expr*, ExprPtr> memo;
        SearchState c;
        c.root = m.clone_rt(s.root, memo, -1);
        c.goal_vars = clone_goal_vars(m, s, memo);
        c.steps = s.steps;
        c.used_default = s.used_default;
        auto it = memo.find(f.node.get());
        if (it == memo.end())
          throw EvalError("internal: fork node not reachable from goal");
        ExprPtr content = m.clone_rt(f.alts[i].content, memo, -1);
        redirect(it->second, content);
        install_fork(m, f, i);
        if (f.alts[i].rule_flag >= 0) ++c.steps;
        if (f.alts[i].rule_flag == 1) c.used_default = true;
        branches.push_back(std::move(c));
      }
      // The last alternative takes over the original graph.
      size_t last = f.alts.size() - 1;
      redirect(f.node, f.alts[last].content);
      install_fork(m, f, last);
      if (f.alts[last].rule_flag >= 0) ++s.steps;
      if (f.alts[last].rule_flag == 1) s.used_default = true;
      branches.push_back(std::move(s));
      if (bfs) {
        for (auto& b : branches) queue.push_back(std::move(b));
      } else {
        for (auto it2 = branches.rbegin(); it2 != branches.rend(); ++it2)
          queue.push_back(std::move(*it2));
      }
    } catch (FlowFail&) {
      // alternative failed
    } catch (FlowBudget&) {
      res.exhausted = false;
    } catch (FlowYield&) {
      queue.push_back(std::move(s));
    }
    m.cur = nullptr;
  }
  if (!queue.empty()) res.exhausted = false;
  res.counters = m.counters;
  return res;
}

std::vector<std::pair<Subst, ExprPtr>> instantiate_free_variable(
    const Program& p, const std::string& var, const std::string& type_name) {
  const DataDecl* data = p.find_data(type_name);
  if (!data) throw EvalError("unknown type " + type_name);
  std::vector<std::pair<Subst, ExprPtr>> out;
  int fresh = 0;
  for (const auto& ctor : data->ctors) {
    std::vector<ExprPtr> args;
    for (int i = 0; i < ctor.arity; ++i)
      args.push_back(mkVar("_g" + std::to_string(++fresh)));
    ExprPtr inst = mkCon(ctor.name, std::move(args));
    Subst s{{var, inst}};
    out.emplace_back(std::move(s), inst);
  }
  return out;
}

namespace {

ExprPtr canonical_copy(const ExprPtr& e_in, std::map<Expr*, std::string>& names,
                       int& counter) {
  ExprPtr e = e_in;
  while (e->kind == Kind::Ref) e = e->kids[0];
  if (e->kind == Kind::Var) {
    auto it = names.find(e.get());
    if (it == names.end()) {
      std::string n = "_" + std::string(1, static_cast<char>('a' + counter % 26));
      if (counter >= 26) n += std::to_string(counter / 26);
      ++counter;
      it = names.emplace(e.get(), n).first;
    }
    return mkVar(it->second);
  }
  auto c = std::make_shared<Expr>(*e);
  c->kids.clear();
  for (const auto& k : e->kids)
    c->kids.push_back(canonical_copy(k, names, counter));
  if (c->kind == Kind::ValueSet && c->set) {
    // Canonical sets print their elements sorted.
    std::vector<std::string> rendered;
    for (const auto& el : e->set->elems) {
      std::map<Expr*, std::string> local;
      int lc = 0;
      rendered.push_back(print_expr(canonical_copy(el, local, lc)));
    }
    std::sort(rendered.begin(), rendered.end());
    std::string joined = "{";
    for (size_t i = 0; i < rendered.size(); ++i) {
      if (i) joined += ",";
      joined += rendered[i];
    }
    joined += "}";
    ExprPtr marker = mkVar(joined);
    return marker;
  }
  return c;
}

} // namespace

std::string render_value(const ExprPtr& value) {
  std::map<Expr*, std::string> names;
  int counter = 0;
  return print_expr(canonical_copy(value, names, counter));
}

std::string render_result(const ResultValue& v) {
  std::map<Expr*, std::string> names;
  int counter = 0;
  std::ostringstream os;
  if (!v.bindings.empty()) {
    os << '{';
    for (size_t i = 0; i < v.bindings.size(); ++i) {
      if (i) os << ", ";
      os << v.bindings[i].first << '='
         << print_expr(canonical_copy(v.bindings[i].second, names, counter));
    }
    os << "} ";
  }
  os << print_expr(canonical_copy(v.value, names, counter));
  return os.str();
}

} // namespace flc

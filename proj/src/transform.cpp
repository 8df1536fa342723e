#include "flc/transform.hpp"

#include <algorithm>

namespace flc {

namespace {

ExprPtr clone_tree(const ExprPtr& e) {
  auto c = std::make_shared<Expr>(*e);
  c->kids.clear();
  for (const auto& k : e->kids) c->kids.push_back(clone_tree(k));
  return c;
}

std::vector<ExprPtr> clone_exprs(const std::vector<ExprPtr>& es) {
  std::vector<ExprPtr> out;
  out.reserve(es.size());
  for (const auto& e : es) out.push_back(clone_tree(e));
  return out;
}

ExprPtr conj(ExprPtr a, ExprPtr b) {
  if (!a) return b;
  if (!b) return a;
  return mkOp("&&", {std::move(a), std::move(b)});
}

std::string dispatch_var(int i) {
  static const char* names[] = {"x", "y", "z"};
  if (i < 3) return names[i];
  return "x" + std::to_string(i + 1);
}

void check_reserved(const Program& p) {
  for (const auto& name : p.op_order) {
    const auto& def = p.ops.at(name);
    if (!def.default_rule) continue;
    for (const char* suf : {"'TEST", "'INIT", "'DFLT", "'TESTC"})
      if (p.find_op(name + suf))
        throw TransformError("reserved name " + name + suf +
                             " already defined");
  }
}

Rule dispatch_rule(const std::string& f, int arity, const ExprPtr& body_l,
                   const ExprPtr& body_r) {
  Rule r;
  r.op = f;
  for (int i = 0; i < arity; ++i) r.lhs.push_back(mkVar(dispatch_var(i)));
  r.rhs = mkOp("?", {body_l, body_r});
  return r;
}

std::vector<ExprPtr> dispatch_args(int arity) {
  std::vector<ExprPtr> args;
  for (int i = 0; i < arity; ++i) args.push_back(mkVar(dispatch_var(i)));
  return args;
}

// Basic scheme for a single operation; appends the four definitions.
void basic_transform_op(Program& out, const OperationDef& def) {
  const Rule& dflt = *def.default_rule;

  OperationDef test;
  test.name = def.name + "'TEST";
  test.arity = def.arity;
  for (const Rule& r : def.standard_rules) {
    Rule t = r;
    t.op = test.name;
    t.lhs = clone_exprs(r.lhs);
    t.cond = r.cond ? clone_tree(r.cond) : nullptr;
    t.rhs = mkUnit();
    test.standard_rules.push_back(std::move(t));
  }

  OperationDef init;
  init.name = def.name + "'INIT";
  init.arity = def.arity;
  for (const Rule& r : def.standard_rules) {
    Rule t = r;
    t.op = init.name;
    t.lhs = clone_exprs(r.lhs);
    t.cond = r.cond ? clone_tree(r.cond) : nullptr;
    t.rhs = clone_tree(r.rhs);
    init.standard_rules.push_back(std::move(t));
  }

  OperationDef dfltOp;
  dfltOp.name = def.name + "'DFLT";
  dfltOp.arity = def.arity;
  Rule d = dflt;
  d.op = dfltOp.name;
  d.is_default = false;
  d.from_default = true;
  d.lhs = clone_exprs(dflt.lhs);
  ExprPtr guard =
      mkOp("isEmpty", {mkSetApp(test.name, clone_exprs(dflt.lhs))});
  d.cond = conj(std::move(guard), dflt.cond ? clone_tree(dflt.cond) : nullptr);
  d.rhs = clone_tree(dflt.rhs);
  dfltOp.standard_rules.push_back(std::move(d));

  OperationDef dispatch;
  dispatch.name = def.name;
  dispatch.arity = def.arity;
  dispatch.standard_rules.push_back(dispatch_rule(
      def.name, def.arity, mkOp(init.name, dispatch_args(def.arity)),
      mkOp(dfltOp.name, dispatch_args(def.arity))));

  out.add_op(std::move(test));
  out.add_op(std::move(init));
  out.add_op(std::move(dfltOp));
  out.add_op(std::move(dispatch));
}

void cont_transform_op(Program& out, const OperationDef& def) {
  const Rule& dflt = *def.default_rule;

  OperationDef testc;
  testc.name = def.name + "'TESTC";
  testc.arity = def.arity;
  for (const Rule& r : def.standard_rules) {
    Rule t = r;
    t.op = testc.name;
    t.lhs = clone_exprs(r.lhs);
    t.cond = r.cond ? clone_tree(r.cond) : nullptr;
    t.rhs = mkLambda("_", clone_tree(r.rhs));
    testc.standard_rules.push_back(std::move(t));
  }

  OperationDef dfltOp;
  dfltOp.name = def.name + "'DFLT";
  dfltOp.arity = def.arity;
  Rule d = dflt;
  d.op = dfltOp.name;
  d.is_default = false;
  d.from_default = true;
  d.lhs = clone_exprs(dflt.lhs);
  d.cond = dflt.cond ? clone_tree(dflt.cond) : nullptr;
  d.rhs = clone_tree(dflt.rhs);
  dfltOp.standard_rules.push_back(std::move(d));

  // f x.. = let cs = f'TESTC'S x.. in
  //         if isEmpty cs then f'DFLT x.. else (chooseValue cs) ()
  auto let = std::make_shared<Expr>();
  let->kind = Kind::Let;
  let->let_names = {"cs"};
  ExprPtr setapp = mkSetApp(testc.name, dispatch_args(def.arity));
  ExprPtr branch =
      mkIf(mkOp("isEmpty", {mkVar("cs")}),
           mkOp(dfltOp.name, dispatch_args(def.arity)),
           mkApply(mkOp("chooseValue", {mkVar("cs")}), mkUnit()));
  let->kids = {setapp, branch};

  OperationDef dispatch;
  dispatch.name = def.name;
  dispatch.arity = def.arity;
  Rule r;
  r.op = def.name;
  for (int i = 0; i < def.arity; ++i) r.lhs.push_back(mkVar(dispatch_var(i)));
  r.rhs = let;
  dispatch.standard_rules.push_back(std::move(r));

  out.add_op(std::move(testc));
  out.add_op(std::move(dfltOp));
  out.add_op(std::move(dispatch));
}

Program rebuild(const Program& p, void (*xform)(Program&, const OperationDef&)) {
  check_reserved(p);
  Program out;
  out.data_decls = p.data_decls;
  for (const auto& name : p.op_order) {
    const auto& def = p.ops.at(name);
    if (!def.default_rule) {
      out.add_op(def);
      continue;
    }
    xform(out, def);
  }
  validate_program(out);
  return out;
}

bool most_general_lhs(const std::vector<ExprPtr>& lhs) {
  std::vector<std::string> seen;
  for (const auto& p : lhs) {
    if (p->kind != Kind::Var) return false;
    if (std::find(seen.begin(), seen.end(), p->name) != seen.end())
      return false;
    seen.push_back(p->name);
  }
  return true;
}

// Renames the variables of an exempt pattern away from the rule variables.
std::vector<ExprPtr> rename_apart(const std::vector<ExprPtr>& pat,
                                  std::vector<std::string>& taken) {
  std::vector<std::string> vars;
  for (const auto& p : pat) collect_vars(p, vars);
  Subst ren;
  for (const auto& v : vars) {
    if (ren.count(v)) continue;
    if (std::find(taken.begin(), taken.end(), v) == taken.end()) {
      taken.push_back(v);
      continue;
    }
    std::string f = fresh_name(v, taken);
    taken.push_back(f);
    ren[v] = mkVar(f);
  }
  std::vector<ExprPtr> out;
  for (const auto& p : pat) out.push_back(apply_subst(ren, p));
  return out;
}

void collect_conditional_leaves(const DefTree& t,
                                std::vector<const DefTree*>& out) {
  if (t.tag == DefTree::Tag::Rule) {
    out.push_back(&t);
    return;
  }
  for (const auto& c : t.children) collect_conditional_leaves(*c, out);
}

} // namespace

Program transform_basic(const Program& p) {
  return rebuild(p, basic_transform_op);
}

Program transform_cont(const Program& p) {
  return rebuild(p, cont_transform_op);
}

ReplacementResult replace_default_rule(const Program& p,
                                       const OperationDef& op,
                                       const DefTree& tree) {
  if (!op.default_rule)
    throw TransformError(op.name + ": no default rule");
  OpClassification cls = classify_operation(p, op);
  if (cls.tag != OpClassification::Tag::InductivelySequential)
    throw TransformError(op.name + ": not inductively sequential (" +
                         (cls.witness.empty() ? "overlapping rules"
                                              : cls.witness) +
                         ")");
  ExemptPatterns ex = exempt_patterns(tree);
  if (ex.has_literal_complement)
    throw TransformError(op.name +
                         ": literal patterns leave an exempt region with no "
                         "constructor pattern");

  const Rule& dflt = *op.default_rule;
  bool most_general = most_general_lhs(dflt.lhs);

  ReplacementResult res;
  std::vector<std::string> rule_vars = dflt.free_vars;
  for (const auto& l : dflt.lhs) collect_vars(l, rule_vars);

  for (const auto& raw_pat : ex.patterns) {
    std::vector<std::string> taken = rule_vars;
    std::vector<ExprPtr> pat = rename_apart(raw_pat, taken);
    Subst sigma;
    std::vector<ExprPtr> new_lhs;
    if (most_general) {
      for (size_t i = 0; i < dflt.lhs.size(); ++i)
        sigma[dflt.lhs[i]->name] = pat[i];
      new_lhs = clone_exprs(pat);
    } else {
      auto mgu = unify_all(dflt.lhs, pat);
      if (!mgu) continue; // the default rule never matched this region
      sigma = *mgu;
      new_lhs.clear();
      for (const auto& l : dflt.lhs) new_lhs.push_back(apply_subst(sigma, l));
    }
    Rule r;
    r.op = op.name;
    r.lhs = std::move(new_lhs);
    r.cond = dflt.cond ? apply_subst(sigma, dflt.cond) : nullptr;
    r.rhs = apply_subst(sigma, dflt.rhs);
    r.free_vars = dflt.free_vars;
    r.from_default = true;
    res.rules.push_back(std::move(r));
  }

  // Conditional rule leaves: the default also applies where the pattern
  // matched but the condition has no solution.
  std::vector<const DefTree*> leaves;
  collect_conditional_leaves(tree, leaves);
  int conditional_count = 0;
  for (const DefTree* leaf : leaves)
    if (op.standard_rules[leaf->rule_indices[0]].cond) ++conditional_count;
  int ordinal = 0;
  for (const DefTree* leaf : leaves) {
    const Rule& sr = op.standard_rules[leaf->rule_indices[0]];
    if (!sr.cond) continue;
    ++ordinal;
    std::string helper_name = op.name + "'TEST";
    if (conditional_count > 1) helper_name += std::to_string(ordinal);

    OperationDef helper;
    helper.name = helper_name;
    helper.arity = op.arity;
    Rule h;
    h.op = helper_name;
    h.lhs = clone_exprs(sr.lhs);
    h.cond = clone_tree(sr.cond);
    h.rhs = mkUnit();
    h.free_vars = sr.free_vars;
    helper.standard_rules.push_back(std::move(h));
    res.helper_ops.push_back(std::move(helper));

    Subst sigma;
    std::vector<ExprPtr> lhs;
    if (most_general) {
      for (size_t i = 0; i < dflt.lhs.size(); ++i)
        sigma[dflt.lhs[i]->name] = sr.lhs[i];
      lhs = clone_exprs(sr.lhs);
    } else {
      std::vector<std::string> taken = rule_vars;
      std::vector<ExprPtr> leaf_pat = rename_apart(sr.lhs, taken);
      auto mgu = unify_all(dflt.lhs, leaf_pat);
      if (!mgu) continue;
      sigma = *mgu;
      lhs.clear();
      for (const auto& lp : leaf_pat) lhs.push_back(apply_subst(sigma, lp));
    }
    Rule neg;
    neg.op = op.name;
    neg.lhs = lhs;
    neg.cond = conj(mkOp("isEmpty", {mkSetApp(helper_name, clone_exprs(lhs))}),
                    dflt.cond ? apply_subst(sigma, dflt.cond) : nullptr);
    neg.rhs = apply_subst(sigma, dflt.rhs);
    neg.free_vars = dflt.free_vars;
    neg.from_default = true;
    res.rules.push_back(std::move(neg));
  }
  return res;
}

Program transform_replace(const Program& p, bool fallback,
                          std::vector<ApplicabilityEntry>* report) {
  check_reserved(p);
  Program norm = p;
  normalize_program(norm);

  Program out;
  out.data_decls = norm.data_decls;
  std::vector<std::string> errors;
  for (const auto& name : norm.op_order) {
    const auto& def = norm.ops.at(name);
    if (!def.default_rule) {
      out.add_op(def);
      continue;
    }
    try {
      auto tree = build_definitional_tree(norm, def);
      ReplacementResult res = replace_default_rule(norm, def, *tree);
      OperationDef nd = def;
      nd.default_rule.reset();
      for (auto& r : res.rules) nd.standard_rules.push_back(std::move(r));
      out.add_op(std::move(nd));
      for (auto& h : res.helper_ops) out.add_op(std::move(h));
      if (report) report->push_back({name, "replace", ""});
    } catch (const TransformError& e) {
      if (fallback) {
        basic_transform_op(out, def);
        if (report) report->push_back({name, "basic", e.what()});
      } else {
        errors.push_back(e.what());
        if (report) report->push_back({name, "error", e.what()});
      }
    } catch (const TreeError& e) {
      if (fallback) {
        basic_transform_op(out, def);
        if (report) report->push_back({name, "basic", e.what()});
      } else {
        errors.push_back(e.what());
        if (report) report->push_back({name, "error", e.what()});
      }
    }
  }
  if (!errors.empty()) {
    std::string msg = "replacement inapplicable:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw TransformError(msg);
  }
  validate_program(out);
  return out;
}

Program apply_scheme(const Program& p, TransformScheme scheme, bool fallback,
                     std::vector<ApplicabilityEntry>* report) {
  switch (scheme) {
    case TransformScheme::Basic:
      return transform_basic(p);
    case TransformScheme::Continuation:
      return transform_cont(p);
    case TransformScheme::Replacement:
      return transform_replace(p, fallback, report);
  }
  throw TransformError("unknown scheme");
}

Program drop_default_rules(const Program& p) {
  Program out = p;
  for (auto& [name, def] : out.ops) {
    (void)name;
    def.default_rule.reset();
  }
  return out;
}

} // namespace flc

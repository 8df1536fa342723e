#include "flc/ast.hpp"

#include <algorithm>
#include <set>

namespace flc {

namespace {
ExprPtr node(Kind k, int level) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->level = level;
  return e;
}
} // namespace

ExprPtr mkVar(std::string name, int level) {
  auto e = node(Kind::Var, level);
  e->name = std::move(name);
  return e;
}

ExprPtr mkCon(std::string name, std::vector<ExprPtr> kids, int level) {
  auto e = node(Kind::Con, level);
  e->name = std::move(name);
  e->kids = std::move(kids);
  return e;
}

ExprPtr mkOp(std::string name, std::vector<ExprPtr> kids, int level) {
  auto e = node(Kind::Op, level);
  e->name = std::move(name);
  e->kids = std::move(kids);
  return e;
}

ExprPtr mkSymRef(std::string name, bool isCon, int level) {
  auto e = node(Kind::SymRef, level);
  e->name = std::move(name);
  e->symref_is_con = isCon;
  return e;
}

ExprPtr mkInt(long long v, int level) {
  auto e = node(Kind::Int, level);
  e->ival = v;
  return e;
}

ExprPtr mkChar(long long c, int level) {
  auto e = node(Kind::Char, level);
  e->ival = c;
  return e;
}

ExprPtr mkLambda(std::string param, ExprPtr body, int level) {
  auto e = node(Kind::Lambda, level);
  e->name = std::move(param);
  e->kids = {std::move(body)};
  return e;
}

ExprPtr mkSetApp(std::string op, std::vector<ExprPtr> kids, int level) {
  auto e = node(Kind::SetApp, level);
  e->name = std::move(op);
  e->kids = std::move(kids);
  return e;
}

ExprPtr mkIf(ExprPtr c, ExprPtr t, ExprPtr e2, int level) {
  auto e = node(Kind::If, level);
  e->kids = {std::move(c), std::move(t), std::move(e2)};
  return e;
}

ExprPtr mkFailed(int level) { return node(Kind::Failed, level); }

ExprPtr mkApply(ExprPtr f, ExprPtr arg, int level) {
  return mkOp("@", {std::move(f), std::move(arg)}, level);
}

ExprPtr mkNil(int level) { return mkCon("[]", {}, level); }

ExprPtr mkCons(ExprPtr h, ExprPtr t, int level) {
  return mkCon(":", {std::move(h), std::move(t)}, level);
}

ExprPtr mkList(std::vector<ExprPtr> elems, int level) {
  ExprPtr acc = mkNil(level);
  for (auto it = elems.rbegin(); it != elems.rend(); ++it)
    acc = mkCons(*it, acc, level);
  return acc;
}

ExprPtr mkTuple(std::vector<ExprPtr> elems, int level) {
  if (elems.size() == 2) return mkCon("(,)", std::move(elems), level);
  if (elems.size() == 3) return mkCon("(,,)", std::move(elems), level);
  throw LoadError("only pairs and triples are supported");
}

ExprPtr mkUnit(int level) { return mkCon("()", {}, level); }

ExprPtr mkString(const std::string& s, int level) {
  std::vector<ExprPtr> cs;
  cs.reserve(s.size());
  for (char c : s) cs.push_back(mkChar(static_cast<unsigned char>(c), level));
  return mkList(std::move(cs), level);
}

bool isWildcardName(const std::string& name) {
  return !name.empty() && name[0] == '_';
}

const OperationDef* Program::find_op(const std::string& name) const {
  auto it = ops.find(name);
  return it == ops.end() ? nullptr : &it->second;
}

OperationDef* Program::find_op(const std::string& name) {
  auto it = ops.find(name);
  return it == ops.end() ? nullptr : &it->second;
}

void Program::add_op(OperationDef def) {
  if (!ops.count(def.name)) op_order.push_back(def.name);
  ops[def.name] = std::move(def);
}

std::optional<CtorInfo> Program::find_ctor(const std::string& name) const {
  for (const auto& d : data_decls)
    for (const auto& c : d.ctors)
      if (c.name == name) return CtorInfo{d.type_name, c.arity};
  for (const auto& d : builtin_data_decls())
    for (const auto& c : d.ctors)
      if (c.name == name) return CtorInfo{d.type_name, c.arity};
  return std::nullopt;
}

const DataDecl* Program::find_data(const std::string& type_name) const {
  for (const auto& d : data_decls)
    if (d.type_name == type_name) return &d;
  for (const auto& d : builtin_data_decls())
    if (d.type_name == type_name) return &d;
  return nullptr;
}

const std::vector<DataDecl>& builtin_data_decls() {
  static const std::vector<DataDecl> decls = {
      {"Bool", {{"True", 0}, {"False", 0}}, true},
      {"List", {{"[]", 0}, {":", 2}}, true},
      {"Unit", {{"()", 0}}, true},
      {"Pair", {{"(,)", 2}}, true},
      {"Triple", {{"(,,)", 3}}, true},
      {"Maybe", {{"Nothing", 0}, {"Just", 1}}, true},
  };
  return decls;
}

std::optional<int> native_op_arity(const std::string& name) {
  if (name == "==" || name == "+" || name == "-" || name == "<" || name == "@")
    return 2;
  if (name == "abs" || name == "isDigit" || name == "isEmpty" ||
      name == "chooseValue")
    return 1;
  return std::nullopt;
}

ExprPtr apply_subst(const Subst& s, const ExprPtr& e) {
  switch (e->kind) {
    case Kind::Var: {
      auto it = s.find(e->name);
      if (it != s.end()) return it->second;
      return mkVar(e->name, e->level);
    }
    case Kind::Int:
    case Kind::Char:
    case Kind::Failed:
    case Kind::SymRef: {
      auto c = std::make_shared<Expr>(*e);
      return c;
    }
    default: {
      auto c = std::make_shared<Expr>(*e);
      c->kids.clear();
      for (const auto& k : e->kids) c->kids.push_back(apply_subst(s, k));
      return c;
    }
  }
}

namespace {

bool match_one(const ExprPtr& p, const ExprPtr& subject, Subst& out) {
  // Runtime subjects may carry indirections.
  ExprPtr t = subject;
  while (t->kind == Kind::Ref) t = t->kids[0];
  switch (p->kind) {
    case Kind::Var:
      out[p->name] = t;
      return true;
    case Kind::Int:
      return t->kind == Kind::Int && t->ival == p->ival;
    case Kind::Char:
      return t->kind == Kind::Char && t->ival == p->ival;
    case Kind::Con: {
      if (t->kind != Kind::Con || t->name != p->name ||
          t->kids.size() != p->kids.size())
        return false;
      for (size_t i = 0; i < p->kids.size(); ++i)
        if (!match_one(p->kids[i], t->kids[i], out)) return false;
      return true;
    }
    default:
      return false;
  }
}

} // namespace

std::optional<Subst> match(const ExprPtr& pattern, const ExprPtr& subject) {
  Subst s;
  if (!match_one(pattern, subject, s)) return std::nullopt;
  return s;
}

std::optional<Subst> match_all(const std::vector<ExprPtr>& patterns,
                               const std::vector<ExprPtr>& subjects) {
  if (patterns.size() != subjects.size()) return std::nullopt;
  Subst s;
  for (size_t i = 0; i < patterns.size(); ++i)
    if (!match_one(patterns[i], subjects[i], s)) return std::nullopt;
  return s;
}

namespace {

bool occurs(const std::string& v, const ExprPtr& e) {
  if (e->kind == Kind::Var) return e->name == v;
  for (const auto& k : e->kids)
    if (occurs(v, k)) return true;
  return false;
}

bool unify_one(ExprPtr p, ExprPtr q, Subst& s) {
  p = apply_subst(s, p);
  q = apply_subst(s, q);
  if (p->kind == Kind::Var) {
    if (q->kind == Kind::Var && q->name == p->name) return true;
    if (occurs(p->name, q)) return false;
    // Extend and keep the substitution idempotent.
    Subst bind{{p->name, q}};
    for (auto& [k, v] : s) v = apply_subst(bind, v);
    s[p->name] = q;
    return true;
  }
  if (q->kind == Kind::Var) return unify_one(q, p, s);
  if (p->kind == Kind::Int || p->kind == Kind::Char)
    return q->kind == p->kind && q->ival == p->ival;
  if (p->kind == Kind::Con && q->kind == Kind::Con) {
    if (p->name != q->name || p->kids.size() != q->kids.size()) return false;
    for (size_t i = 0; i < p->kids.size(); ++i)
      if (!unify_one(p->kids[i], q->kids[i], s)) return false;
    return true;
  }
  return false;
}

} // namespace

std::optional<Subst> unify(const ExprPtr& p, const ExprPtr& q) {
  Subst s;
  if (!unify_one(p, q, s)) return std::nullopt;
  return s;
}

std::optional<Subst> unify_all(const std::vector<ExprPtr>& ps,
                               const std::vector<ExprPtr>& qs) {
  if (ps.size() != qs.size()) return std::nullopt;
  Subst s;
  for (size_t i = 0; i < ps.size(); ++i)
    if (!unify_one(ps[i], qs[i], s)) return std::nullopt;
  return s;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a->kind != b->kind || a->name != b->name || a->ival != b->ival ||
      a->kids.size() != b->kids.size() || a->let_names != b->let_names)
    return false;
  for (size_t i = 0; i < a->kids.size(); ++i)
    if (!expr_equal(a->kids[i], b->kids[i])) return false;
  return true;
}

namespace {

// Alpha-comparison with two rename maps; bound and free variables are
// treated alike since rules bring all their variables into scope together.
bool alpha_one(const ExprPtr& a, const ExprPtr& b,
               std::map<std::string, std::string>& ab,
               std::map<std::string, std::string>& ba) {
  if (a->kind != b->kind) return false;
  if (a->kind == Kind::Var || a->kind == Kind::Lambda) {
    const std::string& na = a->name;
    const std::string& nb = b->name;
    auto ita = ab.find(na);
    auto itb = ba.find(nb);
    if (ita == ab.end() && itb == ba.end()) {
      ab[na] = nb;
      ba[nb] = na;
    } else if (ita == ab.end() || itb == ba.end() || ita->second != nb ||
               itb->second != na) {
      return false;
    }
  } else if (a->name != b->name) {
    return false;
  }
  if (a->ival != b->ival || a->kids.size() != b->kids.size()) return false;
  if (a->kind == Kind::Let) {
    if (a->let_names.size() != b->let_names.size()) return false;
    for (size_t i = 0; i < a->let_names.size(); ++i) {
      ab[a->let_names[i]] = b->let_names[i];
      ba[b->let_names[i]] = a->let_names[i];
    }
  }
  for (size_t i = 0; i < a->kids.size(); ++i)
    if (!alpha_one(a->kids[i], b->kids[i], ab, ba)) return false;
  return true;
}

} // namespace

bool alpha_equal_exprs(const std::vector<ExprPtr>& as,
                       const std::vector<ExprPtr>& bs) {
  if (as.size() != bs.size()) return false;
  std::map<std::string, std::string> ab, ba;
  for (size_t i = 0; i < as.size(); ++i)
    if (!alpha_one(as[i], bs[i], ab, ba)) return false;
  return true;
}

bool alpha_equal(const Rule& a, const Rule& b) {
  if (a.op != b.op || a.lhs.size() != b.lhs.size()) return false;
  if ((a.cond == nullptr) != (b.cond == nullptr)) return false;
  std::vector<ExprPtr> as = a.lhs, bs = b.lhs;
  if (a.cond) {
    as.push_back(a.cond);
    bs.push_back(b.cond);
  }
  as.push_back(a.rhs);
  bs.push_back(b.rhs);
  return alpha_equal_exprs(as, bs);
}

bool alpha_equal(const Program& a, const Program& b) {
  if (a.op_order.size() != b.op_order.size()) return false;
  for (size_t i = 0; i < a.op_order.size(); ++i) {
    const OperationDef* oa = a.find_op(a.op_order[i]);
    const OperationDef* ob = b.find_op(b.op_order[i]);
    if (oa->name != ob->name || oa->arity != ob->arity) return false;
    if (oa->standard_rules.size() != ob->standard_rules.size()) return false;
    for (size_t j = 0; j < oa->standard_rules.size(); ++j)
      if (!alpha_equal(oa->standard_rules[j], ob->standard_rules[j]))
        return false;
    if (oa->default_rule.has_value() != ob->default_rule.has_value())
      return false;
    if (oa->default_rule && !alpha_equal(*oa->default_rule, *ob->default_rule))
      return false;
  }
  return true;
}

void collect_vars(const ExprPtr& e, std::vector<std::string>& out) {
  if (e->kind == Kind::Var) {
    out.push_back(e->name);
    return;
  }
  for (const auto& k : e->kids) collect_vars(k, out);
}

bool contains_op_node(const ExprPtr& e) {
  if (e->kind == Kind::Op || e->kind == Kind::SetApp ||
      e->kind == Kind::SymRef || e->kind == Kind::If ||
      e->kind == Kind::Lambda || e->kind == Kind::Let ||
      e->kind == Kind::Failed)
    return true;
  for (const auto& k : e->kids)
    if (contains_op_node(k)) return true;
  return false;
}

std::string fresh_name(const std::string& base,
                       const std::vector<std::string>& taken) {
  auto used = [&](const std::string& n) {
    return std::find(taken.begin(), taken.end(), n) != taken.end();
  };
  std::string cand = base + "'";
  while (used(cand)) cand += "'";
  return cand;
}

namespace {

ExprPtr conj(ExprPtr a, ExprPtr b) {
  if (!a) return b;
  if (!b) return a;
  return mkOp("&&", {std::move(a), std::move(b)});
}

void rename_repeats(const ExprPtr& p, std::vector<std::string>& seen,
                    std::vector<std::string>& all_names, ExprPtr& extra_cond) {
  if (p->kind == Kind::Var) {
    if (std::find(seen.begin(), seen.end(), p->name) != seen.end()) {
      std::string fresh = fresh_name(p->name, all_names);
      all_names.push_back(fresh);
      extra_cond = conj(extra_cond, mkOp("==", {mkVar(p->name), mkVar(fresh)}));
      p->name = fresh;
    } else {
      seen.push_back(p->name);
    }
    return;
  }
  for (const auto& k : p->kids) rename_repeats(k, seen, all_names, extra_cond);
}

ExprPtr clone_tree(const ExprPtr& e) {
  auto c = std::make_shared<Expr>(*e);
  c->kids.clear();
  for (const auto& k : e->kids) c->kids.push_back(clone_tree(k));
  return c;
}

} // namespace

Rule linearize_rule(const Rule& r) {
  std::vector<std::string> names;
  for (const auto& p : r.lhs) collect_vars(p, names);
  for (const auto& v : r.free_vars) names.push_back(v);

  Rule out = r;
  out.lhs.clear();
  for (const auto& p : r.lhs) out.lhs.push_back(clone_tree(p));

  std::vector<std::string> seen;
  ExprPtr extra;
  for (auto& p : out.lhs) rename_repeats(p, seen, names, extra);
  if (extra) out.cond = conj(std::move(extra), out.cond);
  return out;
}

Rule desugar_functional_patterns(const Rule& r) {
  bool any = false;
  for (const auto& p : r.lhs)
    if (contains_op_node(p)) any = true;
  if (!any) return r;

  std::vector<std::string> names;
  for (const auto& p : r.lhs) collect_vars(p, names);
  for (const auto& v : r.free_vars) names.push_back(v);

  Rule out = r;
  out.lhs.clear();
  ExprPtr extra;
  std::vector<std::string> moved; // pattern variables of functional patterns
  for (const auto& p : r.lhs) {
    if (!contains_op_node(p)) {
      out.lhs.push_back(clone_tree(p));
      continue;
    }
    std::string v = fresh_name("v", names);
    names.push_back(v);
    extra = conj(std::move(extra), mkOp("==", {mkVar(v), clone_tree(p)}));
    collect_vars(p, moved);
    out.lhs.push_back(mkVar(v));
  }
  out.cond = conj(std::move(extra), out.cond);

  // Variables still bound by a remaining standard pattern stay as they are;
  // all others become free variables of the rule.
  std::vector<std::string> still_bound;
  for (const auto& p : out.lhs) collect_vars(p, still_bound);
  for (const auto& v : moved) {
    bool bound = std::find(still_bound.begin(), still_bound.end(), v) !=
                 still_bound.end();
    bool already = std::find(out.free_vars.begin(), out.free_vars.end(), v) !=
                   out.free_vars.end();
    if (!bound && !already) out.free_vars.push_back(v);
  }
  return out;
}

void normalize_program(Program& p) {
  for (auto& name : p.op_order) {
    auto& def = p.ops.at(name);
    for (auto& r : def.standard_rules)
      r = linearize_rule(desugar_functional_patterns(r));
    if (def.default_rule)
      def.default_rule =
          linearize_rule(desugar_functional_patterns(*def.default_rule));
  }
}

namespace {

void validate_expr(const Program& p, const ExprPtr& e,
                   std::vector<std::string> scope, const std::string& where) {
  switch (e->kind) {
    case Kind::Var:
      if (std::find(scope.begin(), scope.end(), e->name) == scope.end())
        throw LoadError("unbound variable '" + e->name + "' in " + where);
      return;
    case Kind::Con: {
      auto info = p.find_ctor(e->name);
      if (!info) throw LoadError("unknown constructor " + e->name);
      if (static_cast<size_t>(info->arity) != e->kids.size())
        throw LoadError("arity mismatch for constructor " + e->name);
      break;
    }
    case Kind::Op: {
      const OperationDef* def = p.find_op(e->name);
      auto native = native_op_arity(e->name);
      size_t arity;
      if (def)
        arity = static_cast<size_t>(def->arity);
      else if (native)
        arity = static_cast<size_t>(*native);
      else
        throw LoadError("unknown operation " + e->name);
      if (arity != e->kids.size())
        throw LoadError("arity mismatch for operation " + e->name);
      break;
    }
    case Kind::SetApp: {
      const OperationDef* def = p.find_op(e->name);
      if (!def)
        throw LoadError("set function '" + e->name +
                        "' does not name a defined operation");
      if (static_cast<size_t>(def->arity) != e->kids.size())
        throw LoadError("arity mismatch for set function " + e->name);
      break;
    }
    case Kind::SymRef: {
      if (e->symref_is_con) {
        if (!p.find_ctor(e->name))
          throw LoadError("unknown constructor " + e->name);
      } else if (!p.find_op(e->name) && !native_op_arity(e->name)) {
        throw LoadError("unknown operation " + e->name);
      }
      break;
    }
    case Kind::Lambda: {
      scope.push_back(e->name);
      validate_expr(p, e->kids[0], scope, where);
      return;
    }
    case Kind::Let: {
      // Bindings are non-recursive: each rhs sees only the outer scope.
      for (size_t i = 0; i + 1 < e->kids.size(); ++i)
        validate_expr(p, e->kids[i], scope, where);
      for (const auto& n : e->let_names) scope.push_back(n);
      validate_expr(p, e->kids.back(), scope, where);
      return;
    }
    default:
      break;
  }
  for (const auto& k : e->kids) validate_expr(p, k, scope, where);
}

} // namespace

void validate_program(const Program& p) {
  std::set<std::string> ctor_names;
  for (const auto& d : p.data_decls)
    for (const auto& c : d.ctors) {
      if (!ctor_names.insert(c.name).second)
        throw LoadError("duplicate constructor " + c.name);
      for (const auto& b : builtin_data_decls())
        for (const auto& bc : b.ctors)
          if (bc.name == c.name)
            throw LoadError("constructor " + c.name + " shadows a builtin");
    }

  for (const auto& name : p.op_order) {
    const auto& def = p.ops.at(name);
    auto check_rule = [&](const Rule& r) {
      if (r.lhs.size() != static_cast<size_t>(def.arity))
        throw LoadError("rule arity mismatch for " + name);
      std::vector<std::string> scope = r.free_vars;
      for (const auto& pat : r.lhs) collect_vars(pat, scope);
      if (r.cond) validate_expr(p, r.cond, scope, name);
      validate_expr(p, r.rhs, scope, name);
    };
    for (const auto& r : def.standard_rules) check_rule(r);
    if (def.default_rule) check_rule(*def.default_rule);
  }
}

} // namespace flc

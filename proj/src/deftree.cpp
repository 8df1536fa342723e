#include "flc/deftree.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "flc/parser.hpp"

namespace flc {

namespace {

ExprPtr clone_tree(const ExprPtr& e) {
  auto c = std::make_shared<Expr>(*e);
  c->kids.clear();
  for (const auto& k : e->kids) c->kids.push_back(clone_tree(k));
  return c;
}

std::vector<ExprPtr> clone_pattern(const std::vector<ExprPtr>& pat) {
  std::vector<ExprPtr> out;
  out.reserve(pat.size());
  for (const auto& p : pat) out.push_back(clone_tree(p));
  return out;
}

ExprPtr at_path(const std::vector<ExprPtr>& pat, const Path& path) {
  ExprPtr cur = pat.at(path.at(0));
  for (size_t i = 1; i < path.size(); ++i) cur = cur->kids.at(path[i]);
  return cur;
}

// Collects the variable positions of the node pattern in leftmost-outermost
// order (pre-order over each argument, left to right).
void variable_positions(const ExprPtr& e, Path prefix, std::vector<Path>& out) {
  if (e->kind == Kind::Var) {
    out.push_back(prefix);
    return;
  }
  for (size_t i = 0; i < e->kids.size(); ++i) {
    Path p = prefix;
    p.push_back(static_cast<int>(i));
    variable_positions(e->kids[i], p, out);
  }
}

std::vector<Path> pattern_variable_positions(const std::vector<ExprPtr>& pat) {
  std::vector<Path> out;
  for (size_t i = 0; i < pat.size(); ++i)
    variable_positions(pat[i], {static_cast<int>(i)}, out);
  return out;
}

bool is_variant(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
  auto s1 = match_all(a, b);
  auto s2 = match_all(b, a);
  if (!s1 || !s2) return false;
  auto vars_only = [](const Subst& s) {
    for (const auto& [k, v] : s) {
      (void)k;
      if (v->kind != Kind::Var) return false;
    }
    return true;
  };
  return vars_only(*s1) && vars_only(*s2);
}

std::string pattern_atom(const ExprPtr& p) {
  std::string t = print_expr(p);
  bool atomic = p->kind == Kind::Var || p->kind == Kind::Int ||
                p->kind == Kind::Char || p->kids.empty() ||
                t.front() == '(' || t.front() == '[' || t.front() == '"';
  return atomic ? t : "(" + t + ")";
}

std::string pattern_to_string(const std::string& op,
                              const std::vector<ExprPtr>& pat) {
  bool symbolic = !op.empty() && !std::isalpha(static_cast<unsigned char>(op[0])) &&
                  op[0] != '_';
  if (symbolic && pat.size() == 2)
    return pattern_atom(pat[0]) + " " + op + " " + pattern_atom(pat[1]);
  std::string s = op;
  for (const auto& p : pat) s += ' ' + pattern_atom(p);
  return s;
}

struct Builder {
  const Program& prog;
  const OperationDef& op;
  int fresh_counter = 0;

  std::string fresh_var() { return "_t" + std::to_string(++fresh_counter); }

  std::unique_ptr<DefTree> build(std::vector<ExprPtr> pattern,
                                 const std::vector<int>& rules) {
    // Rule node: every remaining rule's lhs is a variant of the pattern.
    bool all_variants = true;
    for (int ri : rules)
      if (!is_variant(op.standard_rules[ri].lhs, pattern)) all_variants = false;
    if (all_variants) {
      if (rules.size() > 1) {
        // Overlapping rules are admitted only as variants of each other.
        for (size_t i = 1; i < rules.size(); ++i)
          if (!is_variant(op.standard_rules[rules[0]].lhs,
                          op.standard_rules[rules[i]].lhs))
            throw TreeError(TreeError::Code::NotSequential,
                            "overlapping non-variant rules for " + op.name);
      }
      auto t = std::make_unique<DefTree>();
      t->tag = DefTree::Tag::Rule;
      t->pattern = std::move(pattern);
      t->rule_indices = rules;
      return t;
    }

    // Otherwise find a position demanded by every rule.
    std::vector<Path> positions = pattern_variable_positions(pattern);
    const Path* chosen = nullptr;
    for (const Path& pos : positions) {
      bool all_demand = true;
      for (int ri : rules) {
        auto m = match_all(pattern, op.standard_rules[ri].lhs);
        // The node pattern generalizes each rule lhs by construction.
        if (!m) {
          all_demand = false;
          break;
        }
        ExprPtr v = at_path(pattern, pos);
        auto it = m->find(v->name);
        ExprPtr sub = it == m->end() ? nullptr : it->second;
        if (!sub || (sub->kind != Kind::Con && sub->kind != Kind::Int &&
                     sub->kind != Kind::Char)) {
          all_demand = false;
          break;
        }
      }
      if (all_demand) {
        chosen = &pos;
        break;
      }
    }
    if (!chosen) {
      std::string w = "no position demanded by all rules of " + op.name + ":";
      for (int ri : rules)
        w += " [" + pattern_to_string(op.name, op.standard_rules[ri].lhs) + "]";
      throw TreeError(TreeError::Code::NotSequential, w);
    }

    Path pos = *chosen;
    ExprPtr pivot = at_path(pattern, pos);

    // Inspect the constructors/literals the rules place at the position.
    bool any_ctor = false, any_lit = false;
    bool char_lits = false;
    std::string type_name;
    std::vector<long long> lits;
    for (int ri : rules) {
      auto m = match_all(pattern, op.standard_rules[ri].lhs);
      ExprPtr sub = m->at(pivot->name);
      if (sub->kind == Kind::Con) {
        any_ctor = true;
        auto info = prog.find_ctor(sub->name);
        if (!info)
          throw LoadError("unknown constructor " + sub->name);
        if (type_name.empty()) type_name = info->type_name;
        if (type_name != info->type_name)
          throw TreeError(TreeError::Code::MixedTypes,
                          "constructors from different types at one position in " +
                              op.name);
      } else {
        any_lit = true;
        char_lits = sub->kind == Kind::Char;
        if (std::find(lits.begin(), lits.end(), sub->ival) == lits.end())
          lits.push_back(sub->ival);
      }
    }
    if (any_ctor && any_lit)
      throw TreeError(TreeError::Code::MixedTypes,
                      "literals mixed with constructors in " + op.name);

    auto t = std::make_unique<DefTree>();
    t->tag = DefTree::Tag::Branch;
    t->pattern = clone_pattern(pattern);
    t->inductive_pos = pos;

    // Every rule lhs instantiates the node pattern and is constructor-rooted
    // at the inductive position, so it belongs to exactly one child.
    auto child_rules = [&](const std::vector<ExprPtr>& child_pat) {
      std::vector<int> out;
      for (int ri : rules)
        if (match_all(child_pat, op.standard_rules[ri].lhs)) out.push_back(ri);
      return out;
    };

    if (any_lit) {
      t->literal_branch = true;
      t->char_literals = char_lits;
      t->has_literal_complement = true;
      std::sort(lits.begin(), lits.end());
      for (long long l : lits) {
        std::vector<ExprPtr> child_pat = clone_pattern(pattern);
        ExprPtr slot = at_path(child_pat, pos);
        *slot = char_lits ? *mkChar(l) : *mkInt(l);
        std::vector<int> crs = child_rules(child_pat);
        t->literals.push_back(l);
        t->children.push_back(build(std::move(child_pat), crs));
      }
      return t;
    }

    // One child per constructor of the inferred type, in declaration order.
    const DataDecl* data = prog.find_data(type_name);
    if (!data) throw LoadError("unknown type " + type_name);
    for (const auto& ctor : data->ctors) {
      std::vector<ExprPtr> child_pat = clone_pattern(pattern);
      ExprPtr slot = at_path(child_pat, pos);
      std::vector<ExprPtr> fresh;
      for (int i = 0; i < ctor.arity; ++i) fresh.push_back(mkVar(fresh_var()));
      *slot = *mkCon(ctor.name, std::move(fresh));
      std::vector<int> crs = child_rules(child_pat);
      if (crs.empty()) {
        auto ex = std::make_unique<DefTree>();
        ex->tag = DefTree::Tag::Exempt;
        ex->pattern = std::move(child_pat);
        t->children.push_back(std::move(ex));
      } else {
        t->children.push_back(build(std::move(child_pat), crs));
      }
    }
    return t;
  }
};

} // namespace

std::unique_ptr<DefTree> build_definitional_tree(const Program& p,
                                                 const OperationDef& op) {
  if (op.standard_rules.empty())
    throw TreeError(TreeError::Code::NotSequential,
                    op.name + " has no standard rules");
  for (const auto& r : op.standard_rules)
    for (const auto& pat : r.lhs)
      if (contains_op_node(pat))
        throw LoadError("rules of " + op.name +
                        " are not normalized (functional pattern present)");
  Builder b{p, op};
  std::vector<ExprPtr> root;
  std::vector<std::string> taken;
  for (int i = 0; i < op.arity; ++i)
    root.push_back(mkVar("_r" + std::to_string(i + 1)));
  std::vector<int> all;
  for (size_t i = 0; i < op.standard_rules.size(); ++i)
    all.push_back(static_cast<int>(i));
  return b.build(std::move(root), all);
}

OpClassification classify_operation(const Program& p, const OperationDef& op) {
  try {
    auto t = build_definitional_tree(p, op);
    bool overlapping = false;
    std::vector<const DefTree*> stack{t.get()};
    while (!stack.empty()) {
      const DefTree* n = stack.back();
      stack.pop_back();
      if (n->tag == DefTree::Tag::Rule && n->rule_indices.size() > 1)
        overlapping = true;
      for (const auto& c : n->children) stack.push_back(c.get());
    }
    return {overlapping
                ? OpClassification::Tag::OverlappingInductivelySequential
                : OpClassification::Tag::InductivelySequential,
            ""};
  } catch (const TreeError& e) {
    return {OpClassification::Tag::NotSequential, e.what()};
  }
}

namespace {

void collect_exempts(const DefTree& t, ExemptPatterns& out) {
  switch (t.tag) {
    case DefTree::Tag::Exempt:
      out.patterns.push_back(t.pattern);
      return;
    case DefTree::Tag::Rule:
      return;
    case DefTree::Tag::Branch:
      if (t.has_literal_complement) out.has_literal_complement = true;
      for (const auto& c : t.children) collect_exempts(*c, out);
      return;
  }
}

std::string position_to_string(const Path& p) {
  std::string s;
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(p[i] + 1);
  }
  return s;
}

void render_rec(const DefTree& t, const OperationDef& op, int indent,
                std::ostream& os) {
  std::string pad(static_cast<size_t>(indent) * 2, ' ');
  switch (t.tag) {
    case DefTree::Tag::Branch: {
      os << pad << "branch " << pattern_to_string(op.name, t.pattern) << " on "
         << position_to_string(t.inductive_pos) << '\n';
      for (const auto& c : t.children) render_rec(*c, op, indent + 1, os);
      if (t.has_literal_complement)
        os << pad << "  exempt " << pattern_to_string(op.name, t.pattern)
           << " (other literals)\n";
      return;
    }
    case DefTree::Tag::Rule: {
      for (int ri : t.rule_indices) {
        const Rule& r = op.standard_rules[ri];
        os << pad << "rule " << pattern_to_string(op.name, r.lhs);
        if (r.cond) os << " | " << print_expr(r.cond);
        os << " = " << print_expr(r.rhs) << '\n';
      }
      return;
    }
    case DefTree::Tag::Exempt:
      os << pad << "exempt " << pattern_to_string(op.name, t.pattern) << '\n';
      return;
  }
}

} // namespace

ExemptPatterns exempt_patterns(const DefTree& t) {
  ExemptPatterns out;
  collect_exempts(t, out);
  return out;
}

std::string render_tree(const DefTree& t, const OperationDef& op) {
  std::ostringstream os;
  render_rec(t, op, 0, os);
  return os.str();
}

} // namespace flc

#include "doctest.h"

#include <algorithm>

#include "flc/ast.hpp"
#include "flc/deftree.hpp"
#include "flc/parser.hpp"
#include "flc/prelude.hpp"

using namespace flc;

namespace {

Program load_normalized(const std::string& src) {
  Program p = load_program(src);
  normalize_program(p);
  return p;
}

// Leaf-partition oracle: counts how many tree leaves (rule,
// exempt, or implicit literal-complement region) match a ground argument
// tuple. Independent of the evaluation strategy; walks every leaf.
int matching_leaves(const DefTree& t, const std::vector<ExprPtr>& args) {
  switch (t.tag) {
    case DefTree::Tag::Rule:
    case DefTree::Tag::Exempt:
      return match_all(t.pattern, args) ? 1 : 0;
    case DefTree::Tag::Branch: {
      int n = 0;
      for (const auto& c : t.children) n += matching_leaves(*c, args);
      if (t.has_literal_complement && match_all(t.pattern, args)) {
        // Region: branch pattern matches and the literal is not covered.
        ExprPtr sub = args.at(t.inductive_pos.at(0));
        for (size_t i = 1; i < t.inductive_pos.size(); ++i)
          sub = sub->kids.at(t.inductive_pos[i]);
        if ((sub->kind == Kind::Int || sub->kind == Kind::Char) &&
            std::find(t.literals.begin(), t.literals.end(), sub->ival) ==
                t.literals.end())
          ++n;
      }
      return n;
    }
  }
  return 0;
}

void all_ground_lists(int max_len, const std::vector<ExprPtr>& elems,
                      std::vector<ExprPtr>& out) {
  std::vector<std::vector<ExprPtr>> cur{{}};
  out.push_back(mkList({}));
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<ExprPtr>> next;
    for (const auto& prefix : cur)
      for (const auto& e : elems) {
        auto v = prefix;
        v.push_back(e);
        next.push_back(v);
      }
    for (const auto& v : next) out.push_back(mkList(v));
    cur = std::move(next);
  }
}

std::vector<ExprPtr> int_elems() { return {mkInt(0), mkInt(1), mkInt(2)}; }

bool has_rule_below(const DefTree& t) {
  if (t.tag == DefTree::Tag::Rule) return true;
  for (const auto& c : t.children)
    if (has_rule_below(*c)) return true;
  return false;
}

void check_minimal(const DefTree& t) {
  if (t.tag == DefTree::Tag::Branch) {
    CHECK(has_rule_below(t));
    for (const auto& c : t.children) check_minimal(*c);
  }
}

void collect_rule_indices(const DefTree& t, std::vector<int>& out) {
  if (t.tag == DefTree::Tag::Rule)
    for (int ri : t.rule_indices) out.push_back(ri);
  for (const auto& c : t.children) collect_rule_indices(*c, out);
}

} // namespace

TEST_CASE("++ builds the two-rule tree branching on the first argument") {
  Program p = load_normalized("main = []\n");
  const OperationDef* op = p.find_op("++");
  REQUIRE(op != nullptr);
  auto t = build_definitional_tree(p, *op);
  REQUIRE(t->tag == DefTree::Tag::Branch);
  CHECK(t->inductive_pos == Path{0});
  REQUIRE(t->children.size() == 2);
  CHECK(t->children[0]->tag == DefTree::Tag::Rule); // []
  CHECK(t->children[1]->tag == DefTree::Tag::Rule); // (:)
  auto ex = exempt_patterns(*t);
  CHECK(ex.patterns.empty());
  CHECK_FALSE(ex.has_literal_complement);
}

TEST_CASE("zip's standard rule yields the two-exempt tree") {
  Program p = load_normalized("zip (x:xs) (y:ys) = (x,y) : zip xs ys\n");
  auto t = build_definitional_tree(p, *p.find_op("zip"));
  REQUIRE(t->tag == DefTree::Tag::Branch);
  CHECK(t->inductive_pos == Path{0});
  REQUIRE(t->children.size() == 2);
  CHECK(t->children[0]->tag == DefTree::Tag::Exempt); // zip [] _
  const DefTree& inner = *t->children[1];
  REQUIRE(inner.tag == DefTree::Tag::Branch);
  CHECK(inner.inductive_pos == Path{1});
  REQUIRE(inner.children.size() == 2);
  CHECK(inner.children[0]->tag == DefTree::Tag::Exempt); // zip (x:xs) []
  CHECK(inner.children[1]->tag == DefTree::Tag::Rule);

  auto ex = exempt_patterns(*t);
  REQUIRE(ex.patterns.size() == 2);
  CHECK(ex.patterns[0][0]->name == "[]");  // zip [] _
  CHECK(ex.patterns[1][0]->name == ":");   // zip (x:xs) []
  CHECK(ex.patterns[1][1]->name == "[]");
}

TEST_CASE("single-rule null gets the minimal branch/rule/exempt tree") {
  Program p = load_normalized("null [] = True\n");
  auto t = build_definitional_tree(p, *p.find_op("null"));
  REQUIRE(t->tag == DefTree::Tag::Branch);
  REQUIRE(t->children.size() == 2);
  CHECK(t->children[0]->tag == DefTree::Tag::Rule);
  CHECK(t->children[1]->tag == DefTree::Tag::Exempt);
  // the exempt child is (_:_), not a deeper branch
  CHECK(t->children[1]->children.empty());
}

TEST_CASE("Berry's operation admits no definitional tree") {
  Program p = load_normalized(
      "g False True x = 1\n"
      "g x False True = 2\n"
      "g True x False = 3\n");
  CHECK_THROWS_AS(build_definitional_tree(p, *p.find_op("g")), TreeError);
  auto cls = classify_operation(p, *p.find_op("g"));
  CHECK(cls.tag == OpClassification::Tag::NotSequential);
  CHECK_FALSE(cls.witness.empty());
}

TEST_CASE("classification of prelude operations") {
  Program p = load_normalized("main = []\n");
  CHECK(classify_operation(p, *p.find_op("++")).tag ==
        OpClassification::Tag::InductivelySequential);
  CHECK(classify_operation(p, *p.find_op("?")).tag ==
        OpClassification::Tag::OverlappingInductivelySequential);
}

TEST_CASE("literal patterns branch per occurring literal with a complement") {
  Program p = load_normalized("f 0 1 = 1\nf _ 2 = 2\n");
  auto t = build_definitional_tree(p, *p.find_op("f"));
  REQUIRE(t->tag == DefTree::Tag::Branch);
  // the second argument is the only position demanded by both rules
  CHECK(t->inductive_pos == Path{1});
  CHECK(t->literal_branch);
  CHECK(t->has_literal_complement);
  REQUIRE(t->literals == std::vector<long long>{1, 2});
  auto ex = exempt_patterns(*t);
  CHECK(ex.has_literal_complement);
}

TEST_CASE("last: exempt patterns of the single-rule tree") {
  Program p = load_normalized("last [x] = x\n");
  auto t = build_definitional_tree(p, *p.find_op("last"));
  auto ex = exempt_patterns(*t);
  REQUIRE(ex.patterns.size() == 2);
  // last []
  CHECK(ex.patterns[0][0]->name == "[]");
  // last (x:(y:ys))
  CHECK(ex.patterns[1][0]->name == ":");
  CHECK(ex.patterns[1][0]->kids[1]->name == ":");
  CHECK_FALSE(ex.has_literal_complement);
}

TEST_CASE("uniqueness oracle: exactly one leaf matches every ground pattern") {
  Program p = load_normalized(
      "zip (x:xs) (y:ys) = (x,y) : zip xs ys\n"
      "and True True = True\n"
      "last [x] = x\n"
      "catMaybes [] = []\n"
      "catMaybes (Just x : xs) = x : catMaybes xs\n");

  std::vector<ExprPtr> lists;
  all_ground_lists(3, int_elems(), lists);

  std::vector<ExprPtr> bools{mkCon("True"), mkCon("False")};
  std::vector<ExprPtr> maybe_lists;
  all_ground_lists(
      2, {mkCon("Nothing"), mkCon("Just", {mkInt(0)}), mkCon("Just", {mkInt(1)})},
      maybe_lists);

  auto check_op = [&](const std::string& name,
                      const std::vector<std::vector<ExprPtr>>& arg_space) {
    auto t = build_definitional_tree(p, *p.find_op(name));
    for (const auto& args : arg_space) {
      INFO("op: ", name);
      CHECK(matching_leaves(*t, args) == 1);
    }
  };

  std::vector<std::vector<ExprPtr>> pairs;
  for (const auto& a : lists)
    for (const auto& b : lists) pairs.push_back({a, b});
  check_op("++", pairs);
  check_op("zip", pairs);

  std::vector<std::vector<ExprPtr>> bool_pairs;
  for (const auto& a : bools)
    for (const auto& b : bools) bool_pairs.push_back({a, b});
  check_op("and", bool_pairs);

  std::vector<std::vector<ExprPtr>> singles;
  for (const auto& a : lists) singles.push_back({a});
  check_op("last", singles);

  std::vector<std::vector<ExprPtr>> msingles;
  for (const auto& a : maybe_lists) msingles.push_back({a});
  check_op("catMaybes", msingles);
}

TEST_CASE("trees are minimal, preserve rules and build deterministically") {
  Program p = load_normalized(
      "zip (x:xs) (y:ys) = (x,y) : zip xs ys\n"
      "and True True = True\n"
      "catMaybes [] = []\n"
      "catMaybes (Just x : xs) = x : catMaybes xs\n");
  for (const std::string name : {"zip", "and", "catMaybes", "++", "?"}) {
    const OperationDef* op = p.find_op(name);
    auto t1 = build_definitional_tree(p, *op);
    check_minimal(*t1);
    std::vector<int> ris;
    collect_rule_indices(*t1, ris);
    std::sort(ris.begin(), ris.end());
    std::vector<int> expect;
    for (size_t i = 0; i < op->standard_rules.size(); ++i)
      expect.push_back(static_cast<int>(i));
    CHECK(ris == expect);
    auto t2 = build_definitional_tree(p, *op);
    CHECK(render_tree(*t1, *op) == render_tree(*t2, *op));
  }
}

TEST_CASE("tree rendering shows branch, rule and exempt nodes") {
  Program p = load_normalized("zip (x:xs) (y:ys) = (x,y) : zip xs ys\n");
  auto t = build_definitional_tree(p, *p.find_op("zip"));
  std::string r = render_tree(*t, *p.find_op("zip"));
  CHECK(r.find("branch zip") != std::string::npos);
  CHECK(r.find("exempt zip []") != std::string::npos);
  CHECK(r.find("rule zip") != std::string::npos);
}

TEST_CASE("mixed types at one inductive position are rejected") {
  Program p1 = load_normalized("h 0 = 1\nh [] = 2\n");
  CHECK_THROWS_WITH_AS(build_definitional_tree(p1, *p1.find_op("h")),
                       doctest::Contains("literal"), TreeError);
  Program p2 = load_normalized("k True = 1\nk [] = 2\n");
  CHECK_THROWS_AS(build_definitional_tree(p2, *p2.find_op("k")), TreeError);
}

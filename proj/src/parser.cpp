#include "flc/parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace flc {

namespace {

enum class Tok {
  Ident,    // lower-case start (operations, variables), primes allowed
  UIdent,   // upper-case start (constructors, type names)
  Wild,     // _
  Int,
  Char,
  String,
  Sym,      // operator or punctuation
  Newline,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  long long ival = 0;
  int line = 1, col = 1;
};

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

struct Lexer {
  const std::string& src;
  size_t pos = 0;
  int line = 1, col = 1;

  explicit Lexer(const std::string& s) : src(s) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line, col);
  }

  void advance(size_t n) {
    for (size_t i = 0; i < n && pos < src.size(); ++i, ++pos) {
      if (src[pos] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    bool line_has_tokens = false;
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '\n') {
        if (line_has_tokens)
          out.push_back({Tok::Newline, "\n", 0, line, col});
        line_has_tokens = false;
        advance(1);
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        advance(1);
        continue;
      }
      if (c == '-' && pos + 1 < src.size() && src[pos + 1] == '-') {
        while (pos < src.size() && src[pos] != '\n') advance(1);
        continue;
      }
      Token t;
      t.line = line;
      t.col = col;
      if (std::isdigit(static_cast<unsigned char>(c))) {
        size_t e = pos;
        while (e < src.size() && std::isdigit(static_cast<unsigned char>(src[e]))) ++e;
        t.kind = Tok::Int;
        t.text = src.substr(pos, e - pos);
        t.ival = std::stoll(t.text);
        advance(e - pos);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t e = pos;
        while (e < src.size() && ident_char(src[e])) ++e;
        t.text = src.substr(pos, e - pos);
        if (t.text == "_")
          t.kind = Tok::Wild;
        else if (std::isupper(static_cast<unsigned char>(c)))
          t.kind = Tok::UIdent;
        else
          t.kind = Tok::Ident;
        advance(e - pos);
      } else if (c == '\'') {
        // char literal: 'x' or '\n' style escapes
        size_t e = pos + 1;
        if (e >= src.size()) fail("unterminated character literal");
        long long v;
        if (src[e] == '\\') {
          ++e;
          if (e >= src.size()) fail("unterminated character literal");
          switch (src[e]) {
            case 'n': v = '\n'; break;
            case 't': v = '\t'; break;
            case '\\': v = '\\'; break;
            case '\'': v = '\''; break;
            default: fail("unknown escape in character literal");
          }
          ++e;
        } else {
          v = static_cast<unsigned char>(src[e]);
          ++e;
        }
        if (e >= src.size() || src[e] != '\'') fail("unterminated character literal");
        ++e;
        t.kind = Tok::Char;
        t.ival = v;
        advance(e - pos);
      } else if (c == '"') {
        size_t e = pos + 1;
        std::string s;
        while (e < src.size() && src[e] != '"') {
          if (src[e] == '\\') {
            ++e;
            if (e >= src.size()) break;
            switch (src[e]) {
              case 'n': s += '\n'; break;
              case 't': s += '\t'; break;
              case '\\': s += '\\'; break;
              case '"': s += '"'; break;
              default: fail("unknown escape in string literal");
            }
          } else {
            s += src[e];
          }
          ++e;
        }
        if (e >= src.size()) fail("unterminated string literal");
        ++e;
        t.kind = Tok::String;
        t.text = s;
        advance(e - pos);
      } else {
        static const char* two[] = {"++", "==", "&&", "->", ".."};
        t.kind = Tok::Sym;
        t.text = std::string(1, c);
        for (const char* s : two) {
          if (src.compare(pos, 2, s) == 0) {
            t.text = s;
            break;
          }
        }
        advance(t.text.size());
      }
      out.push_back(t);
      line_has_tokens = true;
    }
    out.push_back({Tok::Newline, "\n", 0, line, col});
    out.push_back({Tok::End, "", 0, line, col});
    return out;
  }
};

bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

struct OpInfo {
  int prec;
  bool right_assoc;
};

std::optional<OpInfo> infix_info(const std::string& s) {
  if (s == "?") return OpInfo{1, true};
  if (s == "&&") return OpInfo{2, true};
  if (s == "==" || s == "<") return OpInfo{3, false};
  if (s == ":" || s == "++") return OpInfo{4, true};
  if (s == "+" || s == "-") return OpInfo{5, false};
  return std::nullopt;
}

bool infix_definable(const std::string& s) {
  return infix_info(s).has_value();
}

// Recursive-descent parser over the token stream. The same expression
// grammar serves rule patterns (checked later), conditions and goals.
struct Parser {
  std::vector<Token> toks;
  size_t ix = 0;
  Program prog;
  int wildcard_counter = 0;

  const Token& peek(size_t off = 0) const {
    size_t i = std::min(ix + off, toks.size() - 1);
    return toks[i];
  }
  const Token& next() { return toks[std::min(ix++, toks.size() - 1)]; }
  bool at_sym(const std::string& s) const {
    return peek().kind == Tok::Sym && peek().text == s;
  }
  bool eat_sym(const std::string& s) {
    if (!at_sym(s)) return false;
    ++ix;
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    throw ParseError(msg, t.line, t.col);
  }
  void expect_sym(const std::string& s) {
    if (!eat_sym(s)) fail("expected '" + s + "'");
  }

  std::string fresh_wildcard() {
    return "_" + std::to_string(++wildcard_counter);
  }

  void skip_newlines() {
    while (peek().kind == Tok::Newline) ++ix;
  }

  // --- expressions ---------------------------------------------------

  ExprPtr parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int: {
        next();
        return mkInt(t.ival);
      }
      case Tok::Char: {
        next();
        return mkChar(t.ival);
      }
      case Tok::String: {
        next();
        return mkString(t.text);
      }
      case Tok::Wild: {
        next();
        return mkVar(fresh_wildcard());
      }
      case Tok::Ident: {
        next();
        if (t.text == "failed") return mkFailed();
        if (t.text == "if") {
          ExprPtr c = parse_op_expr(0);
          if (peek().kind != Tok::Ident || peek().text != "then")
            fail("expected 'then'");
          next();
          ExprPtr th = parse_op_expr(0);
          if (peek().kind != Tok::Ident || peek().text != "else")
            fail("expected 'else'");
          next();
          ExprPtr el = parse_op_expr(0);
          return mkIf(c, th, el);
        }
        if (t.text == "let") {
          if (peek().kind != Tok::Ident) fail("expected let binder");
          std::string n = next().text;
          expect_sym("=");
          ExprPtr bound = parse_op_expr(0);
          if (peek().kind != Tok::Ident || peek().text != "in")
            fail("expected 'in'");
          next();
          ExprPtr body = parse_op_expr(0);
          auto e = std::make_shared<Expr>();
          e->kind = Kind::Let;
          e->let_names = {n};
          e->kids = {bound, body};
          return e;
        }
        if (ends_with(t.text, "'S")) {
          std::string base = t.text.substr(0, t.text.size() - 2);
          return mkSetApp(base, {});
        }
        return mkVar(t.text); // resolved to Op/SymRef later
      }
      case Tok::UIdent: {
        next();
        return mkCon(t.text, {}); // arity fixed up during resolution
      }
      case Tok::Sym: {
        if (t.text == "(") {
          next();
          if (eat_sym(")")) return mkUnit();
          ExprPtr first = parse_op_expr(0);
          std::vector<ExprPtr> elems{first};
          while (eat_sym(",")) elems.push_back(parse_op_expr(0));
          expect_sym(")");
          if (elems.size() == 1) return elems[0];
          return mkTuple(std::move(elems));
        }
        if (t.text == "[") {
          next();
          if (eat_sym("]")) return mkNil();
          ExprPtr first = parse_op_expr(0);
          if (eat_sym("..")) {
            ExprPtr hi = parse_op_expr(0);
            expect_sym("]");
            return mkOp("enumFromTo", {first, hi});
          }
          std::vector<ExprPtr> elems{first};
          while (eat_sym(",")) elems.push_back(parse_op_expr(0));
          expect_sym("]");
          return mkList(std::move(elems));
        }
        if (t.text == "\\") {
          next();
          std::string param;
          if (peek().kind == Tok::Wild) {
            next();
            param = fresh_wildcard();
          } else if (peek().kind == Tok::Ident) {
            param = next().text;
          } else {
            fail("expected lambda parameter");
          }
          expect_sym("->");
          ExprPtr body = parse_op_expr(0);
          return mkLambda(param, body);
        }
        fail("unexpected '" + t.text + "'");
      }
      default:
        fail("unexpected end of input");
    }
  }

  bool atom_start() const {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int:
      case Tok::Char:
      case Tok::String:
      case Tok::Wild:
      case Tok::UIdent:
        return true;
      case Tok::Ident:
        return t.text != "then" && t.text != "else" && t.text != "in" &&
               t.text != "where" && t.text != "free";
      case Tok::Sym:
        return t.text == "(" || t.text == "[" || t.text == "\\";
      default:
        return false;
    }
  }

  ExprPtr parse_app() {
    ExprPtr head = parse_atom();
    std::vector<ExprPtr> args;
    while (atom_start()) args.push_back(parse_atom());
    if (args.empty()) return head;
    // Application spines of Var/Con/SetApp heads collect their arguments
    // directly; anything else goes through the apply operator.
    if (head->kind == Kind::Var || head->kind == Kind::Con ||
        (head->kind == Kind::SetApp && head->kids.empty())) {
      head->kids = std::move(args);
      return head;
    }
    for (auto& a : args) head = mkApply(head, a);
    return head;
  }

  ExprPtr parse_op_expr(int min_prec) {
    ExprPtr lhs = parse_app();
    while (peek().kind == Tok::Sym) {
      auto info = infix_info(peek().text);
      if (!info || info->prec < min_prec) break;
      std::string op = next().text;
      int next_min = info->right_assoc ? info->prec : info->prec + 1;
      ExprPtr rhs = parse_op_expr(next_min);
      if (op == ":")
        lhs = mkCon(":", {lhs, rhs});
      else
        lhs = mkOp(op, {lhs, rhs});
    }
    return lhs;
  }

  // --- declarations ---------------------------------------------------

  void parse_data_decl() {
    next(); // 'data'
    if (peek().kind != Tok::UIdent) fail("expected type name");
    DataDecl d;
    d.type_name = next().text;
    expect_sym("=");
    while (true) {
      if (peek().kind != Tok::UIdent) fail("expected constructor name");
      Ctor c;
      c.name = next().text;
      // Constructor argument types are counted but otherwise ignored.
      while (true) {
        const Token& t = peek();
        if (t.kind == Tok::Ident || t.kind == Tok::UIdent) {
          next();
          ++c.arity;
        } else if (t.kind == Tok::Sym && (t.text == "(" || t.text == "[")) {
          skip_balanced();
          ++c.arity;
        } else {
          break;
        }
      }
      d.ctors.push_back(c);
      if (!eat_sym("|")) break;
    }
    prog.data_decls.push_back(std::move(d));
  }

  void skip_balanced() {
    std::string open = next().text;
    std::string close = open == "(" ? ")" : "]";
    int depth = 1;
    while (depth > 0) {
      const Token& t = peek();
      if (t.kind == Tok::End || t.kind == Tok::Newline)
        fail("unbalanced brackets in data declaration");
      if (t.kind == Tok::Sym && t.text == open) ++depth;
      if (t.kind == Tok::Sym && t.text == close) --depth;
      next();
    }
  }

  void skip_type_signature() {
    while (peek().kind != Tok::Newline && peek().kind != Tok::End) next();
  }

  bool line_is_type_signature() const {
    for (size_t off = 0;; ++off) {
      const Token& t = peek(off);
      if (t.kind == Tok::Newline || t.kind == Tok::End) return false;
      if (t.kind == Tok::Sym && t.text == ":" && peek(off + 1).kind == Tok::Sym &&
          peek(off + 1).text == ":")
        return true;
      if (t.kind == Tok::Sym && t.text == "=") return false;
    }
  }

  struct RawRule {
    std::string op;
    int line, col;
    Rule rule;
  };

  RawRule parse_rule_def() {
    RawRule out;
    out.line = peek().line;
    out.col = peek().col;

    std::string name;
    std::vector<ExprPtr> pats;

    // Either `name pat*` or the infix form `pat OP pat`.
    if (peek().kind == Tok::Ident &&
        !(peek(1).kind == Tok::Sym && infix_definable(peek(1).text) &&
          peek(1).text != "=")) {
      // Most definitions: leading identifier. A lone `x OP y = ...` with a
      // lower-case identifier head is still an infix definition, which the
      // condition above routes to the infix branch.
      name = next().text;
      while (atom_start()) pats.push_back(parse_atom());
    } else {
      ExprPtr l = parse_atom();
      if (peek().kind != Tok::Sym || !infix_definable(peek().text))
        fail("expected rule definition");
      name = next().text;
      ExprPtr r = parse_atom();
      pats = {l, r};
    }

    Rule r;
    if (ends_with(name, "'default")) {
      r.is_default = true;
      name = name.substr(0, name.size() - std::string("'default").size());
    }
    r.op = name;
    r.lhs = std::move(pats);
    if (eat_sym("|")) r.cond = parse_op_expr(0);
    expect_sym("=");
    r.rhs = parse_op_expr(0);
    if (peek().kind == Tok::Ident && peek().text == "where") {
      next();
      while (true) {
        if (peek().kind != Tok::Ident) fail("expected free variable name");
        r.free_vars.push_back(next().text);
        if (!eat_sym(",")) break;
      }
      if (peek().kind != Tok::Ident || peek().text != "free")
        fail("expected 'free'");
      next();
    }
    out.op = name;
    out.rule = std::move(r);
    return out;
  }

  Program run() {
    std::vector<RawRule> rules;
    skip_newlines();
    while (peek().kind != Tok::End) {
      if (peek().kind == Tok::Ident && peek().text == "data") {
        parse_data_decl();
      } else if (line_is_type_signature()) {
        skip_type_signature();
      } else {
        rules.push_back(parse_rule_def());
      }
      if (peek().kind != Tok::End && peek().kind != Tok::Newline)
        fail("unexpected token after declaration");
      skip_newlines();
    }

    for (auto& rr : rules) {
      if (ends_with(rr.op, "'S"))
        throw ParseError("operation name '" + rr.op +
                             "' collides with set-function syntax",
                         rr.line, rr.col);
      OperationDef* def = prog.find_op(rr.op);
      if (def && def->builtin)
        throw ParseError("operation " + rr.op + " redefines a prelude operation",
                         rr.line, rr.col);
      if (native_op_arity(rr.op))
        throw ParseError("operation " + rr.op + " redefines a native operation",
                         rr.line, rr.col);
      if (!def) {
        OperationDef d;
        d.name = rr.op;
        d.arity = static_cast<int>(rr.rule.lhs.size());
        prog.add_op(std::move(d));
        def = prog.find_op(rr.op);
      }
      if (def->arity != static_cast<int>(rr.rule.lhs.size()))
        throw ParseError("arity mismatch in rule for " + rr.op, rr.line,
                         rr.col);
      if (rr.rule.is_default) {
        if (def->default_rule)
          throw ParseError("duplicate default rule for " + rr.op, rr.line,
                           rr.col);
        def->default_rule = std::move(rr.rule);
      } else {
        def->standard_rules.push_back(std::move(rr.rule));
      }
    }

    for (const auto& name : prog.op_order) {
      const auto& def = prog.ops.at(name);
      if (def.standard_rules.empty() && def.default_rule)
        throw ParseError("operation " + name + " has only a default rule", 1, 1);
    }
    return prog;
  }
};

// Post-parse resolution: Var/Con nodes produced by the expression grammar
// are rewritten to Op/SymRef/saturated forms using the program's symbols.
struct Resolver {
  const Program& prog;
  const std::vector<std::string>* bound = nullptr;
  std::vector<std::string>* goal_free = nullptr;

  bool is_bound(const std::vector<std::string>& scope, const std::string& n) {
    return std::find(scope.begin(), scope.end(), n) != scope.end();
  }

  ExprPtr saturate(const std::string& name, bool is_con, size_t arity,
                   std::vector<ExprPtr> args) {
    if (args.size() == arity)
      return is_con ? mkCon(name, std::move(args)) : mkOp(name, std::move(args));
    if (args.size() < arity) {
      ExprPtr head = mkSymRef(name, is_con);
      for (auto& a : args) head = mkApply(head, a);
      return head;
    }
    std::vector<ExprPtr> first(args.begin(), args.begin() + arity);
    ExprPtr head = is_con ? mkCon(name, std::move(first))
                          : mkOp(name, std::move(first));
    for (size_t i = arity; i < args.size(); ++i) head = mkApply(head, args[i]);
    return head;
  }

  ExprPtr resolve(const ExprPtr& e, std::vector<std::string> scope) {
    switch (e->kind) {
      case Kind::Var: {
        std::vector<ExprPtr> args;
        for (const auto& k : e->kids) args.push_back(resolve(k, scope));
        if (args.empty() && is_bound(scope, e->name)) return mkVar(e->name);
        if (!is_bound(scope, e->name)) {
          if (const OperationDef* def = prog.find_op(e->name))
            return saturate(e->name, false, def->arity, std::move(args));
          if (auto nat = native_op_arity(e->name))
            return saturate(e->name, false, static_cast<size_t>(*nat),
                            std::move(args));
        }
        if (!args.empty()) {
          ExprPtr head = mkVar(e->name);
          for (auto& a : args) head = mkApply(head, a);
          mark_free(e->name, scope);
          return head;
        }
        mark_free(e->name, scope);
        return mkVar(e->name);
      }
      case Kind::Con: {
        std::vector<ExprPtr> args;
        for (const auto& k : e->kids) args.push_back(resolve(k, scope));
        auto info = prog.find_ctor(e->name);
        if (!info) throw LoadError("unknown constructor " + e->name);
        return saturate(e->name, true, static_cast<size_t>(info->arity),
                        std::move(args));
      }
      case Kind::SetApp: {
        std::vector<ExprPtr> args;
        for (const auto& k : e->kids) args.push_back(resolve(k, scope));
        return mkSetApp(e->name, std::move(args));
      }
      case Kind::Lambda: {
        scope.push_back(e->name);
        return mkLambda(e->name, resolve(e->kids[0], scope));
      }
      case Kind::Let: {
        auto c = std::make_shared<Expr>(*e);
        c->kids.clear();
        for (size_t i = 0; i + 1 < e->kids.size(); ++i)
          c->kids.push_back(resolve(e->kids[i], scope));
        for (const auto& n : e->let_names) scope.push_back(n);
        c->kids.push_back(resolve(e->kids.back(), scope));
        return c;
      }
      default: {
        auto c = std::make_shared<Expr>(*e);
        c->kids.clear();
        for (const auto& k : e->kids) c->kids.push_back(resolve(k, scope));
        return c;
      }
    }
  }

  void mark_free(const std::string& n, const std::vector<std::string>& scope) {
    if (is_bound(scope, n)) return;
    if (!goal_free) return;
    if (std::find(goal_free->begin(), goal_free->end(), n) == goal_free->end())
      goal_free->push_back(n);
  }
};

// Avoids clashes between generated wildcard names and `_N` identifiers
// already present in the source.
void seed_wildcard_counter(Parser& parser) {
  int max_seen = 0;
  for (const auto& t : parser.toks) {
    if (t.kind != Tok::Ident || t.text.size() < 2 || t.text[0] != '_') continue;
    bool digits = std::all_of(t.text.begin() + 1, t.text.end(), [](char c) {
      return std::isdigit(static_cast<unsigned char>(c));
    });
    if (digits) max_seen = std::max(max_seen, std::stoi(t.text.substr(1)));
  }
  parser.wildcard_counter = max_seen;
}

} // namespace

namespace {

// Pattern variables: every Var node in a raw pattern tree (constructor
// names were parsed as Con, operations in functional patterns as Var with
// kids which the resolver fixes up).
void collect_pattern_vars_raw(const ExprPtr& e, const Program& p,
                              std::vector<std::string>& out) {
  if (e->kind == Kind::Var) {
    bool op_like = p.find_op(e->name) || native_op_arity(e->name);
    if (e->kids.empty() && !op_like) {
      if (std::find(out.begin(), out.end(), e->name) == out.end())
        out.push_back(e->name);
    }
  }
  for (const auto& k : e->kids) collect_pattern_vars_raw(k, p, out);
}

} // namespace

bool is_reserved_name(const std::string& name) {
  for (const char* suf : {"'TEST", "'INIT", "'DFLT", "'TESTC", "'S"}) {
    size_t n = std::string(suf).size();
    if (name.size() > n && name.compare(name.size() - n, n, suf) == 0)
      return true;
    // 'TEST<i> variants used for per-leaf condition tests
    if (std::string(suf) == "'TEST") {
      auto pos = name.rfind("'TEST");
      if (pos != std::string::npos && pos > 0) {
        std::string tail = name.substr(pos + 5);
        if (!tail.empty() &&
            std::all_of(tail.begin(), tail.end(),
                        [](char c) { return std::isdigit((unsigned char)c); }))
          return true;
      }
    }
  }
  return false;
}

Program parse_program(const std::string& text, const Program* base) {
  Lexer lex(text);
  Parser parser;
  parser.toks = lex.run();
  seed_wildcard_counter(parser);
  if (base) parser.prog = *base;
  Program p = parser.run();

  // Resolve rule bodies and patterns against the declared symbols; the
  // operations of `base` arrive already resolved.
  for (auto& name : p.op_order) {
    if (base && base->find_op(name)) continue;
    auto& def = p.ops.at(name);
    auto fix_rule = [&](Rule& r) {
      std::vector<std::string> scope = r.free_vars;
      for (const auto& pat : r.lhs) collect_pattern_vars_raw(pat, p, scope);
      // Wildcards in conditions and right-hand sides are implicitly free.
      std::vector<std::string> body_vars;
      if (r.cond) collect_pattern_vars_raw(r.cond, p, body_vars);
      collect_pattern_vars_raw(r.rhs, p, body_vars);
      for (const auto& v : body_vars) {
        if (isWildcardName(v) &&
            std::find(scope.begin(), scope.end(), v) == scope.end()) {
          scope.push_back(v);
          r.free_vars.push_back(v);
        }
      }
      Resolver res{p};
      // Patterns resolve like expressions, with pattern variables bound.
      for (auto& pat : r.lhs) pat = res.resolve(pat, scope);
      if (r.cond) r.cond = res.resolve(r.cond, scope);
      r.rhs = res.resolve(r.rhs, scope);
    };
    for (auto& r : def.standard_rules) fix_rule(r);
    if (def.default_rule) fix_rule(*def.default_rule);
  }
  validate_program(p);
  return p;
}

ExprPtr parse_expr(const std::string& text, const Program& context,
                   std::vector<std::string>* out_free) {
  Lexer lex(text);
  Parser parser;
  parser.toks = lex.run();
  seed_wildcard_counter(parser);
  parser.skip_newlines();
  if (parser.peek().kind == Tok::End) parser.fail("empty expression");
  ExprPtr raw = parser.parse_op_expr(0);
  parser.skip_newlines();
  if (parser.peek().kind != Tok::End) parser.fail("trailing input after expression");
  Resolver res{context};
  std::vector<std::string> free;
  res.goal_free = &free;
  ExprPtr e = res.resolve(raw, {});
  if (out_free) *out_free = free;
  return e;
}

// --- pretty printer ---------------------------------------------------

namespace {

bool is_symbolic(const std::string& name) {
  return !name.empty() && !std::isalpha(static_cast<unsigned char>(name[0])) &&
         name[0] != '_';
}

// Precedence levels follow the expression grammar; atoms are level 7.
void print_rec(std::ostream& os, const ExprPtr& e, int ctx);

bool print_list_sugar(std::ostream& os, const ExprPtr& e) {
  // Collect a ground cons spine; print "..." for char lists, [..] otherwise.
  std::vector<ExprPtr> elems;
  const Expr* cur = e.get();
  while (cur->kind == Kind::Con && cur->name == ":") {
    elems.push_back(cur->kids[0]);
    cur = cur->kids[1].get();
  }
  if (!(cur->kind == Kind::Con && cur->name == "[]")) return false;
  bool all_chars = !elems.empty();
  for (const auto& el : elems)
    if (el->kind != Kind::Char) all_chars = false;
  if (all_chars) {
    os << '"';
    for (const auto& el : elems) {
      char c = static_cast<char>(el->ival);
      if (c == '"' || c == '\\') os << '\\';
      os << c;
    }
    os << '"';
    return true;
  }
  os << '[';
  for (size_t i = 0; i < elems.size(); ++i) {
    if (i) os << ',';
    print_rec(os, elems[i], 0);
  }
  os << ']';
  return true;
}

void print_infix(std::ostream& os, const std::string& op, const ExprPtr& l,
                 const ExprPtr& r, int ctx) {
  OpInfo info = *infix_info(op);
  bool paren = info.prec < ctx;
  int lp = info.right_assoc ? info.prec + 1 : info.prec;
  int rp = info.right_assoc ? info.prec : info.prec + 1;
  const char* pad = (op == ":" || op == "++") ? "" : " ";
  if (paren) os << '(';
  print_rec(os, l, lp);
  os << pad << op << pad;
  print_rec(os, r, rp);
  if (paren) os << ')';
}

void print_rec(std::ostream& os, const ExprPtr& e, int ctx) {
  switch (e->kind) {
    case Kind::Var:
      os << e->name;
      return;
    case Kind::Int:
      os << e->ival;
      return;
    case Kind::Char: {
      os << '\'';
      char c = static_cast<char>(e->ival);
      if (c == '\'' || c == '\\') os << '\\';
      os << c << '\'';
      return;
    }
    case Kind::Failed:
      os << "failed";
      return;
    case Kind::Con: {
      if (e->name == "[]" || e->name == ":") {
        if (print_list_sugar(os, e)) return;
        print_infix(os, ":", e->kids[0], e->kids[1], ctx);
        return;
      }
      if (e->name == "(,)" || e->name == "(,,)") {
        os << '(';
        for (size_t i = 0; i < e->kids.size(); ++i) {
          if (i) os << ',';
          print_rec(os, e->kids[i], 0);
        }
        os << ')';
        return;
      }
      if (e->name == "()") {
        os << "()";
        return;
      }
      if (e->kids.empty()) {
        os << e->name;
        return;
      }
      if (ctx >= 7) os << '(';
      os << e->name;
      for (const auto& k : e->kids) {
        os << ' ';
        print_rec(os, k, 7);
      }
      if (ctx >= 7) os << ')';
      return;
    }
    case Kind::Op: {
      if (e->name == "@") {
        if (ctx >= 7) os << '(';
        print_rec(os, e->kids[0], 6);
        os << ' ';
        print_rec(os, e->kids[1], 7);
        if (ctx >= 7) os << ')';
        return;
      }
      if (e->kids.size() == 2 && infix_info(e->name)) {
        print_infix(os, e->name, e->kids[0], e->kids[1], ctx);
        return;
      }
      if (e->kids.empty()) {
        os << e->name;
        return;
      }
      if (ctx >= 7) os << '(';
      os << e->name;
      for (const auto& k : e->kids) {
        os << ' ';
        print_rec(os, k, 7);
      }
      if (ctx >= 7) os << ')';
      return;
    }
    case Kind::SetApp: {
      if (e->kids.empty()) {
        os << e->name << "'S";
        return;
      }
      if (ctx >= 7) os << '(';
      os << e->name << "'S";
      for (const auto& k : e->kids) {
        os << ' ';
        print_rec(os, k, 7);
      }
      if (ctx >= 7) os << ')';
      return;
    }
    case Kind::SymRef:
      if (is_symbolic(e->name))
        os << '(' << e->name << ')';
      else
        os << e->name;
      return;
    case Kind::Lambda: {
      if (ctx > 0) os << '(';
      os << '\\' << (isWildcardName(e->name) ? "_" : e->name) << " -> ";
      print_rec(os, e->kids[0], 0);
      if (ctx > 0) os << ')';
      return;
    }
    case Kind::Let: {
      if (ctx > 0) os << '(';
      os << "let " << e->let_names[0] << " = ";
      print_rec(os, e->kids[0], 0);
      os << " in ";
      print_rec(os, e->kids.back(), 0);
      if (ctx > 0) os << ')';
      return;
    }
    case Kind::If: {
      if (ctx > 0) os << '(';
      os << "if ";
      print_rec(os, e->kids[0], 0);
      os << " then ";
      print_rec(os, e->kids[1], 0);
      os << " else ";
      print_rec(os, e->kids[2], 0);
      if (ctx > 0) os << ')';
      return;
    }
    case Kind::Guard:
      os << "<guard>";
      return;
    case Kind::Ref:
      print_rec(os, e->kids[0], ctx);
      return;
    case Kind::ValueSet: {
      os << '{';
      for (size_t i = 0; i < e->set->elems.size(); ++i) {
        if (i) os << ',';
        print_rec(os, e->set->elems[i], 0);
      }
      os << '}';
      return;
    }
  }
}

void count_var_uses(const ExprPtr& e, std::map<std::string, int>& uses) {
  if (e->kind == Kind::Var) {
    ++uses[e->name];
    return;
  }
  for (const auto& k : e->kids) count_var_uses(k, uses);
}

ExprPtr condense_wildcards(const ExprPtr& e,
                           const std::map<std::string, int>& uses) {
  if (e->kind == Kind::Var && isWildcardName(e->name) &&
      uses.at(e->name) == 1)
    return mkVar("_");
  auto c = std::make_shared<Expr>(*e);
  c->kids.clear();
  for (const auto& k : e->kids) c->kids.push_back(condense_wildcards(k, uses));
  return c;
}

void print_rule(std::ostream& os, const Rule& rule, bool as_default) {
  // Wildcard-derived variables used exactly once print back as `_`.
  std::map<std::string, int> uses;
  for (const auto& p : rule.lhs) count_var_uses(p, uses);
  if (rule.cond) count_var_uses(rule.cond, uses);
  count_var_uses(rule.rhs, uses);
  Rule r = rule;
  for (auto& p : r.lhs) p = condense_wildcards(p, uses);

  std::string name = r.op + (as_default ? "'default" : "");
  if (is_symbolic(r.op) && r.lhs.size() == 2 && !as_default) {
    print_rec(os, r.lhs[0], 7);
    os << ' ' << r.op << ' ';
    print_rec(os, r.lhs[1], 7);
  } else {
    os << name;
    for (const auto& p : r.lhs) {
      os << ' ';
      print_rec(os, p, 7);
    }
  }
  if (r.cond) {
    os << " | ";
    print_rec(os, r.cond, 0);
  }
  os << " = ";
  print_rec(os, r.rhs, 0);
  if (!r.free_vars.empty()) {
    os << " where ";
    for (size_t i = 0; i < r.free_vars.size(); ++i) {
      if (i) os << ',';
      os << r.free_vars[i];
    }
    os << " free";
  }
  os << '\n';
}

} // namespace

std::string print_expr(const ExprPtr& e) {
  std::ostringstream os;
  print_rec(os, e, 0);
  return os.str();
}

std::string pretty_print(const Program& p) {
  std::ostringstream os;
  for (const auto& d : p.data_decls) {
    if (d.builtin) continue;
    os << "data " << d.type_name << " = ";
    for (size_t i = 0; i < d.ctors.size(); ++i) {
      if (i) os << " | ";
      os << d.ctors[i].name;
      for (int a = 0; a < d.ctors[i].arity; ++a) os << " a";
    }
    os << '\n';
  }
  if (!p.data_decls.empty()) os << '\n';
  bool first = true;
  for (const auto& name : p.op_order) {
    const auto& def = p.ops.at(name);
    if (def.builtin) continue;
    if (!first) os << '\n';
    first = false;
    for (const auto& r : def.standard_rules) print_rule(os, r, false);
    if (def.default_rule) print_rule(os, *def.default_rule, true);
  }
  return os.str();
}

} // namespace flc

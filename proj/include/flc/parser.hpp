// Surface syntax for .flc files: parser and round-trippable pretty printer.
#pragma once

#include <string>

#include "flc/ast.hpp"

namespace flc {

struct ParseError : std::runtime_error {
  int line = 0;
  int col = 0;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " at " + std::to_string(line_) + ":" +
                           std::to_string(col_)),
        line(line_), col(col_) {}
};

// Parses a source unit into a Program. Default rules (suffix 'default) are
// attached to their base operation; a second default rule and unknown
// symbols are load errors. When `base` is given its operations and data
// declarations are in scope and carried into the result.
Program parse_program(const std::string& text, const Program* base = nullptr);

// Parses a goal expression. Lowercase identifiers that are neither known
// operations nor bound become free variables of the goal; `out_free`
// receives them in order of first occurrence.
ExprPtr parse_expr(const std::string& text, const Program& context,
                   std::vector<std::string>* out_free = nullptr);

std::string pretty_print(const Program& p);
std::string print_expr(const ExprPtr& e);

// True for names carrying a generated suffix reserved by the transformations.
bool is_reserved_name(const std::string& name);

} // namespace flc

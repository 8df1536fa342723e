#pragma once

#include "flc/ast.hpp"

namespace flc {

// Source text of the implicit prelude (?, ++, &&, length, all, map,
// enumFromTo). Merged into every loaded program with the builtin flag set.
const char* prelude_source();

// Parses `text` and merges the prelude into the result.
Program load_program(const std::string& text);

} // namespace flc

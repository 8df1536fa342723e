#include "flc/prelude.hpp"

#include "flc/parser.hpp"

namespace flc {

const char* prelude_source() {
  return R"(
x ? _ = x
_ ? y = y

[] ++ ys = ys
(x:xs) ++ ys = x : (xs ++ ys)

True && x = x
False && _ = False

length [] = 0
length (x:xs) = 1 + length xs

all _ [] = True
all p (x:xs) = p x && all p xs

map _ [] = []
map f (x:xs) = f x : map f xs

enumFromTo lo hi = if hi < lo then [] else lo : enumFromTo (lo+1) hi
)";
}

namespace {

const Program& prelude_program() {
  static const Program p = [] {
    Program q = parse_program(prelude_source());
    for (auto& [name, def] : q.ops) {
      (void)name;
      def.builtin = true;
    }
    return q;
  }();
  return p;
}

} // namespace

Program load_program(const std::string& text) {
  return parse_program(text, &prelude_program());
}

} // namespace flc

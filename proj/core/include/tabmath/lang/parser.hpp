#pragma once

#include <string_view>

#include "tabmath/lang/ast.hpp"

namespace tabmath::lang {

/// Parses operator-language source into a Program.
///
/// Throws SyntaxError for malformed input (including a source with no
/// function definitions) and RestrictionError for forbidden constructs:
/// imports, I/O or reflection builtins, function definitions other than
/// `generator` / `verifier`, and calls to anything that is not a builtin
/// (which rules out recursion). See docs/operator-language.md.
Program parse_program(std::string_view source);

/// True when `name` is callable from operator code.
bool is_builtin_function(std::string_view name);

}  // namespace tabmath::lang

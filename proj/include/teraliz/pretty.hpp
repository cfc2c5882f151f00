#pragma once

#include <string>

#include "teraliz/ast.hpp"

namespace teraliz::ml {

/// Canonical rendering: 4-space indent, one space around binary operators,
/// parentheses only where precedence or left-associativity requires them.
/// parse(pretty(parse(s))) is structurally equal to parse(s).
std::string pretty(const SourceFile& file);
std::string pretty(const FunctionDecl& fn);
std::string pretty_expr(const Expr& e);

/// Number of newline-terminated lines pretty() would emit for this function.
int pretty_line_count(const FunctionDecl& fn);

/// Quotes and escapes a string for source form: "a\nb" style.
std::string escape_str(const std::string& s);

}  // namespace teraliz::ml

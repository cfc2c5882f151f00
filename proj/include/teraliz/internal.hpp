#pragma once

#include <vector>

#include "teraliz/ast.hpp"

namespace teraliz::ml::detail {

// Validates and annotates the given files in place (fills Expr::type).
//
// Non-strict mode tolerates calls to functions that are not defined in the
// given set; such calls and anything whose type depends on them stay untyped.
// Strict mode requires every call target to resolve and additionally checks
// cross-file rules (global name uniqueness, implementation code never calling
// test code). Throws TypeError on the first violation.
void check_files(const std::vector<SourceFile*>& files, bool strict);

}  // namespace teraliz::ml::detail

#pragma once

#include <string>
#include <vector>

#include "teraliz/ast.hpp"

namespace teraliz::ml {

/// Parses one MiniLang file and applies every file-local static rule:
/// variable scoping, operator and assertion typing (where callees are known),
/// annotation and assert placement, all-paths-return, literal ranges. Calls
/// to functions that are not declared in this file are left untyped; linking
/// resolves them. Throws ParseError / TypeError.
SourceFile parse_file(const std::string& text, const std::string& path, FileKind kind);

/// Links files into a Program and re-runs the static checks strictly: every
/// call must resolve, function names must be unique program-wide, and impl
/// code may only call impl code. Throws TypeError.
Program link(std::vector<SourceFile> files);

/// Parses a standalone expression (used to reload rendered constraints).
ExprPtr parse_expr_text(const std::string& text);

/// link() for a handful of files without spelling out the vector.
template <typename... Fs>
Program link_files(Fs... fs) {
    std::vector<SourceFile> v;
    v.reserve(sizeof...(fs));
    (v.push_back(std::move(fs)), ...);
    return link(std::move(v));
}

}  // namespace teraliz::ml

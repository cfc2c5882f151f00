#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace teraliz {

/// Half-open byte range [begin, end) into the original source text, plus the
/// 1-based line/column of `begin` for diagnostics. Spans never change once a
/// node is built; mutated programs keep the spans of the nodes they replace.
struct Span {
    uint32_t begin = 0;
    uint32_t end = 0;
    uint32_t line = 1;
    uint32_t col = 1;
};

enum class Type : uint8_t { Int32, Bool, Str, Void };

const char* type_name(Type t);

enum class UnaryOp : uint8_t { Neg, Not };

enum class BinaryOp : uint8_t {
    Add, Sub, Mul, Div, Mod,
    Lt, Le, Gt, Ge,
    Eq, Ne,
    And, Or,
};

const char* binary_op_token(BinaryOp op);
const char* unary_op_token(UnaryOp op);

/// C-like precedence: higher binds tighter. Unary operators sit above all
/// binary levels.
int binary_op_prec(BinaryOp op);

bool is_arith(BinaryOp op);
bool is_order(BinaryOp op);
bool is_equality(BinaryOp op);

enum class SupplierKind : uint8_t { Baseline, Naive, Improved };

const char* supplier_name(SupplierKind k);

struct ParseError : std::runtime_error {
    uint32_t line;
    uint32_t col;
    ParseError(uint32_t line_, uint32_t col_, const std::string& msg)
        : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                             std::to_string(col_) + ": " + msg),
          line(line_), col(col_) {}
};

struct TypeError : std::runtime_error {
    Span span;
    TypeError(Span s, const std::string& msg)
        : std::runtime_error("static error at " + std::to_string(s.line) + ":" +
                             std::to_string(s.col) + ": " + msg),
          span(s) {}
};

}  // namespace teraliz

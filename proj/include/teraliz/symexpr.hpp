#pragma once

#include <memory>
#include <string>

#include "teraliz/base.hpp"

namespace teraliz::sym {

struct SymExpr;
using SymPtr = std::shared_ptr<const SymExpr>;

/// Immutable symbolic expression over the parameters of a function under
/// test. Nodes are shared (a DAG, never copied), so values that feed into
/// themselves repeatedly stay cheap to build; `render_len` carries the exact
/// length render() would produce so size limits can be enforced without
/// materializing huge strings.
///
/// And/Or never appear here: short-circuit evaluation pins one operand, so
/// the surviving operand's expression stands in for the whole thing.
struct SymExpr {
    enum class Kind : uint8_t { ConstInt, ConstBool, Param, Unary, Binary };

    Kind kind;
    int32_t int_val = 0;
    bool bool_val = false;
    uint32_t param_index = 0;   ///< Position among the function's parameters.
    std::string param_name;
    Type param_type = Type::Int32;
    UnaryOp uop{};
    BinaryOp bop{};
    SymPtr a, b;

    bool has_param = false;     ///< False for pure-constant subtrees.
    uint64_t render_len = 0;    ///< Saturating; exact while below the caps.
};

SymPtr sym_int(int32_t v);
SymPtr sym_bool(bool v);
SymPtr sym_param(uint32_t index, std::string name, Type type);
SymPtr sym_unary(UnaryOp op, SymPtr operand);
SymPtr sym_binary(BinaryOp op, SymPtr lhs, SymPtr rhs);

/// Canonical source form using the same precedence/parenthesization rules as
/// the pretty-printer, so the text reparses to an equivalent expression.
std::string render(const SymExpr& e);

/// Logical negation of a boolean symbolic expression, normalized: comparisons
/// flip their operator (< becomes >=, == becomes != and so on), !x loses the
/// negation, constants invert. Anything else gains a ! wrapper.
SymPtr negate(const SymPtr& e);

/// Structural equality.
bool sym_equal(const SymExpr& x, const SymExpr& y);

/// Static type of an expression: arithmetic yields int, comparisons and
/// logical negation yield bool, params carry their declared type.
Type sym_type(const SymExpr& e);

}  // namespace teraliz::sym

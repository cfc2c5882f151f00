#include "teraliz/symexpr.hpp"

#include <sstream>

namespace teraliz::sym {

namespace {

constexpr uint64_t kLenCeiling = uint64_t(1) << 40;

uint64_t sat_add(uint64_t a, uint64_t b) {
    uint64_t s = a + b;
    return (s < a || s > kLenCeiling) ? kLenCeiling : s;
}

bool child_needs_parens(const SymExpr& child, int parent_prec, bool right_side) {
    if (child.kind != SymExpr::Kind::Binary) return false;
    int prec = binary_op_prec(child.bop);
    return prec < parent_prec || (prec == parent_prec && right_side);
}

bool unary_child_needs_parens(UnaryOp op, const SymExpr& child) {
    return child.kind == SymExpr::Kind::Binary ||
           (op == UnaryOp::Neg && child.kind == SymExpr::Kind::ConstInt);
}

uint64_t wrapped_len(const SymExpr& child, int parent_prec, bool right_side) {
    return sat_add(child.render_len, child_needs_parens(child, parent_prec, right_side) ? 2 : 0);
}

void render_into(std::ostream& os, const SymExpr& e);

void render_wrapped(std::ostream& os, const SymExpr& child, int parent_prec, bool right_side) {
    bool parens = child_needs_parens(child, parent_prec, right_side);
    if (parens) os << '(';
    render_into(os, child);
    if (parens) os << ')';
}

void render_into(std::ostream& os, const SymExpr& e) {
    switch (e.kind) {
        case SymExpr::Kind::ConstInt: os << e.int_val; return;
        case SymExpr::Kind::ConstBool: os << (e.bool_val ? "true" : "false"); return;
        case SymExpr::Kind::Param: os << e.param_name; return;
        case SymExpr::Kind::Unary: {
            os << unary_op_token(e.uop);
            bool parens = unary_child_needs_parens(e.uop, *e.a);
            if (parens) os << '(';
            render_into(os, *e.a);
            if (parens) os << ')';
            return;
        }
        case SymExpr::Kind::Binary: {
            int prec = binary_op_prec(e.bop);
            render_wrapped(os, *e.a, prec, false);
            os << ' ' << binary_op_token(e.bop) << ' ';
            render_wrapped(os, *e.b, prec, true);
            return;
        }
    }
}

}  // namespace

SymPtr sym_int(int32_t v) {
    auto e = std::make_shared<SymExpr>();
    e->kind = SymExpr::Kind::ConstInt;
    e->int_val = v;
    e->render_len = std::to_string(v).size();
    return e;
}

SymPtr sym_bool(bool v) {
    auto e = std::make_shared<SymExpr>();
    e->kind = SymExpr::Kind::ConstBool;
    e->bool_val = v;
    e->render_len = v ? 4 : 5;
    return e;
}

SymPtr sym_param(uint32_t index, std::string name, Type type) {
    auto e = std::make_shared<SymExpr>();
    e->kind = SymExpr::Kind::Param;
    e->param_index = index;
    e->param_name = std::move(name);
    e->param_type = type;
    e->has_param = true;
    e->render_len = e->param_name.size();
    return e;
}

SymPtr sym_unary(UnaryOp op, SymPtr operand) {
    auto e = std::make_shared<SymExpr>();
    e->kind = SymExpr::Kind::Unary;
    e->uop = op;
    e->has_param = operand->has_param;
    e->render_len =
        sat_add(sat_add(1, operand->render_len), unary_child_needs_parens(op, *operand) ? 2 : 0);
    e->a = std::move(operand);
    return e;
}

SymPtr sym_binary(BinaryOp op, SymPtr lhs, SymPtr rhs) {
    auto e = std::make_shared<SymExpr>();
    e->kind = SymExpr::Kind::Binary;
    e->bop = op;
    e->has_param = lhs->has_param || rhs->has_param;
    int prec = binary_op_prec(op);
    uint64_t len = sat_add(wrapped_len(*lhs, prec, false), wrapped_len(*rhs, prec, true));
    e->render_len = sat_add(len, 2 + std::string_view(binary_op_token(op)).size());
    e->a = std::move(lhs);
    e->b = std::move(rhs);
    return e;
}

std::string render(const SymExpr& e) {
    std::ostringstream os;
    render_into(os, e);
    return os.str();
}

SymPtr negate(const SymPtr& e) {
    switch (e->kind) {
        case SymExpr::Kind::ConstBool: return sym_bool(!e->bool_val);
        case SymExpr::Kind::Unary:
            if (e->uop == UnaryOp::Not) return e->a;
            break;
        case SymExpr::Kind::Binary:
            switch (e->bop) {
                case BinaryOp::Lt: return sym_binary(BinaryOp::Ge, e->a, e->b);
                case BinaryOp::Le: return sym_binary(BinaryOp::Gt, e->a, e->b);
                case BinaryOp::Gt: return sym_binary(BinaryOp::Le, e->a, e->b);
                case BinaryOp::Ge: return sym_binary(BinaryOp::Lt, e->a, e->b);
                case BinaryOp::Eq: return sym_binary(BinaryOp::Ne, e->a, e->b);
                case BinaryOp::Ne: return sym_binary(BinaryOp::Eq, e->a, e->b);
                default: break;
            }
            break;
        default: break;
    }
    return sym_unary(UnaryOp::Not, e);
}

bool sym_equal(const SymExpr& x, const SymExpr& y) {
    if (&x == &y) return true;
    if (x.kind != y.kind) return false;
    switch (x.kind) {
        case SymExpr::Kind::ConstInt: return x.int_val == y.int_val;
        case SymExpr::Kind::ConstBool: return x.bool_val == y.bool_val;
        case SymExpr::Kind::Param:
            return x.param_index == y.param_index && x.param_name == y.param_name;
        case SymExpr::Kind::Unary: return x.uop == y.uop && sym_equal(*x.a, *y.a);
        case SymExpr::Kind::Binary:
            return x.bop == y.bop && sym_equal(*x.a, *y.a) && sym_equal(*x.b, *y.b);
    }
    return false;
}

Type sym_type(const SymExpr& e) {
    switch (e.kind) {
        case SymExpr::Kind::ConstInt: return Type::Int32;
        case SymExpr::Kind::ConstBool: return Type::Bool;
        case SymExpr::Kind::Param: return e.param_type;
        case SymExpr::Kind::Unary: return e.uop == UnaryOp::Neg ? Type::Int32 : Type::Bool;
        case SymExpr::Kind::Binary: return is_arith(e.bop) ? Type::Int32 : Type::Bool;
    }
    return Type::Int32;
}

}  // namespace teraliz::sym

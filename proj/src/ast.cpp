#include "teraliz/ast.hpp"

namespace teraliz {

const char* type_name(Type t) {
    switch (t) {
        case Type::Int32: return "int";
        case Type::Bool: return "bool";
        case Type::Str: return "str";
        case Type::Void: return "void";
    }
    return "?";
}

const char* binary_op_token(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        case BinaryOp::Mod: return "%";
        case BinaryOp::Lt: return "<";
        case BinaryOp::Le: return "<=";
        case BinaryOp::Gt: return ">";
        case BinaryOp::Ge: return ">=";
        case BinaryOp::Eq: return "==";
        case BinaryOp::Ne: return "!=";
        case BinaryOp::And: return "&&";
        case BinaryOp::Or: return "||";
    }
    return "?";
}

const char* unary_op_token(UnaryOp op) {
    return op == UnaryOp::Neg ? "-" : "!";
}

int binary_op_prec(BinaryOp op) {
    switch (op) {
        case BinaryOp::Mul:
        case BinaryOp::Div:
        case BinaryOp::Mod: return 6;
        case BinaryOp::Add:
        case BinaryOp::Sub: return 5;
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge: return 4;
        case BinaryOp::Eq:
        case BinaryOp::Ne: return 3;
        case BinaryOp::And: return 2;
        case BinaryOp::Or: return 1;
    }
    return 0;
}

bool is_arith(BinaryOp op) {
    return op == BinaryOp::Add || op == BinaryOp::Sub || op == BinaryOp::Mul ||
           op == BinaryOp::Div || op == BinaryOp::Mod;
}

bool is_order(BinaryOp op) {
    return op == BinaryOp::Lt || op == BinaryOp::Le || op == BinaryOp::Gt || op == BinaryOp::Ge;
}

bool is_equality(BinaryOp op) {
    return op == BinaryOp::Eq || op == BinaryOp::Ne;
}

const char* supplier_name(SupplierKind k) {
    switch (k) {
        case SupplierKind::Baseline: return "baseline";
        case SupplierKind::Naive: return "naive";
        case SupplierKind::Improved: return "improved";
    }
    return "?";
}

}  // namespace teraliz

namespace teraliz::ml {

const char* assert_kind_name(AssertKind k) {
    switch (k) {
        case AssertKind::Eq: return "assert_eq";
        case AssertKind::True: return "assert_true";
        case AssertKind::False: return "assert_false";
        case AssertKind::Throws: return "assert_throws";
    }
    return "?";
}

std::string annotation_text(const Annotation& a) {
    switch (a.kind) {
        case Annotation::Kind::Test: return "test";
        case Annotation::Kind::Repeated: return "repeated(" + std::to_string(a.count) + ")";
        case Annotation::Kind::Parameterized: return "parameterized";
        case Annotation::Kind::Property:
            return std::string("property(supplier=") + supplier_name(a.supplier) +
                   ", tries=" + std::to_string(a.tries) + ")";
    }
    return "?";
}

ExprPtr Expr::make_int(int32_t v, Span s) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::IntLit;
    e->span = s;
    e->int_val = v;
    return e;
}

ExprPtr Expr::make_bool(bool v, Span s) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::BoolLit;
    e->span = s;
    e->bool_val = v;
    return e;
}

ExprPtr Expr::make_str(std::string v, Span s) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::StrLit;
    e->span = s;
    e->str_val = std::move(v);
    return e;
}

ExprPtr Expr::make_var(std::string name, Span s) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::Var;
    e->span = s;
    e->name = std::move(name);
    return e;
}

ExprPtr Expr::make_unary(UnaryOp op, ExprPtr operand, Span s) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::Unary;
    e->span = s;
    e->uop = op;
    e->children.push_back(std::move(operand));
    return e;
}

ExprPtr Expr::make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, Span s) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::Binary;
    e->span = s;
    e->bop = op;
    e->children.push_back(std::move(lhs));
    e->children.push_back(std::move(rhs));
    return e;
}

ExprPtr Expr::make_call(std::string callee, std::vector<ExprPtr> args, Span s) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::Call;
    e->span = s;
    e->name = std::move(callee);
    e->children = std::move(args);
    return e;
}

const FunctionDecl* Program::find(const std::string& name) const {
    auto it = by_name.find(name);
    return it == by_name.end() ? nullptr : it->second.fn;
}

const SourceFile* Program::file_of(const std::string& fn_name) const {
    auto it = by_name.find(fn_name);
    return it == by_name.end() ? nullptr : it->second.file;
}

bool Program::is_impl_fn(const std::string& name) const {
    auto it = by_name.find(name);
    return it != by_name.end() && it->second.file->kind == FileKind::Impl;
}

void Program::reindex() {
    by_name.clear();
    for (const auto& f : files)
        for (const auto& fn : f->functions)
            by_name[fn.name] = FnRef{f.get(), &fn};
}

ExprPtr clone(const Expr& e) {
    auto c = std::make_unique<Expr>();
    c->kind = e.kind;
    c->span = e.span;
    c->int_val = e.int_val;
    c->bool_val = e.bool_val;
    c->str_val = e.str_val;
    c->name = e.name;
    c->uop = e.uop;
    c->bop = e.bop;
    c->type = e.type;
    c->typed = e.typed;
    c->children.reserve(e.children.size());
    for (const auto& ch : e.children) c->children.push_back(clone(*ch));
    return c;
}

StmtPtr clone(const Stmt& s) {
    auto c = std::make_unique<Stmt>();
    c->kind = s.kind;
    c->span = s.span;
    c->name = s.name;
    if (s.value) c->value = clone(*s.value);
    if (s.value2) c->value2 = clone(*s.value2);
    if (s.block_a) c->block_a = clone(*s.block_a);
    if (s.block_b) c->block_b = clone(*s.block_b);
    c->assert_kind = s.assert_kind;
    return c;
}

Block clone(const Block& b) {
    Block c;
    c.span = b.span;
    c.stmts.reserve(b.stmts.size());
    for (const auto& s : b.stmts) c.stmts.push_back(clone(*s));
    return c;
}

FunctionDecl clone(const FunctionDecl& f) {
    FunctionDecl c;
    c.name = f.name;
    c.span = f.span;
    c.name_span = f.name_span;
    c.params = f.params;
    c.return_type = f.return_type;
    c.body = clone(f.body);
    c.annotation = f.annotation;
    return c;
}

SourceFile clone(const SourceFile& f) {
    SourceFile c;
    c.path = f.path;
    c.kind = f.kind;
    c.text = f.text;
    c.functions.reserve(f.functions.size());
    for (const auto& fn : f.functions) c.functions.push_back(clone(fn));
    return c;
}

bool equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::IntLit: return a.int_val == b.int_val;
        case Expr::Kind::BoolLit: return a.bool_val == b.bool_val;
        case Expr::Kind::StrLit: return a.str_val == b.str_val;
        case Expr::Kind::Var: return a.name == b.name;
        case Expr::Kind::Unary:
            if (a.uop != b.uop) return false;
            break;
        case Expr::Kind::Binary:
            if (a.bop != b.bop) return false;
            break;
        case Expr::Kind::Call:
            if (a.name != b.name) return false;
            break;
    }
    if (a.children.size() != b.children.size()) return false;
    for (size_t i = 0; i < a.children.size(); ++i)
        if (!equal(*a.children[i], *b.children[i])) return false;
    return true;
}

static bool equal_opt_block(const std::optional<Block>& a, const std::optional<Block>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || equal(*a, *b);
}

bool equal(const Stmt& a, const Stmt& b) {
    if (a.kind != b.kind || a.name != b.name) return false;
    if ((a.value != nullptr) != (b.value != nullptr)) return false;
    if (a.value && !equal(*a.value, *b.value)) return false;
    if ((a.value2 != nullptr) != (b.value2 != nullptr)) return false;
    if (a.value2 && !equal(*a.value2, *b.value2)) return false;
    if (a.kind == Stmt::Kind::Assert && a.assert_kind != b.assert_kind) return false;
    return equal_opt_block(a.block_a, b.block_a) && equal_opt_block(a.block_b, b.block_b);
}

bool equal(const Block& a, const Block& b) {
    if (a.stmts.size() != b.stmts.size()) return false;
    for (size_t i = 0; i < a.stmts.size(); ++i)
        if (!equal(*a.stmts[i], *b.stmts[i])) return false;
    return true;
}

bool equal(const FunctionDecl& a, const FunctionDecl& b) {
    if (a.name != b.name || a.return_type != b.return_type) return false;
    if (a.params.size() != b.params.size()) return false;
    for (size_t i = 0; i < a.params.size(); ++i)
        if (a.params[i].name != b.params[i].name || a.params[i].type != b.params[i].type)
            return false;
    if (a.annotation.has_value() != b.annotation.has_value()) return false;
    if (a.annotation) {
        const auto& x = *a.annotation;
        const auto& y = *b.annotation;
        if (x.kind != y.kind || x.count != y.count || x.supplier != y.supplier ||
            x.tries != y.tries)
            return false;
    }
    return equal(a.body, b.body);
}

bool equal(const SourceFile& a, const SourceFile& b) {
    if (a.kind != b.kind || a.functions.size() != b.functions.size()) return false;
    for (size_t i = 0; i < a.functions.size(); ++i)
        if (!equal(a.functions[i], b.functions[i])) return false;
    return true;
}

namespace {

const Expr* find_in_expr(const Expr& e, Span span);

const Expr* find_in_block(const Block& b, Span span);

const Expr* find_in_stmt(const Stmt& s, Span span) {
    if (s.value)
        if (const Expr* r = find_in_expr(*s.value, span)) return r;
    if (s.value2)
        if (const Expr* r = find_in_expr(*s.value2, span)) return r;
    if (s.block_a)
        if (const Expr* r = find_in_block(*s.block_a, span)) return r;
    if (s.block_b)
        if (const Expr* r = find_in_block(*s.block_b, span)) return r;
    return nullptr;
}

const Expr* find_in_block(const Block& b, Span span) {
    for (const auto& s : b.stmts)
        if (const Expr* r = find_in_stmt(*s, span)) return r;
    return nullptr;
}

const Expr* find_in_expr(const Expr& e, Span span) {
    if (e.span.begin == span.begin && e.span.end == span.end) return &e;
    for (const auto& ch : e.children)
        if (const Expr* r = find_in_expr(*ch, span)) return r;
    return nullptr;
}

}  // namespace

const Expr* find_expr_by_span(const FunctionDecl& fn, Span span) {
    return find_in_block(fn.body, span);
}

}  // namespace teraliz::ml

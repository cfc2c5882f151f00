#include "teraliz/pretty.hpp"

#include <sstream>

namespace teraliz::ml {

namespace {

void render_expr(std::ostream& os, const Expr& e);

// Parenthesizes operands only where precedence or the negative-literal fold
// would otherwise change how the text reparses.
void render_operand(std::ostream& os, const Expr& child, int parent_prec, bool right_side) {
    bool parens = false;
    if (child.kind == Expr::Kind::Binary) {
        int child_prec = binary_op_prec(child.bop);
        parens = child_prec < parent_prec || (child_prec == parent_prec && right_side);
    }
    if (parens) os << '(';
    render_expr(os, child);
    if (parens) os << ')';
}

void render_expr(std::ostream& os, const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::IntLit: os << e.int_val; return;
        case Expr::Kind::BoolLit: os << (e.bool_val ? "true" : "false"); return;
        case Expr::Kind::StrLit: os << escape_str(e.str_val); return;
        case Expr::Kind::Var: os << e.name; return;
        case Expr::Kind::Unary: {
            const Expr& child = *e.children[0];
            os << unary_op_token(e.uop);
            // -5 would reparse as a single literal token, so a negated
            // literal keeps explicit parentheses: -(5).
            bool parens = child.kind == Expr::Kind::Binary ||
                          (e.uop == UnaryOp::Neg && child.kind == Expr::Kind::IntLit);
            if (parens) os << '(';
            render_expr(os, child);
            if (parens) os << ')';
            return;
        }
        case Expr::Kind::Binary: {
            int prec = binary_op_prec(e.bop);
            render_operand(os, *e.children[0], prec, false);
            os << ' ' << binary_op_token(e.bop) << ' ';
            render_operand(os, *e.children[1], prec, true);
            return;
        }
        case Expr::Kind::Call: {
            os << e.name << '(';
            for (size_t i = 0; i < e.children.size(); ++i) {
                if (i) os << ", ";
                render_expr(os, *e.children[i]);
            }
            os << ')';
            return;
        }
    }
}

void indent(std::ostream& os, int depth) {
    for (int i = 0; i < depth; ++i) os << "    ";
}

void render_block_body(std::ostream& os, const Block& b, int depth);

void render_stmt(std::ostream& os, const Stmt& s, int depth) {
    indent(os, depth);
    switch (s.kind) {
        case Stmt::Kind::Let:
            os << "let " << s.name << " = ";
            render_expr(os, *s.value);
            os << ";\n";
            return;
        case Stmt::Kind::Assign:
            os << s.name << " = ";
            render_expr(os, *s.value);
            os << ";\n";
            return;
        case Stmt::Kind::If: {
            const Stmt* node = &s;
            for (;;) {
                os << "if ";
                render_expr(os, *node->value);
                os << " {\n";
                render_block_body(os, *node->block_a, depth + 1);
                indent(os, depth);
                os << '}';
                if (!node->block_b) break;
                const Block& els = *node->block_b;
                if (els.stmts.size() == 1 && els.stmts[0]->kind == Stmt::Kind::If) {
                    os << " else ";
                    node = els.stmts[0].get();
                    continue;
                }
                os << " else {\n";
                render_block_body(os, els, depth + 1);
                indent(os, depth);
                os << '}';
                break;
            }
            os << '\n';
            return;
        }
        case Stmt::Kind::While:
            os << "while ";
            render_expr(os, *s.value);
            os << " {\n";
            render_block_body(os, *s.block_a, depth + 1);
            indent(os, depth);
            os << "}\n";
            return;
        case Stmt::Kind::Return:
            os << "return";
            if (s.value) {
                os << ' ';
                render_expr(os, *s.value);
            }
            os << ";\n";
            return;
        case Stmt::Kind::ExprStmt:
            render_expr(os, *s.value);
            os << ";\n";
            return;
        case Stmt::Kind::Assert:
            if (s.assert_kind == AssertKind::Throws) {
                os << "assert_throws {\n";
                render_block_body(os, *s.block_a, depth + 1);
                indent(os, depth);
                os << "}\n";
                return;
            }
            os << assert_kind_name(s.assert_kind) << '(';
            render_expr(os, *s.value);
            if (s.assert_kind == AssertKind::Eq) {
                os << ", ";
                render_expr(os, *s.value2);
            }
            os << ");\n";
            return;
    }
}

void render_block_body(std::ostream& os, const Block& b, int depth) {
    for (const StmtPtr& s : b.stmts) render_stmt(os, *s, depth);
}

void render_function(std::ostream& os, const FunctionDecl& fn) {
    if (fn.annotation) os << "#[" << annotation_text(*fn.annotation) << "]\n";
    os << "fn " << fn.name << '(';
    for (size_t i = 0; i < fn.params.size(); ++i) {
        if (i) os << ", ";
        os << fn.params[i].name << ": " << type_name(fn.params[i].type);
    }
    os << ") -> " << type_name(fn.return_type) << " {\n";
    render_block_body(os, fn.body, 1);
    os << "}\n";
}

}  // namespace

std::string escape_str(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            case '\\': out += "\\\\"; break;
            case '"': out += "\\\""; break;
            default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

std::string pretty_expr(const Expr& e) {
    std::ostringstream os;
    render_expr(os, e);
    return os.str();
}

std::string pretty(const FunctionDecl& fn) {
    std::ostringstream os;
    render_function(os, fn);
    return os.str();
}

std::string pretty(const SourceFile& file) {
    std::ostringstream os;
    for (size_t i = 0; i < file.functions.size(); ++i) {
        if (i) os << '\n';
        render_function(os, file.functions[i]);
    }
    return os.str();
}

int pretty_line_count(const FunctionDecl& fn) {
    std::string text = pretty(fn);
    int lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    return lines;
}

}  // namespace teraliz::ml

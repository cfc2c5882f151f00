#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "teraliz/internal.hpp"

namespace teraliz::ml::detail {

namespace {

struct FnInfo {
    const FunctionDecl* decl;
    FileKind file_kind;
};

class Checker {
  public:
    Checker(const std::vector<SourceFile*>& files, bool strict) : files_(files), strict_(strict) {}

    void run() {
        for (SourceFile* file : files_) {
            for (const FunctionDecl& fn : file->functions) {
                auto [it, inserted] = table_.emplace(fn.name, FnInfo{&fn, file->kind});
                if (!inserted)
                    throw TypeError(fn.name_span, "duplicate function '" + fn.name + "'");
            }
        }
        for (SourceFile* file : files_) {
            for (FunctionDecl& fn : file->functions) check_function(*file, fn);
        }
    }

  private:
    const std::vector<SourceFile*>& files_;
    bool strict_;
    std::unordered_map<std::string, FnInfo> table_;

    FileKind file_kind_ = FileKind::Impl;
    const FunctionDecl* fn_ = nullptr;
    std::vector<std::unordered_map<std::string, std::optional<Type>>> scopes_;

    [[noreturn]] static void fail(Span span, const std::string& msg) { throw TypeError(span, msg); }

    void check_function(const SourceFile& file, FunctionDecl& fn) {
        file_kind_ = file.kind;
        fn_ = &fn;

        if (fn.annotation) {
            if (file.kind != FileKind::Test)
                fail(fn.annotation->span, "annotations are only allowed in test files");
            if (fn.return_type != Type::Void)
                fail(fn.name_span, "annotated function '" + fn.name + "' must return void");
            if (fn.annotation->kind != Annotation::Kind::Property && !fn.params.empty())
                fail(fn.name_span, "annotated test '" + fn.name + "' takes no parameters");
        }

        std::unordered_set<std::string> param_names;
        for (const Param& p : fn.params) {
            if (!param_names.insert(p.name).second)
                fail(p.span, "duplicate parameter '" + p.name + "'");
            if (p.type == Type::Void) fail(p.span, "parameters cannot have type void");
            if (fn.annotation && fn.annotation->kind == Annotation::Kind::Property &&
                p.type == Type::Str)
                fail(p.span, "property test parameters must be int or bool");
        }

        scopes_.clear();
        scopes_.emplace_back();
        for (const Param& p : fn.params) scopes_.back().emplace(p.name, p.type);
        check_block(fn.body);
        scopes_.pop_back();

        if (fn.return_type != Type::Void && !always_returns(fn.body))
            fail(fn.name_span, "function '" + fn.name + "' may reach the end without returning");
    }

    void check_block(const Block& b) {
        scopes_.emplace_back();
        for (const StmtPtr& s : b.stmts) check_stmt(*s);
        scopes_.pop_back();
    }

    std::optional<Type>* lookup(const std::string& name) {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto found = it->find(name);
            if (found != it->end()) return &found->second;
        }
        return nullptr;
    }

    void check_stmt(Stmt& s) {
        switch (s.kind) {
            case Stmt::Kind::Let: {
                auto t = check_expr(*s.value);
                if (t && *t == Type::Void) fail(s.span, "cannot bind a void value");
                if (lookup(s.name)) fail(s.span, "redeclaration of '" + s.name + "'");
                scopes_.back().emplace(s.name, t);
                return;
            }
            case Stmt::Kind::Assign: {
                auto t = check_expr(*s.value);
                auto* var = lookup(s.name);
                if (!var) fail(s.span, "assignment to undeclared variable '" + s.name + "'");
                if (t && *t == Type::Void) fail(s.span, "cannot assign a void value");
                if (t && *var && *t != **var)
                    fail(s.span, "cannot assign " + std::string(type_name(*t)) + " to " +
                                     std::string(type_name(**var)) + " variable '" + s.name + "'");
                if (t && !*var) *var = t;
                return;
            }
            case Stmt::Kind::If:
            case Stmt::Kind::While: {
                auto t = check_expr(*s.value);
                if (t && *t != Type::Bool) fail(s.value->span, "condition must be bool");
                check_block(*s.block_a);
                if (s.block_b) check_block(*s.block_b);
                return;
            }
            case Stmt::Kind::Return: {
                if (fn_->return_type == Type::Void) {
                    if (s.value) fail(s.span, "void function cannot return a value");
                    return;
                }
                if (!s.value)
                    fail(s.span, "non-void function must return a value");
                auto t = check_expr(*s.value);
                if (t && *t != fn_->return_type)
                    fail(s.span, "return type mismatch: expected " +
                                     std::string(type_name(fn_->return_type)) + ", found " +
                                     std::string(type_name(*t)));
                return;
            }
            case Stmt::Kind::ExprStmt: {
                if (s.value->kind != Expr::Kind::Call)
                    fail(s.span, "expression statements must be calls");
                check_expr(*s.value);
                return;
            }
            case Stmt::Kind::Assert: {
                if (file_kind_ != FileKind::Test)
                    fail(s.span, "assertions are only allowed in test files");
                switch (s.assert_kind) {
                    case AssertKind::Eq: {
                        auto a = check_expr(*s.value);
                        auto b = check_expr(*s.value2);
                        if ((a && *a == Type::Void) || (b && *b == Type::Void))
                            fail(s.span, "assert_eq operands cannot be void");
                        if (a && b && *a != *b)
                            fail(s.span, "assert_eq operands must have the same type");
                        return;
                    }
                    case AssertKind::True:
                    case AssertKind::False: {
                        auto t = check_expr(*s.value);
                        if (t && *t != Type::Bool)
                            fail(s.value->span, "assertion argument must be bool");
                        return;
                    }
                    case AssertKind::Throws:
                        check_block(*s.block_a);
                        return;
                }
                return;
            }
        }
    }

    std::optional<Type> set_type(Expr& e, Type t) {
        e.type = t;
        e.typed = true;
        return t;
    }

    std::optional<Type> check_expr(Expr& e) {
        switch (e.kind) {
            case Expr::Kind::IntLit: return set_type(e, Type::Int32);
            case Expr::Kind::BoolLit: return set_type(e, Type::Bool);
            case Expr::Kind::StrLit: return set_type(e, Type::Str);
            case Expr::Kind::Var: {
                auto* var = lookup(e.name);
                if (!var) fail(e.span, "unknown variable '" + e.name + "'");
                if (*var) return set_type(e, **var);
                return std::nullopt;
            }
            case Expr::Kind::Unary: {
                auto t = check_expr(*e.children[0]);
                if (e.uop == UnaryOp::Neg) {
                    if (t && *t != Type::Int32) fail(e.span, "unary '-' requires an int operand");
                    return set_type(e, Type::Int32);
                }
                if (t && *t != Type::Bool) fail(e.span, "'!' requires a bool operand");
                return set_type(e, Type::Bool);
            }
            case Expr::Kind::Binary: return check_binary(e);
            case Expr::Kind::Call: return check_call(e);
        }
        return std::nullopt;
    }

    std::optional<Type> check_binary(Expr& e) {
        auto a = check_expr(*e.children[0]);
        auto b = check_expr(*e.children[1]);
        const char* tok = binary_op_token(e.bop);
        if (is_arith(e.bop)) {
            if ((a && *a != Type::Int32) || (b && *b != Type::Int32))
                fail(e.span, std::string("'") + tok + "' requires int operands");
            return set_type(e, Type::Int32);
        }
        if (is_order(e.bop)) {
            if ((a && *a != Type::Int32) || (b && *b != Type::Int32))
                fail(e.span, std::string("'") + tok + "' requires int operands");
            return set_type(e, Type::Bool);
        }
        if (is_equality(e.bop)) {
            if ((a && *a == Type::Void) || (b && *b == Type::Void))
                fail(e.span, std::string("'") + tok + "' operands cannot be void");
            if (a && b && *a != *b)
                fail(e.span, std::string("'") + tok + "' operands must have the same type");
            return set_type(e, Type::Bool);
        }
        // && and ||
        if ((a && *a != Type::Bool) || (b && *b != Type::Bool))
            fail(e.span, std::string("'") + tok + "' requires bool operands");
        return set_type(e, Type::Bool);
    }

    std::optional<Type> check_call(Expr& e) {
        auto it = table_.find(e.name);
        if (it == table_.end()) {
            if (strict_) fail(e.span, "call to unknown function '" + e.name + "'");
            for (const ExprPtr& arg : e.children) check_expr(*arg);
            return std::nullopt;
        }
        const FunctionDecl& callee = *it->second.decl;
        if (file_kind_ == FileKind::Impl && it->second.file_kind == FileKind::Test)
            fail(e.span, "implementation code cannot call test code");
        if (e.children.size() != callee.params.size())
            fail(e.span, "'" + e.name + "' expects " + std::to_string(callee.params.size()) +
                             " argument(s), found " + std::to_string(e.children.size()));
        for (size_t i = 0; i < e.children.size(); ++i) {
            auto t = check_expr(*e.children[i]);
            if (t && *t != callee.params[i].type)
                fail(e.children[i]->span,
                     "argument " + std::to_string(i + 1) + " of '" + e.name + "' must be " +
                         std::string(type_name(callee.params[i].type)));
        }
        if (callee.return_type == Type::Void) return set_type(e, Type::Void);
        return set_type(e, callee.return_type);
    }

    static bool always_returns(const Block& b) {
        for (const StmtPtr& s : b.stmts) {
            if (s->kind == Stmt::Kind::Return) return true;
            if (s->kind == Stmt::Kind::If && s->block_b &&
                always_returns(*s->block_a) && always_returns(*s->block_b))
                return true;
        }
        return false;
    }
};

}  // namespace

void check_files(const std::vector<SourceFile*>& files, bool strict) {
    Checker(files, strict).run();
}

}  // namespace teraliz::ml::detail

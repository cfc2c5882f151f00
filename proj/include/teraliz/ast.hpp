#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "teraliz/base.hpp"

namespace teraliz::ml {

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

/// Single fat node for all expression kinds. Which fields are meaningful
/// depends on `kind`; `children` holds the operand of a unary, the two
/// operands of a binary, or call arguments.
struct Expr {
    enum class Kind : uint8_t { IntLit, BoolLit, StrLit, Var, Unary, Binary, Call };

    Kind kind;
    Span span;
    int32_t int_val = 0;
    bool bool_val = false;
    std::string str_val;
    std::string name;  ///< Var name or Call target.
    UnaryOp uop{};
    BinaryOp bop{};
    std::vector<ExprPtr> children;

    /// Static type, filled in by the checker. `typed` stays false for
    /// subtrees whose callee is unknown during file-local checking; linking a
    /// full program types every node.
    Type type = Type::Void;
    bool typed = false;

    static ExprPtr make_int(int32_t v, Span s = {});
    static ExprPtr make_bool(bool v, Span s = {});
    static ExprPtr make_str(std::string v, Span s = {});
    static ExprPtr make_var(std::string name, Span s = {});
    static ExprPtr make_unary(UnaryOp op, ExprPtr operand, Span s = {});
    static ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, Span s = {});
    static ExprPtr make_call(std::string callee, std::vector<ExprPtr> args, Span s = {});
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Block {
    Span span;
    std::vector<StmtPtr> stmts;
};

enum class AssertKind : uint8_t { Eq, True, False, Throws };

const char* assert_kind_name(AssertKind k);

struct Stmt {
    enum class Kind : uint8_t { Let, Assign, If, While, Return, ExprStmt, Assert };

    Kind kind;
    Span span;
    std::string name;                ///< Let/Assign target.
    ExprPtr value;                   ///< Let/Assign rhs, If/While cond, Return value (may be null), ExprStmt expr, Assert first arg.
    ExprPtr value2;                  ///< AssertEq second arg (the actual).
    std::optional<Block> block_a;    ///< If then-block, While body, AssertThrows block.
    std::optional<Block> block_b;    ///< If else-block.
    AssertKind assert_kind{};
};

struct Annotation {
    enum class Kind : uint8_t { Test, Repeated, Parameterized, Property };
    Kind kind;
    Span span;
    int32_t count = 0;          ///< Repeated(n).
    SupplierKind supplier{};    ///< Property.
    int32_t tries = 0;          ///< Property.
};

std::string annotation_text(const Annotation& a);

struct Param {
    std::string name;
    Type type;
    Span span;
};

struct FunctionDecl {
    std::string name;
    Span span;       ///< Whole declaration including annotation.
    Span name_span;
    std::vector<Param> params;
    Type return_type = Type::Void;
    Block body;
    std::optional<Annotation> annotation;
};

enum class FileKind : uint8_t { Impl, Test };

struct SourceFile {
    std::string path;   ///< Project-relative, used in reports.
    FileKind kind = FileKind::Impl;
    std::vector<FunctionDecl> functions;
    std::string text;   ///< Original source, so spans stay sliceable.
};

/// A linked set of source files with a global function table. Files are
/// immutable and shared: mutants replace a single file and alias the rest.
struct Program {
    std::vector<std::shared_ptr<const SourceFile>> files;

    struct FnRef {
        const SourceFile* file = nullptr;
        const FunctionDecl* fn = nullptr;
    };
    std::unordered_map<std::string, FnRef> by_name;

    const FunctionDecl* find(const std::string& name) const;
    const SourceFile* file_of(const std::string& fn_name) const;
    bool is_impl_fn(const std::string& name) const;

    /// Rebuilds `by_name` from `files`.
    void reindex();
};

// Deep copies; spans are preserved.
ExprPtr clone(const Expr& e);
StmtPtr clone(const Stmt& s);
Block clone(const Block& b);
FunctionDecl clone(const FunctionDecl& f);
SourceFile clone(const SourceFile& f);

// Structural equality, ignoring spans and checker-filled types.
bool equal(const Expr& a, const Expr& b);
bool equal(const Stmt& a, const Stmt& b);
bool equal(const Block& a, const Block& b);
bool equal(const FunctionDecl& a, const FunctionDecl& b);
bool equal(const SourceFile& a, const SourceFile& b);

/// Locates the expression with exactly this span in a function body (spans
/// are unique per file), or nullptr.
const Expr* find_expr_by_span(const FunctionDecl& fn, Span span);

}  // namespace teraliz::ml

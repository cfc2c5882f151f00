#include "teraliz/parse.hpp"

#include <cctype>

#include "teraliz/internal.hpp"

namespace teraliz::ml {

namespace {

enum class Tok : uint8_t {
    Ident, Int, Str,
    KwFn, KwLet, KwIf, KwElse, KwWhile, KwReturn, KwTrue, KwFalse,
    KwInt, KwBool, KwStr, KwVoid,
    KwAssertEq, KwAssertTrue, KwAssertFalse, KwAssertThrows,
    LParen, RParen, LBrace, RBrace, Comma, Semi, Colon, Arrow,
    HashBracket, RBracket,
    Assign, Plus, Minus, Star, Slash, Percent,
    Lt, Le, Gt, Ge, EqEq, Ne, AndAnd, OrOr, Bang,
    Eof,
};

struct Token {
    Tok kind;
    Span span;
    std::string text;     // Ident payload or decoded Str payload.
    uint64_t int_val = 0; // Int payload; at most 2147483648.
};

Tok keyword_kind(const std::string& s) {
    if (s == "fn") return Tok::KwFn;
    if (s == "let") return Tok::KwLet;
    if (s == "if") return Tok::KwIf;
    if (s == "else") return Tok::KwElse;
    if (s == "while") return Tok::KwWhile;
    if (s == "return") return Tok::KwReturn;
    if (s == "true") return Tok::KwTrue;
    if (s == "false") return Tok::KwFalse;
    if (s == "int") return Tok::KwInt;
    if (s == "bool") return Tok::KwBool;
    if (s == "str") return Tok::KwStr;
    if (s == "void") return Tok::KwVoid;
    if (s == "assert_eq") return Tok::KwAssertEq;
    if (s == "assert_true") return Tok::KwAssertTrue;
    if (s == "assert_false") return Tok::KwAssertFalse;
    if (s == "assert_throws") return Tok::KwAssertThrows;
    return Tok::Ident;
}

class Lexer {
  public:
    explicit Lexer(const std::string& text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_trivia();
            Token t = next_token();
            out.push_back(t);
            if (t.kind == Tok::Eof) break;
        }
        return out;
    }

  private:
    const std::string& text_;
    uint32_t pos_ = 0, line_ = 1, col_ = 1;

    bool eof() const { return pos_ >= text_.size(); }
    char peek(uint32_t ahead = 0) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }
    char advance() {
        char c = text_[pos_++];
        if (c == '\n') { ++line_; col_ = 1; } else { ++col_; }
        return c;
    }

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(line_, col_, msg); }

    void skip_trivia() {
        for (;;) {
            while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n'))
                advance();
            if (peek() == '/' && peek(1) == '/') {
                while (!eof() && peek() != '\n') advance();
                continue;
            }
            return;
        }
    }

    Token make(Tok kind, uint32_t begin, uint32_t bline, uint32_t bcol) const {
        return Token{kind, Span{begin, pos_, bline, bcol}, {}, 0};
    }

    Token next_token() {
        uint32_t begin = pos_, bline = line_, bcol = col_;
        if (eof()) return make(Tok::Eof, begin, bline, bcol);
        char c = advance();
        switch (c) {
            case '(': return make(Tok::LParen, begin, bline, bcol);
            case ')': return make(Tok::RParen, begin, bline, bcol);
            case '{': return make(Tok::LBrace, begin, bline, bcol);
            case '}': return make(Tok::RBrace, begin, bline, bcol);
            case ',': return make(Tok::Comma, begin, bline, bcol);
            case ';': return make(Tok::Semi, begin, bline, bcol);
            case ':': return make(Tok::Colon, begin, bline, bcol);
            case ']': return make(Tok::RBracket, begin, bline, bcol);
            case '+': return make(Tok::Plus, begin, bline, bcol);
            case '*': return make(Tok::Star, begin, bline, bcol);
            case '/': return make(Tok::Slash, begin, bline, bcol);
            case '%': return make(Tok::Percent, begin, bline, bcol);
            case '#':
                if (peek() == '[') { advance(); return make(Tok::HashBracket, begin, bline, bcol); }
                fail("expected '[' after '#'");
            case '-':
                if (peek() == '>') { advance(); return make(Tok::Arrow, begin, bline, bcol); }
                return make(Tok::Minus, begin, bline, bcol);
            case '=':
                if (peek() == '=') { advance(); return make(Tok::EqEq, begin, bline, bcol); }
                return make(Tok::Assign, begin, bline, bcol);
            case '!':
                if (peek() == '=') { advance(); return make(Tok::Ne, begin, bline, bcol); }
                return make(Tok::Bang, begin, bline, bcol);
            case '<':
                if (peek() == '=') { advance(); return make(Tok::Le, begin, bline, bcol); }
                return make(Tok::Lt, begin, bline, bcol);
            case '>':
                if (peek() == '=') { advance(); return make(Tok::Ge, begin, bline, bcol); }
                return make(Tok::Gt, begin, bline, bcol);
            case '&':
                if (peek() == '&') { advance(); return make(Tok::AndAnd, begin, bline, bcol); }
                fail("stray '&'");
            case '|':
                if (peek() == '|') { advance(); return make(Tok::OrOr, begin, bline, bcol); }
                fail("stray '|'");
            case '"': return lex_string(begin, bline, bcol);
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) return lex_int(begin, bline, bcol);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return lex_ident(begin, bline, bcol);
        fail(std::string("unexpected character '") + c + "'");
    }

    Token lex_int(uint32_t begin, uint32_t bline, uint32_t bcol) {
        uint64_t v = text_[begin] - '0';
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            v = v * 10 + (advance() - '0');
            // 2147483648 is representable only as the negative literal.
            if (v > 2147483648ULL)
                throw ParseError(bline, bcol, "integer literal out of range");
        }
        if (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')
            fail("identifier cannot start with a digit");
        Token t = make(Tok::Int, begin, bline, bcol);
        t.int_val = v;
        return t;
    }

    Token lex_ident(uint32_t begin, uint32_t bline, uint32_t bcol) {
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance();
        std::string word = text_.substr(begin, pos_ - begin);
        Token t = make(keyword_kind(word), begin, bline, bcol);
        if (t.kind == Tok::Ident) t.text = std::move(word);
        return t;
    }

    Token lex_string(uint32_t begin, uint32_t bline, uint32_t bcol) {
        std::string out;
        for (;;) {
            if (eof() || peek() == '\n') fail("unterminated string literal");
            char c = advance();
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) fail("unterminated string literal");
                char e = advance();
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    case '\\': out.push_back('\\'); break;
                    case '"': out.push_back('"'); break;
                    default: fail(std::string("unknown escape '\\") + e + "'");
                }
            } else {
                out.push_back(c);
            }
        }
        Token t = make(Tok::Str, begin, bline, bcol);
        t.text = std::move(out);
        return t;
    }
};

class Parser {
  public:
    Parser(std::vector<Token> toks, std::string path, FileKind kind)
        : toks_(std::move(toks)), path_(std::move(path)), kind_(kind) {}

    SourceFile run(std::string text) {
        SourceFile file;
        file.path = path_;
        file.kind = kind_;
        file.text = std::move(text);
        while (!at(Tok::Eof)) file.functions.push_back(parse_function());
        return file;
    }

  private:
    std::vector<Token> toks_;
    size_t i_ = 0;
    std::string path_;
    FileKind kind_;

    const Token& cur() const { return toks_[i_]; }
    const Token& prev() const { return toks_[i_ - 1]; }
    bool at(Tok k) const { return cur().kind == k; }
    bool at2(Tok k) const { return i_ + 1 < toks_.size() && toks_[i_ + 1].kind == k; }
    const Token& bump() { return toks_[i_++]; }

    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError(cur().span.line, cur().span.col, msg);
    }

    [[noreturn]] static void fail_at(const Token& t, const std::string& msg) {
        throw ParseError(t.span.line, t.span.col, msg);
    }

    const Token& expect(Tok k, const char* what) {
        if (!at(k)) fail(std::string("expected ") + what);
        return bump();
    }

    static Span join(Span a, Span b) { return Span{a.begin, b.end, a.line, a.col}; }

    Annotation parse_annotation() {
        Annotation a{};
        Span start = expect(Tok::HashBracket, "'#['").span;
        const Token& word = expect(Tok::Ident, "annotation name");
        if (word.text == "test") {
            a.kind = Annotation::Kind::Test;
        } else if (word.text == "parameterized") {
            a.kind = Annotation::Kind::Parameterized;
        } else if (word.text == "repeated") {
            a.kind = Annotation::Kind::Repeated;
            expect(Tok::LParen, "'('");
            const Token& n = expect(Tok::Int, "repeat count");
            if (n.int_val == 0 || n.int_val > 2147483647ULL)
                fail_at(n, "repeat count must be between 1 and 2147483647");
            a.count = static_cast<int32_t>(n.int_val);
            expect(Tok::RParen, "')'");
        } else if (word.text == "property") {
            a.kind = Annotation::Kind::Property;
            expect(Tok::LParen, "'('");
            const Token& sup = expect(Tok::Ident, "'supplier'");
            if (sup.text != "supplier") fail_at(sup, "expected 'supplier'");
            expect(Tok::Assign, "'='");
            const Token& val = expect(Tok::Ident, "supplier kind");
            if (val.text == "baseline") a.supplier = SupplierKind::Baseline;
            else if (val.text == "naive") a.supplier = SupplierKind::Naive;
            else if (val.text == "improved") a.supplier = SupplierKind::Improved;
            else fail_at(val, "supplier must be baseline, naive, or improved");
            expect(Tok::Comma, "','");
            const Token& tr = expect(Tok::Ident, "'tries'");
            if (tr.text != "tries") fail_at(tr, "expected 'tries'");
            expect(Tok::Assign, "'='");
            const Token& n = expect(Tok::Int, "tries count");
            if (n.int_val == 0 || n.int_val > 2147483647ULL)
                fail_at(n, "tries must be between 1 and 2147483647");
            a.tries = static_cast<int32_t>(n.int_val);
            expect(Tok::RParen, "')'");
        } else {
            fail_at(word, "unknown annotation '" + word.text + "'");
        }
        Span end = expect(Tok::RBracket, "']'").span;
        a.span = join(start, end);
        return a;
    }

    Type parse_type() {
        switch (cur().kind) {
            case Tok::KwInt: bump(); return Type::Int32;
            case Tok::KwBool: bump(); return Type::Bool;
            case Tok::KwStr: bump(); return Type::Str;
            case Tok::KwVoid: bump(); return Type::Void;
            default: fail("expected a type (int, bool, str, void)");
        }
    }

    FunctionDecl parse_function() {
        FunctionDecl fn;
        Span start = cur().span;
        if (at(Tok::HashBracket)) {
            fn.annotation = parse_annotation();
            if (at(Tok::HashBracket)) fail("a function takes at most one annotation");
        }
        expect(Tok::KwFn, "'fn'");
        const Token& name = expect(Tok::Ident, "function name");
        fn.name = name.text;
        fn.name_span = name.span;
        expect(Tok::LParen, "'('");
        if (!at(Tok::RParen)) {
            for (;;) {
                Param p;
                const Token& pn = expect(Tok::Ident, "parameter name");
                p.name = pn.text;
                expect(Tok::Colon, "':'");
                p.type = parse_type();
                p.span = join(pn.span, prev().span);
                fn.params.push_back(std::move(p));
                if (!at(Tok::Comma)) break;
                bump();
            }
        }
        expect(Tok::RParen, "')'");
        expect(Tok::Arrow, "'->'");
        fn.return_type = parse_type();
        fn.body = parse_block();
        fn.span = join(start, fn.body.span);
        return fn;
    }

    Block parse_block() {
        Block b;
        Span start = expect(Tok::LBrace, "'{'").span;
        while (!at(Tok::RBrace)) {
            if (at(Tok::Eof)) fail("unexpected end of file inside block");
            b.stmts.push_back(parse_stmt());
        }
        Span end = bump().span;
        b.span = join(start, end);
        return b;
    }

    StmtPtr parse_stmt() {
        switch (cur().kind) {
            case Tok::KwLet: return parse_let();
            case Tok::KwIf: return parse_if();
            case Tok::KwWhile: return parse_while();
            case Tok::KwReturn: return parse_return();
            case Tok::KwAssertEq: return parse_assert(AssertKind::Eq);
            case Tok::KwAssertTrue: return parse_assert(AssertKind::True);
            case Tok::KwAssertFalse: return parse_assert(AssertKind::False);
            case Tok::KwAssertThrows: return parse_assert_throws();
            case Tok::Ident:
                if (at2(Tok::Assign)) return parse_assign();
                [[fallthrough]];
            default: return parse_expr_stmt();
        }
    }

    StmtPtr parse_let() {
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::Let;
        Span start = bump().span;
        s->name = expect(Tok::Ident, "variable name").text;
        expect(Tok::Assign, "'='");
        s->value = parse_expr();
        Span end = expect(Tok::Semi, "';'").span;
        s->span = join(start, end);
        return s;
    }

    StmtPtr parse_assign() {
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::Assign;
        const Token& name = bump();
        s->name = name.text;
        bump();  // '='
        s->value = parse_expr();
        Span end = expect(Tok::Semi, "';'").span;
        s->span = join(name.span, end);
        return s;
    }

    StmtPtr parse_if() {
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::If;
        Span start = bump().span;
        s->value = parse_expr();
        s->block_a = parse_block();
        Span end = s->block_a->span;
        if (at(Tok::KwElse)) {
            bump();
            if (at(Tok::KwIf)) {
                StmtPtr nested = parse_if();
                Block else_block;
                else_block.span = nested->span;
                end = nested->span;
                else_block.stmts.push_back(std::move(nested));
                s->block_b = std::move(else_block);
            } else {
                s->block_b = parse_block();
                end = s->block_b->span;
            }
        }
        s->span = join(start, end);
        return s;
    }

    StmtPtr parse_while() {
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::While;
        Span start = bump().span;
        s->value = parse_expr();
        s->block_a = parse_block();
        s->span = join(start, s->block_a->span);
        return s;
    }

    StmtPtr parse_return() {
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::Return;
        Span start = bump().span;
        if (!at(Tok::Semi)) s->value = parse_expr();
        Span end = expect(Tok::Semi, "';'").span;
        s->span = join(start, end);
        return s;
    }

    StmtPtr parse_assert(AssertKind kind) {
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::Assert;
        s->assert_kind = kind;
        Span start = bump().span;
        expect(Tok::LParen, "'('");
        s->value = parse_expr();
        if (kind == AssertKind::Eq) {
            expect(Tok::Comma, "','");
            s->value2 = parse_expr();
        }
        expect(Tok::RParen, "')'");
        Span end = expect(Tok::Semi, "';'").span;
        s->span = join(start, end);
        return s;
    }

    StmtPtr parse_assert_throws() {
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::Assert;
        s->assert_kind = AssertKind::Throws;
        Span start = bump().span;
        s->block_a = parse_block();
        s->span = join(start, s->block_a->span);
        return s;
    }

    StmtPtr parse_expr_stmt() {
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::ExprStmt;
        Span start = cur().span;
        s->value = parse_expr();
        Span end = expect(Tok::Semi, "';'").span;
        s->span = join(start, end);
        return s;
    }

    // Expressions. Each level tracks the syntactic start so spans cover
    // leading parentheses of the left operand.

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        Span start = cur().span;
        ExprPtr e = parse_and();
        while (at(Tok::OrOr)) {
            bump();
            ExprPtr rhs = parse_and();
            Span sp = Span{start.begin, prev().span.end, start.line, start.col};
            e = Expr::make_binary(BinaryOp::Or, std::move(e), std::move(rhs), sp);
        }
        return e;
    }

    ExprPtr parse_and() {
        Span start = cur().span;
        ExprPtr e = parse_equality();
        while (at(Tok::AndAnd)) {
            bump();
            ExprPtr rhs = parse_equality();
            Span sp = Span{start.begin, prev().span.end, start.line, start.col};
            e = Expr::make_binary(BinaryOp::And, std::move(e), std::move(rhs), sp);
        }
        return e;
    }

    ExprPtr parse_equality() {
        Span start = cur().span;
        ExprPtr e = parse_relational();
        while (at(Tok::EqEq) || at(Tok::Ne)) {
            BinaryOp op = at(Tok::EqEq) ? BinaryOp::Eq : BinaryOp::Ne;
            bump();
            ExprPtr rhs = parse_relational();
            Span sp = Span{start.begin, prev().span.end, start.line, start.col};
            e = Expr::make_binary(op, std::move(e), std::move(rhs), sp);
        }
        return e;
    }

    ExprPtr parse_relational() {
        Span start = cur().span;
        ExprPtr e = parse_additive();
        while (at(Tok::Lt) || at(Tok::Le) || at(Tok::Gt) || at(Tok::Ge)) {
            BinaryOp op = at(Tok::Lt)   ? BinaryOp::Lt
                        : at(Tok::Le)   ? BinaryOp::Le
                        : at(Tok::Gt)   ? BinaryOp::Gt
                                        : BinaryOp::Ge;
            bump();
            ExprPtr rhs = parse_additive();
            Span sp = Span{start.begin, prev().span.end, start.line, start.col};
            e = Expr::make_binary(op, std::move(e), std::move(rhs), sp);
        }
        return e;
    }

    ExprPtr parse_additive() {
        Span start = cur().span;
        ExprPtr e = parse_multiplicative();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            BinaryOp op = at(Tok::Plus) ? BinaryOp::Add : BinaryOp::Sub;
            bump();
            ExprPtr rhs = parse_multiplicative();
            Span sp = Span{start.begin, prev().span.end, start.line, start.col};
            e = Expr::make_binary(op, std::move(e), std::move(rhs), sp);
        }
        return e;
    }

    ExprPtr parse_multiplicative() {
        Span start = cur().span;
        ExprPtr e = parse_unary();
        while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
            BinaryOp op = at(Tok::Star)  ? BinaryOp::Mul
                        : at(Tok::Slash) ? BinaryOp::Div
                                         : BinaryOp::Mod;
            bump();
            ExprPtr rhs = parse_unary();
            Span sp = Span{start.begin, prev().span.end, start.line, start.col};
            e = Expr::make_binary(op, std::move(e), std::move(rhs), sp);
        }
        return e;
    }

    ExprPtr parse_unary() {
        if (at(Tok::Minus)) {
            Span op_span = bump().span;
            // A minus directly before an integer literal folds into the
            // literal, so -2147483648 is representable.
            if (at(Tok::Int)) {
                const Token& n = bump();
                int64_t v = -static_cast<int64_t>(n.int_val);
                return Expr::make_int(static_cast<int32_t>(v), join(op_span, n.span));
            }
            ExprPtr operand = parse_unary();
            Span sp = Span{op_span.begin, prev().span.end, op_span.line, op_span.col};
            return Expr::make_unary(UnaryOp::Neg, std::move(operand), sp);
        }
        if (at(Tok::Bang)) {
            Span op_span = bump().span;
            ExprPtr operand = parse_unary();
            Span sp = Span{op_span.begin, prev().span.end, op_span.line, op_span.col};
            return Expr::make_unary(UnaryOp::Not, std::move(operand), sp);
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        switch (cur().kind) {
            case Tok::Int: {
                const Token& n = bump();
                if (n.int_val > 2147483647ULL) fail_at(n, "integer literal out of range");
                return Expr::make_int(static_cast<int32_t>(n.int_val), n.span);
            }
            case Tok::KwTrue: return Expr::make_bool(true, bump().span);
            case Tok::KwFalse: return Expr::make_bool(false, bump().span);
            case Tok::Str: {
                const Token& t = bump();
                return Expr::make_str(t.text, t.span);
            }
            case Tok::LParen: {
                bump();
                ExprPtr e = parse_expr();
                expect(Tok::RParen, "')'");
                return e;
            }
            case Tok::Ident: {
                const Token& name = bump();
                if (at(Tok::LParen)) {
                    bump();
                    std::vector<ExprPtr> args;
                    if (!at(Tok::RParen)) {
                        for (;;) {
                            args.push_back(parse_expr());
                            if (!at(Tok::Comma)) break;
                            bump();
                        }
                    }
                    Span end = expect(Tok::RParen, "')'").span;
                    return Expr::make_call(name.text, std::move(args), join(name.span, end));
                }
                return Expr::make_var(name.text, name.span);
            }
            default: fail("expected an expression");
        }
    }
};

}  // namespace

SourceFile parse_file(const std::string& text, const std::string& path, FileKind kind) {
    Lexer lexer(text);
    Parser parser(lexer.run(), path, kind);
    SourceFile file = parser.run(text);
    detail::check_files({&file}, /*strict=*/false);
    return file;
}

Program link(std::vector<SourceFile> files) {
    std::vector<SourceFile*> ptrs;
    ptrs.reserve(files.size());
    for (auto& f : files) ptrs.push_back(&f);
    detail::check_files(ptrs, /*strict=*/true);
    Program p;
    p.files.reserve(files.size());
    for (auto& f : files) p.files.push_back(std::make_shared<SourceFile>(std::move(f)));
    p.reindex();
    return p;
}

ExprPtr parse_expr_text(const std::string& text) {
    std::string wrapped = "fn __expr__() -> void { let __v__ = " + text + "; }";
    Lexer lexer(wrapped);
    Parser parser(lexer.run(), "<expr>", FileKind::Impl);
    SourceFile file = parser.run(wrapped);
    if (file.functions.size() != 1 || file.functions[0].body.stmts.size() != 1)
        throw ParseError(1, 1, "expected a single expression");
    return std::move(file.functions[0].body.stmts[0]->value);
}

}  // namespace teraliz::ml

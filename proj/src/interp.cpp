#include "teraliz/interp.hpp"

#include <algorithm>
#include <unordered_map>

#include "teraliz/arith.hpp"
#include "teraliz/pretty.hpp"

namespace teraliz::interp {

using arith::add_wrap;
using arith::div_trunc;
using arith::mod_trunc;
using arith::mul_wrap;
using arith::sub_wrap;
using ml::Expr;
using ml::FunctionDecl;
using ml::Program;
using ml::SourceFile;
using ml::Stmt;
using sym::sym_binary;
using sym::sym_bool;
using sym::sym_int;
using sym::sym_unary;

namespace {

// Concrete subcomputations stay concrete: when no operand depends on a
// parameter, the shadow is just the computed value. Only parameter-tainted
// data grows expressions, which keeps loop counters and other bookkeeping
// from inflating the recorded conditions.
sym::SymPtr shadow_unary(UnaryOp op, const Value& result, const sym::SymPtr& a) {
    if (!a->has_param)
        return result.type == Type::Int32 ? sym_int(result.i) : sym_bool(result.b);
    return sym_unary(op, a);
}

sym::SymPtr shadow_binary(BinaryOp op, const Value& result, const sym::SymPtr& a,
                          const sym::SymPtr& b) {
    if (!a->has_param && !b->has_param)
        return result.type == Type::Int32 ? sym_int(result.i) : sym_bool(result.b);
    return sym_binary(op, a, b);
}

}  // namespace

Value Value::of_int(int32_t v) {
    Value r;
    r.type = Type::Int32;
    r.i = v;
    return r;
}

Value Value::of_bool(bool v) {
    Value r;
    r.type = Type::Bool;
    r.b = v;
    return r;
}

Value Value::of_str(std::string v) {
    Value r;
    r.type = Type::Str;
    r.s = std::move(v);
    return r;
}

bool Value::same(const Value& o) const {
    if (type != o.type) return false;
    switch (type) {
        case Type::Int32: return i == o.i;
        case Type::Bool: return b == o.b;
        case Type::Str: return s == o.s;
        case Type::Void: return true;
    }
    return false;
}

std::string Value::show() const {
    switch (type) {
        case Type::Int32: return std::to_string(i);
        case Type::Bool: return b ? "true" : "false";
        case Type::Str: return ml::escape_str(s);
        case Type::Void: return "()";
    }
    return "?";
}

const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::DivByZero: return "div_by_zero";
        case ErrorKind::ModByZero: return "mod_by_zero";
    }
    return "?";
}

bool error_kind_from_name(const std::string& name, ErrorKind& out) {
    if (name == "div_by_zero") {
        out = ErrorKind::DivByZero;
        return true;
    }
    if (name == "mod_by_zero") {
        out = ErrorKind::ModByZero;
        return true;
    }
    return false;
}

const char* test_status_name(TestStatus s) {
    switch (s) {
        case TestStatus::Passed: return "passed";
        case TestStatus::Failed: return "failed";
        case TestStatus::Errored: return "errored";
        case TestStatus::Skipped: return "skipped";
    }
    return "?";
}

struct Evaluator::Frame {
    const SourceFile* file;
    const FunctionDecl* fn;
    std::vector<std::unordered_map<std::string, Value>> scopes;

    Value* lookup(const std::string& name) {
        for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
            auto found = it->find(name);
            if (found != it->end()) return &found->second;
        }
        return nullptr;
    }
};

Evaluator::Evaluator(const Program& program, RunLimits limits, Hooks* hooks)
    : prog_(program), limits_(limits), hooks_(hooks) {}

void Evaluator::step() {
    if (++steps_ > limits_.max_steps) throw EvalAbort{EvalAbort::Why::Steps};
}

Value Evaluator::invoke(const FunctionDecl& fn, std::vector<Value> args) {
    depth_ = 0;
    contained_.clear();
    const SourceFile* file = prog_.file_of(fn.name);
    if (!file) throw std::logic_error("invoke: function '" + fn.name + "' is not linked");
    return call(*file, fn, std::move(args));
}

Value Evaluator::call(const SourceFile& file, const FunctionDecl& fn, std::vector<Value> args) {
    if (++depth_ > limits_.max_depth) throw EvalAbort{EvalAbort::Why::Depth};
    Frame fr{&file, &fn, {}};
    fr.scopes.emplace_back();
    for (size_t i = 0; i < fn.params.size(); ++i) {
        Value v = std::move(args[i]);
        if (symbolic && !v.shadow) {
            if (v.type == Type::Int32) v.shadow = sym_int(v.i);
            else if (v.type == Type::Bool) v.shadow = sym_bool(v.b);
        }
        fr.scopes.back().emplace(fn.params[i].name, std::move(v));
    }
    std::optional<Value> ret = exec_block(fr, fn.body);
    --depth_;
    if (fn.return_type == Type::Void) return Value::unit();
    return std::move(*ret);  // Non-void functions return on every path.
}

std::optional<Value> Evaluator::exec_block(Frame& fr, const ml::Block& b) {
    fr.scopes.emplace_back();
    for (const ml::StmtPtr& s : b.stmts) {
        std::optional<Value> r = exec_stmt(fr, *s);
        if (r) {
            fr.scopes.pop_back();
            return r;
        }
    }
    fr.scopes.pop_back();
    return std::nullopt;
}

std::optional<Value> Evaluator::exec_stmt(Frame& fr, const Stmt& s) {
    step();
    if (hooks_) hooks_->on_stmt(*fr.file, s);
    switch (s.kind) {
        case Stmt::Kind::Let:
            fr.scopes.back().emplace(s.name, eval(fr, *s.value));
            return std::nullopt;
        case Stmt::Kind::Assign: {
            Value v = eval(fr, *s.value);
            *fr.lookup(s.name) = std::move(v);
            return std::nullopt;
        }
        case Stmt::Kind::If: {
            Value c = eval(fr, *s.value);
            if (hooks_) hooks_->on_branch(*s.value, c, false);
            if (c.b) return exec_block(fr, *s.block_a);
            if (s.block_b) return exec_block(fr, *s.block_b);
            return std::nullopt;
        }
        case Stmt::Kind::While:
            for (;;) {
                Value c = eval(fr, *s.value);
                if (hooks_) hooks_->on_branch(*s.value, c, true);
                if (!c.b) return std::nullopt;
                std::optional<Value> r = exec_block(fr, *s.block_a);
                if (r) return r;
            }
        case Stmt::Kind::Return:
            if (s.value) return eval(fr, *s.value);
            return Value::unit();
        case Stmt::Kind::ExprStmt:
            eval(fr, *s.value);
            return std::nullopt;
        case Stmt::Kind::Assert:
            do_assert(fr, s);
            return std::nullopt;
    }
    return std::nullopt;
}

void Evaluator::do_assert(Frame& fr, const Stmt& s) {
    switch (s.assert_kind) {
        case ml::AssertKind::Eq: {
            Value expected = eval(fr, *s.value);
            Value actual = eval(fr, *s.value2);
            if (!expected.same(actual))
                throw AssertFail{"assert_eq failed: expected " + expected.show() + ", found " +
                                     actual.show(),
                                 s.span, fr.file};
            return;
        }
        case ml::AssertKind::True:
            if (!eval(fr, *s.value).b)
                throw AssertFail{"assert_true failed", s.span, fr.file};
            return;
        case ml::AssertKind::False:
            if (eval(fr, *s.value).b)
                throw AssertFail{"assert_false failed", s.span, fr.file};
            return;
        case ml::AssertKind::Throws:
            try {
                exec_block(fr, *s.block_a);
            } catch (const EvalError& err) {
                contained_.push_back(err.kind);
                return;
            }
            throw AssertFail{"assert_throws failed: no error was raised", s.span, fr.file};
    }
}

Value Evaluator::eval(Frame& fr, const Expr& e) {
    step();
    if (hooks_) hooks_->on_expr(*fr.file, e);
    switch (e.kind) {
        case Expr::Kind::IntLit: {
            Value v = Value::of_int(e.int_val);
            if (symbolic) v.shadow = sym_int(e.int_val);
            return v;
        }
        case Expr::Kind::BoolLit: {
            Value v = Value::of_bool(e.bool_val);
            if (symbolic) v.shadow = sym_bool(e.bool_val);
            return v;
        }
        case Expr::Kind::StrLit:
            return Value::of_str(e.str_val);
        case Expr::Kind::Var:
            return *fr.lookup(e.name);
        case Expr::Kind::Unary: {
            Value a = eval(fr, *e.children[0]);
            Value v = e.uop == UnaryOp::Neg ? Value::of_int(sub_wrap(0, a.i))
                                            : Value::of_bool(!a.b);
            if (symbolic) v.shadow = shadow_unary(e.uop, v, a.shadow);
            return v;
        }
        case Expr::Kind::Binary:
            return eval_binary(fr, e);
        case Expr::Kind::Call: {
            const Program::FnRef& ref = prog_.by_name.at(e.name);
            std::vector<Value> args;
            args.reserve(e.children.size());
            for (const ml::ExprPtr& c : e.children) args.push_back(eval(fr, *c));
            if (hooks_) hooks_->on_call_enter(e, *ref.fn, args);
            Value r;
            try {
                r = call(*ref.file, *ref.fn, std::move(args));
            } catch (const EvalError& err) {
                if (hooks_) hooks_->on_call_error(e, *ref.fn, err);
                throw;
            }
            if (hooks_) hooks_->on_call_exit(e, *ref.fn, r);
            return r;
        }
    }
    return Value::unit();
}

Value Evaluator::eval_binary(Frame& fr, const Expr& e) {
    // Short-circuit forms: the surviving operand's value (and shadow) is the
    // result, so And/Or never show up in shadow expressions.
    if (e.bop == BinaryOp::And || e.bop == BinaryOp::Or) {
        Value a = eval(fr, *e.children[0]);
        if (hooks_) hooks_->on_logic_operand(*e.children[0], e.bop, a);
        if (e.bop == BinaryOp::And ? !a.b : a.b) return a;
        Value b = eval(fr, *e.children[1]);
        if (hooks_) hooks_->on_logic_operand(*e.children[1], e.bop, b);
        return b;
    }

    Value a = eval(fr, *e.children[0]);
    Value b = eval(fr, *e.children[1]);
    Value v;
    if (is_arith(e.bop)) {
        int32_t r = 0;
        switch (e.bop) {
            case BinaryOp::Add: r = add_wrap(a.i, b.i); break;
            case BinaryOp::Sub: r = sub_wrap(a.i, b.i); break;
            case BinaryOp::Mul: r = mul_wrap(a.i, b.i); break;
            case BinaryOp::Div: {
                auto q = div_trunc(a.i, b.i);
                if (!q) throw EvalError{ErrorKind::DivByZero, e.span, fr.file};
                r = *q;
                break;
            }
            case BinaryOp::Mod: {
                auto m = mod_trunc(a.i, b.i);
                if (!m) throw EvalError{ErrorKind::ModByZero, e.span, fr.file};
                r = *m;
                break;
            }
            default: break;
        }
        v = Value::of_int(r);
        if (symbolic) v.shadow = shadow_binary(e.bop, v, a.shadow, b.shadow);
        return v;
    }
    if (is_order(e.bop)) {
        bool r = false;
        switch (e.bop) {
            case BinaryOp::Lt: r = a.i < b.i; break;
            case BinaryOp::Le: r = a.i <= b.i; break;
            case BinaryOp::Gt: r = a.i > b.i; break;
            case BinaryOp::Ge: r = a.i >= b.i; break;
            default: break;
        }
        v = Value::of_bool(r);
        if (symbolic) v.shadow = shadow_binary(e.bop, v, a.shadow, b.shadow);
        return v;
    }
    // Equality; defined for int, bool, and str operands.
    bool r = a.same(b);
    if (e.bop == BinaryOp::Ne) r = !r;
    v = Value::of_bool(r);
    if (symbolic) {
        if (a.shadow && b.shadow) v.shadow = shadow_binary(e.bop, v, a.shadow, b.shadow);
        else v.shadow = sym_bool(r);  // String comparisons stay concrete.
    }
    return v;
}

namespace {

std::string location(const SourceFile* file, Span span) {
    std::string path = file ? file->path : "?";
    return " (" + path + ":" + std::to_string(span.line) + ":" + std::to_string(span.col) + ")";
}

}  // namespace

TestResult run_test(const Program& program, const FunctionDecl& test, RunLimits limits,
                    Hooks* hooks) {
    TestResult r;
    r.name = test.name;
    const SourceFile* file = program.file_of(test.name);
    r.file = file ? file->path : "?";
    if (test.annotation && test.annotation->kind == ml::Annotation::Kind::Property) {
        r.status = TestStatus::Skipped;
        r.message = "property tests need a generator";
        return r;
    }
    int iterations = 1;
    if (test.annotation && test.annotation->kind == ml::Annotation::Kind::Repeated)
        iterations = test.annotation->count;
    for (int i = 0; i < iterations; ++i) {
        Evaluator ev(program, limits, hooks);
        try {
            ev.invoke(test, {});
            r.steps += ev.steps_used();
        } catch (const AssertFail& f) {
            r.steps += ev.steps_used();
            r.status = TestStatus::Failed;
            r.message = f.message + location(f.file, f.span);
            break;
        } catch (const EvalError& err) {
            r.steps += ev.steps_used();
            r.status = TestStatus::Errored;
            r.message = std::string("runtime error: ") + error_kind_name(err.kind) +
                        location(err.file, err.span);
            break;
        } catch (const EvalAbort& a) {
            r.steps += ev.steps_used();
            r.status = TestStatus::Errored;
            r.message = a.why == EvalAbort::Why::Steps ? "step budget exceeded"
                                                       : "call depth exceeded";
            break;
        }
    }
    return r;
}

SuiteResult run_suite(const Program& program, RunLimits limits, Hooks* hooks) {
    SuiteResult suite;
    std::vector<const SourceFile*> files;
    for (const auto& f : program.files)
        if (f->kind == ml::FileKind::Test) files.push_back(f.get());
    std::sort(files.begin(), files.end(),
              [](const SourceFile* a, const SourceFile* b) { return a->path < b->path; });
    for (const SourceFile* f : files) {
        for (const FunctionDecl& fn : f->functions) {
            if (!fn.annotation) continue;
            TestResult r = run_test(program, fn, limits, hooks);
            suite.total_steps += r.steps;
            if (r.status != TestStatus::Passed && r.status != TestStatus::Skipped)
                suite.all_passed = false;
            suite.tests.push_back(std::move(r));
        }
    }
    return suite;
}

}  // namespace teraliz::interp

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "teraliz/ast.hpp"
#include "teraliz/symexpr.hpp"

namespace teraliz::interp {

/// A runtime value. `sym` is a shadow expression over function-under-test
/// parameters, populated only when the evaluator runs in symbolic mode;
/// strings never carry shadows.
struct Value {
    Type type = Type::Void;
    int32_t i = 0;
    bool b = false;
    std::string s;
    sym::SymPtr shadow;

    static Value unit() { return {}; }
    static Value of_int(int32_t v);
    static Value of_bool(bool v);
    static Value of_str(std::string v);

    /// Type and payload equality; shadows are ignored.
    bool same(const Value& o) const;
    /// Source-style rendering: 12, true, "a\nb".
    std::string show() const;
};

/// Runtime errors a MiniLang program can raise (and assert_throws can catch).
enum class ErrorKind : uint8_t { DivByZero, ModByZero };

const char* error_kind_name(ErrorKind k);  // "div_by_zero" / "mod_by_zero"

/// Parses the name back; returns false if the text matches no kind.
bool error_kind_from_name(const std::string& name, ErrorKind& out);

struct EvalError {
    ErrorKind kind;
    Span span;
    const ml::SourceFile* file = nullptr;  ///< Where the error was raised.
};

/// A failed assert_* statement.
struct AssertFail {
    std::string message;
    Span span;
    const ml::SourceFile* file = nullptr;  ///< Where the assertion lives.
};

/// Engine-level abort: the execution blew through a resource limit. Not
/// catchable by assert_throws.
struct EvalAbort {
    enum class Why : uint8_t { Steps, Depth } why;
};

struct RunLimits {
    uint64_t max_steps = 1'000'000;  ///< Per top-level invocation.
    uint32_t max_depth = 128;        ///< Call nesting.
};

/// Observation points. All hooks default to no-ops; the evaluator only pays
/// for them when a non-null Hooks* is installed.
struct Hooks {
    /// An if/while guard was evaluated to `v`; fires before the branch is
    /// taken, once per loop iteration for while.
    virtual void on_branch(const ml::Expr& /*cond*/, const Value& /*v*/, bool /*is_loop*/) {}
    /// An operand of && or || was evaluated to `v` (short-circuited operands
    /// never fire).
    virtual void on_logic_operand(const ml::Expr& /*operand*/, BinaryOp /*op*/,
                                  const Value& /*v*/) {}
    /// A call is about to run; args may be decorated with shadows in place.
    virtual void on_call_enter(const ml::Expr& /*call*/, const ml::FunctionDecl& /*callee*/,
                               std::vector<Value>& /*args*/) {}
    virtual void on_call_exit(const ml::Expr& /*call*/, const ml::FunctionDecl& /*callee*/,
                              const Value& /*result*/) {}
    /// A runtime error is unwinding out of this call.
    virtual void on_call_error(const ml::Expr& /*call*/, const ml::FunctionDecl& /*callee*/,
                               const EvalError& /*err*/) {}
    /// Execution touched a statement / expression of `file`.
    virtual void on_stmt(const ml::SourceFile& /*file*/, const ml::Stmt& /*s*/) {}
    virtual void on_expr(const ml::SourceFile& /*file*/, const ml::Expr& /*e*/) {}
    virtual ~Hooks() = default;

    Hooks() = default;
    Hooks(const Hooks&) = delete;
    Hooks& operator=(const Hooks&) = delete;
};

/// Tree-walking evaluator over a linked program. One instance tracks one
/// top-level invocation's step budget.
class Evaluator {
  public:
    explicit Evaluator(const ml::Program& program, RunLimits limits = {}, Hooks* hooks = nullptr);

    /// When set, every int/bool value carries a shadow expression; parameters
    /// of directly invoked functions get fresh Param shadows only if the
    /// caller seeded them into `args`.
    bool symbolic = false;

    /// Calls `fn` with `args` (types must already match). Propagates
    /// AssertFail / EvalError / EvalAbort.
    Value invoke(const ml::FunctionDecl& fn, std::vector<Value> args);

    uint64_t steps_used() const { return steps_; }

    /// Kind of the most recent error contained by an assert_throws during the
    /// last invoke, if any.
    const std::vector<ErrorKind>& contained_errors() const { return contained_; }

  private:
    struct Frame;

    const ml::Program& prog_;
    RunLimits limits_;
    Hooks* hooks_;
    uint64_t steps_ = 0;
    uint32_t depth_ = 0;
    std::vector<ErrorKind> contained_;

    void step();
    Value call(const ml::SourceFile& file, const ml::FunctionDecl& fn, std::vector<Value> args);
    std::optional<Value> exec_block(Frame& fr, const ml::Block& b);
    std::optional<Value> exec_stmt(Frame& fr, const ml::Stmt& s);
    void do_assert(Frame& fr, const ml::Stmt& s);
    Value eval(Frame& fr, const ml::Expr& e);
    Value eval_binary(Frame& fr, const ml::Expr& e);
};

enum class TestStatus : uint8_t { Passed, Failed, Errored, Skipped };

const char* test_status_name(TestStatus s);

struct TestResult {
    std::string name;
    std::string file;
    TestStatus status = TestStatus::Passed;
    std::string message;     ///< Failure/error details, empty when passed.
    uint64_t steps = 0;      ///< Total interpreter steps across iterations.
};

/// Runs one annotated test function: no arguments, repeated(n) iterates the
/// body n times with a fresh budget each, property tests are skipped (they
/// need a generator, not a bare runner). Assertion failures give Failed;
/// escaping runtime errors or resource aborts give Errored.
TestResult run_test(const ml::Program& program, const ml::FunctionDecl& test,
                    RunLimits limits = {}, Hooks* hooks = nullptr);

struct SuiteResult {
    std::vector<TestResult> tests;
    bool all_passed = true;  ///< Skipped tests do not count against this.
    uint64_t total_steps = 0;
};

/// Runs every annotated function in test files, files in path order,
/// functions in declaration order.
SuiteResult run_suite(const ml::Program& program, RunLimits limits = {}, Hooks* hooks = nullptr);

}  // namespace teraliz::interp

#include "teraliz/concolic.hpp"

#include <chrono>

#include "teraliz/parse.hpp"

namespace teraliz::concolic {

using interp::ErrorKind;
using interp::Evaluator;
using interp::Value;
using sym::SymPtr;

const char* failure_cause_name(FailureCause c) {
    switch (c) {
        case FailureCause::EngineError: return "engine_error";
        case FailureCause::SpecSizeExceeded: return "spec_size_exceeded";
        case FailureCause::DepthExceeded: return "depth_exceeded";
        case FailureCause::Timeout: return "timeout";
        case FailureCause::OutOfBudget: return "out_of_budget";
    }
    return "?";
}

std::string PathSpec::rendered_pc() const {
    if (pc.empty()) return "true";
    std::string out;
    for (size_t i = 0; i < pc.size(); ++i) {
        if (i) out += " && ";
        out += sym::render(*pc[i]);
    }
    return out;
}

namespace {

/// Thrown out of the hooks to stop the replay; assert_throws only catches
/// interpreter errors, so this always reaches extract_spec.
struct Stop {
    FailureCause cause;
    std::string detail;
};

class Driver final : public interp::Hooks {
  public:
    Driver(const analyzer::Target& target, const ExtractionLimits& limits)
        : target_(target),
          limits_(limits),
          deadline_(std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(limits.wall_timeout_s))) {}

    bool done() const { return done_; }
    const std::vector<Value>& seeds() const { return seeds_; }
    const std::vector<SymPtr>& pc() const { return pc_; }
    bool error_outcome() const { return error_outcome_; }
    const SymPtr& outcome() const { return outcome_; }
    ErrorKind error_kind() const { return error_kind_; }
    const Value& result() const { return result_; }

    void on_call_enter(const ml::Expr& call, const ml::FunctionDecl&,
                       std::vector<Value>& args) override {
        if (&call != target_.mut_call || done_ || recording_) return;
        recording_ = true;
        seeds_ = args;
        for (uint32_t i : target_.gen_params) {
            const ml::Param& p = target_.mut->params[i];
            args[i].shadow = sym::sym_param(i, p.name, p.type);
        }
    }

    void on_call_exit(const ml::Expr& call, const ml::FunctionDecl&,
                      const Value& result) override {
        if (&call != target_.mut_call || !recording_) return;
        recording_ = false;
        done_ = true;
        if (target_.throws)
            throw Stop{FailureCause::EngineError, "the checked call returned without an error"};
        result_ = result;
        outcome_ = result.shadow ? result.shadow : constant_shadow(result);
    }

    void on_call_error(const ml::Expr& call, const ml::FunctionDecl&,
                       const interp::EvalError& err) override {
        if (&call != target_.mut_call || !recording_) return;
        recording_ = false;
        done_ = true;
        if (!target_.throws)
            throw Stop{FailureCause::EngineError,
                       std::string("the checked call raised ") + interp::error_kind_name(err.kind)};
        error_outcome_ = true;
        error_kind_ = err.kind;
    }

    void on_branch(const ml::Expr& cond, const Value& v, bool) override {
        // && and || guards burn down to their operands, which report below.
        if (cond.kind == ml::Expr::Kind::Binary &&
            (cond.bop == BinaryOp::And || cond.bop == BinaryOp::Or))
            return;
        record(v);
    }

    void on_logic_operand(const ml::Expr& operand, BinaryOp, const Value& v) override {
        if (operand.kind == ml::Expr::Kind::Binary &&
            (operand.bop == BinaryOp::And || operand.bop == BinaryOp::Or))
            return;
        record(v);
    }

    void on_stmt(const ml::SourceFile&, const ml::Stmt&) override {
        if ((++stmt_ticks_ & 0xFFF) == 0 && std::chrono::steady_clock::now() > deadline_)
            throw Stop{FailureCause::Timeout, "wall-clock limit exceeded"};
    }

  private:
    static SymPtr constant_shadow(const Value& v) {
        switch (v.type) {
            case Type::Int32: return sym::sym_int(v.i);
            case Type::Bool: return sym::sym_bool(v.b);
            default:
                throw Stop{FailureCause::EngineError, "the checked call returned a non-scalar"};
        }
    }

    void record(const Value& v) {
        if (!recording_) return;
        if (!v.shadow) throw Stop{FailureCause::EngineError, "branch guard has no expression"};
        if (!v.shadow->has_param) return;  // Same direction for every generated input.
        SymPtr conjunct = v.b ? v.shadow : sym::negate(v.shadow);
        pc_chars_ += conjunct->render_len + (pc_.empty() ? 0 : 4);
        if (pc_chars_ > limits_.max_pc_chars)
            throw Stop{FailureCause::SpecSizeExceeded, "path condition exceeds " +
                                                           std::to_string(limits_.max_pc_chars) +
                                                           " rendered characters"};
        pc_.push_back(std::move(conjunct));
    }

    const analyzer::Target& target_;
    const ExtractionLimits& limits_;
    std::chrono::steady_clock::time_point deadline_;

    bool recording_ = false;
    bool done_ = false;
    std::vector<Value> seeds_;
    std::vector<SymPtr> pc_;
    uint64_t pc_chars_ = 0;
    uint64_t stmt_ticks_ = 0;

    bool error_outcome_ = false;
    SymPtr outcome_;
    ErrorKind error_kind_{};
    Value result_;
};

Extraction fail(FailureCause cause, std::string detail) {
    Extraction out;
    out.failure = ExtractionFailure{cause, std::move(detail)};
    return out;
}

}  // namespace

Extraction extract_spec(const ml::Program& program, const analyzer::Target& target,
                        const ExtractionLimits& limits) {
    Driver driver(target, limits);
    interp::RunLimits run{limits.max_steps, limits.max_call_depth};
    Evaluator ev(program, run, &driver);
    ev.symbolic = true;
    try {
        ev.invoke(*target.test_fn, {});
    } catch (const Stop& s) {
        return fail(s.cause, s.detail);
    } catch (const interp::EvalAbort& a) {
        if (a.why == interp::EvalAbort::Why::Depth)
            return fail(FailureCause::DepthExceeded, "call depth limit exceeded");
        return fail(FailureCause::OutOfBudget, "step budget exhausted");
    } catch (const interp::EvalError& e) {
        return fail(FailureCause::EngineError,
                    std::string("test raised ") + interp::error_kind_name(e.kind) +
                        " during replay");
    } catch (const interp::AssertFail& f) {
        return fail(FailureCause::EngineError, "test failed during replay: " + f.message);
    }
    if (!driver.done())
        return fail(FailureCause::EngineError, "the checked call never ran");

    PathSpec spec;
    spec.mut = target.mut;
    spec.concrete_inputs = driver.seeds();
    for (uint32_t i : target.gen_params) {
        const ml::Param& p = target.mut->params[i];
        spec.symbolic_params.push_back({i, p.name, p.type});
    }
    spec.pc = driver.pc();
    spec.error_outcome = driver.error_outcome();
    if (spec.error_outcome) {
        spec.error_kind = driver.error_kind();
    } else {
        spec.outcome = driver.outcome();
        spec.concrete_value = driver.result();
    }
    Extraction out;
    out.spec = std::move(spec);
    return out;
}

SymValue eval_sym(const SymPtr& e, const std::vector<SymParam>& params,
                  const std::vector<interp::Value>& by_index) {
    std::string src = "fn __sym__(";
    std::vector<Value> args;
    for (size_t i = 0; i < params.size(); ++i) {
        if (i) src += ", ";
        src += params[i].name + ": " + type_name(params[i].type);
        args.push_back(by_index.at(params[i].index));
    }
    src += ") -> " + std::string(type_name(sym::sym_type(*e)));
    src += " {\n    return " + sym::render(*e) + ";\n}\n";

    ml::Program prog = ml::link_files(ml::parse_file(src, "sym/expr.ml", ml::FileKind::Impl));
    Evaluator ev(prog);
    SymValue out;
    try {
        out.value = ev.invoke(*prog.find("__sym__"), std::move(args));
        out.ok = true;
    } catch (const interp::EvalError& err) {
        out.error = err.kind;
    }
    return out;
}

}  // namespace teraliz::concolic

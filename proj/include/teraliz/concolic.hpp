#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "teraliz/analyzer.hpp"
#include "teraliz/ast.hpp"
#include "teraliz/interp.hpp"
#include "teraliz/symexpr.hpp"

namespace teraliz::concolic {

struct ExtractionLimits {
    uint64_t max_steps = 1'000'000;
    uint64_t max_pc_chars = 100'000;  ///< Rendered length of the whole path condition.
    uint32_t max_call_depth = 100;
    double wall_timeout_s = 60.0;
};

enum class FailureCause : uint8_t {
    EngineError,
    SpecSizeExceeded,
    DepthExceeded,
    Timeout,
    OutOfBudget,
};

const char* failure_cause_name(FailureCause c);

struct ExtractionFailure {
    FailureCause cause;
    std::string detail;
};

/// A parameter the extracted spec ranges over: its position in the checked
/// function's parameter list, plus name and type for rendering.
struct SymParam {
    uint32_t index;
    std::string name;
    Type type;
};

/// What one passing example pinned down about the checked function: the
/// branch decisions its inputs forced (pc, a conjunction that is true exactly
/// on inputs following the same path) and the outcome along that path, as an
/// expression over the parameters or as a raised error kind.
struct PathSpec {
    const ml::FunctionDecl* mut = nullptr;
    std::vector<interp::Value> concrete_inputs;  ///< Seed arguments, one per parameter.
    std::vector<SymParam> symbolic_params;       ///< The int/bool parameters, by index.
    std::vector<sym::SymPtr> pc;                 ///< Bool-typed conjuncts in decision order.

    bool error_outcome = false;
    sym::SymPtr outcome;                         ///< Returned value; null when error_outcome.
    interp::ErrorKind error_kind{};              ///< Raised error; valid when error_outcome.

    /// The concrete result the seed produced: mirrors the outcome (a value
    /// for a normal return, the same error kind for a raised error).
    interp::Value concrete_value;

    /// Rendered pc joined with " && "; "true" when the pc is empty.
    std::string rendered_pc() const;
};

struct Extraction {
    std::optional<PathSpec> spec;
    std::optional<ExtractionFailure> failure;
    bool ok() const { return spec.has_value(); }
};

/// Replays the target's test with the checked call's int/bool arguments
/// shadowed by parameter symbols, recording each branch decision taken inside
/// that call (including calls it makes) as a conjunct: the guard's expression
/// when taken, its negation when not. Short-circuit operands record
/// individually; decisions that do not depend on any parameter are skipped,
/// since generated inputs pin all other values to the seed. The outcome is
/// the returned value's expression, or the raised error kind for
/// assert_throws targets.
Extraction extract_spec(const ml::Program& program, const analyzer::Target& target,
                        const ExtractionLimits& limits = {});

/// Result of evaluating a symbolic expression under an assignment.
struct SymValue {
    bool ok = false;
    interp::Value value;           ///< Valid when ok.
    interp::ErrorKind error{};     ///< Valid when not ok.
};

/// Evaluates `e` with each parameter bound to `by_index[param.index]`, using
/// the interpreter itself (the expression is rendered, parsed, and run), so
/// wrapping, truncation, and error semantics match concrete execution
/// exactly. Runtime errors (division by zero and the like) come back as the
/// error kind.
SymValue eval_sym(const sym::SymPtr& e, const std::vector<SymParam>& params,
                  const std::vector<interp::Value>& by_index);

}  // namespace teraliz::concolic

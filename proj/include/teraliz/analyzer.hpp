#pragma once

#include <string>
#include <vector>

#include "teraliz/ast.hpp"
#include "teraliz/interp.hpp"

namespace teraliz::analyzer {

/// An assertion that survived every filter: it asserts on the value (or
/// error) of one resolvable implementation call with at least one int/bool
/// parameter, inside a plain passing #[test].
struct Target {
    std::string test_name;
    int assertion_index = 0;  ///< 0-based over the test's assertions in source order.
    const ml::SourceFile* test_file = nullptr;
    const ml::FunctionDecl* test_fn = nullptr;
    const ml::Stmt* assertion = nullptr;
    const ml::Expr* actual = nullptr;     ///< The asserted expression; null for assert_throws.
    const ml::Expr* mut_call = nullptr;   ///< Call whose function is generalized.
    const ml::FunctionDecl* mut = nullptr;
    std::vector<uint32_t> gen_params;     ///< Indices of mut's int/bool parameters.
    bool throws = false;                  ///< Target is an assert_throws.

    std::string id() const { return test_name + "#" + std::to_string(assertion_index); }
};

struct Rejection {
    std::string test_name;
    int assertion_index = -1;  ///< -1 when a whole test was rejected.
    std::string filter;        ///< test_type, non_passing_test, no_assertions,
                               ///< assertion_type, excluded_test, missing_value,
                               ///< parameter_type, return_type
    std::string detail;

    std::string id() const {
        return assertion_index < 0 ? test_name
                                   : test_name + "#" + std::to_string(assertion_index);
    }
};

struct Config {
    /// Entries match a test name ("testFoo") or one assertion ("testFoo#1").
    std::vector<std::string> excluded;
};

struct Analysis {
    std::vector<Target> targets;
    std::vector<Rejection> rejections;
    interp::SuiteResult suite;  ///< The example-suite run used by the filters.
};

/// All assert statements of a test body in source order, recursing into
/// if/while blocks. assert_throws blocks are not entered: their contents
/// belong to the throws assertion itself.
std::vector<const ml::Stmt*> assertions_of(const ml::FunctionDecl& test);

struct MutResolution {
    const ml::Expr* call = nullptr;
    const ml::FunctionDecl* fn = nullptr;
    const ml::Expr* actual = nullptr;
    std::string failure;  ///< Empty on success.
};

/// Finds the implementation call an assertion checks. assert_eq uses its
/// second argument, assert_true/false their only argument: a direct call, or
/// a variable with exactly one reaching definition whose right-hand side is a
/// direct implementation call. assert_throws takes the last implementation
/// call in evaluation order inside its block.
MutResolution resolve_mut(const ml::Program& prog, const ml::FunctionDecl& test,
                          const ml::Stmt& assertion);

/// Every assert form carries a checkable outcome here, so this never rejects;
/// it exists so the filter chain stays complete and testable.
bool assertion_type_accepts(ml::AssertKind kind);

/// Indices of the parameters a generator can drive: int and bool ones.
std::vector<uint32_t> generalizable_params(const ml::FunctionDecl& fn);

/// Why a resolved function's return type blocks generalization ("'f' returns
/// str"), or empty if it does not. assert_throws targets are exempt: their
/// observable outcome is the raised error.
std::string return_type_objection(const ml::FunctionDecl& mut, bool throws);

/// Runs the filter chain over every annotated test. `suite` supplies the
/// example-suite results for the non-passing-test filter; when null the suite
/// is run internally with default limits.
Analysis analyze(const ml::Program& prog, const Config& cfg = {},
                 const interp::SuiteResult* suite = nullptr);

}  // namespace teraliz::analyzer

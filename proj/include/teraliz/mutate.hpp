#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "teraliz/ast.hpp"
#include "teraliz/gen.hpp"
#include "teraliz/interp.hpp"

namespace teraliz::mutate {

/// PIT's DEFAULTS mutator group, minus null-returning operators (MiniLang has
/// no null). Order here is the application order within one statement.
enum class MutOp : uint8_t {
    Math,
    Increments,
    InvertNegs,
    BooleanTrueReturnVals,
    BooleanFalseReturnVals,
    PrimitiveReturns,
    EmptyObjectReturnVals,
    RemoveConditionalEqualElse,
    RemoveConditionalOrderElse,
    ConditionalsBoundary,
    VoidMethodCall,
};

const char* mut_op_name(MutOp op);

struct Mutant {
    std::string id;           ///< "m<N>", N global across the enumeration.
    MutOp op;
    std::string file;         ///< Path of the implementation file.
    uint32_t ordinal = 0;     ///< Position within that file's enumeration.
    Span span;                ///< The mutated node.
    Span stmt_span;           ///< The statement hosting the node (coverage key).
    std::string description;  ///< "before -> after" in source form.
};

/// Walks every implementation file of a linked program: files in path order,
/// functions in declaration order, statements in source order (an if before
/// its blocks), operators in MutOp order within one statement, expression
/// nodes in preorder within one operator. Mutations identical to the original
/// (forcing `return 0` onto `return 0`) are suppressed.
std::vector<Mutant> enumerate_mutants(const ml::Program& program);

/// A fresh program with `m` applied: the target file is re-parsed, patched at
/// the recorded ordinal, and the whole set relinked (which re-typechecks,
/// guarding the mutant-validity invariant).
ml::Program apply_mutant(const ml::Program& program, const Mutant& m);

/// One runnable member of a mutation-testing suite: either an original test
/// function (by name, looked up in each patched program) or a generalized
/// test driven from its emitted source.
struct TestCase {
    std::string name;
    bool is_property = false;
    const gen::GeneralizedTest* gt = nullptr;  ///< Set when is_property.
    const std::string* gt_source = nullptr;    ///< Emitted text, same lifetime.
};

enum class Cell : uint8_t { Killed, Survived, TimedOut, NotCovered };

const char* cell_name(Cell c);

/// Killed either way; TimedOut is the infinite-loop flavor.
inline bool cell_kills(Cell c) { return c == Cell::Killed || c == Cell::TimedOut; }

struct KillMatrix {
    std::vector<std::string> mutant_ids;
    std::vector<std::string> test_names;
    std::vector<std::vector<Cell>> cells;  ///< [mutant][test]

    bool mutant_killed(size_t mi) const;
    /// Indices of mutants this test kills.
    std::vector<size_t> kills_of(size_t test_idx) const;
};

struct MutantStatus {
    Mutant mutant;
    Cell status = Cell::NotCovered;  ///< Suite-level: Killed > TimedOut > Survived > NotCovered.
};

struct MutationOutcome {
    KillMatrix matrix;
    std::vector<MutantStatus> rows;             ///< Enumeration order.
    std::vector<std::pair<std::string, std::vector<std::string>>>
        per_test_kills;                         ///< Suite order, mutant ids.
    double score = 1.0;                         ///< killed / total; 1.0 when no mutants.
    bool empty_enumeration = false;
    uint64_t total_steps = 0;                   ///< Interpreter steps across all cells.
};

/// A supplied test does not pass on the unmutated program.
struct NotGreenError : std::runtime_error {
    std::string test;
    explicit NotGreenError(std::string test_name, const std::string& detail)
        : std::runtime_error("test '" + test_name + "' is not green on the unmutated program: " +
                             detail),
          test(std::move(test_name)) {}
};

/// A run was cut short by MutationOptions::abort_requested. Nothing partial
/// is returned: results either cover every mutant or do not exist.
struct AbortedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MutationOptions {
    uint64_t min_budget = 10'000;    ///< Per (mutant, test) step floor.
    uint64_t budget_factor = 4;      ///< Times the test's unmutated step count.
    int jobs = 1;                    ///< Parallelism across mutants.
    gen::RunOptions property_opts;   ///< Generation knobs for property tests.

    /// Polled between mutant measurements (never mid-execution); returning
    /// true makes the run stop and throw AbortedError.
    std::function<bool()> abort_requested;
};

/// Measures every test against every mutant. Each test first runs on the
/// unmutated program (throwing NotGreenError on anything but a pass), which
/// fixes its step budget and its statement coverage; uncovered mutants are
/// recorded NotCovered without execution. Results are deterministic and
/// independent of `jobs`.
MutationOutcome run_mutation_testing(const ml::Program& program,
                                     const std::vector<TestCase>& suite,
                                     const std::vector<Mutant>& mutants,
                                     const MutationOptions& opts = {});

}  // namespace teraliz::mutate

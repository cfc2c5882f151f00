#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "teraliz/analyzer.hpp"
#include "teraliz/concolic.hpp"
#include "teraliz/interp.hpp"

namespace teraliz::gen {

/// One side of an encoded bound: a constant, or a reference to an
/// earlier-generated parameter. `offset` carries the +-1 that turned a strict
/// comparison inclusive; it is applied with saturation when the reference is
/// resolved (constants get it baked in up front).
struct Term {
    bool is_param = false;
    uint32_t pos = 0;     ///< Generation position of the referenced parameter.
    int32_t konst = 0;    ///< The constant when not a reference (bools as 0/1).
    int32_t offset = 0;
};

/// Constraints harvested for one parameter. The first equality pins the
/// value outright; otherwise the tightest resolved lower/upper bounds apply.
struct ParamPlan {
    Type type = Type::Int32;
    std::vector<Term> eq;
    std::vector<Term> lo;  ///< Inclusive lower bounds.
    std::vector<Term> hi;  ///< Inclusive upper bounds.
};

/// The path condition split into bounds a generator can honor directly and a
/// residual left to the post-draw filter. A conjunct is encodable when it has
/// the shape `p OP q` with OP one of ==, <, <=, >, >= and both sides a
/// parameter or a constant; it attaches to the later-generated side with the
/// comparison rewritten to match. Everything else (negations, !=, compound
/// arithmetic) is residual. The filter still checks the full condition, so
/// encoding is purely an aid to generation.
struct EncodedPlan {
    std::vector<ParamPlan> params;      ///< By generation (declaration) position.
    std::vector<sym::SymPtr> encoded;
    std::vector<sym::SymPtr> residual;
};

EncodedPlan build_plan(const concolic::PathSpec& spec);

/// Deterministic splitmix64 stream; cheap to seed and to fork per test.
class SplitMix64 {
  public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}
    uint64_t next();
    /// Unbiased draw in [0, bound) via rejection.
    uint64_t below(uint64_t bound);
    /// Uniform draw in [lo, hi], inclusive.
    int32_t int_in(int32_t lo, int32_t hi);
    /// True with probability percent/100.
    bool chance(uint32_t percent) { return below(100) < percent; }

  private:
    uint64_t state_;
};

/// Values for the generalizable parameters, in generation order.
using InputTuple = std::vector<interp::Value>;

struct GeneralizedTest {
    std::string id;         ///< "<test>#<assertion>@<variant>", e.g. "testCalc#0@naive_50".
    std::string prop_name;  ///< Name of the emitted property function.
    const analyzer::Target* target = nullptr;  ///< Null in file-driven mode.
    concolic::PathSpec spec;
    SupplierKind kind = SupplierKind::Baseline;
    int tries = 1;
    InputTuple seed_inputs;
    uint64_t rng_seed = 0;
};

/// RNG stream for one property test, derived from the pipeline seed and the
/// test's id so runs are reproducible and tests stay independent.
uint64_t gt_stream_seed(uint64_t pipeline_seed, const std::string& id);

/// Builds the descriptor for one (target, spec, supplier, tries) cell.
/// Baseline always runs exactly once, whatever tries is asked for.
GeneralizedTest make_gt(const analyzer::Target& target, concolic::PathSpec spec,
                        SupplierKind kind, int tries, uint64_t pipeline_seed,
                        const std::string& variant);

/// Candidate inputs for the given step. Step 0 is always the seed, for every
/// kind. Improved walks boundary combinations deterministically for steps
/// 1..E (E capped at 64) and then falls back to constraint-honoring random
/// draws; Naive draws magnitude-stratified randoms; Baseline has no steps
/// past 0. Empty when the resolved bounds cross (a filter miss; the whole
/// tuple is redrawn).
std::optional<InputTuple> generate_candidate(const GeneralizedTest& gt, const EncodedPlan& plan,
                                             uint64_t step, SplitMix64& rng);

/// True iff every path-condition conjunct evaluates to true at the tuple; a
/// runtime error during evaluation counts as false.
bool satisfies_input_spec(const concolic::PathSpec& spec, const InputTuple& tuple);

enum class PropStatus : uint8_t { Passed, Failed, TooManyFilterMisses, Errored };

const char* prop_status_name(PropStatus s);

struct PropertyOutcome {
    PropStatus status = PropStatus::Passed;
    InputTuple counterexample;  ///< Failed only.
    InputTuple shrunk;          ///< Failed only; the reduced counterexample.
    std::string message;        ///< Failure or error detail.
    int tried = 0;              ///< Accepted tuples executed, seed included.
    int misses = 0;             ///< Rejected candidates (filter or crossed bounds).
    uint64_t steps = 0;         ///< Interpreter steps across all trials and shrinks.
    bool out_of_budget = false; ///< An execution hit its step limit (Errored).
};

/// Rendered source of the standalone property-test file: the transformed test
/// (other assertions dropped, checked-call arguments parameterized), the
/// input-spec predicate, the oracle (or expected-error kind), the recorded
/// seed, and any test-file helpers the body still calls. Fails when a
/// rendered predicate or oracle body exceeds 65535 characters.
struct EmitResult {
    bool ok = false;
    std::string source;
    std::string error;
};

EmitResult emit_generalized_source(const GeneralizedTest& gt);

struct RunOptions {
    int discard_ratio = 5;            ///< Miss budget = tries * discard_ratio.
    interp::RunLimits trial_limits;   ///< Per-trial execution limits.
    uint64_t max_total_steps = 0;     ///< Across all trials; 0 = no cap.
    interp::Hooks* observer = nullptr;  ///< Sees every trial execution (coverage etc).
};

/// Runs the property test against the implementation files of `program`. The
/// generalized source is compiled and driven in memory: the seed first, then
/// accepted candidates until `tries` executions or the miss budget runs dry.
/// Failures shrink coordinate-wise toward zero. `source` overrides the
/// emitted text when given (file-driven mode).
PropertyOutcome run_property(const ml::Program& program, const GeneralizedTest& gt,
                             const std::string* source = nullptr, const RunOptions& opts = {});

/// Rebuilds a GeneralizedTest from an emitted file's text for file-driven
/// re-execution: supplier, tries, seeds, input-spec conjuncts, and the
/// outcome are read back out of the generated functions. Throws ParseError /
/// TypeError / std::runtime_error when the text is not a generalized test.
GeneralizedTest load_gt_source(const std::string& source, uint64_t pipeline_seed);

}  // namespace teraliz::gen

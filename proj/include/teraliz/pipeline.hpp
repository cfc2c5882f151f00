#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "teraliz/concolic.hpp"

namespace teraliz::pipeline {

/// One invocation's knobs. Defaults are the shipped configuration; everything
/// that influences results is recorded in the run's metadata file.
struct Config {
    std::string project_dir;  ///< Contains src/ and tests/ with .ml files.

    /// Which generation strategies to run. `baseline` replays only the
    /// recorded seed; the other two draw `tries` inputs per test.
    std::vector<std::string> suppliers = {"baseline", "naive", "improved"};
    std::vector<int> tries_list = {10, 50, 200};  ///< Nonempty, ascending.

    int discard_ratio = 5;   ///< Filter-miss budget = tries * discard_ratio.
    uint64_t rng_seed = 0;   ///< Pipeline seed; each test derives its own stream.

    concolic::ExtractionLimits extraction;

    double suite_timeout_s = 60.0;      ///< Wall clock for the example-suite stage.
    double mutation_timeout_s = 300.0;  ///< Wall clock per mutation matrix.

    /// Generation constants baked into the input supplier, echoed into the
    /// metadata file so a report is self-describing.
    double edge_bias = 0.25;
    int edge_enum_cap = 64;

    int jobs = 1;          ///< Parallelism across mutants and property runs.
    std::string out_root;  ///< Holds reports/ and generalized/; project_dir when empty.
};

/// Human-readable objection when the config violates an invariant (unknown
/// supplier, empty or non-ascending tries list, ...); empty when valid.
std::string validate_config(const Config& cfg);

inline constexpr int kExitOk = 0;              ///< Completed, nothing excluded.
inline constexpr int kExitExclusions = 2;      ///< Completed, some tests/assertions excluded.
inline constexpr int kExitProjectExcluded = 3; ///< Nothing to do: no tests, all excluded, timeout.
inline constexpr int kExitMissingPrereq = 4;   ///< A stage subcommand lacks its input report.

/// One row of the printed summary table.
struct VariantSummary {
    std::string variant;
    int tests_before = 0;
    int tests_after = 0;
    int loc_before = 0;
    int loc_after = 0;
    double score_before = 1.0;
    double score_after = 1.0;
    bool excluded = false;  ///< The variant's mutation run hit its wall timeout.
    std::string cause;
};

struct PipelineReport {
    int exit_code = 0;
    int exclusions = 0;  ///< Rejected tests/assertions, failed extractions, non-green
                         ///< generalized tests, timed-out variants.
    std::string cause;   ///< Set when exit_code is 3.
    std::vector<VariantSummary> summaries;
};

/// The whole transformation: runs the example suite, filters assertions,
/// extracts input/output specifications, generates and checks property tests
/// per variant, measures kill matrices, and reduces each variant's suite.
/// Writes the report tree under the output root and prints a summary table.
PipelineReport run_pipeline(const Config& cfg, std::ostream& out);

/// Stage subcommands. Each verifies the previous stage's report exists
/// (returning kExitMissingPrereq otherwise), produces its own reports, and
/// returns the process exit code. `cmd_test` runs emitted generalized test
/// files against the project's unmutated implementation.
int cmd_analyze(const Config& cfg, std::ostream& out);
int cmd_extract(const Config& cfg, std::ostream& out);
int cmd_generalize(const Config& cfg, std::ostream& out);
int cmd_mutate(const Config& cfg, std::ostream& out);
int cmd_reduce(const Config& cfg, std::ostream& out);
int cmd_test(const Config& cfg, const std::vector<std::string>& files, std::ostream& out);

}  // namespace teraliz::pipeline

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "teraliz/mutate.hpp"

namespace teraliz::reduce {

/// Outcome of generalizing one assertion of one original test: whether the
/// generalized test ran green on the unmutated program. For green tests
/// gt_id doubles as the column name in the variant kill matrix.
struct GenRecord {
    std::string test_name;
    int assertion_index = 0;
    std::string gt_id;
    bool passed = false;
};

/// The two matrices disagree about mutants or suite membership.
struct MatrixMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RetainedTest {
    std::string gt_id;
    std::vector<std::string> new_kills;  ///< Mutants no original test kills.
};

struct ReductionDecision {
    std::vector<RetainedTest> retained;          ///< (test, assertion) order.
    std::vector<std::string> originals_removed;  ///< Original-suite order.
    std::vector<std::string> final_suite;        ///< Originals, then generalized.
    double score_before = 0.0;                   ///< Original suite.
    double score_after = 0.0;                    ///< Final suite; never lower.
    std::vector<std::string> new_kills;          ///< Union, enumeration order.
};

/// Decides the final suite for one variant.
///
/// A generalized test is retained when it kills a mutant the whole original
/// suite misses and at least one of those kills is unique among the retained
/// (ties keep the earliest assertion). An original is removed when every one
/// of its assertions has a green generalization on record and dropping it
/// provably loses no kills against the suite that remains; candidates are
/// tried in original-suite order, each seeing the removals before it. Both
/// rules together keep the final kill set a superset of the original one.
///
/// `original` covers the example suite alone; `variant` covers the example
/// suite plus every green generalized test of this variant. Throws
/// MatrixMismatchError when the matrices enumerate different mutants, the
/// variant matrix lacks an original column, or a variant column has no
/// generalization record. Tests missing from `assertions_per_test` are never
/// removed.
ReductionDecision reduce_suite(const mutate::KillMatrix& original, const mutate::KillMatrix& variant,
                         const std::vector<GenRecord>& records,
                         const std::map<std::string, size_t>& assertions_per_test);

}  // namespace teraliz::reduce

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <climits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "teraliz/analyzer.hpp"
#include "teraliz/concolic.hpp"
#include "teraliz/gen.hpp"
#include "teraliz/parse.hpp"
#include "teraliz/pretty.hpp"

using namespace teraliz;
using namespace teraliz::ml;
using namespace teraliz::interp;
using namespace teraliz::gen;

namespace {

sym::SymPtr P(uint32_t i, const char* n) { return sym::sym_param(i, n, Type::Int32); }
sym::SymPtr PB(uint32_t i, const char* n) { return sym::sym_param(i, n, Type::Bool); }
sym::SymPtr C(int32_t v) { return sym::sym_int(v); }
sym::SymPtr Bx(BinaryOp op, sym::SymPtr a, sym::SymPtr b) {
    return sym::sym_binary(op, std::move(a), std::move(b));
}

concolic::PathSpec spec_of(std::vector<concolic::SymParam> params,
                           std::vector<sym::SymPtr> pc) {
    concolic::PathSpec s;
    uint32_t arity = 0;
    for (const concolic::SymParam& p : params) arity = std::max(arity, p.index + 1);
    s.concrete_inputs.resize(arity);
    s.symbolic_params = std::move(params);
    s.pc = std::move(pc);
    s.outcome = C(0);
    return s;
}

GeneralizedTest synthetic_gt(concolic::PathSpec spec, SupplierKind kind, int tries,
                             InputTuple seeds, uint64_t rng_seed = 1) {
    GeneralizedTest gt;
    gt.id = "synthetic#0@test";
    gt.prop_name = "synthetic__a0";
    gt.kind = kind;
    gt.tries = tries;
    gt.seed_inputs = std::move(seeds);
    gt.rng_seed = rng_seed;
    gt.spec = std::move(spec);
    return gt;
}

struct Pipe {
    Program prog;
    analyzer::Analysis an;
    std::vector<concolic::PathSpec> specs;  // one per target, same order
};

Pipe pipe_of(const std::string& impl, const std::string& tests) {
    Pipe p;
    std::vector<SourceFile> files;
    files.push_back(parse_file(impl, "src/m.ml", FileKind::Impl));
    files.push_back(parse_file(tests, "tests/t.ml", FileKind::Test));
    p.prog = link(std::move(files));
    p.an = analyzer::analyze(p.prog);
    for (const analyzer::Target& t : p.an.targets) {
        concolic::Extraction ex = concolic::extract_spec(p.prog, t);
        REQUIRE(ex.ok());
        p.specs.push_back(*ex.spec);
    }
    return p;
}

Program impl_only(const std::string& impl) {
    return link_files(parse_file(impl, "src/m.ml", FileKind::Impl));
}

const std::string kCalc =
    "fn calculate(sales: int, target: int) -> int {\n"
    "    if sales / 2 >= target {\n"
    "        return sales / 10;\n"
    "    }\n"
    "    if sales >= target {\n"
    "        return sales / 20;\n"
    "    }\n"
    "    return 0;\n"
    "}\n";

const std::string kCalcTests =
    "#[test]\n"
    "fn testCalculate() -> void {\n"
    "    assert_eq(250, calculate(2500, 1000));\n"
    "    assert_eq(75, calculate(1500, 1000));\n"
    "    assert_eq(0, calculate(500, 1000));\n"
    "}\n";

const std::string kAbs =
    "fn abs(x: int) -> int {\n"
    "    if x >= 0 {\n"
    "        return x;\n"
    "    }\n"
    "    return -x;\n"
    "}\n";

const std::string kAbsTest =
    "#[test]\n"
    "fn testAbs() -> void {\n"
    "    assert_eq(0, abs(0));\n"
    "}\n";

// abs with its guard knocked out, the way a remove-conditional mutation does.
const std::string kAbsMutant =
    "fn abs(x: int) -> int {\n"
    "    if false {\n"
    "        return x;\n"
    "    }\n"
    "    return -x;\n"
    "}\n";

const std::string kChain =
    "fn chain3(a: int, b: int, c: int) -> int {\n"
    "    if a == b && b == c {\n"
    "        return a;\n"
    "    }\n"
    "    return 0;\n"
    "}\n";

const std::string kChainTest =
    "#[test]\n"
    "fn testChain() -> void {\n"
    "    assert_eq(7, chain3(7, 7, 7));\n"
    "}\n";

const std::string kQuot =
    "fn quot(a: int, b: int) -> int {\n"
    "    if b == 0 {\n"
    "        return a / 0;\n"
    "    }\n"
    "    return a / b;\n"
    "}\n";

const std::string kQuotTest =
    "#[test]\n"
    "fn testQuotZero() -> void {\n"
    "    assert_throws {\n"
    "        let r = quot(7, 0);\n"
    "    }\n"
    "}\n";

bool tuples_equal(const InputTuple& a, const InputTuple& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!a[i].same(b[i])) return false;
    return true;
}

std::string show_tuple(const InputTuple& t) {
    std::string s = "(";
    for (size_t i = 0; i < t.size(); ++i) {
        if (i) s += ", ";
        s += t[i].show();
    }
    return s + ")";
}

size_t count_of(const std::string& hay, const std::string& needle) {
    size_t n = 0;
    for (size_t at = hay.find(needle); at != std::string::npos;
         at = hay.find(needle, at + needle.size()))
        ++n;
    return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Random stream

TEST_CASE("splitmix stream is deterministic and draws stay in range") {
    SplitMix64 a(42), b(42);
    for (int i = 0; i < 32; ++i) CHECK(a.next() == b.next());

    SplitMix64 r(7);
    CHECK(r.below(1) == 0);
    CHECK(r.int_in(5, 5) == 5);
    for (int i = 0; i < 500; ++i) {
        int32_t v = r.int_in(-3, 3);
        CHECK(v >= -3);
        CHECK(v <= 3);
    }
    for (int i = 0; i < 200; ++i) {
        int32_t v = r.int_in(INT32_MIN, INT32_MAX);
        (void)v;  // any value is in range by type; the call must not hang
    }
    int heads = 0;
    for (int i = 0; i < 1000; ++i) heads += r.chance(50) ? 1 : 0;
    CHECK(heads > 400);
    CHECK(heads < 600);
}

TEST_CASE("property streams derive from pipeline seed and id") {
    CHECK(gt_stream_seed(0, "t#0@baseline") == gt_stream_seed(0, "t#0@baseline"));
    CHECK(gt_stream_seed(0, "t#0@baseline") != gt_stream_seed(0, "t#1@baseline"));
    CHECK(gt_stream_seed(0, "t#0@baseline") != gt_stream_seed(1, "t#0@baseline"));
}

// ---------------------------------------------------------------------------
// Constraint encoding

TEST_CASE("circular pair encodes as a two-sided bound on the later parameter") {
    auto spec = spec_of({{0, "a", Type::Int32}, {1, "b", Type::Int32}},
                        {Bx(BinaryOp::Ge, P(0, "a"), P(1, "b")),
                         Bx(BinaryOp::Ge, P(1, "b"), P(0, "a"))});
    EncodedPlan plan = build_plan(spec);
    REQUIRE(plan.params.size() == 2);
    CHECK(plan.params[0].eq.empty());
    CHECK(plan.params[0].lo.empty());
    CHECK(plan.params[0].hi.empty());
    // a >= b attaches to b as b <= a; b >= a attaches to b as b >= a.
    REQUIRE(plan.params[1].hi.size() == 1);
    CHECK(plan.params[1].hi[0].is_param);
    CHECK(plan.params[1].hi[0].pos == 0);
    CHECK(plan.params[1].hi[0].offset == 0);
    REQUIRE(plan.params[1].lo.size() == 1);
    CHECK(plan.params[1].lo[0].is_param);
    CHECK(plan.params[1].lo[0].pos == 0);
    CHECK(plan.encoded.size() == 2);
    CHECK(plan.residual.empty());
}

TEST_CASE("sales >= target attaches an upper bound to the later-generated side") {
    auto spec = spec_of({{0, "sales", Type::Int32}, {1, "target", Type::Int32}},
                        {Bx(BinaryOp::Ge, P(0, "sales"), P(1, "target"))});
    EncodedPlan plan = build_plan(spec);
    CHECK(plan.params[0].lo.empty());
    CHECK(plan.params[0].hi.empty());
    REQUIRE(plan.params[1].hi.size() == 1);
    CHECK(plan.params[1].hi[0].is_param);
    CHECK(plan.params[1].hi[0].pos == 0);
}

TEST_CASE("constant interval becomes inclusive bounds with empty residual") {
    auto spec = spec_of({{0, "x", Type::Int32}},
                        {Bx(BinaryOp::Ge, P(0, "x"), C(0)),
                         Bx(BinaryOp::Le, P(0, "x"), C(1000))});
    EncodedPlan plan = build_plan(spec);
    REQUIRE(plan.params[0].lo.size() == 1);
    CHECK_FALSE(plan.params[0].lo[0].is_param);
    CHECK(plan.params[0].lo[0].konst == 0);
    REQUIRE(plan.params[0].hi.size() == 1);
    CHECK(plan.params[0].hi[0].konst == 1000);
    CHECK(plan.residual.empty());
}

TEST_CASE("strict comparisons turn inclusive with a one-off adjustment") {
    auto spec = spec_of({{0, "x", Type::Int32}, {1, "t", Type::Int32}},
                        {Bx(BinaryOp::Gt, P(0, "x"), C(5)),
                         Bx(BinaryOp::Lt, P(0, "x"), P(1, "t"))});
    EncodedPlan plan = build_plan(spec);
    REQUIRE(plan.params[0].lo.size() == 1);
    CHECK(plan.params[0].lo[0].konst == 6);  // x > 5 baked to x >= 6
    // x < t attaches to the later t as t > x, i.e. t >= x + 1.
    REQUIRE(plan.params[1].lo.size() == 1);
    CHECK(plan.params[1].lo[0].is_param);
    CHECK(plan.params[1].lo[0].pos == 0);
    CHECK(plan.params[1].lo[0].offset == 1);
}

TEST_CASE("strict bounds saturate at the type extremes") {
    auto spec = spec_of({{0, "x", Type::Int32}},
                        {Bx(BinaryOp::Lt, P(0, "x"), C(INT32_MIN)),
                         Bx(BinaryOp::Gt, P(0, "x"), C(INT32_MAX))});
    EncodedPlan plan = build_plan(spec);
    CHECK(plan.params[0].hi[0].konst == INT32_MIN);
    CHECK(plan.params[0].lo[0].konst == INT32_MAX);
}

TEST_CASE("equalities pin parameters; boolean constants encode too") {
    auto spec = spec_of({{0, "a", Type::Int32}, {1, "b", Type::Int32}, {2, "f", Type::Bool}},
                        {Bx(BinaryOp::Eq, P(0, "a"), P(1, "b")),
                         Bx(BinaryOp::Eq, PB(2, "f"), sym::sym_bool(true))});
    EncodedPlan plan = build_plan(spec);
    REQUIRE(plan.params[1].eq.size() == 1);
    CHECK(plan.params[1].eq[0].is_param);
    CHECK(plan.params[1].eq[0].pos == 0);
    REQUIRE(plan.params[2].eq.size() == 1);
    CHECK_FALSE(plan.params[2].eq[0].is_param);
    CHECK(plan.params[2].eq[0].konst == 1);
    CHECK(plan.encoded.size() == 2);
}

TEST_CASE("inequations, negations, compounds, and self-comparisons are residual") {
    auto spec = spec_of({{0, "x", Type::Int32}, {1, "f", Type::Bool}},
                        {Bx(BinaryOp::Ne, P(0, "x"), C(0)),
                         sym::sym_unary(UnaryOp::Not, PB(1, "f")),
                         PB(1, "f"),
                         Bx(BinaryOp::Gt, Bx(BinaryOp::Add, P(0, "x"), C(1)), C(0)),
                         Bx(BinaryOp::Eq, Bx(BinaryOp::Mod, P(0, "x"), C(2)), C(0)),
                         Bx(BinaryOp::Le, P(0, "x"), P(0, "x"))});
    EncodedPlan plan = build_plan(spec);
    CHECK(plan.encoded.empty());
    CHECK(plan.residual.size() == 6);
    CHECK(plan.params[0].eq.empty());
    CHECK(plan.params[0].lo.empty());
    CHECK(plan.params[0].hi.empty());
}

// ---------------------------------------------------------------------------
// Candidate generation

TEST_CASE("step zero returns the seed for every supplier kind") {
    auto spec = spec_of({{0, "x", Type::Int32}}, {Bx(BinaryOp::Ge, P(0, "x"), C(0))});
    InputTuple seed = {Value::of_int(57)};
    for (SupplierKind k : {SupplierKind::Baseline, SupplierKind::Naive, SupplierKind::Improved}) {
        GeneralizedTest gt = synthetic_gt(spec, k, 50, seed);
        EncodedPlan plan = build_plan(gt.spec);
        SplitMix64 rng(9);
        std::optional<InputTuple> c = generate_candidate(gt, plan, 0, rng);
        REQUIRE(c.has_value());
        CHECK(tuples_equal(*c, seed));
    }
}

TEST_CASE("baseline has no steps past the seed") {
    auto spec = spec_of({{0, "x", Type::Int32}}, {});
    GeneralizedTest gt = synthetic_gt(spec, SupplierKind::Baseline, 200, {Value::of_int(3)});
    EncodedPlan plan = build_plan(gt.spec);
    SplitMix64 rng(9);
    CHECK_FALSE(generate_candidate(gt, plan, 1, rng).has_value());
    CHECK_FALSE(generate_candidate(gt, plan, 17, rng).has_value());
}

TEST_CASE("improved walks the interval boundary values first") {
    auto spec = spec_of({{0, "x", Type::Int32}},
                        {Bx(BinaryOp::Ge, P(0, "x"), C(0)),
                         Bx(BinaryOp::Le, P(0, "x"), C(1000))});
    GeneralizedTest gt = synthetic_gt(spec, SupplierKind::Improved, 50, {Value::of_int(123)});
    EncodedPlan plan = build_plan(gt.spec);
    SplitMix64 rng(9);
    int32_t expected[4] = {0, 1, 999, 1000};
    for (uint64_t s = 1; s <= 4; ++s) {
        std::optional<InputTuple> c = generate_candidate(gt, plan, s, rng);
        REQUIRE(c.has_value());
        CHECK((*c)[0].i == expected[s - 1]);
    }
    // Past the boundary walk: random draws stay inside the encoded interval.
    for (uint64_t s = 5; s < 200; ++s) {
        std::optional<InputTuple> c = generate_candidate(gt, plan, s, rng);
        REQUIRE(c.has_value());
        CHECK((*c)[0].i >= 0);
        CHECK((*c)[0].i <= 1000);
    }
}

TEST_CASE("boundary walk is independent of the random stream") {
    auto spec = spec_of({{0, "x", Type::Int32}},
                        {Bx(BinaryOp::Ge, P(0, "x"), C(0)),
                         Bx(BinaryOp::Le, P(0, "x"), C(9))});
    GeneralizedTest gt = synthetic_gt(spec, SupplierKind::Improved, 50, {Value::of_int(4)});
    EncodedPlan plan = build_plan(gt.spec);
    SplitMix64 r1(1), r2(999);
    for (uint64_t s = 1; s <= 4; ++s) {
        auto a = generate_candidate(gt, plan, s, r1);
        auto b = generate_candidate(gt, plan, s, r2);
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK(tuples_equal(*a, *b));
    }
}

TEST_CASE("circular pair: boundary leaves then forced equality on random draws") {
    auto spec = spec_of({{0, "a", Type::Int32}, {1, "b", Type::Int32}},
                        {Bx(BinaryOp::Ge, P(0, "a"), P(1, "b")),
                         Bx(BinaryOp::Ge, P(1, "b"), P(0, "a"))});
    GeneralizedTest gt = synthetic_gt(spec, SupplierKind::Improved, 50,
                                      {Value::of_int(5), Value::of_int(5)});
    EncodedPlan plan = build_plan(gt.spec);
    SplitMix64 rng(3);
    // Unconstrained a walks {0, 1, -1}; b resolves to the interval [a, a].
    int32_t expect_a[3] = {0, 1, -1};
    for (uint64_t s = 1; s <= 3; ++s) {
        auto c = generate_candidate(gt, plan, s, rng);
        REQUIRE(c.has_value());
        CHECK((*c)[0].i == expect_a[s - 1]);
        CHECK((*c)[1].i == (*c)[0].i);
    }
    for (uint64_t s = 4; s < 1004; ++s) {
        auto c = generate_candidate(gt, plan, s, rng);
        REQUIRE(c.has_value());
        CHECK((*c)[0].i == (*c)[1].i);
    }
}

TEST_CASE("equality chains resolve through earlier choices; first equality wins") {
    auto spec = spec_of({{0, "a", Type::Int32}, {1, "b", Type::Int32}, {2, "c", Type::Int32}},
                        {Bx(BinaryOp::Eq, P(0, "a"), P(1, "b")),
                         Bx(BinaryOp::Eq, P(1, "b"), P(2, "c"))});
    GeneralizedTest gt = synthetic_gt(spec, SupplierKind::Improved, 50,
                                      {Value::of_int(7), Value::of_int(7), Value::of_int(7)});
    EncodedPlan plan = build_plan(gt.spec);
    SplitMix64 rng(11);
    for (uint64_t s = 1; s < 300; ++s) {
        auto c = generate_candidate(gt, plan, s, rng);
        REQUIRE(c.has_value());
        CHECK((*c)[0].i == (*c)[1].i);
        CHECK((*c)[1].i == (*c)[2].i);
    }

    // Conflicting pins: the first equality drives generation even though the
    // second can then fail post-filter.
    auto conflict = spec_of({{0, "b", Type::Int32}},
                            {Bx(BinaryOp::Eq, P(0, "b"), C(0)),
                             Bx(BinaryOp::Eq, P(0, "b"), C(5))});
    GeneralizedTest gt2 = synthetic_gt(conflict, SupplierKind::Improved, 50, {Value::of_int(0)});
    EncodedPlan plan2 = build_plan(gt2.spec);
    for (uint64_t s = 65; s < 100; ++s) {
        auto c = generate_candidate(gt2, plan2, s, rng);
        REQUIRE(c.has_value());
        CHECK((*c)[0].i == 0);
    }
}

TEST_CASE("crossed resolved bounds abort the tuple") {
    // a < b and b < a attach both bounds to b; any chosen a crosses them.
    auto spec = spec_of({{0, "a", Type::Int32}, {1, "b", Type::Int32}},
                        {Bx(BinaryOp::Lt, P(0, "a"), P(1, "b")),
                         Bx(BinaryOp::Lt, P(1, "b"), P(0, "a"))});
    GeneralizedTest gt = synthetic_gt(spec, SupplierKind::Improved, 50,
                                      {Value::of_int(0), Value::of_int(0)});
    EncodedPlan plan = build_plan(gt.spec);
    SplitMix64 rng(5);
    for (uint64_t s = 1; s < 40; ++s)
        CHECK_FALSE(generate_candidate(gt, plan, s, rng).has_value());
}

TEST_CASE("naive ignores constraints and mixes in extreme values") {
    auto spec = spec_of({{0, "x", Type::Int32}},
                        {Bx(BinaryOp::Ge, P(0, "x"), C(0)),
                         Bx(BinaryOp::Le, P(0, "x"), C(1000))});
    GeneralizedTest gt = synthetic_gt(spec, SupplierKind::Naive, 50, {Value::of_int(4)});
    EncodedPlan plan = build_plan(gt.spec);
    SplitMix64 rng(0);
    bool outside = false, extreme = false;
    for (uint64_t s = 1; s < 200; ++s) {
        auto c = generate_candidate(gt, plan, s, rng);
        REQUIRE(c.has_value());
        int32_t v = (*c)[0].i;
        outside = outside || v < 0 || v > 1000;
        extreme = extreme || v == INT32_MIN || v == INT32_MAX;
    }
    CHECK(outside);
    CHECK(extreme);
}

TEST_CASE("boolean parameters walk both branches and honor pins") {
    auto spec = spec_of({{0, "f", Type::Bool}, {1, "x", Type::Int32}}, {});
    GeneralizedTest gt = synthetic_gt(spec, SupplierKind::Improved, 50,
                                      {Value::of_bool(true), Value::of_int(0)});
    EncodedPlan plan = build_plan(gt.spec);
    SplitMix64 rng(2);
    // First parameter outermost: (false, 0), (false, 1), (false, -1), (true, 0)...
    bool expect_f[6] = {false, false, false, true, true, true};
    int32_t expect_x[6] = {0, 1, -1, 0, 1, -1};
    for (uint64_t s = 1; s <= 6; ++s) {
        auto c = generate_candidate(gt, plan, s, rng);
        REQUIRE(c.has_value());
        CHECK((*c)[0].b == expect_f[s - 1]);
        CHECK((*c)[1].i == expect_x[s - 1]);
    }

    auto pinned = spec_of({{0, "f", Type::Bool}},
                          {Bx(BinaryOp::Eq, PB(0, "f"), sym::sym_bool(true))});
    GeneralizedTest gt2 = synthetic_gt(pinned, SupplierKind::Improved, 50, {Value::of_bool(true)});
    EncodedPlan plan2 = build_plan(gt2.spec);
    for (uint64_t s = 1; s < 50; ++s) {
        auto c = generate_candidate(gt2, plan2, s, rng);
        REQUIRE(c.has_value());
        CHECK((*c)[0].b);
    }
}

TEST_CASE("boundary enumeration caps at 64 leaves") {
    // Four unconstrained parameters give 81 boundary combinations; only the
    // first 64 are walked deterministically.
    auto spec = spec_of({{0, "a", Type::Int32}, {1, "b", Type::Int32},
                         {2, "c", Type::Int32}, {3, "d", Type::Int32}},
                        {});
    GeneralizedTest gt = synthetic_gt(spec, SupplierKind::Improved, 500,
                                      InputTuple(4, Value::of_int(0)));
    EncodedPlan plan = build_plan(gt.spec);
    SplitMix64 r1(1), r2(2);
    for (uint64_t s = 1; s <= 64; ++s) {
        auto a = generate_candidate(gt, plan, s, r1);
        auto b = generate_candidate(gt, plan, s, r2);
        REQUIRE(a.has_value());
        for (const Value& v : *a) CHECK((v.i == 0 || v.i == 1 || v.i == -1));
        CHECK(tuples_equal(*a, *b));
    }
    // Step 65 leaves the walk: two different streams disagree.
    auto a65 = generate_candidate(gt, plan, 65, r1);
    auto b65 = generate_candidate(gt, plan, 65, r2);
    REQUIRE(a65.has_value());
    REQUIRE(b65.has_value());
    CHECK_FALSE(tuples_equal(*a65, *b65));
}

// ---------------------------------------------------------------------------
// Input-spec filtering

TEST_CASE("filter accepts exactly the partition and treats errors as misses") {
    Pipe p = pipe_of(kCalc, kCalcTests);
    REQUIRE(p.an.targets.size() == 3);
    const concolic::PathSpec& good = p.specs[1];  // sales/2 < target, sales >= target
    CHECK(satisfies_input_spec(good, {Value::of_int(1500), Value::of_int(1000)}));
    CHECK_FALSE(satisfies_input_spec(good, {Value::of_int(2500), Value::of_int(1000)}));
    CHECK_FALSE(satisfies_input_spec(good, {Value::of_int(500), Value::of_int(1000)}));

    // A conjunct that faults at the tuple counts as unsatisfied, not as an error.
    auto faulting = spec_of({{0, "a", Type::Int32}, {1, "b", Type::Int32}},
                            {Bx(BinaryOp::Gt, Bx(BinaryOp::Div, P(0, "a"), P(1, "b")), C(2))});
    CHECK_FALSE(satisfies_input_spec(faulting, {Value::of_int(4), Value::of_int(0)}));
    CHECK(satisfies_input_spec(faulting, {Value::of_int(9), Value::of_int(3)}));
}

TEST_CASE("improved random draws satisfy every encoded conjunct before filtering") {
    Pipe p = pipe_of(kCalc, kCalcTests);
    GeneralizedTest gt = make_gt(p.an.targets[1], p.specs[1], SupplierKind::Improved, 200, 0,
                                 "improved_200");
    EncodedPlan plan = build_plan(gt.spec);
    REQUIRE(plan.encoded.size() == 1);   // sales >= target
    REQUIRE(plan.residual.size() == 1);  // sales / 2 < target
    SplitMix64 rng(gt.rng_seed);
    uint32_t arity = 2;
    int checked = 0;
    for (uint64_t s = 65; s < 1065; ++s) {
        auto c = generate_candidate(gt, plan, s, rng);
        if (!c) continue;
        std::vector<Value> by_index(arity);
        for (size_t i = 0; i < gt.spec.symbolic_params.size(); ++i)
            by_index[gt.spec.symbolic_params[i].index] = (*c)[i];
        for (const sym::SymPtr& conj : plan.encoded) {
            concolic::SymValue v = concolic::eval_sym(conj, gt.spec.symbolic_params, by_index);
            REQUIRE(v.ok);
            CHECK(v.value.b);
        }
        ++checked;
    }
    CHECK(checked == 1000);
}

// ---------------------------------------------------------------------------
// Descriptors

TEST_CASE("make_gt derives ids, seeds, and forces baseline to one try") {
    Pipe p = pipe_of(kCalc, kCalcTests);
    GeneralizedTest gt = make_gt(p.an.targets[1], p.specs[1], SupplierKind::Baseline, 200, 0,
                                 "baseline");
    CHECK(gt.id == "testCalculate#1@baseline");
    CHECK(gt.prop_name == "testCalculate__a1");
    CHECK(gt.tries == 1);
    REQUIRE(gt.seed_inputs.size() == 2);
    CHECK(gt.seed_inputs[0].i == 1500);
    CHECK(gt.seed_inputs[1].i == 1000);
    CHECK(gt.rng_seed == gt_stream_seed(0, "testCalculate#1@baseline"));

    GeneralizedTest gt2 = make_gt(p.an.targets[1], p.specs[1], SupplierKind::Naive, 50, 0,
                                  "naive_50");
    CHECK(gt2.id == "testCalculate#1@naive_50");
    CHECK(gt2.tries == 50);
    CHECK(gt2.rng_seed != gt.rng_seed);
}

TEST_CASE("seeds skip non-generalizable positions") {
    Pipe p = pipe_of(
        "fn pick(tag: str, n: int) -> int {\n"
        "    if n > 0 {\n"
        "        return n;\n"
        "    }\n"
        "    return 0;\n"
        "}\n",
        "#[test]\nfn testPick() -> void {\n    assert_eq(5, pick(\"k\", 5));\n}\n");
    REQUIRE(p.an.targets.size() == 1);
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Improved, 20, 0,
                                 "improved_20");
    REQUIRE(gt.seed_inputs.size() == 1);
    CHECK(gt.seed_inputs[0].i == 5);
    PropertyOutcome out = run_property(p.prog, gt);
    CHECK(out.status == PropStatus::Passed);
    CHECK(out.tried == 20);
}

// ---------------------------------------------------------------------------
// Emission

TEST_CASE("emitted file carries the transformed test, predicate, oracle, and seed") {
    Pipe p = pipe_of(kCalc, kCalcTests);
    GeneralizedTest gt = make_gt(p.an.targets[1], p.specs[1], SupplierKind::Baseline, 1, 0,
                                 "baseline");
    EmitResult em = emit_generalized_source(gt);
    REQUIRE(em.ok);
    const std::string& src = em.source;
    CHECK(src.find("#[property(supplier=baseline, tries=1)]") != std::string::npos);
    CHECK(src.find("fn testCalculate__a1(_p_sales: int, _p_target: int) -> void {") !=
          std::string::npos);
    CHECK(src.find("assert_eq(testCalculate__a1_oracle(_p_sales, _p_target), "
                   "calculate(_p_sales, _p_target));") != std::string::npos);
    CHECK(src.find("return _p_sales / 2 < _p_target && _p_sales >= _p_target;") !=
          std::string::npos);
    CHECK(src.find("return _p_sales / 20;") != std::string::npos);
    CHECK(src.find("fn testCalculate__a1_seed_sales() -> int {\n    return 1500;\n}") !=
          std::string::npos);
    CHECK(src.find("fn testCalculate__a1_seed_target() -> int {\n    return 1000;\n}") !=
          std::string::npos);
    // The two sibling assertions are gone: one assert in the whole file.
    CHECK(count_of(src, "assert_") == 1);
    // The emitted text re-parses as a test file.
    CHECK_NOTHROW(parse_file(src, "generalized/x.ml", FileKind::Test));
}

TEST_CASE("throws targets keep the assert_throws form and name the expected error") {
    Pipe p = pipe_of(kQuot, kQuotTest);
    REQUIRE(p.an.targets.size() == 1);
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Improved, 20, 0,
                                 "improved_20");
    EmitResult em = emit_generalized_source(gt);
    REQUIRE(em.ok);
    CHECK(em.source.find("assert_throws {") != std::string::npos);
    CHECK(em.source.find("quot(_p_a, _p_b)") != std::string::npos);
    CHECK(em.source.find("fn testQuotZero__a0_expected_error() -> str {\n    return "
                         "\"div_by_zero\";\n}") != std::string::npos);
    CHECK(em.source.find("_oracle") == std::string::npos);
    CHECK(em.source.find("return _p_b == 0;") != std::string::npos);
}

TEST_CASE("non-generalizable arguments keep their original expressions") {
    Pipe p = pipe_of(
        "fn pick(tag: str, n: int) -> int {\n"
        "    if n > 0 {\n"
        "        return n;\n"
        "    }\n"
        "    return 0;\n"
        "}\n",
        "#[test]\nfn testPick() -> void {\n    assert_eq(5, pick(\"k\", 5));\n}\n");
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Baseline, 1, 0,
                                 "baseline");
    EmitResult em = emit_generalized_source(gt);
    REQUIRE(em.ok);
    CHECK(em.source.find("pick(\"k\", _p_n)") != std::string::npos);
}

TEST_CASE("test-file helpers are copied transitively into the emitted file") {
    Pipe p = pipe_of(
        "fn pick(tag: str, n: int) -> int {\n"
        "    if n > 0 {\n"
        "        return n;\n"
        "    }\n"
        "    return 0;\n"
        "}\n",
        "fn noise() -> int {\n"
        "    return seed_two();\n"
        "}\n"
        "fn seed_two() -> int {\n"
        "    return 2;\n"
        "}\n"
        "#[test]\n"
        "fn testHelper() -> void {\n"
        "    let w = noise();\n"
        "    assert_eq(5, pick(\"k\", 5));\n"
        "    assert_eq(2, w);\n"
        "}\n");
    REQUIRE(p.an.targets.size() == 1);  // the w-assertion resolves to no impl call
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Baseline, 1, 0,
                                 "baseline");
    EmitResult em = emit_generalized_source(gt);
    REQUIRE(em.ok);
    CHECK(em.source.find("fn noise() -> int {") != std::string::npos);
    CHECK(em.source.find("fn seed_two() -> int {") != std::string::npos);
    CHECK(count_of(em.source, "assert_") == 1);
    PropertyOutcome out = run_property(p.prog, gt);
    CHECK(out.status == PropStatus::Passed);
}

TEST_CASE("an oversized rendered predicate refuses to emit") {
    // Chain x + x + ... until the rendered form clears the cap.
    sym::SymPtr big = P(0, "x");
    while (big->render_len <= 70000) big = Bx(BinaryOp::Add, big, P(0, "x"));
    auto spec = spec_of({{0, "x", Type::Int32}}, {Bx(BinaryOp::Gt, big, C(0))});
    Pipe p = pipe_of(kAbs, kAbsTest);
    GeneralizedTest gt = make_gt(p.an.targets[0], spec, SupplierKind::Baseline, 1, 0, "baseline");
    EmitResult em = emit_generalized_source(gt);
    CHECK_FALSE(em.ok);
    CHECK(em.error.find("spec too large") == 0);
}

// ---------------------------------------------------------------------------
// Property execution

TEST_CASE("baseline replays the seed once and passes on the unmutated program") {
    Pipe p = pipe_of(kCalc, kCalcTests);
    for (size_t i = 0; i < p.an.targets.size(); ++i) {
        GeneralizedTest gt = make_gt(p.an.targets[i], p.specs[i], SupplierKind::Baseline, 1, 0,
                                     "baseline");
        PropertyOutcome out = run_property(p.prog, gt);
        INFO(gt.id);
        CHECK(out.status == PropStatus::Passed);
        CHECK(out.tried == 1);
        CHECK(out.misses == 0);
        CHECK(out.steps > 0);
    }
}

TEST_CASE("improved fills its trial quota on constrained partitions") {
    Pipe p = pipe_of(kCalc, kCalcTests);
    // Third partition: sales / 2 < target, sales < target.
    GeneralizedTest gt = make_gt(p.an.targets[2], p.specs[2], SupplierKind::Improved, 50, 0,
                                 "improved_50");
    PropertyOutcome out = run_property(p.prog, gt);
    CHECK(out.status == PropStatus::Passed);
    CHECK(out.tried == 50);
    CHECK(out.misses <= 50 * 5);
}

TEST_CASE("filter-miss asymmetry on chained equalities") {
    Pipe p = pipe_of(kChain, kChainTest);
    REQUIRE(p.an.targets.size() == 1);

    GeneralizedTest naive = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Naive, 200, 0,
                                    "naive_200");
    PropertyOutcome nout = run_property(p.prog, naive);
    CHECK(nout.status == PropStatus::TooManyFilterMisses);
    CHECK(nout.misses == 1000);
    CHECK(nout.tried >= 1);  // the seed always runs
    CHECK(nout.tried + nout.misses <= 200 + 1000);

    GeneralizedTest improved = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Improved, 200,
                                       0, "improved_200");
    PropertyOutcome iout = run_property(p.prog, improved);
    CHECK(iout.status == PropStatus::Passed);
    CHECK(iout.tried == 200);
    CHECK(iout.misses == 0);
}

TEST_CASE("regression reproduction: generalized abs kills the guard mutant and shrinks to 1") {
    Pipe p = pipe_of(kAbs, kAbsTest);
    REQUIRE(p.an.targets.size() == 1);
    Program mutant = impl_only(kAbsMutant);

    // The original example survives the mutant: abs(0) is still 0.
    Program mutant_with_tests = link_files(parse_file(kAbsMutant, "src/m.ml", FileKind::Impl),
                                           parse_file(kAbsTest, "tests/t.ml", FileKind::Test));
    TestResult original = run_test(mutant_with_tests, *mutant_with_tests.find("testAbs"));
    CHECK(original.status == TestStatus::Passed);

    for (auto [kind, variant] : {std::pair{SupplierKind::Improved, "improved_10"},
                                 std::pair{SupplierKind::Naive, "naive_10"}}) {
        GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], kind, 10, 0, variant);
        PropertyOutcome out = run_property(mutant, gt);
        INFO(variant);
        CHECK(out.status == PropStatus::Failed);
        REQUIRE(out.shrunk.size() == 1);
        CHECK(out.shrunk[0].i == 1);
        CHECK(satisfies_input_spec(gt.spec, out.counterexample));
        // But it passes on the unmutated program.
        PropertyOutcome clean = run_property(p.prog, gt);
        CHECK(clean.status == PropStatus::Passed);
    }
}

TEST_CASE("a mutant that diverges at the seed fails on the first trial") {
    Pipe p = pipe_of(kCalc, kCalcTests);
    Program mutant = impl_only(
        "fn calculate(sales: int, target: int) -> int {\n"
        "    if sales / 2 >= target {\n"
        "        return sales / 10;\n"
        "    }\n"
        "    if sales >= target {\n"
        "        return sales / 21;\n"
        "    }\n"
        "    return 0;\n"
        "}\n");
    GeneralizedTest gt = make_gt(p.an.targets[1], p.specs[1], SupplierKind::Baseline, 1, 0,
                                 "baseline");
    PropertyOutcome out = run_property(mutant, gt);
    REQUIRE(out.status == PropStatus::Failed);
    CHECK(out.tried == 1);
    REQUIRE(out.counterexample.size() == 2);
    CHECK(out.counterexample[0].i == 1500);
    CHECK(out.counterexample[1].i == 1000);
    // The shrunk point still lies in the partition and still fails.
    CHECK(satisfies_input_spec(gt.spec, out.shrunk));
    PropertyOutcome again = run_property(mutant, gt);  // determinism
    CHECK(tuples_equal(again.shrunk, out.shrunk));
}

TEST_CASE("throws targets pass when every partition member raises the recorded kind") {
    Pipe p = pipe_of(kQuot, kQuotTest);
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Improved, 20, 0,
                                 "improved_20");
    PropertyOutcome out = run_property(p.prog, gt);
    CHECK(out.status == PropStatus::Passed);
    CHECK(out.tried == 20);
}

TEST_CASE("throws targets fail when the raised kind changes") {
    Pipe p = pipe_of(kQuot, kQuotTest);
    Program mutant = impl_only(
        "fn quot(a: int, b: int) -> int {\n"
        "    if b == 0 {\n"
        "        return a % 0;\n"
        "    }\n"
        "    return a / b;\n"
        "}\n");
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Improved, 20, 0,
                                 "improved_20");
    PropertyOutcome out = run_property(mutant, gt);
    REQUIRE(out.status == PropStatus::Failed);
    CHECK(out.message == "raised mod_by_zero instead of div_by_zero");
    REQUIRE(out.shrunk.size() == 2);
    CHECK(out.shrunk[0].i == 0);
    CHECK(out.shrunk[1].i == 0);
}

TEST_CASE("throws targets fail when the error disappears") {
    Pipe p = pipe_of(kQuot, kQuotTest);
    Program mutant = impl_only(
        "fn quot(a: int, b: int) -> int {\n"
        "    if b == 0 {\n"
        "        return a;\n"
        "    }\n"
        "    return a / b;\n"
        "}\n");
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Baseline, 1, 0,
                                 "baseline");
    PropertyOutcome out = run_property(mutant, gt);
    REQUIRE(out.status == PropStatus::Failed);
    CHECK(out.message == "assert_throws failed: no error was raised");
}

TEST_CASE("an oracle fault excludes the test instead of failing it") {
    Pipe p = pipe_of(
        "fn inv(x: int) -> int {\n"
        "    return 100 / x;\n"
        "}\n",
        "#[test]\nfn testInv() -> void {\n    assert_eq(20, inv(5));\n}\n");
    REQUIRE(p.an.targets.size() == 1);
    CHECK(p.specs[0].pc.empty());  // no branches anywhere
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Naive, 200, 0,
                                 "naive_200");
    PropertyOutcome out = run_property(p.prog, gt);
    CHECK(out.status == PropStatus::Errored);
    CHECK(out.message == "oracle raised div_by_zero");
}

TEST_CASE("step limits surface as errored runs with the budget flag") {
    Pipe p = pipe_of(
        "fn spin(n: int) -> int {\n"
        "    let i = 0;\n"
        "    while i < n {\n"
        "        i = i + 1;\n"
        "    }\n"
        "    return i;\n"
        "}\n",
        "#[test]\nfn testSpin() -> void {\n    assert_eq(3, spin(3));\n}\n");
    REQUIRE(p.an.targets.size() == 1);
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Improved, 50, 0,
                                 "improved_50");

    RunOptions tight;
    tight.trial_limits.max_steps = 10;
    PropertyOutcome out = run_property(p.prog, gt, nullptr, tight);
    CHECK(out.status == PropStatus::Errored);
    CHECK(out.message == "step budget exhausted");
    CHECK(out.out_of_budget);

    RunOptions total;
    total.max_total_steps = 60;
    PropertyOutcome out2 = run_property(p.prog, gt, nullptr, total);
    CHECK(out2.status == PropStatus::Errored);
    CHECK(out2.out_of_budget);
    CHECK(out2.steps <= 60 + 100);  // the trial that crossed the line is counted

    PropertyOutcome ok = run_property(p.prog, gt);
    CHECK(ok.status == PropStatus::Passed);
    CHECK(ok.tried == 50);
}

TEST_CASE("outcomes are deterministic for a fixed stream seed") {
    Pipe p = pipe_of(kCalc, kCalcTests);
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Naive, 50, 7,
                                 "naive_50");
    PropertyOutcome a = run_property(p.prog, gt);
    PropertyOutcome b = run_property(p.prog, gt);
    CHECK(a.status == b.status);
    CHECK(a.tried == b.tried);
    CHECK(a.misses == b.misses);
    CHECK(a.steps == b.steps);
    CHECK(tuples_equal(a.counterexample, b.counterexample));
}

TEST_CASE("no clean-program run ever reports a counterexample") {
    Pipe p = pipe_of(kCalc + kAbs + kQuot + kChain,
                     kCalcTests + kAbsTest + kQuotTest + kChainTest);
    REQUIRE(p.an.targets.size() == 6);
    for (size_t i = 0; i < p.an.targets.size(); ++i) {
        for (auto [kind, variant] : {std::pair{SupplierKind::Baseline, "baseline"},
                                     std::pair{SupplierKind::Improved, "improved_50"},
                                     std::pair{SupplierKind::Naive, "naive_50"}}) {
            GeneralizedTest gt = make_gt(p.an.targets[i], p.specs[i], kind, 50, 0, variant);
            PropertyOutcome out = run_property(p.prog, gt);
            INFO(gt.id, " -> ", out.message, " cex ", show_tuple(out.counterexample));
            // Thin partitions may run out of filter misses, but every accepted
            // member must agree with the oracle.
            CHECK((out.status == PropStatus::Passed ||
                   out.status == PropStatus::TooManyFilterMisses));
            if (kind == SupplierKind::Baseline) {
                CHECK(out.status == PropStatus::Passed);
                CHECK(out.tried == 1);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// File round-trip

TEST_CASE("an emitted file reloads into an equivalent descriptor") {
    Pipe p = pipe_of(kCalc, kCalcTests);
    GeneralizedTest gt = make_gt(p.an.targets[1], p.specs[1], SupplierKind::Improved, 50, 0,
                                 "improved_50");
    EmitResult em = emit_generalized_source(gt);
    REQUIRE(em.ok);

    GeneralizedTest back = load_gt_source(em.source, 0);
    CHECK(back.id == gt.id);
    CHECK(back.prop_name == gt.prop_name);
    CHECK(back.kind == gt.kind);
    CHECK(back.tries == gt.tries);
    CHECK(back.rng_seed == gt.rng_seed);
    CHECK(tuples_equal(back.seed_inputs, gt.seed_inputs));
    REQUIRE(back.spec.pc.size() == gt.spec.pc.size());
    for (size_t i = 0; i < back.spec.pc.size(); ++i)
        CHECK(sym::render(*back.spec.pc[i]) == sym::render(*gt.spec.pc[i]));
    CHECK_FALSE(back.spec.error_outcome);
    REQUIRE(back.spec.outcome);
    CHECK(sym::render(*back.spec.outcome) == sym::render(*gt.spec.outcome));
}

TEST_CASE("file-driven execution matches the in-memory run") {
    Pipe p = pipe_of(kCalc, kCalcTests);
    Program mutant = impl_only(
        "fn calculate(sales: int, target: int) -> int {\n"
        "    if sales / 2 >= target {\n"
        "        return sales / 10;\n"
        "    }\n"
        "    if sales >= target {\n"
        "        return sales / 21;\n"
        "    }\n"
        "    return 0;\n"
        "}\n");
    for (auto [kind, tries, variant] :
         {std::tuple{SupplierKind::Baseline, 1, "baseline"},
          std::tuple{SupplierKind::Naive, 50, "naive_50"},
          std::tuple{SupplierKind::Improved, 50, "improved_50"}}) {
        GeneralizedTest gt = make_gt(p.an.targets[1], p.specs[1], kind, tries, 0, variant);
        EmitResult em = emit_generalized_source(gt);
        REQUIRE(em.ok);
        GeneralizedTest back = load_gt_source(em.source, 0);

        for (const Program* prog : {&p.prog, &mutant}) {
            PropertyOutcome mem = run_property(*prog, gt);
            PropertyOutcome file = run_property(*prog, back, &em.source);
            INFO(variant);
            CHECK(mem.status == file.status);
            CHECK(mem.tried == file.tried);
            CHECK(mem.misses == file.misses);
            CHECK(tuples_equal(mem.counterexample, file.counterexample));
            CHECK(tuples_equal(mem.shrunk, file.shrunk));
        }
    }
}

TEST_CASE("throws files round-trip including the expected kind") {
    Pipe p = pipe_of(kQuot, kQuotTest);
    GeneralizedTest gt = make_gt(p.an.targets[0], p.specs[0], SupplierKind::Improved, 20, 0,
                                 "improved_20");
    EmitResult em = emit_generalized_source(gt);
    REQUIRE(em.ok);
    GeneralizedTest back = load_gt_source(em.source, 0);
    CHECK(back.spec.error_outcome);
    CHECK(back.spec.error_kind == ErrorKind::DivByZero);
    PropertyOutcome out = run_property(p.prog, back, &em.source);
    CHECK(out.status == PropStatus::Passed);
    CHECK(out.tried == 20);
}

TEST_CASE("reload rejects files that are not generalized tests") {
    CHECK_THROWS_AS(load_gt_source("fn f() -> int { return 1; }\n", 0), std::runtime_error);
    CHECK_THROWS_AS(load_gt_source("not minilang at all", 0), ParseError);
}

TEST_CASE("status names are stable") {
    CHECK(std::string(prop_status_name(PropStatus::Passed)) == "passed");
    CHECK(std::string(prop_status_name(PropStatus::Failed)) == "failed");
    CHECK(std::string(prop_status_name(PropStatus::TooManyFilterMisses)) ==
          "too_many_filter_misses");
    CHECK(std::string(prop_status_name(PropStatus::Errored)) == "errored");
}

#include "teraliz/gen.hpp"

#include <algorithm>
#include <cassert>
#include <climits>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "teraliz/parse.hpp"
#include "teraliz/pretty.hpp"

namespace teraliz::gen {

using interp::Value;
using sym::SymExpr;
using sym::SymPtr;

// ---------------------------------------------------------------------------
// Random stream

uint64_t SplitMix64::next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

uint64_t SplitMix64::below(uint64_t bound) {
    if (bound == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v = next();
    while (v >= limit) v = next();
    return v % bound;
}

int32_t SplitMix64::int_in(int32_t lo, int32_t hi) {
    uint64_t width = uint64_t(int64_t(hi) - int64_t(lo)) + 1;
    return int32_t(int64_t(lo) + int64_t(below(width)));
}

namespace {

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace

uint64_t gt_stream_seed(uint64_t pipeline_seed, const std::string& id) {
    SplitMix64 mix(pipeline_seed ^ fnv1a64(id));
    return mix.next();
}

// ---------------------------------------------------------------------------
// Constraint encoding

namespace {

int32_t sat_add(int32_t a, int32_t d) {
    int64_t v = int64_t(a) + int64_t(d);
    if (v < INT32_MIN) return INT32_MIN;
    if (v > INT32_MAX) return INT32_MAX;
    return int32_t(v);
}

struct Side {
    bool is_param = false;
    uint32_t pos = 0;
    int32_t konst = 0;
    Type type = Type::Int32;
};

std::optional<Side> classify_side(const SymExpr& e,
                                  const std::unordered_map<uint32_t, uint32_t>& pos_of) {
    Side s;
    switch (e.kind) {
        case SymExpr::Kind::Param: {
            auto it = pos_of.find(e.param_index);
            if (it == pos_of.end()) return std::nullopt;
            s.is_param = true;
            s.pos = it->second;
            s.type = e.param_type;
            return s;
        }
        case SymExpr::Kind::ConstInt:
            s.konst = e.int_val;
            s.type = Type::Int32;
            return s;
        case SymExpr::Kind::ConstBool:
            s.konst = e.bool_val ? 1 : 0;
            s.type = Type::Bool;
            return s;
        default:
            return std::nullopt;
    }
}

BinaryOp flip_rel(BinaryOp op) {
    switch (op) {
        case BinaryOp::Lt: return BinaryOp::Gt;
        case BinaryOp::Le: return BinaryOp::Ge;
        case BinaryOp::Gt: return BinaryOp::Lt;
        case BinaryOp::Ge: return BinaryOp::Le;
        default: return op;  // == is symmetric
    }
}

bool try_encode(EncodedPlan& plan, const std::unordered_map<uint32_t, uint32_t>& pos_of,
                const SymPtr& c) {
    if (c->kind != SymExpr::Kind::Binary) return false;
    BinaryOp op = c->bop;
    if (op != BinaryOp::Eq && !is_order(op)) return false;
    std::optional<Side> l = classify_side(*c->a, pos_of);
    std::optional<Side> r = classify_side(*c->b, pos_of);
    if (!l || !r) return false;
    if (!l->is_param && !r->is_param) return false;
    if (l->is_param && r->is_param && l->pos == r->pos) return false;

    // Attach to the later-generated side so every term looks backwards.
    bool attach_lhs = l->is_param && (!r->is_param || l->pos > r->pos);
    const Side& var = attach_lhs ? *l : *r;
    const Side& other = attach_lhs ? *r : *l;
    BinaryOp rel = attach_lhs ? op : flip_rel(op);

    Term term;
    if (other.is_param) {
        term.is_param = true;
        term.pos = other.pos;
    } else {
        term.konst = other.konst;
    }
    auto with_offset = [&term](int32_t d) {
        if (term.is_param) term.offset = d;
        else term.konst = sat_add(term.konst, d);
        return term;
    };

    ParamPlan& pp = plan.params[var.pos];
    switch (rel) {
        case BinaryOp::Eq: pp.eq.push_back(term); break;
        case BinaryOp::Lt: pp.hi.push_back(with_offset(-1)); break;
        case BinaryOp::Le: pp.hi.push_back(term); break;
        case BinaryOp::Gt: pp.lo.push_back(with_offset(1)); break;
        case BinaryOp::Ge: pp.lo.push_back(term); break;
        default: return false;
    }
    return true;
}

}  // namespace

EncodedPlan build_plan(const concolic::PathSpec& spec) {
    EncodedPlan plan;
    plan.params.resize(spec.symbolic_params.size());
    std::unordered_map<uint32_t, uint32_t> pos_of;
    for (size_t i = 0; i < spec.symbolic_params.size(); ++i) {
        plan.params[i].type = spec.symbolic_params[i].type;
        pos_of[spec.symbolic_params[i].index] = uint32_t(i);
    }
    for (const SymPtr& c : spec.pc) {
        if (try_encode(plan, pos_of, c)) plan.encoded.push_back(c);
        else plan.residual.push_back(c);
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Candidate generation

namespace {

int32_t resolve_int(const Term& t, const InputTuple& chosen) {
    if (!t.is_param) return t.konst;
    return sat_add(chosen[t.pos].i, t.offset);
}

bool resolve_bool(const Term& t, const InputTuple& chosen) {
    if (!t.is_param) return t.konst != 0;
    return chosen[t.pos].b;
}

struct IntBounds {
    int32_t lo = INT32_MIN;
    int32_t hi = INT32_MAX;
    bool any = false;
};

IntBounds bounds_of(const ParamPlan& pp, const InputTuple& chosen) {
    IntBounds b;
    for (const Term& t : pp.lo) {
        b.lo = std::max(b.lo, resolve_int(t, chosen));
        b.any = true;
    }
    for (const Term& t : pp.hi) {
        b.hi = std::min(b.hi, resolve_int(t, chosen));
        b.any = true;
    }
    return b;
}

/// Partition-boundary values for one parameter given the values already
/// chosen before it, in a fixed order. Empty means the bounds crossed and
/// the whole branch of combinations is infeasible.
std::vector<Value> edge_values(const ParamPlan& pp, const InputTuple& chosen) {
    std::vector<Value> out;
    if (pp.type == Type::Bool) {
        if (!pp.eq.empty()) {
            out.push_back(Value::of_bool(resolve_bool(pp.eq[0], chosen)));
        } else {
            out.push_back(Value::of_bool(false));
            out.push_back(Value::of_bool(true));
        }
        return out;
    }
    if (!pp.eq.empty()) {
        out.push_back(Value::of_int(resolve_int(pp.eq[0], chosen)));
        return out;
    }
    IntBounds b = bounds_of(pp, chosen);
    if (!b.any) {
        out.push_back(Value::of_int(0));
        out.push_back(Value::of_int(1));
        out.push_back(Value::of_int(-1));
        return out;
    }
    if (b.lo > b.hi) return out;
    int32_t raw[4] = {b.lo, sat_add(b.lo, 1), sat_add(b.hi, -1), b.hi};
    for (int32_t v : raw) {
        v = std::clamp(v, b.lo, b.hi);
        bool seen = false;
        for (const Value& prev : out) seen = seen || prev.i == v;
        if (!seen) out.push_back(Value::of_int(v));
    }
    return out;
}

/// The k-th (1-based) tuple of the deterministic boundary walk: a depth-first
/// product of per-parameter edge sets, first parameter outermost, capped at
/// 64 leaves. Empty when fewer than k combinations exist.
std::optional<InputTuple> edge_leaf(const EncodedPlan& plan, uint64_t k) {
    if (k == 0 || k > 64) return std::nullopt;
    std::optional<InputTuple> found;
    uint64_t seen = 0;
    InputTuple acc(plan.params.size());
    std::function<bool(size_t)> walk = [&](size_t pos) -> bool {
        if (pos == plan.params.size()) {
            if (++seen == k) found = acc;
            return found.has_value();
        }
        for (const Value& v : edge_values(plan.params[pos], acc)) {
            acc[pos] = v;
            if (walk(pos + 1)) return true;
        }
        return false;
    };
    walk(0);
    return found;
}

int32_t stratified_int(SplitMix64& rng) {
    if (rng.chance(25)) {
        static const int32_t special[5] = {0, 1, -1, INT32_MIN, INT32_MAX};
        return special[rng.below(5)];
    }
    return rng.int_in(INT32_MIN, INT32_MAX);
}

}  // namespace

std::optional<InputTuple> generate_candidate(const GeneralizedTest& gt, const EncodedPlan& plan,
                                             uint64_t step, SplitMix64& rng) {
    if (step == 0) return gt.seed_inputs;
    if (gt.kind == SupplierKind::Baseline) return std::nullopt;

    if (gt.kind == SupplierKind::Improved && step <= 64) {
        if (std::optional<InputTuple> leaf = edge_leaf(plan, step)) return leaf;
    }

    InputTuple out(plan.params.size());
    for (size_t pos = 0; pos < plan.params.size(); ++pos) {
        const ParamPlan& pp = plan.params[pos];
        if (gt.kind == SupplierKind::Naive) {
            out[pos] = pp.type == Type::Bool ? Value::of_bool(rng.chance(50))
                                             : Value::of_int(stratified_int(rng));
            continue;
        }
        if (pp.type == Type::Bool) {
            out[pos] = Value::of_bool(pp.eq.empty() ? rng.chance(50)
                                                    : resolve_bool(pp.eq[0], out));
            continue;
        }
        if (!pp.eq.empty()) {
            out[pos] = Value::of_int(resolve_int(pp.eq[0], out));
            continue;
        }
        IntBounds b = bounds_of(pp, out);
        if (!b.any) {
            out[pos] = Value::of_int(stratified_int(rng));
            continue;
        }
        if (b.lo > b.hi) return std::nullopt;
        int32_t v = rng.chance(25) ? (rng.chance(50) ? b.lo : b.hi) : rng.int_in(b.lo, b.hi);
        out[pos] = Value::of_int(v);
    }
    return out;
}

bool satisfies_input_spec(const concolic::PathSpec& spec, const InputTuple& tuple) {
    uint32_t arity = 0;
    for (const concolic::SymParam& p : spec.symbolic_params) arity = std::max(arity, p.index + 1);
    std::vector<Value> by_index(arity);
    for (size_t i = 0; i < spec.symbolic_params.size(); ++i)
        by_index[spec.symbolic_params[i].index] = tuple[i];
    for (const SymPtr& c : spec.pc) {
        concolic::SymValue v = concolic::eval_sym(c, spec.symbolic_params, by_index);
        if (!v.ok || v.value.type != Type::Bool || !v.value.b) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Test descriptors

GeneralizedTest make_gt(const analyzer::Target& target, concolic::PathSpec spec,
                        SupplierKind kind, int tries, uint64_t pipeline_seed,
                        const std::string& variant) {
    GeneralizedTest gt;
    gt.id = target.id() + "@" + variant;
    gt.prop_name = target.test_name + "__a" + std::to_string(target.assertion_index);
    gt.target = &target;
    gt.kind = kind;
    gt.tries = kind == SupplierKind::Baseline ? 1 : std::max(1, tries);
    gt.rng_seed = gt_stream_seed(pipeline_seed, gt.id);
    for (const concolic::SymParam& p : spec.symbolic_params) {
        Value v = spec.concrete_inputs[p.index];
        v.shadow = nullptr;
        gt.seed_inputs.push_back(std::move(v));
    }
    gt.spec = std::move(spec);
    return gt;
}

const char* prop_status_name(PropStatus s) {
    switch (s) {
        case PropStatus::Passed: return "passed";
        case PropStatus::Failed: return "failed";
        case PropStatus::TooManyFilterMisses: return "too_many_filter_misses";
        case PropStatus::Errored: return "errored";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Emission

namespace {

constexpr uint64_t kMaxRenderedChars = 65535;

/// Rebuilds a symbolic expression with every parameter renamed through `nm`,
/// memoized so shared subtrees stay shared.
SymPtr rename_params(const SymPtr& e, const std::unordered_map<uint32_t, std::string>& nm,
                     std::unordered_map<const SymExpr*, SymPtr>& cache) {
    auto hit = cache.find(e.get());
    if (hit != cache.end()) return hit->second;
    SymPtr out;
    switch (e->kind) {
        case SymExpr::Kind::ConstInt:
        case SymExpr::Kind::ConstBool:
            out = e;
            break;
        case SymExpr::Kind::Param:
            out = sym::sym_param(e->param_index, nm.at(e->param_index), e->param_type);
            break;
        case SymExpr::Kind::Unary:
            out = sym::sym_unary(e->uop, rename_params(e->a, nm, cache));
            break;
        case SymExpr::Kind::Binary:
            out = sym::sym_binary(e->bop, rename_params(e->a, nm, cache),
                                  rename_params(e->b, nm, cache));
            break;
    }
    cache.emplace(e.get(), out);
    return out;
}

/// Materializes a symbolic expression as a syntax tree. Sizes are bounded by
/// the rendered-length guard, so shared nodes may be expanded per occurrence.
ml::ExprPtr sym_to_expr(const SymExpr& e) {
    switch (e.kind) {
        case SymExpr::Kind::ConstInt: return ml::Expr::make_int(e.int_val);
        case SymExpr::Kind::ConstBool: return ml::Expr::make_bool(e.bool_val);
        case SymExpr::Kind::Param: return ml::Expr::make_var(e.param_name);
        case SymExpr::Kind::Unary: return ml::Expr::make_unary(e.uop, sym_to_expr(*e.a));
        case SymExpr::Kind::Binary:
            return ml::Expr::make_binary(e.bop, sym_to_expr(*e.a), sym_to_expr(*e.b));
    }
    return ml::Expr::make_bool(false);
}

void strip_other_asserts(ml::Block& b, const ml::Stmt* keep) {
    auto& stmts = b.stmts;
    for (auto it = stmts.begin(); it != stmts.end();) {
        ml::Stmt& s = **it;
        if (s.kind == ml::Stmt::Kind::Assert && &s != keep) {
            it = stmts.erase(it);
            continue;
        }
        if (s.kind == ml::Stmt::Kind::If || s.kind == ml::Stmt::Kind::While) {
            if (s.block_a) strip_other_asserts(*s.block_a, keep);
            if (s.block_b) strip_other_asserts(*s.block_b, keep);
        }
        ++it;
    }
}

void collect_callees(const ml::Expr& e, std::vector<std::string>& out) {
    if (e.kind == ml::Expr::Kind::Call) out.push_back(e.name);
    for (const ml::ExprPtr& c : e.children) collect_callees(*c, out);
}

void collect_callees(const ml::Block& b, std::vector<std::string>& out) {
    for (const ml::StmtPtr& sp : b.stmts) {
        const ml::Stmt& s = *sp;
        if (s.value) collect_callees(*s.value, out);
        if (s.value2) collect_callees(*s.value2, out);
        if (s.block_a) collect_callees(*s.block_a, out);
        if (s.block_b) collect_callees(*s.block_b, out);
    }
}

ml::FunctionDecl plain_fn(std::string name, std::vector<ml::Param> params, Type ret,
                          ml::ExprPtr result) {
    ml::FunctionDecl fn;
    fn.name = std::move(name);
    fn.params = std::move(params);
    fn.return_type = ret;
    auto st = std::make_unique<ml::Stmt>();
    st->kind = ml::Stmt::Kind::Return;
    st->value = std::move(result);
    fn.body.stmts.push_back(std::move(st));
    return fn;
}

}  // namespace

EmitResult emit_generalized_source(const GeneralizedTest& gt) {
    EmitResult r;
    if (!gt.target) {
        r.error = "no source test attached";
        return r;
    }
    const analyzer::Target& t = *gt.target;
    const concolic::PathSpec& spec = gt.spec;
    const std::string& base = gt.prop_name;

    std::unordered_map<uint32_t, std::string> prop_names;
    std::vector<ml::Param> prop_params;
    for (const concolic::SymParam& p : spec.symbolic_params) {
        prop_names[p.index] = "_p_" + p.name;
        prop_params.push_back({"_p_" + p.name, p.type, {}});
    }

    std::unordered_map<const SymExpr*, SymPtr> cache;
    std::vector<SymPtr> pred;
    uint64_t pred_len = 0;
    for (const SymPtr& c : spec.pc) {
        SymPtr renamed = rename_params(c, prop_names, cache);
        pred_len += renamed->render_len + (pred.empty() ? 0 : 4);
        pred.push_back(std::move(renamed));
    }
    if (pred_len > kMaxRenderedChars) {
        r.error = "spec too large: rendered input predicate is " + std::to_string(pred_len) +
                  " characters (limit " + std::to_string(kMaxRenderedChars) + ")";
        return r;
    }
    SymPtr oracle;
    if (!spec.error_outcome) {
        oracle = rename_params(spec.outcome, prop_names, cache);
        if (oracle->render_len > kMaxRenderedChars) {
            r.error = "spec too large: rendered oracle is " + std::to_string(oracle->render_len) +
                      " characters (limit " + std::to_string(kMaxRenderedChars) + ")";
            return r;
        }
    }

    // The property function: the original test with driven parameters.
    ml::FunctionDecl prop = ml::clone(*t.test_fn);
    prop.name = base;
    prop.annotation = ml::Annotation{ml::Annotation::Kind::Property, {}, 0, gt.kind,
                                     int32_t(gt.tries)};
    prop.params = prop_params;

    const ml::Expr* located = ml::find_expr_by_span(prop, t.mut_call->span);
    if (!located || located->kind != ml::Expr::Kind::Call) {
        r.error = "could not locate the checked call in the test body";
        return r;
    }
    auto& call_args = const_cast<ml::Expr&>(*located).children;
    for (const concolic::SymParam& p : spec.symbolic_params)
        call_args[p.index] = ml::Expr::make_var("_p_" + p.name);

    std::vector<const ml::Stmt*> asserts = analyzer::assertions_of(prop);
    if (t.assertion_index < 0 || size_t(t.assertion_index) >= asserts.size()) {
        r.error = "assertion index out of range in the test body";
        return r;
    }
    ml::Stmt& target_stmt = const_cast<ml::Stmt&>(*asserts[size_t(t.assertion_index)]);
    if (!t.throws) {
        ml::ExprPtr actual = std::move(target_stmt.assert_kind == ml::AssertKind::Eq
                                           ? target_stmt.value2
                                           : target_stmt.value);
        std::vector<ml::ExprPtr> oargs;
        for (const ml::Param& p : prop_params) oargs.push_back(ml::Expr::make_var(p.name));
        target_stmt.assert_kind = ml::AssertKind::Eq;
        target_stmt.value = ml::Expr::make_call(base + "_oracle", std::move(oargs));
        target_stmt.value2 = std::move(actual);
    }
    strip_other_asserts(prop.body, &target_stmt);

    ml::SourceFile out;
    out.kind = ml::FileKind::Test;
    out.functions.push_back(std::move(prop));

    // Input-spec predicate over the same parameters.
    ml::ExprPtr pred_expr;
    for (const SymPtr& c : pred) {
        ml::ExprPtr conj = sym_to_expr(*c);
        pred_expr = pred_expr ? ml::Expr::make_binary(BinaryOp::And, std::move(pred_expr),
                                                      std::move(conj))
                              : std::move(conj);
    }
    if (!pred_expr) pred_expr = ml::Expr::make_bool(true);
    out.functions.push_back(
        plain_fn(base + "_input_spec", prop_params, Type::Bool, std::move(pred_expr)));

    if (spec.error_outcome) {
        out.functions.push_back(
            plain_fn(base + "_expected_error", {}, Type::Str,
                     ml::Expr::make_str(interp::error_kind_name(spec.error_kind))));
    } else {
        out.functions.push_back(plain_fn(base + "_oracle", prop_params, sym::sym_type(*oracle),
                                         sym_to_expr(*oracle)));
    }

    for (size_t i = 0; i < spec.symbolic_params.size(); ++i) {
        const concolic::SymParam& p = spec.symbolic_params[i];
        const Value& v = gt.seed_inputs[i];
        ml::ExprPtr lit = p.type == Type::Bool ? ml::Expr::make_bool(v.b)
                                               : ml::Expr::make_int(v.i);
        out.functions.push_back(plain_fn(base + "_seed_" + p.name, {}, p.type, std::move(lit)));
    }

    // Helpers defined in the original test file that the body still calls,
    // copied transitively so the emitted file stands alone next to the
    // implementation.
    std::vector<std::string> wanted;
    collect_callees(out.functions[0].body, wanted);
    std::unordered_set<std::string> copied;
    for (size_t k = 0; k < wanted.size(); ++k) {
        const std::string& name = wanted[k];
        if (copied.count(name) || name == t.test_name) continue;
        for (const ml::FunctionDecl& fn : t.test_file->functions) {
            if (fn.name != name) continue;
            copied.insert(name);
            out.functions.push_back(ml::clone(fn));
            collect_callees(fn.body, wanted);
            break;
        }
    }

    r.source = ml::pretty(out);
    r.ok = true;
    return r;
}

// ---------------------------------------------------------------------------
// File-driven reload

namespace {

void split_and(const ml::Expr& e, std::vector<const ml::Expr*>& out) {
    if (e.kind == ml::Expr::Kind::Binary && e.bop == BinaryOp::And) {
        split_and(*e.children[0], out);
        split_and(*e.children[1], out);
        return;
    }
    out.push_back(&e);
}

[[noreturn]] void bad_file(const std::string& why) {
    throw std::runtime_error("not a generalized test file: " + why);
}

SymPtr expr_to_sym(const ml::Expr& e,
                   const std::unordered_map<std::string, const concolic::SymParam*>& params) {
    switch (e.kind) {
        case ml::Expr::Kind::IntLit: return sym::sym_int(e.int_val);
        case ml::Expr::Kind::BoolLit: return sym::sym_bool(e.bool_val);
        case ml::Expr::Kind::Var: {
            auto it = params.find(e.name);
            if (it == params.end()) bad_file("unknown variable '" + e.name + "' in a predicate");
            return sym::sym_param(it->second->index, it->second->name, it->second->type);
        }
        case ml::Expr::Kind::Unary:
            return sym::sym_unary(e.uop, expr_to_sym(*e.children[0], params));
        case ml::Expr::Kind::Binary:
            return sym::sym_binary(e.bop, expr_to_sym(*e.children[0], params),
                                   expr_to_sym(*e.children[1], params));
        default:
            bad_file("unsupported expression in a predicate");
    }
}

const ml::Expr* single_return(const ml::FunctionDecl& fn) {
    if (fn.body.stmts.size() != 1 || fn.body.stmts[0]->kind != ml::Stmt::Kind::Return ||
        !fn.body.stmts[0]->value)
        bad_file("'" + fn.name + "' is not a single return");
    return fn.body.stmts[0]->value.get();
}

}  // namespace

GeneralizedTest load_gt_source(const std::string& source, uint64_t pipeline_seed) {
    ml::SourceFile file = ml::parse_file(source, "generalized.ml", ml::FileKind::Test);

    const ml::FunctionDecl* prop = nullptr;
    for (const ml::FunctionDecl& fn : file.functions) {
        if (!fn.annotation || fn.annotation->kind != ml::Annotation::Kind::Property) continue;
        if (prop) bad_file("more than one property function");
        prop = &fn;
    }
    if (!prop) bad_file("no property function");

    auto find_fn = [&file](const std::string& name) -> const ml::FunctionDecl* {
        for (const ml::FunctionDecl& fn : file.functions)
            if (fn.name == name) return &fn;
        return nullptr;
    };

    GeneralizedTest gt;
    gt.prop_name = prop->name;
    gt.kind = prop->annotation->supplier;
    gt.tries = prop->annotation->tries;

    size_t sep = prop->name.rfind("__a");
    if (sep == std::string::npos) bad_file("property function is not named <test>__a<k>");
    std::string variant = gt.kind == SupplierKind::Baseline
                              ? "baseline"
                              : std::string(supplier_name(gt.kind)) + "_" +
                                    std::to_string(gt.tries);
    gt.id = prop->name.substr(0, sep) + "#" + prop->name.substr(sep + 3) + "@" + variant;
    gt.rng_seed = gt_stream_seed(pipeline_seed, gt.id);

    std::unordered_map<std::string, const concolic::SymParam*> by_var;
    for (size_t i = 0; i < prop->params.size(); ++i) {
        const ml::Param& p = prop->params[i];
        if (p.name.rfind("_p_", 0) != 0) bad_file("parameter '" + p.name + "' lacks _p_ prefix");
        gt.spec.symbolic_params.push_back({uint32_t(i), p.name.substr(3), p.type});
    }
    for (const concolic::SymParam& p : gt.spec.symbolic_params)
        by_var["_p_" + p.name] = &p;

    const ml::FunctionDecl* pred = find_fn(gt.prop_name + "_input_spec");
    if (!pred) bad_file("missing " + gt.prop_name + "_input_spec");
    std::vector<const ml::Expr*> conjuncts;
    split_and(*single_return(*pred), conjuncts);
    bool trivially_true = conjuncts.size() == 1 &&
                          conjuncts[0]->kind == ml::Expr::Kind::BoolLit &&
                          conjuncts[0]->bool_val;
    if (!trivially_true)
        for (const ml::Expr* c : conjuncts) gt.spec.pc.push_back(expr_to_sym(*c, by_var));

    if (const ml::FunctionDecl* err = find_fn(gt.prop_name + "_expected_error")) {
        const ml::Expr* k = single_return(*err);
        interp::ErrorKind kind;
        if (k->kind != ml::Expr::Kind::StrLit || !interp::error_kind_from_name(k->str_val, kind))
            bad_file("unrecognized expected error kind");
        gt.spec.error_outcome = true;
        gt.spec.error_kind = kind;
    } else if (const ml::FunctionDecl* orc = find_fn(gt.prop_name + "_oracle")) {
        gt.spec.outcome = expr_to_sym(*single_return(*orc), by_var);
    } else {
        bad_file("missing oracle and expected-error functions");
    }

    gt.spec.concrete_inputs.resize(gt.spec.symbolic_params.size());
    for (const concolic::SymParam& p : gt.spec.symbolic_params) {
        const ml::FunctionDecl* seed = find_fn(gt.prop_name + "_seed_" + p.name);
        if (!seed) bad_file("missing seed for parameter '" + p.name + "'");
        const ml::Expr* lit = single_return(*seed);
        Value v;
        if (lit->kind == ml::Expr::Kind::IntLit && p.type == Type::Int32)
            v = Value::of_int(lit->int_val);
        else if (lit->kind == ml::Expr::Kind::BoolLit && p.type == Type::Bool)
            v = Value::of_bool(lit->bool_val);
        else
            bad_file("seed for '" + p.name + "' is not a literal of the parameter type");
        gt.seed_inputs.push_back(v);
        gt.spec.concrete_inputs[p.index] = v;
    }
    return gt;
}

// ---------------------------------------------------------------------------
// Property execution

namespace {

struct OracleWatch final : interp::Hooks {
    std::string oracle;
    bool hit = false;
    interp::Hooks* fwd = nullptr;

    void on_branch(const ml::Expr& c, const interp::Value& v, bool loop) override {
        if (fwd) fwd->on_branch(c, v, loop);
    }
    void on_logic_operand(const ml::Expr& o, BinaryOp op, const interp::Value& v) override {
        if (fwd) fwd->on_logic_operand(o, op, v);
    }
    void on_call_enter(const ml::Expr& c, const ml::FunctionDecl& f,
                       std::vector<interp::Value>& args) override {
        if (fwd) fwd->on_call_enter(c, f, args);
    }
    void on_call_exit(const ml::Expr& c, const ml::FunctionDecl& f,
                      const interp::Value& r) override {
        if (fwd) fwd->on_call_exit(c, f, r);
    }
    void on_call_error(const ml::Expr& c, const ml::FunctionDecl& callee,
                       const interp::EvalError& e) override {
        if (callee.name == oracle) hit = true;
        if (fwd) fwd->on_call_error(c, callee, e);
    }
    void on_stmt(const ml::SourceFile& f, const ml::Stmt& s) override {
        if (fwd) fwd->on_stmt(f, s);
    }
    void on_expr(const ml::SourceFile& f, const ml::Expr& e) override {
        if (fwd) fwd->on_expr(f, e);
    }
};

enum class TrialWhat : uint8_t { Passed, Failed, OracleError, Abort };

struct TrialResult {
    TrialWhat what = TrialWhat::Passed;
    std::string message;
    bool steps_hit = false;
};

}  // namespace

PropertyOutcome run_property(const ml::Program& program, const GeneralizedTest& gt,
                             const std::string* source, const RunOptions& opts) {
    PropertyOutcome out;
    std::string text;
    if (source) {
        text = *source;
    } else {
        EmitResult em = emit_generalized_source(gt);
        if (!em.ok) {
            out.status = PropStatus::Errored;
            out.message = em.error;
            return out;
        }
        text = std::move(em.source);
    }

    ml::Program trial;
    try {
        std::vector<ml::SourceFile> files;
        for (const auto& f : program.files)
            if (f->kind == ml::FileKind::Impl) files.push_back(ml::clone(*f));
        files.push_back(ml::parse_file(text, "generalized/" + gt.id + ".ml",
                                       ml::FileKind::Test));
        trial = ml::link(std::move(files));
    } catch (const ParseError& e) {
        out.status = PropStatus::Errored;
        out.message = std::string("generated test does not compile: ") + e.what();
        return out;
    } catch (const TypeError& e) {
        out.status = PropStatus::Errored;
        out.message = std::string("generated test does not compile: ") + e.what();
        return out;
    }

    const ml::FunctionDecl* prop = trial.find(gt.prop_name);
    if (!prop) {
        out.status = PropStatus::Errored;
        out.message = "generated test function '" + gt.prop_name + "' not found";
        return out;
    }
    const std::string oracle_name = gt.prop_name + "_oracle";

    auto run_trial = [&](const InputTuple& tuple) -> TrialResult {
        interp::RunLimits lim = opts.trial_limits;
        if (opts.max_total_steps) {
            uint64_t remaining = opts.max_total_steps > out.steps
                                     ? opts.max_total_steps - out.steps
                                     : 0;
            lim.max_steps = std::min(lim.max_steps, remaining);
        }
        OracleWatch watch;
        watch.oracle = oracle_name;
        watch.fwd = opts.observer;
        interp::Evaluator ev(trial, lim, &watch);
        TrialResult tr;
        try {
            ev.invoke(*prop, tuple);
            if (gt.spec.error_outcome) {
                const std::vector<interp::ErrorKind>& got = ev.contained_errors();
                if (got.empty()) {
                    tr = {TrialWhat::Failed, "assert_throws failed: no error was raised", false};
                } else if (got.back() != gt.spec.error_kind) {
                    tr = {TrialWhat::Failed,
                          std::string("raised ") + interp::error_kind_name(got.back()) +
                              " instead of " + interp::error_kind_name(gt.spec.error_kind),
                          false};
                }
            }
        } catch (const interp::AssertFail& f) {
            tr = {TrialWhat::Failed, f.message, false};
        } catch (const interp::EvalError& e) {
            if (watch.hit)
                tr = {TrialWhat::OracleError,
                      std::string("oracle raised ") + interp::error_kind_name(e.kind), false};
            else
                tr = {TrialWhat::Failed, std::string("raised ") + interp::error_kind_name(e.kind),
                      false};
        } catch (const interp::EvalAbort& a) {
            if (a.why == interp::EvalAbort::Why::Steps)
                tr = {TrialWhat::Abort, "step budget exhausted", true};
            else
                tr = {TrialWhat::Abort, "call depth limit exceeded", false};
        }
        out.steps += ev.steps_used();
        return tr;
    };

    auto fails_at = [&](const InputTuple& tuple) -> bool {
        if (!satisfies_input_spec(gt.spec, tuple)) return false;
        return run_trial(tuple).what == TrialWhat::Failed;
    };

    // Coordinate-wise minimization toward zero, repeated to a fixpoint. A
    // probe is accepted only when it still lies in the input partition and
    // still fails.
    auto shrink = [&](InputTuple cur) -> InputTuple {
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t pos = 0; pos < cur.size(); ++pos) {
                if (cur[pos].type == Type::Bool) {
                    if (!cur[pos].b) continue;
                    InputTuple probe = cur;
                    probe[pos] = Value::of_bool(false);
                    if (fails_at(probe)) {
                        cur = std::move(probe);
                        changed = true;
                    }
                    continue;
                }
                int32_t v = cur[pos].i;
                if (v == 0) continue;
                InputTuple probe = cur;
                probe[pos] = Value::of_int(0);
                if (fails_at(probe)) {
                    cur = std::move(probe);
                    changed = true;
                    continue;
                }
                int32_t lo = 0;
                int32_t hi = v;
                for (;;) {
                    int32_t mid = lo + (hi - lo) / 2;
                    if (mid == lo || mid == hi) break;
                    probe[pos] = Value::of_int(mid);
                    if (fails_at(probe)) hi = mid;
                    else lo = mid;
                }
                if (hi != v) {
                    cur[pos] = Value::of_int(hi);
                    changed = true;
                }
            }
        }
        return cur;
    };

    EncodedPlan plan = build_plan(gt.spec);
    SplitMix64 rng(gt.rng_seed);
    const int effective = gt.kind == SupplierKind::Baseline ? 1 : std::max(1, gt.tries);
    const int64_t miss_budget = int64_t(effective) * std::max(1, opts.discard_ratio);

    uint64_t step = 0;
    while (out.tried < effective) {
        if (out.misses >= miss_budget) {
            out.status = PropStatus::TooManyFilterMisses;
            out.message = "filter-miss budget exhausted after " + std::to_string(out.misses) +
                          " misses";
            return out;
        }
        if (opts.max_total_steps && out.steps >= opts.max_total_steps) {
            out.status = PropStatus::Errored;
            out.message = "step budget exhausted";
            out.out_of_budget = true;
            return out;
        }
        std::optional<InputTuple> cand = generate_candidate(gt, plan, step, rng);
        ++step;
        if (!cand || !satisfies_input_spec(gt.spec, *cand)) {
            ++out.misses;
            continue;
        }
        ++out.tried;
        TrialResult tr = run_trial(*cand);
        switch (tr.what) {
            case TrialWhat::Passed:
                break;
            case TrialWhat::Failed:
                out.status = PropStatus::Failed;
                out.message = tr.message;
                out.counterexample = *cand;
                out.shrunk = shrink(*cand);
                return out;
            case TrialWhat::OracleError:
            case TrialWhat::Abort:
                out.status = PropStatus::Errored;
                out.message = tr.message;
                out.out_of_budget = tr.steps_hit;
                return out;
        }
    }
    out.status = PropStatus::Passed;
    return out;
}

}  // namespace teraliz::gen

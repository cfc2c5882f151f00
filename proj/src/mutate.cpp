#include "teraliz/mutate.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "teraliz/parse.hpp"
#include "teraliz/pretty.hpp"

namespace teraliz::mutate {

using ml::Block;
using ml::Expr;
using ml::FunctionDecl;
using ml::SourceFile;
using ml::Stmt;

const char* mut_op_name(MutOp op) {
    switch (op) {
        case MutOp::Math: return "Math";
        case MutOp::Increments: return "Increments";
        case MutOp::InvertNegs: return "InvertNegs";
        case MutOp::BooleanTrueReturnVals: return "BooleanTrueReturnVals";
        case MutOp::BooleanFalseReturnVals: return "BooleanFalseReturnVals";
        case MutOp::PrimitiveReturns: return "PrimitiveReturns";
        case MutOp::EmptyObjectReturnVals: return "EmptyObjectReturnVals";
        case MutOp::RemoveConditionalEqualElse: return "RemoveConditionalEqualElse";
        case MutOp::RemoveConditionalOrderElse: return "RemoveConditionalOrderElse";
        case MutOp::ConditionalsBoundary: return "ConditionalsBoundary";
        case MutOp::VoidMethodCall: return "VoidMethodCall";
    }
    return "?";
}

const char* cell_name(Cell c) {
    switch (c) {
        case Cell::Killed: return "killed";
        case Cell::Survived: return "survived";
        case Cell::TimedOut: return "timed_out";
        case Cell::NotCovered: return "not_covered";
    }
    return "?";
}

namespace {

/// One patchable location found by the walker. `apply` rewrites the walked
/// (mutable) AST in place; enumeration just drops it.
struct Site {
    MutOp op;
    Span span;
    Span stmt_span;
    std::string description;
    std::function<void()> apply;
};

BinaryOp math_swap(BinaryOp b) {
    switch (b) {
        case BinaryOp::Add: return BinaryOp::Sub;
        case BinaryOp::Sub: return BinaryOp::Add;
        case BinaryOp::Mul: return BinaryOp::Div;
        case BinaryOp::Div: return BinaryOp::Mul;
        default: return BinaryOp::Mul;  // %
    }
}

BinaryOp boundary_swap(BinaryOp b) {
    switch (b) {
        case BinaryOp::Lt: return BinaryOp::Le;
        case BinaryOp::Le: return BinaryOp::Lt;
        case BinaryOp::Gt: return BinaryOp::Ge;
        default: return BinaryOp::Gt;
    }
}

/// Renders `e` with its operator temporarily swapped.
std::string with_op(Expr& e, BinaryOp nb) {
    BinaryOp old = e.bop;
    e.bop = nb;
    std::string s = ml::pretty_expr(e);
    e.bop = old;
    return s;
}

/// The `x = x + 1` / `x = x - 1` unit, which Increments owns exclusively.
Expr* increments_binary(Stmt& s) {
    if (s.kind != Stmt::Kind::Assign || !s.value) return nullptr;
    Expr& e = *s.value;
    if (e.kind != Expr::Kind::Binary || (e.bop != BinaryOp::Add && e.bop != BinaryOp::Sub))
        return nullptr;
    const Expr& lhs = *e.children[0];
    const Expr& rhs = *e.children[1];
    if (lhs.kind != Expr::Kind::Var || lhs.name != s.name) return nullptr;
    if (rhs.kind != Expr::Kind::IntLit || rhs.int_val != 1) return nullptr;
    return &e;
}

void expr_preorder(Expr& e, const std::function<void(Expr&)>& f) {
    f(e);
    for (auto& c : e.children) expr_preorder(*c, f);
}

void collect_stmt(Stmt& s, Block& parent, size_t index, const FunctionDecl& fn,
                  const ml::Program& prog, std::vector<Site>& out) {
    Expr* inc = increments_binary(s);
    Span host = s.span;

    if (s.value) {
        expr_preorder(*s.value, [&](Expr& e) {
            if (&e == inc) return;
            if (e.kind == Expr::Kind::Binary && is_arith(e.bop)) {
                BinaryOp nb = math_swap(e.bop);
                out.push_back({MutOp::Math, e.span, host,
                               ml::pretty_expr(e) + " -> " + with_op(e, nb),
                               [&e, nb] { e.bop = nb; }});
            }
        });
    }

    if (inc) {
        BinaryOp nb = inc->bop == BinaryOp::Add ? BinaryOp::Sub : BinaryOp::Add;
        out.push_back({MutOp::Increments, s.span, host,
                       s.name + " = " + ml::pretty_expr(*inc) + " -> " + s.name + " = " +
                           with_op(*inc, nb),
                       [inc, nb] { inc->bop = nb; }});
    }

    if (s.value) {
        expr_preorder(*s.value, [&](Expr& e) {
            if (e.kind == Expr::Kind::Unary && e.uop == UnaryOp::Neg &&
                e.children[0]->kind == Expr::Kind::Var) {
                out.push_back({MutOp::InvertNegs, e.span, host,
                               ml::pretty_expr(e) + " -> " + e.children[0]->name, [&e] {
                                   ml::ExprPtr child = std::move(e.children[0]);
                                   e = std::move(*child);
                               }});
            }
        });
    }

    if (s.kind == Stmt::Kind::Return && s.value) {
        Expr& v = *s.value;
        std::string before = "return " + ml::pretty_expr(v);
        if (fn.return_type == Type::Bool) {
            if (!(v.kind == Expr::Kind::BoolLit && v.bool_val)) {
                out.push_back({MutOp::BooleanTrueReturnVals, v.span, host,
                               before + " -> return true",
                               [&s] { s.value = Expr::make_bool(true, s.value->span); }});
            }
            if (!(v.kind == Expr::Kind::BoolLit && !v.bool_val)) {
                out.push_back({MutOp::BooleanFalseReturnVals, v.span, host,
                               before + " -> return false",
                               [&s] { s.value = Expr::make_bool(false, s.value->span); }});
            }
        }
        if (fn.return_type == Type::Int32 &&
            !(v.kind == Expr::Kind::IntLit && v.int_val == 0)) {
            out.push_back({MutOp::PrimitiveReturns, v.span, host, before + " -> return 0",
                           [&s] { s.value = Expr::make_int(0, s.value->span); }});
        }
        if (fn.return_type == Type::Str &&
            !(v.kind == Expr::Kind::StrLit && v.str_val.empty())) {
            out.push_back({MutOp::EmptyObjectReturnVals, v.span, host,
                           before + " -> return \"\"",
                           [&s] { s.value = Expr::make_str("", s.value->span); }});
        }
    }

    if (s.kind == Stmt::Kind::If && s.value && s.value->kind == Expr::Kind::Binary) {
        Expr& cond = *s.value;
        bool eq_class = is_equality(cond.bop);
        if (eq_class || is_order(cond.bop)) {
            out.push_back({eq_class ? MutOp::RemoveConditionalEqualElse
                                    : MutOp::RemoveConditionalOrderElse,
                           cond.span, host, ml::pretty_expr(cond) + " -> false",
                           [&s] { s.value = Expr::make_bool(false, s.value->span); }});
        }
    }

    if (s.value) {
        expr_preorder(*s.value, [&](Expr& e) {
            if (e.kind == Expr::Kind::Binary && is_order(e.bop)) {
                BinaryOp nb = boundary_swap(e.bop);
                out.push_back({MutOp::ConditionalsBoundary, e.span, host,
                               ml::pretty_expr(e) + " -> " + with_op(e, nb),
                               [&e, nb] { e.bop = nb; }});
            }
        });
    }

    if (s.kind == Stmt::Kind::ExprStmt && s.value && s.value->kind == Expr::Kind::Call) {
        const FunctionDecl* callee = prog.find(s.value->name);
        if (callee && callee->return_type == Type::Void) {
            out.push_back({MutOp::VoidMethodCall, s.span, host,
                           ml::pretty_expr(*s.value) + " -> removed",
                           [&parent, index] {
                               parent.stmts.erase(parent.stmts.begin() +
                                                  static_cast<std::ptrdiff_t>(index));
                           }});
        }
    }
}

void walk_block(Block& b, const FunctionDecl& fn, const ml::Program& prog,
                std::vector<Site>& out) {
    for (size_t i = 0; i < b.stmts.size(); ++i) {
        Stmt& s = *b.stmts[i];
        collect_stmt(s, b, i, fn, prog, out);
        if (s.kind == Stmt::Kind::If) {
            if (s.block_a) walk_block(*s.block_a, fn, prog, out);
            if (s.block_b) walk_block(*s.block_b, fn, prog, out);
        } else if (s.kind == Stmt::Kind::While) {
            if (s.block_a) walk_block(*s.block_a, fn, prog, out);
        }
    }
}

std::vector<Site> sites_of(SourceFile& file, const ml::Program& prog) {
    std::vector<Site> sites;
    for (FunctionDecl& fn : file.functions) walk_block(fn.body, fn, prog, sites);
    return sites;
}

std::vector<const SourceFile*> impl_files_sorted(const ml::Program& prog) {
    std::vector<const SourceFile*> files;
    for (const auto& f : prog.files)
        if (f->kind == ml::FileKind::Impl) files.push_back(f.get());
    std::sort(files.begin(), files.end(),
              [](const SourceFile* a, const SourceFile* b) { return a->path < b->path; });
    return files;
}

}  // namespace

std::vector<Mutant> enumerate_mutants(const ml::Program& program) {
    std::vector<Mutant> all;
    for (const SourceFile* file : impl_files_sorted(program)) {
        SourceFile scratch = ml::clone(*file);
        std::vector<Site> sites = sites_of(scratch, program);
        for (size_t i = 0; i < sites.size(); ++i) {
            Mutant m;
            m.id = "m" + std::to_string(all.size());
            m.op = sites[i].op;
            m.file = file->path;
            m.ordinal = static_cast<uint32_t>(i);
            m.span = sites[i].span;
            m.stmt_span = sites[i].stmt_span;
            m.description = sites[i].description;
            all.push_back(std::move(m));
        }
    }
    return all;
}

ml::Program apply_mutant(const ml::Program& program, const Mutant& m) {
    std::vector<SourceFile> files;
    bool patched = false;
    for (const auto& f : program.files) {
        SourceFile c = ml::clone(*f);
        if (!patched && f->kind == ml::FileKind::Impl && c.path == m.file) {
            std::vector<Site> sites = sites_of(c, program);
            if (m.ordinal >= sites.size())
                throw std::logic_error("mutant ordinal out of range for " + m.file);
            sites[m.ordinal].apply();
            patched = true;
        }
        files.push_back(std::move(c));
    }
    if (!patched) throw std::logic_error("mutant file not in program: " + m.file);
    return ml::link(std::move(files));
}

bool KillMatrix::mutant_killed(size_t mi) const {
    for (Cell c : cells[mi])
        if (cell_kills(c)) return true;
    return false;
}

std::vector<size_t> KillMatrix::kills_of(size_t test_idx) const {
    std::vector<size_t> out;
    for (size_t mi = 0; mi < cells.size(); ++mi)
        if (cell_kills(cells[mi][test_idx])) out.push_back(mi);
    return out;
}

namespace {

using SpanKey = std::pair<uint32_t, uint32_t>;
using Touched = std::map<std::string, std::set<SpanKey>>;

struct CoverageHook final : interp::Hooks {
    Touched touched;

    void on_stmt(const SourceFile& f, const Stmt& s) override {
        if (f.kind == ml::FileKind::Impl) touched[f.path].insert({s.span.begin, s.span.end});
    }
};

bool covers(const Touched& t, const Mutant& m) {
    auto it = t.find(m.file);
    if (it == t.end()) return false;
    return it->second.count({m.stmt_span.begin, m.stmt_span.end}) > 0;
}

struct PreparedTest {
    uint64_t budget = 0;
    Touched touched;
};

}  // namespace

MutationOutcome run_mutation_testing(const ml::Program& program,
                                     const std::vector<TestCase>& suite,
                                     const std::vector<Mutant>& mutants,
                                     const MutationOptions& opts) {
    MutationOutcome out;
    out.matrix.test_names.reserve(suite.size());
    for (const TestCase& tc : suite) out.matrix.test_names.push_back(tc.name);

    // Green phase: each test must pass untouched; this also pins its step
    // budget and which implementation statements it reaches.
    std::vector<PreparedTest> prep(suite.size());
    for (size_t t = 0; t < suite.size(); ++t) {
        const TestCase& tc = suite[t];
        CoverageHook cov;
        uint64_t steps = 0;
        if (tc.is_property) {
            gen::RunOptions ro = opts.property_opts;
            ro.observer = &cov;
            gen::PropertyOutcome po = gen::run_property(program, *tc.gt, tc.gt_source, ro);
            if (po.status != gen::PropStatus::Passed)
                throw NotGreenError(tc.name, std::string(gen::prop_status_name(po.status)) +
                                                 (po.message.empty() ? "" : ": " + po.message));
            steps = po.steps;
        } else {
            const FunctionDecl* fn = program.find(tc.name);
            if (!fn || !fn->annotation) throw NotGreenError(tc.name, "no such test function");
            interp::TestResult tr = interp::run_test(program, *fn, {}, &cov);
            if (tr.status != interp::TestStatus::Passed)
                throw NotGreenError(tc.name, tr.message.empty()
                                                 ? interp::test_status_name(tr.status)
                                                 : tr.message);
            steps = tr.steps;
        }
        prep[t].budget = std::max(opts.min_budget, opts.budget_factor * steps);
        prep[t].touched = std::move(cov.touched);
        out.total_steps += steps;
    }

    out.matrix.mutant_ids.reserve(mutants.size());
    for (const Mutant& m : mutants) out.matrix.mutant_ids.push_back(m.id);
    out.matrix.cells.assign(mutants.size(), std::vector<Cell>(suite.size(), Cell::NotCovered));

    if (mutants.empty()) {
        out.empty_enumeration = true;
        out.score = 1.0;
        for (const TestCase& tc : suite) out.per_test_kills.push_back({tc.name, {}});
        return out;
    }

    std::vector<uint64_t> mutant_steps(mutants.size(), 0);

    auto measure = [&](size_t mi) {
        ml::Program patched = apply_mutant(program, mutants[mi]);
        for (size_t t = 0; t < suite.size(); ++t) {
            if (!covers(prep[t].touched, mutants[mi])) continue;  // stays NotCovered
            const TestCase& tc = suite[t];
            Cell cell = Cell::Survived;
            if (tc.is_property) {
                gen::RunOptions ro = opts.property_opts;
                ro.max_total_steps = prep[t].budget;
                gen::PropertyOutcome po = gen::run_property(patched, *tc.gt, tc.gt_source, ro);
                mutant_steps[mi] += po.steps;
                switch (po.status) {
                    case gen::PropStatus::Passed: cell = Cell::Survived; break;
                    case gen::PropStatus::Failed: cell = Cell::Killed; break;
                    case gen::PropStatus::TooManyFilterMisses: cell = Cell::Survived; break;
                    case gen::PropStatus::Errored:
                        cell = po.out_of_budget ? Cell::TimedOut : Cell::Killed;
                        break;
                }
            } else {
                const FunctionDecl* fn = patched.find(tc.name);
                interp::RunLimits lim;
                lim.max_steps = prep[t].budget;
                interp::TestResult tr = interp::run_test(patched, *fn, lim, nullptr);
                mutant_steps[mi] += tr.steps;
                if (tr.status == interp::TestStatus::Passed) {
                    cell = Cell::Survived;
                } else if (tr.status == interp::TestStatus::Failed) {
                    cell = Cell::Killed;
                } else {
                    cell = tr.message == "step budget exceeded" ? Cell::TimedOut : Cell::Killed;
                }
            }
            out.matrix.cells[mi][t] = cell;
        }
    };

    std::atomic<bool> aborted{false};
    auto abort_now = [&] {
        if (aborted.load(std::memory_order_relaxed)) return true;
        if (opts.abort_requested && opts.abort_requested()) {
            aborted.store(true, std::memory_order_relaxed);
            return true;
        }
        return false;
    };

    int jobs = std::max(1, opts.jobs);
    if (jobs == 1 || mutants.size() < 2) {
        for (size_t mi = 0; mi < mutants.size(); ++mi) {
            if (abort_now()) break;
            measure(mi);
        }
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (size_t mi = next.fetch_add(1); mi < mutants.size(); mi = next.fetch_add(1)) {
                if (abort_now()) break;
                measure(mi);
            }
        };
        std::vector<std::thread> pool;
        int n = std::min<int>(jobs, static_cast<int>(mutants.size()));
        pool.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (aborted.load()) throw AbortedError("mutant measurement aborted by the caller");

    size_t killed = 0;
    for (size_t mi = 0; mi < mutants.size(); ++mi) {
        out.total_steps += mutant_steps[mi];
        Cell status = Cell::NotCovered;
        for (Cell c : out.matrix.cells[mi]) {
            if (c == Cell::Killed) {
                status = Cell::Killed;
                break;
            }
            if (c == Cell::TimedOut) {
                status = Cell::TimedOut;
            } else if (c == Cell::Survived && status != Cell::TimedOut) {
                status = Cell::Survived;
            }
        }
        if (cell_kills(status)) ++killed;
        out.rows.push_back({mutants[mi], status});
    }
    out.score = static_cast<double>(killed) / static_cast<double>(mutants.size());

    for (size_t t = 0; t < suite.size(); ++t) {
        std::vector<std::string> ids;
        for (size_t mi : out.matrix.kills_of(t)) ids.push_back(mutants[mi].id);
        out.per_test_kills.push_back({suite[t].name, std::move(ids)});
    }
    return out;
}

}  // namespace teraliz::mutate

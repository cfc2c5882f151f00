#include "teraliz/analyzer.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace teraliz::analyzer {

using ml::Block;
using ml::Expr;
using ml::FunctionDecl;
using ml::Program;
using ml::SourceFile;
using ml::Stmt;

namespace {

void collect_assertions(const Block& b, std::vector<const Stmt*>& out) {
    for (const ml::StmtPtr& s : b.stmts) {
        if (s->kind == Stmt::Kind::Assert) {
            out.push_back(s.get());
            continue;  // assert_throws blocks are the assertion's operand
        }
        if (s->block_a) collect_assertions(*s->block_a, out);
        if (s->block_b) collect_assertions(*s->block_b, out);
    }
}

// Reaching definitions over a test body: which let/assign statements can have
// produced each variable's value at the moment a given statement runs.
using DefSet = std::set<const Stmt*>;
using DefMap = std::map<std::string, DefSet>;

void merge_into(DefMap& into, const DefMap& other) {
    for (const auto& [name, defs] : other) into[name].insert(defs.begin(), defs.end());
}

class DefWalker {
  public:
    explicit DefWalker(const Stmt* target) : target_(target) {}

    DefMap defs_at_target(const Block& body) {
        DefMap env;
        walk_block(body, env);
        return at_target_;
    }

  private:
    const Stmt* target_;
    DefMap at_target_;
    bool capture_ = true;

    void walk_block(const Block& b, DefMap& env) {
        std::vector<std::string> locals;
        for (const ml::StmtPtr& s : b.stmts) walk_stmt(*s, env, locals);
        for (const std::string& name : locals) env.erase(name);
    }

    void walk_stmt(const Stmt& s, DefMap& env, std::vector<std::string>& locals) {
        if (capture_ && &s == target_) merge_into(at_target_, env);
        switch (s.kind) {
            case Stmt::Kind::Let:
                env[s.name] = {&s};
                locals.push_back(s.name);
                return;
            case Stmt::Kind::Assign:
                env[s.name] = {&s};
                return;
            case Stmt::Kind::If: {
                DefMap then_env = env;
                walk_block(*s.block_a, then_env);
                if (s.block_b) {
                    DefMap else_env = env;
                    walk_block(*s.block_b, else_env);
                    env = std::move(then_env);
                    merge_into(env, else_env);
                } else {
                    merge_into(env, then_env);
                }
                return;
            }
            case Stmt::Kind::While: {
                // The body runs zero or more times; grow to a fixpoint, then
                // replay once so a target inside the loop sees carried defs.
                bool saved = capture_;
                capture_ = false;
                for (;;) {
                    DefMap body_env = env;
                    walk_block(*s.block_a, body_env);
                    DefMap merged = env;
                    merge_into(merged, body_env);
                    if (merged == env) break;
                    env = std::move(merged);
                }
                capture_ = saved;
                if (capture_) {
                    DefMap body_env = env;
                    walk_block(*s.block_a, body_env);
                }
                return;
            }
            case Stmt::Kind::Assert:
                if (s.assert_kind == ml::AssertKind::Throws) {
                    // The block may stop anywhere; its effects are possible,
                    // not guaranteed.
                    DefMap body_env = env;
                    walk_block(*s.block_a, body_env);
                    merge_into(env, body_env);
                }
                return;
            case Stmt::Kind::Return:
            case Stmt::Kind::ExprStmt:
                return;
        }
    }
};

void last_impl_call_in_expr(const Program& prog, const Expr& e, const Expr*& last) {
    for (const ml::ExprPtr& c : e.children) last_impl_call_in_expr(prog, *c, last);
    if (e.kind == Expr::Kind::Call && prog.is_impl_fn(e.name)) last = &e;
}

void last_impl_call_in_block(const Program& prog, const Block& b, const Expr*& last) {
    for (const ml::StmtPtr& s : b.stmts) {
        if (s->value) last_impl_call_in_expr(prog, *s->value, last);
        if (s->value2) last_impl_call_in_expr(prog, *s->value2, last);
        if (s->block_a) last_impl_call_in_block(prog, *s->block_a, last);
        if (s->block_b) last_impl_call_in_block(prog, *s->block_b, last);
    }
}

}  // namespace

std::vector<const Stmt*> assertions_of(const FunctionDecl& test) {
    std::vector<const Stmt*> out;
    collect_assertions(test.body, out);
    return out;
}

bool assertion_type_accepts(ml::AssertKind) {
    // assert_eq, assert_true, assert_false, and assert_throws all pin down an
    // observable outcome of the call under test.
    return true;
}

std::vector<uint32_t> generalizable_params(const FunctionDecl& fn) {
    std::vector<uint32_t> out;
    for (uint32_t i = 0; i < fn.params.size(); ++i)
        if (fn.params[i].type == Type::Int32 || fn.params[i].type == Type::Bool) out.push_back(i);
    return out;
}

std::string return_type_objection(const FunctionDecl& mut, bool throws) {
    if (throws) return "";  // The outcome is the raised error, not the value.
    if (mut.return_type == Type::Str || mut.return_type == Type::Void)
        return "'" + mut.name + "' returns " + type_name(mut.return_type);
    return "";
}

MutResolution resolve_mut(const Program& prog, const FunctionDecl& test, const Stmt& assertion) {
    MutResolution r;
    if (assertion.assert_kind == ml::AssertKind::Throws) {
        const Expr* last = nullptr;
        last_impl_call_in_block(prog, *assertion.block_a, last);
        if (!last) {
            r.failure = "no implementation call inside assert_throws";
            return r;
        }
        r.call = last;
        r.fn = prog.find(last->name);
        return r;
    }

    const Expr* actual = assertion.assert_kind == ml::AssertKind::Eq ? assertion.value2.get()
                                                                     : assertion.value.get();
    r.actual = actual;
    if (actual->kind == Expr::Kind::Call) {
        if (!prog.is_impl_fn(actual->name)) {
            r.failure = "call target '" + actual->name + "' is not implementation code";
            return r;
        }
        r.call = actual;
        r.fn = prog.find(actual->name);
        return r;
    }
    if (actual->kind == Expr::Kind::Var) {
        DefMap defs = DefWalker(&assertion).defs_at_target(test.body);
        auto it = defs.find(actual->name);
        if (it == defs.end() || it->second.empty()) {
            r.failure = "variable '" + actual->name + "' has no visible definition";
            return r;
        }
        if (it->second.size() > 1) {
            r.failure = "variable '" + actual->name + "' has multiple definitions";
            return r;
        }
        const Stmt* def = *it->second.begin();
        const Expr* rhs = def->value.get();
        if (rhs->kind != Expr::Kind::Call || !prog.is_impl_fn(rhs->name)) {
            r.failure =
                "variable '" + actual->name + "' is not defined by a direct implementation call";
            return r;
        }
        r.call = rhs;
        r.fn = prog.find(rhs->name);
        return r;
    }
    r.failure = "asserted expression is not a call or variable";
    return r;
}

Analysis analyze(const Program& prog, const Config& cfg, const interp::SuiteResult* suite) {
    Analysis out;
    out.suite = suite ? *suite : interp::run_suite(prog);

    std::map<std::string, bool> file_bad;
    for (const interp::TestResult& t : out.suite.tests) {
        bool bad = t.status == interp::TestStatus::Failed || t.status == interp::TestStatus::Errored;
        file_bad[t.file] = file_bad[t.file] || bad;
    }

    auto excluded = [&](const std::string& test, const std::string& id) {
        return std::find(cfg.excluded.begin(), cfg.excluded.end(), test) != cfg.excluded.end() ||
               std::find(cfg.excluded.begin(), cfg.excluded.end(), id) != cfg.excluded.end();
    };

    std::vector<const SourceFile*> files;
    for (const auto& f : prog.files)
        if (f->kind == ml::FileKind::Test) files.push_back(f.get());
    std::sort(files.begin(), files.end(),
              [](const SourceFile* a, const SourceFile* b) { return a->path < b->path; });

    for (const SourceFile* file : files) {
        for (const FunctionDecl& fn : file->functions) {
            if (!fn.annotation) continue;

            if (fn.annotation->kind != ml::Annotation::Kind::Test) {
                out.rejections.push_back(
                    {fn.name, -1, "test_type", "only #[test] functions are generalized"});
                continue;
            }
            if (file_bad[file->path]) {
                out.rejections.push_back({fn.name, -1, "non_passing_test",
                                          "file '" + file->path + "' has non-passing tests"});
                continue;
            }
            std::vector<const Stmt*> asserts = assertions_of(fn);
            if (asserts.empty()) {
                out.rejections.push_back(
                    {fn.name, -1, "no_assertions", "test body has no assertions"});
                continue;
            }

            for (int k = 0; k < static_cast<int>(asserts.size()); ++k) {
                const Stmt& assertion = *asserts[k];
                std::string id = fn.name + "#" + std::to_string(k);
                if (!assertion_type_accepts(assertion.assert_kind)) {
                    out.rejections.push_back(
                        {fn.name, k, "assertion_type", "assertion form is not checkable"});
                    continue;
                }
                if (excluded(fn.name, id)) {
                    out.rejections.push_back(
                        {fn.name, k, "excluded_test", "excluded by configuration"});
                    continue;
                }
                MutResolution mut = resolve_mut(prog, fn, assertion);
                if (!mut.failure.empty()) {
                    out.rejections.push_back({fn.name, k, "missing_value", mut.failure});
                    continue;
                }
                std::vector<uint32_t> gen = generalizable_params(*mut.fn);
                if (gen.empty()) {
                    out.rejections.push_back(
                        {fn.name, k, "parameter_type",
                         "'" + mut.fn->name + "' has no int or bool parameters"});
                    continue;
                }
                bool throws = assertion.assert_kind == ml::AssertKind::Throws;
                std::string objection = return_type_objection(*mut.fn, throws);
                if (!objection.empty()) {
                    out.rejections.push_back({fn.name, k, "return_type", objection});
                    continue;
                }

                Target t;
                t.test_name = fn.name;
                t.assertion_index = k;
                t.test_file = file;
                t.test_fn = &fn;
                t.assertion = &assertion;
                t.actual = mut.actual;
                t.mut_call = mut.call;
                t.mut = mut.fn;
                t.gen_params = std::move(gen);
                t.throws = throws;
                out.targets.push_back(std::move(t));
            }
        }
    }
    return out;
}

}  // namespace teraliz::analyzer

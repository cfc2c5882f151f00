#include "teraliz/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "teraliz/analyzer.hpp"
#include "teraliz/gen.hpp"
#include "teraliz/interp.hpp"
#include "teraliz/mutate.hpp"
#include "teraliz/parse.hpp"
#include "teraliz/pretty.hpp"
#include "teraliz/reduce.hpp"
#include "teraliz/symexpr.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace teraliz::pipeline {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string iso_utc_now() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[24];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

void write_report(std::ostream& log, const fs::path& root, const std::string& rel,
                  const json& j) {
    write_text(root / rel, j.dump(2) + "\n");
    log << "wrote " << rel << "\n";
}

fs::path output_root(const Config& cfg) {
    return cfg.out_root.empty() ? fs::path(cfg.project_dir) : fs::path(cfg.out_root);
}

int count_lines(const std::string& text) {
    int n = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
    if (!text.empty() && text.back() != '\n') ++n;
    return n;
}

json value_json(const interp::Value& v) {
    switch (v.type) {
        case Type::Int32: return v.i;
        case Type::Bool: return v.b;
        case Type::Str: return v.s;
        case Type::Void: break;
    }
    return nullptr;
}

std::string show_tuple(const gen::InputTuple& tuple) {
    std::string s;
    for (const interp::Value& v : tuple) {
        if (!s.empty()) s += ", ";
        s += v.show();
    }
    return s;
}

// ---------------------------------------------------------------------------
// Project loading and the shared stages (suite run, filtering, extraction).

struct Stage {
    fs::path root;
    ml::Program program;
    int annotated = 0;  ///< Annotated test functions found.
    analyzer::Analysis analysis;
    std::vector<concolic::Extraction> extractions;  ///< Parallel to analysis.targets.
    double suite_seconds = 0.0;
};

/// Parses src/*.ml and tests/*.ml (paths sorted) and links them. Returns 0,
/// or 1 after printing a parse/type/io error.
int load_project(const Config& cfg, std::ostream& out, Stage& st) {
    st.root = output_root(cfg);
    fs::path dir(cfg.project_dir);
    if (!fs::is_directory(dir)) {
        out << "error: project directory '" << cfg.project_dir << "' not found\n";
        return 1;
    }
    std::vector<ml::SourceFile> files;
    auto add_dir = [&](const char* sub, ml::FileKind kind) -> int {
        fs::path d = dir / sub;
        if (!fs::is_directory(d)) return 0;
        std::vector<fs::path> paths;
        for (const fs::directory_entry& e : fs::directory_iterator(d))
            if (e.is_regular_file() && e.path().extension() == ".ml") paths.push_back(e.path());
        std::sort(paths.begin(), paths.end());
        for (const fs::path& p : paths) {
            std::string rel = std::string(sub) + "/" + p.filename().string();
            try {
                files.push_back(ml::parse_file(slurp(p), rel, kind));
            } catch (const ParseError& e) {
                out << "error: " << rel << ":" << e.line << ":" << e.col << ": " << e.what()
                    << "\n";
                return 1;
            } catch (const TypeError& e) {
                out << "error: " << rel << ": " << e.what() << "\n";
                return 1;
            } catch (const std::exception& e) {
                out << "error: " << e.what() << "\n";
                return 1;
            }
        }
        return 0;
    };
    if (add_dir("src", ml::FileKind::Impl)) return 1;
    if (add_dir("tests", ml::FileKind::Test)) return 1;
    try {
        st.program = ml::link(std::move(files));
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return 1;
    }
    for (const auto& f : st.program.files)
        if (f->kind == ml::FileKind::Test)
            for (const ml::FunctionDecl& fn : f->functions)
                if (fn.annotation) ++st.annotated;
    return 0;
}

/// Runs the example suite and the filter chain, timing the stage.
void run_analysis(Stage& st) {
    Clock::time_point t0 = Clock::now();
    st.analysis = analyzer::analyze(st.program);
    st.suite_seconds = seconds_since(t0);
}

void run_extraction(const Config& cfg, Stage& st) {
    st.extractions.clear();
    for (const analyzer::Target& t : st.analysis.targets)
        st.extractions.push_back(concolic::extract_spec(st.program, t, cfg.extraction));
}

// ---------------------------------------------------------------------------
// Report builders.

json tests_json(const Stage& st) {
    json tests = json::array();
    for (const interp::TestResult& tr : st.analysis.suite.tests) {
        const ml::FunctionDecl* fn = st.program.find(tr.name);
        size_t asserts = fn ? analyzer::assertions_of(*fn).size() : 0;
        tests.push_back({
            {"assertions", asserts},
            {"file", tr.file},
            {"message", tr.message},
            {"name", tr.name},
            {"status", interp::test_status_name(tr.status)},
            {"steps", tr.steps},
        });
    }
    return json{{"schema", 1},
                {"all_passed", st.analysis.suite.all_passed},
                {"tests", tests},
                {"total_steps", st.analysis.suite.total_steps}};
}

json assertions_json(const Stage& st) {
    json targets = json::array();
    for (const analyzer::Target& t : st.analysis.targets) {
        targets.push_back({
            {"assertion_index", t.assertion_index},
            {"function", t.mut->name},
            {"id", t.id()},
            {"params", t.gen_params},
            {"test", t.test_name},
            {"throws", t.throws},
        });
    }
    json rejections = json::array();
    for (const analyzer::Rejection& r : st.analysis.rejections) {
        rejections.push_back({
            {"assertion_index", r.assertion_index},
            {"detail", r.detail},
            {"filter", r.filter},
            {"id", r.id()},
            {"test", r.test_name},
        });
    }
    return json{{"schema", 1}, {"rejections", rejections}, {"targets", targets}};
}

json specs_json(const Stage& st) {
    json specs = json::array();
    for (size_t i = 0; i < st.analysis.targets.size(); ++i) {
        const analyzer::Target& t = st.analysis.targets[i];
        const concolic::Extraction& ex = st.extractions[i];
        json rec{{"target", t.id()}, {"ok", ex.ok()}};
        if (ex.ok()) {
            const concolic::PathSpec& s = *ex.spec;
            json params = json::array();
            for (const concolic::SymParam& p : s.symbolic_params)
                params.push_back(
                    {{"index", p.index}, {"name", p.name}, {"type", type_name(p.type)}});
            json pc = json::array();
            for (const sym::SymPtr& c : s.pc) pc.push_back(sym::render(*c));
            json seeds = json::array();
            for (const interp::Value& v : s.concrete_inputs) seeds.push_back(value_json(v));
            rec["params"] = params;
            rec["pc"] = pc;
            rec["seeds"] = seeds;
            if (s.error_outcome) {
                rec["outcome"] = nullptr;
                rec["error"] = interp::error_kind_name(s.error_kind);
            } else {
                rec["outcome"] = sym::render(*s.outcome);
                rec["error"] = nullptr;
            }
        } else {
            rec["cause"] = concolic::failure_cause_name(ex.failure->cause);
            rec["detail"] = ex.failure->detail;
        }
        specs.push_back(std::move(rec));
    }
    return json{{"schema", 1}, {"specs", specs}};
}

// ---------------------------------------------------------------------------
// Stage 4: generalized tests per variant.

struct VariantDef {
    std::string name;
    SupplierKind kind;
    int tries;
};

std::vector<VariantDef> plan_variants(const Config& cfg) {
    auto wants = [&](const char* s) {
        return std::find(cfg.suppliers.begin(), cfg.suppliers.end(), s) != cfg.suppliers.end();
    };
    std::vector<VariantDef> plan;
    if (wants("baseline")) plan.push_back({"baseline", SupplierKind::Baseline, 1});
    if (wants("naive"))
        for (int t : cfg.tries_list)
            plan.push_back({"naive_" + std::to_string(t), SupplierKind::Naive, t});
    if (wants("improved"))
        for (int t : cfg.tries_list)
            plan.push_back({"improved_" + std::to_string(t), SupplierKind::Improved, t});
    return plan;
}

struct GtCell {
    size_t target_idx;
    size_t variant_idx;
    gen::GeneralizedTest gt;
    gen::EmitResult emit;
    gen::PropertyOutcome green;  ///< Run against the unmutated program.
    std::string rel_path;        ///< Set once the green source is written out.
};

bool cell_green(const GtCell& c) {
    return c.emit.ok && c.green.status == gen::PropStatus::Passed;
}

std::vector<GtCell> make_cells(const Config& cfg, const Stage& st,
                               const std::vector<VariantDef>& plan) {
    std::vector<GtCell> cells;
    for (size_t vi = 0; vi < plan.size(); ++vi) {
        const VariantDef& v = plan[vi];
        for (size_t ti = 0; ti < st.analysis.targets.size(); ++ti) {
            if (!st.extractions[ti].ok()) continue;
            GtCell c{ti, vi,
                     gen::make_gt(st.analysis.targets[ti], *st.extractions[ti].spec, v.kind,
                                  v.tries, cfg.rng_seed, v.name),
                     {}, {}, {}};
            cells.push_back(std::move(c));
        }
    }
    return cells;
}

/// Emits every cell's source and checks it against the unmutated program.
/// Cells are independent; `jobs` of them run at a time.
void green_run_cells(const Config& cfg, const Stage& st, std::vector<GtCell>& cells) {
    gen::RunOptions ro;
    ro.discard_ratio = cfg.discard_ratio;
    auto run_one = [&](GtCell& c) {
        c.emit = gen::emit_generalized_source(c.gt);
        if (!c.emit.ok) return;
        c.green = gen::run_property(st.program, c.gt, &c.emit.source, ro);
    };
    int jobs = std::max(1, cfg.jobs);
    if (jobs == 1 || cells.size() < 2) {
        for (GtCell& c : cells) run_one(c);
        return;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
            run_one(cells[i]);
    };
    std::vector<std::thread> pool;
    int n = std::min<int>(jobs, static_cast<int>(cells.size()));
    pool.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
}

/// Green tests get their source written under generalized/<variant>/.
void write_green_files(const Stage& st, const std::vector<VariantDef>& plan,
                       std::vector<GtCell>& cells) {
    for (GtCell& c : cells) {
        if (!cell_green(c)) continue;
        std::string rel = "generalized/" + plan[c.variant_idx].name + "/" + c.gt.prop_name + ".ml";
        write_text(st.root / rel, c.emit.source);
        c.rel_path = rel;
    }
}

json generalizations_json(const Config& cfg, const Stage& st,
                          const std::vector<VariantDef>& plan,
                          const std::vector<GtCell>& cells) {
    json names = json::array();
    for (const VariantDef& v : plan) names.push_back(v.name);
    json tests = json::array();
    for (const GtCell& c : cells) {
        const analyzer::Target& t = st.analysis.targets[c.target_idx];
        json rec{
            {"assertion_index", t.assertion_index},
            {"id", c.gt.id},
            {"rng_seed", c.gt.rng_seed},
            {"supplier", supplier_name(c.gt.kind)},
            {"target", t.id()},
            {"test", t.test_name},
            {"tries", c.gt.tries},
            {"variant", plan[c.variant_idx].name},
        };
        if (c.emit.ok) {
            rec["status"] = gen::prop_status_name(c.green.status);
            rec["message"] = c.green.message;
            rec["tried"] = c.green.tried;
            rec["misses"] = c.green.misses;
            rec["steps"] = c.green.steps;
        } else {
            rec["status"] = "errored";
            rec["message"] = c.emit.error;
            rec["tried"] = 0;
            rec["misses"] = 0;
            rec["steps"] = 0;
        }
        rec["file"] = c.rel_path.empty() ? json(nullptr) : json(c.rel_path);
        tests.push_back(std::move(rec));
    }
    return json{{"schema", 1},
                {"discard_ratio", cfg.discard_ratio},
                {"rng_seed", cfg.rng_seed},
                {"tests", tests},
                {"variants", names}};
}

// ---------------------------------------------------------------------------
// Stage 5: mutation matrices and reduction.

mutate::MutationOptions mutation_options(const Config& cfg) {
    mutate::MutationOptions mo;
    mo.jobs = cfg.jobs;
    mo.property_opts.discard_ratio = cfg.discard_ratio;
    return mo;
}

std::function<bool()> deadline_check(double seconds) {
    Clock::time_point deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(seconds));
    return [deadline] { return Clock::now() > deadline; };
}

std::vector<mutate::TestCase> passed_original_cases(const Stage& st) {
    std::vector<mutate::TestCase> cases;
    for (const interp::TestResult& tr : st.analysis.suite.tests)
        if (tr.status == interp::TestStatus::Passed) cases.push_back({tr.name, false, nullptr, nullptr});
    return cases;
}

std::map<std::string, size_t> assertion_counts(const Stage& st,
                                               const std::vector<mutate::TestCase>& originals) {
    std::map<std::string, size_t> counts;
    for (const mutate::TestCase& tc : originals) {
        const ml::FunctionDecl* fn = st.program.find(tc.name);
        counts[tc.name] = fn ? analyzer::assertions_of(*fn).size() : 0;
    }
    return counts;
}

json mutation_json(const std::string& suite_name, const mutate::MutationOutcome& mo) {
    json mutants = json::array();
    size_t killed = 0;
    for (const mutate::MutantStatus& row : mo.rows) {
        if (mutate::cell_kills(row.status)) ++killed;
        mutants.push_back({
            {"description", row.mutant.description},
            {"file", row.mutant.file},
            {"id", row.mutant.id},
            {"line", row.mutant.span.line},
            {"op", mutate::mut_op_name(row.mutant.op)},
            {"status", mutate::cell_name(row.status)},
        });
    }
    json per_test = json::object();
    for (const auto& [name, ids] : mo.per_test_kills) per_test[name] = ids;
    json j{{"schema", 1},
           {"killed", killed},
           {"mutants", mutants},
           {"per_test_kills", per_test},
           {"score", mo.score},
           {"suite", suite_name},
           {"tests", mo.matrix.test_names},
           {"total", mo.rows.size()}};
    if (mo.empty_enumeration) j["warning"] = "no mutants enumerated";
    return j;
}

json excluded_json(const std::string& variant, const std::string& cause) {
    return json{{"schema", 1}, {"cause", cause}, {"excluded", true}, {"variant", variant}};
}

json reduction_json(const std::string& variant, const reduce::ReductionDecision& dec,
                    const VariantSummary& vs) {
    json retained = json::array();
    for (const reduce::RetainedTest& rt : dec.retained)
        retained.push_back({{"gt", rt.gt_id}, {"new_kills", rt.new_kills}});
    return json{{"schema", 1},
                {"final_suite", dec.final_suite},
                {"loc_after", vs.loc_after},
                {"loc_before", vs.loc_before},
                {"new_kills", dec.new_kills},
                {"removed_originals", dec.originals_removed},
                {"retained", retained},
                {"score_after", dec.score_after},
                {"score_before", dec.score_before},
                {"tests_after", vs.tests_after},
                {"tests_before", vs.tests_before},
                {"variant", variant}};
}

/// LOC and size columns for the summary table. `gt_source_of` resolves a
/// generalized test's emitted text by matrix column name.
template <typename SourceOf>
VariantSummary summarize(const Stage& st, const std::string& variant,
                         const std::vector<mutate::TestCase>& originals,
                         const reduce::ReductionDecision& dec, SourceOf gt_source_of) {
    VariantSummary vs;
    vs.variant = variant;
    vs.tests_before = static_cast<int>(originals.size());
    vs.tests_after = static_cast<int>(dec.final_suite.size());
    vs.score_before = dec.score_before;
    vs.score_after = dec.score_after;
    std::set<std::string> orig_names;
    for (const mutate::TestCase& tc : originals) {
        orig_names.insert(tc.name);
        if (const ml::FunctionDecl* fn = st.program.find(tc.name))
            vs.loc_before += ml::pretty_line_count(*fn);
    }
    for (const std::string& name : dec.final_suite) {
        if (orig_names.count(name)) {
            if (const ml::FunctionDecl* fn = st.program.find(name))
                vs.loc_after += ml::pretty_line_count(*fn);
        } else {
            vs.loc_after += count_lines(gt_source_of(name));
        }
    }
    return vs;
}

void print_table(std::ostream& out, const std::vector<VariantSummary>& rows) {
    auto arrow = [](auto a, auto b) {
        std::ostringstream ss;
        ss << a << " -> " << b;
        return ss.str();
    };
    auto score = [](double a, double b) {
        std::ostringstream ss;
        ss << std::fixed << std::setprecision(3) << a << " -> " << b;
        return ss.str();
    };
    out << "\n"
        << std::left << std::setw(14) << "variant" << std::setw(12) << "tests" << std::setw(14)
        << "LOC" << "score" << "\n";
    for (const VariantSummary& vs : rows) {
        out << std::left << std::setw(14) << vs.variant;
        if (vs.excluded) {
            out << "excluded: " << vs.cause << "\n";
            continue;
        }
        out << std::setw(12) << arrow(vs.tests_before, vs.tests_after) << std::setw(14)
            << arrow(vs.loc_before, vs.loc_after) << score(vs.score_before, vs.score_after)
            << "\n";
    }
}

// ---------------------------------------------------------------------------
// Metadata (the one file allowed to differ between identical runs).

json config_json(const Config& cfg) {
    return json{
        {"discard_ratio", cfg.discard_ratio},
        {"edge_bias", cfg.edge_bias},
        {"edge_enum_cap", cfg.edge_enum_cap},
        {"extraction",
         {{"max_call_depth", cfg.extraction.max_call_depth},
          {"max_pc_chars", cfg.extraction.max_pc_chars},
          {"max_steps", cfg.extraction.max_steps},
          {"wall_timeout_s", cfg.extraction.wall_timeout_s}}},
        {"jobs", cfg.jobs},
        {"mutation_timeout_s", cfg.mutation_timeout_s},
        {"out_root", cfg.out_root},
        {"project_dir", cfg.project_dir},
        {"rng_seed", cfg.rng_seed},
        {"suite_timeout_s", cfg.suite_timeout_s},
        {"suppliers", cfg.suppliers},
        {"tries", cfg.tries_list},
    };
}

json meta_json(const Config& cfg, const std::string& command, const std::string& started,
               Clock::time_point t0, int exit_code, int exclusions, const std::string& cause) {
    json j{{"schema", 1},
           {"command", command},
           {"config", config_json(cfg)},
           {"duration_ms", static_cast<uint64_t>(seconds_since(t0) * 1000.0)},
           {"exclusions", exclusions},
           {"exit_code", exit_code},
           {"started", started}};
    if (!cause.empty()) j["cause"] = cause;
    return j;
}

/// Shared epilogue: report the project-level cause, write meta, return code.
int finish(const Config& cfg, std::ostream& out, const fs::path& root, const std::string& command,
           const std::string& started, Clock::time_point t0, int code, int exclusions,
           const std::string& cause) {
    if (!cause.empty()) out << "project excluded: " << cause << "\n";
    write_report(out, root, "reports/meta.json", meta_json(cfg, command, started, t0, code,
                                                           exclusions, cause));
    return code;
}

int count_extraction_failures(const Stage& st) {
    int n = 0;
    for (const concolic::Extraction& ex : st.extractions)
        if (!ex.ok()) ++n;
    return n;
}

int count_non_green(const std::vector<GtCell>& cells) {
    int n = 0;
    for (const GtCell& c : cells)
        if (!cell_green(c)) ++n;
    return n;
}

bool has_report(const fs::path& root, const std::string& rel) {
    return fs::is_regular_file(root / rel);
}

/// Prints the standard complaint and returns the missing-prereq exit code.
int missing_prereq(std::ostream& out, const std::string& rel, const char* hint) {
    out << "error: missing prerequisite report " << rel << " (run `teraliz " << hint
        << "` first)\n";
    return kExitMissingPrereq;
}

json load_json(const fs::path& p) {
    return json::parse(slurp(p));
}

}  // namespace

std::string validate_config(const Config& cfg) {
    if (cfg.project_dir.empty()) return "project directory is required";
    for (const std::string& s : cfg.suppliers)
        if (s != "baseline" && s != "naive" && s != "improved")
            return "unknown variant '" + s + "' (choose from baseline, naive, improved)";
    for (size_t i = 0; i < cfg.suppliers.size(); ++i)
        for (size_t j = i + 1; j < cfg.suppliers.size(); ++j)
            if (cfg.suppliers[i] == cfg.suppliers[j])
                return "variant '" + cfg.suppliers[i] + "' listed twice";
    if (cfg.suppliers.empty()) return "at least one variant is required";
    if (cfg.tries_list.empty()) return "tries list must not be empty";
    for (size_t i = 0; i < cfg.tries_list.size(); ++i) {
        if (cfg.tries_list[i] < 1) return "tries must be at least 1";
        if (i > 0 && cfg.tries_list[i] <= cfg.tries_list[i - 1])
            return "tries list must be strictly ascending";
    }
    if (cfg.discard_ratio < 1) return "discard ratio must be at least 1";
    if (cfg.jobs < 1) return "jobs must be at least 1";
    if (cfg.suite_timeout_s <= 0 || cfg.mutation_timeout_s <= 0)
        return "timeouts must be positive";
    return "";
}

PipelineReport run_pipeline(const Config& cfg, std::ostream& out) {
    PipelineReport rep;
    std::string objection = validate_config(cfg);
    if (!objection.empty()) {
        out << "error: " << objection << "\n";
        rep.exit_code = 1;
        return rep;
    }
    Clock::time_point t0 = Clock::now();
    std::string started = iso_utc_now();

    Stage st;
    if (int rc = load_project(cfg, out, st); rc != 0) {
        rep.exit_code = rc;
        return rep;
    }
    std::error_code ec;
    fs::remove_all(st.root / "reports", ec);
    fs::remove_all(st.root / "generalized", ec);

    auto done = [&](int code, const std::string& cause) {
        rep.exit_code =
            finish(cfg, out, st.root, "run", started, t0, code, rep.exclusions, cause);
        rep.cause = cause;
        return rep;
    };

    if (st.annotated == 0) return done(kExitProjectExcluded, "no tests found");

    // Stages 1-2: example suite + filter chain, shared by every variant.
    run_analysis(st);
    write_report(out, st.root, "reports/tests.json", tests_json(st));
    write_report(out, st.root, "reports/assertions.json", assertions_json(st));
    rep.exclusions += static_cast<int>(st.analysis.rejections.size());
    out << "suite: " << st.analysis.suite.tests.size() << " tests, "
        << st.analysis.targets.size() << " assertions targeted, "
        << st.analysis.rejections.size() << " rejections\n";
    if (st.suite_seconds > cfg.suite_timeout_s) return done(kExitProjectExcluded, "suite timeout");
    if (st.analysis.targets.empty()) return done(kExitProjectExcluded, "all tests excluded");

    // Stage 3: one specification per surviving assertion, shared as well.
    run_extraction(cfg, st);
    write_report(out, st.root, "reports/specs.json", specs_json(st));
    rep.exclusions += count_extraction_failures(st);

    // Stage 4: generalized tests for every (target, variant) cell.
    std::vector<VariantDef> plan = plan_variants(cfg);
    std::vector<GtCell> cells = make_cells(cfg, st, plan);
    green_run_cells(cfg, st, cells);
    write_green_files(st, plan, cells);
    write_report(out, st.root, "reports/generalizations.json",
                 generalizations_json(cfg, st, plan, cells));
    rep.exclusions += count_non_green(cells);

    // Stage 5: kill matrices (original once, then per variant) and reduction.
    std::vector<mutate::Mutant> mutants = mutate::enumerate_mutants(st.program);
    std::vector<mutate::TestCase> originals = passed_original_cases(st);
    out << "mutation: " << mutants.size() << " mutants, " << originals.size()
        << " original tests\n";
    mutate::MutationOptions mo = mutation_options(cfg);
    mutate::MutationOutcome orig_out;
    try {
        mo.abort_requested = deadline_check(cfg.mutation_timeout_s);
        orig_out = mutate::run_mutation_testing(st.program, originals, mutants, mo);
    } catch (const mutate::AbortedError&) {
        return done(kExitProjectExcluded, "mutation timeout");
    } catch (const mutate::NotGreenError& e) {
        out << "error: " << e.what() << "\n";
        rep.exit_code = 1;
        return rep;
    }
    write_report(out, st.root, "reports/mutation_original.json",
                 mutation_json("original", orig_out));

    std::map<std::string, size_t> counts = assertion_counts(st, originals);
    for (size_t vi = 0; vi < plan.size(); ++vi) {
        const VariantDef& v = plan[vi];
        std::vector<mutate::TestCase> suite = originals;
        std::vector<reduce::GenRecord> records;
        for (GtCell& c : cells) {
            if (c.variant_idx != vi) continue;
            const analyzer::Target& t = st.analysis.targets[c.target_idx];
            records.push_back({t.test_name, t.assertion_index, c.gt.id, cell_green(c)});
            if (cell_green(c)) suite.push_back({c.gt.id, true, &c.gt, &c.emit.source});
        }
        mutate::MutationOutcome var_out;
        try {
            mo.abort_requested = deadline_check(cfg.mutation_timeout_s);
            var_out = mutate::run_mutation_testing(st.program, suite, mutants, mo);
        } catch (const mutate::AbortedError&) {
            ++rep.exclusions;
            VariantSummary vs;
            vs.variant = v.name;
            vs.excluded = true;
            vs.cause = "mutation timeout";
            rep.summaries.push_back(vs);
            write_report(out, st.root, "reports/mutation_" + v.name + ".json",
                         excluded_json(v.name, "mutation timeout"));
            write_report(out, st.root, "reports/reduction_" + v.name + ".json",
                         excluded_json(v.name, "mutation timeout"));
            continue;
        } catch (const mutate::NotGreenError& e) {
            out << "error: " << e.what() << "\n";
            rep.exit_code = 1;
            return rep;
        }
        write_report(out, st.root, "reports/mutation_" + v.name + ".json",
                     mutation_json(v.name, var_out));
        reduce::ReductionDecision dec =
            reduce::reduce_suite(orig_out.matrix, var_out.matrix, records, counts);
        auto source_of = [&](const std::string& name) -> const std::string& {
            for (const GtCell& c : cells)
                if (c.variant_idx == vi && c.gt.id == name) return c.emit.source;
            static const std::string empty;
            return empty;
        };
        VariantSummary vs = summarize(st, v.name, originals, dec, source_of);
        write_report(out, st.root, "reports/reduction_" + v.name + ".json",
                     reduction_json(v.name, dec, vs));
        rep.summaries.push_back(std::move(vs));
    }

    print_table(out, rep.summaries);
    return done(rep.exclusions > 0 ? kExitExclusions : kExitOk, "");
}

int cmd_analyze(const Config& cfg, std::ostream& out) {
    std::string objection = validate_config(cfg);
    if (!objection.empty()) {
        out << "error: " << objection << "\n";
        return 1;
    }
    Clock::time_point t0 = Clock::now();
    std::string started = iso_utc_now();
    Stage st;
    if (int rc = load_project(cfg, out, st); rc != 0) return rc;
    auto done = [&](int code, int exclusions, const std::string& cause) {
        return finish(cfg, out, st.root, "analyze", started, t0, code, exclusions, cause);
    };
    if (st.annotated == 0) return done(kExitProjectExcluded, 0, "no tests found");
    run_analysis(st);
    write_report(out, st.root, "reports/tests.json", tests_json(st));
    write_report(out, st.root, "reports/assertions.json", assertions_json(st));
    int exclusions = static_cast<int>(st.analysis.rejections.size());
    if (st.suite_seconds > cfg.suite_timeout_s)
        return done(kExitProjectExcluded, exclusions, "suite timeout");
    if (st.analysis.targets.empty())
        return done(kExitProjectExcluded, exclusions, "all tests excluded");
    return done(exclusions > 0 ? kExitExclusions : kExitOk, exclusions, "");
}

int cmd_extract(const Config& cfg, std::ostream& out) {
    std::string objection = validate_config(cfg);
    if (!objection.empty()) {
        out << "error: " << objection << "\n";
        return 1;
    }
    Clock::time_point t0 = Clock::now();
    std::string started = iso_utc_now();
    if (!has_report(output_root(cfg), "reports/assertions.json"))
        return missing_prereq(out, "reports/assertions.json", "analyze");
    Stage st;
    if (int rc = load_project(cfg, out, st); rc != 0) return rc;
    auto done = [&](int code, int exclusions, const std::string& cause) {
        return finish(cfg, out, st.root, "extract", started, t0, code, exclusions, cause);
    };
    if (st.annotated == 0) return done(kExitProjectExcluded, 0, "no tests found");
    run_analysis(st);
    if (st.analysis.targets.empty()) return done(kExitProjectExcluded, 0, "all tests excluded");
    run_extraction(cfg, st);
    write_report(out, st.root, "reports/specs.json", specs_json(st));
    int failures = count_extraction_failures(st);
    out << "extraction: " << (st.extractions.size() - failures) << "/" << st.extractions.size()
        << " specs extracted\n";
    return done(failures > 0 ? kExitExclusions : kExitOk, failures, "");
}

int cmd_generalize(const Config& cfg, std::ostream& out) {
    std::string objection = validate_config(cfg);
    if (!objection.empty()) {
        out << "error: " << objection << "\n";
        return 1;
    }
    Clock::time_point t0 = Clock::now();
    std::string started = iso_utc_now();
    if (!has_report(output_root(cfg), "reports/specs.json"))
        return missing_prereq(out, "reports/specs.json", "extract");
    Stage st;
    if (int rc = load_project(cfg, out, st); rc != 0) return rc;
    auto done = [&](int code, int exclusions, const std::string& cause) {
        return finish(cfg, out, st.root, "generalize", started, t0, code, exclusions, cause);
    };
    if (st.annotated == 0) return done(kExitProjectExcluded, 0, "no tests found");
    run_analysis(st);
    if (st.analysis.targets.empty()) return done(kExitProjectExcluded, 0, "all tests excluded");
    run_extraction(cfg, st);

    std::error_code ec;
    fs::remove_all(st.root / "generalized", ec);
    std::vector<VariantDef> plan = plan_variants(cfg);
    std::vector<GtCell> cells = make_cells(cfg, st, plan);
    green_run_cells(cfg, st, cells);
    write_green_files(st, plan, cells);
    write_report(out, st.root, "reports/generalizations.json",
                 generalizations_json(cfg, st, plan, cells));
    int non_green = count_non_green(cells);
    out << "generalization: " << (cells.size() - non_green) << "/" << cells.size()
        << " green across " << plan.size() << " variants\n";
    return done(non_green > 0 ? kExitExclusions : kExitOk, non_green, "");
}

int cmd_mutate(const Config& cfg, std::ostream& out) {
    std::string objection = validate_config(cfg);
    if (!objection.empty()) {
        out << "error: " << objection << "\n";
        return 1;
    }
    Clock::time_point t0 = Clock::now();
    std::string started = iso_utc_now();
    fs::path root = output_root(cfg);
    if (!has_report(root, "reports/tests.json"))
        return missing_prereq(out, "reports/tests.json", "analyze");
    if (!has_report(root, "reports/generalizations.json"))
        return missing_prereq(out, "reports/generalizations.json", "generalize");
    Stage st;
    if (int rc = load_project(cfg, out, st); rc != 0) return rc;
    auto done = [&](int code, int exclusions, const std::string& cause) {
        return finish(cfg, out, st.root, "mutate", started, t0, code, exclusions, cause);
    };

    json tests_rep, gen_rep;
    try {
        tests_rep = load_json(root / "reports/tests.json");
        gen_rep = load_json(root / "reports/generalizations.json");
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return 1;
    }

    std::vector<mutate::TestCase> originals;
    for (const json& t : tests_rep.at("tests"))
        if (t.at("status") == "passed")
            originals.push_back({t.at("name").get<std::string>(), false, nullptr, nullptr});

    uint64_t pipeline_seed = gen_rep.value("rng_seed", cfg.rng_seed);
    Config effective = cfg;
    effective.discard_ratio = gen_rep.value("discard_ratio", cfg.discard_ratio);

    std::vector<mutate::Mutant> mutants = mutate::enumerate_mutants(st.program);
    mutate::MutationOptions mo = mutation_options(effective);
    mutate::MutationOutcome orig_out;
    try {
        mo.abort_requested = deadline_check(cfg.mutation_timeout_s);
        orig_out = mutate::run_mutation_testing(st.program, originals, mutants, mo);
    } catch (const mutate::AbortedError&) {
        return done(kExitProjectExcluded, 0, "mutation timeout");
    } catch (const mutate::NotGreenError& e) {
        out << "error: " << e.what() << "\n";
        return 1;
    }
    write_report(out, root, "reports/mutation_original.json", mutation_json("original", orig_out));

    // Variant suites are rebuilt from the emitted sources, not from memory:
    // this is the file-driven round trip the stage contract promises.
    std::deque<gen::GeneralizedTest> gts;
    std::deque<std::string> sources;
    int exclusions = 0;
    for (const json& name : gen_rep.at("variants")) {
        std::string variant = name.get<std::string>();
        std::vector<mutate::TestCase> suite = originals;
        for (const json& rec : gen_rep.at("tests")) {
            if (rec.at("variant") != variant || rec.at("status") != "passed") continue;
            if (rec.at("file").is_null()) continue;
            std::string text;
            try {
                text = slurp(root / rec.at("file").get<std::string>());
            } catch (const std::exception& e) {
                out << "error: " << e.what() << "\n";
                return kExitMissingPrereq;
            }
            gen::GeneralizedTest gt;
            try {
                gt = gen::load_gt_source(text, pipeline_seed);
            } catch (const std::exception& e) {
                out << "error: " << rec.at("file").get<std::string>() << ": " << e.what() << "\n";
                return 1;
            }
            if (gt.id != rec.at("id").get<std::string>()) {
                out << "error: " << rec.at("file").get<std::string>() << " reloads as '" << gt.id
                    << "' but the report recorded '" << rec.at("id").get<std::string>() << "'\n";
                return 1;
            }
            sources.push_back(std::move(text));
            gts.push_back(std::move(gt));
            suite.push_back({gts.back().id, true, &gts.back(), &sources.back()});
        }
        mutate::MutationOutcome var_out;
        try {
            mo.abort_requested = deadline_check(cfg.mutation_timeout_s);
            var_out = mutate::run_mutation_testing(st.program, suite, mutants, mo);
        } catch (const mutate::AbortedError&) {
            ++exclusions;
            write_report(out, root, "reports/mutation_" + variant + ".json",
                         excluded_json(variant, "mutation timeout"));
            continue;
        } catch (const mutate::NotGreenError& e) {
            out << "error: " << e.what() << "\n";
            return 1;
        }
        write_report(out, root, "reports/mutation_" + variant + ".json",
                     mutation_json(variant, var_out));
    }
    return done(exclusions > 0 ? kExitExclusions : kExitOk, exclusions, "");
}

int cmd_reduce(const Config& cfg, std::ostream& out) {
    std::string objection = validate_config(cfg);
    if (!objection.empty()) {
        out << "error: " << objection << "\n";
        return 1;
    }
    Clock::time_point t0 = Clock::now();
    std::string started = iso_utc_now();
    fs::path root = output_root(cfg);
    if (!has_report(root, "reports/tests.json"))
        return missing_prereq(out, "reports/tests.json", "analyze");
    if (!has_report(root, "reports/generalizations.json"))
        return missing_prereq(out, "reports/generalizations.json", "generalize");
    if (!has_report(root, "reports/mutation_original.json"))
        return missing_prereq(out, "reports/mutation_original.json", "mutate");

    Stage st;
    if (int rc = load_project(cfg, out, st); rc != 0) return rc;
    auto done = [&](int code, int exclusions, const std::string& cause) {
        return finish(cfg, out, st.root, "reduce", started, t0, code, exclusions, cause);
    };

    json tests_rep, gen_rep, orig_rep;
    try {
        tests_rep = load_json(root / "reports/tests.json");
        gen_rep = load_json(root / "reports/generalizations.json");
        orig_rep = load_json(root / "reports/mutation_original.json");
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return 1;
    }

    auto matrix_from_json = [](const json& j) {
        mutate::KillMatrix m;
        std::map<std::string, size_t> midx, tidx;
        for (const json& mu : j.at("mutants")) {
            midx[mu.at("id").get<std::string>()] = m.mutant_ids.size();
            m.mutant_ids.push_back(mu.at("id").get<std::string>());
        }
        for (const json& t : j.at("tests")) {
            tidx[t.get<std::string>()] = m.test_names.size();
            m.test_names.push_back(t.get<std::string>());
        }
        m.cells.assign(m.mutant_ids.size(),
                       std::vector<mutate::Cell>(m.test_names.size(), mutate::Cell::Survived));
        for (const auto& [test, ids] : j.at("per_test_kills").items())
            for (const json& id : ids)
                m.cells.at(midx.at(id.get<std::string>())).at(tidx.at(test)) =
                    mutate::Cell::Killed;
        return m;
    };

    mutate::KillMatrix orig_matrix;
    try {
        orig_matrix = matrix_from_json(orig_rep);
    } catch (const std::exception& e) {
        out << "error: reports/mutation_original.json: " << e.what() << "\n";
        return 1;
    }

    std::vector<mutate::TestCase> originals;
    std::map<std::string, size_t> counts;
    for (const json& t : tests_rep.at("tests")) {
        std::string name = t.at("name").get<std::string>();
        counts[name] = t.at("assertions").get<size_t>();
        if (t.at("status") == "passed") originals.push_back({name, false, nullptr, nullptr});
    }

    int exclusions = 0;
    std::vector<VariantSummary> rows;
    for (const json& vname : gen_rep.at("variants")) {
        std::string variant = vname.get<std::string>();
        std::string rel = "reports/mutation_" + variant + ".json";
        if (!has_report(root, rel)) return missing_prereq(out, rel, "mutate");
        json var_rep;
        try {
            var_rep = load_json(root / rel);
        } catch (const std::exception& e) {
            out << "error: " << e.what() << "\n";
            return 1;
        }
        if (var_rep.value("excluded", false)) {
            ++exclusions;
            VariantSummary vs;
            vs.variant = variant;
            vs.excluded = true;
            vs.cause = var_rep.value("cause", "excluded");
            rows.push_back(vs);
            write_report(out, root, "reports/reduction_" + variant + ".json",
                         excluded_json(variant, vs.cause));
            continue;
        }

        std::vector<reduce::GenRecord> records;
        std::map<std::string, std::string> gt_files;
        for (const json& rec : gen_rep.at("tests")) {
            if (rec.at("variant") != variant) continue;
            records.push_back({rec.at("test").get<std::string>(),
                               rec.at("assertion_index").get<int>(),
                               rec.at("id").get<std::string>(), rec.at("status") == "passed"});
            if (!rec.at("file").is_null())
                gt_files[rec.at("id").get<std::string>()] = rec.at("file").get<std::string>();
        }

        reduce::ReductionDecision dec;
        try {
            dec = reduce::reduce_suite(orig_matrix, matrix_from_json(var_rep), records, counts);
        } catch (const std::exception& e) {
            out << "error: " << variant << ": " << e.what() << "\n";
            return 1;
        }
        auto source_of = [&](const std::string& name) -> std::string {
            auto it = gt_files.find(name);
            return it == gt_files.end() ? std::string() : slurp(root / it->second);
        };
        VariantSummary vs = summarize(st, variant, originals, dec, source_of);
        write_report(out, root, "reports/reduction_" + variant + ".json",
                     reduction_json(variant, dec, vs));
        rows.push_back(std::move(vs));
    }
    print_table(out, rows);
    return done(exclusions > 0 ? kExitExclusions : kExitOk, exclusions, "");
}

int cmd_test(const Config& cfg, const std::vector<std::string>& files, std::ostream& out) {
    std::string objection = validate_config(cfg);
    if (!objection.empty()) {
        out << "error: " << objection << "\n";
        return 1;
    }
    Stage st;
    if (int rc = load_project(cfg, out, st); rc != 0) return rc;
    if (files.empty()) {
        out << "error: no generalized test files given\n";
        return 1;
    }
    gen::RunOptions ro;
    ro.discard_ratio = cfg.discard_ratio;
    bool bad = false;
    for (const std::string& f : files) {
        std::string text;
        gen::GeneralizedTest gt;
        try {
            text = slurp(f);
            gt = gen::load_gt_source(text, cfg.rng_seed);
        } catch (const std::exception& e) {
            out << f << ": error: " << e.what() << "\n";
            bad = true;
            continue;
        }
        gen::PropertyOutcome po = gen::run_property(st.program, gt, &text, ro);
        switch (po.status) {
            case gen::PropStatus::Passed:
                out << f << ": passed (" << po.tried << " inputs)\n";
                break;
            case gen::PropStatus::TooManyFilterMisses:
                // Inconclusive, not a counterexample: the generator could not
                // hit the input partition often enough.
                out << f << ": skipped (too many filter misses: " << po.misses << ")\n";
                break;
            case gen::PropStatus::Failed:
                out << f << ": failed: " << po.message << " [shrunk: " << show_tuple(po.shrunk)
                    << "]\n";
                bad = true;
                break;
            case gen::PropStatus::Errored:
                out << f << ": errored: " << po.message << "\n";
                bad = true;
                break;
        }
    }
    return bad ? 1 : 0;
}

}  // namespace teraliz::pipeline

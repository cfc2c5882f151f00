#include <CLI11.hpp>
#include <cerrno>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "teraliz/pipeline.hpp"

using teraliz::pipeline::Config;

namespace {

/// TERALIZ_SEED overrides --seed when set. Returns false on an unparsable
/// value (after printing the objection).
bool apply_env_seed(Config& cfg) {
    const char* env = std::getenv("TERALIZ_SEED");
    if (!env || !*env) return true;
    errno = 0;
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0') {
        std::cerr << "error: TERALIZ_SEED is not an unsigned integer: '" << env << "'\n";
        return false;
    }
    cfg.rng_seed = v;
    return true;
}

void add_common(CLI::App* sub, Config& cfg) {
    sub->add_option("dir", cfg.project_dir, "Project directory (contains src/ and tests/)")
        ->required();
    sub->add_option("--variants", cfg.suppliers,
                    "Generation strategies: baseline, naive, improved")
        ->delimiter(',');
    sub->add_option("--tries", cfg.tries_list, "Inputs per generalized test (ascending list)")
        ->delimiter(',');
    sub->add_option("--seed", cfg.rng_seed, "Pipeline RNG seed (TERALIZ_SEED overrides)");
    sub->add_option("--jobs", cfg.jobs, "Parallelism across mutants and property runs");
    sub->add_option("--report", cfg.out_root,
                    "Output root holding reports/ and generalized/ (default: the project)");
    sub->add_option("--discard-ratio", cfg.discard_ratio,
                    "Allowed filter misses per requested input");
    sub->add_option("--suite-timeout", cfg.suite_timeout_s,
                    "Example-suite wall timeout in seconds");
    sub->add_option("--mutation-timeout", cfg.mutation_timeout_s,
                    "Wall timeout per mutation matrix in seconds");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"teraliz: turns example-based MiniLang tests into property-based tests"};
    app.require_subcommand(1);

    Config cfg;
    std::vector<std::string> files;

    CLI::App* run = app.add_subcommand("run", "Full pipeline: analyze through reduce");
    add_common(run, cfg);
    CLI::App* analyze = app.add_subcommand("analyze", "Run the suite and filter assertions");
    add_common(analyze, cfg);
    CLI::App* extract = app.add_subcommand("extract", "Extract input/output specifications");
    add_common(extract, cfg);
    CLI::App* generalize =
        app.add_subcommand("generalize", "Generate and check property tests per variant");
    add_common(generalize, cfg);
    CLI::App* mutate =
        app.add_subcommand("mutate", "Measure kill matrices from the emitted tests");
    add_common(mutate, cfg);
    CLI::App* reduce = app.add_subcommand("reduce", "Decide the final suite per variant");
    add_common(reduce, cfg);
    CLI::App* test =
        app.add_subcommand("test", "Run emitted generalized .ml files against the project");
    add_common(test, cfg);
    test->add_option("files", files, "Generalized test files")->required();

    CLI11_PARSE(app, argc, argv);

    if (!apply_env_seed(cfg)) return 1;

    if (run->parsed()) return teraliz::pipeline::run_pipeline(cfg, std::cout).exit_code;
    if (analyze->parsed()) return teraliz::pipeline::cmd_analyze(cfg, std::cout);
    if (extract->parsed()) return teraliz::pipeline::cmd_extract(cfg, std::cout);
    if (generalize->parsed()) return teraliz::pipeline::cmd_generalize(cfg, std::cout);
    if (mutate->parsed()) return teraliz::pipeline::cmd_mutate(cfg, std::cout);
    if (reduce->parsed()) return teraliz::pipeline::cmd_reduce(cfg, std::cout);
    if (test->parsed()) return teraliz::pipeline::cmd_test(cfg, files, std::cout);
    return 1;
}

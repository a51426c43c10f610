// Command-line front-end: problem ingestion, analysis dispatch, fixture
// corpus, machine-readable reports.
//
// Exit codes: 0 all queries executed, 1 parse/validation error, 2 internal
// inconsistency (an equivalence invariant or corpus expectation failed).

#include <CLI11.hpp>

#include <iostream>

#include "vreg/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"vreg: regularity analysis of structured set-valued mappings"};
    app.require_subcommand(0, 1);

    vreg::RunOptions opts;
    app.add_option("--seed", opts.seed, "deterministic seed for sampled paths");
    app.add_option("--tol-lsv", opts.tol_lsv, "least-singular-value comparison tolerance");
    app.add_option("--tol-lp", opts.tol_lp, "LP feasibility tolerance");
    app.add_option("--max-patterns", opts.max_patterns, "activity-pattern enumeration cap");
    app.add_flag("--numeric-only", opts.numeric_only, "skip exact conic paths, grid/search only");

    std::string problem_path, report_path;
    auto* run_cmd = app.add_subcommand("run", "run the queries of a problem file");
    run_cmd->add_option("problem", problem_path, "problem JSON file")->required();
    run_cmd->add_option("-o,--output", report_path, "report path (default <problem>.report.json)");

    bool corpus_flag = false;
    app.add_flag("--corpus", corpus_flag, "run the built-in fixture corpus");
    bool list_flag = false;
    std::string only;
    auto* corpus_cmd = app.add_subcommand("corpus", "run the built-in fixture corpus");
    corpus_cmd->add_flag("--list", list_flag, "list fixtures and their references");
    corpus_cmd->add_option("--only", only, "run a single fixture by name");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        vreg::RunOutcome outcome = vreg::run_problem_file(problem_path, opts, report_path);
        std::cout << outcome.summary;
        if (outcome.exit_code == 0)
            std::cout << "report written, all queries executed\n";
        else if (outcome.exit_code == 2)
            std::cout << "report written, internal inconsistency flagged\n";
        return outcome.exit_code;
    }
    if (corpus_cmd->parsed() || corpus_flag) {
        if (list_flag) {
            for (const auto& e : vreg::corpus_list())
                std::cout << e.name << "  [" << e.ref << "]\n";
            return 0;
        }
        return vreg::run_corpus(std::cout, opts, only);
    }
    std::cout << app.help();
    return 0;
}

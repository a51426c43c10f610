#pragma once

// Problem-file ingestion, analysis dispatch, machine-readable reports, and
// the built-in fixture corpus behind the command-line front-end.
//
// Problem files are UTF-8 JSON with a stable schema; reports are JSON with
// stable key ordering so identical (input, seed, version) runs emit
// byte-identical payloads (timings live outside the deterministic block).

#include <json.hpp>

#include "vreg/systems.hpp"

#include <iosfwd>

namespace vreg {

using njson = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
    unsigned seed = 20240601u;
    double tol_lsv = 1e-7;
    double tol_lp = 1e-9;
    int max_patterns = 4096;
    bool numeric_only = false;

    LsvParams lsv_params() const;
};

// value-level parsers and serializers (round-trip stable)
PolyhedralSet parse_polyset(const njson& j);
njson serialize_polyset(const PolyhedralSet& s);
ClosedSet parse_closed_set(const njson& j);
njson serialize_closed_set(const ClosedSet& s);
PolyMap parse_polymap(const njson& j);
njson serialize_polymap(const PolyMap& m);
MatrixPolyMap parse_matrix_polymap(const njson& j);
njson serialize_matrix_polymap(const MatrixPolyMap& m);
StructuredMapping parse_mapping(const njson& j);
njson serialize_mapping(const StructuredMapping& m);

njson verdict_to_json(const RegularityVerdict& v);

struct ParsedProblem {
    int schema_version = 1;
    std::string kind;
    njson payload;
    njson queries;
};

ParsedProblem parse_problem(const njson& doc);
njson serialize_problem(const ParsedProblem& p);

struct RunOutcome {
    int exit_code = 0;           // 0 executed, 1 parse/validation, 2 inconsistency
    njson report;                // full report (results + timings)
    std::string summary;         // human-readable lines
};

RunOutcome run_problem_json(const njson& doc, const RunOptions& opts);
RunOutcome run_problem_file(const std::string& path, const RunOptions& opts,
                            const std::string& report_path = "");

// built-in corpus with expected outcomes
struct CorpusEntry {
    std::string name;
    std::string ref;  // canonical condition/example identifier
};
std::vector<CorpusEntry> corpus_list();
/// Runs every fixture against its expected outcome; returns 0 on full
/// agreement, 2 on any mismatch. Prints one line per fixture.
int run_corpus(std::ostream& out, const RunOptions& opts,
               const std::string& only_name = "");

}  // namespace vreg

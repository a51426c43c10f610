#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "vreg/io.hpp"

using namespace vreg;

namespace {

njson load(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    njson doc;
    in >> doc;
    return doc;
}

const char* kFixtureDir = VREG_FIXTURE_DIR;

}  // namespace

TEST_CASE("round trip on every shipped fixture") {
    for (const char* name :
         {"example_5_9.json", "u_square.json", "example_5_11.json", "example_3_5.json",
          "example_3_7.json", "kkt_strict.json", "kkt_degenerate.json", "cs_scalar.json"}) {
        njson doc = load(std::string(kFixtureDir) + "/" + name);
        njson once = serialize_problem(parse_problem(doc));
        njson twice = serialize_problem(parse_problem(once));
        CHECK(once.dump() == twice.dump());
        CHECK(once.dump() == doc.dump());
    }
}

TEST_CASE("run reports are deterministic") {
    njson doc = load(std::string(kFixtureDir) + "/u_square.json");
    RunOptions opts;
    RunOutcome a = run_problem_json(doc, opts);
    RunOutcome b = run_problem_json(doc, opts);
    REQUIRE(a.exit_code == 0);
    CHECK(a.report["results"].dump() == b.report["results"].dump());
}

TEST_CASE("expected verdicts of the boundary fixture") {
    njson doc = load(std::string(kFixtureDir) + "/example_5_9.json");
    RunOutcome out = run_problem_json(doc, RunOptions{});
    REQUIRE(out.exit_code == 0);
    const njson& qs = out.report["results"]["queries"];
    CHECK(qs[0]["value"].get<double>() == doctest::Approx(1.0));
    CHECK(qs[3]["verdict"]["status"] == "certified_yes");
    CHECK(qs[4]["verdict"]["status"] == "sufficient_condition_fails");
    CHECK(qs[5]["span_condition"] == true);
}

TEST_CASE("malformed problems exit with code 1") {
    // malformed polynomial
    njson doc;
    doc["schema_version"] = 1;
    doc["kind"] = "mapping";
    doc["payload"]["map"] = {{"type", "smooth_plus"},
                             {"f", {{"in", 1}, {"components", {"x1^^"}}}},
                             {"c", {{"type", "indicator"},
                                    {"set", {{"type", "polyhedral"},
                                             {"set", {{"dim", 1}, {"pieces", njson::array()}}}}},
                                    {"out", 1}}}};
    doc["queries"] = njson::array({{{"op", "reg_value"}, {"u", {0.0}}, {"y", {0.0}}}});
    RunOutcome out = run_problem_json(doc, RunOptions{});
    CHECK(out.exit_code == 1);
    CHECK(out.summary.find("query 0") != std::string::npos);

    // unknown kind
    njson doc2;
    doc2["schema_version"] = 1;
    doc2["kind"] = "nonsense";
    doc2["payload"] = njson::object();
    doc2["queries"] = njson::array();
    CHECK(run_problem_json(doc2, RunOptions{}).exit_code == 1);

    // missing fields
    njson doc3;
    doc3["schema_version"] = 1;
    CHECK(run_problem_json(doc3, RunOptions{}).exit_code == 1);
}

TEST_CASE("basepoint validation failures name the query") {
    njson doc = load(std::string(kFixtureDir) + "/u_square.json");
    doc["queries"] = njson::array({{{"op", "reg_value"}, {"u", {1.0}}, {"y", {5.0}}},
                                   {{"op", "metric_regularity"}, {"u", {1.0}}, {"y", {5.0}}}});
    RunOutcome out = run_problem_json(doc, RunOptions{});
    // reg_value off the graph is +inf (a result); the checker is an error
    CHECK(out.exit_code == 1);
    CHECK(out.summary.find("query 1") != std::string::npos);
}

TEST_CASE("corpus is green and the corrupted probe exits 2") {
    std::ostringstream sink;
    CHECK(run_corpus(sink, RunOptions{}) == 0);
    std::ostringstream sink2;
    CHECK(run_corpus(sink2, RunOptions{}, "corrupted_expectation_probe") == 2);
    CHECK(corpus_list().size() >= 10);
}

TEST_CASE("reports carry tool metadata and condition traces") {
    njson doc = load(std::string(kFixtureDir) + "/example_5_11.json");
    RunOutcome out = run_problem_json(doc, RunOptions{});
    REQUIRE(out.exit_code == 0);
    CHECK(out.report["results"]["tool"] == "vreg");
    CHECK(out.report["results"]["version"] == kToolVersion);
    CHECK(out.report["results"]["seed"].get<unsigned>() == RunOptions{}.seed);
    bool saw_separation_trace = false;
    for (const auto& q : out.report["results"]["queries"]) {
        if (q.contains("verdict") && q["verdict"]["trace"] == "Eq(5.6)") saw_separation_trace = true;
    }
    CHECK(saw_separation_trace);
    CHECK(out.report.contains("timings_ms"));
}

TEST_CASE("lsv instance files") {
    njson doc = load(std::string(kFixtureDir) + "/example_3_7.json");
    RunOutcome out = run_problem_json(doc, RunOptions{});
    REQUIRE(out.exit_code == 0);
    const njson& qs = out.report["results"]["queries"];
    CHECK(qs[0]["is_singular"] == true);
    CHECK(qs[0]["z0_finite"] == true);
    CHECK(qs[0]["z0_points"].size() == 2);
    CHECK(std::abs(qs[1]["value"].get<double>()) <= 1e-6);
    CHECK(qs[2]["bound"]["produced"] == false);
    CHECK(qs[2]["bound"]["refused_condition"] == "(iv')");
    CHECK(qs[3]["value"].get<double>() == doctest::Approx(0.0).epsilon(1e-9));
}

#include "mas/error.hpp"
#include "mas/pipeline.hpp"
#include "mas/scenario.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using namespace mas;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const std::string kData = MAS_TEST_DATA;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mas_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int mas_cli(const std::string& args) {
  const std::string cmd = std::string(MAS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

Json example() { return read_json(kData + "/granted_example.json"); }

Errc validation_code(const Json& j, std::vector<std::string>* issues = nullptr) {
  try {
    parse_scenario(j);
  } catch (const ValidationError& e) {
    if (issues) *issues = e.issues();
    return e.code();
  }
  FAIL("expected a validation error");
  return Errc::invalid_argument;
}

bool mentions(const std::vector<std::string>& issues, const std::string& what) {
  for (const auto& i : issues)
    if (i.find(what) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("example scenario synthesizes three plans") {
  auto out = scratch("example");
  CHECK(mas_cli("synthesize --scenario " + kData + "/granted_example.json --out " + out.string()) == 0);
  auto plan = read_json(out / "plan.json");
  REQUIRE(plan["agents"].size() == 3);
  CHECK(plan["agents"][0]["prefix"] == Json::array({14, 17, 10, 20}));
  CHECK(plan["agents"][0]["satisfaction_time"] == 3.0);
  auto report = read_json(out / "report.json");
  CHECK(report["step"] == 3);
}

TEST_CASE("exit statuses") {
  auto out = scratch("status");
  const auto o = " --out " + out.string();
  CHECK(mas_cli("synthesize --scenario " + kData + "/unsat.json" + o) == 2);
  CHECK(mas_cli("synthesize --scenario " + kData + "/granted_example.json --max-states 3" + o) == 3);
  CHECK(mas_cli("synthesize --scenario " + kData + "/no_such_file.json" + o) == 1);
  CHECK(mas_cli("frobnicate" + o) == 1);
  CHECK(mas_cli("tba --formula 'F[0,1] G[0,1] p'" + o) == 1);
  CHECK(mas_cli("--help") == 0);

  // Scenario validation failures map to the generic status.
  auto bad = example();
  bad.erase("v_max");
  std::ofstream(out / "bad.json") << bad.dump();
  CHECK(mas_cli("bounds --scenario " + (out / "bad.json").string() + o) == 1);
}

TEST_CASE("bounds of the three-agent path") {
  auto out = scratch("bounds");
  Json j = read_json(kData + "/p3_reference.json");
  j["v_max"] = 1.0;
  j.erase("r_bar");
  std::ofstream(out / "p3.json") << j.dump();
  CHECK(mas_cli("bounds --scenario " + (out / "p3.json").string() + " --out " + out.string()) == 0);
  auto b = read_json(out / "bounds.json");
  CHECK(b["bounds"]["k2"].get<double>() == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(b["bounds"]["violations"].empty());
  CHECK(b["spectral"]["lambda2"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("reference constants load and report their violations") {
  auto s = load_scenario(kData + "/p3_reference.json");
  CHECK(s.agents == 3);
  CHECK(s.formulas.size() == 3);
  CHECK(to_string(*s.formulas[1]) == "F[1,1.4] orange");
  auto bm = build_bounds(s);
  CHECK(bm.bounds.r_bar == 10.0);
  CHECK_FALSE(bm.bounds.violations.empty());
}

TEST_CASE("schema errors carry JSON pointers") {
  std::vector<std::string> issues;
  auto j = example();
  j.erase("v_max");
  CHECK(validation_code(j, &issues) == Errc::schema_error);
  CHECK(mentions(issues, "/v_max"));

  j = example();
  j["graph"]["agents"] = "three";
  j["regions"][0]["lower"] = Json::array({0});
  CHECK(validation_code(j, &issues) == Errc::schema_error);
  // Every problem is reported, not just the first.
  CHECK(mentions(issues, "/graph/agents"));
  CHECK(issues.size() >= 2);
}

TEST_CASE("semantic errors") {
  std::vector<std::string> issues;
  auto j = example();
  j["regions"][0]["services"]["2"] = Json::array({"yellow1"});
  CHECK(validation_code(j, &issues) == Errc::semantic_error);
  CHECK(mentions(issues, "yellow1"));

  j = example();
  j["initial_positions"][0] = Json::array({50, 0});
  CHECK(validation_code(j) == Errc::semantic_error);

  j = example();
  j["formulas"][0] = "F[0,1] (";
  CHECK(validation_code(j, &issues) != Errc::invalid_argument);
  CHECK(mentions(issues, "/formulas/0"));
}

TEST_CASE("scenario JSON round-trips") {
  for (const char* file : {"granted_example.json", "analog2d.json", "oned.json", "unsat.json", "p3_reference.json"}) {
    INFO(file);
    auto s = load_scenario(kData + "/" + file);
    const auto once = to_json(s);
    const auto twice = to_json(parse_scenario(once));
    CHECK(once == twice);
  }
}

TEST_CASE("emitted words and automata read back") {
  auto out = scratch("check");
  Json word = {{"prefix", Json::array()},
               {"cycle", Json::array({{{"services", {"green"}}, {"time", 0.0}},
                                      {{"services", Json::array()}, {"time", 1.0}}})},
               {"period", 3.0}};
  std::ofstream(out / "r1.json") << word.dump();
  const auto w = word_from_json(word);
  CHECK(w.period() == 3.0);
  CHECK(mas_cli("check --word " + (out / "r1.json").string() + " --formula 'F[2,5] green' --out " +
                out.string()) == 0);
  CHECK(read_json(out / "check.json")["satisfied"] == true);
  CHECK(mas_cli("check --word " + (out / "r1.json").string() + " --formula 'G[0,5] green' --out " +
                out.string()) == 0);
  CHECK(read_json(out / "check.json")["satisfied"] == false);

  CHECK(mas_cli("tba --formula 'F[2,5] green' --out " + out.string()) == 0);
  auto a = read_json(out / "tba.json");
  CHECK(a["locations"].size() == 3);
}

TEST_CASE("abstract and simulate write their artifacts") {
  auto out = scratch("simulate");
  CHECK(mas_cli("abstract --scenario " + kData + "/oned.json --out " + out.string()) == 0);
  CHECK(fs::exists(out / "wts_agent1.jsonl"));
  CHECK(fs::exists(out / "abstract.json"));
  std::ifstream lines(out / "wts_agent1.jsonl");
  std::string first;
  std::getline(lines, first);
  CHECK(Json::parse(first).contains("source"));

  CHECK(mas_cli("simulate --scenario " + kData + "/oned.json --out " + out.string()) == 0);
  auto v = read_json(out / "verdicts.json");
  for (const auto& a : v["agents"]) CHECK(a["satisfied"] == true);
  std::ifstream csv(out / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("t,", 0) == 0);

  CHECK(mas_cli("simulate --scenario " + kData + "/oned.json --substeps 2 --out " + out.string()) == 1);
}

TEST_CASE("identical inputs give byte-identical plans") {
  auto a = scratch("det_a"), b = scratch("det_b");
  const auto file = kData + "/analog2d.json";
  CHECK(mas_cli("synthesize --scenario " + file + " --seed 7 --out " + a.string()) == 0);
  CHECK(mas_cli("synthesize --scenario " + file + " --seed 7 --out " + b.string()) == 0);
  CHECK(slurp(a / "plan.json") == slurp(b / "plan.json"));
  CHECK_FALSE(slurp(a / "plan.json").empty());
}

TEST_CASE("exit code mapping") {
  CHECK(exit_code(Errc::unsatisfiable) == 2);
  CHECK(exit_code(Errc::budget_exceeded) == 3);
  CHECK(exit_code(Errc::schema_error) == 1);
  CHECK(exit_code(Errc::workspace_exit) == 1);
}

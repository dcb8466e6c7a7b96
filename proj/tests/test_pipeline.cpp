#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "khess/errors.hpp"
#include "khess/pipeline.hpp"

using namespace khess;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("khess_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Json small_counterexample() {
  return Json::parse(R"({"mode": "counterexample", "grid_h": [0.03125], "eps_list": [0.12, 0.08],
                         "levels": 3, "refine": false})");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KHESS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing is strict") {
  CHECK_NOTHROW(parse_config(Json::object()));
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"modes": "measure"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"domain": {"kind": "ball", "radius": 1, "rad": 2}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"k": "two"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"hole": {"rule": "explicit"}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"domain": {"center": [0, 0, 0]}})")), ConfigError);

  const ExperimentConfig c = parse_config(Json::parse(R"({"grid_h": 0.015625, "k": 2, "M": {"rule": "auto", "factor": 1.5}})"));
  CHECK(c.grid_h == std::vector<double>{0.015625});
  CHECK(c.fine_h() == 0.0078125);
  CHECK(c.k == 2);
  CHECK(c.M_factor == 1.5);
  // The echoed config parses back to the same thing.
  CHECK(parse_config(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("validation") {
  auto bad = [](const char* text) { return Json::parse(text); };
  CHECK_THROWS_AS(parse_config(bad(R"({"mode": "fit"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(bad(R"({"dim": 4})")), ConfigError);
  CHECK_THROWS_AS(parse_config(bad(R"({"k": 3})")), ConfigError);
  CHECK_THROWS_AS(parse_config(bad(R"({"eps_list": [0.05, 0.08]})")), ConfigError);
  CHECK_THROWS_AS(parse_config(bad(R"({"eps_list": [0.01]})")), ConfigError);  // below 2h
  CHECK_THROWS_AS(parse_config(bad(R"({"grid_h": [0.01, 0.02]})")), ConfigError);
  CHECK_THROWS_AS(parse_config(bad(R"({"M": {"factor": 0.9}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(bad(R"({"levels": 1})")), ConfigError);
  CHECK_THROWS_AS(parse_config(bad(R"({"random_free": false})")), ConfigError);
  CHECK_THROWS_AS(parse_config(bad(R"({"n": 4})")), ConfigError);  // grid solves need n = dim
  CHECK_NOTHROW(parse_config(bad(R"({"mode": "measure", "n": 4, "k": 2})")));
  CHECK_THROWS_AS(parse_config(bad(R"({"barrier": {"cases": [[2, 3]]}})")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("counterexample runs are deterministic") {
  const ExperimentConfig cfg = parse_config(small_counterexample());
  auto [a, fa] = run_pipeline(cfg);
  auto [b, fb] = run_pipeline(cfg);
  CHECK(a.dump() == b.dump());
  CHECK(fa == fb);
  CHECK(a["schema_version"] == kReportSchemaVersion);
  const std::string verdict = a["counterexample"]["verdict"];
  CHECK((verdict == "detected" || verdict == "not detected" || verdict == "inconclusive"));
  CHECK(a["counterexample"]["per_eps"].size() == 2);
}

TEST_CASE("outputs are written and I/O failures are reported") {
  const fs::path dir = scratch("emit");
  emit_outputs((dir / "out").string(), Json{{"a", 1}}, {{"fields/x.csv", "i,j\n"}});
  CHECK(fs::exists(dir / "out" / "report.json"));
  CHECK(fs::exists(dir / "out" / "fields" / "x.csv"));
  std::ofstream(dir / "plain") << "x";
  CHECK_THROWS_AS(emit_outputs((dir / "plain" / "sub").string(), Json::object(), {}), IoError);
}

TEST_CASE("cli exit codes") {
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "bad.json") << R"({"mode": "barrier", "unknown": 1})";
  std::ofstream(dir / "ok.json") << R"({"mode": "barrier", "grid_h": [0.03125], "eps_list": [0.12, 0.08],
                                        "barrier": {"cases": [[2, 1]], "scaling_families": [[2, 1]], "grid": false}})";
  std::ofstream(dir / "plain") << "x";
  CHECK(run_cli("--config " + (dir / "ok.json").string() + " --out " + (dir / "ok").string()) == 0);
  CHECK(fs::exists(dir / "ok" / "report.json"));
  CHECK(run_cli("--config " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("--config " + (dir / "ok.json").string() + " --out " + (dir / "plain" / "x").string()) == 4);
  CHECK(run_cli("--config " + (dir / "ok.json").string() + " --eps-list 0.08,0.12") == 2);
}

TEST_CASE("barrier study") {
  const ExperimentConfig cfg =
      parse_config(Json::parse(R"({"mode": "barrier", "grid_h": [0.03125], "eps_list": [0.12, 0.08]})"));
  const BarrierStudy s = run_barrier_study(cfg);
  for (const auto& f : s.failures) INFO(f);
  CHECK(s.failures.empty());
  CHECK(s.identities.size() == cfg.barrier_cases.size());
  for (const auto& id : s.identities) CHECK(id.pass);
  CHECK(s.to_json()["pass"] == true);
}

TEST_CASE("measure study, n = 4, k = 2") {
  const ExperimentConfig cfg = parse_config(Json::parse(
      R"({"mode": "measure", "n": 4, "k": 2, "eps_list": [0.1, 0.05, 0.025, 0.0125],
          "measure": {"balls": [{"radius": 0.5}], "radial": true}})"));
  const auto reports = run_measure_study(cfg);
  REQUIRE(reports.size() == 1);
  const MeasureReport& r = reports[0];
  CHECK(r.path == "radial");
  CHECK(r.volume == doctest::Approx(ball_volume(4, 0.5)));
  REQUIRE(r.measures.size() == 4);
  for (std::size_t i = 0; i < r.measures.size(); ++i)
    CHECK(r.measures[i] == doctest::Approx(r.cross_check[i]).epsilon(1e-8));
  CHECK(r.monotone);
  CHECK(r.relative_error() < std::abs(r.measures.back() - r.volume) / r.volume + 1e-12);
  CHECK(to_json(r)["units"] == "length^4");
}

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace gemengelab;
namespace sc = gemengelab::scenario;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GEMENGELAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = "/tmp/gemengelab_test_" + name + ".scn";
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("parse errors carry their line number") {
  try {
    sc::parse_scenario("scenario x\nnonsense directive\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    REQUIRE(e.line() == 2);
    REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("unknown check names are rejected at parse time") {
  REQUIRE_THROWS_AS(sc::parse_scenario("check not-a-check\n"), ParseError);
}

TEST_CASE("complex literals parse in the re+imi form") {
  sc::ScenarioConfig cfg = sc::parse_scenario(
      "space S dim 2\ninput on S vector 0.6-0.8i 0+0i\n");
  REQUIRE(cfg.input.has_value());
  REQUIRE(cfg.input->amplitudes[0] == Complex(0.6, -0.8));
  REQUIRE_THROWS_AS(sc::parse_scenario("space S dim 2\ninput on S vector zzz 0+0i\n"),
                    ParseError);
}

TEST_CASE("all presets parse and run clean") {
  for (const std::string& name : sc::preset_names()) {
    sc::ScenarioConfig cfg = sc::preset(name);
    sc::Report report = sc::run_scenario(cfg);
    INFO(name);
    REQUIRE(report.all_passed);
  }
  REQUIRE_THROWS_AS(sc::preset("nope"), ParseError);
}

TEST_CASE("the no-go preset reports the expected criterion pattern") {
  sc::Report report = sc::run_scenario(sc::preset("no-go"));
  const auto& checks = report.json["checks"];
  bool found = false;
  for (const auto& entry : checks) {
    if (entry["name"] != "objectification") continue;
    found = true;
    REQUIRE(entry["criterion_a"].get<bool>());
    REQUIRE_FALSE(entry["criterion_b"].get<bool>());
  }
  REQUIRE(found);
}

TEST_CASE("the detector preset reports both criteria and the outcome weights") {
  sc::Report report = sc::run_scenario(sc::preset("rule2-detector"));
  bool saw_obj = false, saw_weights = false;
  for (const auto& entry : report.json["checks"]) {
    if (entry["name"] == "objectification") {
      saw_obj = true;
      REQUIRE(entry["criterion_a"].get<bool>());
      REQUIRE(entry["criterion_b"].get<bool>());
    }
    if (entry["name"] == "gemenge-weights") {
      saw_weights = true;
      REQUIRE(entry["max_residual"].get<double>() <= 1e-8);
    }
  }
  REQUIRE(saw_obj);
  REQUIRE(saw_weights);
  REQUIRE(report.json["final_states"]["rule2_gemenge"]["provenance"] == "rule2-generated");
}

TEST_CASE("an empty check list still yields the pipeline states and passes") {
  std::istringstream src(sc::preset_text("no-go"));
  std::string line, stripped;
  while (std::getline(src, line))
    if (line.rfind("check", 0) != 0) stripped += line + "\n";
  sc::Report report = sc::run_scenario(sc::parse_scenario(stripped));
  REQUIRE(report.all_passed);
  REQUIRE(report.json["checks"].empty());
  REQUIRE(report.json["final_states"].contains("composite_vector"));
  REQUIRE(report.json["final_states"].contains("probabilities"));
}

TEST_CASE("reports are byte-identical across runs, timestamp aside") {
  sc::ScenarioConfig cfg = sc::preset("cluster-separability");
  sc::Report a = sc::run_scenario(cfg);
  sc::Report b = sc::run_scenario(cfg);
  a.json.erase("timestamp");
  b.json.erase("timestamp");
  REQUIRE(a.json.dump() == b.json.dump());
}

TEST_CASE("scenario tolerances reach the checks") {
  std::string text = sc::preset_text("no-go");
  // Drop the per-check tolerance so the scenario default applies.
  const std::string needle = "check probability-reproducibility tol 1e-8";
  text.replace(text.find(needle), needle.size(), "check probability-reproducibility");
  text += "tol eq 0.125\n";
  sc::Report report = sc::run_scenario(sc::parse_scenario(text));
  bool found = false;
  for (const auto& entry : report.json["checks"])
    if (entry["name"] == "probability-reproducibility") {
      found = true;
      REQUIRE(entry["tol"].get<double>() == 0.125);
    }
  REQUIRE(found);
}

TEST_CASE("the CLI honors the exit-code contract") {
  REQUIRE(run_cli("--list-presets") == 0);
  REQUIRE(run_cli("preset no-go") == 0);
  REQUIRE(run_cli("preset does-not-exist") == 2);
  REQUIRE(run_cli("run /tmp/definitely_missing_file.scn") == 2);

  // A failing check: demand wrong weights from the detector preset.
  std::string failing = sc::preset_text("rule2-detector");
  const std::string needle = "check gemenge-weights 0.5 0.5 tol 1e-8";
  failing.replace(failing.find(needle), needle.size(),
                  "check gemenge-weights 0.9 0.1 tol 1e-8");
  REQUIRE(run_cli("run " + write_temp("failing", failing)) == 1);

  // A parse error: unknown directive.
  REQUIRE(run_cli("run " + write_temp("broken", "scenario x\nbogus line\n")) == 2);
}

TEST_CASE("CLI tolerance overrides and the environment variable reach the report") {
  std::string text = sc::preset_text("no-go");
  const std::string needle = "check probability-reproducibility tol 1e-8";
  text.replace(text.find(needle), needle.size(), "check probability-reproducibility");
  const std::string path = write_temp("toloverride", text);

  const std::string out = "/tmp/gemengelab_test_tol_report.json";
  std::string cmd = std::string(GEMENGELAB_CLI_PATH) + " run " + path +
                    " --tol eq=0.25 --out " + out + " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  std::ifstream in(out);
  sc::Json report = sc::Json::parse(in);
  for (const auto& entry : report["checks"])
    if (entry["name"] == "probability-reproducibility")
      REQUIRE(entry["tol"].get<double>() == 0.25);

  std::string env_cmd = std::string("GEMENGELAB_TOL_EQ=0.0625 ") + GEMENGELAB_CLI_PATH +
                        " run " + path + " --out " + out + " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
  std::ifstream in2(out);
  sc::Json report2 = sc::Json::parse(in2);
  for (const auto& entry : report2["checks"])
    if (entry["name"] == "probability-reproducibility")
      REQUIRE(entry["tol"].get<double>() == 0.0625);
}

TEST_CASE("shipped scenario files stay in sync with the built-in presets") {
  const std::map<std::string, std::string> files = {
      {"no-go", "no_go.scn"},
      {"rule2-detector", "rule2_detector.scn"},
      {"stern-gerlach-I", "stern_gerlach_1.scn"},
      {"stern-gerlach-II", "stern_gerlach_2.scn"},
      {"cluster-separability", "cluster_separability.scn"}};
  for (const auto& [preset_name, file_name] : files) {
    std::ifstream in(std::string(GEMENGELAB_SCENARIO_DIR) + "/" + file_name);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    REQUIRE(buffer.str() == sc::preset_text(preset_name));
  }
}

TEST_CASE("an explicit lattice scenario runs through the file interface") {
  const std::string text = R"(scenario lattice-demo
seed 4
lattice L sites 0 0.5 1 1.5 2 2.5 3 3.5
domain D on L indices 0 1 2 3
packet psi on L gaussian center 0.75 width 0.5 support D
packet phi on L gaussian center 2.75 width 0.5 support Dc
domain Dc on L range 4 8
kernel k on L dense
  row 1+0i 0+0i 0+0i 0+0i 0+0i 0+0i 0+0i 0+0i
  row 0+0i 1+0i 0+0i 0+0i 0+0i 0+0i 0+0i 0+0i
  row 0+0i 0+0i 1+0i 0+0i 0+0i 0+0i 0+0i 0+0i
  row 0+0i 0+0i 0+0i 1+0i 0+0i 0+0i 0+0i 0+0i
  row 0+0i 0+0i 0+0i 0+0i 1+0i 0+0i 0+0i 0+0i
  row 0+0i 0+0i 0+0i 0+0i 0+0i 1+0i 0+0i 0+0i
  row 0+0i 0+0i 0+0i 0+0i 0+0i 0+0i 1+0i 0+0i
  row 0+0i 0+0i 0+0i 0+0i 0+0i 0+0i 0+0i 1+0i
end
check cluster-separability kernel k domain D left psi right phi tol 1e-10
)";
  sc::Report report = sc::run_scenario(sc::parse_scenario(text));
  REQUIRE(report.all_passed);
}

TEST_CASE("dimension mismatches surface as errors, not failed checks") {
  const std::string text = R"(scenario broken-dims
space S dim 2
observable O on S
  outcome 1
    vector 1+0i 0+0i 0+0i
  end
end
input on S vector 1+0i 0+0i
)";
  REQUIRE_THROWS(sc::run_scenario(sc::parse_scenario(text)));
}

TEST_CASE("observables serialize to the scenario format and back, bit-exactly") {
  Rng rng(223);
  HilbertSpace s(4, "S");
  Matrix u = random_unitary_matrix(rng, 4);
  std::vector<std::vector<StateVector>> families = {
      {StateVector(s, Vector(u.col(0))), StateVector(s, Vector(u.col(1)))},
      {StateVector(s, Vector(u.col(2)))},
      {StateVector(s, Vector(u.col(3)))}};
  SharpObservable o(s, {0.5, -1.25, 3.0}, families);

  const std::string text = "space S dim 4\n" + sc::serialize_observable(o, "O", "S");
  sc::ScenarioConfig cfg = sc::parse_scenario(text);
  REQUIRE(cfg.system_observable.has_value());
  REQUIRE(cfg.system_observable->eigenvalues == std::vector<double>{0.5, -1.25, 3.0});
  for (int k = 0; k < 3; ++k)
    for (std::size_t l = 0; l < families[static_cast<std::size_t>(k)].size(); ++l) {
      const auto& amps =
          cfg.system_observable->eigenvectors[static_cast<std::size_t>(k)][l];
      const Vector& want = families[static_cast<std::size_t>(k)][l].amplitudes();
      for (Eigen::Index i = 0; i < want.size(); ++i)
        REQUIRE(amps[static_cast<std::size_t>(i)] == want(i));
    }
}

TEST_CASE("an eigenstate input through the detector preset leaves a trivial gemenge") {
  std::string text = sc::preset_text("stern-gerlach-I");
  const std::string needle =
      "input on S vector 0.7071067811865476+0i 0.7071067811865476+0i";
  text.replace(text.find(needle), needle.size(), "input on S basis 0");
  // The half/half checks no longer apply to an eigenstate run.
  std::istringstream src(text);
  std::string line, stripped;
  while (std::getline(src, line))
    if (line.rfind("check", 0) != 0) stripped += line + "\n";

  sc::Report report = sc::run_scenario(sc::parse_scenario(stripped));
  REQUIRE(report.all_passed);
  const auto& gem = report.json["final_states"]["rule2_gemenge"];
  REQUIRE(gem["provenance"] == "trivial");
  REQUIRE(gem["branches"].size() == 1);
}

TEST_CASE("the CLI seed override lands in the report") {
  const std::string out = "/tmp/gemengelab_test_seed_report.json";
  const std::string cmd = std::string(GEMENGELAB_CLI_PATH) +
                          " preset no-go --seed 12345 --out " + out + " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  std::ifstream in(out);
  sc::Json report = sc::Json::parse(in);
  REQUIRE(report["seed"].get<std::uint64_t>() == 12345);
}

TEST_CASE("the repeatability check passes for matched end states and flags rotations") {
  std::string vn = sc::preset_text("no-go");
  vn += "check repeatability tol 1e-8\n";
  sc::Report ok = sc::run_scenario(sc::parse_scenario(vn));
  REQUIRE(ok.all_passed);

  // Rotated end states, declared through the explicit block, violate the
  // repetition identity by a macroscopic margin.
  std::string rotated = R"(scenario rotated-ends
seed 3
space S dim 2
space A dim 2
observable O on S
  outcome 1
    vector 1+0i 0+0i
  end
  outcome -1
    vector 0+0i 1+0i
  end
end
pointer P on A
  outcome 1
    vector 1+0i 0+0i
  end
  outcome -1
    vector 0+0i 1+0i
  end
end
apparatus-init on A vector 1+0i 0+0i
end-states explicit
  vector 0.7071067811865476+0i 0.7071067811865476+0i
  vector -0.7071067811865476+0i 0.7071067811865476+0i
end
input on S vector 1+0i 0+0i
check repeatability expect-violation-min 1e-2
)";
  sc::Report bad = sc::run_scenario(sc::parse_scenario(rotated));
  REQUIRE(bad.all_passed);
  for (const auto& entry : bad.json["checks"]) {
    REQUIRE(entry["max_residual"].get<double>() >= 1e-2);
    REQUIRE_FALSE(entry["von_neumann"].get<bool>());
  }
}

#include "zenosim/error.hpp"
#include "zenosim/experiment.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace zenosim;
using namespace zenosim::experiment;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("zenosim_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ZENOSIM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_bath() {
  return json{{"experiment", "bath-sim"},
              {"seed", 99},
              {"parameters",
               {{"shape", "one-over-f"}, {"alpha", 0.3}, {"omega0", 0.5}, {"Nc", 8}, {"M", 300}, {"t_max", 2.0},
                {"t_points", 11}, {"corr_M", 100}, {"corr_points", 11}}}};
}

}  // namespace

TEST_CASE("config shape is checked strictly") {
  CHECK_THROWS_AS(parse_config(json{{"experiment", "ladder-check"}, {"colour", "red"}}), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"seed", 1}}), ValidationError);
  CHECK_THROWS_AS(parse_config(json{{"experiment", "ladder-check"}, {"seed", -4}}), ValidationError);
  const auto cfg = parse_config(json{{"experiment", "ladder-check"}, {"parameters", {{"g", {0.5}}, {"bogus", 1}}}});
  const auto errors = validate(cfg);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("bogus") != std::string::npos);
  CHECK(!validate(parse_config(json{{"experiment", "nope"}})).empty());
}

TEST_CASE("all five experiments are listed") {
  std::vector<std::string> names;
  for (const auto& e : experiments()) names.push_back(e.name);
  for (const char* n : {"ramsey-scaling", "criticality-qfi", "thermal-qfi", "bath-sim", "ladder-check"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  CHECK(cli("list") == kSuccess);
}

TEST_CASE("bundled sample configs validate cleanly") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(ZENOSIM_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    const auto errors = validate(load_config(entry.path()));
    INFO(entry.path().string());
    CHECK(errors.empty());
  }
  CHECK(seen >= 5);
}

TEST_CASE("validation flags a Fock space too small for the coupling") {
  const json j{{"experiment", "criticality-qfi"},
               {"parameters", {{"g", {0.9, 0.95}}, {"kappa1", 0.0}, {"cutoff", 16}, {"t_max", 5.0}}}};
  const auto errors = validate(parse_config(j));
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("too small for g = 0.95") != std::string::npos);
}

TEST_CASE("validation collects module preconditions") {
  const json j{{"experiment", "ramsey-scaling"}, {"parameters", {{"noise", "zeno"}, {"T", -1.0}, {"n", {2, 0}}}}};
  CHECK(validate(parse_config(j)).size() >= 2);
  const json b{{"experiment", "bath-sim"}, {"parameters", {{"alpha", 0.1}, {"Nc", 10}, {"t_max", 1.0}, {"dt", 1.0}}}};
  CHECK(!validate(parse_config(b)).empty());
}

TEST_CASE("property: CSV floats round-trip exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-300, 300);
  for (int k = 0; k < 2000; ++k) {
    const double x = std::ldexp(mant(rng), ex(rng));
    CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
  }
  CHECK(format_double(std::nan("")) == "nan");
  const Table t{"x.csv", {"a", "b"}, {{1.0, 0.1}}};
  CHECK(to_csv(t) == "a,b\n1,0.1\n");
}

TEST_CASE("malformed config exits 2 and writes nothing") {
  const auto dir = scratch("malformed");
  const json j{{"experiment", "ramsey-scaling"},
               {"output_dir", (dir / "out").string()},
               {"parameters", {{"noise", "zeno"}, {"T", -1.0}, {"n", {2, 4, 8}}}}};
  CHECK(cli("run " + write_config(dir, j).string()) == kValidationError);
  CHECK(!fs::exists(dir / "out"));
  CHECK(cli("run " + (dir / "missing.json").string()) == kValidationError);
  CHECK(cli("validate " + write_config(dir, j).string()) == kValidationError);
}

TEST_CASE("numerical failure exits 3 and leaves no outputs") {
  const auto dir = scratch("numerical");
  const json j{{"experiment", "criticality-qfi"},
               {"output_dir", (dir / "out").string()},
               {"parameters",
                {{"g", {0.85, 0.9}}, {"kappa1", 0.1}, {"cutoff", 3}, {"t_max", 10.0}, {"t_step", 0.1},
                 {"richardson", false}}}};
  CHECK(cli("run " + write_config(dir, j).string()) == kNumericalFailure);
  CHECK(!fs::exists(dir / "out"));
}

TEST_CASE("runs are byte-identical across worker counts and carry a manifest") {
  const auto dir = scratch("repro");
  const auto cfg = write_config(dir, small_bath());
  REQUIRE(cli("run " + cfg.string() + " --workers 1 --output-dir " + (dir / "a").string()) == kSuccess);
  REQUIRE(cli("run " + cfg.string() + " --workers 4 --output-dir " + (dir / "b").string()) == kSuccess);
  for (const char* f : {"ensemble.csv", "correlation.csv", "psd.csv"}) {
    const auto a = slurp(dir / "a" / f);
    CHECK(!a.empty());
    CHECK(a == slurp(dir / "b" / f));
    CHECK(a.find('\r') == std::string::npos);
  }
  const auto ma = json::parse(slurp(dir / "a" / "manifest.json"));
  const auto mb = json::parse(slurp(dir / "b" / "manifest.json"));
  CHECK(ma["outputs"] == mb["outputs"]);
  CHECK(ma["config"]["seed"] == 99);
  CHECK(ma["outputs"][0]["fnv1a64"] == checksum(slurp(dir / "a" / "ensemble.csv")));
  // The seed flag overrides the config and changes the draws.
  REQUIRE(cli("run " + cfg.string() + " --seed 100 --output-dir " + (dir / "c").string()) == kSuccess);
  CHECK(slurp(dir / "a" / "ensemble.csv") != slurp(dir / "c" / "ensemble.csv"));
  CHECK(slurp(dir / "a" / "psd.csv") == slurp(dir / "c" / "psd.csv"));
}

TEST_CASE("ramsey and ladder experiments report their headline numbers") {
  ExperimentConfig cfg;
  cfg.experiment = "ramsey-scaling";
  cfg.parameters = {{"noise", "zeno"}, {"T", 10.0}, {"n", {2, 4, 8, 16, 32, 64, 128, 256, 512, 1024}}};
  const auto tables = execute(cfg);
  REQUIRE(tables.size() == 1);
  const auto& h = tables[0].header;
  const auto b_col = std::find(h.begin(), h.end(), "fit_b") - h.begin();
  CHECK(tables[0].rows[0][b_col] == doctest::Approx(0.25).epsilon(1e-9));

  cfg.experiment = "ladder-check";
  cfg.parameters = {{"g", {0.2, 0.8}}, {"cutoff", 60}};
  const auto ladder = execute(cfg);
  REQUIRE(ladder[0].rows.size() == 3);
  CHECK(ladder[0].rows[0].back() < 1e-8);
  CHECK(ladder[0].rows[2].back() > 0.1);
}

TEST_CASE("every parameter in the published schema is accepted by the parser") {
  const auto schema = json::parse(slurp(fs::path(ZENOSIM_SOURCE_DIR) / "docs" / "config.schema.json"));
  const auto& defs = schema["$defs"];
  const std::map<std::string, std::string> sample{{"ramsey-scaling", "ramsey_zeno.json"},
                                                  {"criticality-qfi", "criticality_qfi.json"},
                                                  {"thermal-qfi", "thermal_qfi.json"},
                                                  {"bath-sim", "bath_sim.json"},
                                                  {"ladder-check", "ladder_check.json"}};
  for (const auto& rule : schema["allOf"]) {
    const std::string name = rule["if"]["properties"]["experiment"]["const"];
    const std::string ref = rule["then"]["properties"]["parameters"]["$ref"];
    const auto& params = defs[ref.substr(ref.rfind('/') + 1)]["properties"];
    auto cfg = load_config(fs::path(ZENOSIM_SOURCE_DIR) / "configs" / sample.at(name));
    for (const auto& [key, prop] : params.items()) {
      INFO(name << "." << key);
      auto trial = cfg;
      if (!trial.parameters.contains(key)) {
        const bool shared = !prop.contains("default") && prop.contains("$ref") && defs["scan"].contains(key);
        const auto& p = shared ? defs["scan"][key] : prop;
        if (!p.contains("default")) continue;
        trial.parameters[key] = p["default"];
      }
      CHECK(validate(trial).empty());
    }
  }
}

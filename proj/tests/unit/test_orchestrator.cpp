#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bindlab/orchestrator.hpp"

using namespace bindlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("bindlab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bindlab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config validation") {
  const auto cfg = parse_config(Json{{"command", "pekar1"}, {"params", {{"alpha", 2}}}});
  CHECK(cfg.params["alpha"].get<double>() == 2.0);
  CHECK(cfg.params["basis_size"].get<int>() == 20);
  CHECK(cfg.output_dir == "bindlab_out");
  CHECK_THROWS_AS(parse_config(Json{{"command", "pekar1"}, {"extra", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"command", "pekar1"}, {"params", {{"beta", 1}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"command", "pekar1"}, {"params", {{"alpha", "x"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"command", "pekar1"}, {"params", {{"alpha", -1}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"command", "nope"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"command", "verify-lemmas"}, {"params", {{"lemma", "odd"}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"command", "pekar1"}, {"seeds", {-1}}}), ConfigError);
}

TEST_CASE("schema lists every command and parameter") {
  const Json s = config_schema();
  CHECK(s["properties"]["command"]["enum"].size() == command_names().size());
  CHECK(command_names().size() == 8);
  bool found = false;
  for (const auto& branch : s["allOf"]) {
    if (branch["if"]["properties"]["command"]["const"] == "verify-lemmas") {
      found = branch["then"]["properties"]["params"]["properties"].contains("trials");
    }
  }
  CHECK(found);
}

TEST_CASE("pekar1 run is deterministic and persists its basis") {
  const auto d1 = scratch("p1"), d2 = scratch("p2");
  CHECK(cli({"pekar1", "--basis-size", "8", "--seed", "7", "--output-dir", d1.string()}) == 0);
  CHECK(cli({"pekar1", "--basis-size", "8", "--seed", "7", "--output-dir", d2.string()}) == 0);
  CHECK(slurp(d1 / "basis.txt") == slurp(d2 / "basis.txt"));
  const Json r1 = Json::parse(slurp(d1 / "report.json"));
  const Json r2 = Json::parse(slurp(d2 / "report.json"));
  CHECK(r1["result"] == r2["result"]);
  CHECK(r1["provenance"]["seeds"][0] == 7);
  CHECK(r1["result"]["energy_report"]["total"].get<double>() < -0.10);

  // warm start from the persisted basis
  const auto d3 = scratch("p3");
  CHECK(cli({"pekar1", "--basis-size", "8", "--basis-file", (d1 / "basis.txt").string(), "--output-dir",
             d3.string()}) == 0);
  const Json r3 = Json::parse(slurp(d3 / "report.json"));
  // same basis, re-solved from scratch: equal within twice the SCF tolerance
  const double e1 = r1["result"]["energy_report"]["total"].get<double>();
  CHECK(std::abs(r3["result"]["energy_report"]["total"].get<double>() - e1) <= 2e-9 * std::abs(e1));

  // one mixed SCF step on the 8-element basis cannot converge
  CHECK(cli({"pekar1", "--basis-size", "8", "--scf-max-iter", "1", "--mixing", "0.05", "--basis-file",
             (d1 / "basis.txt").string(), "--output-dir", d3.string()}) == 3);
}

TEST_CASE("exit codes") {
  const auto d = scratch("codes");
  fs::create_directories(d);
  {
    std::ofstream os(d / "bad_basis.txt");
    os << "bindlab-basis 1\nn_particles 1\nsymmetrization bosonic\nelements 1\n-1\ncoefficients 0\n";
  }
  CHECK(cli({"pekar1", "--basis-file", (d / "bad_basis.txt").string(), "--output-dir", d.string()}) == 2);
  CHECK(cli({"pekar1", "--no-such-flag", "1"}) == 2);
  CHECK(cli({"verify-constants", "--delta", "0.01", "--output-dir", d.string()}) == 2);
  CHECK(cli({"verify-constants", "--output-dir", d.string()}) == 0);
  {
    std::ofstream os(d / "cfg.json");
    os << R"({"command": "verify-constants", "params": {"n_particles": 3}, "bogus": 1})";
  }
  CHECK(cli({"verify-constants", "--config", (d / "cfg.json").string(), "--output-dir", d.string()}) == 2);
  {
    std::ofstream os(d / "cfg2.json");
    os << R"({"command": "verify-constants", "params": {"n_particles": 3}})";
  }
  CHECK(cli({"verify-constants", "--config", (d / "cfg2.json").string(), "--output-dir", d.string()}) == 0);
  const Json r = Json::parse(slurp(d / "report.json"));
  CHECK(r["config"]["params"]["n_particles"] == 3);
  CHECK_FALSE(r["result"]["step2_at_ell_c"]["ok"].get<bool>());
  CHECK(r["result"]["step2_at_ell_c_rederived"]["ok"].get<bool>());
}

TEST_CASE("atom scan CSV is byte identical across reruns and warm starts reproduce it") {
  const auto a = scratch("s1"), b = scratch("s2"), c = scratch("s3");
  const std::vector<std::string> common = {"atom-scan", "--u-grid", "0.9,1.0,1.2", "--basis-size", "14",
                                           "--growth-per-point", "0", "--mc-samples", "200"};
  auto with = [&](const fs::path& d, std::vector<std::string> extra = {}) {
    auto v = common;
    v.push_back("--output-dir");
    v.push_back(d.string());
    v.insert(v.end(), extra.begin(), extra.end());
    return cli(v);
  };
  CHECK(with(a) == 0);
  CHECK(with(b) == 0);
  const std::string csv = slurp(a / "scan.csv");
  CHECK(csv == slurp(b / "scan.csv"));
  CHECK(csv.rfind(scan_csv_header() + "\n", 0) == 0);
  CHECK(with(c, {"--basis-file", (a / "basis.txt").string()}) == 0);
  const Json cold = Json::parse(slurp(a / "report.json"));
  const Json warm = Json::parse(slurp(c / "report.json"));
  const double tol = cold["result"]["scan"]["tol_bind"].get<double>();
  for (std::size_t i = 0; i < 3; ++i) {
    const double ec = cold["result"]["scan"]["points"][i]["energy"].get<double>();
    const double ew = warm["result"]["scan"]["points"][i]["energy"].get<double>();
    CHECK(std::abs(ec - ew) <= 2 * tol);
  }
}

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "twlab/lab.hpp"

using namespace twlab;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "twlab_cli_test";

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  f << s;
}

int run(const std::string& args) {
  const std::string cmd = std::string(TW_LAB_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path write_config(int depth = 5, int kappa = 2, const std::string& extra = "") {
  const fs::path p = kWork / "config.json";
  spit(p, std::string("{\"dimension\":1,\"depth\":") + std::to_string(depth) +
              ",\"kappa\":" + std::to_string(kappa) +
              ",\"family\":\"hilbert\",\"seeds\":[3],\"gamma\":1.5," +
              "\"goodness\":{\"r\":1,\"eps\":0.6,\"tau\":2,\"rho\":4}" + extra + "}");
  return p;
}

}  // namespace

TEST_CASE("config round trip and validation") {
  ExperimentConfig c;
  c.kappa = 3;
  c.goodness = {1, 0.6, 2, 4};
  const auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.kappa == 3);
  CHECK(back.goodness.rho == 4);
  CHECK_THROWS_AS(ExperimentConfig::from_json("{\"dimension\":3}"), config_error);
  CHECK_THROWS_AS(ExperimentConfig::from_json("{\"kappa\":9}"), config_error);
  // eps out of the admissible range for kappa = 1
  CHECK_THROWS_AS(
      ExperimentConfig::from_json("{\"kappa\":1,\"goodness\":{\"eps\":0.6}}"),
      config_error);
}

TEST_CASE("constants command writes reports, csv and aggregate deterministically") {
  const fs::path cfg = write_config();
  const fs::path out1 = kWork / "c1";
  const fs::path out2 = kWork / "c2";
  REQUIRE(run("constants --config " + cfg.string() + " --out " + out1.string() +
              " --no-timestamp") == 0);
  REQUIRE(run("constants --config " + cfg.string() + " --out " + out2.string() +
              " --no-timestamp") == 0);
  CHECK(slurp(out1 / "constants_seed3.json") == slurp(out2 / "constants_seed3.json"));
  CHECK(slurp(out1 / "constants.csv") == slurp(out2 / "constants.csv"));
  const auto j = nlohmann::json::parse(slurp(out1 / "constants_seed3.json"));
  CHECK(j.at("a2").at("value").get<double>() > 0.0);
  CHECK(j.at("norm").get<double>() > 0.0);
  CHECK_FALSE(j.contains("generated_at"));
  const auto agg = nlohmann::json::parse(slurp(out1 / "aggregate.json"));
  CHECK(agg.at("instances").get<int>() == 1);
}

TEST_CASE("zero kernel config zeroes the operator constants") {
  const fs::path cfg = kWork / "zero.json";
  spit(cfg,
       "{\"dimension\":1,\"depth\":4,\"kappa\":2,\"family\":\"zero\",\"seeds\":[1],"
       "\"goodness\":{\"r\":1,\"eps\":0.6,\"tau\":2,\"rho\":4}}");
  const fs::path out = kWork / "z";
  REQUIRE(run("constants --config " + cfg.string() + " --out " + out.string() +
              " --no-timestamp") == 0);
  const auto j = nlohmann::json::parse(slurp(out / "constants_seed1.json"));
  CHECK(j.at("testing").at("value").get<double>() == 0.0);
  CHECK(j.at("norm").get<double>() == 0.0);
  CHECK(j.at("cancellation_cube").at("value").get<double>() == 0.0);
  CHECK(j.at("a2").at("value").get<double>() > 0.0);  // measures are unaffected
}

TEST_CASE("verify command exit codes, including the fault hook") {
  const fs::path cfg = write_config(6);
  CHECK(run("verify --config " + cfg.string() + " --out " + (kWork / "v").string()) == 0);
  CHECK(run("verify --config " + cfg.string() + " --inject-fault --out " +
            (kWork / "vf").string()) == 1);
  CHECK(run("constants --config /no/such/file.json") == 2);
}

TEST_CASE("decompose command writes a trace for constant and spiked data") {
  Grid g(1, 6, {0.0, 0.0}, 1.0);
  // a Lebesgue pair at gamma = 4: constant data triggers nothing
  Measure leb(g, std::vector<double>(g.leaf_count(), 1.0));
  spit(kWork / "leb.json", leb.to_json());
  const fs::path cfg = kWork / "leb_cfg.json";
  spit(cfg,
       "{\"dimension\":1,\"depth\":6,\"kappa\":2,\"family\":\"hilbert\",\"seeds\":[1],"
       "\"gamma\":4.0,\"sigma_file\":\"" + (kWork / "leb.json").string() +
       "\",\"omega_file\":\"" + (kWork / "leb.json").string() +
       "\",\"goodness\":{\"r\":1,\"eps\":0.6,\"tau\":2,\"rho\":4}}");
  nlohmann::json fv = std::vector<double>(g.leaf_count(), 1.0);
  spit(kWork / "f.json", fv.dump());
  std::vector<double> spike(g.leaf_count(), 1.0);
  spike[20] = 300.0;
  nlohmann::json sv = spike;
  spit(kWork / "fs.json", sv.dump());

  REQUIRE(run("decompose --config " + cfg.string() + " --f " + (kWork / "f.json").string() +
              " --g " + (kWork / "f.json").string() + " --out " + (kWork / "d1").string() +
              " --no-timestamp") == 0);
  auto j = nlohmann::json::parse(slurp(kWork / "d1" / "decomposition.json"));
  CHECK(j.at("stops").size() == 1);  // constant data: single stopping cube

  REQUIRE(run("decompose --config " + cfg.string() + " --f " + (kWork / "fs.json").string() +
              " --g " + (kWork / "f.json").string() + " --out " + (kWork / "d2").string() +
              " --no-timestamp") == 0);
  j = nlohmann::json::parse(slurp(kWork / "d2" / "decomposition.json"));
  CHECK(j.at("stops").size() > 1);
  CHECK(j.at("max_overlap").get<int>() <= 2);

  // shape mismatch: wrong length
  spit(kWork / "bad.json", "[1,2,3]");
  CHECK(run("decompose --config " + cfg.string() + " --f " + (kWork / "bad.json").string() +
            " --g " + (kWork / "f.json").string()) == 2);
}

TEST_CASE("gen-measure emits a loadable measure") {
  const fs::path out = kWork / "m.json";
  REQUIRE(run("gen-measure --dim 1 --depth 5 --beta 0.3 --seed 11 --measure-out " +
              out.string()) == 0);
  const Measure mu = Measure::from_json(slurp(out));
  CHECK(mu.grid().depth() == 5);
  CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  // and a config can consume it
  const fs::path cfg = kWork / "file_cfg.json";
  spit(cfg,
       "{\"dimension\":1,\"depth\":5,\"kappa\":2,\"family\":\"hilbert\",\"seeds\":[1],"
       "\"sigma_file\":\"" + out.string() + "\",\"omega_file\":\"" + out.string() +
       "\",\"goodness\":{\"r\":1,\"eps\":0.6,\"tau\":2,\"rho\":4}}");
  CHECK(run("verify --config " + cfg.string() + " --out " + (kWork / "vm").string()) == 0);
}

TEST_CASE("zero g data gives an all-zero ledger trace") {
  Grid g(1, 6, {0.0, 0.0}, 1.0);
  ExperimentConfig cfg;
  cfg.depth = 6;
  cfg.kappa = 2;
  cfg.goodness = {1, 0.6, 2, 4};
  cfg.gamma = 1.5;
  const Instance in = cfg.instance(5);
  std::vector<double> f(g.leaf_count(), 1.0);
  f[11] = 40.0;
  const auto tr = run_decomposition(in, f, std::vector<double>(g.leaf_count(), 0.0));
  CHECK(tr.ledger.pairing_matrix == 0.0);
  CHECK(tr.ledger.blocks_total == 0.0);
  CHECK(tr.ledger.size.total() == 0.0);
}

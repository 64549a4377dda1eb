#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using namespace gyrostat;
using namespace gyrostat::cli;

namespace {

const char* kBase = R"({
  "params": {"A": [1, 2, 3], "lambda": [0.1, 0.2, 0.3]},
  "k": [1.0, 0.5, 0.0],
  "resolution": [64, 128],
  "sigma_samples": 64,
  "k3_slices": [0.0, 0.5],
  "region_samples": 50,
  "seed": 42
})";

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const InvalidInput& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch() {
  auto dir = std::filesystem::temp_directory_path() / "gyrostat_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(GYROSTAT_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, ParsesValidDocument) {
  const RunConfig cfg = parse_config(kBase);
  ASSERT_TRUE(cfg.params.has_value());
  EXPECT_EQ(cfg.nlat, 64);
  EXPECT_EQ(cfg.nlon, 128);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.k3_slices.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.require_k().k2, 0.5);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_of("{\n  \"params\": {\"A\": [1, 2, 3], \"lambda\": [0.1, 0.2, 0.3]},\n  \"tol\": 5\n}"),
            "cfg.json:3: /tol: must be <= 0.001");
  EXPECT_EQ(error_of("{\n  \"params\": {\"A\": [1, 2, 3], \"lambda\": [0.1, 0.2, 0.3]},\n\n  \"bogus\": 1\n}"),
            "cfg.json:4: /bogus: unknown key");
  EXPECT_EQ(error_of("{\n  \"params\": {\n    \"A\": [1, -2, 3],\n    \"lambda\": [0.1, 0.2, 0.3]\n  }\n}"),
            "cfg.json:3: /params/A/1: must be > 0");
  EXPECT_EQ(error_of("{\n  \"params\": {\"A\": [1, 2], \"lambda\": [0.1, 0.2, 0.3]}\n}"),
            "cfg.json:2: /params/A: needs at least 3 items");
  EXPECT_EQ(error_of("{\n  \"k\": [1, 2, 3]\n}"), "cfg.json:1: /: missing required key \"params\"");
  EXPECT_NE(error_of("{\n  \"params\": \n").find("cfg.json"), std::string::npos);
  EXPECT_EQ(error_of("{\n  \"params\": {\"A\": [1, 2, 3], \"lambda\": [0.1, 0.2, 0.3]},\n  \"seed\": 1.5\n}"),
            "cfg.json:3: /seed: expected integer");
}

TEST(Config, SchemaIsValidJson) {
  const json schema = json::parse(kConfigSchema);
  EXPECT_EQ(schema.at("type"), "object");
  EXPECT_TRUE(schema.at("properties").contains("params"));
}

TEST(Commands, BifurcationIsDeterministic) {
  const RunConfig cfg = parse_config(kBase);
  const auto a = cmd_bifurcation(cfg);
  const auto b = cmd_bifurcation(cfg);
  EXPECT_EQ(a.curve_csv, b.curve_csv);
  EXPECT_EQ(a.sigma_csv, b.sigma_csv);
  EXPECT_EQ(a.regions.dump(), b.regions.dump());
  for (const char* branch : {"LOW", "MID1", "MID2", "HIGH"}) EXPECT_NE(a.curve_csv.find(branch), std::string::npos);
  EXPECT_NE(a.curve_csv.find("\n0,0.14000000000000001,0,LOW\n"), std::string::npos);
}

TEST(Commands, BifurcationRejectsNonGeneric) {
  RunConfig cfg = parse_config(kBase);
  cfg.params = GyrostatParams({1, 2, 3}, {0.1, 0.0, 0.3});
  EXPECT_THROW(cmd_bifurcation(cfg), NonGenericParams);
}

TEST(Commands, ClassifyReportsManifoldType) {
  RunConfig cfg = parse_config(kBase);
  const std::vector<std::pair<IntegralConstants, std::string>> cases{
      {{1, 0.5, 0}, "T2"}, {{1, 1.5, 0}, "empty"}, {{1, 0.84, 0}, "2T2"}, {{5, 2.125, 0}, "2T2"}};
  for (const auto& [k, type] : cases) {
    cfg.k = k;
    const json out = cmd_classify(cfg);
    EXPECT_EQ(out.at("jk_type"), type);
    EXPECT_TRUE(out.at("consistent").get<bool>());
  }
}

TEST(Commands, RpmMapMatchesClassify) {
  RunConfig cfg = parse_config(kBase);
  cfg.k = IntegralConstants{1, 0.84, 0.95};
  const json cls = cmd_classify(cfg);
  const RpmReport map = cmd_rpm_map(cfg);
  EXPECT_EQ(cls.at("component_count").get<std::size_t>(), map.components.size());
  EXPECT_EQ(cls.at("sheets").get<int>(), map.sheets);
}

TEST(Commands, SimulateContainmentAndDrift) {
  RunConfig cfg = parse_config(kBase);
  cfg.state = State({0.3, -0.2, 0.5}, {0.0, 0.6, 0.8});
  cfg.t_end = 50;
  const auto out = cmd_simulate(cfg);
  EXPECT_DOUBLE_EQ(out.report.at("containment").at("fraction").get<double>(), 1.0);
  for (const char* key : {"K1", "K2", "K3"}) EXPECT_LT(out.report.at("drift").at(key).get<double>(), 1e-8);
  EXPECT_LT(out.report.at("reversal_error").get<double>(), 1e-6);
}

TEST(Binary, ExitCodes) {
  const auto dir = scratch();
  const std::string P = "--A 1 2 3 --lambda 0.1 0.2 0.3";
  EXPECT_EQ(run("schema"), 0);
  EXPECT_EQ(run("classify " + P + " --k 1 0.5 0 --resolution 32x64"), 0);
  EXPECT_EQ(run("bifurcation --A 1 1 3 --lambda 0.1 0.2 0.3 --out " + (dir / "ng").string()), 2);
  EXPECT_EQ(run("classify " + P), 2);                       // missing k
  EXPECT_EQ(run("classify " + P + " --k 1 2"), 2);          // malformed flag
  EXPECT_EQ(run("simulate " + P + " --omega 1 0 0 --nu 1 1 0"), 2);  // non-unit nu
  EXPECT_EQ(run("nonsense"), 2);
  std::ofstream(dir / "bad.json") << "{\n  \"params\": {\"A\": [1, 2, 3], \"lambda\": [0.1, 0.2, 0.3]},\n  \"tol\": 5\n}\n";
  EXPECT_EQ(run("simulate --config " + (dir / "bad.json").string()), 2);
}

TEST(Binary, FlagsOverrideConfigAndOutputsAreReproducible) {
  const auto dir = scratch();
  std::ofstream(dir / "cfg.json") << kBase;
  const std::string cfg = "--config " + (dir / "cfg.json").string();
  ASSERT_EQ(run("bifurcation " + cfg + " --seed 7 --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("bifurcation " + cfg + " --seed 7 --out " + (dir / "b").string()), 0);
  EXPECT_EQ(slurp(dir / "a.curve.csv"), slurp(dir / "b.curve.csv"));
  EXPECT_EQ(slurp(dir / "a.sigma.csv"), slurp(dir / "b.sigma.csv"));
  EXPECT_EQ(slurp(dir / "a.regions.json"), slurp(dir / "b.regions.json"));
  EXPECT_EQ(json::parse(slurp(dir / "a.regions.json")).at("seed"), 7);

  ASSERT_EQ(run("rpm-map " + cfg + " --k 1 0.84 0.5 --out " + (dir / "m.json").string() + " --svg " +
                (dir / "m.svg").string()),
            0);
  const json report = json::parse(slurp(dir / "m.json"));
  EXPECT_EQ(report.at("k")[1], 0.84);
  EXPECT_EQ(report.at("grid").at("vertices"), Icosphere::vertex_count(Icosphere::level_for(64, 128)));
  EXPECT_NE(slurp(dir / "m.svg").find("<svg"), std::string::npos);
}

TEST(Binary, CheckOnBoundaryCsv) {
  const auto dir = scratch();
  const std::string P = "--A 1 2 3 --lambda 0.1 0.2 0.3";
  ASSERT_EQ(run("boundary " + P + " --k 1 0.5 0 --out " + (dir / "b.csv").string()), 0);
  ASSERT_EQ(run("check " + P + " --states " + (dir / "b.csv").string() + " --out " + (dir / "c.csv").string()), 0);
  std::ifstream in(dir / "c.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "index,contour_condition,sv1,sv2,sv3,rank_defect");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string idx, cc;
    std::getline(ss, idx, ',');
    std::getline(ss, cc, ',');
    EXPECT_LT(std::abs(std::stod(cc)), 1e-7);
    ++rows;
  }
  EXPECT_GT(rows, 10u);
}

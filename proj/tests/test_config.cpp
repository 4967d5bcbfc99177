#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "etlqg/cli.hpp"
#include "etlqg/config.hpp"
#include "etlqg/errors.hpp"
#include "etlqg/model.hpp"

namespace fs = std::filesystem;

namespace {

std::string config_dir() { return ETLQG_CONFIG_DIR; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

// Minimal valid scalar config as a mutable json-ish string template.
std::string tiny_config(const std::string& patch_field = "",
                        const std::string& patch_value = "") {
  std::string base = R"({
  "horizon": 10,
  "info_pattern": "perfect",
  "system": {
    "A": {"rows": 1, "cols": 1, "data": [1.1]},
    "B": {"rows": 1, "cols": 1, "data": [1.0]},
    "W": {"rows": 1, "cols": 1, "data": [3.0]},
    "m0": [0.0],
    "M0": {"rows": 1, "cols": 1, "data": [1.0]}
  },
  "cost": {
    "Q": {"rows": 1, "cols": 1, "data": [1.0]},
    "R": {"rows": 1, "cols": 1, "data": [0.1]},
    "ell": 1.0,
    "lambda": 1.0
  },
  "trigger": {"type": "voi"},
  "runs": 4,
  "seed": 3,
  "out": "tiny"
})";
  if (!patch_field.empty()) {
    auto pos = base.find(patch_field);
    REQUIRE(pos != std::string::npos);
    base.replace(pos, patch_field.size(), patch_value);
  }
  return base;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("etlqg_test_" + std::to_string(
                                std::chrono::steady_clock::now()
                                    .time_since_epoch()
                                    .count()));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

int cli(std::initializer_list<std::string> args) {
  return etlqg::run_cli(std::vector<std::string>(args));
}

}  // namespace

TEST_CASE("bundled scalar config parses to the documented model") {
  auto cfg = etlqg::load_config(config_dir() + "/scalar.cfg");
  CHECK(cfg.sys.horizon == 100);
  CHECK(cfg.sys.pattern == etlqg::InfoPattern::kPerfect);
  CHECK(cfg.sys.A[0](0, 0) == 1.1);
  CHECK(cfg.sys.W[0](0, 0) == 3.0);
  CHECK(cfg.cost.R[0](0, 0) == 0.1);
  CHECK(cfg.cost.lambda == 1.0);
  CHECK(cfg.trigger == etlqg::TriggerKind::kVoi);
  CHECK(cfg.runs == 100);
  CHECK(etlqg::validate_system(cfg.sys, cfg.cost).empty());
}

TEST_CASE("bundled pendulum config parses to the documented model") {
  auto cfg = etlqg::load_config(config_dir() + "/pendulum.cfg");
  CHECK(cfg.sys.horizon == 500);
  CHECK(cfg.sys.pattern == etlqg::InfoPattern::kImperfect);
  CHECK(cfg.sys.A[0](3, 2) == 0.3122);
  CHECK(cfg.sys.C[0](1, 2) == 1.0);
  CHECK(cfg.sys.V[0](0, 0) == 0.0020);
  CHECK(cfg.cost.Q[0](2, 2) == 1000.0);
  CHECK(cfg.cost.lambda == 0.0067);
  CHECK(etlqg::validate_system(cfg.sys, cfg.cost).empty());
}

TEST_CASE("serialization round-trips") {
  for (const char* name : {"/scalar.cfg", "/pendulum.cfg"}) {
    auto cfg = etlqg::load_config(config_dir() + name);
    std::string text = etlqg::serialize_config(cfg);
    auto reparsed = etlqg::parse_config(text);
    CHECK(etlqg::serialize_config(reparsed) == text);
    CHECK(etlqg::config_hash(reparsed) == etlqg::config_hash(cfg));
  }
}

TEST_CASE("config hash ignores the output path only") {
  auto a = etlqg::parse_config(tiny_config());
  auto b = a;
  b.out = "elsewhere";
  CHECK(etlqg::config_hash(a) == etlqg::config_hash(b));
  b = a;
  b.seed = 4;
  CHECK(etlqg::config_hash(a) != etlqg::config_hash(b));
  b = a;
  b.cost.lambda = 2.0;
  CHECK(etlqg::config_hash(a) != etlqg::config_hash(b));
}

TEST_CASE("unknown fields are rejected by name") {
  auto expect_mentions = [](const std::string& text, const char* needle) {
    try {
      etlqg::parse_config(text);
      FAIL_CHECK("expected ConfigError for ", needle);
    } catch (const etlqg::ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_mentions(tiny_config("\"runs\": 4", "\"runz\": 4"), "runz");
  expect_mentions(tiny_config("\"m0\": [0.0]",
                              "\"m0\": [0.0], \"X\": 1"), "X");
  expect_mentions(tiny_config("\"lambda\": 1.0",
                              "\"lambda\": 1.0, \"mu\": 2"), "mu");
  expect_mentions(tiny_config("\"type\": \"voi\"",
                              "\"type\": \"voi\", \"cadence\": 3"), "cadence");
}

TEST_CASE("malformed configs fail with named fields") {
  CHECK_THROWS_AS(etlqg::parse_config("not json"), etlqg::ConfigError);
  CHECK_THROWS_AS(etlqg::parse_config("[1,2]"), etlqg::ConfigError);

  auto bad = [&](const std::string& field, const std::string& repl) {
    CHECK_THROWS_AS(etlqg::parse_config(tiny_config(field, repl)),
                    etlqg::ConfigError);
  };
  bad("\"horizon\": 10", "\"horizon\": -1");
  bad("\"horizon\": 10", "\"horizon\": 2.5");
  bad("\"info_pattern\": \"perfect\"", "\"info_pattern\": \"psychic\"");
  bad("\"runs\": 4", "\"runs\": 0");
  bad("\"seed\": 3", "\"seed\": -1");
  bad("\"lambda\": 1.0", "\"lambda\": -0.1");
  bad("\"type\": \"voi\"", "\"type\": \"sometimes\"");
  bad("\"type\": \"voi\"", "\"type\": \"voi\", \"period\": 2");
  // Measurement fields belong to the imperfect pattern.
  bad("\"m0\": [0.0]",
      "\"m0\": [0.0], \"C\": {\"rows\": 1, \"cols\": 1, \"data\": [1.0]}");

  // Shape mismatches across fields parse fine and surface as diagnostics.
  auto lopsided = etlqg::parse_config(tiny_config(
      "\"A\": {\"rows\": 1, \"cols\": 1, \"data\": [1.1]}",
      "\"A\": {\"rows\": 1, \"cols\": 2, \"data\": [1.1, 2.0]}"));
  CHECK_FALSE(etlqg::validate_system(lopsided.sys, lopsided.cost).empty());
  auto clash = etlqg::parse_config(
      tiny_config("\"m0\": [0.0]", "\"m0\": [0.0, 0.0]"));
  CHECK_FALSE(etlqg::validate_system(clash.sys, clash.cost).empty());
}

TEST_CASE("periodic trigger spec is validated") {
  auto good = etlqg::parse_config(tiny_config(
      "\"trigger\": {\"type\": \"voi\"}",
      "\"trigger\": {\"type\": \"periodic\", \"period\": 5, \"offset\": 3}"));
  CHECK(good.trigger == etlqg::TriggerKind::kPeriodic);
  CHECK(good.periodic.period == 5);
  CHECK(good.periodic.offset == 3);

  CHECK_THROWS_AS(
      etlqg::parse_config(tiny_config(
          "\"trigger\": {\"type\": \"voi\"}",
          "\"trigger\": {\"type\": \"periodic\", \"period\": 0}")),
      etlqg::ConfigError);
  CHECK_THROWS_AS(
      etlqg::parse_config(tiny_config(
          "\"trigger\": {\"type\": \"voi\"}",
          "\"trigger\": {\"type\": \"periodic\", \"period\": 3, "
          "\"offset\": 3}")),
      etlqg::ConfigError);
}

TEST_CASE("continuous system block discretizes on load") {
  std::string cont = R"({
  "horizon": 10,
  "info_pattern": "perfect",
  "system": {
    "continuous": {
      "Ac": {"rows": 1, "cols": 1, "data": [-2.0]},
      "Bc": {"rows": 1, "cols": 1, "data": [0.5]},
      "dt": 0.01
    },
    "W": {"rows": 1, "cols": 1, "data": [3.0]},
    "m0": [0.0],
    "M0": {"rows": 1, "cols": 1, "data": [1.0]}
  },
  "cost": {
    "Q": {"rows": 1, "cols": 1, "data": [1.0]},
    "R": {"rows": 1, "cols": 1, "data": [0.1]},
    "ell": 1.0,
    "lambda": 1.0
  },
  "trigger": {"type": "voi"},
  "runs": 4,
  "seed": 3,
  "out": "tiny"
})";
  auto cfg = etlqg::parse_config(cont);
  etlqg::ContinuousLinearSystem ref;
  ref.Ac = etlqg::Matrix::Constant(1, 1, -2.0);
  ref.Bc = etlqg::Matrix::Constant(1, 1, 0.5);
  ref.dt = 0.01;
  auto d = etlqg::zoh_discretize(ref);
  CHECK(cfg.sys.A[0](0, 0) == d.A(0, 0));
  CHECK(cfg.sys.B[0](0, 0) == d.B(0, 0));

  // Both a continuous block and explicit discrete matrices is ambiguous.
  auto both = cont;
  auto pos = both.find("\"W\":");
  both.insert(pos, "\"A\": {\"rows\": 1, \"cols\": 1, \"data\": [1.0]}, ");
  CHECK_THROWS_AS(etlqg::parse_config(both), etlqg::ConfigError);
}

TEST_CASE("command line validate") {
  TempDir tmp;
  CHECK(cli({"validate", "--config", config_dir() + "/scalar.cfg"}) == 0);
  CHECK(cli({"validate", "--config", config_dir() + "/pendulum.cfg"}) == 0);
  CHECK(cli({"validate", "--config",
             (tmp.path / "missing.cfg").string()}) == 2);

  spit(tmp.path / "bad.cfg", tiny_config("\"runs\": 4", "\"runs\": 0"));
  CHECK(cli({"validate", "--config", (tmp.path / "bad.cfg").string()}) == 2);

  spit(tmp.path / "r0.cfg",
       tiny_config("\"R\": {\"rows\": 1, \"cols\": 1, \"data\": [0.1]}",
                   "\"R\": {\"rows\": 1, \"cols\": 1, \"data\": [0.0]}"));
  CHECK(cli({"validate", "--config", (tmp.path / "r0.cfg").string()}) == 2);
}

TEST_CASE("command line simulate writes deterministic outputs") {
  TempDir tmp;
  spit(tmp.path / "run.cfg", tiny_config());
  std::string cfg = (tmp.path / "run.cfg").string();
  std::string out1 = (tmp.path / "first").string();
  std::string out2 = (tmp.path / "second").string();

  REQUIRE(cli({"simulate", "--config", cfg, "--out", out1}) == 0);
  REQUIRE(cli({"simulate", "--config", cfg, "--out", out2}) == 0);
  CHECK(fs::exists(out1 + "_trajectory.csv"));
  CHECK(fs::exists(out1 + "_summary.json"));
  CHECK(slurp(out1 + "_trajectory.csv") == slurp(out2 + "_trajectory.csv"));
  CHECK(slurp(out1 + "_summary.json") == slurp(out2 + "_summary.json"));

  // A different seed must change the trajectory.
  std::string out3 = (tmp.path / "third").string();
  REQUIRE(cli({"simulate", "--config", cfg, "--out", out3, "--seed", "99"}) ==
          0);
  CHECK(slurp(out1 + "_trajectory.csv") != slurp(out3 + "_trajectory.csv"));

  std::string summary = slurp(out1 + "_summary.json");
  CHECK(summary.find("\"policy\": \"voi\"") != std::string::npos);
  CHECK(summary.find("\"runs\": 4") != std::string::npos);
}

TEST_CASE("command line policy overrides") {
  TempDir tmp;
  spit(tmp.path / "run.cfg", tiny_config());
  std::string cfg = (tmp.path / "run.cfg").string();

  std::string out = (tmp.path / "per").string();
  REQUIRE(cli({"simulate", "--config", cfg, "--out", out, "--policy",
               "periodic:2:1"}) == 0);
  CHECK(slurp(out + "_summary.json").find("\"policy\": \"periodic\"") !=
        std::string::npos);

  REQUIRE(cli({"simulate", "--config", cfg, "--out",
               (tmp.path / "nev").string(), "--policy", "never"}) == 0);
  CHECK(slurp((tmp.path / "nev").string() + "_summary.json")
            .find("\"rate\"") != std::string::npos);

  CHECK(cli({"simulate", "--config", cfg, "--out",
             (tmp.path / "x").string(), "--policy", "warp"}) == 2);
  CHECK(cli({"simulate", "--config", cfg, "--out",
             (tmp.path / "y").string(), "--policy", "periodic:0"}) == 2);
}

TEST_CASE("command line sweep") {
  TempDir tmp;
  spit(tmp.path / "run.cfg", tiny_config());
  std::string cfg = (tmp.path / "run.cfg").string();
  std::string out = (tmp.path / "sweep").string();

  CHECK(cli({"sweep", "--config", cfg, "--out", out}) == 2);  // no prices

  REQUIRE(cli({"sweep", "--config", cfg, "--out", out, "--lambda",
               "0,0.5,0.5,2"}) == 0);
  std::string csv = slurp(out + "_tradeoff.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // metadata comment
  CHECK(line.rfind("# config_hash=", 0) == 0);
  std::getline(lines, line);
  CHECK(line == "lambda,rate_mean,rate_stderr,J_mean,J_stderr,n_runs");
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].rfind("0,1,0,", 0) == 0);  // lambda=0 saturates the channel
  CHECK(rows[1] == rows[2]);               // duplicated price, identical row
}

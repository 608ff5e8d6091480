#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "test_util.hpp"

#ifndef PENAL_LAB_BIN
#define PENAL_LAB_BIN "penal-lab"
#endif

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(PENAL_LAB_BIN) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string capture_cli(const std::string& args) {
  std::string cmd = std::string(PENAL_LAB_BIN) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[512];
  while (fgets(buf, sizeof(buf), p)) out += buf;
  pclose(p);
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  f << content;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("catalogue lists the formula ids") {
  auto out = capture_cli("catalogue");
  CHECK(out.find("ex4.1") != std::string::npos);
  CHECK(out.find("ex8.1") != std::string::npos);
  CHECK(out.find("ex9.9") == std::string::npos);
}

TEST_CASE("phi-solve on the box potential exits 0 with oracle match") {
  write_file("/tmp/penal_cfg_box.json", R"({
    "schema_version": 1,
    "pipeline": "phi-solve",
    "potential": {"density": {"kind": "ex4.1",
                  "params": {"gamma": 1.0, "a": -1.0, "b": 1.0}}},
    "solver": {"domain": [-10.0, 10.0], "n": 2001},
    "output_dir": "/tmp/penal_out_box"
  })");
  CHECK(run_cli("run /tmp/penal_cfg_box.json") == 0);
  auto csv = read_file("/tmp/penal_out_box/phi.csv");
  CHECK(csv.substr(0, 11) == "x,phi,dphi\n");
}

TEST_CASE("negative atom in a user potential exits 2 with a validation message") {
  write_file("/tmp/penal_cfg_bad.json", R"({
    "schema_version": 1,
    "pipeline": "phi-solve",
    "potential": {
      "density": {"kind": "piecewise", "params": {"x": [-1.0, 1.0], "v": [0.0, 0.0]}},
      "atoms": [[0.0, -1.0]],
      "tails": {"left_first_moment_finite": true, "right_first_moment_finite": true}
    },
    "output_dir": "/tmp/penal_out_bad"
  })");
  CHECK(run_cli("run /tmp/penal_cfg_bad.json") == 2);
  auto out = capture_cli("run /tmp/penal_cfg_bad.json");
  CHECK(out.find("VALIDATION") != std::string::npos);
}

TEST_CASE("unknown keys are rejected") {
  write_file("/tmp/penal_cfg_unknown.json", R"({
    "schema_version": 1,
    "pipeline": "phi-solve",
    "potenial": {}
  })");
  CHECK(run_cli("run /tmp/penal_cfg_unknown.json") == 2);
}

TEST_CASE("gamma0 pipeline reports the tan-equation root") {
  write_file("/tmp/penal_cfg_g0.json", R"({
    "schema_version": 1,
    "pipeline": "gamma0",
    "potential": {"density": {"kind": "ex8.1", "params": {"a": 1.0}}},
    "output_dir": "/tmp/penal_out_g0"
  })");
  CHECK(run_cli("run /tmp/penal_cfg_g0.json") == 0);
  auto out = capture_cli("run /tmp/penal_cfg_g0.json");
  CHECK(out.find("gamma0 = 0.5462468") != std::string::npos);
}

TEST_CASE("same config and seed give byte-identical outputs") {
  write_file("/tmp/penal_cfg_mc.json", R"({
    "schema_version": 1,
    "pipeline": "z-mc",
    "potential": {"density": {"kind": "ex4.1",
                  "params": {"gamma": 1.0, "a": -1.0, "b": 1.0}}},
    "solver": {"x": 0.0, "t": 1.0},
    "mc": {"n_paths": 2000, "seed": 77, "dt": 0.002},
    "output_dir": "/tmp/penal_out_mc"
  })");
  CHECK(run_cli("run /tmp/penal_cfg_mc.json") == 0);
  auto first = read_file("/tmp/penal_out_mc/z_mc.csv");
  CHECK(run_cli("run /tmp/penal_cfg_mc.json") == 0);
  auto second = read_file("/tmp/penal_out_mc/z_mc.csv");
  CHECK(first == second);
  CHECK(first.find("0.") != std::string::npos);
}

TEST_CASE("regime_override forces the fit model") {
  // a piecewise box with integrable tails, but the fit forced to small-phi
  // (constant model) over a short window still runs and reports
  write_file("/tmp/penal_cfg_ov.json", R"({
    "schema_version": 1,
    "pipeline": "rate-fit",
    "potential": {
      "density": {"kind": "ex4.1", "params": {"gamma": 1.0, "a": -1.0, "b": 1.0}}
    },
    "regime_override": "integrable",
    "solver": {"domain": [-45.0, 45.0], "dx": 0.1, "dt": 0.05, "t_max": 60.0,
               "window": [5.0, 60.0], "x": 0.0},
    "output_dir": "/tmp/penal_out_ov"
  })");
  CHECK(run_cli("run /tmp/penal_cfg_ov.json") == 0);
  auto out = capture_cli("run /tmp/penal_cfg_ov.json");
  CHECK(out.find("k = 0.5") != std::string::npos);

  write_file("/tmp/penal_cfg_ov2.json", R"({
    "schema_version": 1,
    "pipeline": "rate-fit",
    "potential": {
      "density": {"kind": "ex4.1", "params": {"gamma": 1.0, "a": -1.0, "b": 1.0}}
    },
    "regime_override": "no-such-regime",
    "output_dir": "/tmp/penal_out_ov"
  })");
  CHECK(run_cli("run /tmp/penal_cfg_ov2.json") == 2);
}

TEST_CASE("ld pipeline runs the eta sweep") {
  write_file("/tmp/penal_cfg_ld.json", R"({
    "schema_version": 1,
    "pipeline": "ld",
    "ld": {"alpha": 1.0, "lambda": 1.0, "etas": [0.1, 0.05, 0.01], "n": 4001},
    "output_dir": "/tmp/penal_out_ld"
  })");
  CHECK(run_cli("run /tmp/penal_cfg_ld.json") == 0);
}

TEST_CASE("missing config exits 2") {
  CHECK(run_cli("run /tmp/definitely_missing_config.json") == 2);
}

TEST_CASE("crosscheck-all on the box potential") {
  write_file("/tmp/penal_cfg_cc.json", R"({
    "schema_version": 1,
    "pipeline": "crosscheck-all",
    "potential": {"density": {"kind": "ex4.1",
                  "params": {"gamma": 1.0, "a": -1.0, "b": 1.0}}},
    "solver": {"t_max": 150.0},
    "mc": {"n_paths": 10000, "seed": 9, "dt": 0.002},
    "output_dir": "/tmp/penal_out_cc"
  })");
  auto out = capture_cli("run /tmp/penal_cfg_cc.json");
  CHECK(out.find("normalization") != std::string::npos);
  CHECK(out.find("oracle match") != std::string::npos);
  CHECK(out.find("Tauberian") != std::string::npos);
  CHECK(out.find("[FAIL]") == std::string::npos);
  CHECK(run_cli("run /tmp/penal_cfg_cc.json") == 0);
}

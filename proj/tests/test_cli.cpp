#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "modlab/cli/run.hpp"

namespace fs = std::filesystem;
using modlab::cli::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::initializer_list<std::string> args) {
  std::vector<std::string> store{"modlab"};
  store.insert(store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : store) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = modlab::cli::run(static_cast<int>(argv.size()), argv.data(), {out, err});
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string instance(const std::string& name) { return std::string(MODLAB_SOURCE_DIR) + "/instances/" + name; }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "modlab_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

json strip_timing(json j) {
  j.erase("timing");
  return j;
}

/// Rows of a sweep table as columns of numbers (header lines skipped).
std::vector<std::vector<double>> table(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("value", 0) == 0) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string cell;
    while (std::getline(ls, cell, '\t')) row.push_back(cell == "inf" ? HUGE_VAL : std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cli, ComputeIntervalInstanceGivesOne) {
  const auto r = run({"compute", "--instance", instance("interval.json"), "--task", "modulus", "--p", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["schema"], "modlab.report/1");
  EXPECT_NEAR(j["results"]["modulus"]["value"].get<double>(), 1.0, 1e-9);
  EXPECT_LE(j["results"]["modulus"]["certificate"]["primal_residual"].get<double>(), 1e-9);
  EXPECT_EQ(j["status"], "pass");
}

TEST(Cli, ValidateRejectsUnknownKey) {
  const auto r = run({"validate", instance("bad.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unknown key 'cells'"), std::string::npos);
  EXPECT_EQ(r.err.find('\n'), r.err.size() - 1);  // one-line diagnostic
  EXPECT_EQ(run({"validate", instance("interval.json")}).code, 0);
}

TEST(Cli, SchemaErrorsExitTwo) {
  const auto p = scratch("broken.json");
  write(p, "{\"schema\": \"modlab.instance/1\", \"space\": ");
  EXPECT_EQ(run({"validate", p.string()}).code, 2);
  write(p, R"({"schema": "modlab.instance/9", "space": {"kind": "grid1d", "a": 0, "b": 1, "n": 4},
              "family": {"kind": "dirac-set", "points": [0]}})");
  EXPECT_EQ(run({"validate", p.string()}).code, 2);
  write(p, R"({"schema": "modlab.instance/1", "space": {"kind": "grid1d", "a": 0, "b": 1, "n": 4},
              "family": {"kind": "dirac-set", "points": [0]}, "task": "am-upper"})");
  EXPECT_EQ(run({"validate", p.string()}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"compute"}).code, 2);
  EXPECT_EQ(run({"counterexample", "nosuch"}).code, 2);
  EXPECT_EQ(run({"counterexample", "nonouter", "--param", "grid"}).code, 2);
}

TEST(Cli, DualityOnRandomInstances) {
  const auto r = run({"duality", "--p", "1", "--random", "50", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("max relative gap"), std::string::npos);
  const auto j = json::parse(r.out);
  EXPECT_LE(j["results"]["max_relative_gap"].get<double>(), 1e-6);
  EXPECT_EQ(j["results"]["runs"].size(), 50u);
}

TEST(Cli, FailedCheckExitsFour) {
  EXPECT_EQ(run({"duality", "--random", "3", "--seed", "1", "--tol", "-1"}).code, 4);
  EXPECT_EQ(modlab::cli::exit_code_for(modlab::ErrorKind::NotMonotone), 4);
  EXPECT_EQ(modlab::cli::exit_code_for(modlab::ErrorKind::ConstructionInvariant), 4);
  EXPECT_EQ(modlab::cli::exit_code_for(modlab::ErrorKind::NumericFailure), 3);
  EXPECT_EQ(modlab::cli::exit_code_for(modlab::ErrorKind::RejectInput), 2);
}

TEST(Cli, ReportsAreDeterministic) {
  const auto a = run({"compute", "--instance", instance("radial.json")});
  const auto b = run({"compute", "--instance", instance("radial.json")});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(strip_timing(json::parse(a.out)).dump(), strip_timing(json::parse(b.out)).dump());
  const auto c = run({"counterexample", "construction", "--param", "M=5", "--param", "I=5", "--seed", "3"});
  const auto d = run({"counterexample", "construction", "--param", "M=5", "--param", "I=5", "--seed", "3"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(strip_timing(json::parse(c.out)).dump(), strip_timing(json::parse(d.out)).dump());
}

TEST(Cli, InfiniteValuesCarryCertificates) {
  const auto r = run({"compute", "--instance", instance("boundary_dirac.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = json::parse(r.out)["results"]["modulus"];
  EXPECT_EQ(m["value"], "inf");
  EXPECT_EQ(m["certificate"]["kind"], "farkas");
  EXPECT_TRUE(m["certificate"].contains("farkas_digest"));
  const auto all = run({"compute", "--instance", instance("boundary_dirac.json"), "--class", "all"});
  EXPECT_NEAR(json::parse(all.out)["results"]["modulus"]["value"].get<double>(), 0.5, 1e-12);
}

TEST(Cli, OutFileIsWrittenWhole) {
  const auto p = scratch("report.json");
  fs::remove(p);
  const auto r = run({"compute", "--instance", instance("interval.json"), "--out", p.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(json::parse(ss.str())["command"], "compute");
}

TEST(Cli, SweepOverKOnIntervalFamily) {
  const auto dir = scratch("plots");
  fs::remove_all(dir);
  const auto r = run({"sweep", "--instance", instance("interval.json"), "--param", "k", "--values", "1:10", "--jobs", "3",
                      "--plot-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = table(r.out);
  ASSERT_EQ(rows.size(), 10u);
  for (const auto& row : rows) EXPECT_NEAR(row[1], 1.0, 1e-6);
  for (const char* curve : {"modulus.dat", "content.dat", "gap.dat"}) EXPECT_TRUE(fs::exists(dir / curve));
}

TEST(Cli, SweepOverLipschitzConstantIsNonincreasing) {
  const auto p = scratch("lip.json");
  write(p, R"({"schema": "modlab.instance/1",
              "space": {"kind": "grid2d", "rect": [-1, 1, -1, 1], "nx": 12, "ny": 12},
              "family": {"kind": "radial", "k": 2, "directions": 8, "radii": 4}})");
  const auto r = run({"sweep", "--instance", p.string(), "--param", "L", "--values", "1,2,4,8,16,32,64,128,256,512,1024"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = table(r.out);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i][1], rows[i - 1][1] * (1.0 + 1e-9));
}

TEST(Cli, SweepOverGridOnRadialFamilyIsNonincreasing) {
  const auto p = scratch("radial4.json");
  write(p, R"({"schema": "modlab.instance/1",
              "space": {"kind": "grid2d", "rect": [-1, 1, -1, 1], "nx": 8, "ny": 8},
              "family": {"kind": "radial", "k": 4, "directions": 16, "radii": 8}})");
  const auto r = run({"sweep", "--instance", p.string(), "--param", "grid", "--values", "64,256,1024,4096"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = table(r.out);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i][1], rows[i - 1][1] * (1.0 + 1e-9));
}

TEST(Cli, SequenceTasks) {
  const auto r = run({"compute", "--instance", instance("interval_sequence.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out)["results"]["am_upper"];
  EXPECT_NEAR(j["estimate"].get<double>(), 1.0, 1e-9);
  EXPECT_EQ(run({"compute", "--instance", instance("interval_sequence.json"), "--task", "ct-limit"}).code, 0);
  EXPECT_EQ(run({"compute", "--instance", instance("interval_sequence.json"), "--task", "am-bracket"}).code, 0);
}

TEST(Cli, CounterexampleSuitesPass) {
  EXPECT_EQ(run({"counterexample", "nonouter", "--param", "grid=1024"}).code, 0);
  EXPECT_EQ(run({"counterexample", "interval", "--param", "grid=1024", "--param", "kmax=8"}).code, 0);
  EXPECT_EQ(run({"counterexample", "doubling"}).code, 0);
  EXPECT_EQ(run({"counterexample", "nonincr"}).code, 0);
}

TEST(Cli, BinaryEntryPoint) {
  const std::string cmd = std::string(MODLAB_CLI_PATH) + " validate " + instance("bad.json") + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  const std::string ok = std::string(MODLAB_CLI_PATH) + " compute --instance " + instance("interval.json") + " >/dev/null";
  EXPECT_EQ(WEXITSTATUS(std::system(ok.c_str())), 0);
}

#include "doctest.h"

#include "reach/io.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace reach;
using io::Json;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("reach_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the tool inside the scratch directory; returns its exit code.
int reach_cli(const std::string& args) {
  const std::string cmd = "cd '" + workdir().string() + "' && '" REACH_CLI "' " + args + " > out.txt 2> err.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& name) {
  std::ifstream in(workdir() / name, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json load(const std::string& name) { return Json::parse(slurp(name)); }

void write(const std::string& name, const std::string& text) { std::ofstream(workdir() / name) << text; }

void check_meta(const Json& j, const std::string& command) {
  REQUIRE(j.contains("meta"));
  CHECK(j["meta"]["tool"] == "reach");
  CHECK(j["meta"]["version"] == io::tool_version());
  CHECK(j["meta"]["command"] == command);
  CHECK(j["meta"].contains("master_seed"));
  CHECK(j["meta"]["config"].contains("robot"));
  CHECK(j["meta"]["config"].contains("grid"));
}

}  // namespace

TEST_CASE("gen-env and gen-task") {
  REQUIRE(reach_cli("gen-env --seed 7 --sites 20") == 0);
  const std::string first = slurp("environment.json");
  const Json env = load("environment.json");
  check_meta(env, "gen-env");
  CHECK(env["sites"].size() == 20);
  REQUIRE(reach_cli("gen-env --seed 7 --sites 20") == 0);
  CHECK(slurp("environment.json") == first);

  CHECK(reach_cli("gen-env --seed 7 --sites 0 -o zero.json") == 1);
  CHECK(reach_cli("gen-env --sites many") == 1);
  CHECK(reach_cli("") == 1);

  REQUIRE(reach_cli("gen-task --env environment.json --seed 3") == 0);
  check_meta(load("task.json"), "gen-task");
  REQUIRE(reach_cli("gen-task --env environment.json --seed 3 --kind multi_pose -o multi.json") == 0);
  CHECK(load("multi.json")["points"].size() >= 2);
  CHECK(reach_cli("gen-task --env environment.json --kind sideways -o x.json") == 1);

  // Round trip through the decoders.
  const Environment e = io::decode_environment(load("environment.json"));
  CHECK(e.sites.size() == 20);
  const TaskSpec t = io::decode_task(load("multi.json"));
  CHECK(t.kind == TaskKind::multi_pose);
}

TEST_CASE("plan-stance and plan-tension") {
  REQUIRE(reach_cli("gen-env --seed 7 --sites 10") == 0);
  REQUIRE(reach_cli("gen-task --env environment.json --seed 3 --screen boom") == 0);
  REQUIRE(reach_cli("plan-stance --env environment.json --task task.json --variant optimal") == 0);
  const Json stance = load("stance.json");
  check_meta(stance, "plan-stance");
  CHECK(stance["status"] == "optimal");
  CHECK(stance["assignment"].size() == 8);
  CHECK(stance["margin"].get<double>() > 0.0);
  CHECK(stance["support_points"].size() == 1);
  CHECK(stance["solver"].contains("nodes"));
  CHECK(stance["ellipsoid_margin"].is_number());

  REQUIRE(reach_cli("plan-stance --env environment.json --task task.json --variant naive -o naive.json") == 0);
  CHECK(load("naive.json")["variant"] == "naive");
  CHECK(reach_cli("plan-stance --env environment.json --task nowhere.json") == 1);
  CHECK(reach_cli("plan-stance --env environment.json --task task.json --variant best") == 1);

  REQUIRE(reach_cli("plan-tension --env environment.json --stance stance.json --task task.json") == 0);
  const Json tension = load("tension.json");
  check_meta(tension, "plan-tension");
  CHECK(tension["status"] == "optimal");
  CHECK(tension["residual"].get<double>() <= 1e-6);
  CHECK(tension["log_success"].get<double>() <= 0.0);
  CHECK(reach_cli("plan-tension --env environment.json --stance stance.json --task task.json --wrench 900 0 0 0 0 0 "
                  "-o big.json") == 2);
  CHECK(load("big.json")["status"] == "infeasible");
  CHECK(reach_cli("plan-tension --env environment.json --stance stance.json --task task.json --wrench 1 2 3") == 1);
}

TEST_CASE("infeasible stance exits with 2 and says why") {
  REQUIRE(reach_cli("gen-env --seed 7 --sites 10") == 0);
  REQUIRE(reach_cli("gen-task --env environment.json --seed 3 --screen boom") == 0);
  // Limbs that can never reach a site leave nothing to assign.
  write("short.json", R"({"robot": {"max_length": 0.6}})");
  CHECK(reach_cli("plan-stance --env environment.json --task task.json --config short.json -o none.json") == 2);
  const Json none = load("none.json");
  CHECK(none["assignment"].empty());
  CHECK(none.contains("reason"));
}

TEST_CASE("solver limit exits with 3") {
  REQUIRE(reach_cli("gen-env --seed 7 --sites 30 -o e30.json") == 0);
  REQUIRE(reach_cli("gen-task --env e30.json --seed 3 -o t30.json") == 0);
  write("one_node.json", R"({"solver": {"node_limit": 1}})");
  CHECK(reach_cli("plan-stance --env e30.json --task t30.json --morphology cable --config one_node.json -o s.json") == 3);
  CHECK(load("s.json")["status"] == "node_limit");
}

TEST_CASE("config files are strict") {
  REQUIRE(reach_cli("gen-env --seed 2") == 0);
  write("typo.json", R"({"enviroment": {"num_sites": 5}})");
  CHECK(reach_cli("gen-env --config typo.json") == 1);
  write("nested.json", R"({"environment": {"sites": 5}})");
  CHECK(reach_cli("gen-env --config nested.json") == 1);
  write("solver.json", R"({"solver": {"gap": 1}})");
  CHECK(reach_cli("gen-env --config solver.json") == 1);
  write("wrongtype.json", R"({"environment": {"num_sites": "five"}})");
  CHECK(reach_cli("gen-env --config wrongtype.json") == 1);
  write("good.json", R"({"environment": {"num_sites": 5}, "solver": {"node_limit": 100}})");
  REQUIRE(reach_cli("gen-env --config good.json") == 0);
  const Json env = load("environment.json");
  CHECK(env["sites"].size() == 5);
  CHECK(env["meta"]["config"]["solver"]["node_limit"] == 100);
  CHECK(env["meta"]["config"]["environment"]["num_sites"] == 5);
}

TEST_CASE("simulate writes a report that matches its CSV") {
  write("study.json.in", R"({"num_environments": 2, "trials_per_environment": 4,
                             "environment": {"num_sites": 10}, "kinds": ["single_pose"]})");
  REQUIRE(reach_cli("simulate --config study.json.in --out-dir run1") == 0);
  REQUIRE(reach_cli("simulate --config study.json.in --out-dir run2") == 0);
  CHECK(slurp("run1/trials.csv") == slurp("run2/trials.csv"));

  const Json study = load("run1/study.json");
  check_meta(study, "simulate");
  CHECK(study["meta"]["config"]["num_environments"] == 2);
  std::map<std::string, int> successes;
  std::istringstream csv(slurp("run1/trials.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "trial_id,env_seed,variant,morphology,kind,result,margin,max_tension");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells[5] == "success") ++successes[cells[2] + "/" + cells[3] + "/" + cells[4]];
  }
  CHECK(rows == static_cast<int>(study["failing_point"].size()));
  for (const auto& c : study["conditions"]) {
    const std::string key = c["variant"].get<std::string>() + "/" + c["morphology"].get<std::string>() + "/" +
                            c["kind"].get<std::string>();
    CAPTURE(key);
    CHECK(c["success"]["count"] == successes[key]);
  }
}

TEST_CASE("workspace") {
  REQUIRE(reach_cli("gen-env --seed 7 --sites 12") == 0);
  REQUIRE(reach_cli("gen-task --env environment.json --seed 3") == 0);
  CHECK(reach_cli("workspace --env environment.json --task task.json --resolution 0") == 1);
  REQUIRE(reach_cli("workspace --env environment.json --task task.json --resolution 8") == 0);
  const Json ws = load("workspace.json");
  check_meta(ws, "workspace");
  REQUIRE(ws["entries"].size() == 4);
  for (const auto& e : ws["entries"]) {
    const std::string geo = e["flags"]["geometry"], closure = e["flags"]["wrench_closure"];
    CHECK(geo.size() == 512);
    CHECK(closure.size() == 512);
    const double volume = ws["voxel_volume"].get<double>() * static_cast<double>(std::count(closure.begin(), closure.end(), '1'));
    CHECK(e["volumes"]["wrench_closure"].get<double>() == doctest::Approx(volume));
  }
}

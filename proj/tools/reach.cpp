// Command-line front end: generates environments and tasks, plans stances and tensions,
// runs the Monte-Carlo study and the workspace comparison.

#include "reach/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace reach;
using io::Json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInfeasible = 2, kSolverLimit = 3 };

// Everything a config file may set. Top-level keys are those of the study config plus
// "grid" and "solver"; anything else is rejected.
struct RunConfig {
  StudyConfig study;
  GridParams grid;
  double gap_tolerance = 1e-6;
  long node_limit = 1'000'000;
  TensionOptions tension;

  PlannerOptions planner() const {
    PlannerOptions p;
    p.milp.time_limit = study.stance_time_limit;
    p.milp.gap_tolerance = gap_tolerance;
    p.milp.node_limit = node_limit;
    return p;
  }

  Json encode() const {
    Json j = io::encode(study);
    j["grid"] = io::encode(grid);
    j["solver"] = Json{{"gap_tolerance", io::number(gap_tolerance)},
                       {"node_limit", node_limit},
                       {"tension_residual_tolerance", io::number(tension.residual_tolerance)},
                       {"tension_max_newton_steps", tension.max_newton_steps}};
    return j;
  }
};

RunConfig load_config(const std::string& path) {
  RunConfig c;
  if (path.empty()) return c;
  Json j = io::read_file(path);
  if (!j.is_object()) throw io::FormatError(path + ": expected an object");
  if (j.contains("grid")) {
    c.grid = io::decode_grid_params(j["grid"], c.grid);
    j.erase("grid");
  }
  if (j.contains("solver")) {
    const Json s = j["solver"];
    if (!s.is_object()) throw io::FormatError("solver: expected an object");
    for (const auto& item : s.items()) {
      const auto& key = item.key();
      if (key == "gap_tolerance") c.gap_tolerance = item.value().get<double>();
      else if (key == "node_limit") c.node_limit = item.value().get<long>();
      else if (key == "tension_residual_tolerance") c.tension.residual_tolerance = item.value().get<double>();
      else if (key == "tension_max_newton_steps") c.tension.max_newton_steps = item.value().get<int>();
      else throw io::FormatError("solver: unknown key '" + key + "'");
    }
    if (!(c.gap_tolerance >= 0.0) || c.node_limit < 1 || !(c.tension.residual_tolerance > 0.0) ||
        c.tension.max_newton_steps < 1) {
      throw io::FormatError("solver: tolerances must be positive and limits at least 1");
    }
    j.erase("solver");
  }
  c.study = io::decode_study_config(j, c.study);
  return c;
}

void emit(const std::string& path, const Json& j) {
  io::write_file(path, io::dump(j));
  std::cout << path << "\n";
}

Json with_meta(const std::string& command, std::uint64_t seed, const RunConfig& config, Json payload) {
  Json out{{"meta", io::metadata(command, seed, config.encode())}};
  for (auto& item : payload.items()) out[item.key()] = item.value();
  return out;
}

bool is_limit(opt::SolveStatus s) {
  return s == opt::SolveStatus::time_limit || s == opt::SolveStatus::node_limit ||
         s == opt::SolveStatus::iteration_limit;
}

struct Common {
  std::string config_path;
  std::string out;
};

// --- gen-env ---------------------------------------------------------------------------

struct GenEnv : Common {
  std::uint64_t seed = 1;
  std::optional<int> sites;
  std::optional<double> radius;

  int run() const {
    RunConfig c = load_config(config_path);
    if (sites) c.study.environment.num_sites = *sites;
    if (radius) c.study.environment.radius = *radius;
    c.study.master_seed = seed;
    const Environment env = generate_environment(seed, c.study.environment);
    emit(out, with_meta("gen-env", seed, c, io::encode(env)));
    return kOk;
  }
};

// --- gen-task --------------------------------------------------------------------------

struct GenTask : Common {
  std::string env_path;
  std::uint64_t seed = 1;
  std::string kind = "single_pose";
  std::string screen = "cable";

  int run() const {
    RunConfig c = load_config(config_path);
    c.study.master_seed = seed;
    const Environment env = io::decode_environment(io::read_file(env_path));
    const RobotModel robot = c.study.robot.make(morphology_from_string(screen));
    TaskSpec task;
    try {
      task = sample_task(seed, env, task_kind_from_string(kind), robot, c.study.task);
    } catch (const std::runtime_error& e) {
      std::cerr << "gen-task: " << e.what() << "\n";
      return kInfeasible;
    }
    emit(out, with_meta("gen-task", seed, c, io::encode(task)));
    return kOk;
  }
};

// --- plan-stance -----------------------------------------------------------------------

struct PlanStance : Common {
  std::string env_path, task_path;
  std::string variant = "optimal";
  std::string morphology = "boom";
  std::optional<double> time_limit;
  std::optional<double> orientation_error_deg;

  int run() const {
    RunConfig c = load_config(config_path);
    if (time_limit) c.study.stance_time_limit = *time_limit;
    if (orientation_error_deg) c.study.perturbation.orientation_error = *orientation_error_deg * M_PI / 180.0;
    c.study.validate();
    const Environment env = io::decode_environment(io::read_file(env_path));
    const TaskSpec task = io::decode_task(io::read_file(task_path));
    const Morphology m = morphology_from_string(morphology);
    const PlannerVariant v = planner_variant_from_string(variant);
    const RobotModel robot = c.study.robot.make(m);

    const bool reweight = v == PlannerVariant::optimal && c.study.plan_for_orientation_error;
    const TaskSpec planning = reweight ? apply_pose_uncertainty(task, c.study.perturbation.orientation_error) : task;
    const StanceProblem problem = make_stance_problem(robot, env.sites, planning);
    const StancePlan stance = plan(problem, v, c.planner());

    Json payload = io::encode(stance, problem, m, c.study.robot);
    if (stance.has_assignment()) {
      payload["nominal_margin"] = io::number(assignment_margin(make_stance_problem(robot, env.sites, task), stance.assignment));
      // Ellipsoid proxy from 64 fixed directions, logged next to the polytope margin.
      Rng rng(derive_seed(c.study.master_seed, streams::task, 0xe11));
      std::vector<Vec6> samples(64);
      for (auto& u : samples) {
        for (int a = 0; a < 6; ++a) u[a] = rng.normal();
      }
      StanceProblem ellipsoid = make_stance_problem(robot, env.sites, task);
      ellipsoid.polytope = ellipsoid_polytope(task.wrench_std.cwiseMax(c.study.task.weight_floor), samples);
      payload["ellipsoid_margin"] = io::number(assignment_margin(ellipsoid, stance.assignment));
    }
    payload["candidate_pairs_by_boom"] = [&] {
      std::vector<int> count(static_cast<std::size_t>(robot.num_booms()), 0);
      for (const auto& p : problem.pairs) ++count[static_cast<std::size_t>(p.boom)];
      return count;
    }();
    if (!stance.has_assignment()) {
      payload["reason"] = is_limit(stance.report.status) ? "no stance found before the solver limit"
                          : problem.pairs.empty()        ? "no (limb, site) pair survives cone and length pruning"
                                                         : "no stance achieves the task wrenches";
    }
    emit(out, with_meta("plan-stance", c.study.master_seed, c, payload));
    if (is_limit(stance.report.status)) return kSolverLimit;
    return stance.has_assignment() ? kOk : kInfeasible;
  }
};

// --- plan-tension ----------------------------------------------------------------------

struct PlanTension : Common {
  std::string env_path, stance_path, task_path;
  int point = 0;
  std::vector<double> wrench;

  int run() const {
    RunConfig c = load_config(config_path);
    const Environment env = io::decode_environment(io::read_file(env_path));
    const io::StanceFile stance = io::decode_stance(io::read_file(stance_path));
    TaskSpec task = io::decode_task(io::read_file(task_path));
    c.study.robot = stance.robot;
    const RobotModel robot = stance.robot.make(stance.morphology);
    if (stance.assignment.size() != static_cast<std::size_t>(robot.num_booms())) {
      throw io::FormatError("stance assignment does not match the robot");
    }
    if (point < 0 || point >= static_cast<int>(task.points.size())) throw io::FormatError("task point out of range");
    if (!wrench.empty()) {
      if (wrench.size() != 6) throw io::FormatError("--wrench takes six numbers");
      task.points[static_cast<std::size_t>(point)].wrench = Eigen::Map<const Vec6>(wrench.data());
    }
    const auto& tp = task.points[static_cast<std::size_t>(point)];
    std::vector<GraspSite> attached;
    for (int j : stance.assignment) {
      if (j >= static_cast<int>(env.sites.size())) throw io::FormatError("stance refers to a site the environment lacks");
      if (j >= 0) attached.push_back(env.sites[static_cast<std::size_t>(j)]);
    }
    const GeneratorSet gen = stance_generators(robot, env.sites, stance.assignment, tp.pose);
    const TensionProblem problem = make_tension_problem(gen, attached, tp.wrench - gravity_wrench(robot));
    const TensionPlan result = solve_tensions(problem, c.tension);

    Json payload = io::encode(result, problem);
    payload["point"] = point;
    payload["assignment"] = stance.assignment;
    emit(out, with_meta("plan-tension", c.study.master_seed, c, payload));
    if (result.status == TensionStatus::infeasible) return kInfeasible;
    return result.status == TensionStatus::optimal ? kOk : kSolverLimit;
  }
};

// --- simulate --------------------------------------------------------------------------

struct Simulate : Common {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> envs, trials, sites;
  std::optional<double> time_limit;

  int run() const {
    RunConfig c = load_config(config_path);
    if (seed) c.study.master_seed = *seed;
    if (envs) c.study.num_environments = *envs;
    if (trials) c.study.trials_per_environment = *trials;
    if (sites) c.study.environment.num_sites = *sites;
    if (time_limit) c.study.stance_time_limit = *time_limit;
    const StudyReport report = run_study(c.study);

    std::filesystem::create_directories(out_dir);
    const std::string csv_path = (std::filesystem::path(out_dir) / "trials.csv").string();
    io::write_file(csv_path, trials_csv(report));
    Json payload = io::encode(report);
    payload["trials_csv"] = "trials.csv";
    emit((std::filesystem::path(out_dir) / "study.json").string(), with_meta("simulate", c.study.master_seed, c, payload));
    std::cout << csv_path << "\n";

    std::printf("%-28s %6s %22s %10s %10s\n", "condition", "trials", "success [95% CI]", "geometric", "stochastic");
    for (const auto& s : report.conditions) {
      std::printf("%-28s %6d %8.3f [%.3f, %.3f] %10.3f %10.3f\n", s.condition.label().c_str(), s.trials,
                  s.success.rate, s.success.lower, s.success.upper, s.geometric.rate, s.stochastic.rate);
    }
    std::printf("wall time %.1f s\n", report.wall_time);
    return kOk;
  }
};

// --- workspace -------------------------------------------------------------------------

struct Workspace : Common {
  std::string env_path, task_path;
  std::optional<int> resolution;
  bool check_cones = false, orientation_sweep = false;
  std::optional<double> time_limit;

  int run() const {
    RunConfig c = load_config(config_path);
    if (resolution) c.grid.resolution = Eigen::Vector3i::Constant(*resolution);
    if (check_cones) c.grid.check_cones = true;
    if (orientation_sweep) c.grid.orientation_sweep = true;
    if (time_limit) c.study.stance_time_limit = *time_limit;
    c.grid.validate();
    const Environment env = io::decode_environment(io::read_file(env_path));
    const TaskSpec task = io::decode_task(io::read_file(task_path));
    std::vector<WorkspaceEntry> entries;
    try {
      entries = compare_morphologies(env, task, c.grid, c.planner(), c.study.robot);
    } catch (const std::runtime_error& e) {
      std::cerr << "workspace: " << e.what() << "\n";
      return kInfeasible;
    }
    Json payload{{"grid", io::encode(c.grid)},
                 {"voxel_volume", io::number(c.grid.voxel_volume())},
                 {"index_order", "x slowest, z fastest"},
                 {"entries", io::encode(entries)}};
    emit(out, with_meta("workspace", c.study.master_seed, c, payload));
    std::printf("%-8s %-8s %10s %10s %10s\n", "morph", "variant", "geometry", "static", "closure");
    for (const auto& e : entries) {
      std::printf("%-8s %-8s %10.3f %10.3f %10.3f\n", to_string(e.morphology).c_str(), to_string(e.variant).c_str(),
                  e.workspace.geometry_volume, e.workspace.static_volume, e.workspace.closure_volume);
    }
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stance, tension and workspace planning for limbed parallel robots"};
  app.set_version_flag("--version", std::string(io::tool_version()));
  app.require_subcommand(1);

  auto add_common = [](CLI::App* sub, Common& c, const std::string& default_out) {
    sub->add_option("--config", c.config_path, "JSON run config (unknown keys are rejected)")->check(CLI::ExistingFile);
    if (!default_out.empty()) sub->add_option("-o,--out", c.out, "Output file")->default_val(default_out);
  };

  GenEnv gen_env;
  auto* s_env = app.add_subcommand("gen-env", "Generate a random tube environment");
  add_common(s_env, gen_env, "environment.json");
  s_env->add_option("--seed", gen_env.seed, "Environment seed");
  s_env->add_option("--sites", gen_env.sites, "Number of grasp sites");
  s_env->add_option("--radius", gen_env.radius, "Tube radius, m");

  GenTask gen_task;
  auto* s_task = app.add_subcommand("gen-task", "Sample a task some stance can perform");
  add_common(s_task, gen_task, "task.json");
  s_task->add_option("--env", gen_task.env_path, "environment.json")->required()->check(CLI::ExistingFile);
  s_task->add_option("--seed", gen_task.seed, "Task seed");
  s_task->add_option("--kind", gen_task.kind, "single_pose or multi_pose");
  s_task->add_option("--screen", gen_task.screen, "Morphology the feasibility screen uses (cable or boom)");

  PlanStance plan_stance;
  auto* s_stance = app.add_subcommand("plan-stance", "Choose grasp sites for every limb");
  add_common(s_stance, plan_stance, "stance.json");
  s_stance->add_option("--env", plan_stance.env_path, "environment.json")->required()->check(CLI::ExistingFile);
  s_stance->add_option("--task", plan_stance.task_path, "task.json")->required()->check(CLI::ExistingFile);
  s_stance->add_option("--variant", plan_stance.variant, "optimal or naive");
  s_stance->add_option("--morphology", plan_stance.morphology, "boom or cable");
  s_stance->add_option("--time-limit", plan_stance.time_limit, "Stance solver time limit, s");
  s_stance->add_option("--orientation-error-deg", plan_stance.orientation_error_deg,
                       "Expected orientation error the optimal planner reweights torques for");

  PlanTension plan_tension;
  auto* s_tension = app.add_subcommand("plan-tension", "Limb tensions for one task point");
  add_common(s_tension, plan_tension, "tension.json");
  s_tension->add_option("--env", plan_tension.env_path, "environment.json")->required()->check(CLI::ExistingFile);
  s_tension->add_option("--stance", plan_tension.stance_path, "stance.json")->required()->check(CLI::ExistingFile);
  s_tension->add_option("--task", plan_tension.task_path, "task.json")->required()->check(CLI::ExistingFile);
  s_tension->add_option("--point", plan_tension.point, "Task point index");
  s_tension->add_option("--wrench", plan_tension.wrench, "External wrench fx fy fz tx ty tz (replaces the task's)")
      ->expected(6);

  Simulate simulate;
  auto* s_sim = app.add_subcommand("simulate", "Monte-Carlo study of both planners");
  add_common(s_sim, simulate, "");
  s_sim->add_option("--out-dir", simulate.out_dir, "Directory for study.json and trials.csv");
  s_sim->add_option("--seed", simulate.seed, "Master seed");
  s_sim->add_option("--envs", simulate.envs, "Number of environments");
  s_sim->add_option("--trials", simulate.trials, "Trials per environment and condition");
  s_sim->add_option("--sites", simulate.sites, "Grasp sites per environment");
  s_sim->add_option("--time-limit", simulate.time_limit, "Stance solver time limit, s");

  Workspace workspace;
  auto* s_ws = app.add_subcommand("workspace", "Workspace volumes of naive and optimal stances");
  add_common(s_ws, workspace, "workspace.json");
  s_ws->add_option("--env", workspace.env_path, "environment.json")->required()->check(CLI::ExistingFile);
  s_ws->add_option("--task", workspace.task_path, "task.json")->required()->check(CLI::ExistingFile);
  s_ws->add_option("--resolution", workspace.resolution, "Voxels per axis");
  s_ws->add_flag("--check-cones", workspace.check_cones, "Require limb directions inside their cones");
  s_ws->add_flag("--orientation-sweep", workspace.orientation_sweep, "Intersect over six body orientations");
  s_ws->add_option("--time-limit", workspace.time_limit, "Stance solver time limit, s");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*s_env) return gen_env.run();
    if (*s_task) return gen_task.run();
    if (*s_stance) return plan_stance.run();
    if (*s_tension) return plan_tension.run();
    if (*s_sim) return simulate.run();
    if (*s_ws) return workspace.run();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

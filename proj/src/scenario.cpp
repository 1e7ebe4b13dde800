#include "reach/scenario.hpp"

#include "reach/stance_planner.hpp"

#include <cmath>
#include <stdexcept>

namespace reach {

void EnvironmentParams::validate() const {
  if (num_sites < 1) throw std::invalid_argument("environment needs at least one site");
  if (!(radius > 0.0) || !(length > 0.0)) throw std::invalid_argument("tube radius and length must be positive");
  if (!(quality_min > 0.0 && quality_min <= quality_max && quality_max <= 1.0)) {
    throw std::invalid_argument("quality range must satisfy 0 < min <= max <= 1");
  }
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  if (!(pull_std_ratio > 0.0)) throw std::invalid_argument("pull std ratio must be positive");
}

void Environment::validate(const RobotModel& robot) const {
  if (sites.empty()) throw std::invalid_argument("environment has no sites");
  double reach = 0.0;
  for (const auto& a : robot.attachment_points) reach = std::max(reach, a.norm());
  for (const auto& s : sites) {
    s.validate();
    // Closest and farthest body positions on the axis segment bound the limb length.
    const double to_axis = std::hypot(s.position.y(), s.position.z());
    if (to_axis - reach > robot.max_length || to_axis + reach < robot.min_length) {
      throw std::invalid_argument("site " + std::to_string(s.id) + " is outside the boom length limits");
    }
  }
}

Environment generate_environment(std::uint64_t seed, const EnvironmentParams& params) {
  params.validate();
  Rng rng(seed);
  Environment env;
  env.seed = seed;
  env.radius = params.radius;
  env.length = params.length;
  for (int j = 0; j < params.num_sites; ++j) {
    GraspSite s;
    s.id = j;
    const double x = rng.uniform(-0.5 * params.length, 0.5 * params.length);
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    s.position = Vec3(x, params.radius * std::cos(phi), params.radius * std::sin(phi));
    s.quality = params.quality_min == params.quality_max ? params.quality_min
                                                         : rng.uniform(params.quality_min, params.quality_max);
    s.pull_mean = s.quality * params.t_max;
    s.pull_std = params.pull_std_ratio * s.pull_mean;
    env.sites.push_back(s);
  }
  return env;
}

TaskSpec draw_task(Rng& rng, TaskKind kind, const TaskParams& params) {
  TaskSpec task;
  task.kind = kind;
  task.wrench_std = params.wrench_std;
  task.polytope = TaskPolytope::axis_aligned(params.wrench_std, params.weight_floor);
  auto wrench = [&] {
    Wrench w;
    for (int a = 0; a < 6; ++a) w[a] = rng.normal(0.0, params.wrench_std[a]);
    return w;
  };
  auto near_axis = [&](double x_centre) {
    return Vec3(x_centre + rng.uniform(-params.pose_spread.x(), params.pose_spread.x()),
                rng.uniform(-params.pose_spread.y(), params.pose_spread.y()),
                rng.uniform(-params.pose_spread.z(), params.pose_spread.z()));
  };
  if (kind == TaskKind::single_pose) {
    const Vec3 p = near_axis(0.0);
    task.points.push_back({Pose(p, Eigen::Quaterniond::Identity()), wrench()});
    return task;
  }
  // Pre-grasp, post-grasp, pre-place, post-place along the segment from the grasp to the place pose.
  const Vec3 grasp = near_axis(-params.travel), place = near_axis(params.travel);
  const Eigen::Quaterniond q0 = Eigen::Quaterniond::Identity();
  const Eigen::Quaterniond q1(Eigen::AngleAxisd(rng.uniform(-params.max_yaw, params.max_yaw), Vec3::UnitZ()));
  for (int i = 0; i < 4; ++i) {
    const double f = i / 3.0;
    task.points.push_back({Pose(grasp + f * (place - grasp), q0.slerp(f, q1).normalized()), wrench()});
  }
  return task;
}

TaskSpec sample_task(std::uint64_t seed, const Environment& env, TaskKind kind, const RobotModel& robot,
                     const TaskParams& params) {
  std::vector<GraspSite> screen = env.sites;
  if (params.screen_full_quality) {
    for (auto& s : screen) s.quality = 1.0;
  }
  Rng rng(seed);
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    TaskSpec task = draw_task(rng, kind, params);
    const StanceProblem problem = make_stance_problem(robot, screen, task);
    if (problem.pairs.empty()) continue;
    if (plan(problem, PlannerVariant::naive).has_assignment()) return task;
  }
  throw std::runtime_error("no geometrically feasible task after " + std::to_string(params.max_retries) +
                           " draws");
}

std::vector<double> sample_pull_forces(std::uint64_t seed, const Environment& env, double noise_scale) {
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("pull noise scale must be non-negative");
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(env.sites.size());
  for (const auto& s : env.sites) {
    const double sd = noise_scale * s.pull_std;
    double v = s.pull_mean;
    if (sd > 0.0) {
      do {
        v = rng.normal(s.pull_mean, sd);
      } while (v < 0.0);
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace reach

#pragma once

#include "reach/geometry.hpp"
#include "reach/random.hpp"
#include "reach/task.hpp"

#include <cstdint>
#include <vector>

namespace reach {

/// Cylindrical tube along the x axis, centred on the origin.
struct EnvironmentParams {
  int num_sites = 20;
  double radius = 2.5;                   // m
  double length = 6.0;                   // m
  double quality_min = 0.5;
  double quality_max = 1.0;
  double t_max = 30.0;                   // N, pull mean is q * t_max
  double pull_std_ratio = 0.15;          // sigma = ratio * mean

  void validate() const;
};

struct Environment {
  std::uint64_t seed = 0;
  double radius = 2.5;
  double length = 6.0;
  std::vector<GraspSite> sites;

  /// Throws unless every site is within the robot's boom length limits of some point on the axis.
  void validate(const RobotModel& robot) const;
};

Environment generate_environment(std::uint64_t seed, const EnvironmentParams& params = {});

struct TaskParams {
  Vec6 wrench_std = (Vec6() << 2.0, 2.0, 6.0, 0.5, 0.5, 0.5).finished();
  double weight_floor = 1e-3;
  Vec3 pose_spread{0.5, 0.3, 0.3};  // half-widths of the box the single pose is drawn from, m
  double travel = 0.5;              // multi-pose: grasp and place poses sit near x = -travel and +travel
  double max_yaw = 0.25;            // multi-pose: place pose yaw drawn from [-max_yaw, max_yaw], rad
  int max_retries = 100;
  /// Screen against full-quality sites instead of the environment's own qualities. The default
  /// screen is the stricter of the two.
  bool screen_full_quality = false;
};

/// Draws a task whose nominal wrenches some stance of `robot` can achieve; throws after
/// max_retries infeasible draws.
TaskSpec sample_task(std::uint64_t seed, const Environment& env, TaskKind kind, const RobotModel& robot,
                     const TaskParams& params = {});

/// Draws the task without the feasibility screen.
TaskSpec draw_task(Rng& rng, TaskKind kind, const TaskParams& params);

/// One maximum pull force per site from Normal(mu, noise_scale * sigma), truncated at zero.
std::vector<double> sample_pull_forces(std::uint64_t seed, const Environment& env, double noise_scale = 1.0);

}  // namespace reach

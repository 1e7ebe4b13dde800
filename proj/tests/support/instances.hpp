#pragma once

// Random small stance problems shared by the unit and acceptance tests.

#include "reach/stance_planner.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace reach::testing {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  return Vec3(normal(rng), normal(rng), normal(rng)).normalized();
}

/// Unit vector within `angle` of `axis`.
inline Vec3 random_in_cone(std::mt19937_64& rng, const Vec3& axis, double angle) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double c = 1.0 - unit(rng) * (1.0 - std::cos(angle));
  const double phi = 2.0 * M_PI * unit(rng);
  const Vec3 u = axis.unitOrthogonal(), v = axis.cross(u);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  return c * axis + s * (std::cos(phi) * u + std::sin(phi) * v);
}

/// Cube robot restricted to `booms` randomly chosen corners.
inline RobotModel random_corners(std::mt19937_64& rng, int booms, Morphology morphology) {
  const RobotModel cube = RobotModel::cube(morphology);
  std::vector<int> corners{0, 1, 2, 3, 4, 5, 6, 7};
  std::shuffle(corners.begin(), corners.end(), rng);
  RobotModel robot = cube;
  robot.attachment_points.clear();
  robot.cone_axes.clear();
  for (int i = 0; i < booms; ++i) {
    robot.attachment_points.push_back(cube.attachment_points[corners[i]]);
    robot.cone_axes.push_back(cube.cone_axes[corners[i]]);
  }
  return robot;
}

/// Small single-pose problem whose desired wrench is produced by one random stance, so at
/// least one assignment is feasible.
inline StanceProblem random_small_problem(std::mt19937_64& rng, int booms, int num_sites, Morphology morphology) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const RobotModel robot = random_corners(rng, booms, morphology);
  std::vector<GraspSite> sites;
  for (int j = 0; j < num_sites; ++j) {
    const int i = j % booms;
    const Vec3 dir = random_in_cone(rng, robot.cone_axes[i], 0.9 * robot.cone_half_angle);
    GraspSite s;
    s.id = 100 + j;
    s.position = robot.attachment_points[i] + (1.0 + 2.0 * unit(rng)) * dir;
    s.quality = 0.5 + 0.5 * unit(rng);
    s.pull_mean = robot.t_max * s.quality;
    s.pull_std = 0.15 * s.pull_mean;
    sites.push_back(s);
  }
  Vec6 stds;
  stds << 1.0 + 2.0 * unit(rng), 1.0 + 2.0 * unit(rng), 1.0 + 4.0 * unit(rng), 0.1 + 0.4 * unit(rng),
      0.1 + 0.4 * unit(rng), 0.1 + 0.4 * unit(rng);
  StanceProblem seed = make_stance_problem(robot, sites, {Pose::identity()}, {Wrench::Zero()},
                                           TaskPolytope::axis_aligned(stds));
  // Desired wrench from a random stance over the feasible pairs.
  std::vector<int> assignment(booms, -1);
  std::vector<bool> used(num_sites, false);
  for (const auto& pair : seed.pairs) {
    if (assignment[pair.boom] < 0 && !used[pair.site] && unit(rng) < 0.7) {
      assignment[pair.boom] = pair.site;
      used[pair.site] = true;
    }
  }
  const GeneratorSet gen = stance_generators(robot, sites, assignment, Pose::identity());
  Wrench w = Wrench::Zero();
  for (int i = 0; i < gen.size(); ++i) w += (0.2 + 0.5 * unit(rng)) * gen.upper[i] * gen.generators[i];
  for (int a = 3; a < 6; ++a) w[a] += (2.0 * unit(rng) - 1.0) * 0.5 * gen.torque_box();
  seed.desired[0] = w;
  return seed;
}

}  // namespace reach::testing

#pragma once

#include "reach/scenario.hpp"
#include "reach/stance_planner.hpp"

#include <cstdint>
#include <vector>

namespace reach {

/// Axis-aligned box of body positions, split into resolution[a] voxels along axis a.
struct GridParams {
  Vec3 lower{-3.0, -2.5, -2.5};
  Vec3 upper{3.0, 2.5, 2.5};
  Eigen::Vector3i resolution{40, 40, 40};
  /// Cones only gate which sites can be grasped; once attached they are off by default.
  bool check_cones = false;
  /// Intersect the flags over six orientations (the given one composed with quarter turns).
  bool orientation_sweep = false;

  void validate() const;
  int num_voxels() const { return resolution.prod(); }
  double voxel_volume() const;
  /// Row-major: x slowest, z fastest.
  int index(int i, int j, int k) const { return (i * resolution.y() + j) * resolution.z() + k; }
  Vec3 center(int i, int j, int k) const;
};

/// Per-voxel flags for one fixed stance. wrench_closure implies static_equilibrium implies geometry.
struct WorkspaceGrid {
  GridParams grid;
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  std::vector<std::uint8_t> geometry;            // inside the tube, lengths (and cones, if checked) valid
  std::vector<std::uint8_t> static_equilibrium;  // gravity can be held
  std::vector<std::uint8_t> wrench_closure;      // gravity and the task wrench can be held
  std::vector<std::uint8_t> torque_rank;         // rank of the 3 x n torque block of the generators
  double geometry_volume = 0.0;                  // m^3
  double static_volume = 0.0;
  double closure_volume = 0.0;
};

WorkspaceGrid evaluate_workspace(const Environment& env, const std::vector<int>& assignment, const RobotModel& robot,
                                 const Wrench& task_wrench, const GridParams& grid,
                                 const Eigen::Quaterniond& orientation = Eigen::Quaterniond::Identity());

struct WorkspaceEntry {
  Morphology morphology = Morphology::cable;
  PlannerVariant variant = PlannerVariant::naive;
  std::vector<int> assignment;
  double margin = 0.0;
  WorkspaceGrid workspace;
};

/// Naive and optimal stances for the first point of `task`, for cables and booms.
std::vector<WorkspaceEntry> compare_morphologies(const Environment& env, const TaskSpec& task, const GridParams& grid,
                                                 const PlannerOptions& options = {}, const RobotParams& robot = {});

}  // namespace reach

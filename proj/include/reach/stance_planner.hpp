#pragma once

#include "reach/geometry.hpp"
#include "reach/opt/linear_program.hpp"
#include "reach/task.hpp"
#include "reach/wrench_space.hpp"

#include <string>
#include <vector>

namespace reach {

enum class PlannerVariant { optimal, naive };

std::string to_string(PlannerVariant variant);
PlannerVariant planner_variant_from_string(const std::string& name);

/// A (boom, site) pair that survives cone and length pruning at every task pose.
struct CandidatePair {
  int boom = 0;
  int site = 0;                    // index into StanceProblem::sites
  double cosine = 0.0;             // D . N averaged over the poses
  double bound = 0.0;              // t_max * q
  std::vector<Wrench> generators;  // unit tension wrench per pose
};

struct StanceProblem {
  RobotModel robot;
  std::vector<GraspSite> sites;
  std::vector<Pose> poses;
  std::vector<Wrench> desired;  // w_des per pose, gravity compensation included
  TaskPolytope polytope;
  std::vector<CandidatePair> pairs;

  int num_poses() const { return static_cast<int>(poses.size()); }
  void validate() const;
};

StanceProblem make_stance_problem(const RobotModel& robot, const std::vector<GraspSite>& sites,
                                  const std::vector<Pose>& poses, const std::vector<Wrench>& desired,
                                  const TaskPolytope& polytope);

/// Gravity-compensated problem for a task.
StanceProblem make_stance_problem(const RobotModel& robot, const std::vector<GraspSite>& sites,
                                  const TaskSpec& task);

/// Integer program plus the variable layout needed to read a solution back.
struct StanceProgram {
  opt::MixedIntegerProgram mip;
  std::vector<int> assign;   // A per candidate pair
  std::vector<int> tension;  // T per (pair, basis k, pose l), see tension_var()
  std::vector<int> slack;    // s_k (optimal only)
  int margin = -1;           // z (optimal only)
  int num_basis = 1;
  int num_poses = 1;

  int tension_var(int pair, int k, int pose) const { return tension[(pair * num_basis + k) * num_poses + pose]; }
};

/// max z  s.t.  sigma_k z <= s_k,  sum_p T_pkl g_pl + [0; tau_kl] - s_k B_k = w_des_l,
/// 0 <= T_pkl <= u_p A_p,  |tau_kl| <= m_max sum A,  matching rows on booms and sites.
StanceProgram build_optimal(const StanceProblem& problem);

/// max sum_p cos_p A_p  s.t. the nominal wrench is achieved at every pose, same bounds and matching.
StanceProgram build_naive(const StanceProblem& problem);

struct StancePlan {
  PlannerVariant variant = PlannerVariant::optimal;
  opt::SolveReport report;
  std::vector<int> assignment;  // per boom: site index or -1
  double margin = 0.0;          // optimal: z from the program; naive: re-scored inscribed margin
  double objective = 0.0;       // program objective
  /// Certificate tensions [pose][basis k][boom]; the naive plan has a single k.
  std::vector<std::vector<std::vector<double>>> tensions;

  bool has_assignment() const { return report.has_solution(); }
  int attached() const;
};

struct PlannerOptions {
  opt::MilpOptions milp;
  /// Seed the optimal search with the naive stance, which is always feasible for it.
  bool naive_warm_start = true;
};

StancePlan plan(const StanceProblem& problem, PlannerVariant variant, const PlannerOptions& options = {});

/// True when 0 is a convex combination of the basis directions; then the optimal program is
/// feasible exactly when the naive one is.
bool origin_in_hull(const TaskPolytope& polytope);

/// Generators of a fixed assignment at `pose`. Pairs that violate the length limits are still included.
GeneratorSet stance_generators(const RobotModel& robot, const std::vector<GraspSite>& sites,
                               const std::vector<int>& assignment, const Pose& pose);

/// min over poses of inscribed_margin for a fixed assignment; -inf if any pose is unachievable.
double assignment_margin(const StanceProblem& problem, const std::vector<int>& assignment);

/// Task with torque weights rescaled by lambda for an expected orientation error (rad).
TaskSpec apply_pose_uncertainty(const TaskSpec& task, double orientation_error);

}  // namespace reach

#pragma once

#include "reach/scenario.hpp"
#include "reach/stance_planner.hpp"
#include "reach/tension_planner.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace reach {

/// Off-nominal execution. Each task point gets its own pose and wrench perturbation.
struct PerturbationParams {
  double wrench_scale = 1.0;                // wrench noise std per axis = scale * task wrench_std
  double orientation_error = 5.0 * M_PI / 180.0;  // rad, angle ~ |Normal(0, this)| about a uniform axis
  double position_error = 0.05;             // m, std per axis
  double pull_noise_scale = 1.0;            // multiplies each site's pull std

  void validate() const;
};

enum class TrialResult { success, geometric_failure, stochastic_failure };
std::string to_string(TrialResult result);

struct TrialOutcome {
  TrialResult result = TrialResult::success;
  int failing_point = -1;  // first task point that failed
  double max_tension = 0.0;  // N, largest commanded tension over the points reached
  std::vector<Eigen::VectorXd> tensions;  // per task point, attached limbs in boom order
};

/// Executes one perturbed copy of `nominal` with a fixed stance: a geometric check of every
/// point, then tensions per point against one draw of pull forces.
TrialOutcome run_trial(const Environment& env, const RobotModel& robot, const std::vector<int>& assignment,
                       const TaskSpec& nominal, std::uint64_t trial_seed, const PerturbationParams& perturbation);

/// Perturbed copy of a task; the polytope is kept.
TaskSpec perturb_task(const TaskSpec& task, Rng& rng, const PerturbationParams& perturbation);

struct Condition {
  PlannerVariant variant = PlannerVariant::optimal;
  Morphology morphology = Morphology::boom;
  TaskKind kind = TaskKind::single_pose;

  std::string label() const;
  bool operator<(const Condition& other) const;
};

struct StudyConfig {
  std::uint64_t master_seed = 1;
  int num_environments = 10;
  int trials_per_environment = 100;
  RobotParams robot;
  EnvironmentParams environment;
  TaskParams task;
  PerturbationParams perturbation;
  std::vector<PlannerVariant> variants{PlannerVariant::optimal, PlannerVariant::naive};
  std::vector<Morphology> morphologies{Morphology::cable, Morphology::boom};
  std::vector<TaskKind> kinds{TaskKind::single_pose, TaskKind::multi_pose};
  /// Optimal plans are made for the torque-reweighted polytope of this orientation error.
  bool plan_for_orientation_error = true;
  double stance_time_limit = 20.0;  // s per stance solve; the incumbent is used when it runs out

  void validate() const;
};

struct TrialRecord {
  int trial_id = 0;
  int environment = 0;
  std::uint64_t env_seed = 0;
  Condition condition;
  TrialResult result = TrialResult::success;
  int failing_point = -1;
  double margin = 0.0;
  double max_tension = 0.0;
};

struct Proportion {
  int count = 0;
  int total = 0;
  double rate = 0.0;
  double lower = 0.0;  // 95% Wilson interval
  double upper = 0.0;
};

/// Wilson score interval at 95%.
Proportion wilson(int count, int total);

struct ConditionStats {
  Condition condition;
  int trials = 0;
  Proportion success, geometric, stochastic;
  std::vector<int> failures_by_point;  // index = task point
  std::vector<int> excluded_environments;  // no task or no stance
  double stance_time = 0.0;  // s, summed over environments
};

struct EnvironmentStats {
  int environment = 0;
  std::uint64_t seed = 0;
  std::map<Condition, std::string> status;  // "ok", "task_infeasible", "planner_infeasible"
  std::map<Condition, double> margin;
  std::map<Condition, int> successes;
};

struct StudyReport {
  StudyConfig config;
  std::vector<ConditionStats> conditions;
  std::vector<EnvironmentStats> environments;
  std::vector<TrialRecord> trials;
  double wall_time = 0.0;  // s
};

StudyReport run_study(const StudyConfig& config);

/// One row per trial: trial_id,env_seed,variant,morphology,kind,result,margin,max_tension
std::string trials_csv(const StudyReport& report);

}  // namespace reach

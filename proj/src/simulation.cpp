#include "reach/simulation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace reach {

void PerturbationParams::validate() const {
  if (!(wrench_scale >= 0.0) || !(orientation_error >= 0.0) || !(position_error >= 0.0) ||
      !(pull_noise_scale >= 0.0)) {
    throw std::invalid_argument("perturbation magnitudes must be non-negative");
  }
}

std::string to_string(TrialResult result) {
  switch (result) {
    case TrialResult::success: return "success";
    case TrialResult::geometric_failure: return "geometric_failure";
    case TrialResult::stochastic_failure: return "stochastic_failure";
  }
  return "unknown";
}

TaskSpec perturb_task(const TaskSpec& task, Rng& rng, const PerturbationParams& perturbation) {
  TaskSpec out = task;
  for (auto& point : out.points) {
    Vec3 p = point.pose.position;
    for (int a = 0; a < 3; ++a) p[a] += perturbation.position_error * rng.normal();
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    while (axis.norm() < 1e-12) axis = Vec3(rng.normal(), rng.normal(), rng.normal());
    const double angle = std::abs(perturbation.orientation_error * rng.normal());
    const Eigen::Quaterniond q =
        (point.pose.orientation * Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized()))).normalized();
    point.pose = Pose(p, q);
    for (int a = 0; a < 6; ++a) point.wrench[a] += perturbation.wrench_scale * task.wrench_std[a] * rng.normal();
  }
  return out;
}

TrialOutcome run_trial(const Environment& env, const RobotModel& robot, const std::vector<int>& assignment,
                       const TaskSpec& nominal, std::uint64_t trial_seed, const PerturbationParams& perturbation) {
  Rng rng(derive_seed(trial_seed, streams::perturbation));
  const TaskSpec task = perturb_task(nominal, rng, perturbation);
  const std::vector<Wrench> desired = desired_wrenches(task, robot);
  std::vector<GraspSite> attached;
  std::vector<int> attached_site;
  for (int j : assignment) {
    if (j < 0) continue;
    attached.push_back(env.sites.at(j));
    attached_site.push_back(j);
  }

  TrialOutcome out;
  const auto num_points = static_cast<int>(task.points.size());
  std::vector<GeneratorSet> gens;
  for (int l = 0; l < num_points; ++l) {
    gens.push_back(stance_generators(robot, env.sites, assignment, task.points[l].pose));
    if (!achievable(gens.back(), desired[l])) {
      out.result = TrialResult::geometric_failure;
      out.failing_point = l;
      return out;
    }
  }

  // One pull-force draw per site, held for the whole trial.
  const std::vector<double> pulls = sample_pull_forces(derive_seed(trial_seed, streams::pull), env,
                                                       perturbation.pull_noise_scale);
  for (int l = 0; l < num_points; ++l) {
    const TensionPlan plan = solve_tensions(make_tension_problem(gens[l], attached, desired[l]));
    if (plan.status == TensionStatus::infeasible) {
      // Only on the boundary, where the membership test and the tension solve round differently.
      out.result = TrialResult::geometric_failure;
      out.failing_point = l;
      out.tensions.clear();
      out.max_tension = 0.0;
      return out;
    }
    out.tensions.push_back(plan.tensions);
    for (Eigen::Index i = 0; i < plan.tensions.size(); ++i) {
      out.max_tension = std::max(out.max_tension, plan.tensions[i]);
    }
    for (Eigen::Index i = 0; i < plan.tensions.size(); ++i) {
      if (plan.tensions[i] > pulls[attached_site[i]]) {
        out.result = TrialResult::stochastic_failure;
        out.failing_point = l;
        return out;
      }
    }
  }
  return out;
}

std::string Condition::label() const {
  return to_string(variant) + "/" + to_string(morphology) + "/" + to_string(kind);
}

bool Condition::operator<(const Condition& other) const {
  return std::tie(kind, morphology, variant) < std::tie(other.kind, other.morphology, other.variant);
}

void StudyConfig::validate() const {
  if (num_environments < 1 || trials_per_environment < 1) {
    throw std::invalid_argument("study needs at least one environment and one trial");
  }
  if (variants.empty() || morphologies.empty() || kinds.empty()) {
    throw std::invalid_argument("study needs at least one planner, morphology and task kind");
  }
  if (!(stance_time_limit > 0.0)) throw std::invalid_argument("stance time limit must be positive");
  robot.make(Morphology::boom);  // throws on invalid parameters
  environment.validate();
  perturbation.validate();
}

Proportion wilson(int count, int total) {
  Proportion p;
  p.count = count;
  p.total = total;
  if (total <= 0) return p;
  constexpr double z = 1.959963984540054;
  const double n = total, phat = count / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (phat + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
  p.rate = phat;
  p.lower = std::max(0.0, centre - half);
  p.upper = std::min(1.0, centre + half);
  return p;
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  StudyReport report;
  report.config = config;

  std::vector<Condition> conditions;
  for (auto kind : config.kinds) {
    for (auto m : config.morphologies) {
      for (auto v : config.variants) conditions.push_back({v, m, kind});
    }
  }
  std::map<Condition, ConditionStats> stats;
  for (const auto& c : conditions) stats[c].condition = c;

  // Tasks are screened with the most restrictive morphology so every condition sees the same task.
  bool has_cable = false;
  for (auto m : config.morphologies) has_cable = has_cable || m == Morphology::cable;
  const RobotModel screen_robot = config.robot.make(has_cable ? Morphology::cable : config.morphologies.front());

  int trial_id = 0;
  for (int e = 0; e < config.num_environments; ++e) {
    EnvironmentStats es;
    es.environment = e;
    es.seed = derive_seed(config.master_seed, streams::environment, static_cast<std::uint64_t>(e));
    const Environment env = generate_environment(es.seed, config.environment);

    for (std::size_t ki = 0; ki < config.kinds.size(); ++ki) {
      const TaskKind kind = config.kinds[ki];
      TaskSpec task;
      try {
        task = sample_task(derive_seed(config.master_seed, streams::task, 2 * static_cast<std::uint64_t>(e) + (kind == TaskKind::multi_pose)),
                           env, kind, screen_robot, config.task);
      } catch (const std::runtime_error&) {
        for (const auto& c : conditions) {
          if (c.kind != kind) continue;
          es.status[c] = "task_infeasible";
          stats[c].excluded_environments.push_back(e);
        }
        continue;
      }
      const TaskSpec planning_task =
          config.plan_for_orientation_error ? apply_pose_uncertainty(task, config.perturbation.orientation_error) : task;

      for (const auto& c : conditions) {
        if (c.kind != kind) continue;
        const RobotModel robot = config.robot.make(c.morphology);
        PlannerOptions options;
        options.milp.time_limit = config.stance_time_limit;
        const StanceProblem problem = make_stance_problem(
            robot, env.sites, c.variant == PlannerVariant::optimal ? planning_task : task);
        const StancePlan stance = plan(problem, c.variant, options);
        stats[c].stance_time += stance.report.wall_time;
        if (!stance.has_assignment()) {
          es.status[c] = "planner_infeasible";
          stats[c].excluded_environments.push_back(e);
          continue;
        }
        es.status[c] = "ok";
        // Both planners are scored on the nominal polytope.
        const double margin = assignment_margin(make_stance_problem(robot, env.sites, task), stance.assignment);
        es.margin[c] = margin;
        int successes = 0;
        for (int t = 0; t < config.trials_per_environment; ++t) {
          const std::uint64_t trial_seed = derive_seed(
              config.master_seed, streams::perturbation,
              static_cast<std::uint64_t>(e) * static_cast<std::uint64_t>(config.trials_per_environment) +
                  static_cast<std::uint64_t>(t));
          const TrialOutcome outcome = run_trial(env, robot, stance.assignment, task, trial_seed, config.perturbation);
          TrialRecord rec;
          rec.trial_id = trial_id++;
          rec.environment = e;
          rec.env_seed = es.seed;
          rec.condition = c;
          rec.result = outcome.result;
          rec.failing_point = outcome.failing_point;
          rec.margin = margin;
          rec.max_tension = outcome.max_tension;
          report.trials.push_back(rec);
          successes += outcome.result == TrialResult::success;

          auto& s = stats[c];
          ++s.trials;
          if (outcome.failing_point >= 0) {
            if (static_cast<int>(s.failures_by_point.size()) <= outcome.failing_point) {
              s.failures_by_point.resize(static_cast<std::size_t>(outcome.failing_point) + 1, 0);
            }
            ++s.failures_by_point[static_cast<std::size_t>(outcome.failing_point)];
          }
        }
        es.successes[c] = successes;
      }
    }
    report.environments.push_back(es);
  }

  for (const auto& c : conditions) {
    auto& s = stats[c];
    int ok = 0, geo = 0, sto = 0;
    for (const auto& r : report.trials) {
      if (r.condition.variant != c.variant || r.condition.morphology != c.morphology || r.condition.kind != c.kind) {
        continue;
      }
      ok += r.result == TrialResult::success;
      geo += r.result == TrialResult::geometric_failure;
      sto += r.result == TrialResult::stochastic_failure;
    }
    s.success = wilson(ok, s.trials);
    s.geometric = wilson(geo, s.trials);
    s.stochastic = wilson(sto, s.trials);
    report.conditions.push_back(s);
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string trials_csv(const StudyReport& report) {
  std::ostringstream out;
  out << "trial_id,env_seed,variant,morphology,kind,result,margin,max_tension\n";
  char number[64];
  for (const auto& r : report.trials) {
    out << r.trial_id << ',' << r.env_seed << ',' << to_string(r.condition.variant) << ','
        << to_string(r.condition.morphology) << ',' << to_string(r.condition.kind) << ',' << to_string(r.result) << ',';
    std::snprintf(number, sizeof number, "%.12g", r.margin);
    out << number << ',';
    // No tensions are commanded after a geometric failure.
    if (r.result != TrialResult::geometric_failure) {
      std::snprintf(number, sizeof number, "%.12g", r.max_tension);
      out << number;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace reach

#include "reach/stance_planner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace reach {

std::string to_string(PlannerVariant variant) { return variant == PlannerVariant::optimal ? "optimal" : "naive"; }

PlannerVariant planner_variant_from_string(const std::string& name) {
  if (name == "optimal") return PlannerVariant::optimal;
  if (name == "naive") return PlannerVariant::naive;
  throw std::invalid_argument("unknown planner variant '" + name + "' (expected optimal or naive)");
}

void StanceProblem::validate() const {
  robot.validate();
  for (const auto& s : sites) s.validate();
  if (poses.empty()) throw std::invalid_argument("stance problem needs at least one pose");
  if (poses.size() != desired.size()) throw std::invalid_argument("stance problem: one desired wrench per pose");
  for (const auto& w : desired) {
    if (!w.allFinite()) throw std::invalid_argument("desired wrench must be finite");
  }
  polytope.validate();
}

StanceProblem make_stance_problem(const RobotModel& robot, const std::vector<GraspSite>& sites,
                                  const std::vector<Pose>& poses, const std::vector<Wrench>& desired,
                                  const TaskPolytope& polytope) {
  StanceProblem problem{robot, sites, poses, desired, polytope, {}};
  problem.validate();
  for (int i = 0; i < robot.num_booms(); ++i) {
    for (int j = 0; j < static_cast<int>(sites.size()); ++j) {
      CandidatePair pair{i, j, 0.0, robot.t_max * sites[j].quality, {}};
      bool feasible = true;
      for (const Pose& pose : poses) {
        const Vec3 anchor = transform_point(pose, robot.attachment_points[i]);
        if ((sites[j].position - anchor).norm() <= kDegenerateDistance) {
          feasible = false;
          break;
        }
        const ConeCheck cone = cone_feasible(pose, i, sites[j].position, robot);
        const WrenchGenerator g = boom_generator(pose, robot.attachment_points[i], sites[j].position);
        if (!cone.feasible || g.length < robot.min_length || g.length > robot.max_length) {
          feasible = false;
          break;
        }
        pair.cosine += cone.cosine / static_cast<double>(poses.size());
        pair.generators.push_back(g.wrench);
      }
      if (feasible) problem.pairs.push_back(std::move(pair));
    }
  }
  return problem;
}

StanceProblem make_stance_problem(const RobotModel& robot, const std::vector<GraspSite>& sites,
                                  const TaskSpec& task) {
  task.validate();
  return make_stance_problem(robot, sites, task_poses(task), desired_wrenches(task, robot), task.polytope);
}

namespace {

using Terms = std::vector<std::pair<int, double>>;

// Assignment binaries, matching rows and (for booms) the attached-count variable.
int add_assignment(opt::LinearProgramBuilder& b, const StanceProblem& problem, StanceProgram& program,
                   bool cosine_objective) {
  for (const auto& pair : problem.pairs) {
    program.assign.push_back(b.add_variable(0.0, 1.0, cosine_objective ? pair.cosine : 0.0));
    program.mip.integer_indices.push_back(program.assign.back());
  }
  Terms terms;
  for (int i = 0; i < problem.robot.num_booms(); ++i) {
    terms.clear();
    for (std::size_t p = 0; p < problem.pairs.size(); ++p) {
      if (problem.pairs[p].boom == i) terms.emplace_back(program.assign[p], 1.0);
    }
    if (terms.size() > 1) b.add_ub_row(terms, 1.0);
  }
  for (int j = 0; j < static_cast<int>(problem.sites.size()); ++j) {
    terms.clear();
    for (std::size_t p = 0; p < problem.pairs.size(); ++p) {
      if (problem.pairs[p].site == j) terms.emplace_back(program.assign[p], 1.0);
    }
    if (terms.size() > 1) b.add_ub_row(terms, 1.0);
  }
  if (problem.robot.shoulder_moment <= 0.0) return -1;
  const int count = b.add_variable(0.0, problem.robot.num_booms());
  terms.assign({{count, 1.0}});
  for (int a : program.assign) terms.emplace_back(a, -1.0);
  b.add_eq_row(terms, 0.0);
  return count;
}

// Tension copy for one (basis k, pose l): T_p in [0, u_p] with T_p <= u_p A_p, plus the torque slack.
// Adds the six wrench rows with `slack` (or -1) entering as -s * direction.
void add_wrench_block(opt::LinearProgramBuilder& b, const StanceProblem& problem, StanceProgram& program,
                      int count, int pose, int slack, const Wrench& direction) {
  const auto& pairs = problem.pairs;
  std::vector<int> t(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    t[p] = b.add_variable(0.0, pairs[p].bound);
    b.add_ub_row({{t[p], 1.0}, {program.assign[p], -pairs[p].bound}}, 0.0);
  }
  int tau = -1;
  if (count >= 0) {
    const double m = problem.robot.shoulder_moment;
    const double box = m * problem.robot.num_booms();
    for (int a = 0; a < 3; ++a) {
      const int v = b.add_variable(-box, box);
      if (a == 0) tau = v;
      b.add_ub_row({{v, 1.0}, {count, -m}}, 0.0);
      b.add_ub_row({{v, -1.0}, {count, -m}}, 0.0);
    }
  }
  Terms terms;
  for (int r = 0; r < 6; ++r) {
    terms.clear();
    for (std::size_t p = 0; p < pairs.size(); ++p) terms.emplace_back(t[p], pairs[p].generators[pose][r]);
    if (tau >= 0 && r >= 3) terms.emplace_back(tau + r - 3, 1.0);
    if (slack >= 0) terms.emplace_back(slack, -direction[r]);
    b.add_eq_row(terms, problem.desired[pose][r]);
  }
  program.tension.insert(program.tension.end(), t.begin(), t.end());
}

// Tension indices are pushed in (k, l) blocks; reorder them to the (pair, k, l) layout.
void reorder_tensions(StanceProgram& program, int num_pairs) {
  const std::vector<int> blocks = program.tension;
  const int K = program.num_basis, L = program.num_poses;
  program.tension.assign(blocks.size(), -1);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      for (int p = 0; p < num_pairs; ++p) {
        program.tension[(p * K + k) * L + l] = blocks[(k * L + l) * num_pairs + p];
      }
    }
  }
}

}  // namespace

StanceProgram build_optimal(const StanceProblem& problem) {
  problem.validate();
  StanceProgram program;
  program.num_basis = problem.polytope.size();
  program.num_poses = problem.num_poses();
  opt::LinearProgramBuilder b;
  const int count = add_assignment(b, problem, program, false);
  program.margin = b.add_variable(0.0, opt::kInfinity, 1.0);
  for (int k = 0; k < program.num_basis; ++k) {
    program.slack.push_back(b.add_variable(0.0, opt::kInfinity));
    b.add_ub_row({{program.margin, problem.polytope.weights[k]}, {program.slack[k], -1.0}}, 0.0);
  }
  for (int k = 0; k < program.num_basis; ++k) {
    for (int l = 0; l < program.num_poses; ++l) {
      add_wrench_block(b, problem, program, count, l, program.slack[k], problem.polytope.basis[k]);
    }
  }
  reorder_tensions(program, static_cast<int>(problem.pairs.size()));
  program.mip.lp = b.build();
  return program;
}

StanceProgram build_naive(const StanceProblem& problem) {
  problem.validate();
  StanceProgram program;
  program.num_basis = 1;
  program.num_poses = problem.num_poses();
  opt::LinearProgramBuilder b;
  const int count = add_assignment(b, problem, program, true);
  for (int l = 0; l < program.num_poses; ++l) add_wrench_block(b, problem, program, count, l, -1, Wrench::Zero());
  reorder_tensions(program, static_cast<int>(problem.pairs.size()));
  program.mip.lp = b.build();
  return program;
}

int StancePlan::attached() const {
  int n = 0;
  for (int s : assignment) n += s >= 0;
  return n;
}

GeneratorSet stance_generators(const RobotModel& robot, const std::vector<GraspSite>& sites,
                               const std::vector<int>& assignment, const Pose& pose) {
  GeneratorSet gen;
  gen.shoulder_moment = robot.shoulder_moment;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const int j = assignment[i];
    if (j < 0) continue;
    const auto g = boom_generator(pose, robot.attachment_points[i], sites.at(j).position);
    gen.add(g.wrench, robot.t_max * sites[j].quality);
  }
  return gen;
}

double assignment_margin(const StanceProblem& problem, const std::vector<int>& assignment) {
  double margin = std::numeric_limits<double>::infinity();
  for (int l = 0; l < problem.num_poses(); ++l) {
    const GeneratorSet gen = stance_generators(problem.robot, problem.sites, assignment, problem.poses[l]);
    const MarginResult r = inscribed_margin(gen, problem.desired[l], problem.polytope);
    margin = std::min(margin, r.margin);
  }
  return margin;
}

bool origin_in_hull(const TaskPolytope& polytope) {
  // Feasibility of sum_k lambda_k B_k = 0, sum_k lambda_k = 1, lambda >= 0.
  opt::LinearProgramBuilder b;
  std::vector<int> lambda;
  for (int k = 0; k < polytope.size(); ++k) lambda.push_back(b.add_variable(0.0, opt::kInfinity));
  std::vector<std::pair<int, double>> terms;
  for (int r = 0; r < 6; ++r) {
    terms.clear();
    for (int k = 0; k < polytope.size(); ++k) terms.emplace_back(lambda[k], polytope.basis[k][r]);
    b.add_eq_row(terms, 0.0);
  }
  terms.clear();
  for (int v : lambda) terms.emplace_back(v, 1.0);
  b.add_eq_row(terms, 1.0);
  return opt::solve_lp(b.build()).status == opt::SolveStatus::optimal;
}

namespace {

StancePlan extract(const StanceProblem& problem, const StanceProgram& program, PlannerVariant variant,
                   opt::SolveReport report) {
  StancePlan plan;
  plan.variant = variant;
  plan.report = std::move(report);
  if (!plan.report.has_solution()) return plan;
  const Eigen::VectorXd& x = plan.report.solution;
  const int booms = problem.robot.num_booms();
  plan.assignment.assign(booms, -1);
  std::vector<int> pair_of_boom(booms, -1);
  for (std::size_t p = 0; p < problem.pairs.size(); ++p) {
    if (x[program.assign[p]] > 0.5) {
      plan.assignment[problem.pairs[p].boom] = problem.pairs[p].site;
      pair_of_boom[problem.pairs[p].boom] = static_cast<int>(p);
    }
  }
  plan.objective = plan.report.objective;
  plan.tensions.assign(program.num_poses,
                       std::vector<std::vector<double>>(program.num_basis, std::vector<double>(booms, 0.0)));
  for (int l = 0; l < program.num_poses; ++l) {
    for (int k = 0; k < program.num_basis; ++k) {
      for (int i = 0; i < booms; ++i) {
        if (pair_of_boom[i] >= 0) plan.tensions[l][k][i] = x[program.tension_var(pair_of_boom[i], k, l)];
      }
    }
  }
  plan.margin = variant == PlannerVariant::optimal ? x[program.margin] : assignment_margin(problem, plan.assignment);
  return plan;
}

}  // namespace

StancePlan plan(const StanceProblem& problem, PlannerVariant variant, const PlannerOptions& options) {
  problem.validate();
  if (problem.pairs.empty()) {
    StancePlan empty;
    empty.variant = variant;
    empty.report.status = opt::SolveStatus::infeasible;
    return empty;
  }
  if (variant == PlannerVariant::naive) {
    const StanceProgram program = build_naive(problem);
    return extract(problem, program, variant, opt::solve_milp(program.mip, options.milp));
  }
  const StanceProgram program = build_optimal(problem);
  opt::MilpOptions milp = options.milp;
  if (options.naive_warm_start && !milp.initial_solution) {
    const StanceProgram naive = build_naive(problem);
    const auto start = opt::solve_milp(naive.mip, options.milp);
    // With the origin inside the basis hull, z = 0 is feasible exactly when the nominal wrench is.
    if (start.status == opt::SolveStatus::infeasible && origin_in_hull(problem.polytope)) {
      StancePlan none;
      none.variant = variant;
      none.report = start;
      return none;
    }
    if (start.has_solution()) {
      Eigen::VectorXd guess = Eigen::VectorXd::Zero(program.mip.lp.num_variables());
      for (std::size_t p = 0; p < problem.pairs.size(); ++p) guess[program.assign[p]] = start.solution[naive.assign[p]];
      milp.initial_solution = guess;
    }
  }
  return extract(problem, program, variant, opt::solve_milp(program.mip, milp));
}

TaskSpec apply_pose_uncertainty(const TaskSpec& task, double orientation_error) {
  TaskSpec out = task;
  out.polytope = scale_torque_weights(task.polytope, orientation_error);
  return out;
}

}  // namespace reach

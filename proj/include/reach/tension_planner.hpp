#pragma once

#include "reach/wrench_space.hpp"

#include <string>
#include <vector>

namespace reach {

/// log Phi(x) for the standard normal CDF, accurate over the whole double range.
double log_gaussian_cdf(double x);

/// phi(x) / Phi(x), the derivative of log Phi.
double gaussian_hazard(double x);

/// Fixed stance at one pose: limb tensions t_i in [0, u_i], shoulder torques in the box,
/// summing to `desired`. Limb i fails when t_i exceeds a Normal(pull_mean_i, pull_std_i) draw.
struct TensionProblem {
  GeneratorSet generators;
  std::vector<double> pull_mean;  // N
  std::vector<double> pull_std;   // N
  Wrench desired = Wrench::Zero();

  int size() const { return generators.size(); }
  void validate() const;
};

/// Pull models are taken from `sites`, listed in generator order.
TensionProblem make_tension_problem(const GeneratorSet& generators, const std::vector<GraspSite>& sites,
                                    const Wrench& desired);

/// sum_i log Phi((mu_i - t_i) / sigma_i)
double tension_objective(const TensionProblem& problem, const Eigen::VectorXd& tensions);
Eigen::VectorXd tension_gradient(const TensionProblem& problem, const Eigen::VectorXd& tensions);

enum class TensionStatus { optimal, infeasible, not_converged };
std::string to_string(TensionStatus status);

struct TensionPlan {
  TensionStatus status = TensionStatus::infeasible;
  Eigen::VectorXd tensions;           // N
  Vec3 shoulder_torque = Vec3::Zero();  // Nm, zero for cables
  double log_success = -std::numeric_limits<double>::infinity();
  double residual = std::numeric_limits<double>::infinity();  // |sum t_i g_i + [0; tau] - w_des|
  double projected_gradient = std::numeric_limits<double>::infinity();
  int newton_steps = 0;

  bool converged() const { return status == TensionStatus::optimal; }
};

struct TensionOptions {
  double barrier_decrease = 0.2;
  double duality_tolerance = 1e-9;  // stop once the barrier term's duality measure is below this
  double rank_tolerance = 1e-10;    // relative singular value cutoff of the equality rows
  double residual_tolerance = 1e-6;
  int max_newton_steps = 500;
};

TensionPlan solve_tensions(const TensionProblem& problem, const TensionOptions& options = {});

/// prod_i Phi((mu_i - t_i) / sigma_i)
double success_probability(const TensionPlan& plan, const TensionProblem& problem);

}  // namespace reach

#include "reach/opt/linear_program.hpp"

#include "reach/opt/simplex.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace reach::opt {

LinearProgram LinearProgram::with_variables(int n) {
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(n);
  lp.eq_matrix.resize(0, n);
  lp.ub_matrix.resize(0, n);
  lp.eq_rhs.resize(0);
  lp.ub_rhs.resize(0);
  lp.lower = Eigen::VectorXd::Zero(n);
  lp.upper = Eigen::VectorXd::Constant(n, kInfinity);
  return lp;
}

LinearProgram LinearProgram::from_dense(const Eigen::VectorXd& c, const Eigen::MatrixXd& a_eq,
                                        const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& a_ub,
                                        const Eigen::VectorXd& b_ub, const Eigen::VectorXd& lower,
                                        const Eigen::VectorXd& upper) {
  const auto n = c.size();
  LinearProgram lp;
  lp.objective = c;
  lp.eq_matrix = a_eq.size() ? SparseMatrix(a_eq.sparseView()) : SparseMatrix(0, n);
  lp.eq_rhs = b_eq;
  lp.ub_matrix = a_ub.size() ? SparseMatrix(a_ub.sparseView()) : SparseMatrix(0, n);
  lp.ub_rhs = b_ub;
  lp.lower = lower;
  lp.upper = upper;
  return lp;
}

void LinearProgram::validate() const {
  const auto n = objective.size();
  if (eq_matrix.cols() != n || ub_matrix.cols() != n) {
    throw std::invalid_argument("linear program: constraint matrix column count differs from objective size");
  }
  if (eq_matrix.rows() != eq_rhs.size() || ub_matrix.rows() != ub_rhs.size()) {
    throw std::invalid_argument("linear program: right-hand side size differs from row count");
  }
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("linear program: bound vectors must match the variable count");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j]) {
      throw std::invalid_argument("linear program: crossed or NaN bounds on variable " + std::to_string(j));
    }
    if (lower[j] == kInfinity || upper[j] == -kInfinity) {
      throw std::invalid_argument("linear program: empty bound interval on variable " + std::to_string(j));
    }
  }
  if (!objective.allFinite() || !eq_rhs.allFinite() || !ub_rhs.allFinite()) {
    throw std::invalid_argument("linear program: objective and right-hand sides must be finite");
  }
}

double LinearProgram::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  if (eq_rhs.size()) worst = std::max(worst, (eq_matrix * x - eq_rhs).cwiseAbs().maxCoeff());
  if (ub_rhs.size()) worst = std::max(worst, (ub_matrix * x - ub_rhs).maxCoeff());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    worst = std::max({worst, lower[j] - x[j], x[j] - upper[j]});
  }
  return worst;
}

void MixedIntegerProgram::validate() const {
  lp.validate();
  for (int j : integer_indices) {
    if (j < 0 || j >= lp.num_variables()) throw std::invalid_argument("integer index out of range");
    if (lp.lower[j] < 0.0 || lp.upper[j] > 1.0) {
      throw std::invalid_argument("integer variable " + std::to_string(j) + " must have bounds within [0, 1]");
    }
  }
}

int LinearProgramBuilder::add_variable(double lower, double upper, double objective) {
  lower_.push_back(lower);
  upper_.push_back(upper);
  objective_.push_back(objective);
  return static_cast<int>(lower_.size()) - 1;
}

void LinearProgramBuilder::set_objective(int var, double value) { objective_.at(var) = value; }

void LinearProgramBuilder::add_eq_row(const std::vector<std::pair<int, double>>& terms, double rhs) {
  const int row = static_cast<int>(eq_rhs_.size());
  for (const auto& [var, coef] : terms) {
    if (coef != 0.0) eq_.emplace_back(row, var, coef);
  }
  eq_rhs_.push_back(rhs);
}

void LinearProgramBuilder::add_ub_row(const std::vector<std::pair<int, double>>& terms, double rhs) {
  const int row = static_cast<int>(ub_rhs_.size());
  for (const auto& [var, coef] : terms) {
    if (coef != 0.0) ub_.emplace_back(row, var, coef);
  }
  ub_rhs_.push_back(rhs);
}

LinearProgram LinearProgramBuilder::build() const {
  const int n = num_variables();
  LinearProgram lp;
  lp.objective = Eigen::Map<const Eigen::VectorXd>(objective_.data(), n);
  lp.lower = Eigen::Map<const Eigen::VectorXd>(lower_.data(), n);
  lp.upper = Eigen::Map<const Eigen::VectorXd>(upper_.data(), n);
  lp.eq_matrix.resize(static_cast<Eigen::Index>(eq_rhs_.size()), n);
  lp.eq_matrix.setFromTriplets(eq_.begin(), eq_.end());
  lp.ub_matrix.resize(static_cast<Eigen::Index>(ub_rhs_.size()), n);
  lp.ub_matrix.setFromTriplets(ub_.begin(), ub_.end());
  lp.eq_rhs = Eigen::Map<const Eigen::VectorXd>(eq_rhs_.data(), static_cast<Eigen::Index>(eq_rhs_.size()));
  lp.ub_rhs = Eigen::Map<const Eigen::VectorXd>(ub_rhs_.data(), static_cast<Eigen::Index>(ub_rhs_.size()));
  return lp;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::gap_limit: return "gap_limit";
    case SolveStatus::node_limit: return "node_limit";
    case SolveStatus::time_limit: return "time_limit";
    case SolveStatus::iteration_limit: return "iteration_limit";
    case SolveStatus::cutoff: return "cutoff";
  }
  return "unknown";
}

SolveReport solve_lp(const LinearProgram& lp, const LpOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Simplex simplex(lp, options);
  SolveReport report;
  report.status = simplex.solve();
  report.iterations = simplex.iterations();
  report.stats.lp_iterations = simplex.iterations();
  if (report.status == SolveStatus::optimal) {
    report.solution = simplex.solution();
    // Snap onto bounds the simplex left within tolerance.
    report.solution = report.solution.cwiseMax(lp.lower).cwiseMin(lp.upper);
    report.objective = lp.objective.dot(report.solution);
    report.stats.best_bound = report.objective;
    report.stats.relative_gap = 0.0;
  } else if (report.status == SolveStatus::unbounded) {
    report.objective = kInfinity;
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace reach::opt

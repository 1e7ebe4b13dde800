#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace reach::opt {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

using SparseMatrix = Eigen::SparseMatrix<double>;  // column major
using Triplet = Eigen::Triplet<double>;

/// maximize c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lower <= x <= upper.
struct LinearProgram {
  Eigen::VectorXd objective;
  SparseMatrix eq_matrix;
  Eigen::VectorXd eq_rhs;
  SparseMatrix ub_matrix;
  Eigen::VectorXd ub_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  /// `n` variables in [0, inf), zero objective, no rows.
  static LinearProgram with_variables(int n);

  /// Dense convenience constructor; pass empty matrices for absent row blocks.
  static LinearProgram from_dense(const Eigen::VectorXd& c, const Eigen::MatrixXd& a_eq,
                                  const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& a_ub,
                                  const Eigen::VectorXd& b_ub, const Eigen::VectorXd& lower,
                                  const Eigen::VectorXd& upper);

  int num_variables() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(eq_rhs.size() + ub_rhs.size()); }

  /// Throws std::invalid_argument on inconsistent dimensions or crossed bounds.
  void validate() const;

  /// Largest absolute violation of rows and bounds at `x`.
  double max_violation(const Eigen::VectorXd& x) const;
};

struct MixedIntegerProgram {
  LinearProgram lp;
  std::vector<int> integer_indices;  // each restricted to {0, 1}

  void validate() const;
};

/// Incremental triplet assembly of a LinearProgram.
class LinearProgramBuilder {
 public:
  int add_variable(double lower, double upper, double objective = 0.0);
  void set_objective(int var, double value);
  void add_eq_row(const std::vector<std::pair<int, double>>& terms, double rhs);
  void add_ub_row(const std::vector<std::pair<int, double>>& terms, double rhs);

  int num_variables() const { return static_cast<int>(lower_.size()); }
  LinearProgram build() const;

 private:
  std::vector<double> lower_, upper_, objective_;
  std::vector<Triplet> eq_, ub_;
  std::vector<double> eq_rhs_, ub_rhs_;
};

/// `cutoff`: the LP bound was proven no better than a cutoff set by the caller (branch and bound).
enum class SolveStatus { optimal, infeasible, unbounded, gap_limit, node_limit, time_limit, iteration_limit, cutoff };

std::string to_string(SolveStatus status);

struct BranchAndBoundStats {
  long nodes = 0;
  double best_bound = -kInfinity;
  double relative_gap = kInfinity;
  long lp_iterations = 0;
  int max_depth = 0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::infeasible;
  double objective = -kInfinity;
  Eigen::VectorXd solution;
  BranchAndBoundStats stats;
  double wall_time = 0.0;  // s
  long iterations = 0;     // simplex pivots

  bool has_solution() const { return solution.size() > 0; }
};

struct LpOptions {
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-9;
  long iteration_limit = 0;  // 0: automatic
};

SolveReport solve_lp(const LinearProgram& lp, const LpOptions& options = {});

enum class Branching { most_fractional, pseudocost };

struct MilpOptions {
  double gap_tolerance = 1e-6;
  long node_limit = 1'000'000;
  double time_limit = 120.0;  // s
  std::size_t open_node_cap = 20'000;  // beyond this, select depth-first
  double integrality_tolerance = 1e-6;
  /// Pseudocost branching initializes each variable by strong branching the first time it is a candidate.
  Branching branching = Branching::pseudocost;
  int strong_candidates = 8;  // strong-branched candidates per node at most
  LpOptions lp;
  /// Known feasible point used as the first incumbent once verified.
  std::optional<Eigen::VectorXd> initial_solution;
};

SolveReport solve_milp(const MixedIntegerProgram& mip, const MilpOptions& options = {});

}  // namespace reach::opt

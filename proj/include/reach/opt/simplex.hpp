#pragma once

#include "reach/opt/linear_program.hpp"

#include <Eigen/SparseLU>

#include <cstdint>
#include <vector>

namespace reach::opt {

enum class VarStatus : std::int8_t { basic, at_lower, at_upper, at_zero, fixed };

/// Basis factorization: column singletons by substitution, LU of the remaining kernel,
/// plus a product-form eta file.
class BasisFactor {
 public:
  /// Returns false when the matrix is numerically singular.
  bool factorize(const SparseMatrix& basis);

  /// v <- B^{-1} v
  void ftran(Eigen::VectorXd& v) const;
  /// v <- B^{-T} v
  void btran(Eigen::VectorXd& v) const;

  /// Records the basis change that replaces row `row` with a column whose ftran image is `alpha`.
  void update(int row, const Eigen::VectorXd& alpha);

  int num_updates() const { return static_cast<int>(etas_.size()); }

 private:
  struct Eta {
    int row = 0;
    double pivot = 1.0;
    std::vector<int> index;
    std::vector<double> value;
  };

  struct Singleton {
    int row = 0;
    int col = 0;
    double value = 1.0;
  };

  static constexpr int kDenseLimit = 100;

  int m_ = 0;
  std::vector<Singleton> singletons_;
  std::vector<int> kernel_rows_, kernel_cols_;
  SparseMatrix border_;  // kernel columns restricted to the singleton rows
  bool dense_ = true;
  Eigen::MatrixXd dense_inverse_;  // small kernels only
  mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> sparse_lu_;
  std::vector<Eta> etas_;
};

/// Bounded revised simplex on the computational form [A -I](x; r) = 0 with
/// row activities r carrying the row bounds. Rows are scaled to unit max-abs entry.
///
/// A cold start runs the composite primal method. After bound changes, a basis
/// installed with set_statuses() is re-optimized by the dual method whenever it
/// is dual feasible (the usual situation inside branch and bound).
class Simplex {
 public:
  Simplex(const LinearProgram& lp, const LpOptions& options = {});

  SolveStatus solve();

  /// Changes the bounds of structural variable `var`.
  void set_bounds(int var, double lower, double upper);
  double lower(int var) const { return lo_[var]; }
  double upper(int var) const { return hi_[var]; }

  /// The dual method stops with SolveStatus::cutoff once it proves the optimum is <= cutoff.
  void set_cutoff(double cutoff) { cutoff_ = cutoff; }

  const std::vector<VarStatus>& statuses() const { return status_; }
  void set_statuses(const std::vector<VarStatus>& statuses);

  Eigen::VectorXd solution() const { return x_.head(n_); }
  double objective() const;
  long iterations() const { return iterations_; }
  int num_structurals() const { return n_; }
  int num_rows() const { return m_; }

 private:
  enum class Outcome { optimal, infeasible, unbounded, not_dual_feasible, limit, cutoff };

  void cold_basis();
  void place_nonbasic(int j);
  bool refactor();
  void compute_basic_values();
  void load_column(int j, Eigen::VectorXd& out) const;
  double column_dot(int j, const Eigen::VectorXd& y) const;
  void compute_reduced_costs(const Eigen::VectorXd& basic_costs, bool phase_one);
  void pivot(int entering, int row, const Eigen::VectorXd& alpha, VarStatus leaving_status);
  double infeasibility(int var) const;
  bool certify_infeasible(int row, const std::vector<double>& row_alpha) const;
  double dual_bound(const Eigen::VectorXd& original_cost) const;

  Outcome primal();
  Outcome dual();

  int n_ = 0;
  int m_ = 0;
  Eigen::VectorXd objective_;  // unscaled maximization objective of structurals
  SparseMatrix a_;             // row-scaled constraint matrix, m x n
  Eigen::VectorXd lo_, hi_, cost_, x_, d_;
  std::vector<VarStatus> status_;
  std::vector<int> head_;
  std::vector<int> position_;
  BasisFactor factor_;
  LpOptions options_;
  long iterations_ = 0;
  long iteration_limit_ = 0;  // per solve() call
  long solve_start_ = 0;
  bool warm_ = false;
  double cutoff_ = -kInfinity;
};

}  // namespace reach::opt

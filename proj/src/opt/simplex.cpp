#include "reach/opt/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reach::opt {

namespace {

constexpr int kRefactorInterval = 64;
constexpr double kPivotTolerance = 1e-9;
constexpr double kDropTolerance = 1e-14;
constexpr double kRoundoff = 1e-10;  // row entries below this are treated as exact zeros
constexpr int kDegenerateRunForBland = 40;
constexpr double kCostPerturbation = 1e-7;
constexpr double kMinWeight = 1e-6;
constexpr double kSmallShift = 1e-7;  // boxed variables with smaller dual violations are shifted, not flipped
constexpr double kShiftLimit = 1e-6;
constexpr double kCutoffMargin = 1e-7;
constexpr int kCutoffCheckInterval = 8;  // larger dual infeasibilities hand over to the primal method

bool finite(double v) { return std::isfinite(v); }

// Deterministic value in [0, 1) per index.
double unit_hash(int j) {
  std::uint64_t z = static_cast<std::uint64_t>(j) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
}

}  // namespace

// ---------------------------------------------------------------------------
// BasisFactor

bool BasisFactor::factorize(const SparseMatrix& basis) {
  etas_.clear();
  m_ = static_cast<int>(basis.rows());
  singletons_.clear();
  kernel_rows_.clear();
  kernel_cols_.clear();
  if (m_ == 0) return true;

  // Column singletons (mostly logicals) are solved by substitution; the rest forms the kernel.
  std::vector<char> covered(m_, 0);
  for (int c = 0; c < m_; ++c) {
    int nnz = 0, row = -1;
    double value = 0.0;
    for (SparseMatrix::InnerIterator it(basis, c); it; ++it) {
      if (it.value() == 0.0) continue;
      ++nnz;
      row = static_cast<int>(it.row());
      value = it.value();
    }
    if (nnz == 1 && !covered[row]) {
      covered[row] = 1;
      singletons_.push_back({row, c, value});
    } else {
      kernel_cols_.push_back(c);
    }
  }
  std::vector<int> kernel_index(m_, -1);
  for (int r = 0; r < m_; ++r) {
    if (!covered[r]) {
      kernel_index[r] = static_cast<int>(kernel_rows_.size());
      kernel_rows_.push_back(r);
    }
  }
  const int nk = static_cast<int>(kernel_cols_.size());
  std::vector<Triplet> kernel, border;
  for (int k = 0; k < nk; ++k) {
    for (SparseMatrix::InnerIterator it(basis, kernel_cols_[k]); it; ++it) {
      if (it.value() == 0.0) continue;
      const int r = static_cast<int>(it.row());
      if (covered[r]) {
        border.emplace_back(r, k, it.value());
      } else {
        kernel.emplace_back(kernel_index[r], k, it.value());
      }
    }
  }
  border_.resize(m_, nk);
  border_.setFromTriplets(border.begin(), border.end());
  if (nk == 0) return true;
  SparseMatrix core(nk, nk);
  core.setFromTriplets(kernel.begin(), kernel.end());
  core.makeCompressed();
  dense_ = nk <= kDenseLimit;
  if (dense_) {
    const Eigen::MatrixXd dense = core;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(dense);
    lu.setThreshold(1e-11);
    if (!lu.isInvertible()) return false;
    dense_inverse_ = lu.inverse();
    return true;
  }
  sparse_lu_.analyzePattern(core);
  sparse_lu_.factorize(core);
  return sparse_lu_.info() == Eigen::Success;
}

void BasisFactor::ftran(Eigen::VectorXd& v) const {
  if (v.size() == 0) return;
  const int nk = static_cast<int>(kernel_cols_.size());
  Eigen::VectorXd out(m_);
  if (nk > 0) {
    Eigen::VectorXd rhs(nk);
    for (int i = 0; i < nk; ++i) rhs[i] = v[kernel_rows_[i]];
    const Eigen::VectorXd xs = dense_ ? Eigen::VectorXd(dense_inverse_ * rhs) : Eigen::VectorXd(sparse_lu_.solve(rhs));
    for (int k = 0; k < nk; ++k) out[kernel_cols_[k]] = xs[k];
    const Eigen::VectorXd spill = border_ * xs;
    for (const Singleton& s : singletons_) out[s.col] = (v[s.row] - spill[s.row]) / s.value;
  } else {
    for (const Singleton& s : singletons_) out[s.col] = v[s.row] / s.value;
  }
  v = std::move(out);
  for (const Eta& eta : etas_) {
    const double t = v[eta.row] / eta.pivot;
    if (t != 0.0) {
      for (std::size_t k = 0; k < eta.index.size(); ++k) v[eta.index[k]] -= eta.value[k] * t;
    }
    v[eta.row] = t;
  }
}

void BasisFactor::btran(Eigen::VectorXd& v) const {
  if (v.size() == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = v[it->row];
    for (std::size_t k = 0; k < it->index.size(); ++k) s -= it->value[k] * v[it->index[k]];
    v[it->row] = s / it->pivot;
  }
  const int nk = static_cast<int>(kernel_cols_.size());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m_);
  for (const Singleton& s : singletons_) y[s.row] = v[s.col] / s.value;
  if (nk > 0) {
    Eigen::VectorXd rhs(nk);
    for (int k = 0; k < nk; ++k) rhs[k] = v[kernel_cols_[k]];
    rhs -= border_.transpose() * y;
    const Eigen::VectorXd yk =
        dense_ ? Eigen::VectorXd(dense_inverse_.transpose() * rhs) : Eigen::VectorXd(sparse_lu_.transpose().solve(rhs));
    for (int i = 0; i < nk; ++i) y[kernel_rows_[i]] = yk[i];
  }
  v = std::move(y);
}

void BasisFactor::update(int row, const Eigen::VectorXd& alpha) {
  Eta eta;
  eta.row = row;
  eta.pivot = alpha[row];
  for (int i = 0; i < alpha.size(); ++i) {
    if (i != row && std::abs(alpha[i]) > kDropTolerance) {
      eta.index.push_back(i);
      eta.value.push_back(alpha[i]);
    }
  }
  etas_.push_back(std::move(eta));
}

// ---------------------------------------------------------------------------
// Simplex

Simplex::Simplex(const LinearProgram& lp, const LpOptions& options) : options_(options) {
  lp.validate();
  n_ = lp.num_variables();
  const int m_eq = static_cast<int>(lp.eq_rhs.size());
  m_ = lp.num_rows();
  objective_ = lp.objective;

  std::vector<Triplet> triplets;
  triplets.reserve(lp.eq_matrix.nonZeros() + lp.ub_matrix.nonZeros());
  Eigen::VectorXd row_scale = Eigen::VectorXd::Zero(m_);
  auto collect = [&](const SparseMatrix& block, int offset) {
    for (int j = 0; j < block.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(block, j); it; ++it) {
        if (it.value() == 0.0) continue;
        triplets.emplace_back(static_cast<int>(it.row()) + offset, j, it.value());
        row_scale[it.row() + offset] = std::max(row_scale[it.row() + offset], std::abs(it.value()));
      }
    }
  };
  collect(lp.eq_matrix, 0);
  collect(lp.ub_matrix, m_eq);
  for (int i = 0; i < m_; ++i) {
    if (row_scale[i] == 0.0) row_scale[i] = 1.0;
  }
  for (auto& t : triplets) t = Triplet(t.row(), t.col(), t.value() / row_scale[t.row()]);
  a_.resize(m_, n_);
  a_.setFromTriplets(triplets.begin(), triplets.end());
  a_.makeCompressed();

  const int total = n_ + m_;
  lo_.resize(total);
  hi_.resize(total);
  cost_ = Eigen::VectorXd::Zero(total);
  lo_.head(n_) = lp.lower;
  hi_.head(n_) = lp.upper;
  cost_.head(n_) = -lp.objective;
  for (int i = 0; i < m_; ++i) {
    if (i < m_eq) {
      lo_[n_ + i] = hi_[n_ + i] = lp.eq_rhs[i] / row_scale[i];
    } else {
      lo_[n_ + i] = -kInfinity;
      hi_[n_ + i] = lp.ub_rhs[i - m_eq] / row_scale[i];
    }
  }
  x_ = Eigen::VectorXd::Zero(total);
  d_ = Eigen::VectorXd::Zero(total);
  iteration_limit_ = options_.iteration_limit > 0 ? options_.iteration_limit : 100L * (m_ + n_) + 10000;
  cold_basis();
}

void Simplex::place_nonbasic(int j) {
  if (lo_[j] == hi_[j]) {
    status_[j] = VarStatus::fixed;
    x_[j] = lo_[j];
    return;
  }
  VarStatus s = status_[j];
  if (s == VarStatus::at_upper && !finite(hi_[j])) s = VarStatus::at_lower;
  if (s == VarStatus::fixed) s = VarStatus::at_lower;
  if (s == VarStatus::at_zero && (finite(lo_[j]) || finite(hi_[j]))) s = VarStatus::at_lower;
  if (s == VarStatus::at_lower && !finite(lo_[j])) s = finite(hi_[j]) ? VarStatus::at_upper : VarStatus::at_zero;
  status_[j] = s;
  switch (s) {
    case VarStatus::at_lower: x_[j] = lo_[j]; break;
    case VarStatus::at_upper: x_[j] = hi_[j]; break;
    default: x_[j] = 0.0; break;
  }
}

void Simplex::cold_basis() {
  const int total = n_ + m_;
  status_.assign(total, VarStatus::at_lower);
  position_.assign(total, -1);
  head_.resize(m_);
  for (int j = 0; j < n_; ++j) place_nonbasic(j);
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    position_[n_ + i] = i;
    status_[n_ + i] = VarStatus::basic;
  }
  warm_ = false;
}

void Simplex::set_bounds(int var, double lower, double upper) {
  if (var < 0 || var >= n_) throw std::out_of_range("set_bounds: variable index out of range");
  if (lower > upper) throw std::invalid_argument("set_bounds: lower bound exceeds upper bound");
  lo_[var] = lower;
  hi_[var] = upper;
  if (status_[var] != VarStatus::basic) {
    if (status_[var] == VarStatus::fixed) status_[var] = VarStatus::at_lower;
    place_nonbasic(var);
  }
}

void Simplex::set_statuses(const std::vector<VarStatus>& statuses) {
  if (statuses.size() != status_.size()) throw std::invalid_argument("set_statuses: size mismatch");
  const auto basic = std::count(statuses.begin(), statuses.end(), VarStatus::basic);
  if (basic != m_) throw std::invalid_argument("set_statuses: basis must have one variable per row");
  status_ = statuses;
  position_.assign(status_.size(), -1);
  int row = 0;
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::basic) {
      head_[row] = j;
      position_[j] = row++;
    } else {
      place_nonbasic(j);
    }
  }
  warm_ = true;
}

double Simplex::objective() const { return objective_.dot(x_.head(n_)); }

void Simplex::load_column(int j, Eigen::VectorXd& out) const {
  out.setZero(m_);
  if (j < n_) {
    for (SparseMatrix::InnerIterator it(a_, j); it; ++it) out[it.row()] = it.value();
  } else {
    out[j - n_] = -1.0;
  }
}

double Simplex::column_dot(int j, const Eigen::VectorXd& y) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (SparseMatrix::InnerIterator it(a_, j); it; ++it) s += it.value() * y[it.row()];
  return s;
}

bool Simplex::refactor() {
  std::vector<Triplet> triplets;
  triplets.reserve(a_.nonZeros() / 2 + m_);
  for (int i = 0; i < m_; ++i) {
    const int j = head_[i];
    if (j < n_) {
      for (SparseMatrix::InnerIterator it(a_, j); it; ++it) triplets.emplace_back(it.row(), i, it.value());
    } else {
      triplets.emplace_back(j - n_, i, -1.0);
    }
  }
  SparseMatrix basis(m_, m_);
  basis.setFromTriplets(triplets.begin(), triplets.end());
  basis.makeCompressed();
  if (!factor_.factorize(basis)) {
    // Unrecoverable pivot sequence; restart from the all-logical basis.
    cold_basis();
    std::vector<Triplet> eye;
    for (int i = 0; i < m_; ++i) eye.emplace_back(i, i, -1.0);
    basis.setZero();
    basis.setFromTriplets(eye.begin(), eye.end());
    if (!factor_.factorize(basis)) throw std::runtime_error("simplex: logical basis failed to factorize");
    compute_basic_values();
    return false;
  }
  compute_basic_values();
  return true;
}

void Simplex::compute_basic_values() {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < n_; ++j) {
    if (status_[j] == VarStatus::basic || x_[j] == 0.0) continue;
    for (SparseMatrix::InnerIterator it(a_, j); it; ++it) rhs[it.row()] -= it.value() * x_[j];
  }
  for (int i = 0; i < m_; ++i) {
    const int j = n_ + i;
    if (status_[j] != VarStatus::basic) rhs[i] += x_[j];
  }
  factor_.ftran(rhs);
  for (int i = 0; i < m_; ++i) x_[head_[i]] = rhs[i];
}

double Simplex::infeasibility(int var) const {
  if (x_[var] < lo_[var]) return lo_[var] - x_[var];
  if (x_[var] > hi_[var]) return x_[var] - hi_[var];
  return 0.0;
}

void Simplex::compute_reduced_costs(const Eigen::VectorXd& basic_costs, bool phase_one) {
  Eigen::VectorXd y = basic_costs;
  factor_.btran(y);
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::basic) {
      d_[j] = 0.0;
      continue;
    }
    const double c = phase_one ? 0.0 : cost_[j];
    d_[j] = c - column_dot(j, y);
  }
}

void Simplex::pivot(int entering, int row, const Eigen::VectorXd& alpha, VarStatus leaving_status) {
  const int leaving = head_[row];
  status_[leaving] = lo_[leaving] == hi_[leaving] ? VarStatus::fixed : leaving_status;
  if (status_[leaving] == VarStatus::at_lower || status_[leaving] == VarStatus::fixed) x_[leaving] = lo_[leaving];
  if (status_[leaving] == VarStatus::at_upper) x_[leaving] = hi_[leaving];
  position_[leaving] = -1;
  head_[row] = entering;
  position_[entering] = row;
  status_[entering] = VarStatus::basic;
  factor_.update(row, alpha);
  ++iterations_;
}

Simplex::Outcome Simplex::primal() {
  const double ptol = options_.primal_tolerance;
  const double dtol = options_.dual_tolerance;
  Eigen::VectorXd basic_costs(m_), alpha(m_);
  int degenerate_run = 0;
  int stalls = 0;

  for (;;) {
    if (iterations_ - solve_start_ >= iteration_limit_) return Outcome::limit;
    if (factor_.num_updates() >= kRefactorInterval) refactor();

    bool phase_one = false;
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      if (x_[j] < lo_[j] - ptol) {
        basic_costs[i] = -1.0;
        phase_one = true;
      } else if (x_[j] > hi_[j] + ptol) {
        basic_costs[i] = 1.0;
        phase_one = true;
      } else {
        basic_costs[i] = 0.0;
      }
    }
    if (!phase_one) {
      for (int i = 0; i < m_; ++i) basic_costs[i] = cost_[head_[i]];
    }
    compute_reduced_costs(basic_costs, phase_one);

    const bool bland = degenerate_run >= kDegenerateRunForBland;
    int entering = -1;
    double best = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      double gain = 0.0;
      switch (status_[j]) {
        case VarStatus::at_lower: gain = -d_[j]; break;
        case VarStatus::at_upper: gain = d_[j]; break;
        case VarStatus::at_zero: gain = std::abs(d_[j]); break;
        default: continue;
      }
      if (gain <= dtol) continue;
      if (bland) {
        entering = j;
        break;
      }
      if (gain > best) {
        best = gain;
        entering = j;
      }
    }

    if (entering < 0) {
      if (!phase_one) return Outcome::optimal;
      // Confirm against freshly computed basic values before declaring infeasibility.
      if (factor_.num_updates() > 0) {
        refactor();
        bool still = false;
        for (int i = 0; i < m_; ++i) still = still || infeasibility(head_[i]) > ptol;
        if (!still) continue;
        compute_reduced_costs(basic_costs, true);
      }
      return Outcome::infeasible;
    }

    const double dir = (status_[entering] == VarStatus::at_lower ||
                        (status_[entering] == VarStatus::at_zero && d_[entering] < 0.0))
                           ? 1.0
                           : -1.0;
    load_column(entering, alpha);
    factor_.ftran(alpha);

    // Harris two-pass ratio test. rate = change of a basic variable per unit step.
    auto target = [&](int j, double rate) -> double {
      const double v = x_[j];
      if (rate < 0.0) {
        if (v > hi_[j] + ptol) return hi_[j];
        if (v < lo_[j] - ptol) return kInfinity;
        return lo_[j];
      }
      if (v < lo_[j] - ptol) return lo_[j];
      if (v > hi_[j] + ptol) return kInfinity;
      return hi_[j];
    };
    double relaxed = kInfinity;
    for (int i = 0; i < m_; ++i) {
      const double rate = -dir * alpha[i];
      if (std::abs(rate) < kPivotTolerance) continue;
      const double bound = target(head_[i], rate);
      if (!finite(bound)) continue;
      const double step = (std::abs(x_[head_[i]] - bound) + ptol) / std::abs(rate);
      relaxed = std::min(relaxed, step);
    }
    const double flip_step = hi_[entering] - lo_[entering];
    int row = -1;
    double step = kInfinity;
    double leaving_bound = 0.0;
    if (finite(flip_step) && flip_step <= relaxed) {
      step = flip_step;
    } else if (finite(relaxed)) {
      double best_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double rate = -dir * alpha[i];
        if (std::abs(rate) < kPivotTolerance) continue;
        const double bound = target(head_[i], rate);
        if (!finite(bound)) continue;
        const double s = (rate < 0.0 ? x_[head_[i]] - bound : bound - x_[head_[i]]) / std::abs(rate);
        if (s > relaxed) continue;
        const bool better = bland ? (row < 0 || head_[i] < head_[row]) : std::abs(rate) > best_pivot;
        if (better) {
          best_pivot = std::abs(rate);
          row = i;
          step = std::max(s, 0.0);
          leaving_bound = bound;
        }
      }
    }

    if (row < 0 && !finite(step)) {
      if (!phase_one) return Outcome::unbounded;
      // Numerical noise in phase one; rebuild and retry a bounded number of times.
      if (++stalls > 3) return Outcome::infeasible;
      refactor();
      continue;
    }

    degenerate_run = step < 1e-12 ? degenerate_run + 1 : 0;
    x_[entering] += dir * step;
    for (int i = 0; i < m_; ++i) x_[head_[i]] -= dir * step * alpha[i];

    if (row < 0) {
      status_[entering] = dir > 0.0 ? VarStatus::at_upper : VarStatus::at_lower;
      x_[entering] = dir > 0.0 ? hi_[entering] : lo_[entering];
      ++iterations_;
      continue;
    }
    const int leaving = head_[row];
    const VarStatus leaving_status = leaving_bound == lo_[leaving] ? VarStatus::at_lower : VarStatus::at_upper;
    pivot(entering, row, alpha, leaving_status);
  }
}

Simplex::Outcome Simplex::dual() {
  const double ptol = options_.primal_tolerance;
  const double dtol = options_.dual_tolerance;
  Eigen::VectorXd basic_costs(m_), rho(m_), alpha(m_), tau(m_), flip_column(m_);
  Eigen::VectorXd weight = Eigen::VectorXd::Ones(m_);  // dual steepest-edge reference weights
  std::vector<double> row_alpha(n_ + m_, 0.0);
  struct Candidate {
    int j;
    double abs_alpha;
    double ratio;
  };
  std::vector<Candidate> candidates;
  int degenerate_run = 0;
  // Past this budget the primal method finishes from the current basis.
  const long budget = m_ + 100L;
  const long start = iterations_;

  // Cost perturbation against dual degeneracy. The primal pass that follows runs on the
  // original costs and removes any resulting suboptimality.
  const Eigen::VectorXd original_cost = cost_;
  struct Restore {
    Eigen::VectorXd& cost;
    const Eigen::VectorXd& saved;
    ~Restore() { cost = saved; }
  } restore{cost_, original_cost};
  for (int j = 0; j < n_ + m_; ++j) {
    // Boxed variables only, so the perturbation stays bounded in the cutoff test.
    if (lo_[j] == hi_[j] || !finite(hi_[j] - lo_[j])) continue;
    const double delta = kCostPerturbation * (1.0 + std::abs(cost_[j])) * (1.0 + unit_hash(j));
    if (status_[j] == VarStatus::at_lower) cost_[j] += delta;
    if (status_[j] == VarStatus::at_upper) cost_[j] -= delta;
  }

  for (;;) {
    if (iterations_ - solve_start_ >= iteration_limit_) return Outcome::limit;
    if (iterations_ - start >= budget) return Outcome::not_dual_feasible;
    if (factor_.num_updates() >= kRefactorInterval) refactor();

    // Reduced costs are updated along the pivots and recomputed after each refactorization.
    if (factor_.num_updates() == 0) {
      for (int i = 0; i < m_; ++i) basic_costs[i] = cost_[head_[i]];
      compute_reduced_costs(basic_costs, false);
    }

    // Dual feasibility: boxed variables are moved to the bound matching their reduced cost;
    // tiny violations and one-sided variables get a cost shift instead.
    bool flipped = false;
    for (int j = 0; j < n_ + m_; ++j) {
      switch (status_[j]) {
        case VarStatus::at_lower:
          if (d_[j] < -dtol) {
            if (!finite(hi_[j]) || d_[j] > -kSmallShift) {
              if (d_[j] < -kShiftLimit) return Outcome::not_dual_feasible;
              cost_[j] -= d_[j];
              d_[j] = 0.0;
              break;
            }
            status_[j] = VarStatus::at_upper;
            x_[j] = hi_[j];
            flipped = true;
          }
          break;
        case VarStatus::at_upper:
          if (d_[j] > dtol) {
            if (!finite(lo_[j]) || d_[j] < kSmallShift) {
              if (d_[j] > kShiftLimit) return Outcome::not_dual_feasible;
              cost_[j] -= d_[j];
              d_[j] = 0.0;
              break;
            }
            status_[j] = VarStatus::at_lower;
            x_[j] = lo_[j];
            flipped = true;
          }
          break;
        case VarStatus::at_zero:
          if (std::abs(d_[j]) > kShiftLimit) return Outcome::not_dual_feasible;
          if (std::abs(d_[j]) > dtol) {
            cost_[j] -= d_[j];
            d_[j] = 0.0;
          }
          break;
        default: break;
      }
    }
    if (flipped) compute_basic_values();

    // Steepest-edge pricing on the primal infeasibilities.
    const bool bland = degenerate_run >= kDegenerateRunForBland;
    int row = -1;
    double best_score = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double inf = infeasibility(head_[i]);
      if (inf <= ptol) continue;
      const double score = inf * inf / weight[i];
      if (bland ? (row < 0 || head_[i] < head_[row]) : score > best_score) {
        best_score = score;
        row = i;
      }
    }
    if (row < 0) return Outcome::optimal;
    if (finite(cutoff_) && (iterations_ - start) % kCutoffCheckInterval == 0 &&
        dual_bound(original_cost) <= cutoff_ - kCutoffMargin * (1.0 + std::abs(cutoff_))) {
      return Outcome::cutoff;
    }

    const int leaving = head_[row];
    const bool to_lower = x_[leaving] < lo_[leaving];
    const double target = to_lower ? lo_[leaving] : hi_[leaving];

    rho.setZero();
    rho[row] = 1.0;
    factor_.btran(rho);
    weight[row] = std::max(rho.squaredNorm(), kMinWeight);

    auto ratio_of = [&](int j) -> double {
      switch (status_[j]) {
        case VarStatus::at_lower: return std::max(d_[j], 0.0);
        case VarStatus::at_upper: return std::max(-d_[j], 0.0);
        default: return std::abs(d_[j]);
      }
    };
    auto eligible = [&](int j, double a) -> bool {
      const bool inc = status_[j] == VarStatus::at_lower || status_[j] == VarStatus::at_zero;
      const bool dec = status_[j] == VarStatus::at_upper || status_[j] == VarStatus::at_zero;
      if (to_lower) return (a < 0.0 && inc) || (a > 0.0 && dec);
      return (a > 0.0 && inc) || (a < 0.0 && dec);
    };

    candidates.clear();
    for (int j = 0; j < n_ + m_; ++j) {
      row_alpha[j] = 0.0;
      if (status_[j] == VarStatus::basic || status_[j] == VarStatus::fixed) continue;
      const double a = column_dot(j, rho);
      row_alpha[j] = a;
      if (std::abs(a) < kPivotTolerance || !eligible(j, a)) continue;
      candidates.push_back({j, std::abs(a), ratio_of(j) / std::abs(a)});
    }

    // Bound-flipping ratio test: pass breakpoints of boxed candidates while the leaving
    // variable stays infeasible, then pick the largest pivot within a Harris window.
    int entering = -1;
    std::size_t stop = 0;
    if (!candidates.empty()) {
      std::sort(candidates.begin(), candidates.end(),
                [](const Candidate& a, const Candidate& b) { return a.ratio < b.ratio || (a.ratio == b.ratio && a.j < b.j); });
      if (bland) {
        entering = candidates.front().j;
        for (const auto& c : candidates) {
          if (c.ratio > candidates.front().ratio + 1e-12) break;
          entering = std::min(entering, c.j);
        }
      } else {
        double slope = std::abs(x_[leaving] - target);
        for (; stop < candidates.size(); ++stop) {
          const int j = candidates[stop].j;
          const double range = hi_[j] - lo_[j];
          if (!finite(range)) break;
          slope -= candidates[stop].abs_alpha * range;
          if (slope <= ptol) break;
        }
        if (stop < candidates.size()) {
          double window = kInfinity;
          for (std::size_t k = stop; k < candidates.size(); ++k) {
            window = std::min(window, candidates[k].ratio + dtol / candidates[k].abs_alpha);
          }
          double best_pivot = 0.0;
          for (std::size_t k = stop; k < candidates.size() && candidates[k].ratio <= window; ++k) {
            if (candidates[k].abs_alpha > best_pivot) {
              best_pivot = candidates[k].abs_alpha;
              entering = candidates[k].j;
            }
          }
        }
      }
    }
    if (entering < 0) {
      // Re-derive the row from a fresh factorization before trusting it.
      if (factor_.num_updates() > 0) {
        refactor();
        continue;
      }
      return certify_infeasible(row, row_alpha) ? Outcome::infeasible : Outcome::not_dual_feasible;
    }
    const double step_ratio = ratio_of(entering) / std::abs(row_alpha[entering]);
    degenerate_run = step_ratio < 1e-12 ? degenerate_run + 1 : 0;

    load_column(entering, alpha);
    factor_.ftran(alpha);
    const double pivot_value = alpha[row];
    if (std::abs(pivot_value) < kPivotTolerance ||
        std::abs(pivot_value - row_alpha[entering]) > 1e-6 * (1.0 + std::abs(pivot_value))) {
      // Row and column disagree: the factor has drifted.
      if (factor_.num_updates() == 0) return Outcome::not_dual_feasible;
      refactor();
      continue;
    }

    if (!bland && stop > 0) {
      flip_column.setZero(m_);
      for (std::size_t k = 0; k < stop; ++k) {
        const int j = candidates[k].j;
        const double change = status_[j] == VarStatus::at_lower ? hi_[j] - lo_[j] : lo_[j] - hi_[j];
        status_[j] = status_[j] == VarStatus::at_lower ? VarStatus::at_upper : VarStatus::at_lower;
        x_[j] = status_[j] == VarStatus::at_lower ? lo_[j] : hi_[j];
        if (j < n_) {
          for (SparseMatrix::InnerIterator it(a_, j); it; ++it) flip_column[it.row()] += it.value() * change;
        } else {
          flip_column[j - n_] -= change;
        }
      }
      factor_.ftran(flip_column);
      for (int i = 0; i < m_; ++i) x_[head_[i]] -= flip_column[i];
    }

    tau = rho;
    factor_.ftran(tau);
    const double w_row = weight[row];
    for (int i = 0; i < m_; ++i) {
      if (i == row || alpha[i] == 0.0) continue;
      const double r = alpha[i] / pivot_value;
      weight[i] = std::max(weight[i] - 2.0 * r * tau[i] + r * r * w_row, std::max(r * r, kMinWeight));
    }
    weight[row] = std::max(w_row / (pivot_value * pivot_value), kMinWeight);

    const double theta = d_[entering] / row_alpha[entering];
    for (int j = 0; j < n_ + m_; ++j) {
      if (row_alpha[j] != 0.0) d_[j] -= theta * row_alpha[j];
    }
    d_[entering] = 0.0;
    d_[leaving] = -theta;

    const double delta = (x_[leaving] - target) / pivot_value;
    x_[entering] += delta;
    for (int i = 0; i < m_; ++i) x_[head_[i]] -= alpha[i] * delta;
    pivot(entering, row, alpha, to_lower ? VarStatus::at_lower : VarStatus::at_upper);
  }
}

// Upper bound on the original maximization objective from the current basis, which is dual
// feasible for the working costs up to the tolerance. The cost perturbations and shifts and any
// remaining dual infeasibility are charged at their worst over the variable boxes.
double Simplex::dual_bound(const Eigen::VectorXd& original_cost) const {
  double working = 0.0, slack = 0.0;
  for (int j = 0; j < n_ + m_; ++j) {
    working += cost_[j] * x_[j];
    // Largest (working - original) cost times x over the box.
    const double diff = cost_[j] - original_cost[j];
    if (diff != 0.0) {
      double end = diff > 0.0 ? hi_[j] : lo_[j];
      if (!finite(end)) {
        // Drift shifts on one-sided variables are within the dual tolerance; charge them
        // at the current value.
        if (std::abs(diff) > kShiftLimit) return kInfinity;
        end = x_[j];
      }
      slack += diff * end;
    }
    if (status_[j] == VarStatus::basic || status_[j] == VarStatus::fixed) continue;
    const double wrong = status_[j] == VarStatus::at_lower   ? std::max(-d_[j], 0.0)
                         : status_[j] == VarStatus::at_upper ? std::max(d_[j], 0.0)
                                                             : std::abs(d_[j]);
    if (wrong > 0.0) {
      const double range = hi_[j] - lo_[j];
      if (!finite(range) && wrong <= kRoundoff) continue;  // round-off on a free direction
      if (!finite(range)) return kInfinity;
      slack += wrong * range;
    }
  }
  return -working + slack;
}

// Row `row` of B^{-1}[A -I] as a Farkas certificate: no movement of the nonbasic variables
// within their bounds brings the basic variable back to its violated bound.
bool Simplex::certify_infeasible(int row, const std::vector<double>& row_alpha) const {
  const int leaving = head_[row];
  const bool to_lower = x_[leaving] < lo_[leaving];
  double reach = 0.0;  // largest correction towards the violated bound
  for (int j = 0; j < n_ + m_; ++j) {
    const double a = row_alpha[j];
    if (a == 0.0 || status_[j] == VarStatus::basic || status_[j] == VarStatus::fixed) continue;
    // x_leaving changes by -a * dx_j; the sign we need is + when moving up to the lower bound.
    const double want = to_lower ? -a : a;
    double room = 0.0;
    switch (status_[j]) {
      case VarStatus::at_lower: room = want > 0.0 ? hi_[j] - lo_[j] : 0.0; break;
      case VarStatus::at_upper: room = want < 0.0 ? hi_[j] - lo_[j] : 0.0; break;
      default: room = kInfinity; break;
    }
    if (room == 0.0) continue;
    if (!finite(room)) {
      if (std::abs(a) < kRoundoff) continue;
      return false;
    }
    reach += std::abs(a) * room;
  }
  const double gap = to_lower ? lo_[leaving] - x_[leaving] : x_[leaving] - hi_[leaving];
  return gap - reach > options_.primal_tolerance;
}

SolveStatus Simplex::solve() {
  solve_start_ = iterations_;
  if (!refactor()) warm_ = false;
  Outcome outcome = Outcome::not_dual_feasible;
  if (warm_) outcome = dual();
  if (outcome == Outcome::limit) return SolveStatus::iteration_limit;
  if (outcome == Outcome::infeasible) return SolveStatus::infeasible;
  if (outcome == Outcome::cutoff) {
    warm_ = true;
    return SolveStatus::cutoff;
  }
  // The primal pass confirms a dual result (usually in zero pivots) or takes over.
  for (int attempt = 0; attempt < 3; ++attempt) {
    outcome = primal();
    if (outcome != Outcome::optimal) break;
    refactor();
    bool clean = true;
    for (int i = 0; i < m_ && clean; ++i) clean = infeasibility(head_[i]) <= options_.primal_tolerance;
    if (clean) break;
  }
  warm_ = true;
  switch (outcome) {
    case Outcome::optimal: return SolveStatus::optimal;
    case Outcome::unbounded: return SolveStatus::unbounded;
    case Outcome::limit: return SolveStatus::iteration_limit;
    default: return SolveStatus::infeasible;
  }
}

}  // namespace reach::opt

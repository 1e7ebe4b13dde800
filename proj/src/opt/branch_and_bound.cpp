#include "reach/opt/linear_program.hpp"
#include "reach/opt/simplex.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

namespace reach::opt {

namespace {

constexpr int kPrunedByStrongBranching = -2;

struct Node {
  std::vector<std::int8_t> fixing;  // per integer variable: -1 free, 0 or 1 fixed
  std::vector<VarStatus> basis;     // parent's optimal basis
  double bound = kInfinity;         // parent LP value
  int depth = 0;
  int branched = -1;                // integer slot fixed last, for the pseudocost update
  double distance = 0.0;            // how far that fixing moved the variable
};

// Average objective loss per unit change, per direction.
struct Pseudocost {
  double sum[2] = {0.0, 0.0};
  int count[2] = {0, 0};

  void record(int dir, double loss_per_unit) {
    sum[dir] += loss_per_unit;
    ++count[dir];
  }
  bool reliable() const { return count[0] > 0 && count[1] > 0; }
};

class BranchAndBound {
 public:
  BranchAndBound(const MixedIntegerProgram& mip, const MilpOptions& options)
      : mip_(mip), options_(options), simplex_(mip.lp, options.lp), start_(std::chrono::steady_clock::now()) {
    ints_ = mip.integer_indices;
    std::sort(ints_.begin(), ints_.end());
    ints_.erase(std::unique(ints_.begin(), ints_.end()), ints_.end());
    pseudocost_.resize(ints_.size());
  }

  SolveReport run();

 private:
  struct Processed {
    enum class Kind { pruned, integral, branched, unresolved } kind = Kind::pruned;
    double value = -kInfinity;
  };

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  double prune_threshold() const {
    if (!has_incumbent_) return -kInfinity;
    return incumbent_value_ + std::max(options_.gap_tolerance * std::abs(incumbent_value_), 1e-9);
  }
  void apply(const std::vector<std::int8_t>& fixing);
  Processed process(Node& node, Node& down, Node& up, bool& up_first);
  int select_branch(const Node& node, const Eigen::VectorXd& x, double value);
  double estimate(int k, int dir) const;
  void try_incumbent(const std::vector<std::int8_t>& fixing, const std::vector<VarStatus>& basis);
  void push(Node node);
  Node pop();

  const MixedIntegerProgram& mip_;
  MilpOptions options_;
  Simplex simplex_;
  std::chrono::steady_clock::time_point start_;
  std::vector<int> ints_;

  bool has_incumbent_ = false;
  double incumbent_value_ = -kInfinity;
  Eigen::VectorXd incumbent_;
  bool unresolved_ = false;
  bool root_unbounded_ = false;
  double pruned_bound_ = -kInfinity;  // largest bound discarded within the gap tolerance

  long next_id_ = 0;
  std::map<long, Node> open_;
  std::set<std::pair<double, long>> by_bound_;  // (-bound, id)
  std::set<std::pair<int, long>> by_depth_;     // (-depth, id)
  BranchAndBoundStats stats_;
  std::vector<Pseudocost> pseudocost_;
};

void BranchAndBound::apply(const std::vector<std::int8_t>& fixing) {
  for (std::size_t k = 0; k < ints_.size(); ++k) {
    const int j = ints_[k];
    if (fixing[k] < 0) {
      simplex_.set_bounds(j, mip_.lp.lower[j], mip_.lp.upper[j]);
    } else {
      simplex_.set_bounds(j, fixing[k], fixing[k]);
    }
  }
}

void BranchAndBound::try_incumbent(const std::vector<std::int8_t>& fixing, const std::vector<VarStatus>& basis) {
  apply(fixing);
  if (!basis.empty()) simplex_.set_statuses(basis);
  simplex_.set_cutoff(-kInfinity);
  if (simplex_.solve() != SolveStatus::optimal) return;
  Eigen::VectorXd x = simplex_.solution().cwiseMax(mip_.lp.lower).cwiseMin(mip_.lp.upper);
  for (std::size_t k = 0; k < ints_.size(); ++k) x[ints_[k]] = fixing[k];
  const double value = mip_.lp.objective.dot(x);
  if (!has_incumbent_ || value > incumbent_value_) {
    has_incumbent_ = true;
    incumbent_value_ = value;
    incumbent_ = std::move(x);
  }
}

void BranchAndBound::push(Node node) {
  const long id = next_id_++;
  by_bound_.emplace(-node.bound, id);
  by_depth_.emplace(-node.depth, id);
  open_.emplace(id, std::move(node));
}

Node BranchAndBound::pop() {
  long id = 0;
  if (open_.size() > options_.open_node_cap) {
    id = by_depth_.begin()->second;
  } else {
    id = by_bound_.begin()->second;
  }
  auto it = open_.find(id);
  Node node = std::move(it->second);
  open_.erase(it);
  by_bound_.erase({-node.bound, id});
  by_depth_.erase({-node.depth, id});
  return node;
}

BranchAndBound::Processed BranchAndBound::process(Node& node, Node& down, Node& up, bool& up_first) {
  ++stats_.nodes;
  stats_.max_depth = std::max(stats_.max_depth, node.depth);
  apply(node.fixing);
  if (!node.basis.empty()) simplex_.set_statuses(node.basis);
  simplex_.set_cutoff(prune_threshold());
  const SolveStatus status = simplex_.solve();
  if (status == SolveStatus::infeasible) return {Processed::Kind::pruned, -kInfinity};
  if (status == SolveStatus::cutoff) {
    pruned_bound_ = std::max(pruned_bound_, prune_threshold());
    return {Processed::Kind::pruned, prune_threshold()};
  }
  if (status == SolveStatus::unbounded) {
    if (stats_.nodes == 1) root_unbounded_ = true;
    return {Processed::Kind::unresolved, kInfinity};
  }
  if (status != SolveStatus::optimal) return {Processed::Kind::unresolved, node.bound};

  const double value = simplex_.objective();
  if (value <= prune_threshold()) {
    pruned_bound_ = std::max(pruned_bound_, value);
    return {Processed::Kind::pruned, value};
  }

  if (node.branched >= 0) {
    const int dir = node.fixing[node.branched];
    pseudocost_[node.branched].record(dir, std::max(node.bound - value, 0.0) / node.distance);
  }

  const Eigen::VectorXd x = simplex_.solution();
  const int branch = select_branch(node, x, value);
  if (branch == kPrunedByStrongBranching) return {Processed::Kind::pruned, -kInfinity};

  if (branch < 0) {
    std::vector<std::int8_t> rounded = node.fixing;
    for (std::size_t k = 0; k < ints_.size(); ++k) {
      if (rounded[k] < 0) rounded[k] = static_cast<std::int8_t>(std::lround(x[ints_[k]]));
    }
    try_incumbent(rounded, simplex_.statuses());
    return {Processed::Kind::integral, value};
  }

  const double frac = x[ints_[branch]] - std::floor(x[ints_[branch]]);
  up_first = frac >= 0.5;
  down.fixing = node.fixing;
  down.fixing[branch] = 0;
  up.fixing = node.fixing;
  up.fixing[branch] = 1;
  down.branched = up.branched = branch;
  down.distance = frac;
  up.distance = 1.0 - frac;
  down.basis = simplex_.statuses();
  up.basis = down.basis;
  down.bound = up.bound = value;
  down.depth = up.depth = node.depth + 1;
  return {Processed::Kind::branched, value};
}

double BranchAndBound::estimate(int k, int dir) const {
  const Pseudocost& pc = pseudocost_[k];
  if (pc.count[dir] > 0) return pc.sum[dir] / pc.count[dir];
  // Unobserved direction: fall back to the mean over all observed variables.
  double sum = 0.0;
  int count = 0;
  for (const auto& other : pseudocost_) {
    if (other.count[dir] > 0) {
      sum += other.sum[dir] / other.count[dir];
      ++count;
    }
  }
  return count > 0 ? sum / count : 1.0;
}

// Returns the integer slot to branch on, -1 when x is integral, or kPrunedByStrongBranching.
int BranchAndBound::select_branch(const Node& node, const Eigen::VectorXd& x, double value) {
  std::vector<int> fractional;
  for (std::size_t k = 0; k < ints_.size(); ++k) {
    if (node.fixing[k] >= 0) continue;
    const double frac = x[ints_[k]] - std::floor(x[ints_[k]]);
    if (frac > options_.integrality_tolerance && frac < 1.0 - options_.integrality_tolerance) {
      fractional.push_back(static_cast<int>(k));
    }
  }
  if (fractional.empty()) return -1;
  auto frac_of = [&](int k) { return x[ints_[k]] - std::floor(x[ints_[k]]); };

  if (options_.branching == Branching::most_fractional) {
    return *std::min_element(fractional.begin(), fractional.end(), [&](int a, int b) {
      return std::abs(frac_of(a) - 0.5) < std::abs(frac_of(b) - 0.5);
    });
  }

  // Strong branching on the most fractional unreliable candidates.
  std::vector<int> unreliable;
  for (int k : fractional) {
    if (!pseudocost_[k].reliable()) unreliable.push_back(k);
  }
  std::sort(unreliable.begin(), unreliable.end(),
            [&](int a, int b) { return std::abs(frac_of(a) - 0.5) < std::abs(frac_of(b) - 0.5); });
  if (static_cast<int>(unreliable.size()) > options_.strong_candidates) unreliable.resize(options_.strong_candidates);
  if (!unreliable.empty()) {
    const std::vector<VarStatus> basis = simplex_.statuses();
    for (int k : unreliable) {
      const int j = ints_[k];
      const double frac = frac_of(k);
      // A child that is infeasible or cut off needs no search of its own.
      bool infeasible[2] = {false, false};
      simplex_.set_cutoff(prune_threshold());
      for (int dir = 0; dir < 2; ++dir) {
        simplex_.set_bounds(j, dir, dir);
        simplex_.set_statuses(basis);
        const SolveStatus status = simplex_.solve();
        if (status == SolveStatus::infeasible) {
          infeasible[dir] = true;
        } else if (status == SolveStatus::cutoff) {
          infeasible[dir] = true;
          pruned_bound_ = std::max(pruned_bound_, prune_threshold());
          pseudocost_[k].record(dir, std::max(value - prune_threshold(), 0.0) / (dir == 0 ? frac : 1.0 - frac));
        } else if (status == SolveStatus::optimal) {
          const double loss = std::max(value - simplex_.objective(), 0.0);
          pseudocost_[k].record(dir, loss / (dir == 0 ? frac : 1.0 - frac));
        }
      }
      simplex_.set_bounds(j, mip_.lp.lower[j], mip_.lp.upper[j]);
      if (infeasible[0] && infeasible[1]) {
        simplex_.set_statuses(basis);
        return kPrunedByStrongBranching;
      }
      // One side is infeasible: branching here closes it immediately.
      if (infeasible[0] || infeasible[1]) {
        simplex_.set_statuses(basis);
        return k;
      }
    }
    simplex_.set_statuses(basis);
  }

  int best = -1;
  double best_score = -1.0;
  for (int k : fractional) {
    const double frac = frac_of(k);
    const double score = std::max(frac * estimate(k, 0), 1e-6) * std::max((1.0 - frac) * estimate(k, 1), 1e-6);
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  return best;
}

SolveReport BranchAndBound::run() {
  SolveReport report;
  const std::vector<std::int8_t> free_fixing(ints_.size(), -1);

  if (options_.initial_solution && options_.initial_solution->size() == mip_.lp.num_variables()) {
    std::vector<std::int8_t> fixing(ints_.size());
    for (std::size_t k = 0; k < ints_.size(); ++k) {
      fixing[k] = static_cast<std::int8_t>(std::lround((*options_.initial_solution)[ints_[k]]) != 0);
    }
    try_incumbent(fixing, {});
  }

  Node current;
  current.fixing = free_fixing;
  bool have_current = true;
  SolveStatus limit_status = SolveStatus::optimal;

  while (have_current || !open_.empty()) {
    if (stats_.nodes >= options_.node_limit) {
      limit_status = SolveStatus::node_limit;
      break;
    }
    if (elapsed() >= options_.time_limit) {
      limit_status = SolveStatus::time_limit;
      break;
    }
    if (!have_current) {
      current = pop();
      if (current.bound <= prune_threshold()) {
        pruned_bound_ = std::max(pruned_bound_, current.bound);
        continue;
      }
    }
    Node down, up;
    bool up_first = true;
    const Processed result = process(current, down, up, up_first);
    have_current = false;
    if (result.kind == Processed::Kind::unresolved) {
      unresolved_ = true;
      continue;
    }
    if (result.kind != Processed::Kind::branched) continue;
    if (up_first) {
      push(std::move(down));
      current = std::move(up);
    } else {
      push(std::move(up));
      current = std::move(down);
    }
    have_current = true;
  }

  double open_bound = -kInfinity;
  if (!by_bound_.empty()) open_bound = -by_bound_.begin()->first;
  if (have_current) open_bound = std::max(open_bound, current.bound);

  stats_.lp_iterations = simplex_.iterations();
  report.iterations = simplex_.iterations();
  if (has_incumbent_) {
    report.solution = incumbent_;
    report.objective = incumbent_value_;
    stats_.best_bound = std::max(incumbent_value_, open_bound);
    stats_.relative_gap = (stats_.best_bound - incumbent_value_) / std::max(std::abs(incumbent_value_), 1e-9);
  } else {
    stats_.best_bound = open_bound;
  }

  if (root_unbounded_) {
    report.status = SolveStatus::unbounded;
    report.objective = kInfinity;
  } else if (limit_status != SolveStatus::optimal) {
    report.status = limit_status;
  } else if (unresolved_) {
    report.status = has_incumbent_ ? SolveStatus::gap_limit : SolveStatus::infeasible;
  } else {
    report.status = has_incumbent_ ? SolveStatus::optimal : SolveStatus::infeasible;
    if (has_incumbent_) {
      stats_.best_bound = std::max(incumbent_value_, pruned_bound_);
      stats_.relative_gap =
          (stats_.best_bound - incumbent_value_) / std::max(std::abs(incumbent_value_), 1e-9);
    }
  }
  report.stats = stats_;
  report.wall_time = elapsed();
  return report;
}

}  // namespace

SolveReport solve_milp(const MixedIntegerProgram& mip, const MilpOptions& options) {
  mip.validate();
  BranchAndBound bnb(mip, options);
  return bnb.run();
}

}  // namespace reach::opt

#pragma once

// Exhaustive stance search: every injective partial assignment of booms to candidate sites,
// each scored by vertex-enumeration LPs. Test-only; independent of the simplex code.

#include "reach/stance_planner.hpp"
#include "support/lp_oracle.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace reach::testing {

/// Largest s with sum t_i g_i + [0; tau] - s * direction = w feasible, or -inf when w is unachievable.
inline double max_step(const GeneratorSet& gen, const Wrench& w, const Wrench& direction) {
  const int n = gen.size();
  const double box = gen.torque_box();
  const int nt = box > 0.0 ? 3 : 0;
  const int nv = n + nt + 1;
  Eigen::MatrixXd a(6, nv);
  a.setZero();
  for (int i = 0; i < n; ++i) a.col(i) = gen.generators[i];
  for (int c = 0; c < nt; ++c) a(3 + c, n + c) = 1.0;
  a.col(nv - 1) = -direction;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(nv), hi(nv), c = Eigen::VectorXd::Zero(nv);
  for (int i = 0; i < n; ++i) hi[i] = gen.upper[i];
  for (int k = 0; k < nt; ++k) {
    lo[n + k] = -box;
    hi[n + k] = box;
  }
  hi[nv - 1] = 1e6;
  c[nv - 1] = 1.0;
  const auto lp = opt::LinearProgram::from_dense(c, a, w, Eigen::MatrixXd(0, nv), Eigen::VectorXd(0), lo, hi);
  const VertexOptimum r = vertex_enumeration(lp, 1e-9);
  return r.feasible ? r.objective : -std::numeric_limits<double>::infinity();
}

struct EnumeratedStance {
  double margin = -std::numeric_limits<double>::infinity();
  std::vector<int> assignment;
  bool feasible() const { return std::isfinite(margin); }
};

inline double oracle_margin(const StanceProblem& problem, const std::vector<int>& assignment) {
  double margin = std::numeric_limits<double>::infinity();
  for (int l = 0; l < problem.num_poses(); ++l) {
    const GeneratorSet gen = stance_generators(problem.robot, problem.sites, assignment, problem.poses[l]);
    for (int k = 0; k < problem.polytope.size(); ++k) {
      const double s = max_step(gen, problem.desired[l], problem.polytope.basis[k]);
      margin = std::min(margin, s / problem.polytope.weights[k]);
    }
  }
  return margin;
}

/// Calls `visit` on every injective assignment drawn from the problem's candidate pairs.
inline void for_each_assignment(const StanceProblem& problem, const std::function<void(const std::vector<int>&)>& visit) {
  const int booms = problem.robot.num_booms();
  std::vector<int> assignment(booms, -1);
  std::vector<bool> used(problem.sites.size(), false);
  std::function<void(int)> recurse = [&](int boom) {
    if (boom == booms) {
      visit(assignment);
      return;
    }
    recurse(boom + 1);
    for (const auto& pair : problem.pairs) {
      if (pair.boom != boom || used[pair.site]) continue;
      used[pair.site] = true;
      assignment[boom] = pair.site;
      recurse(boom + 1);
      assignment[boom] = -1;
      used[pair.site] = false;
    }
  };
  recurse(0);
}

inline EnumeratedStance enumerate_optimal(const StanceProblem& problem) {
  EnumeratedStance best;
  for_each_assignment(problem, [&](const std::vector<int>& assignment) {
    const double m = oracle_margin(problem, assignment);
    if (m > best.margin) {
      best.margin = m;
      best.assignment = assignment;
    }
  });
  return best;
}

}  // namespace reach::testing

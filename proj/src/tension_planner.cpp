#include "reach/tension_planner.hpp"

#include "reach/opt/linear_program.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace reach {

namespace {

constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;
constexpr double kTailStart = -20.0;  // below this, erfc loses relative accuracy soon after

// (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...) - 1, summed while the terms shrink.
double tail_series_minus_one(double x) {
  const double inv = 1.0 / (x * x);
  double term = 1.0, sum = 0.0;
  for (int k = 1; k < 40; ++k) {
    const double next = -term * (2 * k - 1) * inv;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
  }
  return sum;
}

// x + phi(x)/Phi(x), without the cancellation in the far left tail.
double hazard_shift(double x) {
  if (x < kTailStart) {
    const double s = tail_series_minus_one(x);
    return x * s / (1.0 + s);
  }
  return x + gaussian_hazard(x);
}

}  // namespace

double log_gaussian_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * M_SQRT1_2));
  if (x >= kTailStart) return std::log(0.5 * std::erfc(-x * M_SQRT1_2));
  // Phi(x) = phi(x) / (-x) * (1 - 1/x^2 + 3/x^4 - ...)
  return -0.5 * x * x - kLogSqrt2Pi - std::log(-x) + std::log1p(tail_series_minus_one(x));
}

double gaussian_hazard(double x) {
  if (x < kTailStart) return -x / (1.0 + tail_series_minus_one(x));
  return std::exp(-0.5 * x * x - kLogSqrt2Pi - log_gaussian_cdf(x));
}

void TensionProblem::validate() const {
  generators.validate();
  const auto n = static_cast<std::size_t>(size());
  if (pull_mean.size() != n || pull_std.size() != n) {
    throw std::invalid_argument("tension problem: one pull model per generator");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(pull_mean[i])) throw std::invalid_argument("tension problem: pull mean must be finite");
    if (!(pull_std[i] > 0.0) || !std::isfinite(pull_std[i])) {
      throw std::invalid_argument("tension problem: pull std must be positive");
    }
  }
  if (!desired.allFinite()) throw std::invalid_argument("tension problem: desired wrench must be finite");
}

TensionProblem make_tension_problem(const GeneratorSet& generators, const std::vector<GraspSite>& sites,
                                    const Wrench& desired) {
  if (static_cast<int>(sites.size()) != generators.size()) {
    throw std::invalid_argument("tension problem: one site per generator");
  }
  TensionProblem p;
  p.generators = generators;
  p.desired = desired;
  for (const auto& s : sites) {
    p.pull_mean.push_back(s.pull_mean);
    p.pull_std.push_back(s.pull_std);
  }
  return p;
}

double tension_objective(const TensionProblem& problem, const Eigen::VectorXd& tensions) {
  double f = 0.0;
  for (int i = 0; i < problem.size(); ++i) {
    f += log_gaussian_cdf((problem.pull_mean[i] - tensions[i]) / problem.pull_std[i]);
  }
  return f;
}

Eigen::VectorXd tension_gradient(const TensionProblem& problem, const Eigen::VectorXd& tensions) {
  Eigen::VectorXd g(problem.size());
  for (int i = 0; i < problem.size(); ++i) {
    const double s = problem.pull_std[i];
    g[i] = -gaussian_hazard((problem.pull_mean[i] - tensions[i]) / s) / s;
  }
  return g;
}

std::string to_string(TensionStatus status) {
  switch (status) {
    case TensionStatus::optimal: return "optimal";
    case TensionStatus::infeasible: return "infeasible";
    case TensionStatus::not_converged: return "not_converged";
  }
  return "unknown";
}

namespace {

// Variables v = (t, tau): limb tensions, then the shoulder torque box when it is non-degenerate.
struct Layout {
  const TensionProblem* problem = nullptr;
  int n = 0;  // limbs
  int size = 0;
  Eigen::MatrixXd a;  // 6 x size
  Eigen::VectorXd lo, hi;

  explicit Layout(const TensionProblem& p) : problem(&p), n(p.size()) {
    const double box = p.generators.torque_box();
    size = n + (box > 0.0 ? 3 : 0);
    a = Eigen::MatrixXd::Zero(6, size);
    lo = Eigen::VectorXd::Zero(size);
    hi = Eigen::VectorXd::Zero(size);
    for (int i = 0; i < n; ++i) {
      a.col(i) = p.generators.generators[i];
      hi[i] = p.generators.upper[i];
    }
    for (int k = n; k < size; ++k) {
      a(3 + k - n, k) = 1.0;
      lo[k] = -box;
      hi[k] = box;
    }
  }

  double objective(const Eigen::VectorXd& v) const { return tension_objective(*problem, v.head(n)); }

  // Gradient and diagonal Hessian of the objective over all variables.
  void derivatives(const Eigen::VectorXd& v, Eigen::VectorXd& g, Eigen::VectorXd& h) const {
    g = Eigen::VectorXd::Zero(size);
    h = Eigen::VectorXd::Zero(size);
    for (int i = 0; i < n; ++i) {
      const double s = problem->pull_std[i];
      const double x = (problem->pull_mean[i] - v[i]) / s;
      const double r = gaussian_hazard(x);
      g[i] = -r / s;
      h[i] = -r * hazard_shift(x) / (s * s);
    }
  }
};

// Orthonormal basis of the null space of `a`.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, double rank_tolerance) {
  if (a.cols() == 0) return Eigen::MatrixXd(0, 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = rank_tolerance * (sv.size() > 0 ? sv[0] : 0.0);
  int rank = 0;
  for (int k = 0; k < sv.size(); ++k) rank += sv[k] > cut && sv[k] > 0.0;
  return svd.matrixV().rightCols(a.cols() - rank);
}

// Least-squares correction of `v` (restricted to `cols`) towards a v = w.
void project_to_equality(const Eigen::MatrixXd& a, const Eigen::VectorXd& w, const std::vector<int>& cols,
                         Eigen::VectorXd& v, double rank_tolerance) {
  if (cols.empty()) return;
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(rank_tolerance);
  const Eigen::VectorXd dv = svd.solve(w - a * v);
  for (std::size_t k = 0; k < cols.size(); ++k) v[cols[k]] += dv[static_cast<Eigen::Index>(k)];
}

struct InteriorPoint {
  Eigen::VectorXd v;
  double depth = 0.0;  // smallest scaled distance to a bound over the free variables
};

// Phase one: maximize the scaled distance to the bounds of the free variables subject to the
// equality rows. Returns nullopt when the rows cannot be met in the box.
std::optional<InteriorPoint> deepest_point(const Layout& lay, const Wrench& w, const Eigen::VectorXd& fixed_value,
                                           const std::vector<bool>& fixed) {
  opt::LinearProgramBuilder b;
  std::vector<int> var(lay.size, -1);
  for (int j = 0; j < lay.size; ++j) {
    if (!fixed[j]) var[j] = b.add_variable(lay.lo[j], lay.hi[j]);
  }
  const int depth = b.add_variable(0.0, 0.5, 1.0);
  for (int r = 0; r < 6; ++r) {
    std::vector<std::pair<int, double>> terms;
    double rhs = w[r];
    for (int j = 0; j < lay.size; ++j) {
      if (lay.a(r, j) == 0.0) continue;
      if (fixed[j]) {
        rhs -= lay.a(r, j) * fixed_value[j];
      } else {
        terms.emplace_back(var[j], lay.a(r, j));
      }
    }
    if (terms.empty()) {
      if (std::abs(rhs) > 1e-9 * (1.0 + w.norm())) return std::nullopt;
      continue;
    }
    b.add_eq_row(terms, rhs);
  }
  for (int j = 0; j < lay.size; ++j) {
    if (fixed[j]) continue;
    const double range = lay.hi[j] - lay.lo[j];
    b.add_ub_row({{var[j], -1.0}, {depth, range}}, -lay.lo[j]);
    b.add_ub_row({{var[j], 1.0}, {depth, range}}, lay.hi[j]);
  }
  const auto r = opt::solve_lp(b.build());
  if (r.status != opt::SolveStatus::optimal) return std::nullopt;
  InteriorPoint p;
  p.v = fixed_value;
  for (int j = 0; j < lay.size; ++j) {
    if (!fixed[j]) p.v[j] = std::clamp(r.solution[var[j]], lay.lo[j], lay.hi[j]);
  }
  p.depth = r.solution[depth];
  return p;
}

// Variables pinned to one value over the whole feasible set.
void fix_implicit_equalities(const Layout& lay, const Wrench& w, Eigen::VectorXd& value, std::vector<bool>& fixed) {
  opt::LinearProgramBuilder b;
  std::vector<int> var(lay.size, -1);
  for (int j = 0; j < lay.size; ++j) var[j] = b.add_variable(lay.lo[j], lay.hi[j]);
  for (int r = 0; r < 6; ++r) {
    std::vector<std::pair<int, double>> terms;
    for (int j = 0; j < lay.size; ++j) {
      if (lay.a(r, j) != 0.0) terms.emplace_back(var[j], lay.a(r, j));
    }
    if (!terms.empty()) b.add_eq_row(terms, w[r]);
  }
  opt::LinearProgram lp = b.build();
  for (int j = 0; j < lay.size; ++j) {
    if (fixed[j]) continue;
    double ends[2];
    bool ok = true;
    for (int side = 0; side < 2; ++side) {
      lp.objective.setZero();
      lp.objective[var[j]] = side == 0 ? 1.0 : -1.0;
      const auto r = opt::solve_lp(lp);
      ok = ok && r.status == opt::SolveStatus::optimal;
      ends[side] = ok ? r.solution[var[j]] : 0.0;
    }
    if (ok && ends[0] - ends[1] <= 1e-9 * (1.0 + lay.hi[j] - lay.lo[j])) {
      fixed[j] = true;
      value[j] = 0.5 * (ends[0] + ends[1]);
    }
  }
}

struct Kkt {
  double projected_gradient = 0.0;
  bool signs_ok = true;
};

// First-order optimality of `v` with the variables in `active` held at their bounds.
Kkt kkt_measure(const Layout& lay, const Eigen::VectorXd& v, const std::vector<bool>& active,
                double rank_tolerance) {
  Eigen::VectorXd g, h;
  lay.derivatives(v, g, h);
  std::vector<int> free;
  for (int j = 0; j < lay.size; ++j) {
    if (!active[j]) free.push_back(j);
  }
  Eigen::MatrixXd a_free(6, static_cast<Eigen::Index>(free.size()));
  Eigen::VectorXd g_free(static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) {
    a_free.col(static_cast<Eigen::Index>(k)) = lay.a.col(free[k]);
    g_free[static_cast<Eigen::Index>(k)] = g[free[k]];
  }
  Kkt out;
  const double scale = 1.0 + g.norm();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(6);
  if (!free.empty()) {
    const Eigen::MatrixXd z = null_space(a_free, rank_tolerance);
    if (z.cols() > 0) out.projected_gradient = (z.transpose() * g_free).norm() / scale;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_free.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(rank_tolerance);
    lambda = svd.solve(g_free);
  }
  // Multiplier of each active bound: moving inward must not improve the objective.
  for (int j = 0; j < lay.size; ++j) {
    if (!active[j]) continue;
    const double reduced = g[j] - lay.a.col(j).dot(lambda);
    const bool at_lower = v[j] - lay.lo[j] <= lay.hi[j] - v[j];
    const double wrong = at_lower ? reduced : -reduced;
    if (wrong > 1e-9 * scale) out.signs_ok = false;
    out.projected_gradient = std::max(out.projected_gradient, std::max(wrong, 0.0) / scale);
  }
  return out;
}

// Active-set Newton from a feasible point: Newton steps on the objective over the null space of
// the free variables, a bound is added when it blocks a step and released when its multiplier
// has the wrong sign. The barrier leaves flat objectives far from their bounds; this finishes
// them. Returns the scaled first-order residual of the final point.
double refine_active_set(const Layout& lay, const Wrench& w, const std::vector<bool>& fixed, double rank_tolerance,
                         Eigen::VectorXd& v, int& steps) {
  const Eigen::VectorXd start = v;
  std::vector<bool> active = fixed;
  auto snap = [&](int j) {
    active[j] = true;
    v[j] = v[j] - lay.lo[j] <= lay.hi[j] - v[j] ? lay.lo[j] : lay.hi[j];
  };
  auto near_bound = [&](int j, double tol) {
    return std::min(v[j] - lay.lo[j], lay.hi[j] - v[j]) <= tol * (1.0 + lay.hi[j] - lay.lo[j]);
  };
  for (int j = 0; j < lay.size; ++j) {
    if (!active[j] && near_bound(j, 1e-9)) snap(j);
  }

  for (int it = 0; it < 100; ++it) {
    std::vector<int> rest;
    for (int j = 0; j < lay.size; ++j) {
      if (!active[j]) rest.push_back(j);
    }
    // Snapping moved v off the rows; restore them with the free variables.
    project_to_equality(lay.a, w, rest, v, rank_tolerance);
    bool moved = false;
    for (int j : rest) {
      if (v[j] < lay.lo[j] || v[j] > lay.hi[j]) {
        if (!near_bound(j, 1e-9)) moved = true;
        snap(j);
      }
    }
    if (moved) continue;

    const auto nr = static_cast<Eigen::Index>(rest.size());
    Eigen::VectorXd g, h;
    lay.derivatives(v, g, h);
    Eigen::MatrixXd a_rest(6, nr);
    Eigen::VectorXd g_rest(nr), h_rest(nr);
    for (Eigen::Index k = 0; k < nr; ++k) {
      a_rest.col(k) = lay.a.col(rest[k]);
      g_rest[k] = g[rest[k]];
      h_rest[k] = h[rest[k]];
    }
    const Eigen::MatrixXd z = nr > 0 ? null_space(a_rest, rank_tolerance) : Eigen::MatrixXd(0, 0);
    bool stepped = false;
    if (z.cols() > 0) {
      const Eigen::VectorXd gy = z.transpose() * g_rest;
      if (gy.norm() > 1e-14 * (1.0 + g.norm())) {
        const Eigen::MatrixXd neg_h = -(z.transpose() * h_rest.asDiagonal() * z);
        Eigen::VectorXd dy = neg_h.ldlt().solve(gy);
        if (!dy.allFinite() || gy.dot(dy) <= 0.0) dy = gy;
        const Eigen::VectorXd d = z * dy;
        double alpha_max = std::numeric_limits<double>::infinity();
        int blocking = -1;
        for (Eigen::Index k = 0; k < nr; ++k) {
          const int j = rest[k];
          const double reach = d[k] < 0.0 ? (v[j] - lay.lo[j]) / -d[k]
                               : d[k] > 0.0 ? (lay.hi[j] - v[j]) / d[k]
                                            : std::numeric_limits<double>::infinity();
          if (reach < alpha_max) {
            alpha_max = reach;
            blocking = j;
          }
        }
        double alpha = std::min(1.0, alpha_max);
        const double f0 = lay.objective(v), slope = gy.dot(dy);
        Eigen::VectorXd trial = v;
        for (int backtrack = 0; backtrack < 60; ++backtrack) {
          trial = v;
          for (Eigen::Index k = 0; k < nr; ++k) trial[rest[k]] += alpha * d[k];
          if (lay.objective(trial) >= f0 + 1e-4 * alpha * slope) break;
          alpha *= 0.5;
        }
        if (alpha * d.cwiseAbs().maxCoeff() > 1e-15 * (1.0 + v.cwiseAbs().maxCoeff())) {
          const bool blocked = alpha == alpha_max;
          v = trial;
          ++steps;
          if (blocked) snap(blocking);
          stepped = true;
        }
      }
    }
    if (stepped) continue;

    // Stationary on this face: release the bound whose multiplier is most wrong.
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(6);
    if (nr > 0) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_rest.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
      svd.setThreshold(rank_tolerance);
      lambda = svd.solve(g_rest);
    }
    int release = -1;
    double worst = 1e-12 * (1.0 + g.norm());
    for (int j = 0; j < lay.size; ++j) {
      if (!active[j] || fixed[j]) continue;
      const double reduced = g[j] - lay.a.col(j).dot(lambda);
      const double wrong = v[j] == lay.lo[j] ? reduced : -reduced;
      if (wrong > worst) {
        worst = wrong;
        release = j;
      }
    }
    if (release < 0) break;
    active[release] = false;
  }

  bool inside = v.allFinite();
  for (int j = 0; j < lay.size && inside; ++j) inside = v[j] >= lay.lo[j] && v[j] <= lay.hi[j];
  if (!inside || lay.objective(v) < lay.objective(start) - 1e-12) {
    v = start;
    active = fixed;
    for (int j = 0; j < lay.size; ++j) active[j] = active[j] || near_bound(j, 1e-7);
  }
  return kkt_measure(lay, v, active, rank_tolerance).projected_gradient;
}

}  // namespace

TensionPlan solve_tensions(const TensionProblem& problem, const TensionOptions& options) {
  problem.validate();
  const Layout lay(problem);
  const Wrench& w = problem.desired;
  TensionPlan plan;

  Eigen::VectorXd value = Eigen::VectorXd::Zero(lay.size);
  std::vector<bool> fixed(lay.size, false);
  for (int j = 0; j < lay.size; ++j) {
    if (lay.hi[j] - lay.lo[j] <= 0.0) {
      fixed[j] = true;
      value[j] = lay.lo[j];
    }
  }

  auto start = deepest_point(lay, w, value, fixed);
  if (!start) {
    plan.status = TensionStatus::infeasible;
    return plan;
  }
  if (start->depth <= 1e-9) {
    // No strictly interior point: pin the variables the rows force to one value, then retry.
    fix_implicit_equalities(lay, w, value, fixed);
    start = deepest_point(lay, w, value, fixed);
    if (!start) {
      plan.status = TensionStatus::infeasible;
      return plan;
    }
  }

  std::vector<int> free;
  for (int j = 0; j < lay.size; ++j) {
    if (!fixed[j]) free.push_back(j);
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  Eigen::VectorXd v = start->v;
  {
    // Tighten the equality residual of the LP point when that keeps it interior.
    Eigen::VectorXd corrected = v;
    project_to_equality(lay.a, w, free, corrected, options.rank_tolerance);
    bool interior = true;
    for (int j : free) interior = interior && corrected[j] > lay.lo[j] && corrected[j] < lay.hi[j];
    if (interior) v = corrected;
  }

  Eigen::MatrixXd a_free(6, nf);
  for (Eigen::Index k = 0; k < nf; ++k) a_free.col(k) = lay.a.col(free[k]);
  const Eigen::MatrixXd z = null_space(a_free, options.rank_tolerance);
  const auto p = z.cols();

  // Barrier: minimize -f(v) - mu sum_j [log(v_j - lo_j) + log(hi_j - v_j)] over v = v0 + Z y.
  auto barrier_value = [&](const Eigen::VectorXd& x, double mu) {
    double phi = -lay.objective(x);
    for (int j : free) phi -= mu * (std::log(x[j] - lay.lo[j]) + std::log(lay.hi[j] - x[j]));
    return phi;
  };
  int steps = 0;
  bool budget_hit = false;
  if (p > 0) {
    double mu = 1.0;
    for (;;) {
      for (int inner = 0; inner < 100; ++inner) {
        if (steps >= options.max_newton_steps) {
          budget_hit = true;
          break;
        }
        Eigen::VectorXd g, h;
        lay.derivatives(v, g, h);
        Eigen::VectorXd gf(nf), hf(nf);
        for (Eigen::Index k = 0; k < nf; ++k) {
          const int j = free[k];
          const double dl = v[j] - lay.lo[j], du = lay.hi[j] - v[j];
          gf[k] = -g[j] - mu / dl + mu / du;
          hf[k] = -h[j] + mu / (dl * dl) + mu / (du * du);
        }
        const Eigen::VectorXd gy = z.transpose() * gf;
        const Eigen::MatrixXd hy = z.transpose() * hf.asDiagonal() * z;
        const Eigen::VectorXd dy = -hy.ldlt().solve(gy);
        const double decrement = -gy.dot(dy);
        if (!(decrement > 1e-14)) break;
        const Eigen::VectorXd dv = z * dy;
        double alpha = 1.0;
        for (Eigen::Index k = 0; k < nf; ++k) {
          const int j = free[k];
          if (dv[k] < 0.0) alpha = std::min(alpha, 0.99 * (v[j] - lay.lo[j]) / -dv[k]);
          if (dv[k] > 0.0) alpha = std::min(alpha, 0.99 * (lay.hi[j] - v[j]) / dv[k]);
        }
        const double phi0 = barrier_value(v, mu);
        Eigen::VectorXd trial = v;
        for (int backtrack = 0; backtrack < 60; ++backtrack) {
          trial = v;
          for (Eigen::Index k = 0; k < nf; ++k) trial[free[k]] += alpha * dv[k];
          if (barrier_value(trial, mu) <= phi0 - 0.25 * alpha * decrement) break;
          alpha *= 0.5;
        }
        v = trial;
        ++steps;
        if (decrement < 1e-12) break;
      }
      if (budget_hit || 2.0 * static_cast<double>(nf) * mu <= options.duality_tolerance) break;
      mu *= options.barrier_decrease;
    }
  }

  plan.projected_gradient = refine_active_set(lay, w, fixed, options.rank_tolerance, v, steps);

  plan.tensions = v.head(lay.n);
  if (lay.size > lay.n) plan.shoulder_torque = v.tail(3);
  plan.log_success = lay.objective(v);
  plan.residual = (lay.a * v - w).norm();
  plan.newton_steps = steps;
  plan.status = plan.residual <= options.residual_tolerance && !budget_hit ? TensionStatus::optimal
                                                                            : TensionStatus::not_converged;
  return plan;
}

double success_probability(const TensionPlan& plan, const TensionProblem& problem) {
  if (plan.tensions.size() != problem.size()) throw std::invalid_argument("plan and problem sizes differ");
  return std::exp(tension_objective(problem, plan.tensions));
}

}  // namespace reach

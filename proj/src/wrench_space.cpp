#include "reach/wrench_space.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace reach {

namespace {

// Variables: t_i in [0, u_i], then tau (3, only when the torque box is open), then s >= 0 if
// `direction` is nonzero. Rows: sum t_i g_i + [0; tau] - s * direction = w.
opt::LinearProgram wrench_program(const GeneratorSet& gen, const Wrench& w, const Wrench& direction) {
  opt::LinearProgramBuilder b;
  const int n = gen.size();
  for (int i = 0; i < n; ++i) b.add_variable(0.0, gen.upper[i]);
  const double box = gen.torque_box();
  int tau = -1;
  if (box > 0.0) {
    tau = b.add_variable(-box, box);
    b.add_variable(-box, box);
    b.add_variable(-box, box);
  }
  int s = -1;
  if (direction.squaredNorm() > 0.0) s = b.add_variable(0.0, opt::kInfinity, 1.0);
  std::vector<std::pair<int, double>> terms;
  for (int r = 0; r < 6; ++r) {
    terms.clear();
    for (int i = 0; i < n; ++i) terms.emplace_back(i, gen.generators[i][r]);
    if (tau >= 0 && r >= 3) terms.emplace_back(tau + r - 3, 1.0);
    if (s >= 0) terms.emplace_back(s, -direction[r]);
    b.add_eq_row(terms, w[r]);
  }
  return b.build();
}

}  // namespace

void GeneratorSet::validate() const {
  if (generators.size() != upper.size()) throw std::invalid_argument("generator set: one bound per generator");
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (!(upper[i] >= 0.0) || !std::isfinite(upper[i])) {
      throw std::invalid_argument("generator set: bound " + std::to_string(i) + " must be finite and >= 0");
    }
    if (!generators[i].allFinite() || std::abs(generators[i].head<3>().norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("generator set: force part of generator " + std::to_string(i) + " must be unit");
    }
  }
  if (!(shoulder_moment >= 0.0) || attached_count < 0) {
    throw std::invalid_argument("generator set: shoulder moment and attached count must be non-negative");
  }
}

void TaskPolytope::validate() const {
  if (basis.empty()) throw std::invalid_argument("task polytope needs at least one basis wrench");
  if (basis.size() != weights.size()) throw std::invalid_argument("task polytope: one weight per basis wrench");
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (std::abs(basis[k].norm() - 1.0) > 1e-9) throw std::invalid_argument("task basis wrenches must be unit");
    if (!(weights[k] > 0.0) || !std::isfinite(weights[k])) {
      throw std::invalid_argument("task polytope weights must be positive");
    }
  }
}

TaskPolytope TaskPolytope::axis_aligned(const Vec6& stds, double floor) {
  TaskPolytope poly;
  for (int a = 0; a < 6; ++a) {
    const double w = std::max(stds[a], floor);
    for (double sign : {1.0, -1.0}) {
      poly.basis.push_back(sign * Wrench::Unit(a));
      poly.weights.push_back(w);
    }
  }
  return poly;
}

bool is_torque_direction(const Wrench& direction) {
  return direction.tail<3>().squaredNorm() > direction.head<3>().squaredNorm();
}

bool achievable(const GeneratorSet& gen, const Wrench& w) {
  gen.validate();
  if (gen.size() == 0) {
    const double box = gen.torque_box();
    return w.head<3>().cwiseAbs().maxCoeff() <= 1e-9 && w.tail<3>().cwiseAbs().maxCoeff() <= box + 1e-9;
  }
  return opt::solve_lp(wrench_program(gen, w, Wrench::Zero())).status == opt::SolveStatus::optimal;
}

MarginResult inscribed_margin(const GeneratorSet& gen, const Wrench& w_des, const TaskPolytope& poly) {
  gen.validate();
  poly.validate();
  MarginResult result;
  if (!achievable(gen, w_des)) return result;
  result.achievable = true;
  result.margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < poly.size(); ++k) {
    double s = 0.0;
    if (gen.size() > 0) {
      const auto report = opt::solve_lp(wrench_program(gen, w_des, poly.basis[k]));
      // w_des itself is feasible, so only an unbounded ray could fail; the set is bounded.
      if (report.status != opt::SolveStatus::optimal) {
        throw std::runtime_error("inscribed_margin: direction LP ended with status " + to_string(report.status));
      }
      s = std::max(report.objective, 0.0);
    } else if (poly.basis[k].head<3>().isZero(1e-12)) {
      // Pure torque box: distance to the face along the direction.
      const Vec3 d = poly.basis[k].tail<3>();
      s = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) > 1e-12) {
          const double face = d[a] > 0 ? gen.torque_box() - w_des[3 + a] : gen.torque_box() + w_des[3 + a];
          s = std::min(s, std::max(face, 0.0) / std::abs(d[a]));
        }
      }
    }
    result.scaled.push_back(s / poly.weights[k]);
    result.margin = std::min(result.margin, result.scaled.back());
  }
  return result;
}

double torque_weight_factor(const TaskPolytope& poly, double orientation_error) {
  poly.validate();
  if (!(orientation_error >= 0.0) || !std::isfinite(orientation_error)) {
    throw std::invalid_argument("orientation error must be finite and non-negative");
  }
  double force = 0.0, torque = 0.0;
  for (int k = 0; k < poly.size(); ++k) {
    (is_torque_direction(poly.basis[k]) ? torque : force) += poly.weights[k] * poly.weights[k];
  }
  if (torque == 0.0) throw std::invalid_argument("torque re-weighting needs a torque-weighted basis direction");
  return 1.0 + std::sqrt(force) * orientation_error / std::sqrt(torque);
}

TaskPolytope scale_torque_weights(const TaskPolytope& poly, double orientation_error) {
  const double lambda = torque_weight_factor(poly, orientation_error);
  TaskPolytope scaled = poly;
  for (int k = 0; k < scaled.size(); ++k) {
    if (is_torque_direction(scaled.basis[k])) scaled.weights[k] *= lambda;
  }
  return scaled;
}

std::vector<Wrench> support_points(const GeneratorSet& gen, const std::vector<Wrench>& directions) {
  gen.validate();
  std::vector<Wrench> points;
  points.reserve(directions.size());
  const double box = gen.torque_box();
  for (const Wrench& d : directions) {
    Wrench w = Wrench::Zero();
    for (int i = 0; i < gen.size(); ++i) {
      if (d.dot(gen.generators[i]) > 0.0) w += gen.upper[i] * gen.generators[i];
    }
    for (int a = 3; a < 6; ++a) {
      if (d[a] > 0.0) w[a] += box;
      if (d[a] < 0.0) w[a] -= box;
    }
    points.push_back(w);
  }
  return points;
}

TaskPolytope ellipsoid_polytope(const Vec6& stds, const std::vector<Vec6>& samples) {
  TaskPolytope poly;
  for (const Vec6& u : samples) {
    if (u.norm() == 0.0) continue;
    const Vec6 v = stds.cwiseProduct(u.normalized());
    if (v.norm() == 0.0) continue;
    poly.basis.push_back(v.normalized());
    poly.weights.push_back(v.norm());
  }
  return poly;
}

}  // namespace reach

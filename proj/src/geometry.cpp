#include "reach/geometry.hpp"

#include <string>

namespace reach {

namespace {

Vec3 unit_direction(const Vec3& from, const Vec3& to) {
  const Vec3 delta = to - from;
  const double len = delta.norm();
  if (len <= kDegenerateDistance) {
    throw std::invalid_argument("degenerate limb direction: site coincides with attachment point");
  }
  return delta / len;
}

}  // namespace

void RobotModel::validate() const {
  if (attachment_points.empty()) throw std::invalid_argument("robot model has no limbs");
  if (cone_axes.size() != attachment_points.size()) {
    throw std::invalid_argument("robot model needs one cone axis per attachment point");
  }
  for (const auto& axis : cone_axes) {
    if (std::abs(axis.norm() - 1.0) > 1e-9) throw std::invalid_argument("cone axes must be unit vectors");
  }
  if (!(cone_half_angle > 0.0 && cone_half_angle < M_PI / 2.0)) {
    throw std::invalid_argument("cone half angle must lie in (0, pi/2)");
  }
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  if (!(shoulder_moment >= 0.0)) throw std::invalid_argument("shoulder moment must be non-negative");
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if (!gravity.allFinite()) throw std::invalid_argument("gravity must be finite");
  if (!(min_length >= 0.0 && max_length > min_length)) {
    throw std::invalid_argument("boom length limits must satisfy 0 <= min < max");
  }
}

std::string to_string(Morphology morphology) { return morphology == Morphology::cable ? "cable" : "boom"; }

Morphology morphology_from_string(const std::string& name) {
  if (name == "cable") return Morphology::cable;
  if (name == "boom") return Morphology::boom;
  throw std::invalid_argument("unknown morphology '" + name + "'");
}

RobotModel RobotModel::cube(Morphology morphology, double half_width) {
  if (!(half_width > 0.0)) throw std::invalid_argument("cube half width must be positive");
  RobotModel model;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 sign((corner & 1) ? 1.0 : -1.0, (corner & 2) ? 1.0 : -1.0, (corner & 4) ? 1.0 : -1.0);
    model.attachment_points.push_back(half_width * sign);
    model.cone_axes.push_back(sign.normalized());
  }
  model.shoulder_moment = morphology == Morphology::boom ? 1.0 : 0.0;
  return model;
}

RobotModel RobotParams::make(Morphology morphology) const {
  RobotModel model = RobotModel::cube(morphology, half_width);
  model.cone_half_angle = cone_half_angle;
  model.t_max = t_max;
  model.shoulder_moment = morphology == Morphology::boom ? boom_shoulder_moment : 0.0;
  model.mass = mass;
  model.gravity = gravity;
  model.min_length = min_length;
  model.max_length = max_length;
  model.validate();
  return model;
}

void GraspSite::validate() const {
  if (!(quality > 0.0 && quality <= 1.0)) {
    throw std::invalid_argument("grasp site " + std::to_string(id) + ": quality must lie in (0, 1]");
  }
  if (!(pull_mean > 0.0) || !(pull_std > 0.0)) {
    throw std::invalid_argument("grasp site " + std::to_string(id) + ": pull model must be positive");
  }
  if (!position.allFinite()) throw std::invalid_argument("grasp site position must be finite");
}

WrenchGenerator boom_generator(const Pose& pose, const Vec3& attachment_body, const Vec3& site) {
  const Vec3 anchor = transform_point(pose, attachment_body);
  const Vec3 d = unit_direction(anchor, site);
  WrenchGenerator g;
  g.wrench << d, (anchor - pose.position).cross(d);
  g.length = (site - anchor).norm();
  return g;
}

Wrench gravity_wrench(const RobotModel& model) {
  return make_wrench(model.mass * model.gravity, Vec3::Zero());
}

ConeCheck cone_feasible(const Pose& pose, int boom, const Vec3& site, const RobotModel& model) {
  if (boom < 0 || boom >= model.num_booms()) throw std::out_of_range("boom index out of range");
  const Vec3 anchor = transform_point(pose, model.attachment_points[boom]);
  const Vec3 d = unit_direction(anchor, site);
  const double c = d.dot(rotate_vector(pose, model.cone_axes[boom]));
  return {c >= std::cos(model.cone_half_angle), c};
}

bool pair_feasible(const Pose& pose, int boom, const Vec3& site, const RobotModel& model) {
  const Vec3 anchor = transform_point(pose, model.attachment_points[boom]);
  const double len = (site - anchor).norm();
  if (len <= kDegenerateDistance || len < model.min_length || len > model.max_length) return false;
  return cone_feasible(pose, boom, site, model).feasible;
}

}  // namespace reach

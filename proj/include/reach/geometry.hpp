#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace reach {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vector3<double>;
using Vec6 = Vector6<double>;

/// Stacked [force; torque], torque taken about the body reference point.
using Wrench = Vec6;

inline Wrench make_wrench(const Vec3& force, const Vec3& torque) {
  Wrench w;
  w << force, torque;
  return w;
}

/// Rigid body pose. Orientation is a scalar-first, active, right-handed unit quaternion.
template <typename Scalar>
struct BasicPose {
  Vector3<Scalar> position = Vector3<Scalar>::Zero();
  Eigen::Quaternion<Scalar> orientation = Eigen::Quaternion<Scalar>::Identity();

  BasicPose() = default;
  BasicPose(const Vector3<Scalar>& p, const Eigen::Quaternion<Scalar>& q)
      : position(p), orientation(q) {
    if (std::abs(orientation.norm() - Scalar(1)) > Scalar(1e-9)) {
      throw std::invalid_argument("pose orientation must be a unit quaternion");
    }
  }

  static BasicPose identity() { return {}; }

  /// Rotation of `angle` radians about `axis` (normalized here), placed at `p`.
  static BasicPose from_axis_angle(const Vector3<Scalar>& p, const Vector3<Scalar>& axis,
                                   Scalar angle) {
    return BasicPose(p, Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(angle, axis.normalized())));
  }

  Matrix3<Scalar> rotation() const { return orientation.toRotationMatrix(); }
};

using Pose = BasicPose<double>;

template <typename Scalar>
Vector3<Scalar> transform_point(const BasicPose<Scalar>& pose, const Vector3<Scalar>& p_body) {
  return pose.orientation * p_body + pose.position;
}

template <typename Scalar>
Vector3<Scalar> rotate_vector(const BasicPose<Scalar>& pose, const Vector3<Scalar>& v_body) {
  return pose.orientation * v_body;
}

enum class Morphology { cable, boom };

std::string to_string(Morphology morphology);
Morphology morphology_from_string(const std::string& name);

/// Body and limb parameters shared by every planner.
struct RobotModel {
  std::vector<Vec3> attachment_points;  // body frame, m
  std::vector<Vec3> cone_axes;          // body frame, unit
  double cone_half_angle = M_PI / 3.0;  // rad
  double t_max = 30.0;                  // N
  double shoulder_moment = 1.0;         // Nm, 0 for cables
  double mass = 10.0;                   // kg
  Vec3 gravity{0.0, 0.0, -3.71};        // m/s^2
  double min_length = 0.5;              // m
  double max_length = 5.0;              // m

  int num_booms() const { return static_cast<int>(attachment_points.size()); }

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;

  /// Eight limbs at the corners of a cube of half-width `half_width`, cone axes radial.
  static RobotModel cube(Morphology morphology = Morphology::boom, double half_width = 0.1);
};

/// Scalar overrides for the cube robot, as read from run configs.
struct RobotParams {
  double half_width = 0.1;              // m
  double cone_half_angle = M_PI / 3.0;  // rad
  double t_max = 30.0;                  // N
  double boom_shoulder_moment = 1.0;    // Nm; cables always get 0
  double mass = 10.0;                   // kg
  Vec3 gravity{0.0, 0.0, -3.71};        // m/s^2
  double min_length = 0.5;              // m
  double max_length = 5.0;              // m

  RobotModel make(Morphology morphology) const;
};

struct GraspSite {
  int id = 0;
  Vec3 position = Vec3::Zero();  // world frame, m
  double quality = 1.0;          // (0, 1]
  double pull_mean = 30.0;       // N
  double pull_std = 4.5;         // N

  void validate() const;
};

/// Unit-tension wrench of one limb plus its current length.
struct WrenchGenerator {
  Wrench wrench = Wrench::Zero();
  double length = 0.0;
};

inline constexpr double kDegenerateDistance = 1e-9;

/// Unit-tension wrench [d; (a - x) x d] for a limb anchored at `attachment_body` pulling toward `site`.
WrenchGenerator boom_generator(const Pose& pose, const Vec3& attachment_body, const Vec3& site);

Wrench gravity_wrench(const RobotModel& model);

struct ConeCheck {
  bool feasible = false;
  double cosine = 0.0;  // direction . world cone axis
};

ConeCheck cone_feasible(const Pose& pose, int boom, const Vec3& site, const RobotModel& model);

/// Cone test plus the boom length limits.
bool pair_feasible(const Pose& pose, int boom, const Vec3& site, const RobotModel& model);

}  // namespace reach

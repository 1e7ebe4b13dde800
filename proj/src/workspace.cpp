#include "reach/workspace.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace reach {

void GridParams::validate() const {
  if ((resolution.array() < 1).any()) throw std::invalid_argument("workspace grid is empty");
  if (!((upper - lower).array() > 0.0).all()) throw std::invalid_argument("workspace bounds must have positive extent");
}

double GridParams::voxel_volume() const {
  return (upper - lower).cwiseQuotient(resolution.cast<double>()).prod();
}

Vec3 GridParams::center(int i, int j, int k) const {
  const Vec3 step = (upper - lower).cwiseQuotient(resolution.cast<double>());
  return lower + step.cwiseProduct(Vec3(i + 0.5, j + 0.5, k + 0.5));
}

namespace {

struct VoxelFlags {
  bool geometry = false;
  bool static_equilibrium = false;
  bool wrench_closure = false;
};

VoxelFlags voxel_flags(const Environment& env, const std::vector<int>& assignment, const RobotModel& robot,
                       const Wrench& hold, const Wrench& task, const Pose& pose, bool check_cones) {
  VoxelFlags f;
  if (std::hypot(pose.position.y(), pose.position.z()) >= env.radius) return f;
  for (std::size_t b = 0; b < assignment.size(); ++b) {
    const int j = assignment[b];
    if (j < 0) continue;
    const Vec3& site = env.sites.at(j).position;
    const double len = (site - transform_point(pose, robot.attachment_points[b])).norm();
    if (len <= kDegenerateDistance || len < robot.min_length || len > robot.max_length) return f;
    if (check_cones && !cone_feasible(pose, static_cast<int>(b), site, robot).feasible) return f;
  }
  f.geometry = true;
  const GeneratorSet gen = stance_generators(robot, env.sites, assignment, pose);
  f.static_equilibrium = achievable(gen, hold);
  f.wrench_closure = f.static_equilibrium && achievable(gen, task);
  return f;
}

int torque_rank(const GeneratorSet& gen) {
  if (gen.size() == 0) return 0;
  Eigen::MatrixXd t(3, gen.size());
  for (int i = 0; i < gen.size(); ++i) t.col(i) = gen.generators[i].tail<3>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);
  svd.setThreshold(1e-9);
  return static_cast<int>(svd.rank());
}

}  // namespace

WorkspaceGrid evaluate_workspace(const Environment& env, const std::vector<int>& assignment, const RobotModel& robot,
                                 const Wrench& task_wrench, const GridParams& grid,
                                 const Eigen::Quaterniond& orientation) {
  grid.validate();
  robot.validate();
  if (assignment.size() != static_cast<std::size_t>(robot.num_booms())) {
    throw std::invalid_argument("assignment needs one entry per boom");
  }
  WorkspaceGrid out;
  out.grid = grid;
  out.orientation = orientation.normalized();
  const auto n = static_cast<std::size_t>(grid.num_voxels());
  out.geometry.assign(n, 0);
  out.static_equilibrium.assign(n, 0);
  out.wrench_closure.assign(n, 0);
  out.torque_rank.assign(n, 0);

  std::vector<Eigen::Quaterniond> orientations{out.orientation};
  if (grid.orientation_sweep) {
    for (const auto& turn : {Eigen::AngleAxisd(M_PI / 2, Vec3::UnitX()), Eigen::AngleAxisd(-M_PI / 2, Vec3::UnitX()),
                             Eigen::AngleAxisd(M_PI / 2, Vec3::UnitY()), Eigen::AngleAxisd(-M_PI / 2, Vec3::UnitY()),
                             Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ())}) {
      orientations.push_back((out.orientation * Eigen::Quaterniond(turn)).normalized());
    }
  }
  const Wrench hold = -gravity_wrench(robot);
  const Wrench task = task_wrench + hold;

  std::size_t geo = 0, stat = 0, closure = 0;
  for (int i = 0; i < grid.resolution.x(); ++i) {
    for (int j = 0; j < grid.resolution.y(); ++j) {
      for (int k = 0; k < grid.resolution.z(); ++k) {
        const Vec3 p = grid.center(i, j, k);
        VoxelFlags all{true, true, true};
        for (const auto& q : orientations) {
          const VoxelFlags f = voxel_flags(env, assignment, robot, hold, task, Pose(p, q), grid.check_cones);
          all.geometry = all.geometry && f.geometry;
          all.static_equilibrium = all.static_equilibrium && f.static_equilibrium;
          all.wrench_closure = all.wrench_closure && f.wrench_closure;
          if (!all.geometry) break;
        }
        const auto v = static_cast<std::size_t>(grid.index(i, j, k));
        out.geometry[v] = all.geometry;
        out.static_equilibrium[v] = all.geometry && all.static_equilibrium;
        out.wrench_closure[v] = all.geometry && all.wrench_closure;
        if (all.geometry) {
          out.torque_rank[v] =
              static_cast<std::uint8_t>(torque_rank(stance_generators(robot, env.sites, assignment, Pose(p, orientations[0]))));
        }
        geo += out.geometry[v];
        stat += out.static_equilibrium[v];
        closure += out.wrench_closure[v];
      }
    }
  }
  const double dv = grid.voxel_volume();
  out.geometry_volume = static_cast<double>(geo) * dv;
  out.static_volume = static_cast<double>(stat) * dv;
  out.closure_volume = static_cast<double>(closure) * dv;
  return out;
}

std::vector<WorkspaceEntry> compare_morphologies(const Environment& env, const TaskSpec& task, const GridParams& grid,
                                                 const PlannerOptions& options, const RobotParams& robot_params) {
  task.validate();
  std::vector<WorkspaceEntry> out;
  const auto& point = task.points.front();
  for (auto morphology : {Morphology::cable, Morphology::boom}) {
    const RobotModel robot = robot_params.make(morphology);
    const StanceProblem problem = make_stance_problem(robot, env.sites, task);
    for (auto variant : {PlannerVariant::naive, PlannerVariant::optimal}) {
      const StancePlan stance = plan(problem, variant, options);
      if (!stance.has_assignment()) {
        throw std::runtime_error("no " + to_string(variant) + " stance for the " + to_string(morphology) + " robot");
      }
      WorkspaceEntry e;
      e.morphology = morphology;
      e.variant = variant;
      e.assignment = stance.assignment;
      e.margin = stance.margin;
      e.workspace = evaluate_workspace(env, stance.assignment, robot, point.wrench, grid, point.pose.orientation);
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace reach

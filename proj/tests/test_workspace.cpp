#include "doctest.h"

#include "reach/workspace.hpp"

#include <algorithm>

using namespace reach;

namespace {

Environment tube_with(std::vector<Vec3> positions) {
  Environment env;
  for (std::size_t j = 0; j < positions.size(); ++j) {
    GraspSite s;
    s.id = static_cast<int>(j);
    s.position = positions[j];
    env.sites.push_back(s);
  }
  return env;
}

// Three cables meeting at the body origin, so no limb produces a torque.
RobotModel point_mass() {
  RobotModel r;
  r.attachment_points.assign(3, Vec3::Zero());
  r.cone_axes.assign(3, Vec3::UnitZ());
  r.shoulder_moment = 0.0;
  r.min_length = 0.0;
  r.max_length = 100.0;
  r.gravity = Vec3::Zero();
  return r;
}

// Study environment 0 and its single-pose task.
struct DefaultScenario {
  Environment env;
  TaskSpec task;
};

DefaultScenario default_scenario() {
  DefaultScenario s;
  s.env = generate_environment(derive_seed(1, streams::environment, 0));
  s.task = sample_task(derive_seed(1, streams::task, 0), s.env, TaskKind::single_pose,
                       RobotModel::cube(Morphology::cable));
  return s;
}

GridParams coarse(int n) {
  GridParams g;
  g.resolution = Eigen::Vector3i(n, n, n);
  return g;
}

}  // namespace

TEST_CASE("empty or inverted grids are rejected") {
  const auto env = tube_with({Vec3(0, 0, 2)});
  const auto robot = RobotModel::cube(Morphology::boom);
  GridParams g = coarse(4);
  g.resolution.y() = 0;
  CHECK_THROWS_AS(evaluate_workspace(env, std::vector<int>(8, -1), robot, Wrench::Zero(), g), std::invalid_argument);
  g = coarse(4);
  g.upper.x() = g.lower.x();
  CHECK_THROWS_AS(evaluate_workspace(env, std::vector<int>(8, -1), robot, Wrench::Zero(), g), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_workspace(env, {0}, robot, Wrench::Zero(), coarse(4)), std::invalid_argument);
}

TEST_CASE("limb longer than the maximum clears the geometry flag") {
  const auto env = tube_with({Vec3(0, 0, 2.4)});
  RobotModel robot = point_mass();
  robot.max_length = 1.0;
  GridParams g;
  g.lower = Vec3(-0.05, -0.05, -2.0);
  g.upper = Vec3(0.05, 0.05, 2.4);
  g.resolution = Eigen::Vector3i(1, 1, 44);
  const auto ws = evaluate_workspace(env, {0, -1, -1}, robot, Wrench::Zero(), g);
  for (int k = 0; k < 44; ++k) {
    const Vec3 c = g.center(0, 0, k);
    CAPTURE(c.z());
    CHECK(static_cast<bool>(ws.geometry[g.index(0, 0, k)]) == (2.4 - c.z() <= 1.0));
  }
}

TEST_CASE("without gravity static equilibrium covers the geometric workspace") {
  const auto s = default_scenario();
  RobotModel robot = RobotModel::cube(Morphology::cable);
  robot.gravity = Vec3::Zero();
  const auto stance = plan(make_stance_problem(robot, s.env.sites, s.task), PlannerVariant::naive);
  REQUIRE(stance.has_assignment());
  const auto ws = evaluate_workspace(s.env, stance.assignment, robot, Wrench::Zero(), coarse(12));
  CHECK(ws.geometry_volume > 0.0);
  CHECK(ws.static_equilibrium == ws.geometry);
  CHECK(ws.wrench_closure == ws.geometry);
}

TEST_CASE("planar three-cable closure region is the triangle interior") {
  const Vec3 a(-2.0, 0.0, -1.5), b(2.0, 0.0, -1.5), c(0.0, 0.0, 2.0);
  const auto env = tube_with({a, b, c});
  const auto robot = point_mass();
  GridParams g;
  g.lower = Vec3(-2.5, -0.01, -2.0);
  g.upper = Vec3(2.5, 0.01, 2.4);
  g.resolution = Eigen::Vector3i(50, 1, 44);

  // Closure of the plane: small forces along +-x and +-z all achievable.
  std::vector<std::uint8_t> closure(static_cast<std::size_t>(g.num_voxels()), 1);
  constexpr double eps = 0.1;
  for (const Vec3& f : {Vec3(eps, 0, 0), Vec3(-eps, 0, 0), Vec3(0, 0, eps), Vec3(0, 0, -eps)}) {
    const auto ws = evaluate_workspace(env, {0, 1, 2}, robot, make_wrench(f, Vec3::Zero()), g);
    for (std::size_t v = 0; v < closure.size(); ++v) closure[v] = closure[v] && ws.wrench_closure[v];
  }

  auto side = [](const Vec3& p, const Vec3& q, const Vec3& x) {
    const Eigen::Vector2d e(q.x() - p.x(), q.z() - p.z()), r(x.x() - p.x(), x.z() - p.z());
    return (e.x() * r.y() - e.y() * r.x()) / e.norm();  // signed distance, positive to the left
  };
  int checked = 0, inside = 0;
  for (int i = 0; i < 50; ++i) {
    for (int k = 0; k < 44; ++k) {
      const Vec3 x = g.center(i, 0, k);
      const double d = std::min({side(a, b, x), side(b, c, x), side(c, a, x)});
      if (std::abs(d) < 0.1) continue;  // boundary band
      ++checked;
      inside += d > 0.0;
      CAPTURE(x.transpose());
      CHECK(static_cast<bool>(closure[static_cast<std::size_t>(g.index(i, 0, k))]) == (d > 0.0));
    }
  }
  CHECK(checked > 1500);
  CHECK(inside > 400);
}

TEST_CASE("a single attached boom has almost no closure workspace") {
  const auto s = default_scenario();
  const auto robot = RobotModel::cube(Morphology::boom);
  const auto stance = plan(make_stance_problem(robot, s.env.sites, s.task), PlannerVariant::optimal);
  REQUIRE(stance.has_assignment());
  std::vector<int> one(8, -1);
  const auto first = std::find_if(stance.assignment.begin(), stance.assignment.end(), [](int j) { return j >= 0; });
  one[static_cast<std::size_t>(first - stance.assignment.begin())] = *first;
  const auto ws = evaluate_workspace(s.env, one, robot, s.task.points[0].wrench, coarse(16));
  CHECK(ws.geometry_volume > 1.0);
  CHECK(ws.closure_volume <= 0.01 * ws.geometry_volume);
  CHECK(*std::max_element(ws.torque_rank.begin(), ws.torque_rank.end()) <= 1);
}

TEST_CASE("flags are nested and the comparison covers all four stances") {
  const auto s = default_scenario();
  const auto table = compare_morphologies(s.env, s.task, coarse(12));
  REQUIRE(table.size() == 4);
  for (const auto& e : table) {
    const auto& ws = e.workspace;
    CAPTURE(to_string(e.morphology));
    CAPTURE(to_string(e.variant));
    for (std::size_t v = 0; v < ws.geometry.size(); ++v) {
      CHECK(ws.wrench_closure[v] <= ws.static_equilibrium[v]);
      CHECK(ws.static_equilibrium[v] <= ws.geometry[v]);
      CHECK(ws.torque_rank[v] <= 3);
    }
    CHECK(ws.closure_volume <= ws.static_volume);
    CHECK(ws.static_volume <= ws.geometry_volume);
    const double dv = ws.grid.voxel_volume();
    CHECK(ws.geometry_volume == doctest::Approx(dv * std::count(ws.geometry.begin(), ws.geometry.end(), 1)));
  }
}

TEST_CASE("more shoulder moment never shrinks a flagged set") {
  const auto s = default_scenario();
  RobotModel robot = RobotModel::cube(Morphology::boom);
  const auto stance = plan(make_stance_problem(robot, s.env.sites, s.task), PlannerVariant::naive);
  REQUIRE(stance.has_assignment());
  WorkspaceGrid previous;
  for (double m : {0.0, 0.25, 1.0, 3.0}) {
    robot.shoulder_moment = m;
    const auto ws = evaluate_workspace(s.env, stance.assignment, robot, s.task.points[0].wrench, coarse(12));
    if (!previous.geometry.empty()) {
      CAPTURE(m);
      int shrunk = 0;
      for (std::size_t v = 0; v < ws.geometry.size(); ++v) {
        shrunk += previous.static_equilibrium[v] > ws.static_equilibrium[v];
        shrunk += previous.wrench_closure[v] > ws.wrench_closure[v];
      }
      CHECK(shrunk == 0);
      CHECK(ws.geometry == previous.geometry);
    }
    previous = ws;
  }
}

TEST_CASE("orientation sweep only removes voxels") {
  const auto s = default_scenario();
  const auto robot = RobotModel::cube(Morphology::boom);
  const auto stance = plan(make_stance_problem(robot, s.env.sites, s.task), PlannerVariant::optimal);
  REQUIRE(stance.has_assignment());
  GridParams g = coarse(10);
  const auto fixed = evaluate_workspace(s.env, stance.assignment, robot, s.task.points[0].wrench, g);
  g.orientation_sweep = true;
  const auto swept = evaluate_workspace(s.env, stance.assignment, robot, s.task.points[0].wrench, g);
  for (std::size_t v = 0; v < fixed.geometry.size(); ++v) {
    CHECK(swept.geometry[v] <= fixed.geometry[v]);
    CHECK(swept.wrench_closure[v] <= fixed.wrench_closure[v]);
  }
}

TEST_CASE("volumes converge under grid refinement") {
  const auto s = default_scenario();
  const auto robot = RobotModel::cube(Morphology::boom);
  const auto stance = plan(make_stance_problem(robot, s.env.sites, s.task), PlannerVariant::optimal);
  REQUIRE(stance.has_assignment());
  const auto a = evaluate_workspace(s.env, stance.assignment, robot, s.task.points[0].wrench, coarse(20));
  const auto b = evaluate_workspace(s.env, stance.assignment, robot, s.task.points[0].wrench, coarse(40));
  MESSAGE("closure volume 20^3 " << a.closure_volume << " m^3, 40^3 " << b.closure_volume << " m^3");
  REQUIRE(b.closure_volume > 0.0);
  CHECK(std::abs(a.closure_volume - b.closure_volume) <= 0.25 * b.closure_volume);
  CHECK(std::abs(a.geometry_volume - b.geometry_volume) <= 0.25 * b.geometry_volume);
}

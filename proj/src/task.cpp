#include "reach/task.hpp"

#include <stdexcept>

namespace reach {

std::string to_string(TaskKind kind) { return kind == TaskKind::single_pose ? "single_pose" : "multi_pose"; }

TaskKind task_kind_from_string(const std::string& name) {
  if (name == "single_pose") return TaskKind::single_pose;
  if (name == "multi_pose") return TaskKind::multi_pose;
  throw std::invalid_argument("unknown task kind '" + name + "' (expected single_pose or multi_pose)");
}

void TaskSpec::validate() const {
  if (points.empty()) throw std::invalid_argument("task has no points");
  if (kind == TaskKind::multi_pose && points.size() < 2) {
    throw std::invalid_argument("multi-pose task needs at least two points");
  }
  for (const auto& p : points) {
    if (!p.wrench.allFinite() || !p.pose.position.allFinite()) throw std::invalid_argument("task point not finite");
  }
  if ((wrench_std.array() < 0.0).any()) throw std::invalid_argument("task wrench std must be non-negative");
  polytope.validate();
}

std::vector<Wrench> desired_wrenches(const TaskSpec& task, const RobotModel& robot) {
  const Wrench g = gravity_wrench(robot);
  std::vector<Wrench> out;
  for (const auto& p : task.points) out.push_back(p.wrench - g);
  return out;
}

std::vector<Pose> task_poses(const TaskSpec& task) {
  std::vector<Pose> out;
  for (const auto& p : task.points) out.push_back(p.pose);
  return out;
}

}  // namespace reach

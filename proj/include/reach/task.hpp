#pragma once

#include "reach/geometry.hpp"
#include "reach/wrench_space.hpp"

#include <string>
#include <vector>

namespace reach {

enum class TaskKind { single_pose, multi_pose };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

struct TaskPoint {
  Pose pose;
  Wrench wrench = Wrench::Zero();  // external task wrench, gravity not included
};

struct TaskSpec {
  TaskKind kind = TaskKind::single_pose;
  std::vector<TaskPoint> points;
  Vec6 wrench_std = Vec6::Zero();  // per-axis spread the polytope was built from
  TaskPolytope polytope;

  void validate() const;
};

/// w_des = w_task - gravity_wrench for every task point.
std::vector<Wrench> desired_wrenches(const TaskSpec& task, const RobotModel& robot);

std::vector<Pose> task_poses(const TaskSpec& task);

}  // namespace reach

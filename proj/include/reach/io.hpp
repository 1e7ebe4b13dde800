#pragma once

// JSON encoding of inputs and results. Numbers are rounded to 12 significant digits and
// non-finite values are written as null. Config readers reject unknown keys.

#include "reach/simulation.hpp"
#include "reach/workspace.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace reach::io {

using Json = nlohmann::ordered_json;

/// Malformed or inconsistent input file.
struct FormatError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

const char* tool_version();

inline constexpr int kSignificantDigits = 12;
double round_significant(double x, int digits = kSignificantDigits);
Json number(double x);

Json encode(const Eigen::Ref<const Eigen::VectorXd>& v);
Json encode(const Pose& pose);
Pose decode_pose(const Json& j);

Json encode(const RobotParams& p);
Json encode(const EnvironmentParams& p);
Json encode(const TaskParams& p);
Json encode(const PerturbationParams& p);
Json encode(const GridParams& p);
Json encode(const StudyConfig& c);
/// Missing keys keep `defaults`; unknown keys throw FormatError.
RobotParams decode_robot_params(const Json& j, const RobotParams& defaults = {});
EnvironmentParams decode_environment_params(const Json& j, const EnvironmentParams& defaults = {});
TaskParams decode_task_params(const Json& j, const TaskParams& defaults = {});
PerturbationParams decode_perturbation(const Json& j, const PerturbationParams& defaults = {});
GridParams decode_grid_params(const Json& j, const GridParams& defaults = {});
StudyConfig decode_study_config(const Json& j, const StudyConfig& defaults = {});

Json encode(const Environment& env);
Environment decode_environment(const Json& j);
Json encode(const TaskSpec& task);
TaskSpec decode_task(const Json& j);

/// Stance with solver statistics and, per task pose, support points of the achievable set
/// along sampled force and torque directions.
Json encode(const StancePlan& plan, const StanceProblem& problem, Morphology morphology, const RobotParams& robot);
struct StanceFile {
  Morphology morphology = Morphology::boom;
  PlannerVariant variant = PlannerVariant::optimal;
  RobotParams robot;
  std::vector<int> assignment;
};
StanceFile decode_stance(const Json& j);

Json encode(const TensionPlan& plan, const TensionProblem& problem);
Json encode(const StudyReport& report);
/// Flag bitmaps as strings of '0'/'1', one character per voxel in GridParams::index order.
Json encode(const std::vector<WorkspaceEntry>& entries);

/// Audit block every output file carries.
Json metadata(const std::string& command, std::uint64_t seed, const Json& config);

Json read_file(const std::string& path);
/// Pretty-printed with a trailing newline.
std::string dump(const Json& j);
void write_file(const std::string& path, const std::string& text);

}  // namespace reach::io

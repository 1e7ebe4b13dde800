#include "reach/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#ifndef REACH_VERSION
#define REACH_VERSION "unknown"
#endif

namespace reach::io {

const char* tool_version() { return REACH_VERSION; }

double round_significant(double x, int digits) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return std::strtod(buf, nullptr);
}

Json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round_significant(x);
}

namespace {

// Object reader that remembers which keys were consumed so leftovers can be rejected.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw FormatError(where_ + ": expected an object");
  }

  template <typename F>
  bool visit(const char* key, bool required, F&& assign) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) {
      if (required) throw FormatError(where_ + ": missing key '" + key + "'");
      return false;
    }
    try {
      assign(*it);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where_ + "." + key + ": " + e.what());
    } catch (const FormatError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw FormatError(where_ + "." + key + ": " + e.what());
    }
    return true;
  }

  template <typename T>
  void opt(const char* key, T& out) {
    visit(key, false, [&](const Json& x) { out = read<T>(x); });
  }
  template <typename T>
  T req(const char* key) {
    T out{};
    visit(key, true, [&](const Json& x) { out = read<T>(x); });
    return out;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw FormatError(where_ + ": unknown key '" + item.key() + "'");
    }
  }

  template <typename T>
  static T read(const Json& x) {
    if constexpr (std::is_same_v<T, Vec3> || std::is_same_v<T, Vec6>) {
      T v;
      if (!x.is_array() || x.size() != static_cast<std::size_t>(v.size())) {
        throw FormatError("expected an array of " + std::to_string(v.size()) + " numbers");
      }
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = x.at(static_cast<std::size_t>(i)).get<double>();
      return v;
    } else if constexpr (std::is_same_v<T, double>) {
      if (!x.is_number()) throw FormatError("expected a number");
      return x.get<double>();
    } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
      if (!x.is_number_integer()) throw FormatError("expected an integer");
      if (std::is_same_v<T, std::uint64_t> && !x.is_number_unsigned()) throw FormatError("expected an unsigned integer");
      return x.get<T>();
    } else {
      return x.get<T>();
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Json encode_wrench_list(const std::vector<Wrench>& ws) {
  Json out = Json::array();
  for (const auto& w : ws) out.push_back(encode(w));
  return out;
}

Json encode(const Proportion& p) {
  return Json{{"count", p.count}, {"total", p.total}, {"rate", number(p.rate)},
              {"lower", number(p.lower)}, {"upper", number(p.upper)}};
}

Json condition_key(const Condition& c) {
  return Json{{"variant", to_string(c.variant)}, {"morphology", to_string(c.morphology)}, {"kind", to_string(c.kind)}};
}

// Roughly even directions on the unit sphere.
std::vector<Vec3> sphere_directions(int n) {
  std::vector<Vec3> out;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    out.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
  }
  return out;
}

std::string bitmap(const std::vector<std::uint8_t>& flags) {
  std::string s(flags.size(), '0');
  for (std::size_t i = 0; i < flags.size(); ++i) s[i] = static_cast<char>('0' + flags[i]);
  return s;
}

}  // namespace

Json encode(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

Json encode(const Pose& pose) {
  const auto& q = pose.orientation;
  return Json{{"position", encode(pose.position)},
              {"orientation", Json::array({number(q.w()), number(q.x()), number(q.y()), number(q.z())})}};
}

Pose decode_pose(const Json& j) {
  Reader r(j, "pose");
  const Vec3 p = r.req<Vec3>("position");
  Eigen::Vector4d wxyz;
  r.visit("orientation", true, [&](const Json& x) {
    if (!x.is_array() || x.size() != 4) throw FormatError("orientation must be [w, x, y, z]");
    for (std::size_t i = 0; i < 4; ++i) wxyz[static_cast<Eigen::Index>(i)] = x.at(i).get<double>();
  });
  r.finish();
  Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  if (std::abs(q.norm() - 1.0) > 1e-6) throw FormatError("pose orientation is not a unit quaternion");
  return Pose(p, q.normalized());
}

Json encode(const RobotParams& p) {
  return Json{{"half_width", number(p.half_width)},
              {"cone_half_angle", number(p.cone_half_angle)},
              {"t_max", number(p.t_max)},
              {"boom_shoulder_moment", number(p.boom_shoulder_moment)},
              {"mass", number(p.mass)},
              {"gravity", encode(p.gravity)},
              {"min_length", number(p.min_length)},
              {"max_length", number(p.max_length)}};
}

RobotParams decode_robot_params(const Json& j, const RobotParams& defaults) {
  RobotParams p = defaults;
  Reader r(j, "robot");
  r.opt("half_width", p.half_width);
  r.opt("cone_half_angle", p.cone_half_angle);
  r.opt("t_max", p.t_max);
  r.opt("boom_shoulder_moment", p.boom_shoulder_moment);
  r.opt("mass", p.mass);
  r.opt("gravity", p.gravity);
  r.opt("min_length", p.min_length);
  r.opt("max_length", p.max_length);
  r.finish();
  p.make(Morphology::boom);
  return p;
}

Json encode(const EnvironmentParams& p) {
  return Json{{"num_sites", p.num_sites},
              {"radius", number(p.radius)},
              {"length", number(p.length)},
              {"quality_min", number(p.quality_min)},
              {"quality_max", number(p.quality_max)},
              {"t_max", number(p.t_max)},
              {"pull_std_ratio", number(p.pull_std_ratio)}};
}

EnvironmentParams decode_environment_params(const Json& j, const EnvironmentParams& defaults) {
  EnvironmentParams p = defaults;
  Reader r(j, "environment");
  r.opt("num_sites", p.num_sites);
  r.opt("radius", p.radius);
  r.opt("length", p.length);
  r.opt("quality_min", p.quality_min);
  r.opt("quality_max", p.quality_max);
  r.opt("t_max", p.t_max);
  r.opt("pull_std_ratio", p.pull_std_ratio);
  r.finish();
  p.validate();
  return p;
}

Json encode(const TaskParams& p) {
  return Json{{"wrench_std", encode(p.wrench_std)},
              {"weight_floor", number(p.weight_floor)},
              {"pose_spread", encode(p.pose_spread)},
              {"travel", number(p.travel)},
              {"max_yaw", number(p.max_yaw)},
              {"max_retries", p.max_retries},
              {"screen_full_quality", p.screen_full_quality}};
}

TaskParams decode_task_params(const Json& j, const TaskParams& defaults) {
  TaskParams p = defaults;
  Reader r(j, "task");
  r.opt("wrench_std", p.wrench_std);
  r.opt("weight_floor", p.weight_floor);
  r.opt("pose_spread", p.pose_spread);
  r.opt("travel", p.travel);
  r.opt("max_yaw", p.max_yaw);
  r.opt("max_retries", p.max_retries);
  r.opt("screen_full_quality", p.screen_full_quality);
  r.finish();
  if ((p.wrench_std.array() < 0.0).any() || !(p.weight_floor > 0.0) || p.max_retries < 1) {
    throw FormatError("task: wrench_std must be non-negative, weight_floor positive, max_retries at least 1");
  }
  return p;
}

Json encode(const PerturbationParams& p) {
  return Json{{"wrench_scale", number(p.wrench_scale)},
              {"orientation_error", number(p.orientation_error)},
              {"position_error", number(p.position_error)},
              {"pull_noise_scale", number(p.pull_noise_scale)}};
}

PerturbationParams decode_perturbation(const Json& j, const PerturbationParams& defaults) {
  PerturbationParams p = defaults;
  Reader r(j, "perturbation");
  r.opt("wrench_scale", p.wrench_scale);
  r.opt("orientation_error", p.orientation_error);
  r.opt("position_error", p.position_error);
  r.opt("pull_noise_scale", p.pull_noise_scale);
  r.finish();
  p.validate();
  return p;
}

Json encode(const GridParams& p) {
  return Json{{"lower", encode(p.lower)},
              {"upper", encode(p.upper)},
              {"resolution", Json::array({p.resolution.x(), p.resolution.y(), p.resolution.z()})},
              {"check_cones", p.check_cones},
              {"orientation_sweep", p.orientation_sweep}};
}

GridParams decode_grid_params(const Json& j, const GridParams& defaults) {
  GridParams p = defaults;
  Reader r(j, "grid");
  r.opt("lower", p.lower);
  r.opt("upper", p.upper);
  r.visit("resolution", false, [&](const Json& x) {
    if (!x.is_array() || x.size() != 3) throw FormatError("resolution must be [nx, ny, nz]");
    for (std::size_t a = 0; a < 3; ++a) p.resolution[static_cast<Eigen::Index>(a)] = x.at(a).get<int>();
  });
  r.opt("check_cones", p.check_cones);
  r.opt("orientation_sweep", p.orientation_sweep);
  r.finish();
  p.validate();
  return p;
}

Json encode(const StudyConfig& c) {
  Json variants = Json::array(), morphologies = Json::array(), kinds = Json::array();
  for (auto v : c.variants) variants.push_back(to_string(v));
  for (auto m : c.morphologies) morphologies.push_back(to_string(m));
  for (auto k : c.kinds) kinds.push_back(to_string(k));
  return Json{{"master_seed", c.master_seed},
              {"num_environments", c.num_environments},
              {"trials_per_environment", c.trials_per_environment},
              {"robot", encode(c.robot)},
              {"environment", encode(c.environment)},
              {"task", encode(c.task)},
              {"perturbation", encode(c.perturbation)},
              {"variants", variants},
              {"morphologies", morphologies},
              {"kinds", kinds},
              {"plan_for_orientation_error", c.plan_for_orientation_error},
              {"stance_time_limit", number(c.stance_time_limit)}};
}

StudyConfig decode_study_config(const Json& j, const StudyConfig& defaults) {
  StudyConfig c = defaults;
  Reader r(j, "config");
  r.opt("master_seed", c.master_seed);
  r.opt("num_environments", c.num_environments);
  r.opt("trials_per_environment", c.trials_per_environment);
  r.visit("robot", false, [&](const Json& x) { c.robot = decode_robot_params(x, c.robot); });
  r.visit("environment", false, [&](const Json& x) { c.environment = decode_environment_params(x, c.environment); });
  r.visit("task", false, [&](const Json& x) { c.task = decode_task_params(x, c.task); });
  r.visit("perturbation", false, [&](const Json& x) { c.perturbation = decode_perturbation(x, c.perturbation); });
  r.visit("variants", false, [&](const Json& x) {
    c.variants.clear();
    for (const auto& v : x) c.variants.push_back(planner_variant_from_string(v.get<std::string>()));
  });
  r.visit("morphologies", false, [&](const Json& x) {
    c.morphologies.clear();
    for (const auto& v : x) c.morphologies.push_back(morphology_from_string(v.get<std::string>()));
  });
  r.visit("kinds", false, [&](const Json& x) {
    c.kinds.clear();
    for (const auto& v : x) c.kinds.push_back(task_kind_from_string(v.get<std::string>()));
  });
  r.opt("plan_for_orientation_error", c.plan_for_orientation_error);
  r.opt("stance_time_limit", c.stance_time_limit);
  r.finish();
  c.validate();
  return c;
}

Json encode(const Environment& env) {
  Json sites = Json::array();
  for (const auto& s : env.sites) {
    sites.push_back(Json{{"id", s.id},
                         {"position", encode(s.position)},
                         {"quality", number(s.quality)},
                         {"pull_mean", number(s.pull_mean)},
                         {"pull_std", number(s.pull_std)}});
  }
  return Json{{"seed", env.seed}, {"radius", number(env.radius)}, {"length", number(env.length)}, {"sites", sites}};
}

Environment decode_environment(const Json& j) {
  Environment env;
  Reader r(j, "environment");
  r.visit("meta", false, [](const Json&) {});
  r.opt("seed", env.seed);
  env.radius = r.req<double>("radius");
  env.length = r.req<double>("length");
  r.visit("sites", true, [&](const Json& x) {
    if (!x.is_array()) throw FormatError("sites must be an array");
    for (const auto& js : x) {
      Reader rs(js, "site");
      GraspSite s;
      s.id = rs.req<int>("id");
      s.position = rs.req<Vec3>("position");
      s.quality = rs.req<double>("quality");
      s.pull_mean = rs.req<double>("pull_mean");
      s.pull_std = rs.req<double>("pull_std");
      rs.finish();
      s.validate();
      env.sites.push_back(s);
    }
  });
  r.finish();
  if (!(env.radius > 0.0) || !(env.length > 0.0)) throw FormatError("environment: radius and length must be positive");
  if (env.sites.empty()) throw FormatError("environment has no sites");
  return env;
}

Json encode(const TaskSpec& task) {
  Json points = Json::array();
  for (const auto& p : task.points) points.push_back(Json{{"pose", encode(p.pose)}, {"wrench", encode(p.wrench)}});
  Json weights = Json::array();
  for (double w : task.polytope.weights) weights.push_back(number(w));
  return Json{{"kind", to_string(task.kind)},
              {"points", points},
              {"wrench_std", encode(task.wrench_std)},
              {"polytope", Json{{"basis", encode_wrench_list(task.polytope.basis)}, {"weights", weights}}}};
}

TaskSpec decode_task(const Json& j) {
  TaskSpec task;
  Reader r(j, "task");
  r.visit("meta", false, [](const Json&) {});
  task.kind = task_kind_from_string(r.req<std::string>("kind"));
  r.visit("points", true, [&](const Json& x) {
    for (const auto& jp : x) {
      Reader rp(jp, "task point");
      TaskPoint p;
      rp.visit("pose", true, [&](const Json& y) { p.pose = decode_pose(y); });
      p.wrench = rp.req<Vec6>("wrench");
      rp.finish();
      task.points.push_back(p);
    }
  });
  r.opt("wrench_std", task.wrench_std);
  r.visit("polytope", true, [&](const Json& x) {
    Reader rp(x, "polytope");
    rp.visit("basis", true, [&](const Json& y) {
      for (const auto& b : y) task.polytope.basis.push_back(Reader::read<Vec6>(b));
    });
    rp.visit("weights", true, [&](const Json& y) {
      for (const auto& w : y) task.polytope.weights.push_back(Reader::read<double>(w));
    });
    rp.finish();
  });
  r.finish();
  // Unit basis vectors lose their last bits to rounding.
  for (auto& b : task.polytope.basis) {
    if (b.norm() > 0.0) b.normalize();
  }
  try {
    task.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("task: ") + e.what());
  }
  return task;
}

Json encode(const StancePlan& plan, const StanceProblem& problem, Morphology morphology, const RobotParams& robot) {
  const auto& rep = plan.report;
  Json out{{"variant", to_string(plan.variant)},
           {"morphology", to_string(morphology)},
           {"robot", encode(robot)},
           {"status", to_string(rep.status)},
           {"assignment", plan.assignment},
           {"attached", plan.has_assignment() ? plan.attached() : 0},
           {"margin", number(plan.has_assignment() ? plan.margin : -std::numeric_limits<double>::infinity())},
           {"objective", number(plan.objective)},
           {"solver", Json{{"wall_time", number(rep.wall_time)},
                           {"simplex_iterations", rep.iterations},
                           {"nodes", rep.stats.nodes},
                           {"best_bound", number(rep.stats.best_bound)},
                           {"relative_gap", number(rep.stats.relative_gap)},
                           {"lp_iterations", rep.stats.lp_iterations},
                           {"max_depth", rep.stats.max_depth},
                           {"candidate_pairs", static_cast<int>(problem.pairs.size())}}}};
  Json tensions = Json::array();
  for (const auto& pose : plan.tensions) {
    Json per_k = Json::array();
    for (const auto& k : pose) {
      Json row = Json::array();
      for (double t : k) row.push_back(number(t));
      per_k.push_back(row);
    }
    tensions.push_back(per_k);
  }
  out["certificate_tensions"] = tensions;

  Json support = Json::array();
  if (plan.has_assignment()) {
    std::vector<Wrench> directions;
    for (const Vec3& d : sphere_directions(32)) directions.push_back(make_wrench(d, Vec3::Zero()));
    for (const Vec3& d : sphere_directions(32)) directions.push_back(make_wrench(Vec3::Zero(), d));
    for (int l = 0; l < problem.num_poses(); ++l) {
      const auto gen = stance_generators(problem.robot, problem.sites, plan.assignment, problem.poses[static_cast<std::size_t>(l)]);
      support.push_back(Json{{"pose_index", l},
                             {"desired", encode(problem.desired[static_cast<std::size_t>(l)])},
                             {"directions", encode_wrench_list(directions)},
                             {"points", encode_wrench_list(support_points(gen, directions))}});
    }
  }
  out["support_points"] = support;
  return out;
}

StanceFile decode_stance(const Json& j) {
  StanceFile s;
  Reader r(j, "stance");
  for (const char* ignored : {"meta", "status", "attached", "margin", "objective", "solver", "certificate_tensions",
                              "support_points", "nominal_margin", "ellipsoid_margin", "candidate_pairs_by_boom", "reason"}) {
    r.visit(ignored, false, [](const Json&) {});
  }
  s.variant = planner_variant_from_string(r.req<std::string>("variant"));
  s.morphology = morphology_from_string(r.req<std::string>("morphology"));
  r.visit("robot", false, [&](const Json& x) { s.robot = decode_robot_params(x); });
  r.visit("assignment", true, [&](const Json& x) { s.assignment = x.get<std::vector<int>>(); });
  r.finish();
  if (s.assignment.empty()) throw FormatError("stance has no assignment");
  return s;
}

Json encode(const TensionPlan& plan, const TensionProblem& problem) {
  Json pull_mean = Json::array(), pull_std = Json::array();
  for (double v : problem.pull_mean) pull_mean.push_back(number(v));
  for (double v : problem.pull_std) pull_std.push_back(number(v));
  return Json{{"status", to_string(plan.status)},
              {"tensions", encode(plan.tensions)},
              {"shoulder_torque", encode(plan.shoulder_torque)},
              {"log_success", number(plan.log_success)},
              {"success_probability", number(plan.converged() ? success_probability(plan, problem) : 0.0)},
              {"residual", number(plan.residual)},
              {"projected_gradient", number(plan.projected_gradient)},
              {"newton_steps", plan.newton_steps},
              {"desired", encode(problem.desired)},
              {"pull_mean", pull_mean},
              {"pull_std", pull_std}};
}

Json encode(const StudyReport& report) {
  Json conditions = Json::array();
  for (const auto& s : report.conditions) {
    Json c = condition_key(s.condition);
    c["trials"] = s.trials;
    c["success"] = encode(s.success);
    c["geometric_failure"] = encode(s.geometric);
    c["stochastic_failure"] = encode(s.stochastic);
    c["failures_by_point"] = s.failures_by_point;
    c["excluded_environments"] = s.excluded_environments;
    c["stance_time"] = number(s.stance_time);
    conditions.push_back(c);
  }
  Json environments = Json::array();
  for (const auto& e : report.environments) {
    Json per = Json::array();
    for (const auto& [cond, status] : e.status) {
      Json c = condition_key(cond);
      c["status"] = status;
      if (e.margin.count(cond)) c["margin"] = number(e.margin.at(cond));
      if (e.successes.count(cond)) c["successes"] = e.successes.at(cond);
      per.push_back(c);
    }
    environments.push_back(Json{{"index", e.environment}, {"seed", e.seed}, {"conditions", per}});
  }
  Json failing = Json::array();
  for (const auto& t : report.trials) failing.push_back(t.failing_point);
  return Json{{"wall_time", number(report.wall_time)},
              {"conditions", conditions},
              {"environments", environments},
              {"failing_point", failing}};
}

Json encode(const std::vector<WorkspaceEntry>& entries) {
  Json out = Json::array();
  for (const auto& e : entries) {
    const auto& w = e.workspace;
    std::string rank(w.torque_rank.size(), '0');
    for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = static_cast<char>('0' + w.torque_rank[i]);
    out.push_back(Json{{"morphology", to_string(e.morphology)},
                       {"variant", to_string(e.variant)},
                       {"assignment", e.assignment},
                       {"margin", number(e.margin)},
                       {"orientation", Json::array({number(w.orientation.w()), number(w.orientation.x()),
                                                    number(w.orientation.y()), number(w.orientation.z())})},
                       {"volumes", Json{{"geometry", number(w.geometry_volume)},
                                        {"static_equilibrium", number(w.static_volume)},
                                        {"wrench_closure", number(w.closure_volume)}}},
                       {"flags", Json{{"geometry", bitmap(w.geometry)},
                                      {"static_equilibrium", bitmap(w.static_equilibrium)},
                                      {"wrench_closure", bitmap(w.wrench_closure)}}},
                       {"torque_rank", rank}});
  }
  return out;
}

Json metadata(const std::string& command, std::uint64_t seed, const Json& config) {
  return Json{{"tool", "reach"}, {"version", tool_version()}, {"command", command}, {"master_seed", seed},
              {"config", config}};
}

Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace reach::io

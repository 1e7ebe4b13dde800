#include "doctest.h"

#include "reach/simulation.hpp"

#include <map>
#include <sstream>

using namespace reach;

namespace {

PerturbationParams no_perturbation() {
  PerturbationParams p;
  p.wrench_scale = 0.0;
  p.orientation_error = 0.0;
  p.position_error = 0.0;
  p.pull_noise_scale = 0.0;
  return p;
}

StudyConfig small_study() {
  StudyConfig c;
  c.num_environments = 2;
  c.trials_per_environment = 6;
  c.environment.num_sites = 12;
  c.kinds = {TaskKind::single_pose};
  return c;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream fields(line);
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

struct Fixture {
  Environment env;
  TaskSpec task;
  RobotModel robot = RobotModel::cube(Morphology::boom);
  std::vector<int> assignment;

  explicit Fixture(TaskKind kind = TaskKind::single_pose) {
    env = generate_environment(derive_seed(3, streams::environment));
    task = sample_task(derive_seed(3, streams::task), env, kind, robot);
    const auto stance = plan(make_stance_problem(robot, env.sites, task), PlannerVariant::naive);
    REQUIRE(stance.has_assignment());
    assignment = stance.assignment;
  }
};

}  // namespace

TEST_CASE("zero perturbation leaves the task unchanged") {
  const Fixture f(TaskKind::multi_pose);
  Rng rng(4);
  const TaskSpec t = perturb_task(f.task, rng, no_perturbation());
  REQUIRE(t.points.size() == f.task.points.size());
  for (std::size_t l = 0; l < t.points.size(); ++l) {
    CHECK(t.points[l].pose.position == f.task.points[l].pose.position);
    CHECK(t.points[l].pose.orientation.angularDistance(f.task.points[l].pose.orientation) <= 1e-12);
    CHECK(t.points[l].wrench == f.task.points[l].wrench);
  }
}

TEST_CASE("perturbation statistics") {
  const Fixture f;
  PerturbationParams p;
  Rng rng(10);
  constexpr int n = 20000;
  double angle = 0.0, dx2 = 0.0, dfz2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const TaskSpec t = perturb_task(f.task, rng, p);
    angle += t.points[0].pose.orientation.angularDistance(f.task.points[0].pose.orientation);
    dx2 += std::pow(t.points[0].pose.position.x() - f.task.points[0].pose.position.x(), 2);
    dfz2 += std::pow(t.points[0].wrench[2] - f.task.points[0].wrench[2], 2);
  }
  // E|N(0, s)| = s sqrt(2 / pi)
  CHECK(angle / n == doctest::Approx(p.orientation_error * std::sqrt(2.0 / M_PI)).epsilon(0.02));
  CHECK(std::sqrt(dx2 / n) == doctest::Approx(p.position_error).epsilon(0.02));
  CHECK(std::sqrt(dfz2 / n) == doctest::Approx(f.task.wrench_std[2]).epsilon(0.02));
  p.position_error = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("nominal execution of a planned stance always succeeds") {
  for (auto kind : {TaskKind::single_pose, TaskKind::multi_pose}) {
    const Fixture f(kind);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto out = run_trial(f.env, f.robot, f.assignment, f.task, seed, no_perturbation());
      CAPTURE(seed);
      CHECK(out.result == TrialResult::success);
      CHECK(out.failing_point == -1);
      CHECK(out.tensions.size() == f.task.points.size());
    }
  }
}

TEST_CASE("a lone cable is a geometric failure") {
  const Fixture f;
  std::vector<int> one(8, -1);
  for (std::size_t i = 0; i < 8; ++i) {
    if (f.assignment[i] >= 0) {
      one[i] = f.assignment[i];
      break;
    }
  }
  const auto cable = RobotModel::cube(Morphology::cable);
  const auto out = run_trial(f.env, cable, one, f.task, 1, no_perturbation());
  CHECK(out.result == TrialResult::geometric_failure);
  CHECK(out.failing_point == 0);
  CHECK(out.tensions.empty());
}

TEST_CASE("weak grasps fail stochastically") {
  Fixture f;
  for (auto& s : f.env.sites) {
    s.pull_mean = 0.01;
    s.pull_std = 0.001;
  }
  const auto out = run_trial(f.env, f.robot, f.assignment, f.task, 1, no_perturbation());
  CHECK(out.result == TrialResult::stochastic_failure);
  CHECK(out.failing_point == 0);
  CHECK(out.max_tension > 0.01);
}

TEST_CASE("trials are reproducible from their seed") {
  const Fixture f(TaskKind::multi_pose);
  const PerturbationParams p;
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    const auto a = run_trial(f.env, f.robot, f.assignment, f.task, seed, p);
    const auto b = run_trial(f.env, f.robot, f.assignment, f.task, seed, p);
    CHECK(a.result == b.result);
    CHECK(a.failing_point == b.failing_point);
    CHECK(a.max_tension == b.max_tension);
  }
}

TEST_CASE("wilson interval") {
  const auto half = wilson(5, 10);
  CHECK(half.rate == 0.5);
  CHECK(half.lower == doctest::Approx(0.2366).epsilon(1e-3));
  CHECK(half.upper == doctest::Approx(0.7634).epsilon(1e-3));
  const auto none = wilson(0, 10);
  CHECK(none.lower == 0.0);
  CHECK(none.upper == doctest::Approx(0.2775).epsilon(1e-3));
  const auto all = wilson(100, 100);
  CHECK(all.upper == 1.0);
  CHECK(all.lower == doctest::Approx(0.9630).epsilon(1e-3));
  CHECK(wilson(0, 0).total == 0);
}

TEST_CASE("study is deterministic and the CSV matches the summary") {
  const StudyConfig config = small_study();
  const auto a = run_study(config);
  const auto b = run_study(config);
  const std::string csv = trials_csv(a);
  CHECK(csv == trials_csv(b));

  const auto rows = parse_csv(csv);
  REQUIRE(!rows.empty());
  CHECK(rows[0] == std::vector<std::string>{"trial_id", "env_seed", "variant", "morphology", "kind", "result",
                                            "margin", "max_tension"});
  CHECK(rows.size() == a.trials.size() + 1);

  std::map<std::string, std::map<std::string, int>> counts;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    REQUIRE(rows[r].size() == 8);
    CHECK(std::stoi(rows[r][0]) == static_cast<int>(r - 1));
    ++counts[rows[r][2] + "/" + rows[r][3] + "/" + rows[r][4]][rows[r][5]];
    CHECK(rows[r][7].empty() == (rows[r][5] == "geometric_failure"));
  }
  for (const auto& s : a.conditions) {
    CAPTURE(s.condition.label());
    const auto& c = counts[s.condition.label()];
    auto get = [&](const char* k) { return c.count(k) ? c.at(k) : 0; };
    CHECK(get("success") == s.success.count);
    CHECK(get("geometric_failure") == s.geometric.count);
    CHECK(get("stochastic_failure") == s.stochastic.count);
    CHECK(s.success.count + s.geometric.count + s.stochastic.count == s.trials);
    CHECK(s.trials + config.trials_per_environment * static_cast<int>(s.excluded_environments.size()) ==
          config.num_environments * config.trials_per_environment);
    int by_point = 0;
    for (int n : s.failures_by_point) by_point += n;
    CHECK(by_point == s.trials - s.success.count);
  }
}

TEST_CASE("study at zero perturbation has no failures") {
  StudyConfig config = small_study();
  config.perturbation = no_perturbation();
  config.kinds = {TaskKind::single_pose, TaskKind::multi_pose};
  config.trials_per_environment = 3;
  const auto report = run_study(config);
  int trials = 0;
  for (const auto& s : report.conditions) {
    CAPTURE(s.condition.label());
    CHECK(s.success.count == s.trials);
    trials += s.trials;
  }
  CHECK(trials > 0);
}

TEST_CASE("invalid study configurations") {
  StudyConfig c = small_study();
  c.num_environments = 0;
  CHECK_THROWS_AS(run_study(c), std::invalid_argument);
  c = small_study();
  c.variants.clear();
  CHECK_THROWS_AS(run_study(c), std::invalid_argument);
  c = small_study();
  c.stance_time_limit = 0.0;
  CHECK_THROWS_AS(run_study(c), std::invalid_argument);
}

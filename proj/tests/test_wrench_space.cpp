#include "doctest.h"

#include "reach/wrench_space.hpp"
#include "support/planar_hull.hpp"

#include <random>

using namespace reach;

namespace {

Wrench force(double x, double y, double z = 0.0) { return make_wrench(Vec3(x, y, z), Vec3::Zero()); }

GeneratorSet unit_square() {
  GeneratorSet gen;
  gen.add(force(1, 0), 1.0);
  gen.add(force(0, 1), 1.0);
  return gen;
}

TaskPolytope planar_cross() {
  TaskPolytope poly;
  for (const Wrench& b : {force(1, 0), force(-1, 0), force(0, 1), force(0, -1)}) {
    poly.basis.push_back(b);
    poly.weights.push_back(1.0);
  }
  return poly;
}

GeneratorSet random_generators(std::mt19937_64& rng, int n, double moment) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> bound(0.5, 3.0);
  GeneratorSet gen;
  gen.shoulder_moment = moment;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
    const Vec3 arm(normal(rng), normal(rng), normal(rng));
    gen.add(make_wrench(d, arm.cross(d)), bound(rng));
  }
  return gen;
}

Wrench random_achievable(std::mt19937_64& rng, const GeneratorSet& gen) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Wrench w = Wrench::Zero();
  for (int i = 0; i < gen.size(); ++i) w += unit(rng) * gen.upper[i] * gen.generators[i];
  for (int a = 3; a < 6; ++a) w[a] += (2.0 * unit(rng) - 1.0) * gen.torque_box();
  return w;
}

}  // namespace

TEST_CASE("achievable: interval and square cases") {
  GeneratorSet pm;
  pm.add(force(1, 0), 1.0);
  pm.add(force(-1, 0), 1.0);
  CHECK(achievable(pm, force(0.5, 0)));
  CHECK_FALSE(achievable(pm, force(1.5, 0)));
  CHECK(achievable(unit_square(), force(0.5, 0.5)));
  CHECK_FALSE(achievable(unit_square(), force(-0.1, 0.5)));
}

TEST_CASE("achievable: torque box only") {
  GeneratorSet gen;
  gen.shoulder_moment = 1.0;
  gen.attached_count = 2;
  CHECK(achievable(gen, make_wrench(Vec3::Zero(), Vec3(2, -2, 0))));
  CHECK_FALSE(achievable(gen, make_wrench(Vec3::Zero(), Vec3(2.1, 0, 0))));
  CHECK_FALSE(achievable(gen, force(0.1, 0)));
}

TEST_CASE("achievable agrees with a rasterized planar Minkowski sum") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI), bound(0.3, 2.0);
  std::uniform_int_distribution<int> count(1, 5);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    GeneratorSet gen;
    std::vector<testing::Point2> scaled;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const double a = angle(rng), u = bound(rng);
      gen.add(force(std::cos(a), std::sin(a)), u);
      scaled.emplace_back(u * std::cos(a), u * std::sin(a));
    }
    const auto hull = testing::convex_hull(testing::subset_sums(scaled));
    double extent = 0.0;
    for (const auto& p : hull) extent = std::max(extent, p.cwiseAbs().maxCoeff());
    extent += 0.5;
    for (int ix = 0; ix <= 24; ++ix) {
      for (int iy = 0; iy <= 24; ++iy) {
        const testing::Point2 p(-extent + 2 * extent * ix / 24.0, -extent + 2 * extent * iy / 24.0);
        const auto q = testing::query_hull(hull, p);
        if (q.boundary_distance <= 1e-6) continue;
        CAPTURE(trial);
        CHECK(achievable(gen, force(p.x(), p.y())) == q.inside);
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("achievable is monotone in the tension bounds") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    GeneratorSet gen = random_generators(rng, 5, trial % 2 ? 0.5 : 0.0);
    Wrench w;
    for (int a = 0; a < 6; ++a) w[a] = normal(rng);
    if (!achievable(gen, w)) continue;
    gen.upper[trial % 5] *= 1.7;
    CHECK(achievable(gen, w));
  }
}

TEST_CASE("inscribed_margin: unit square") {
  const auto mid = inscribed_margin(unit_square(), force(0.5, 0.5), planar_cross());
  REQUIRE(mid.achievable);
  CHECK(mid.margin == doctest::Approx(0.5).epsilon(1e-9));
  const auto corner = inscribed_margin(unit_square(), force(1, 1), planar_cross());
  REQUIRE(corner.achievable);
  CHECK(corner.margin == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  const auto outside = inscribed_margin(unit_square(), force(1.5, 0.5), planar_cross());
  CHECK_FALSE(outside.achievable);
  CHECK(std::isinf(outside.margin));
  CHECK(outside.margin < 0);
}

TEST_CASE("inscribed_margin: per-direction values and weights") {
  TaskPolytope poly = planar_cross();
  poly.weights = {1.0, 1.0, 2.0, 2.0};
  const auto r = inscribed_margin(unit_square(), force(0.25, 0.5), poly);
  REQUIRE(r.scaled.size() == 4);
  CHECK(r.scaled[0] == doctest::Approx(0.75));
  CHECK(r.scaled[1] == doctest::Approx(0.25));
  CHECK(r.scaled[2] == doctest::Approx(0.25));
  CHECK(r.scaled[3] == doctest::Approx(0.25));
  CHECK(r.margin == doctest::Approx(0.25));
}

TEST_CASE("inscribed_margin scales with the generator bounds") {
  std::mt19937_64 rng(21);
  const TaskPolytope poly = TaskPolytope::axis_aligned((Vec6() << 1, 1, 2, 0.2, 0.2, 0.2).finished());
  for (int trial = 0; trial < 10; ++trial) {
    GeneratorSet gen = random_generators(rng, 8, 0.3);
    const Wrench w = random_achievable(rng, gen);
    const auto base = inscribed_margin(gen, w, poly);
    REQUIRE(base.achievable);
    const double c = 2.5;
    for (double& u : gen.upper) u *= c;
    gen.shoulder_moment *= c;
    const auto scaled = inscribed_margin(gen, c * w, poly);
    REQUIRE(scaled.achievable);
    CHECK(scaled.margin == doctest::Approx(c * base.margin).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("torque re-weighting") {
  const TaskPolytope poly = TaskPolytope::axis_aligned((Vec6() << 2, 2, 6, 0.5, 0.5, 0.5).finished());
  SUBCASE("zero orientation error leaves the polytope unchanged") {
    CHECK(torque_weight_factor(poly, 0.0) == 1.0);
    CHECK(scale_torque_weights(poly, 0.0).weights == poly.weights);
  }
  SUBCASE("lambda formula") {
    TaskPolytope p;
    p.basis = {force(1, 0), make_wrench(Vec3::Zero(), Vec3::UnitX())};
    p.weights = {10.0, 1.0};
    CHECK(torque_weight_factor(p, 0.5) == doctest::Approx(6.0));
    p.weights = {3.0, 3.0};
    CHECK(torque_weight_factor(p, 1.0) == doctest::Approx(2.0));
    const TaskPolytope s = scale_torque_weights(p, 1.0);
    CHECK(s.weights[0] == 3.0);
    CHECK(s.weights[1] == doctest::Approx(6.0));
  }
  SUBCASE("force weights untouched, torque weights share one factor") {
    const double lambda = torque_weight_factor(poly, 10.0 * M_PI / 180.0);
    const TaskPolytope s = scale_torque_weights(poly, 10.0 * M_PI / 180.0);
    for (int k = 0; k < poly.size(); ++k) {
      if (is_torque_direction(poly.basis[k])) {
        CHECK(s.weights[k] == doctest::Approx(lambda * poly.weights[k]).epsilon(1e-15));
      } else {
        CHECK(s.weights[k] == poly.weights[k]);
      }
    }
  }
  SUBCASE("pure torque task keeps lambda at one") {
    TaskPolytope p;
    p.basis = {make_wrench(Vec3::Zero(), Vec3::UnitX()), make_wrench(Vec3::Zero(), -Vec3::UnitX())};
    p.weights = {1.0, 1.0};
    CHECK(torque_weight_factor(p, 0.3) == 1.0);
  }
  SUBCASE("no torque direction is an error") {
    TaskPolytope p;
    p.basis = {force(1, 0)};
    p.weights = {1.0};
    CHECK_THROWS_AS(scale_torque_weights(p, 0.1), std::invalid_argument);
  }
}

TEST_CASE("support_points") {
  GeneratorSet one;
  const Wrench g = make_wrench(Vec3(0.6, 0.8, 0), Vec3(0, 0, 1));
  one.add(g, 2.0);
  const auto pts = support_points(one, {g.normalized(), -g.normalized()});
  CHECK((pts[0] - 2.0 * g).norm() < 1e-12);
  CHECK(pts[1].norm() < 1e-12);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const GeneratorSet gen = random_generators(rng, trial % 3 + 2, trial % 2 ? 0.4 : 0.0);
    Wrench d;
    for (int a = 0; a < 6; ++a) d[a] = normal(rng);
    d.normalize();
    const Wrench best = support_points(gen, {d})[0];
    CHECK(achievable(gen, best));
    // LP oracle: maximize d . w over t and tau.
    opt::LinearProgramBuilder b;
    for (int i = 0; i < gen.size(); ++i) b.add_variable(0.0, gen.upper[i], d.dot(gen.generators[i]));
    for (int a = 3; a < 6; ++a) b.add_variable(-gen.torque_box(), gen.torque_box(), d[a]);
    const auto lp = opt::solve_lp(b.build());
    REQUIRE(lp.status == opt::SolveStatus::optimal);
    CHECK(d.dot(best) == doctest::Approx(lp.objective).epsilon(1e-9));
    for (int s = 0; s < 50; ++s) CHECK(d.dot(random_achievable(rng, gen)) <= d.dot(best) + 1e-9);
  }
}

TEST_CASE("validation") {
  GeneratorSet gen;
  gen.add(force(2, 0), 1.0);
  CHECK_THROWS_AS(achievable(gen, Wrench::Zero()), std::invalid_argument);
  TaskPolytope poly;
  CHECK_THROWS_AS(poly.validate(), std::invalid_argument);
  const TaskPolytope floored = TaskPolytope::axis_aligned(Vec6::Zero());
  CHECK(floored.size() == 12);
  for (double w : floored.weights) CHECK(w == 1e-3);
}

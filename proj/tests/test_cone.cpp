#include <cmath>
#include <vector>

#include "doctest.h"
#include "natmaplab/cone.hpp"

using namespace natmaplab;

namespace {

const double kPi = std::acos(-1.0);

IdealPoint last_axis() {
  Vec e = Vec::Zero(3);
  e[2] = 1.0;
  return IdealPoint(e);
}

/* horosphere through the origin, coned toward the point it is centered at */
ConeChart horosphere_chart() {
  return ConeChart{
      3, [](const Vec& y) { return BallPoint(half_space_to_ball(y, 1.0)); },
      last_axis(), 1.0, true};
}

ConeChart wavy_chart() {
  ConeChart c = horosphere_chart();
  c.base = [](const Vec& y) {
    double lvl = 1.0 + 0.15 * std::sin(2.0 * kPi * y[0]) *
                           std::cos(2.0 * kPi * y[1]);
    return BallPoint(half_space_to_ball(y, lvl));
  };
  return c;
}

}  // namespace

TEST_SUITE("cone") {

TEST_CASE("distance along the cone parameter") {
  ConeChart unit = horosphere_chart();
  CHECK(cone_distance(unit, 0.0) == 0.0);
  CHECK(cone_distance(unit, 0.7) == 0.7);
  CHECK_THROWS_AS(cone_distance(unit, -0.1), ConfigInvalid);
  CHECK_THROWS_AS(cone_distance(unit, 25.0), NearBoundary);

  ConeChart tan_chart = horosphere_chart();
  tan_chart.unit_speed = false;
  tan_chart.eps = 1.0;
  CHECK(cone_distance(tan_chart, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(cone_distance(tan_chart, 1.0), NearBoundary);
  CHECK_THROWS_AS(cone_distance(tan_chart, 0.999), NearBoundary);
}

TEST_CASE("the cone map rides geodesics into the ideal point") {
  for (bool unit_speed : {true, false}) {
    ConeChart chart = horosphere_chart();
    chart.unit_speed = unit_speed;
    Vec y(2);
    y << 0.3, -0.2;
    BallPoint base = chart.base(y);
    CHECK((cone_map(chart, y, 0.0).coords() - base.coords()).norm() < 1e-15);
    double b0 = busemann(chart.theta, base);
    for (double s : {0.2, 0.45}) {
      BallPoint moved = cone_map(chart, y, s);
      CHECK(busemann(chart.theta, moved) ==
            doctest::Approx(b0 - cone_distance(chart, s)).epsilon(1e-9));
    }
  }
}

TEST_CASE("horosphere contraction saturates the decay rates") {
  ConeChart chart = horosphere_chart();
  Mat mesh = box_mesh(3, 2, 0.6);
  std::vector<double> s_values = {0.0, 0.5, 1.0, 2.0};
  DecayReport rep = cone_jacobian_decay_check(chart, mesh, s_values, 0.02);

  CHECK(rep.degenerate_skipped == 0);
  REQUIRE(rep.samples.size() == static_cast<size_t>(mesh.rows()) * s_values.size());
  for (const auto& smp : rep.samples) {
    CHECK(smp.jac_bound == doctest::Approx(std::exp(-2.0 * smp.s)).epsilon(1e-14));
    CHECK(smp.orth_bound == doctest::Approx(std::exp(-smp.s)).epsilon(1e-14));
    // the horosphere contracts exactly at the bound rate, so the measured
    // ratios sit on it up to stencil error
    CHECK(smp.jac_ratio == doctest::Approx(smp.jac_bound).epsilon(2e-3));
    CHECK(smp.orth_ratio == doctest::Approx(smp.orth_bound).epsilon(2e-3));
  }
  CHECK(rep.max_jac_excess <= 2e-3);
  CHECK(rep.max_orth_excess <= 2e-3);
  CHECK(rep.s_dir_norm_err <= 1e-6);
}

TEST_CASE("a collapsed base is skipped rather than divided by") {
  ConeChart chart = horosphere_chart();
  Vec fixed = half_space_to_ball(Vec::Zero(2), 1.0);
  chart.base = [fixed](const Vec&) { return BallPoint(fixed); };
  DecayReport rep =
      cone_jacobian_decay_check(chart, box_mesh(2, 2, 0.5), {0.5}, 0.02);
  CHECK(rep.samples.empty());
  CHECK(rep.degenerate_skipped > 0);
}

TEST_CASE("checks insist on the unit-speed chart") {
  ConeChart chart = horosphere_chart();
  chart.unit_speed = false;
  CHECK_THROWS_AS(
      cone_jacobian_decay_check(chart, box_mesh(2, 2, 0.5), {0.5}, 0.02),
      ConfigInvalid);
  CHECK_THROWS_AS(cone_integral_inequality(chart, box_mesh(2, 2, 0.5), 0.25, 0.02),
                  ConfigInvalid);
}

TEST_CASE("coned volume against the base volume") {
  // the horosphere saturates the comparison
  ConeChart flat = horosphere_chart();
  Mat cells = box_mesh(10, 2, 0.5);
  IntegralPair p = cone_integral_inequality(flat, cells, 0.01, 0.02);
  CHECK(p.rhs > 0.0);
  CHECK(std::abs(p.lhs / p.rhs - 1.0) < 2e-2);

  // a collapsed base contributes nothing to either side
  ConeChart point = horosphere_chart();
  Vec fixed = half_space_to_ball(Vec::Zero(2), 1.0);
  point.base = [fixed](const Vec&) { return BallPoint(fixed); };
  IntegralPair z = cone_integral_inequality(point, cells, 0.01, 0.02);
  CHECK(std::abs(z.lhs) < 1e-12);
  CHECK(std::abs(z.rhs) < 1e-12);

  // tilting the base away from the horosphere opens the gap
  IntegralPair w = cone_integral_inequality(wavy_chart(), cells, 0.01, 0.02);
  CHECK(w.lhs < w.rhs);
  CHECK(w.lhs <= 1.05 * w.rhs);
}

TEST_CASE("cusp coordinates see the same comparison") {
  CuspModel model(3, 2.0 * Mat::Identity(2, 2));

  CuspConeChart flat{model, [&model](const Vec& y) {
                       return CuspPoint{model.lattice() * y, 0.37};
                     }};
  DownstairsReport rep = downstairs_cone_check(flat, 8, 0.02);
  CHECK(std::abs(rep.lhs / rep.rhs - 1.0) < 1e-6);
  CHECK(rep.equivariance_err < 1e-12);

  CuspConeChart wavy{model, [&model](const Vec& y) {
                       double t = 0.37 + 0.05 * std::sin(2.0 * kPi * y[0]);
                       return CuspPoint{model.lattice() * y, t};
                     }};
  DownstairsReport wr = downstairs_cone_check(wavy, 8, 0.02);
  CHECK(wr.lhs < wr.rhs);
  CHECK(wr.equivariance_err < 1e-12);
}

TEST_CASE("mesh constructors") {
  Mat t = torus_mesh(4, 2);
  REQUIRE(t.rows() == 16);
  REQUIRE(t.cols() == 2);
  CHECK(t.minCoeff() == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(t.maxCoeff() == doctest::Approx(0.875).epsilon(1e-14));

  Mat b = box_mesh(3, 2, 1.2);
  REQUIRE(b.rows() == 9);
  CHECK(b.minCoeff() == doctest::Approx(-0.8).epsilon(1e-14));
  CHECK(b.maxCoeff() == doctest::Approx(0.8).epsilon(1e-14));

  CHECK_THROWS_AS(torus_mesh(0, 2), ConfigInvalid);
  CHECK_THROWS_AS(box_mesh(3, 0, 1.0), ConfigInvalid);
}

}  // TEST_SUITE

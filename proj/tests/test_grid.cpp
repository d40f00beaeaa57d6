#include <cmath>

#include "doctest.h"
#include "natmaplab/grid.hpp"
#include "natmaplab/natmap.hpp"

using namespace natmaplab;

namespace {

GridPtr circle(int res = 256) {
  return QuadratureGrid::make(2, GridScheme::circle_uniform, res);
}

}  // namespace

TEST_SUITE("measure") {

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  Vec x, w;
  gauss_legendre(8, x, w);
  CHECK(w.sum() == doctest::Approx(2.0).epsilon(1e-14));
  auto moment = [&](int k) {
    double acc = 0.0;
    for (int i = 0; i < 8; ++i) acc += w[i] * std::pow(x[i], k);
    return acc;
  };
  CHECK(moment(2) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(moment(4) == doctest::Approx(2.0 / 5.0).epsilon(1e-14));
  CHECK(moment(14) == doctest::Approx(2.0 / 15.0).epsilon(1e-13));
  CHECK(moment(1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("scheme names round trip") {
  for (auto s : {GridScheme::circle_uniform, GridScheme::fibonacci_sphere,
                 GridScheme::product_gauss})
    CHECK(scheme_from_name(scheme_name(s)) == s);
  CHECK_THROWS_AS(scheme_from_name("lebedev"), ConfigInvalid);
}

TEST_CASE("grid construction guards") {
  CHECK_THROWS_AS(QuadratureGrid::make(2, GridScheme::circle_uniform, 1),
                  ConfigInvalid);
  CHECK_THROWS_AS(QuadratureGrid::make(3, GridScheme::circle_uniform, 64),
                  UnsupportedDimension);
  CHECK_THROWS_AS(QuadratureGrid::make(2, GridScheme::fibonacci_sphere, 64),
                  UnsupportedDimension);
  CHECK_THROWS_AS(QuadratureGrid::make(2, GridScheme::product_gauss, 8),
                  UnsupportedDimension);
}

TEST_CASE("uniform circle grid") {
  auto g = circle(256);
  CHECK(g->size() == 256);
  for (int i = 0; i < 256; ++i) {
    CHECK(g->weights()[i] == doctest::Approx(1.0 / 256).epsilon(1e-15));
    CHECK(g->nodes().row(i).norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("weights are a probability and low moments are exact") {
  std::vector<GridPtr> grids = {
      circle(2048),
      QuadratureGrid::make(3, GridScheme::fibonacci_sphere, 2000),
      QuadratureGrid::make(3, GridScheme::product_gauss, 24),
      QuadratureGrid::make(4, GridScheme::product_gauss, 12)};
  for (const auto& g : grids) {
    const int n = g->dim();
    CHECK(g->weights().minCoeff() > 0.0);
    CHECK(g->weights().sum() == doctest::Approx(1.0).epsilon(1e-13));
    Vec first = g->nodes().transpose() * g->weights();
    CHECK(first.norm() < 1e-12);
    Mat second = g->nodes().transpose() * g->weights().asDiagonal() * g->nodes();
    CHECK((second - Mat::Identity(n, n) / n).norm() < 1e-12);
  }
}

TEST_CASE("nearest nodes") {
  auto g = circle(64);
  Vec d = g->nodes().row(20).transpose();
  auto idx = g->nearest(d, 3);
  REQUIRE(idx.size() == 3);
  CHECK(idx[0] == 20);
  CHECK(idx[1] != idx[2]);
}

TEST_CASE("boundary function needs matching value count") {
  auto g = circle(64);
  CHECK_THROWS_AS(BoundaryFunction(g, Vec::Zero(63)), GridMismatch);
  BoundaryFunction f(g, Vec::Ones(64));
  BoundaryFunction other(circle(128), Vec::Ones(128));
  CHECK_THROWS_AS(l2_inner(f, other), GridMismatch);
}

TEST_CASE("l2 structure") {
  for (auto g : {circle(512),
                 QuadratureGrid::make(3, GridScheme::product_gauss, 16)}) {
    BoundaryFunction one(g, Vec::Ones(g->size()));
    CHECK(l2_inner(one, one) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(l2_norm(one) == doctest::Approx(1.0).epsilon(1e-13));

    Rng rng(2);
    Vec a(g->size()), b(g->size());
    for (int t = 0; t < 10; ++t) {
      for (int i = 0; i < g->size(); ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
      }
      BoundaryFunction fa(g, a), fb(g, b);
      CHECK(std::abs(l2_inner(fa, fb)) <= l2_norm(fa) * l2_norm(fb) + 1e-12);
      CHECK(l2_distance(fa, fb) <=
            l2_norm(fa) + l2_norm(fb) + 1e-12); /* triangle through 0 */
    }
  }
}

TEST_CASE("visual density at the origin is the measure itself") {
  for (auto g : {circle(256),
                 QuadratureGrid::make(3, GridScheme::fibonacci_sphere, 500)}) {
    BoundaryFunction d = visual_density(g, BallPoint::origin(g->dim()));
    CHECK((d.values.array() - 1.0).abs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("visual density keeps unit mass") {
  Rng rng(5);

  // accurate schemes: quadrature converges far below the check tolerance
  auto g2 = circle(4096);
  auto g3 = QuadratureGrid::make(3, GridScheme::product_gauss, 64);
  for (auto g : {g2, g3}) {
    const int n = g->dim();
    for (double r : {0.3, 0.6, 0.8}) {
      Vec dir(n);
      for (int i = 0; i < n; ++i) dir[i] = rng.normal();
      dir *= r / dir.norm();
      BoundaryFunction d = visual_density(g, BallPoint(dir));
      BoundaryFunction one(g, Vec::Ones(g->size()));
      CHECK(l2_inner(d, one) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  // the sampling lattice carries only a degree-two moment correction
  auto gf = QuadratureGrid::make(3, GridScheme::fibonacci_sphere, 2000);
  Vec dir(3);
  dir << 0.6, 0.0, 0.0;
  BoundaryFunction d = visual_density(gf, BallPoint(dir));
  BoundaryFunction one(gf, Vec::Ones(gf->size()));
  CHECK(l2_inner(d, one) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("visual density concentrates toward the chart direction") {
  auto g = circle(256);
  Vec x = 0.75 * g->nodes().row(40).transpose();
  BoundaryFunction d = visual_density(g, BallPoint(x));
  int argmax = 0;
  d.values.maxCoeff(&argmax);
  CHECK(argmax == 40);
}

TEST_CASE("radial projection") {
  auto g = circle(128);
  Rng rng(7);
  Vec v(g->size());
  for (int i = 0; i < g->size(); ++i) v[i] = 1.5 + rng.uniform();
  BoundaryFunction f(g, v);
  BoundaryFunction p = radial_project(f);
  CHECK(l2_norm(p) == doctest::Approx(1.0).epsilon(1e-13));
  // already unit: fixed point
  BoundaryFunction pp = radial_project(p);
  CHECK((pp.values - p.values).norm() < 1e-13);
  // positive homogeneity
  BoundaryFunction cf(g, 3.7 * v);
  CHECK((radial_project(cf).values - p.values).norm() < 1e-12);
  CHECK_THROWS_AS(radial_project(BoundaryFunction(g, Vec::Zero(g->size()))),
                  ZeroFunction);
}

TEST_CASE("radial projection is 2-lipschitz outside the half ball") {
  auto g = circle(128);
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    Vec a(g->size()), b(g->size());
    for (int i = 0; i < g->size(); ++i) {
      a[i] = rng.normal();
      b[i] = a[i] + 0.1 * rng.normal();
    }
    BoundaryFunction fa(g, a), fb(g, b);
    if (l2_norm(fa) < 0.5 || l2_norm(fb) < 0.5) continue;
    CHECK(l2_distance(radial_project(fa), radial_project(fb)) <=
          2.0 * l2_distance(fa, fb) + 1e-12);
  }
}

TEST_CASE("identity acts trivially") {
  auto g = circle(128);
  Rng rng(13);
  Vec v(g->size());
  for (int i = 0; i < g->size(); ++i) v[i] = rng.uniform();
  BoundaryFunction f(g, v);
  BoundaryFunction out = isom_action(MobiusIsometry::identity(2), f, 1.0);
  CHECK((out.values - f.values).norm() < 1e-12);
}

TEST_CASE("node-aligned rotations act by exact permutation") {
  const int N = 256, k = 7;
  auto g = circle(N);
  double a = 2.0 * M_PI * k / N;
  Mat r(2, 2);
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  Rng rng(17);
  Vec v(N);
  for (int i = 0; i < N; ++i) v[i] = rng.uniform();
  BoundaryFunction f(g, v);
  BoundaryFunction out = isom_action(MobiusIsometry::rotation(r), f, 1.0);
  for (int i = 0; i < N; ++i)
    CHECK(out.values[i] == doctest::Approx(v[(i - k + N) % N]).epsilon(1e-12));
  CHECK(l2_norm(out) == doctest::Approx(l2_norm(f)).epsilon(1e-13));
}

TEST_CASE("action cocycle matches the symmetric embedding") {
  // both sides evaluated independently: gamma acting on phi0(p) against
  // phi0 at the moved point
  Rng rng(19);
  auto g2 = circle(4096);
  for (int t = 0; t < 3; ++t) {
    Vec pc(2);
    pc << rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4);
    BallPoint p(pc);
    MobiusIsometry gam = random_isometry(2, rng, 0.3);
    BoundaryFunction lhs = isom_action(gam, phi0(p, g2), 1.0);
    BoundaryFunction rhs = phi0(gam.apply(p), g2);
    CHECK(l2_distance(lhs, rhs) < 2e-3);
  }

  auto g3 = QuadratureGrid::make(3, GridScheme::fibonacci_sphere, 2000);
  Vec q(3);
  q << 0.25, -0.1, 0.2;
  BallPoint p3(q);
  Rng rng3(23);
  MobiusIsometry gam3 = random_isometry(3, rng3, 0.25);
  BoundaryFunction lhs3 = isom_action(gam3, phi0(p3, g3), 2.0);
  BoundaryFunction rhs3 = phi0(gam3.apply(p3), g3);
  CHECK(l2_distance(lhs3, rhs3) < 5e-2);
}

}  // TEST_SUITE

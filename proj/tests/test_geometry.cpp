#include <cmath>
#include <limits>

#include "doctest.h"
#include "natmaplab/cusp.hpp"
#include "natmaplab/geometry.hpp"
#include "natmaplab/grid.hpp"

using namespace natmaplab;

namespace {

BallPoint rand_point(Rng& rng, int n, double rmax) {
  Vec p(n);
  double nrm = 0.0;
  do {
    for (int i = 0; i < n; ++i) p[i] = rng.normal();
    nrm = p.norm();
  } while (nrm < 1e-12);
  p *= rmax * std::pow(rng.uniform(), 1.0 / n) / nrm;
  return BallPoint(p);
}

IdealPoint rand_ideal(Rng& rng, int n) {
  Vec d(n);
  double nrm = 0.0;
  do {
    for (int i = 0; i < n; ++i) d[i] = rng.normal();
    nrm = d.norm();
  } while (nrm < 1e-12);
  return IdealPoint(d / nrm);
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("construction guards") {
  CHECK_THROWS_AS(BallPoint(Vec::Ones(2)), NearBoundary);
  CHECK_THROWS_AS(BallPoint(Vec::Zero(1)), UnsupportedDimension);
  CHECK_THROWS_AS(IdealPoint(Vec::Zero(3)), Error);
  // unit normalization on construction
  Vec d(3);
  d << 3.0, 0.0, 4.0;
  CHECK(IdealPoint(d).dir().norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("radial distance equals the arclength integral") {
  for (int n : {2, 3, 4}) {
    BallPoint o = BallPoint::origin(n);
    CHECK(hyp_distance(o, o) == 0.0);
    for (double r : {0.1, 0.5, 0.9}) {
      Vec p = Vec::Zero(n);
      p[0] = r;
      // independent oracle: quadrature of the radial metric 2/(1-s^2)
      Vec x, w;
      gauss_legendre(64, x, w);
      double arc = 0.0;
      for (int i = 0; i < x.size(); ++i) {
        double s = 0.5 * r * (x[i] + 1.0);
        arc += 0.5 * r * w[i] * 2.0 / (1.0 - s * s);
      }
      double d = hyp_distance(o, BallPoint(p));
      CHECK(d == doctest::Approx(arc).epsilon(1e-12));
      CHECK(d == doctest::Approx(std::log((1 + r) / (1 - r))).epsilon(1e-12));
    }
  }
}

TEST_CASE("distance is isometry invariant and symmetric") {
  Rng rng(7);
  for (int n : {2, 3}) {
    for (int t = 0; t < 20; ++t) {
      BallPoint p = rand_point(rng, n, 0.8), q = rand_point(rng, n, 0.8);
      MobiusIsometry g = random_isometry(n, rng);
      double d = hyp_distance(p, q);
      CHECK(hyp_distance(q, p) == doctest::Approx(d).epsilon(1e-12));
      CHECK(hyp_distance(g.apply(p), g.apply(q)) ==
            doctest::Approx(d).epsilon(1e-9));
    }
  }
}

TEST_CASE("busemann decreases at unit rate toward the ideal point") {
  Rng rng(3);
  for (int n : {2, 3, 4}) {
    BallPoint o = BallPoint::origin(n);
    IdealPoint th = rand_ideal(rng, n);
    CHECK(busemann(th, o) == doctest::Approx(0.0).epsilon(1e-15));
    for (double t : {0.3, 1.0, 3.0}) {
      CHECK(busemann(th, geodesic_toward(o, th, t)) ==
            doctest::Approx(-t).epsilon(1e-10));
      // opposite ray
      CHECK(busemann(th, geodesic_step(o, -th.dir(), t)) ==
            doctest::Approx(t).epsilon(1e-10));
    }
    // check the rate against hyp_distance along the ray from a generic point
    BallPoint x = rand_point(rng, n, 0.6);
    BallPoint y = geodesic_toward(x, th, 0.7);
    CHECK(hyp_distance(x, y) == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(busemann(th, y) - busemann(th, x) == doctest::Approx(-0.7).epsilon(1e-9));
  }
}

TEST_CASE("busemann gradient is hyperbolic-unit") {
  Rng rng(11);
  for (int n : {2, 3, 4}) {
    for (int t = 0; t < 10; ++t) {
      BallPoint x = rand_point(rng, n, 0.85);
      IdealPoint th = rand_ideal(rng, n);
      TangentVector g = busemann_grad(th, x);
      CHECK(g.hyp_norm() == doctest::Approx(1.0).epsilon(1e-10));

      // finite-difference oracle: the differential along a chart direction
      // is the euclidean dot with lambda^2 * chart gradient
      Vec v(n);
      for (int i = 0; i < n; ++i) v[i] = rng.normal();
      v.normalize();
      double delta = 1e-6;
      double fd = (busemann(th, BallPoint(x.coords() + delta * v)) -
                   busemann(th, BallPoint(x.coords() - delta * v))) /
                  (2.0 * delta);
      double lam = conformal_factor(x);
      CHECK(fd == doctest::Approx(lam * lam * g.chart.dot(v)).epsilon(1e-5));
    }
  }
}

TEST_CASE("gradient points away from the ideal point at the origin") {
  Rng rng(5);
  for (int n : {2, 3, 4}) {
    IdealPoint th = rand_ideal(rng, n);
    TangentVector g = busemann_grad(th, BallPoint::origin(n));
    Vec frame = chart_to_frame(g.base, g.chart);
    CHECK((frame + th.dir()).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("gradient pairs to -1 with the velocity toward theta") {
  Rng rng(13);
  for (int n : {2, 3}) {
    BallPoint x = rand_point(rng, n, 0.7);
    IdealPoint th = rand_ideal(rng, n);
    double delta = 1e-5;
    double fd = (busemann(th, geodesic_toward(x, th, delta)) -
                 busemann(th, geodesic_toward(x, th, -delta))) /
                (2.0 * delta);
    CHECK(fd == doctest::Approx(-1.0).epsilon(1e-7));
  }
}

TEST_CASE("busemann hessian is the projection off the gradient") {
  Rng rng(17);
  for (int n : {2, 3, 4}) {
    BallPoint x = rand_point(rng, n, 0.8);
    IdealPoint th = rand_ideal(rng, n);
    Mat H = busemann_hess_frame(th, x);
    Vec u = chart_to_frame(x, busemann_grad(th, x).chart);

    CHECK((H * u).norm() == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(H.trace() == doctest::Approx(double(n - 1)).epsilon(1e-10));
    CHECK((H * H - H).norm() == doctest::Approx(0.0).epsilon(1e-10));

    // second-difference oracle along a unit frame direction w: geodesics
    // through x give the covariant second derivative directly
    Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = rng.normal();
    w -= u * u.dot(w);
    w.normalize();
    auto f = [&](double s) { return busemann(th, geodesic_step(x, w, s)); };
    double delta = 1e-3;
    double second = (f(delta) - 2.0 * f(0.0) + f(-delta)) / (delta * delta);
    CHECK(second == doctest::Approx(w.dot(H * w)).epsilon(1e-4));
    auto fu = [&](double s) { return busemann(th, geodesic_step(x, u, s)); };
    double second_u = (fu(delta) - 2.0 * fu(0.0) + fu(-delta)) / (delta * delta);
    CHECK(std::abs(second_u) < 1e-5);
  }
}

TEST_CASE("poisson kernel") {
  Rng rng(23);
  for (int n : {2, 3, 4}) {
    IdealPoint th = rand_ideal(rng, n);
    CHECK(poisson_kernel(BallPoint::origin(n), th) ==
          doctest::Approx(1.0).epsilon(1e-15));
    for (int t = 0; t < 20; ++t) {
      BallPoint x = rand_point(rng, n, 0.9);
      double pk = poisson_kernel(x, th);
      CHECK(pk == doctest::Approx(std::exp(-busemann(th, x))).epsilon(1e-12));
      CHECK(pk >= (1.0 - x.norm()) / (1.0 + x.norm()) - 1e-12);
    }
  }
}

TEST_CASE("geodesic flow toward an ideal point") {
  Rng rng(29);
  for (int n : {2, 3}) {
    BallPoint x = rand_point(rng, n, 0.6);
    IdealPoint th = rand_ideal(rng, n);
    CHECK((geodesic_toward(x, th, 0.0).coords() - x.coords()).norm() == 0.0);
    BallPoint two = geodesic_toward(geodesic_toward(x, th, 0.8), th, 1.3);
    BallPoint one = geodesic_toward(x, th, 2.1);
    CHECK((two.coords() - one.coords()).norm() < 1e-8);
    // the chart direction toward theta at the origin is theta itself
    CHECK((direction_toward(BallPoint::origin(n), th) - th.dir()).norm() < 1e-12);
  }
}

TEST_CASE("stable busemann transport along tilted rays") {
  Rng rng(31);
  for (int n : {2, 3}) {
    BallPoint x = rand_point(rng, n, 0.5);
    IdealPoint th = rand_ideal(rng, n);
    double b0 = busemann(th, x);
    Vec toward = direction_toward(x, th);
    for (int t = 0; t < 5; ++t) {
      Vec u(n);
      for (int i = 0; i < n; ++i) u[i] = rng.normal();
      u.normalize();
      for (double r : {0.3, 2.0, 8.0}) {
        double direct = busemann(th, geodesic_step(x, u, r));
        CHECK(busemann_along(b0, r, u.dot(toward)) ==
              doctest::Approx(direct).epsilon(1e-9));
      }
    }
  }
  // far past chart precision the transported value stays usable
  CHECK(busemann_along(0.0, 300.0, 1.0) == doctest::Approx(-300.0).epsilon(1e-12));
  CHECK(busemann_along(0.0, 500.0, -1.0) == doctest::Approx(500.0).epsilon(1e-12));
  CHECK(std::isfinite(busemann_along(0.2, 700.0, 0.999)));
}

TEST_CASE("moebius addition") {
  Rng rng(37);
  for (int n : {2, 3}) {
    Vec u(n);
    for (int i = 0; i < n; ++i) u[i] = rng.normal();
    u *= 0.5 / u.norm();
    CHECK((mobius_add(u, Vec::Zero(n)) - u).norm() < 1e-14);
    CHECK(mobius_add(-u, u).norm() < 1e-14);
    Vec w = rand_ideal(rng, n).dir();
    CHECK(mobius_add_boundary(u, w).norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("isometries preserve distance and fix what they should") {
  Rng rng(41);
  for (int n : {2, 3}) {
    BallPoint x = rand_point(rng, n, 0.7), y = rand_point(rng, n, 0.7);

    MobiusIsometry id = MobiusIsometry::identity(n);
    CHECK((id.apply(x).coords() - x.coords()).norm() == 0.0);

    MobiusIsometry rot = MobiusIsometry::rotation(random_rotation(n, rng));
    CHECK(rot.apply(BallPoint::origin(n)).norm() < 1e-15);

    MobiusIsometry tr = MobiusIsometry::translation_to(x);
    CHECK((tr.origin_target().coords() - x.coords()).norm() < 1e-14);

    MobiusIsometry g = random_isometry(n, rng);
    CHECK(hyp_distance(g.apply(x), g.apply(y)) ==
          doctest::Approx(hyp_distance(x, y)).epsilon(1e-9));
    CHECK(g.apply_ideal(rand_ideal(rng, n)).dir().norm() ==
          doctest::Approx(1.0).epsilon(1e-12));

    // round trip through the inverse
    BallPoint back = g.inverse().apply(g.apply(x));
    CHECK((back.coords() - x.coords()).norm() < 1e-12);

    MobiusIsometry g2 = random_isometry(n, rng);
    BallPoint lhs = g.compose(g2).apply(x);
    BallPoint rhs = g.apply(g2.apply(x));
    CHECK((lhs.coords() - rhs.coords()).norm() < 1e-14);
  }
}

TEST_CASE("random rotations are special orthogonal") {
  Rng rng(43);
  for (int n : {2, 3, 4}) {
    Mat r = random_rotation(n, rng);
    CHECK((r.transpose() * r - Mat::Identity(n, n)).norm() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("cusp slice and tail volumes") {
  CuspModel sq(3, Mat::Identity(2, 2));
  CHECK(sq.slice_volume(0.0) == doctest::Approx(1.0));
  CHECK(sq.slice_volume(1.0) == doctest::Approx(std::exp(-2.0)));
  CHECK(sq.tail_volume(0.0) == doctest::Approx(0.5));
  CHECK(sq.tail_volume(2.0) ==
        doctest::Approx(sq.slice_volume(2.0) / 2.0).epsilon(1e-15));

  Mat l(2, 2);
  l << 2.0, 0.3, 0.0, 1.5;
  CuspModel skew(3, l);
  CHECK(skew.base_volume() == doctest::Approx(3.0));
  CHECK(skew.slice_volume(0.7) == doctest::Approx(3.0 * std::exp(-1.4)));

  CuspModel line(2, Mat::Identity(1, 1) * 2.0);
  CHECK(line.slice_volume(1.0) == doctest::Approx(2.0 * std::exp(-1.0)));

  CHECK_THROWS_AS(CuspModel(1, Mat::Identity(1, 1)), UnsupportedDimension);
  CHECK_THROWS_AS(CuspModel(3, Mat::Identity(1, 1)), Error);
  CHECK_THROWS_AS(CuspModel(3, Mat::Zero(2, 2)), Error);
}

TEST_CASE("shift contracts slices by e^{-r}") {
  CuspModel m(3, Mat::Identity(2, 2));
  Vec xi0 = Vec::Constant(2, 0.4);
  Vec xi1 = xi0;
  xi1[0] += 1e-3; /* short enough that chord and path lengths agree */
  CuspPoint a{xi0, 0.5}, b{xi1, 0.5};
  double before = m.distance(a, b);
  for (double r : {0.5, 1.0, 2.0}) {
    CuspPoint as = m.shift(a, r), bs = m.shift(b, r);
    CHECK(as.t == a.t + r);
    CHECK(m.distance(as, bs) / before ==
          doctest::Approx(std::exp(-r)).epsilon(1e-6));
  }
}

TEST_CASE("cusp lift is isometric and aims at the ideal point") {
  CuspModel m(3, Mat::Identity(2, 2) * 2.0);
  Rng rng(47);
  CHECK((half_space_to_ball(Vec::Zero(2), 1.0)).norm() == 0.0);
  for (int t = 0; t < 20; ++t) {
    CuspPoint a{Vec(2), rng.uniform(0.0, 3.0)}, b{Vec(2), rng.uniform(0.0, 3.0)};
    for (int i = 0; i < 2; ++i) {
      // nearby interior points, so the identity translate realizes the minimum
      a.xi[i] = rng.uniform(0.8, 1.2);
      b.xi[i] = rng.uniform(0.8, 1.2);
    }
    CHECK(hyp_distance(m.lift(a), m.lift(b)) ==
          doctest::Approx(m.distance(a, b)).epsilon(1e-10));
  }
  // raising t walks toward the cusp at unit speed
  IdealPoint th = m.ideal_point();
  Vec xi = Vec::Constant(2, 0.3);
  double b1 = busemann(th, m.lift({xi, 1.0}));
  double b2 = busemann(th, m.lift({xi, 2.5}));
  CHECK(b1 - b2 == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("wrap is lattice periodic") {
  Mat l(2, 2);
  l << 2.0, 0.3, 0.0, 1.5;
  CuspModel m(3, l);
  Rng rng(53);
  for (int t = 0; t < 10; ++t) {
    Vec xi(2);
    xi << rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0);
    Vec shifted = xi + 3.0 * l.col(0) - 2.0 * l.col(1);
    CHECK((m.wrap(xi) - m.wrap(shifted)).norm() < 1e-10);
  }
}

TEST_CASE("nearest translate realizes the quotient distance") {
  Mat l(2, 2);
  l << 1.3, 0.4, 0.0, 0.9;
  CuspModel m(3, l);
  Rng rng(59);
  for (int t = 0; t < 30; ++t) {
    CuspPoint a{Vec(2), rng.uniform(0.0, 2.0)}, b{Vec(2), rng.uniform(0.0, 2.0)};
    for (int i = 0; i < 2; ++i) {
      a.xi[i] = rng.uniform(-3.0, 3.0);
      b.xi[i] = rng.uniform(-3.0, 3.0);
    }
    double d = m.distance(a, b);

    // brute-force oracle over a larger translate window
    double brute = std::numeric_limits<double>::infinity();
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j) {
        Vec lam = i * l.col(0) + j * l.col(1);
        brute = std::min(brute,
                         half_space_distance(m.wrap(a.xi), std::exp(a.t),
                                             m.wrap(b.xi) + lam, std::exp(b.t)));
      }
    CHECK(d == doctest::Approx(brute).epsilon(1e-12));

    // the reported translate reproduces the distance through the lift
    CuspPoint nb = m.nearest_translate(a, b);
    CHECK(nb.t == b.t);
    CHECK(hyp_distance(m.lift(a), m.lift_rep(nb)) ==
          doctest::Approx(d).epsilon(1e-9));
  }
}

}  // TEST_SUITE

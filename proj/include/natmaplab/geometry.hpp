#pragma once

#include <Eigen/Dense>
#include <vector>

#include "natmaplab/errors.hpp"
#include "natmaplab/rng.hpp"

namespace natmaplab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kBallRadiusLimit = 1.0 - 1e-12;  // construction guard
constexpr double kInteriorLimit = 1.0 - 1e-9;     // operation guard

/* Point of hyperbolic n-space in the unit-ball chart, curvature -1,
   metric 4/(1-|x|^2)^2 times euclidean. */
class BallPoint {
 public:
  explicit BallPoint(Vec coords);
  static BallPoint origin(int n) { return BallPoint(Vec::Zero(n)); }

  const Vec& coords() const { return x_; }
  int dim() const { return static_cast<int>(x_.size()); }
  double norm() const { return x_.norm(); }

 private:
  Vec x_;
};

/* Ideal boundary point, a unit direction. */
class IdealPoint {
 public:
  explicit IdealPoint(Vec dir);
  const Vec& dir() const { return d_; }
  int dim() const { return static_cast<int>(d_.size()); }

 private:
  Vec d_;
};

struct TangentVector {
  BallPoint base;
  Vec chart;  // components in the ball chart

  double hyp_norm() const;
};

/* conformal factor: hyperbolic length = factor * euclidean chart length */
inline double conformal_factor(const BallPoint& x) {
  return 2.0 / (1.0 - x.coords().squaredNorm());
}

/* chart components of the i-th vector of the standard orthonormal frame
   are (1-|x|^2)/2 * e_i; these helpers convert components */
inline Vec chart_to_frame(const BallPoint& x, const Vec& chart) {
  return chart * conformal_factor(x);
}
inline Vec frame_to_chart(const BallPoint& x, const Vec& frame) {
  return frame / conformal_factor(x);
}

void check_interior(const BallPoint& x);

double hyp_distance(const BallPoint& p, const BallPoint& q);

/* Busemann function of theta normalized to vanish at the origin:
   B(x) = log(|x-theta|^2 / (1-|x|^2)). Decreases at unit rate toward theta. */
double busemann(const IdealPoint& theta, const BallPoint& x);

/* hyperbolic gradient of B; unit vector pointing away from theta */
TangentVector busemann_grad(const IdealPoint& theta, const BallPoint& x);

/* Hessian of B in the orthonormal frame at x: identity minus the outer
   square of the gradient (curvature -1 horosphere shape operator). */
Mat busemann_hess_frame(const IdealPoint& theta, const BallPoint& x);

/* e^{-B_theta(x)} = (1-|x|^2)/|x-theta|^2 */
double poisson_kernel(const BallPoint& x, const IdealPoint& theta);

/* Busemann value at the point a hyperbolic distance r from x in the unit
   direction u (frame components), given B at x and the cosine of the angle
   between u and the direction of theta seen from x. Stable for all r. */
double busemann_along(double b_at_x, double r, double cos_angle);

/* Moebius addition on the ball (the translation taking 0 to u, applied to w) */
Vec mobius_add(const Vec& u, const Vec& w);
/* same map extended to a unit boundary vector */
Vec mobius_add_boundary(const Vec& u, const Vec& w);

/* point at hyperbolic distance s from x along the geodesic toward theta */
BallPoint geodesic_toward(const BallPoint& x, const IdealPoint& theta, double s);

/* geodesic step: hyperbolic distance s from x in unit chart direction u */
BallPoint geodesic_step(const BallPoint& x, const Vec& u_chart_unit, double s);

/* unit chart direction at x of the geodesic toward theta */
Vec direction_toward(const BallPoint& x, const IdealPoint& theta);

/* Orientation-preserving ball isometry, stored as a composition of
   elementary factors z -> t (+) R z. Composition appends factors instead of
   fusing them, which keeps the algebra to Moebius addition alone. */
class MobiusIsometry {
 public:
  struct Factor {
    Mat rot;  // orthogonal, det +1
    Vec trans;
  };

  static MobiusIsometry identity(int n);
  static MobiusIsometry rotation(const Mat& r);
  static MobiusIsometry translation_to(const BallPoint& target);

  MobiusIsometry compose(const MobiusIsometry& inner) const;  // this after inner
  MobiusIsometry inverse() const;

  BallPoint apply(const BallPoint& x) const;
  IdealPoint apply_ideal(const IdealPoint& theta) const;
  BallPoint origin_target() const;
  int dim() const { return n_; }
  const std::vector<Factor>& factors() const { return factors_; }

 private:
  explicit MobiusIsometry(int n) : n_(n) {}
  int n_ = 0;
  std::vector<Factor> factors_;  // applied back to front
};

Mat random_rotation(int n, Rng& rng);
MobiusIsometry random_isometry(int n, Rng& rng, double max_radius = 0.7);

}  // namespace natmaplab

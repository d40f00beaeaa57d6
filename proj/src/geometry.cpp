#include "natmaplab/geometry.hpp"

#include <cmath>

namespace natmaplab {

BallPoint::BallPoint(Vec coords) : x_(std::move(coords)) {
  if (x_.size() < 2) throw UnsupportedDimension("BallPoint needs dimension >= 2");
  if (x_.norm() >= kBallRadiusLimit)
    throw NearBoundary("BallPoint at |x| = " + std::to_string(x_.norm()));
}

IdealPoint::IdealPoint(Vec dir) : d_(std::move(dir)) {
  if (d_.size() < 2) throw UnsupportedDimension("IdealPoint needs dimension >= 2");
  double n = d_.norm();
  if (n < 0.5) throw Error("IdealPoint direction degenerate");
  d_ /= n;
}

double TangentVector::hyp_norm() const { return conformal_factor(base) * chart.norm(); }

void check_interior(const BallPoint& x) {
  if (x.norm() >= kInteriorLimit)
    throw NearBoundary("operation at |x| = " + std::to_string(x.norm()));
}

double hyp_distance(const BallPoint& p, const BallPoint& q) {
  check_interior(p);
  check_interior(q);
  double a = 1.0 - p.coords().squaredNorm();
  double b = 1.0 - q.coords().squaredNorm();
  double d2 = (p.coords() - q.coords()).squaredNorm();
  return std::acosh(1.0 + 2.0 * d2 / (a * b));
}

double busemann(const IdealPoint& theta, const BallPoint& x) {
  check_interior(x);
  double d2 = (x.coords() - theta.dir()).squaredNorm();
  return std::log(d2 / (1.0 - x.coords().squaredNorm()));
}

static Vec busemann_grad_euclid(const IdealPoint& theta, const BallPoint& x) {
  Vec diff = x.coords() - theta.dir();
  return 2.0 * diff / diff.squaredNorm() +
         2.0 / (1.0 - x.coords().squaredNorm()) * x.coords();
}

TangentVector busemann_grad(const IdealPoint& theta, const BallPoint& x) {
  check_interior(x);
  double s = 1.0 - x.coords().squaredNorm();
  // raise the index with the conformal metric: grad = (s^2/4) * euclid grad
  Vec g = (s * s / 4.0) * busemann_grad_euclid(theta, x);
  return TangentVector{x, g};
}

Mat busemann_hess_frame(const IdealPoint& theta, const BallPoint& x) {
  check_interior(x);
  TangentVector g = busemann_grad(theta, x);
  Vec u = chart_to_frame(x, g.chart);  // unit in the frame
  int n = x.dim();
  return Mat::Identity(n, n) - u * u.transpose();
}

double poisson_kernel(const BallPoint& x, const IdealPoint& theta) {
  check_interior(x);
  return (1.0 - x.coords().squaredNorm()) / (x.coords() - theta.dir()).squaredNorm();
}

double busemann_along(double b_at_x, double r, double cos_angle) {
  double c = cos_angle;
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  // B(y) - B(x) = log((1-c)/2 e^r + (1+c)/2 e^{-r}), written to stay finite
  return b_at_x + r + std::log(0.5 * (1.0 - c) + 0.5 * (1.0 + c) * std::exp(-2.0 * r));
}

Vec mobius_add(const Vec& u, const Vec& w) {
  double uw = u.dot(w);
  double u2 = u.squaredNorm();
  double w2 = w.squaredNorm();
  double den = 1.0 + 2.0 * uw + u2 * w2;
  return ((1.0 + 2.0 * uw + w2) * u + (1.0 - u2) * w) / den;
}

Vec mobius_add_boundary(const Vec& u, const Vec& w) {
  double uw = u.dot(w);
  double u2 = u.squaredNorm();
  double den = 1.0 + 2.0 * uw + u2;
  Vec r = (2.0 * (1.0 + uw) * u + (1.0 - u2) * w) / den;
  return r / r.norm();  // unit modulo round-off
}

Vec direction_toward(const BallPoint& x, const IdealPoint& theta) {
  // pull theta back to the origin chart by the translation taking x to 0
  return mobius_add_boundary(-x.coords(), theta.dir());
}

BallPoint geodesic_step(const BallPoint& x, const Vec& u, double s) {
  check_interior(x);
  return BallPoint(mobius_add(x.coords(), std::tanh(0.5 * s) * u));
}

BallPoint geodesic_toward(const BallPoint& x, const IdealPoint& theta, double s) {
  return geodesic_step(x, direction_toward(x, theta), s);
}

MobiusIsometry MobiusIsometry::identity(int n) { return MobiusIsometry(n); }

MobiusIsometry MobiusIsometry::rotation(const Mat& r) {
  MobiusIsometry g(static_cast<int>(r.rows()));
  g.factors_.push_back({r, Vec::Zero(r.rows())});
  return g;
}

MobiusIsometry MobiusIsometry::translation_to(const BallPoint& target) {
  MobiusIsometry g(target.dim());
  g.factors_.push_back({Mat::Identity(target.dim(), target.dim()), target.coords()});
  return g;
}

MobiusIsometry MobiusIsometry::compose(const MobiusIsometry& inner) const {
  MobiusIsometry g(n_);
  g.factors_ = inner.factors_;
  g.factors_.insert(g.factors_.end(), factors_.begin(), factors_.end());
  return g;
}

MobiusIsometry MobiusIsometry::inverse() const {
  MobiusIsometry g(n_);
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) {
    // inverse of z -> t (+) Rz is z -> R^T((-t) (+) z) = (-R^T t) (+) R^T z
    g.factors_.push_back({it->rot.transpose(), -(it->rot.transpose() * it->trans)});
  }
  return g;
}

BallPoint MobiusIsometry::apply(const BallPoint& x) const {
  Vec z = x.coords();
  for (const auto& f : factors_) z = mobius_add(f.trans, f.rot * z);
  return BallPoint(z);
}

IdealPoint MobiusIsometry::apply_ideal(const IdealPoint& theta) const {
  Vec z = theta.dir();
  for (const auto& f : factors_) z = mobius_add_boundary(f.trans, f.rot * z);
  return IdealPoint(z);
}

BallPoint MobiusIsometry::origin_target() const {
  return apply(BallPoint::origin(n_));
}

Mat random_rotation(int n, Rng& rng) {
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

MobiusIsometry random_isometry(int n, Rng& rng, double max_radius) {
  Mat r = random_rotation(n, rng);
  Vec dir(n);
  for (int i = 0; i < n; ++i) dir(i) = rng.normal();
  dir.normalize();
  double rad = max_radius * std::pow(rng.uniform(), 1.0 / n);
  return MobiusIsometry::translation_to(BallPoint(rad * dir))
      .compose(MobiusIsometry::rotation(r));
}

}  // namespace natmaplab

#include "natmaplab/cusp.hpp"

#include <cmath>

namespace natmaplab {

CuspModel::CuspModel(int n, Mat lattice)
    : n_(n), lattice_(std::move(lattice)) {
  if (n < 2) throw UnsupportedDimension("cusp model needs n >= 2");
  if (lattice_.rows() != n - 1 || lattice_.cols() != n - 1)
    throw Error("cusp lattice must be (n-1) x (n-1)");
  base_volume_ = std::abs(lattice_.determinant());
  if (base_volume_ < 1e-12) throw Error("degenerate cusp lattice");
  lattice_inv_ = lattice_.inverse();
}

double CuspModel::slice_volume(double t) const {
  return std::exp(-(n_ - 1) * t) * base_volume_;
}

double CuspModel::tail_volume(double t0) const {
  return std::exp(-(n_ - 1) * t0) * base_volume_ / (n_ - 1);
}

CuspPoint CuspModel::shift(const CuspPoint& p, double r) const {
  return CuspPoint{p.xi, p.t + r};
}

Vec CuspModel::wrap(const Vec& xi) const {
  Vec c = lattice_inv_ * xi;
  for (int i = 0; i < c.size(); ++i) c(i) -= std::floor(c(i));
  return lattice_ * c;
}

double half_space_distance(const Vec& xi1, double y1, const Vec& xi2, double y2) {
  double num = (xi1 - xi2).squaredNorm() + (y1 - y2) * (y1 - y2);
  return std::acosh(1.0 + num / (2.0 * y1 * y2));
}

CuspPoint CuspModel::nearest_translate(const CuspPoint& a, const CuspPoint& b) const {
  Vec da = wrap(a.xi);
  Vec db = wrap(b.xi);
  double ya = std::exp(a.t), yb = std::exp(b.t);
  int m = n_ - 1;
  double best = std::numeric_limits<double>::infinity();
  Vec arg = db;
  // nearest lattice translate; range 1 suffices once both are wrapped
  std::vector<int> k(m, -1);
  while (true) {
    Vec lam = Vec::Zero(m);
    for (int i = 0; i < m; ++i) lam += k[i] * lattice_.col(i);
    double d = half_space_distance(da, ya, db + lam, yb);
    if (d < best) {
      best = d;
      arg = db + lam;
    }
    int i = 0;
    for (; i < m; ++i) {
      if (k[i] < 1) {
        ++k[i];
        break;
      }
      k[i] = -1;
    }
    if (i == m) break;
  }
  return {arg, b.t};
}

double CuspModel::distance(const CuspPoint& a, const CuspPoint& b) const {
  CuspPoint nb = nearest_translate(a, b);
  return half_space_distance(wrap(a.xi), std::exp(a.t), nb.xi, std::exp(b.t));
}

Vec half_space_to_ball(const Vec& xi, double y) {
  int m = static_cast<int>(xi.size());
  double den = xi.squaredNorm() + (1.0 + y) * (1.0 + y);
  Vec x(m + 1);
  x.head(m) = 2.0 * xi / den;
  x(m) = (xi.squaredNorm() + y * y - 1.0) / den;
  return x;
}

BallPoint CuspModel::lift(const CuspPoint& p) const {
  return BallPoint(half_space_to_ball(wrap(p.xi), std::exp(p.t)));
}

BallPoint CuspModel::lift_rep(const CuspPoint& p) const {
  return BallPoint(half_space_to_ball(p.xi, std::exp(p.t)));
}

IdealPoint CuspModel::ideal_point() const {
  Vec e = Vec::Zero(n_);
  e(n_ - 1) = 1.0;
  return IdealPoint(e);
}

}  // namespace natmaplab

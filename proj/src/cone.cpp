#include "natmaplab/cone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "natmaplab/errors.hpp"
#include "natmaplab/grid.hpp"

namespace natmaplab {

double cone_distance(const ConeChart& chart, double s) {
  if (s < 0.0) throw ConfigInvalid("cone parameter must be nonnegative");
  double d;
  if (chart.unit_speed) {
    d = s;
  } else {
    if (!(s < chart.eps))
      throw NearBoundary("cone parameter reached the chart depth");
    d = std::tan(s * std::acos(-1.0) / (2.0 * chart.eps));
  }
  if (d > 20.0) throw NearBoundary("cone point too deep for the chart");
  return d;
}

BallPoint cone_map(const ConeChart& chart, const Vec& y, double s) {
  BallPoint x = chart.base(y);
  double d = cone_distance(chart, s);
  if (d == 0.0) return x;
  return geodesic_toward(x, chart.theta, d);
}

namespace {

/* frame components of the base map's mesh-direction derivatives */
Mat base_frame_diff(const ConeChart& chart, const Vec& y, double h) {
  const int n = chart.n, m = n - 1;
  BallPoint x = chart.base(y);
  Mat w(n, m);
  for (int i = 0; i < m; ++i) {
    Vec e = Vec::Zero(m);
    e[i] = h;
    Vec d = (chart.base(y + e).coords() - chart.base(y - e).coords()) / (2.0 * h);
    w.col(i) = chart_to_frame(x, d);
  }
  return w;
}

/* same derivatives for the coned map at parameter s */
Mat cone_frame_diff(const ConeChart& chart, const Vec& y, double s, double h) {
  const int n = chart.n, m = n - 1;
  BallPoint c = cone_map(chart, y, s);
  Mat w(n, m);
  for (int i = 0; i < m; ++i) {
    Vec e = Vec::Zero(m);
    e[i] = h;
    Vec d = (cone_map(chart, y + e, s).coords() -
             cone_map(chart, y - e, s).coords()) /
            (2.0 * h);
    w.col(i) = chart_to_frame(c, d);
  }
  return w;
}

struct BaseFrame {
  Mat q;        /* orthonormal image of the chosen mesh basis */
  Mat r_inv;    /* mesh basis change achieving it */
  double jac;   /* |Jac base| in raw mesh coordinates */
  bool degenerate;
};

BaseFrame qr_frame(const Mat& w) {
  const int n = static_cast<int>(w.rows()), m = n - 1;
  Eigen::HouseholderQR<Mat> qr(w);
  Mat rfull = qr.matrixQR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
  double jac = 1.0, dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    double a = std::abs(rfull(i, i));
    jac *= a;
    dmax = std::max(dmax, a);
    dmin = std::min(dmin, a);
  }
  BaseFrame f;
  f.jac = jac;
  f.degenerate = !(dmin > 1e-8 * dmax) || !(jac > 1e-12);
  if (!f.degenerate) {
    f.r_inv = rfull.inverse();
    f.q = qr.householderQ() * Mat::Identity(n, m);
  }
  return f;
}

}  // namespace

DecayReport cone_jacobian_decay_check(const ConeChart& chart,
                                      const Mat& mesh_points,
                                      const std::vector<double>& s_values,
                                      double fd_step) {
  if (!chart.unit_speed)
    throw ConfigInvalid("decay check runs in the unit-speed chart");
  const int n = chart.n;
  const double h = fd_step;
  DecayReport rep;

  for (int row = 0; row < mesh_points.rows(); ++row) {
    Vec y = mesh_points.row(row).transpose();
    BaseFrame bf = qr_frame(base_frame_diff(chart, y, h));
    if (bf.degenerate) {
      ++rep.degenerate_skipped;
      continue;
    }
    BallPoint x = chart.base(y);
    Vec u0 = -chart_to_frame(x, busemann_grad(chart.theta, x).chart);
    Vec orth_base(n - 1);
    for (int i = 0; i < n - 1; ++i) {
      Vec qi = bf.q.col(i);
      orth_base[i] = (qi - u0 * u0.dot(qi)).norm();
    }

    for (double s : s_values) {
      BallPoint c = cone_map(chart, y, s);
      Mat a = cone_frame_diff(chart, y, s, h) * bf.r_inv;
      Vec t = -chart_to_frame(c, busemann_grad(chart.theta, c).chart);

      Mat d(n, n);
      d.leftCols(n - 1) = a;
      d.col(n - 1) = t;
      double jac_ratio = std::abs(d.determinant());
      double jac_bound = std::exp(-(n - 1) * s);

      double orth_ratio = 0.0;
      for (int i = 0; i < n - 1; ++i) {
        if (orth_base[i] < 1e-6) continue; /* base vector along the ray */
        Vec ai = a.col(i);
        double oc = (ai - t * t.dot(ai)).norm();
        orth_ratio = std::max(orth_ratio, oc / orth_base[i]);
      }
      double orth_bound = std::exp(-s);

      rep.samples.push_back({s, jac_ratio, jac_bound, orth_ratio, orth_bound});
      rep.max_jac_excess =
          std::max(rep.max_jac_excess, jac_ratio / jac_bound - 1.0);
      rep.max_orth_excess =
          std::max(rep.max_orth_excess, orth_ratio / orth_bound - 1.0);

      /* the s-direction image should be exactly unit speed */
      double hs = 1e-3;
      double slo = s - hs;
      BallPoint cp = cone_map(chart, y, s + hs);
      BallPoint cm = slo >= 0.0 ? cone_map(chart, y, slo) : x;
      double span = slo >= 0.0 ? 2.0 * hs : s + hs;
      Vec ts = chart_to_frame(c, (cp.coords() - cm.coords()) / span);
      if (slo >= 0.0) /* one-sided stencil at s=0 is too biased to count */
        rep.s_dir_norm_err =
            std::max(rep.s_dir_norm_err, std::abs(ts.norm() - 1.0));
    }
  }
  return rep;
}

IntegralPair cone_integral_inequality(const ConeChart& chart,
                                      const Mat& cell_centers,
                                      double cell_volume, double fd_step) {
  if (!chart.unit_speed)
    throw ConfigInvalid("integral check runs in the unit-speed chart");
  const int n = chart.n;
  const double smax = 16.0 / (n - 1);
  Vec gx, gw;
  gauss_legendre(32, gx, gw);

  double lhs = 0.0, rhs = 0.0;
  for (int row = 0; row < cell_centers.rows(); ++row) {
    Vec y = cell_centers.row(row).transpose();
    Mat w = base_frame_diff(chart, y, fd_step);
    rhs += cell_volume * std::sqrt(std::max(0.0, (w.transpose() * w).determinant())) /
           (n - 1);

    double acc = 0.0;
    for (int k = 0; k < gx.size(); ++k) {
      double s = 0.5 * smax * (gx[k] + 1.0);
      BallPoint c = cone_map(chart, y, s);
      Mat d(n, n);
      d.leftCols(n - 1) = cone_frame_diff(chart, y, s, fd_step);
      d.col(n - 1) = -chart_to_frame(c, busemann_grad(chart.theta, c).chart);
      acc += 0.5 * smax * gw[k] * std::abs(d.determinant());
    }
    lhs += cell_volume * acc;
  }
  return {lhs, rhs};
}

/* ---- cusp coordinates ---- */

CuspPoint downstairs_cone_map(const CuspConeChart& chart, const Vec& y, double s) {
  if (s < 0.0) throw ConfigInvalid("cone parameter must be nonnegative");
  CuspPoint p = chart.base(y);
  return {p.xi, p.t + s};
}

DownstairsReport downstairs_cone_check(const CuspConeChart& chart,
                                       int mesh_per_axis, double fd_step) {
  const int n = chart.model.dim(), m = n - 1;
  Mat mesh = torus_mesh(mesh_per_axis, m);
  double cell = 1.0;
  for (int i = 0; i < m; ++i) cell /= mesh_per_axis;

  const double smax = 16.0 / m;
  Vec gx, gw;
  gauss_legendre(32, gx, gw);

  double lhs = 0.0, rhs = 0.0;
  for (int row = 0; row < mesh.rows(); ++row) {
    Vec y = mesh.row(row).transpose();
    CuspPoint p = chart.base(y);
    Mat dxi(m, m);
    Vec dt(m);
    for (int i = 0; i < m; ++i) {
      Vec e = Vec::Zero(m);
      e[i] = fd_step;
      CuspPoint hi = chart.base(y + e), lo = chart.base(y - e);
      dxi.col(i) = (hi.xi - lo.xi) / (2.0 * fd_step);
      dt[i] = (hi.t - lo.t) / (2.0 * fd_step);
    }
    /* frame components at height t: flat block scaled by e^-t, then dt */
    Mat w(n, m);
    w.topRows(m) = std::exp(-p.t) * dxi;
    w.bottomRows(1) = dt.transpose();
    rhs += cell * std::sqrt(std::max(0.0, (w.transpose() * w).determinant())) / m;

    /* coning only rescales the flat block, so the volume element in s is
       |det dxi| e^{-m(t+s)} */
    double base_det = std::abs(dxi.determinant());
    double acc = 0.0;
    for (int k = 0; k < gx.size(); ++k) {
      double s = 0.5 * smax * (gx[k] + 1.0);
      acc += 0.5 * smax * gw[k] * base_det * std::exp(-m * (p.t + s));
    }
    lhs += cell * acc;
  }

  /* lattice translate of the base commutes with the cone in coordinates */
  double equiv = 0.0;
  Vec shift = chart.model.lattice().col(0);
  Vec y0 = Vec::Constant(m, 0.37);
  for (double s : {0.0, 0.7, 1.9}) {
    CuspPoint a = downstairs_cone_map(chart, y0, s);
    CuspPoint b = chart.base(y0);
    CuspPoint bc{b.xi + shift, b.t + s}; /* translate, then cone */
    Vec wa = chart.model.wrap(a.xi + shift);
    Vec wb = chart.model.wrap(bc.xi);
    equiv = std::max(equiv, (wa - wb).cwiseAbs().maxCoeff());
    equiv = std::max(equiv, std::abs(a.t - bc.t));
  }
  return {lhs, rhs, equiv};
}

Mat torus_mesh(int per_axis, int d) {
  if (per_axis < 1 || d < 1) throw ConfigInvalid("bad mesh shape");
  int total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  Mat out(total, d);
  for (int c = 0; c < total; ++c) {
    int rem = c;
    for (int i = d - 1; i >= 0; --i) {
      out(c, i) = (rem % per_axis + 0.5) / per_axis;
      rem /= per_axis;
    }
  }
  return out;
}

Mat box_mesh(int per_axis, int d, double halfwidth) {
  Mat t = torus_mesh(per_axis, d);
  return (2.0 * t.array() - 1.0) * halfwidth;
}

}  // namespace natmaplab

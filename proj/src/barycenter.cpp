#include "natmaplab/barycenter.hpp"

#include <cmath>

#include "natmaplab/errors.hpp"

namespace natmaplab {

namespace {

/* measure weights w_i phi_i^2 normalized to total mass one */
Vec measure_weights(const BoundaryFunction& phi) {
  Vec w = phi.grid->weights().array() * phi.values.array().square();
  double total = w.sum();
  if (!(total > 1e-300)) throw ZeroFunction("measure has no mass");
  return w / total;
}

/* Per-node Busemann data at x, vectorized over the whole grid.
   u_i = x + s (x - theta_i)/|x - theta_i|^2 with s = 1 - |x|^2 is the
   frame form of the hyperbolic gradient of B_{theta_i}; it has unit norm. */
struct NodeData {
  Vec d2;  /* |x - theta_i|^2 */
  Mat u;   /* rows = unit gradients */
  double s;

  NodeData(const QuadratureGrid& grid, const Vec& x) {
    s = 1.0 - x.squaredNorm();
    Mat diff = (-grid.nodes()).rowwise() + x.transpose();
    d2 = diff.rowwise().squaredNorm();
    u = diff.array().colwise() * (s / d2.array());
    u.rowwise() += x.transpose();
  }

  double objective(const Vec& w) const {
    return w.dot(d2.array().log().matrix()) - std::log(s);
  }
  Vec grad(const Vec& w) const { return u.transpose() * w; }
  Mat hess(const Vec& w) const {
    Mat uw = u.array().colwise() * w.array();
    return Mat::Identity(u.cols(), u.cols()) - uw.transpose() * u;
  }
};

void require_nondegenerate(const Mat& H) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 1e-8 * hi))
    throw SingularHessian("barycenter Hessian nearly degenerate");
}

}  // namespace

double bary_objective(const BoundaryFunction& phi, const BallPoint& x) {
  check_interior(x);
  return NodeData(*phi.grid, x.coords()).objective(measure_weights(phi));
}

Vec bary_grad_frame(const BoundaryFunction& phi, const BallPoint& x) {
  return NodeData(*phi.grid, x.coords()).grad(measure_weights(phi));
}

Mat bary_hess_frame(const BoundaryFunction& phi, const BallPoint& x) {
  return NodeData(*phi.grid, x.coords()).hess(measure_weights(phi));
}

BarycenterSolution solve_barycenter(const BoundaryFunction& phi,
                                    const BarycenterOptions& opt) {
  const auto& grid = *phi.grid;
  const int n = grid.dim();
  Vec w = measure_weights(phi);

  Vec x;
  if (opt.init_chart.size() > 0) {
    x = opt.init_chart;
  } else {
    x = 0.5 * (grid.nodes().transpose() * w);
  }
  if (x.norm() > 0.9) x *= 0.9 / x.norm();

  double fx = NodeData(grid, x).objective(w);
  for (int it = 1; it <= opt.max_iter; ++it) {
    NodeData nd(grid, x);
    Vec G = nd.grad(w);
    if (G.norm() <= opt.tol) return {BallPoint(x), G.norm(), it - 1};

    Mat H = nd.hess(w);
    require_nondegenerate(H);
    Vec step = 0.5 * nd.s * (-H.ldlt().solve(G)); /* frame to chart */

    /* step-halving on the convex objective, staying interior */
    double t = 1.0;
    for (int half = 0;; ++half) {
      if (half == 60) throw MaxIterExceeded("barycenter line search stalled");
      Vec xn = x + t * step;
      if (xn.norm() < kInteriorLimit) {
        double fn = NodeData(grid, xn).objective(w);
        if (fn <= fx + 1e-14 * std::abs(fx)) {
          x = xn;
          fx = fn;
          break;
        }
      }
      t *= 0.5;
    }
  }

  BallPoint p(x);
  double res = NodeData(grid, x).grad(w).norm();
  if (res > opt.tol) throw MaxIterExceeded("barycenter did not reach tolerance");
  return {p, res, opt.max_iter};
}

TangentVector dbar(const BoundaryFunction& phi, const BoundaryFunction& psi,
                   const BallPoint& bar_point) {
  check_same_grid(phi, psi);
  const auto& grid = *phi.grid;

  /* first variation of the normalized measure weights along psi */
  Vec w_raw = grid.weights().array() * phi.values.array().square();
  double W = w_raw.sum();
  if (!(W > 1e-300)) throw ZeroFunction("measure has no mass");
  Vec a =
      2.0 * (grid.weights().array() * phi.values.array() * psi.values.array());
  double s = a.sum() / W;
  Vec dw = a / W - (s / W) * w_raw;

  NodeData nd(grid, bar_point.coords());
  Mat H = nd.hess(w_raw / W);
  require_nondegenerate(H);
  Vec rhs = -(nd.u.transpose() * dw);
  Vec delta_fr = H.ldlt().solve(rhs);
  return TangentVector{bar_point, frame_to_chart(bar_point, delta_fr)};
}

}  // namespace natmaplab

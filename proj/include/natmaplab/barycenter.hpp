#pragma once

#include "natmaplab/grid.hpp"

namespace natmaplab {

struct BarycenterOptions {
  double tol = 1e-9; /* hyperbolic norm of the gradient */
  int max_iter = 100;
  /* optional Newton start; empty = weighted node average scaled by 0.5 */
  Vec init_chart;
};

struct BarycenterSolution {
  BallPoint point;
  double residual;
  int iterations;
};

/* Sum of w_i B_{theta_i}(x) with w_i = quadrature weight * phi_i^2,
   normalized to unit mass. Convex along geodesics; its unique critical
   point is the barycenter of the measure phi^2 dmu_o. */
double bary_objective(const BoundaryFunction& phi, const BallPoint& x);

/* gradient and Hessian of the objective in an orthonormal frame at x */
Vec bary_grad_frame(const BoundaryFunction& phi, const BallPoint& x);
Mat bary_hess_frame(const BoundaryFunction& phi, const BallPoint& x);

BarycenterSolution solve_barycenter(const BoundaryFunction& phi,
                                    const BarycenterOptions& opt = {});

/* Derivative of the barycenter at phi in an L^2 direction, by the implicit
   function theorem at the solved point: H dx = -(mixed derivative) psi. */
TangentVector dbar(const BoundaryFunction& phi, const BoundaryFunction& psi,
                   const BallPoint& bar_point);

}  // namespace natmaplab

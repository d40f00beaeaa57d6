#pragma once

#include <functional>
#include <vector>

#include "natmaplab/cusp.hpp"
#include "natmaplab/geometry.hpp"

namespace natmaplab {

/* A base hypersurface map together with the ideal point it is coned toward.
   The map takes mesh coordinates in R^(n-1) and must be smooth; meshes only
   choose where it is sampled. */
struct ConeChart {
  int n = 0;                                  /* target dimension */
  std::function<BallPoint(const Vec&)> base;  /* mesh coords -> ball */
  IdealPoint theta;
  double eps = 1.0;       /* depth of the tangent-reparametrized chart */
  bool unit_speed = true; /* false: distance along = tan(s pi / (2 eps)) */
};

/* geodesic distance travelled at parameter s; NearBoundary once the
   reparametrization leaves floating range */
double cone_distance(const ConeChart& chart, double s);

/* point at that distance along the ray from base(y) toward theta */
BallPoint cone_map(const ConeChart& chart, const Vec& y, double s);

struct DecaySample {
  double s;
  double jac_ratio;   /* |Jac cone| / |Jac base| */
  double jac_bound;   /* e^(-(n-1)s) */
  double orth_ratio;  /* worst orthogonal-component contraction */
  double orth_bound;  /* e^(-s) */
};

struct DecayReport {
  std::vector<DecaySample> samples;
  int degenerate_skipped = 0;
  double max_jac_excess = 0.0;  /* max jac_ratio/jac_bound - 1 */
  double max_orth_excess = 0.0;
  double s_dir_norm_err = 0.0;  /* s-image vector against hyperbolic unit */
};

/* Finite-difference check of the pointwise contraction: orthogonal
   components decay like e^(-s) and the full Jacobian like e^(-(n-1)s).
   mesh_points rows are base coordinates; unit-speed chart required. */
DecayReport cone_jacobian_decay_check(const ConeChart& chart,
                                      const Mat& mesh_points,
                                      const std::vector<double>& s_values,
                                      double fd_step);

struct IntegralPair {
  double lhs;
  double rhs; /* (1/(n-1)) integral of |Jac base| */
};

/* volume of the coned region against the base volume over the constant
   1/(n-1); cell_centers rows with a common mesh cell volume */
IntegralPair cone_integral_inequality(const ConeChart& chart,
                                      const Mat& cell_centers,
                                      double cell_volume, double fd_step);

/* ---- the cone in cusp coordinates ---- */

struct CuspConeChart {
  CuspModel model;
  std::function<CuspPoint(const Vec&)> base; /* torus coords [0,1)^(n-1) */
};

/* coning toward the cusp's ideal point just raises t */
CuspPoint downstairs_cone_map(const CuspConeChart& chart, const Vec& y, double s);

struct DownstairsReport {
  double lhs;
  double rhs;
  double equivariance_err; /* coordinate mismatch under a lattice translate */
};

DownstairsReport downstairs_cone_check(const CuspConeChart& chart,
                                       int mesh_per_axis, double fd_step);

/* regular meshes: torus cell centers in [0,1)^d, box centers in [-hw,hw]^d */
Mat torus_mesh(int per_axis, int d);
Mat box_mesh(int per_axis, int d, double halfwidth);

}  // namespace natmaplab

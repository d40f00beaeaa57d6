#pragma once

#include "natmaplab/geometry.hpp"

namespace natmaplab {

/* Point of the cusp model Y x [0, inf): torus coordinates xi (lattice
   fundamental domain) and height t. */
struct CuspPoint {
  Vec xi;
  double t;
};

/* Finite-volume cusp Y x [0, inf) with metric dt^2 + e^{-2t} g_Y, where Y is
   the flat torus R^{n-1}/lattice. */
class CuspModel {
 public:
  CuspModel(int n, Mat lattice);

  int dim() const { return n_; }
  const Mat& lattice() const { return lattice_; }
  double base_volume() const { return base_volume_; }

  /* volume of the slice {t} = e^{-(n-1)t} * vol(Y) */
  double slice_volume(double t) const;

  /* total volume of Y x [t0, inf) */
  double tail_volume(double t0) const;

  /* shift map sigma_r: (y, t) -> (y, t + r) */
  CuspPoint shift(const CuspPoint& p, double r) const;

  /* distance in the quotient: minimum over nearby lattice translates of the
     upper-half-space distance between lifts */
  double distance(const CuspPoint& a, const CuspPoint& b) const;

  /* translate of b's representative nearest to a's, possibly outside the
     fundamental domain; realizes distance(a, b) */
  CuspPoint nearest_translate(const CuspPoint& a, const CuspPoint& b) const;

  /* reduce xi into the fundamental domain */
  Vec wrap(const Vec& xi) const;

  /* isometric lift into the ball chart; the cusp sits at ideal_point() */
  BallPoint lift(const CuspPoint& p) const;

  /* lift without reduction, for representatives from nearest_translate */
  BallPoint lift_rep(const CuspPoint& p) const;
  IdealPoint ideal_point() const;

 private:
  int n_;
  Mat lattice_;      // columns are the lattice basis of Y
  Mat lattice_inv_;
  double base_volume_;
};

/* upper half-space (xi, y), y > 0, to ball chart; hyperbolic isometry taking
   (0,1) to the origin and infinity to the last basis direction */
Vec half_space_to_ball(const Vec& xi, double y);

double half_space_distance(const Vec& xi1, double y1, const Vec& xi2, double y2);

}  // namespace natmaplab

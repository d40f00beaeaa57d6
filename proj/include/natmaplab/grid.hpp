#pragma once

#include <memory>
#include <string>

#include "natmaplab/geometry.hpp"

namespace natmaplab {

enum class GridScheme { circle_uniform, fibonacci_sphere, product_gauss };

/* Gauss-Legendre nodes and weights on [-1,1] */
void gauss_legendre(int m, Vec& x, Vec& w);

std::string scheme_name(GridScheme s);
GridScheme scheme_from_name(const std::string& name);

/* Quadrature rule on the ideal boundary S^{n-1}: nodes, positive weights
   summing to one. Linear and degree-two moments are exact for every scheme
   (the fibonacci lattice carries a least-norm weight correction). */
class QuadratureGrid {
 public:
  static std::shared_ptr<const QuadratureGrid> make(int n, GridScheme scheme,
                                                    int resolution);

  int dim() const { return n_; }
  GridScheme scheme() const { return scheme_; }
  int size() const { return static_cast<int>(weights_.size()); }
  int resolution() const { return resolution_; }

  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>&
  nodes() const {
    return nodes_;
  }
  const Vec& weights() const { return weights_; }
  IdealPoint node(int i) const { return IdealPoint(nodes_.row(i).transpose()); }

  /* indices of the k nearest nodes to a unit direction (brute force) */
  std::vector<int> nearest(const Vec& dir, int k) const;

 private:
  QuadratureGrid() = default;
  int n_ = 0;
  GridScheme scheme_ = GridScheme::circle_uniform;
  int resolution_ = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> nodes_;
  Vec weights_;
};

using GridPtr = std::shared_ptr<const QuadratureGrid>;

/* Function on the ideal boundary sampled at the grid nodes; the discrete
   model of a vector in L^2 of the visual measure at the origin. */
struct BoundaryFunction {
  GridPtr grid;
  Vec values;

  BoundaryFunction() = default;
  BoundaryFunction(GridPtr g, Vec v);
};

void check_same_grid(const BoundaryFunction& f, const BoundaryFunction& g);

double l2_inner(const BoundaryFunction& f, const BoundaryFunction& g);
double l2_norm(const BoundaryFunction& f);
double l2_distance(const BoundaryFunction& f, const BoundaryFunction& g);

/* density of the visual measure at x against the one at the origin:
   Poisson kernel to the power n-1, sampled at the nodes */
BoundaryFunction visual_density(const GridPtr& grid, const BallPoint& x);

/* radial projection to the unit sphere of L^2; 2-Lipschitz outside the
   0.5-ball */
BoundaryFunction radial_project(const BoundaryFunction& f);

/* Unitary action of an isometry on boundary functions,
   (gamma . f)(theta) = f(gamma^{-1} theta) * exp(-h/2 B_theta(gamma o)).
   Pulled-back node values are interpolated with inverse-distance weights
   over the four nearest nodes; exact hits bypass interpolation. */
BoundaryFunction isom_action(const MobiusIsometry& gamma, const BoundaryFunction& f,
                             double h);

}  // namespace natmaplab

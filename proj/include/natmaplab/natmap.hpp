#pragma once

#include <functional>
#include <vector>

#include "natmaplab/backend.hpp"
#include "natmaplab/barycenter.hpp"
#include "natmaplab/cusp.hpp"
#include "natmaplab/grid.hpp"

namespace natmaplab {

/* Square root of the visual density: the symmetric embedding of the ball
   into the unit sphere of positive L^2 functions. Unit norm up to grid
   exactness. */
BoundaryFunction phi0(const BallPoint& p, const GridPtr& grid);

/* analytic differential of phi0 along a chart vector */
BoundaryFunction dphi0(const BallPoint& p, const GridPtr& grid, const Vec& v_chart);

/* pulled-back tensor of phi0 in chart coordinates: the matrix
   <dphi0(e_i), dphi0(e_j)>, which equals (h^2/4n) times the ball metric */
Mat g_phi0(const BallPoint& p, const GridPtr& grid);

struct NaturalMapConfig {
  double c = 0.0;      /* decay rate, strictly above h = n-1 */
  int mc_count = 200000;
  uint64_t seed = 1;
  double r_trunc = 0.0; /* 0 = from the 1e-6 tail rule: log(1e6)/(c-h) */
};

/* Monte-Carlo evaluator of the heat-kernel-style maps
   Psi_c(p,.)^2 = integral of e^{-c d_b(p,y)} e^{-h B_.(y)} dvol_b(y).
   Radii are importance-sampled with the e^{-c r} tilted shell density;
   identical seeds give common random numbers across base points and decay
   rates, so finite differences of the output are smooth. */
class PsiEvaluator {
 public:
  PsiEvaluator(BackendPtr backend, GridPtr grid, NaturalMapConfig cfg);

  BoundaryFunction psi(const BallPoint& p) const; /* unnormalized */
  BoundaryFunction phi(const BallPoint& p) const; /* unit L^2 norm */

  double r_trunc() const { return r_trunc_; }
  const NaturalMapConfig& config() const { return cfg_; }
  const BackendPtr& backend() const { return backend_; }
  const GridPtr& grid() const { return grid_; }

 private:
  Vec kernel_sums(const BallPoint& p, double* zr_out = nullptr) const;

  BackendPtr backend_;
  GridPtr grid_;
  NaturalMapConfig cfg_;
  double r_trunc_;
};

BoundaryFunction psi_c(const BackendPtr& backend, const NaturalMapConfig& cfg,
                       const BallPoint& p, const GridPtr& grid);
BoundaryFunction phi_c(const BackendPtr& backend, const NaturalMapConfig& cfg,
                       const BallPoint& p, const GridPtr& grid);

/* the natural map: barycenter of the squared kernel measure */
BallPoint natural_map_fc(const BackendPtr& backend, const NaturalMapConfig& cfg,
                         const BallPoint& p, const GridPtr& grid);

/* Gram matrix of dPhi_c on a domain-orthonormal frame at p, by central
   differences with one Richardson level (chart step delta). */
Mat phi_c_gram(const PsiEvaluator& ev, const BallPoint& p, double delta = 1e-3);

/* Gram matrix of dphi0, same stencil, for homotopy cross terms */
Mat phi0_gram(const GridPtr& grid, const BallPoint& p, double delta = 1e-3);

/* Jacobian determinant of F_c at p measured with the domain metric b and
   the hyperbolic target metric, Richardson-extrapolated central stencil */
double jacobian_fc(const BackendPtr& backend, const NaturalMapConfig& cfg,
                   const BallPoint& p, const GridPtr& grid, double delta = 1e-3);

/* slope of log ball volume against radius, least squares */
double entropy_estimate(const BackendPtr& backend, const std::vector<double>& radii,
                        const BallPoint& basepoint, int mc_count, uint64_t seed);

/* distance to a basepoint: smooth away from the base, 1-Lipschitz, proper */
struct ProperFunction {
  BackendPtr backend;
  BallPoint base;
  double operator()(const BallPoint& x) const { return backend->distance(base, x); }
};

/* ---- exhaustion slices ---- */

struct SliceInfo {
  double level;
  double area;
  double mesh_error;
};

/* A domain exhausted by the sublevels of a proper function, with meshed
   level sets whose discrete areas can be measured. */
class SlicedDomain {
 public:
  virtual ~SlicedDomain() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> levels() const = 0;
  virtual double slice_area(double level) const = 0;
  virtual double slice_area_error(double level) const = 0;
};

/* Levels whose discrete area falls below the running median, in increasing
   order; when areas only grow, the smallest available are returned. */
std::vector<SliceInfo> find_small_slices(const SlicedDomain& domain, int count);

/* exhaustion function t on a cusp: slice areas decay like e^{-(n-1)t} */
class CuspSlicedDomain final : public SlicedDomain {
 public:
  CuspSlicedDomain(CuspModel model, std::vector<double> levels, int mesh_per_axis);
  std::string name() const override { return "cusp"; }
  std::vector<double> levels() const override { return levels_; }
  double slice_area(double level) const override;
  double slice_area_error(double level) const override;
  const CuspModel& model() const { return model_; }
  /* canonical torus mesh of the level-t slice, cusp coordinates */
  std::vector<CuspPoint> slice_mesh(double level) const;

 private:
  CuspModel model_;
  std::vector<double> levels_;
  int mesh_;
};

/* distance spheres around the origin of the exact ball: areas grow, the
   negative control for slice finding */
class BallSlicedDomain final : public SlicedDomain {
 public:
  BallSlicedDomain(int n, std::vector<double> radii);
  std::string name() const override { return "ball"; }
  std::vector<double> levels() const override { return radii_; }
  double slice_area(double level) const override;
  double slice_area_error(double level) const override;

 private:
  int n_;
  std::vector<double> radii_;
};

/* ---- homotopy between maps into the positive unit sphere ---- */

using SphereMap = std::function<BoundaryFunction(const BallPoint&)>;

struct HomotopySample {
  double t;
  double time_sq;      /* squared norm of the t-derivative of H */
  double space_lhs;    /* squared norm of dH(v) */
  double space_rhs;    /* squared norms of dTheta(v) plus dUpsilon(v) */
  double image_norm;   /* norm of H(x,t) */
};

/* Straight-line homotopy H(x,t) = (1-t) Theta(x) + t Upsilon(x) between
   unit-norm positive maps, finite-difference verification of the stretch
   bounds and of the 0.5-ball avoidance. */
std::vector<HomotopySample> homotopy_stretch_samples(
    const SphereMap& theta, const SphereMap& upsilon, const GridPtr& grid,
    const std::vector<BallPoint>& base_points, int t_count, int v_count,
    uint64_t seed, double delta = 1e-3);

/* ---- boundary-term estimate on a shrinking slice ---- */

struct StokesSliceReport {
  double level;
  double area;
  double lipschitz;       /* measured on slice pairs, space and time */
  double lipschitz_bound; /* sqrt((c^2+h^2)/4 + 2) */
  double error_estimate;  /* comass bound x Lip^n x area */
};

StokesSliceReport stokes_error_estimate(const CuspSlicedDomain& domain,
                                        double level, const PsiEvaluator& ev,
                                        int pair_count, uint64_t seed);

}  // namespace natmaplab

#pragma once

#include <vector>

#include "natmaplab/barycenter.hpp"
#include "natmaplab/grid.hpp"
#include "natmaplab/rng.hpp"

namespace natmaplab {

/* One evaluation of the volume form pulled back through the barycenter map */
struct FormEvaluation {
  BoundaryFunction phi;
  std::vector<BoundaryFunction> frame;
  double value;
};

/* dvol at bar(phi) applied to the pushed-forward frame directions.
   Multilinear and alternating in the frame by construction. */
double eval_omega(const BoundaryFunction& phi,
                  const std::vector<BoundaryFunction>& frame);

FormEvaluation eval_omega_record(const BoundaryFunction& phi,
                                 std::vector<BoundaryFunction> frame);

/* comass of the form restricted to the positive unit sphere */
double unit_comass_bound(int n);

/* Draws positive functions and L^2-orthonormal frames. Each trial uses its
   own counter-derived stream, so results do not depend on evaluation order. */
class FrameSampler {
 public:
  FrameSampler(GridPtr grid, uint64_t seed, double norm_lo = 1.0,
               double norm_hi = 1.0, double center_radius = 0.6);

  BoundaryFunction random_phi(uint64_t trial) const;
  /* n orthonormal directions; tangent ones are projected orthogonal to phi */
  std::vector<BoundaryFunction> random_frame(const BoundaryFunction& phi,
                                             uint64_t trial, bool tangent) const;

  const GridPtr& grid() const { return grid_; }

 private:
  BoundaryFunction random_bump(Rng& rng) const;

  GridPtr grid_;
  uint64_t seed_;
  double norm_lo_, norm_hi_, center_radius_;
};

struct ComassSample {
  int id;
  double phi_norm;
  double value;
};

struct ComassReport {
  std::vector<ComassSample> samples;
  double max_value = 0.0;
  double bound = 0.0;
};

/* running maximum of |eval_omega| over unit-sphere samples */
double comass_estimate(const FrameSampler& sampler, int trials);
ComassReport comass_scan(const FrameSampler& sampler, int trials, bool tangent);

/* samples with norms off the unit sphere; bound inflated by 2^n because the
   radial projection back to the sphere is 2-Lipschitz outside the 0.5-ball */
ComassReport bounded_comass_check(const FrameSampler& sampler, int trials);

/* unit-normalized push-forward of an orthonormal tangent frame through the
   analytic derivative of the visual-density immersion */
std::vector<BoundaryFunction> calibrated_frame(const BallPoint& p,
                                               const GridPtr& grid);

struct CalibrationCheck {
  double lhs;      /* form value on the pushed frame */
  double rhs;      /* comass times Gram^(1/2) */
  double rel_err;  /* |lhs/rhs - 1| */
};

/* Equality of the form value and comass x Gram^(1/2) on the immersion's
   tangent planes. squeeze > 0 post-composes with a non-isometric diagonal
   map of L^2 (damping one hemisphere), the negative control. */
CalibrationCheck calibration_identity(const BallPoint& p, const GridPtr& grid,
                                      double squeeze = 0.0);

bool calibration_identity_check(const BallPoint& p, const GridPtr& grid,
                                double tolerance = 2e-2, double squeeze = 0.0);

}  // namespace natmaplab

#include "natmaplab/calib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "natmaplab/errors.hpp"
#include "natmaplab/natmap.hpp"

namespace natmaplab {

double unit_comass_bound(int n) {
  double h = n - 1;
  return std::pow(4.0 * n / (h * h), 0.5 * n);
}

double eval_omega(const BoundaryFunction& phi,
                  const std::vector<BoundaryFunction>& frame) {
  const int n = phi.grid->dim();
  if (static_cast<int>(frame.size()) != n)
    throw ConfigInvalid("frame size must match the dimension");
  for (const auto& f : frame) check_same_grid(phi, f);

  BarycenterSolution sol = solve_barycenter(phi);
  double lam = conformal_factor(sol.point);
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    m.col(i) = lam * dbar(phi, frame[i], sol.point).chart;
  return m.determinant();
}

FormEvaluation eval_omega_record(const BoundaryFunction& phi,
                                 std::vector<BoundaryFunction> frame) {
  double v = eval_omega(phi, frame);
  return {phi, std::move(frame), v};
}

/* ---- sampling ---- */

FrameSampler::FrameSampler(GridPtr grid, uint64_t seed, double norm_lo,
                           double norm_hi, double center_radius)
    : grid_(std::move(grid)),
      seed_(seed),
      norm_lo_(norm_lo),
      norm_hi_(norm_hi),
      center_radius_(center_radius) {
  if (!(norm_lo_ > 0.0) || norm_hi_ < norm_lo_)
    throw ConfigInvalid("bad norm range");
}

BoundaryFunction FrameSampler::random_bump(Rng& rng) const {
  const int n = grid_->dim(), N = grid_->size();
  Vec v = Vec::Zero(N);
  for (int b = 0; b < 3; ++b) {
    Vec mu(n);
    double nrm = 0.0;
    do {
      for (int i = 0; i < n; ++i) mu[i] = rng.normal();
      nrm = mu.norm();
    } while (nrm < 1e-12);
    mu /= nrm;
    double sigma = rng.uniform(0.35, 1.0);
    double amp = rng.uniform(-1.0, 1.0);
    for (int j = 0; j < N; ++j) {
      double d2 = (grid_->nodes().row(j).transpose() - mu).squaredNorm();
      v[j] += amp * std::exp(-d2 / (2.0 * sigma * sigma));
    }
  }
  return BoundaryFunction(grid_, std::move(v));
}

BoundaryFunction FrameSampler::random_phi(uint64_t trial) const {
  Rng rng(seed_, 2 * trial);
  const int n = grid_->dim();
  Vec p(n);
  double r = center_radius_ * std::pow(rng.uniform(), 1.0 / n);
  double nrm = 0.0;
  do {
    for (int i = 0; i < n; ++i) p[i] = rng.normal();
    nrm = p.norm();
  } while (nrm < 1e-12);
  p *= r / nrm;

  BoundaryFunction f = phi0(BallPoint(p), grid_);
  BoundaryFunction g = random_bump(rng);
  f.values.array() *= (0.4 * g.values.array()).exp();
  f = radial_project(f);
  if (norm_hi_ > norm_lo_) {
    /* log-uniform scale so the lower end, where the form is largest, is
       sampled well */
    double c = norm_lo_ * std::pow(norm_hi_ / norm_lo_, rng.uniform());
    f.values *= c;
  } else if (norm_lo_ != 1.0) {
    f.values *= norm_lo_;
  }
  return f;
}

std::vector<BoundaryFunction> FrameSampler::random_frame(
    const BoundaryFunction& phi, uint64_t trial, bool tangent) const {
  Rng rng(seed_, 2 * trial + 1);
  const int n = grid_->dim();
  BoundaryFunction unit = phi;
  double pn = l2_norm(phi);
  if (pn < 1e-14) throw ZeroFunction("cannot build a frame at zero");
  unit.values /= pn;

  std::vector<BoundaryFunction> frame;
  int attempts = 0;
  while (static_cast<int>(frame.size()) < n) {
    if (++attempts > 60) throw Error("frame sampler kept degenerating");
    BoundaryFunction v = random_bump(rng);
    if (tangent) v.values -= l2_inner(v, unit) * unit.values;
    for (const auto& u : frame) v.values -= l2_inner(v, u) * u.values;
    double nv = l2_norm(v);
    if (nv < 1e-8) continue;
    v.values /= nv;
    frame.push_back(std::move(v));
  }
  return frame;
}

ComassReport comass_scan(const FrameSampler& sampler, int trials, bool tangent) {
  if (trials < 1) throw ConfigInvalid("trials must be positive");
  ComassReport rep;
  rep.bound = unit_comass_bound(sampler.grid()->dim());
  rep.samples.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    BoundaryFunction phi = sampler.random_phi(t);
    auto frame = sampler.random_frame(phi, t, tangent);
    double v = std::abs(eval_omega(phi, frame));
    rep.samples.push_back({t, l2_norm(phi), v});
    rep.max_value = std::max(rep.max_value, v);
  }
  return rep;
}

double comass_estimate(const FrameSampler& sampler, int trials) {
  return comass_scan(sampler, trials, true).max_value;
}

ComassReport bounded_comass_check(const FrameSampler& sampler, int trials) {
  ComassReport rep = comass_scan(sampler, trials, false);
  rep.bound *= std::pow(2.0, sampler.grid()->dim());
  return rep;
}

/* ---- calibration identity ---- */

std::vector<BoundaryFunction> calibrated_frame(const BallPoint& p,
                                               const GridPtr& grid) {
  const int n = grid->dim();
  const double h = n - 1;
  double scale = 2.0 * std::sqrt(double(n)) / (h * conformal_factor(p));
  std::vector<BoundaryFunction> frame;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    BoundaryFunction d = dphi0(p, grid, e);
    d.values *= scale;
    frame.push_back(std::move(d));
  }
  return frame;
}

CalibrationCheck calibration_identity(const BallPoint& p, const GridPtr& grid,
                                      double squeeze) {
  const int n = grid->dim();
  BoundaryFunction phi = phi0(p, grid);
  auto frame = calibrated_frame(p, grid);

  if (squeeze > 0.0) {
    /* non-isometric linear map of L^2: damp the hemisphere around the first
       axis; the image planes are no longer calibrated */
    Vec d(grid->size());
    for (int j = 0; j < grid->size(); ++j)
      d[j] = std::exp(-squeeze * std::max(0.0, grid->nodes()(j, 0)));
    phi.values.array() *= d.array();
    for (auto& f : frame) f.values.array() *= d.array();
  }

  double lhs = eval_omega(phi, frame);
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      g(i, j) = g(j, i) = l2_inner(frame[i], frame[j]);
  double rhs = unit_comass_bound(n) * std::sqrt(std::max(0.0, g.determinant()));
  double rel = rhs > 0.0 ? std::abs(lhs / rhs - 1.0)
                         : std::numeric_limits<double>::infinity();
  return {lhs, rhs, rel};
}

bool calibration_identity_check(const BallPoint& p, const GridPtr& grid,
                                double tolerance, double squeeze) {
  return calibration_identity(p, grid, squeeze).rel_err <= tolerance;
}

}  // namespace natmaplab

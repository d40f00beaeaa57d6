#include "natmaplab/natmap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "natmaplab/errors.hpp"

namespace natmaplab {

namespace {

/* euclidean gradient of B_theta at p */
Vec busemann_grad_euc(const Vec& p, const Vec& theta) {
  Vec d = p - theta;
  return 2.0 * d / d.squaredNorm() + 2.0 * p / (1.0 - p.squaredNorm());
}

/* rows: euclidean Busemann gradients against every grid node */
Mat busemann_grad_rows(const GridPtr& grid, const BallPoint& p) {
  const int N = grid->size(), n = grid->dim();
  Mat db(N, n);
  for (int j = 0; j < N; ++j)
    db.row(j) = busemann_grad_euc(p.coords(), grid->nodes().row(j).transpose())
                    .transpose();
  return db;
}

}  // namespace

BoundaryFunction phi0(const BallPoint& p, const GridPtr& grid) {
  check_interior(p);
  const double h = grid->dim() - 1;
  Vec v(grid->size());
  for (int j = 0; j < grid->size(); ++j)
    v[j] = std::exp(-0.5 * h * busemann(grid->node(j), p));
  return BoundaryFunction(grid, std::move(v));
}

BoundaryFunction dphi0(const BallPoint& p, const GridPtr& grid, const Vec& v_chart) {
  const double h = grid->dim() - 1;
  BoundaryFunction f = phi0(p, grid);
  for (int j = 0; j < grid->size(); ++j) {
    double db = busemann_grad_euc(p.coords(), grid->nodes().row(j).transpose())
                    .dot(v_chart);
    f.values[j] *= -0.5 * h * db;
  }
  return f;
}

Mat g_phi0(const BallPoint& p, const GridPtr& grid) {
  const double h = grid->dim() - 1;
  BoundaryFunction f0 = phi0(p, grid);
  Mat db = busemann_grad_rows(grid, p);
  Vec w = grid->weights().array() * f0.values.array().square();
  return 0.25 * h * h * db.transpose() * w.asDiagonal() * db;
}

/* ---- Monte-Carlo maps ---- */

PsiEvaluator::PsiEvaluator(BackendPtr backend, GridPtr grid, NaturalMapConfig cfg)
    : backend_(std::move(backend)), grid_(std::move(grid)), cfg_(cfg) {
  if (!backend_ || !grid_) throw ConfigInvalid("evaluator needs backend and grid");
  if (backend_->dim() != grid_->dim())
    throw GridMismatch("backend and grid dimensions differ");
  const double h = grid_->dim() - 1;
  if (!(cfg_.c > h))
    throw ConfigInvalid("decay rate must exceed the entropy constant");
  if (cfg_.mc_count < 100) throw ConfigInvalid("mc_count too small");
  r_trunc_ = cfg_.r_trunc > 0.0 ? cfg_.r_trunc
                                : std::log(1e6) / (cfg_.c - h);
  /* a-posteriori tail control: the integrand decays like e^{(h-c)r} */
  if (std::exp((h - cfg_.c) * r_trunc_) > 1e-4)
    throw TailNotConverged("truncation radius leaves a heavy tail");
}

Vec PsiEvaluator::kernel_sums(const BallPoint& p, double* zr_out) const {
  const int N = grid_->size(), n = grid_->dim();
  const int h = n - 1;
  VolumeCloud cloud =
      backend_->sample_volume(p, r_trunc_, cfg_.mc_count, cfg_.seed, cfg_.c);
  if (zr_out) *zr_out = cloud.zr;
  const int K = cloud.count();

  /* The spherical mean of e^{-h B_theta} over the radius-r sphere equals
     its value at the center (the kernel power is harmonic), so the angular
     integral is exact and sampling only ever has to estimate the conformal
     deviation factor. On the unperturbed backend that factor is one and the
     sum collapses to K; pointwise sampling of the kernel itself would put an
     e^{hr}-tall spike of width e^{-2r} into the variance, which no radial
     density can absorb below c = 2h. */
  if (backend_->is_exact()) return Vec::Constant(N, double(K));

  /* ideal points pulled back to the origin chart at p */
  Mat thetap(N, n);
  for (int j = 0; j < N; ++j)
    thetap.row(j) =
        mobius_add_boundary(-p.coords(), grid_->nodes().row(j).transpose())
            .transpose();

  Vec sh = cloud.r.array().sinh();
  Vec emr = (-cloud.r.array()).exp();
  Vec extra =
      (cloud.density.array() *
       (-cfg_.c * (cloud.dist - cloud.r).array()).exp()).matrix();

  /* Control variate g_j(r): the deviation factor along the ray aimed at
     node j. Any g keeps the estimator unbiased; centering it where the
     kernel spikes removes the spike from the sampled residual. Piecewise
     linear in r, constant once rays have left the perturbed region. */
  const int B = 96;
  const double r_sat = std::min(r_trunc_, 8.0);
  const double dr = r_sat / (B - 1);
  Mat table(B, N);
  for (int j = 0; j < N; ++j) {
    Vec dir = thetap.row(j).transpose();
    for (int b = 0; b < B; ++b) {
      double r = b * dr;
      double dist = backend_->ray_distance(p, dir, r);
      table(b, j) = backend_->volume_density(p, dir, r) *
                    std::exp(-cfg_.c * (dist - r));
    }
  }
  Eigen::VectorXi bin(K);
  Vec w1(K);
  for (int k = 0; k < K; ++k) {
    double t = std::min(cloud.r[k], r_sat) / dr;
    int b = std::min(static_cast<int>(t), B - 2);
    bin[k] = b;
    w1[k] = std::min(t - b, 1.0);
  }

  /* S_j = sum_k g_j(r_k) + (extra_k - g_j(r_k)) T_kj with
     T_kj = (e^{-r_k} + (1 - dir_k.theta'_j) sinh r_k)^{-h}; the rearranged
     base avoids cancellation at large radii */
  Vec S = Vec::Zero(N);
  int tile = std::clamp(static_cast<int>(32e6 / (8.0 * N)), 256, 2048);
  Mat X, G;
  for (int k0 = 0; k0 < K; k0 += tile) {
    int t = std::min(tile, K - k0);
    X.noalias() = cloud.dir.middleRows(k0, t) * thetap.transpose();
    X.array() = (1.0 - X.array()).colwise() * sh.segment(k0, t).array();
    X.colwise() += emr.segment(k0, t);
    switch (h) {
      case 1: X.array() = X.array().inverse(); break;
      case 2: X.array() = (X.array() * X.array()).inverse(); break;
      case 3: X.array() = (X.array() * X.array() * X.array()).inverse(); break;
      default: throw UnsupportedDimension("kernel exponent out of range");
    }
    G.resize(t, N);
    for (int k = 0; k < t; ++k)
      G.row(k) = (1.0 - w1[k0 + k]) * table.row(bin[k0 + k]) +
                 w1[k0 + k] * table.row(bin[k0 + k] + 1);
    X.array() = G.array() + X.array() * ((-G).array().colwise() +
                                         extra.segment(k0, t).array());
    S.noalias() += X.colwise().sum().transpose();
  }
  if (!S.allFinite()) throw Error("kernel sum overflowed");
  return S;
}

BoundaryFunction PsiEvaluator::psi(const BallPoint& p) const {
  double zr = 0.0;
  Vec S = kernel_sums(p, &zr);
  double scale = unit_sphere_area(grid_->dim()) * zr / cfg_.mc_count;
  BoundaryFunction f = phi0(p, grid_);
  f.values.array() *= (S.array() * scale).sqrt();
  return f;
}

BoundaryFunction PsiEvaluator::phi(const BallPoint& p) const {
  Vec S = kernel_sums(p);
  BoundaryFunction f = phi0(p, grid_);
  f.values.array() *= S.array().sqrt();
  return radial_project(f);
}

BoundaryFunction psi_c(const BackendPtr& backend, const NaturalMapConfig& cfg,
                       const BallPoint& p, const GridPtr& grid) {
  return PsiEvaluator(backend, grid, cfg).psi(p);
}

BoundaryFunction phi_c(const BackendPtr& backend, const NaturalMapConfig& cfg,
                       const BallPoint& p, const GridPtr& grid) {
  return PsiEvaluator(backend, grid, cfg).phi(p);
}

BallPoint natural_map_fc(const BackendPtr& backend, const NaturalMapConfig& cfg,
                         const BallPoint& p, const GridPtr& grid) {
  PsiEvaluator ev(backend, grid, cfg);
  return solve_barycenter(ev.phi(p)).point;
}

namespace {

void check_stencil(const MetricBackend& backend, const BallPoint& p, double delta) {
  if (p.norm() + 2.0 * delta > backend.safe_chart_radius() + 0.05)
    throw StencilOutOfDomain("finite-difference stencil leaves the safe region");
}

/* Richardson-extrapolated central differences of a map into L^2 along the
   chart axes, normalized per unit length of the domain metric. */
std::vector<BoundaryFunction> fd_frame_derivative(
    const std::function<BoundaryFunction(const BallPoint&)>& f,
    const MetricBackend& backend, const BallPoint& p, double delta) {
  check_stencil(backend, p, delta);
  const int n = p.dim();
  double lam_b = conformal_factor(p) * std::exp(backend.conformal_u(p));
  std::vector<BoundaryFunction> out;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    auto diff = [&](double s) {
      BoundaryFunction a = f(BallPoint(p.coords() + s * e));
      BoundaryFunction b = f(BallPoint(p.coords() - s * e));
      a.values = (a.values - b.values) / (2.0 * s);
      return a;
    };
    BoundaryFunction d1 = diff(delta), d2 = diff(0.5 * delta);
    d2.values = (4.0 * d2.values - d1.values) / 3.0 / lam_b;
    out.push_back(std::move(d2));
  }
  return out;
}

Mat gram_of(const std::vector<BoundaryFunction>& d) {
  const int n = static_cast<int>(d.size());
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) g(i, j) = g(j, i) = l2_inner(d[i], d[j]);
  return g;
}

}  // namespace

Mat phi_c_gram(const PsiEvaluator& ev, const BallPoint& p, double delta) {
  auto d = fd_frame_derivative([&](const BallPoint& q) { return ev.phi(q); },
                               *ev.backend(), p, delta);
  return gram_of(d);
}

Mat phi0_gram(const GridPtr& grid, const BallPoint& p, double delta) {
  ExactBackend exact(grid->dim());
  auto d = fd_frame_derivative(
      [&](const BallPoint& q) { return phi0(q, grid); }, exact, p, delta);
  return gram_of(d);
}

double jacobian_fc(const BackendPtr& backend, const NaturalMapConfig& cfg,
                   const BallPoint& p, const GridPtr& grid, double delta) {
  check_stencil(*backend, p, delta);
  PsiEvaluator ev(backend, grid, cfg);
  auto F = [&](const BallPoint& q) { return solve_barycenter(ev.phi(q)).point; };

  const int n = p.dim();
  auto fd_matrix = [&](double s) {
    Mat d(n, n);
    for (int i = 0; i < n; ++i) {
      Vec e = Vec::Zero(n);
      e[i] = 1.0;
      Vec hi = F(BallPoint(p.coords() + s * e)).coords();
      Vec lo = F(BallPoint(p.coords() - s * e)).coords();
      d.col(i) = (hi - lo) / (2.0 * s);
    }
    return d;
  };
  Mat d1 = fd_matrix(delta), d2 = fd_matrix(0.5 * delta);
  Mat dr = (4.0 * d2 - d1) / 3.0;

  /* chart differential to metric Jacobian: conformal factors of the domain
     metric b at p and the hyperbolic target at F(p) */
  BallPoint fp = F(p);
  double lam_b = conformal_factor(p) * std::exp(backend->conformal_u(p));
  double lam_t = conformal_factor(fp);
  return dr.determinant() * std::pow(lam_t / lam_b, n);
}

double entropy_estimate(const BackendPtr& backend, const std::vector<double>& radii,
                        const BallPoint& basepoint, int mc_count, uint64_t seed) {
  if (radii.size() < 2) throw InsufficientRadii("need at least two radii");
  for (size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1]))
      throw InsufficientRadii("radii must increase");

  const int m = static_cast<int>(radii.size());
  Vec logv(m), r(m);
  for (int i = 0; i < m; ++i) {
    r[i] = radii[i];
    double v = backend->ball_volume(basepoint, radii[i], mc_count,
                                    split_seed(seed, i));
    if (!(v > 0.0)) throw Error("nonpositive ball volume");
    logv[i] = std::log(v);
  }
  double rbar = r.mean(), lbar = logv.mean();
  return (r.array() - rbar).matrix().dot((logv.array() - lbar).matrix()) /
         (r.array() - rbar).square().sum();
}

/* ---- slices ---- */

std::vector<SliceInfo> find_small_slices(const SlicedDomain& domain, int count) {
  auto lv = domain.levels();
  if (lv.empty()) throw NoLevelsFound("domain has no levels");
  if (count < 1) throw ConfigInvalid("slice count must be positive");

  struct Entry {
    double level, area, err;
    bool below;
  };
  std::vector<Entry> entries;
  std::multiset<double> seen;
  for (double t : lv) {
    double a = domain.slice_area(t);
    seen.insert(a);
    auto it = seen.begin();
    std::advance(it, (seen.size() - 1) / 2);
    double median = *it;
    entries.push_back({t, a, domain.slice_area_error(t), a < median});
  }

  std::vector<Entry> chosen;
  for (const auto& e : entries)
    if (e.below) chosen.push_back(e);
  if (static_cast<int>(chosen.size()) < count) {
    /* areas only grow: fall back to the smallest available */
    std::vector<Entry> rest;
    for (const auto& e : entries)
      if (!e.below) rest.push_back(e);
    std::sort(rest.begin(), rest.end(),
              [](const Entry& a, const Entry& b) { return a.area < b.area; });
    for (const auto& e : rest) {
      if (static_cast<int>(chosen.size()) >= count) break;
      chosen.push_back(e);
    }
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const Entry& a, const Entry& b) { return a.level < b.level; });
  if (static_cast<int>(chosen.size()) > count) chosen.resize(count);

  std::vector<SliceInfo> out;
  for (const auto& e : chosen) out.push_back({e.level, e.area, e.err});
  return out;
}

CuspSlicedDomain::CuspSlicedDomain(CuspModel model, std::vector<double> levels,
                                   int mesh_per_axis)
    : model_(std::move(model)), levels_(std::move(levels)), mesh_(mesh_per_axis) {
  if (mesh_ < 2) throw ConfigInvalid("slice mesh too coarse");
  std::sort(levels_.begin(), levels_.end());
}

double CuspSlicedDomain::slice_area(double level) const {
  /* discrete sum of flat cell areas at height t; the cells are exact, so
     this reproduces e^{-(n-1)t} vol(Y) to round-off */
  const int h = model_.dim() - 1;
  int cells = 1;
  for (int i = 0; i < h; ++i) cells *= mesh_;
  double cell = model_.slice_volume(level) / cells;
  double acc = 0.0;
  for (int i = 0; i < cells; ++i) acc += cell;
  return acc;
}

double CuspSlicedDomain::slice_area_error(double level) const {
  return slice_area(level) * 1e-12;
}

std::vector<CuspPoint> CuspSlicedDomain::slice_mesh(double level) const {
  const int h = model_.dim() - 1;
  int cells = 1;
  for (int i = 0; i < h; ++i) cells *= mesh_;
  std::vector<CuspPoint> out;
  out.reserve(cells);
  Eigen::VectorXi idx(h);
  for (int c = 0; c < cells; ++c) {
    int rem = c;
    for (int i = h - 1; i >= 0; --i) {
      idx[i] = rem % mesh_;
      rem /= mesh_;
    }
    Vec frac(h);
    for (int i = 0; i < h; ++i) frac[i] = (idx[i] + 0.5) / mesh_;
    out.push_back({model_.lattice() * frac, level});
  }
  return out;
}

BallSlicedDomain::BallSlicedDomain(int n, std::vector<double> radii)
    : n_(n), radii_(std::move(radii)) {
  std::sort(radii_.begin(), radii_.end());
}

double BallSlicedDomain::slice_area(double level) const {
  return unit_sphere_area(n_) * std::pow(std::sinh(level), n_ - 1);
}

double BallSlicedDomain::slice_area_error(double level) const {
  return slice_area(level) * 1e-14;
}

/* ---- homotopy ---- */

std::vector<HomotopySample> homotopy_stretch_samples(
    const SphereMap& theta, const SphereMap& upsilon, const GridPtr& grid,
    const std::vector<BallPoint>& base_points, int t_count, int v_count,
    uint64_t seed, double delta) {
  if (base_points.empty()) throw ConfigInvalid("no homotopy base points");
  ExactBackend exact(grid->dim());
  Rng rng(seed, 7);
  std::vector<HomotopySample> out;

  for (const auto& x : base_points) {
    BoundaryFunction th = theta(x), up = upsilon(x);
    check_same_grid(th, up);
    auto dth = fd_frame_derivative(theta, exact, x, delta);
    auto dup = fd_frame_derivative(upsilon, exact, x, delta);

    const int n = grid->dim();
    Mat A = gram_of(dth), B = gram_of(dup), C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = l2_inner(dth[i], dup[j]);

    BoundaryFunction dt_fun = th;
    dt_fun.values = up.values - th.values;
    double time_sq = l2_inner(dt_fun, dt_fun);
    double n_th = l2_norm(th), n_up = l2_norm(up), cross = l2_inner(th, up);

    for (int ti = 0; ti < t_count; ++ti) {
      double t = t_count == 1 ? 0.5 : double(ti) / (t_count - 1);
      double img = std::sqrt(std::max(
          0.0, (1 - t) * (1 - t) * n_th * n_th + t * t * n_up * n_up +
                   2 * t * (1 - t) * cross));
      for (int vi = 0; vi < v_count; ++vi) {
        Vec a(n);
        double nrm = 0.0;
        do {
          for (int i = 0; i < n; ++i) a[i] = rng.normal();
          nrm = a.norm();
        } while (nrm < 1e-12);
        a /= nrm;
        double qa = a.dot(A * a), qb = a.dot(B * a), qc = a.dot(C * a);
        double lhs = (1 - t) * (1 - t) * qa + t * t * qb + 2 * t * (1 - t) * qc;
        out.push_back({t, time_sq, lhs, qa + qb, img});
      }
    }
  }
  return out;
}

/* ---- boundary-term estimate ---- */

StokesSliceReport stokes_error_estimate(const CuspSlicedDomain& domain,
                                        double level, const PsiEvaluator& ev,
                                        int pair_count, uint64_t seed) {
  const auto& model = domain.model();
  const int n = model.dim();
  const double h = n - 1, c = ev.config().c;
  auto mesh = domain.slice_mesh(level);
  const int M = static_cast<int>(mesh.size());

  /* evaluate both ends of the homotopy at the lifted mesh points */
  std::vector<BoundaryFunction> th, up;
  th.reserve(M);
  up.reserve(M);
  for (const auto& q : mesh) {
    BallPoint x = model.lift(q);
    th.push_back(phi0(x, ev.grid()));
    up.push_back(ev.phi(x));
  }

  /* Lipschitz constant of H(x,t) = (1-t) phi0 + t phi_c on the slice with
     the product metric, over random sample pairs. The maps descend to the
     quotient, so the second end is evaluated at the translate realizing the
     quotient distance; comparing fixed fundamental-domain lifts would
     overstate the stretch across the domain's edges. */
  Rng rng(seed, 11);
  double lip = 0.0;
  for (int s = 0; s < pair_count; ++s) {
    int a = static_cast<int>(rng.integer(M));
    int b = static_cast<int>(rng.integer(M));
    double ta = rng.uniform(), tb = rng.uniform();
    double dx = a == b ? 0.0 : model.distance(mesh[a], mesh[b]);
    double dist = std::sqrt(dx * dx + (ta - tb) * (ta - tb));
    if (dist < 1e-9) continue;
    Vec thb = th[b].values, upb = up[b].values;
    if (a != b) {
      BallPoint xb = model.lift_rep(model.nearest_translate(mesh[a], mesh[b]));
      thb = phi0(xb, ev.grid()).values;
      upb = ev.phi(xb).values;
    }
    Vec diff = (1 - ta) * th[a].values + ta * up[a].values - (1 - tb) * thb -
               tb * upb;
    double dh = std::sqrt(
        (ev.grid()->weights().array() * diff.array().square()).sum());
    lip = std::max(lip, dh / dist);
  }

  /* image norms stay in [1/sqrt2, 1]; the comass of the calibrating form on
     that range is controlled by the unit-sphere value times the projection
     factor 2^n */
  double comass_bound =
      std::pow(2.0, n) * std::pow(4.0 * n / (h * h), 0.5 * n);
  double area = domain.slice_area(level);
  double bound = std::sqrt((c * c + h * h) / 4.0 + 2.0);
  return {level, area, lip, bound, comass_bound * std::pow(lip, n) * area};
}

}  // namespace natmaplab

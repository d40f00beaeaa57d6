#include "natmaplab/backend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#include "natmaplab/errors.hpp"
#include "natmaplab/grid.hpp"

namespace natmaplab {

double unit_sphere_area(int n) {
  return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

BallPoint VolumeCloud::point(int k) const {
  return geodesic_step(center, dir.row(k).transpose(), r[k]);
}

double VolumeCloud::weight(int k) const {
  return unit_sphere_area(center.dim()) * zr / count() * std::exp(tilt * r[k]) *
         density[k];
}

VolumeCloud MetricBackend::sample_volume(const BallPoint& center, double radius,
                                         int count, uint64_t seed,
                                         double tilt) const {
  if (count < 1) throw ConfigInvalid("sample count must be positive");
  if (!(radius > 0.0)) throw ConfigInvalid("sampling radius must be positive");
  const int n = dim();
  const double h = n - 1;

  /* radial CDF of e^{-tilt r} sinh^{n-1}(r) on [0, radius], trapezoid */
  const int M = 4096;
  const double dr = radius / M;
  Vec cum(M + 1);
  cum[0] = 0.0;
  double qprev = 0.0;
  for (int i = 1; i <= M; ++i) {
    double ri = i * dr;
    double qi = std::exp(-tilt * ri) * std::pow(std::sinh(ri), h);
    cum[i] = cum[i - 1] + 0.5 * (qprev + qi) * dr;
    qprev = qi;
  }
  double zr = cum[M];
  if (!(zr > 0.0) || !std::isfinite(zr))
    throw Error("degenerate radial sampling density");

  VolumeCloud cloud{center, radius, tilt, zr, Vec(count),
                    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                  Eigen::RowMajor>(count, n),
                    Vec(count), Vec(count)};

  Rng rng(seed);
  Vec d(n);
  for (int k = 0; k < count; ++k) {
    /* fixed draw order: n normals for the direction, one uniform for r */
    double nrm = 0.0;
    do {
      for (int j = 0; j < n; ++j) d[j] = rng.normal();
      nrm = d.norm();
    } while (nrm < 1e-12);
    d /= nrm;
    double v = rng.uniform() * zr;
    int j = static_cast<int>(std::upper_bound(cum.data(), cum.data() + M + 1, v) -
                             cum.data()) - 1;
    j = std::clamp(j, 0, M - 1);
    double seg = cum[j + 1] - cum[j];
    double rk = (j * dr) + (seg > 0.0 ? dr * (v - cum[j]) / seg : 0.0);

    cloud.dir.row(k) = d.transpose();
    cloud.r[k] = rk;
    cloud.dist[k] = ray_distance(center, d, rk);
    cloud.density[k] = volume_density(center, d, rk);
  }
  return cloud;
}

ExactBackend::ExactBackend(int n) : n_(n) {
  if (n < 2 || n > 4) throw UnsupportedDimension("exact backend needs 2 <= n <= 4");
}

double ExactBackend::distance(const BallPoint& p, const BallPoint& q) const {
  return hyp_distance(p, q);
}

double ExactBackend::ball_volume(const BallPoint&, double radius, int,
                                 uint64_t) const {
  /* area of the unit sphere times the sinh^{n-1} radial integral */
  Vec x, w;
  gauss_legendre(64, x, w);
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i)
    acc += w[i] * std::pow(std::sinh(0.5 * radius * (x[i] + 1.0)), n_ - 1);
  return unit_sphere_area(n_) * 0.5 * radius * acc;
}

/* ---- grid backend ---- */

namespace {

double hyp_dist_raw(const double* a, const double* b, int n) {
  double d2 = 0.0, a2 = 0.0, b2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double t = a[i] - b[i];
    d2 += t * t;
    a2 += a[i] * a[i];
    b2 += b[i] * b[i];
  }
  return std::acosh(1.0 + 2.0 * d2 / ((1.0 - a2) * (1.0 - b2)));
}

std::vector<Eigen::VectorXi> stencil_classes(int n) {
  std::vector<std::vector<int>> classes;
  if (n == 2)
    classes = {{1, 0}, {1, 1}, {2, 1}, {3, 1}, {3, 2}};
  else
    classes = {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {2, 1, 0}, {2, 1, 1},
               {2, 2, 1}, {3, 1, 1}, {3, 2, 1}, {4, 1, 0}, {4, 3, 0}};

  std::set<std::vector<int>> seen;
  std::vector<Eigen::VectorXi> out;
  for (auto cls : classes) {
    std::sort(cls.begin(), cls.end());
    do {
      for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<int> v(n);
        bool dup_sign = false;
        for (int i = 0; i < n; ++i) {
          v[i] = (mask >> i & 1) ? -cls[i] : cls[i];
          if ((mask >> i & 1) && cls[i] == 0) dup_sign = true;
        }
        if (dup_sign) continue;
        if (seen.insert(v).second) {
          Eigen::VectorXi e(n);
          for (int i = 0; i < n; ++i) e[i] = v[i];
          out.push_back(e);
        }
      }
    } while (std::next_permutation(cls.begin(), cls.end()));
  }
  return out;
}

}  // namespace

struct GridBackend::Field {
  std::vector<double> dist;
};

GridBackend::GridBackend(int n, ConformalBump bump, int nodes_per_axis,
                         double box_halfwidth, double chart_limit)
    : n_(n), bump_(std::move(bump)), box_(box_halfwidth),
      chart_limit_(chart_limit) {
  if (n != 2 && n != 3)
    throw UnsupportedDimension("grid backend needs n = 2 or 3");
  if (bump_.height < 0.0)
    throw ConfigInvalid("conformal bump must be nonnegative");
  if (bump_.center.size() == 0) bump_.center = Vec::Zero(n);
  if (bump_.center.size() != n)
    throw ConfigInvalid("bump center dimension mismatch");
  m_ = nodes_per_axis > 0 ? nodes_per_axis : (n == 2 ? 193 : 49);
  if (m_ % 2 == 0) ++m_; /* keep the origin on the mesh */
  if (!(box_ > 0.0 && box_ < 1.0 && chart_limit_ > 0.0 && chart_limit_ <= box_ * 1.2))
    throw ConfigInvalid("bad grid box configuration");

  stencil_ = stencil_classes(n);

  int total = 1;
  for (int i = 0; i < n; ++i) total *= m_;
  active_.resize(total);
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(n);
  for (int f = 0; f < total; ++f) {
    int rem = f;
    for (int i = n - 1; i >= 0; --i) {
      idx[i] = rem % m_;
      rem /= m_;
    }
    active_[f] = node_coords(idx).norm() <= chart_limit_ ? 1 : 0;
  }
}

Vec GridBackend::node_coords(const Eigen::VectorXi& idx) const {
  Vec x(n_);
  double dsp = spacing();
  for (int i = 0; i < n_; ++i) x[i] = -box_ + idx[i] * dsp;
  return x;
}

bool GridBackend::in_mesh(const Eigen::VectorXi& idx) const {
  for (int i = 0; i < n_; ++i)
    if (idx[i] < 0 || idx[i] >= m_) return false;
  return true;
}

int GridBackend::flat(const Eigen::VectorXi& idx) const {
  int f = 0;
  for (int i = 0; i < n_; ++i) f = f * m_ + idx[i];
  return f;
}

double GridBackend::reach(const BallPoint& center) const {
  if (bump_.height == 0.0) return 0.0;
  double rmax = bump_.center.norm() + bump_.radius;
  if (rmax >= 1.0) throw ConfigInvalid("bump support leaves the chart");
  double support_hyp = bump_.radius * 2.0 / (1.0 - rmax * rmax);
  return hyp_distance(center, BallPoint(bump_.center)) + support_hyp;
}

double GridBackend::segment_length(const Vec& a, const Vec& b,
                                   bool perturbed) const {
  double base = hyp_dist_raw(a.data(), b.data(), n_);
  if (!perturbed || bump_.height == 0.0) return base;

  /* chord-to-bump proximity test: skip the u term when the segment cannot
     meet the support */
  Vec ab = b - a;
  double t = ab.squaredNorm() > 0
                 ? std::clamp((bump_.center - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0)
                 : 0.0;
  if ((a + t * ab - bump_.center).norm() > bump_.radius + 1e-12) return base;

  static thread_local Vec gx, gw;
  if (gx.size() == 0) gauss_legendre(6, gx, gw);
  double acc = 0.0;
  for (int i = 0; i < gx.size(); ++i) {
    Vec x = a + 0.5 * (gx[i] + 1.0) * ab;
    double lam = 2.0 / (1.0 - x.squaredNorm());
    acc += gw[i] * (std::exp(bump_(x)) - 1.0) * lam;
  }
  return base + 0.5 * ab.norm() * acc;
}

std::shared_ptr<const GridBackend::Field>
GridBackend::field_from(const Vec& source, bool perturbed) const {
  std::vector<double> key(source.data(), source.data() + n_);
  key.push_back(perturbed ? 1.0 : 0.0);
  {
    std::lock_guard<std::mutex> lk(cache_mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }

  int total = static_cast<int>(active_.size());
  auto fld = std::make_shared<Field>();
  fld->dist.assign(total, std::numeric_limits<double>::infinity());

  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;

  /* link the source to nearby mesh nodes */
  double dsp = spacing();
  Eigen::VectorXi base(n_), idx(n_);
  for (int i = 0; i < n_; ++i)
    base[i] = static_cast<int>(std::floor((source[i] + box_) / dsp));
  int link = 2;
  std::vector<int> offsets;
  int span = 2 * link + 1;
  int cells = 1;
  for (int i = 0; i < n_; ++i) cells *= span;
  bool linked = false;
  for (int c = 0; c < cells; ++c) {
    int rem = c;
    for (int i = n_ - 1; i >= 0; --i) {
      idx[i] = base[i] + rem % span - link;
      rem /= span;
    }
    if (!in_mesh(idx)) continue;
    int f = flat(idx);
    if (!active_[f]) continue;
    double w = segment_length(source, node_coords(idx), perturbed);
    if (w < fld->dist[f]) {
      fld->dist[f] = w;
      heap.emplace(w, f);
      linked = true;
    }
  }
  if (!linked) throw Error("point is outside the meshed region");

  std::vector<Vec> coords_cache(total);
  auto coord_of = [&](int f) -> const Vec& {
    if (coords_cache[f].size() == 0) {
      Eigen::VectorXi id(n_);
      int rem = f;
      for (int i = n_ - 1; i >= 0; --i) {
        id[i] = rem % m_;
        rem /= m_;
      }
      coords_cache[f] = node_coords(id);
    }
    return coords_cache[f];
  };

  while (!heap.empty()) {
    auto [d, f] = heap.top();
    heap.pop();
    if (d > fld->dist[f]) continue;
    Eigen::VectorXi id(n_);
    int rem = f;
    for (int i = n_ - 1; i >= 0; --i) {
      id[i] = rem % m_;
      rem /= m_;
    }
    const Vec& xa = coord_of(f);
    for (const auto& off : stencil_) {
      Eigen::VectorXi nb = id + off;
      if (!in_mesh(nb)) continue;
      int g = flat(nb);
      if (!active_[g]) continue;
      double nd = d + segment_length(xa, coord_of(g), perturbed);
      if (nd < fld->dist[g]) {
        fld->dist[g] = nd;
        heap.emplace(nd, g);
      }
    }
  }

  std::lock_guard<std::mutex> lk(cache_mu_);
  if (cache_.size() > 24) cache_.clear();
  cache_[key] = fld;
  return fld;
}

double GridBackend::distance(const BallPoint& p, const BallPoint& q) const {
  auto fld = field_from(p.coords(), true);

  double dsp = spacing();
  Eigen::VectorXi base(n_), idx(n_);
  for (int i = 0; i < n_; ++i)
    base[i] = static_cast<int>(std::floor((q.coords()[i] + box_) / dsp));
  int link = 2, span = 2 * link + 1, cells = 1;
  for (int i = 0; i < n_; ++i) cells *= span;
  double best = std::numeric_limits<double>::infinity();
  for (int c = 0; c < cells; ++c) {
    int rem = c;
    for (int i = n_ - 1; i >= 0; --i) {
      idx[i] = base[i] + rem % span - link;
      rem /= span;
    }
    if (!in_mesh(idx)) continue;
    int f = flat(idx);
    if (!active_[f] || !std::isfinite(fld->dist[f])) continue;
    best = std::min(best,
                    fld->dist[f] + segment_length(q.coords(), node_coords(idx), true));
  }
  if (!std::isfinite(best)) throw Error("point is outside the meshed region");
  return best;
}

double GridBackend::ray_distance(const BallPoint& center, const Vec& dir,
                                 double r) const {
  double rc = std::min(r, reach(center));
  if (rc <= 0.0) return r;
  static thread_local Vec gx, gw;
  if (gx.size() == 0) gauss_legendre(32, gx, gw);
  double acc = 0.0;
  for (int i = 0; i < gx.size(); ++i) {
    double t = 0.5 * rc * (gx[i] + 1.0);
    BallPoint y = geodesic_step(center, dir, t);
    acc += gw[i] * (std::exp(bump_(y.coords())) - 1.0);
  }
  return r + 0.5 * rc * acc;
}

double GridBackend::volume_density(const BallPoint& center, const Vec& dir,
                                   double r) const {
  if (r >= reach(center)) return 1.0;
  BallPoint y = geodesic_step(center, dir, r);
  return std::exp(n_ * bump_(y.coords()));
}

double GridBackend::ball_volume(const BallPoint& center, double radius,
                                int mc_count, uint64_t seed) const {
  VolumeCloud cloud = sample_volume(center, radius, mc_count, seed, 0.0);
  double acc = 0.0;
  for (int k = 0; k < cloud.count(); ++k)
    if (cloud.dist[k] <= radius) acc += cloud.weight(k);
  return acc;
}

double GridBackend::tau_geo() const {
  {
    std::lock_guard<std::mutex> lk(cache_mu_);
    if (tau_geo_ >= 0.0) return tau_geo_;
  }
  auto fld = field_from(Vec::Zero(n_), false);
  double lo = 0.4, hi = 2.0 * std::atanh(chart_limit_) - 0.15;
  double worst = 0.0;
  Eigen::VectorXi idx(n_);
  for (int f = 0; f < static_cast<int>(active_.size()); ++f) {
    if (!active_[f]) continue;
    int rem = f;
    for (int i = n_ - 1; i >= 0; --i) {
      idx[i] = rem % m_;
      rem /= m_;
    }
    double exact = 2.0 * std::atanh(node_coords(idx).norm());
    if (exact < lo || exact > hi) continue;
    worst = std::max(worst, std::abs(fld->dist[f] / exact - 1.0));
  }
  std::lock_guard<std::mutex> lk(cache_mu_);
  tau_geo_ = worst;
  return worst;
}

std::vector<BallPoint> GridBackend::nodes_within(double chart_radius) const {
  std::vector<BallPoint> out;
  Eigen::VectorXi idx(n_);
  for (int f = 0; f < static_cast<int>(active_.size()); ++f) {
    if (!active_[f]) continue;
    int rem = f;
    for (int i = n_ - 1; i >= 0; --i) {
      idx[i] = rem % m_;
      rem /= m_;
    }
    Vec x = node_coords(idx);
    if (x.norm() <= chart_radius) out.emplace_back(x);
  }
  return out;
}

}  // namespace natmaplab

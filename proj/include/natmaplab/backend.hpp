#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "natmaplab/geometry.hpp"
#include "natmaplab/rng.hpp"

namespace natmaplab {

double unit_sphere_area(int n);

/* Weighted point cloud approximating the volume measure of a metric ball,
   drawn in polar coordinates around the center. Radii follow the tilted
   shell density e^{-tilt r} sinh^{n-1}(r) on [0, radius]; directions are
   uniform on the pulled-back unit sphere. The importance machinery keeps
   everything in (r, dir) form; endpoints far beyond chart precision are
   never materialized. */
struct VolumeCloud {
  BallPoint center;
  double radius = 0.0;
  double tilt = 0.0;
  double zr = 0.0; /* radial normalizer: integral of the tilted shell density */
  Vec r;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dir;
  Vec dist;    /* backend distance from the center along each ray */
  Vec density; /* dvol_b / dvol_hyp at the endpoint */

  int count() const { return static_cast<int>(r.size()); }
  /* ray endpoint in the chart; throws NearBoundary for radii beyond
     representable depth */
  BallPoint point(int k) const;
  /* quadrature weight: sum_k weight(k) f(y_k) estimates the integral of f
     over the metric ball */
  double weight(int k) const;
};

/* A Riemannian structure the laboratory maps out of: conformal to the
   hyperbolic ball, with a distance oracle and volume sampling. */
class MetricBackend {
 public:
  virtual ~MetricBackend() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual bool is_exact() const = 0;

  /* conformal deviation: the metric is e^{2u} times the hyperbolic one */
  virtual double conformal_u(const BallPoint& x) const = 0;

  virtual double distance(const BallPoint& p, const BallPoint& q) const = 0;

  /* Distance from center to the point at hyperbolic arclength r along the
     ray with the given pulled-back unit direction. Smooth in all arguments;
     this is the distance used inside Monte-Carlo integrands. */
  virtual double ray_distance(const BallPoint& center, const Vec& dir,
                              double r) const = 0;

  /* dvol_b / dvol_hyp at the same polar position (1 wherever the endpoint
     is deeper than any conformal deviation can reach) */
  virtual double volume_density(const BallPoint& center, const Vec& dir,
                                double r) const = 0;

  virtual double ball_volume(const BallPoint& center, double radius,
                             int mc_count, uint64_t seed) const = 0;

  /* largest chart radius at which experiment base points should be placed */
  virtual double safe_chart_radius() const = 0;

  VolumeCloud sample_volume(const BallPoint& center, double radius, int count,
                            uint64_t seed, double tilt = 0.0) const;
};

using BackendPtr = std::shared_ptr<const MetricBackend>;

class ExactBackend final : public MetricBackend {
 public:
  explicit ExactBackend(int n);
  int dim() const override { return n_; }
  std::string name() const override { return "exact"; }
  bool is_exact() const override { return true; }
  double conformal_u(const BallPoint&) const override { return 0.0; }
  double distance(const BallPoint& p, const BallPoint& q) const override;
  double ray_distance(const BallPoint&, const Vec&, double r) const override {
    return r;
  }
  double volume_density(const BallPoint&, const Vec&, double) const override {
    return 1.0;
  }
  double ball_volume(const BallPoint& center, double radius, int mc_count,
                     uint64_t seed) const override;
  double safe_chart_radius() const override { return 0.8; }

 private:
  int n_;
};

/* Smooth nonnegative bump with compact chart support. */
struct ConformalBump {
  Vec center;
  double radius = 0.25;
  double height = 0.0;

  double operator()(const Vec& x) const {
    if (height == 0.0) return 0.0;
    double t2 = (x - center).squaredNorm() / (radius * radius);
    if (t2 >= 1.0) return 0.0;
    return height * std::exp(1.0 - 1.0 / (1.0 - t2));
  }
};

/* Conformally perturbed metric e^{2u} g_hyp on a meshed chart box.
   distance() is graph-Dijkstra over an extended lattice stencil with
   conformal edge lengths; ray_distance() integrates e^u - 1 along the
   unperturbed ray (the two agree to first order in u and exactly at u = 0,
   where the mesh certifies its anisotropy error tau_geo). */
class GridBackend final : public MetricBackend {
 public:
  GridBackend(int n, ConformalBump bump, int nodes_per_axis = 0,
              double box_halfwidth = 0.9, double chart_limit = 0.88);

  int dim() const override { return n_; }
  std::string name() const override { return "grid"; }
  bool is_exact() const override { return false; }
  double conformal_u(const BallPoint& x) const override {
    return bump_(x.coords());
  }
  double distance(const BallPoint& p, const BallPoint& q) const override;
  double ray_distance(const BallPoint& center, const Vec& dir,
                      double r) const override;
  double volume_density(const BallPoint& center, const Vec& dir,
                        double r) const override;
  double ball_volume(const BallPoint& center, double radius, int mc_count,
                     uint64_t seed) const override;
  double safe_chart_radius() const override { return 0.55; }

  const ConformalBump& bump() const { return bump_; }
  int nodes_per_axis() const { return m_; }
  double spacing() const { return 2.0 * box_ / (m_ - 1); }

  /* max relative deviation of graph distances from the closed form on the
     u = 0 calibration, over mesh nodes in the certified window */
  double tau_geo() const;

  /* mesh nodes inside the given chart radius */
  std::vector<BallPoint> nodes_within(double chart_radius) const;

 private:
  struct Field; /* cached single-source shortest-path solution */

  int n_;
  ConformalBump bump_;
  int m_;
  double box_;
  double chart_limit_;
  std::vector<Eigen::VectorXi> stencil_;
  std::vector<char> active_;

  mutable std::mutex cache_mu_;
  mutable std::map<std::vector<double>, std::shared_ptr<const Field>> cache_;
  mutable double tau_geo_ = -1.0;

  Vec node_coords(const Eigen::VectorXi& idx) const;
  bool in_mesh(const Eigen::VectorXi& idx) const;
  int flat(const Eigen::VectorXi& idx) const;
  double segment_length(const Vec& a, const Vec& b, bool perturbed) const;
  std::shared_ptr<const Field> field_from(const Vec& source, bool perturbed) const;
  double reach(const BallPoint& center) const;
};

}  // namespace natmaplab

#include "natmaplab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "natmaplab/errors.hpp"

namespace natmaplab {

std::string scheme_name(GridScheme s) {
  switch (s) {
    case GridScheme::circle_uniform: return "circle_uniform";
    case GridScheme::fibonacci_sphere: return "fibonacci_sphere";
    case GridScheme::product_gauss: return "product_gauss";
  }
  return "?";
}

GridScheme scheme_from_name(const std::string& name) {
  if (name == "circle_uniform") return GridScheme::circle_uniform;
  if (name == "fibonacci_sphere") return GridScheme::fibonacci_sphere;
  if (name == "product_gauss") return GridScheme::product_gauss;
  throw ConfigInvalid("unknown grid scheme: " + name);
}

/* Newton iteration on the Legendre recurrence. */
void gauss_legendre(int m, Vec& x, Vec& w) {
  x.resize(m);
  w.resize(m);
  for (int i = 0; i < m; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

namespace {

/* Enforce exactness of first and second moments by the smallest possible
   weight change (minimum-norm solution of the moment constraints). */
void correct_moments(const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>& nodes,
                     Vec& w) {
  const int N = static_cast<int>(nodes.rows());
  const int n = static_cast<int>(nodes.cols());
  std::vector<std::pair<int, int>> quad;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) quad.emplace_back(a, b);
  const int rows = n + static_cast<int>(quad.size());
  Mat A(rows, N);
  Vec target(rows);
  for (int a = 0; a < n; ++a) {
    A.row(a) = nodes.col(a).transpose();
    target[a] = 0.0;
  }
  for (size_t q = 0; q < quad.size(); ++q) {
    auto [a, b] = quad[q];
    A.row(n + q) = (nodes.col(a).array() * nodes.col(b).array()).transpose();
    target[n + q] = (a == b) ? 1.0 / n : 0.0;
  }
  Vec r = target - A * w;
  Mat gram = A * A.transpose();
  w += A.transpose() * gram.ldlt().solve(r);
}

}  // namespace

GridPtr QuadratureGrid::make(int n, GridScheme scheme, int resolution) {
  if (resolution < 2) throw ConfigInvalid("grid resolution must be >= 2");
  auto g = std::shared_ptr<QuadratureGrid>(new QuadratureGrid());
  g->n_ = n;
  g->scheme_ = scheme;
  g->resolution_ = resolution;

  switch (scheme) {
    case GridScheme::circle_uniform: {
      if (n != 2) throw UnsupportedDimension("circle_uniform needs n = 2");
      const int N = resolution;
      g->nodes_.resize(N, 2);
      for (int i = 0; i < N; ++i) {
        double a = 2.0 * M_PI * i / N;
        g->nodes_(i, 0) = std::cos(a);
        g->nodes_(i, 1) = std::sin(a);
      }
      g->weights_ = Vec::Constant(N, 1.0 / N);
      break;
    }
    case GridScheme::fibonacci_sphere: {
      if (n != 3) throw UnsupportedDimension("fibonacci_sphere needs n = 3");
      const int N = resolution;
      const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
      g->nodes_.resize(N, 3);
      for (int i = 0; i < N; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / N;
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        double a = 2.0 * M_PI * i / (golden * golden);
        g->nodes_(i, 0) = rho * std::cos(a);
        g->nodes_(i, 1) = rho * std::sin(a);
        g->nodes_(i, 2) = z;
      }
      g->weights_ = Vec::Constant(N, 1.0 / N);
      correct_moments(g->nodes_, g->weights_);
      if ((g->weights_.array() <= 0.0).any())
        throw Error("fibonacci weight correction produced a nonpositive weight");
      break;
    }
    case GridScheme::product_gauss: {
      if (n == 3) {
        /* Gauss-Legendre in the polar cosine, uniform azimuth */
        const int mz = resolution, mp = 2 * resolution;
        Vec z, wz;
        gauss_legendre(mz, z, wz);
        g->nodes_.resize(mz * mp, 3);
        g->weights_.resize(mz * mp);
        int row = 0;
        for (int i = 0; i < mz; ++i) {
          double rho = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
          for (int j = 0; j < mp; ++j, ++row) {
            double a = 2.0 * M_PI * j / mp;
            g->nodes_(row, 0) = rho * std::cos(a);
            g->nodes_(row, 1) = rho * std::sin(a);
            g->nodes_(row, 2) = z[i];
            g->weights_[row] = 0.5 * wz[i] / mp;
          }
        }
      } else if (n == 4) {
        /* Gauss-Chebyshev (second kind) in the first polar cosine,
           Gauss-Legendre in the second, uniform azimuth */
        const int mc = resolution, mz = resolution, mp = 2 * resolution;
        Vec z, wz;
        gauss_legendre(mz, z, wz);
        g->nodes_.resize(mc * mz * mp, 4);
        g->weights_.resize(mc * mz * mp);
        int row = 0;
        double csum = 0.0;

        std::vector<double> cc(mc), cw(mc);
        for (int i = 0; i < mc; ++i) {
          double a = M_PI * (i + 1.0) / (mc + 1.0);
          cc[i] = std::cos(a);
          cw[i] = std::sin(a) * std::sin(a);
          csum += cw[i];
        }
        for (int i = 0; i < mc; ++i) {
          double s1 = std::sqrt(std::max(0.0, 1.0 - cc[i] * cc[i]));
          for (int k = 0; k < mz; ++k) {
            double s2 = std::sqrt(std::max(0.0, 1.0 - z[k] * z[k]));
            for (int j = 0; j < mp; ++j, ++row) {
              double a = 2.0 * M_PI * j / mp;
              g->nodes_(row, 0) = s1 * s2 * std::cos(a);
              g->nodes_(row, 1) = s1 * s2 * std::sin(a);
              g->nodes_(row, 2) = s1 * z[k];
              g->nodes_(row, 3) = cc[i];
              g->weights_[row] = (cw[i] / csum) * (0.5 * wz[k]) / mp;
            }
          }
        }
      } else {
        throw UnsupportedDimension("product_gauss needs n = 3 or 4");
      }
      break;
    }
  }
  return g;
}

std::vector<int> QuadratureGrid::nearest(const Vec& dir, int k) const {
  std::vector<std::pair<double, int>> best;
  best.reserve(size());
  for (int i = 0; i < size(); ++i) {
    double d2 = (nodes_.row(i).transpose() - dir).squaredNorm();
    best.emplace_back(d2, i);
  }
  int kk = std::min<int>(k, size());
  std::partial_sort(best.begin(), best.begin() + kk, best.end());
  std::vector<int> idx(kk);
  for (int i = 0; i < kk; ++i) idx[i] = best[i].second;
  return idx;
}

BoundaryFunction::BoundaryFunction(GridPtr g, Vec v)
    : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw Error("boundary function without a grid");
  if (values.size() != grid->size())
    throw GridMismatch("value count does not match grid size");
}

void check_same_grid(const BoundaryFunction& f, const BoundaryFunction& g) {
  if (f.grid == g.grid) return;
  if (!f.grid || !g.grid) throw GridMismatch("missing grid");
  if (f.grid->dim() != g.grid->dim() || f.grid->scheme() != g.grid->scheme() ||
      f.grid->resolution() != g.grid->resolution())
    throw GridMismatch("boundary functions live on different grids");
}

double l2_inner(const BoundaryFunction& f, const BoundaryFunction& g) {
  check_same_grid(f, g);
  return (f.grid->weights().array() * f.values.array() * g.values.array()).sum();
}

double l2_norm(const BoundaryFunction& f) {
  return std::sqrt((f.grid->weights().array() * f.values.array().square()).sum());
}

double l2_distance(const BoundaryFunction& f, const BoundaryFunction& g) {
  check_same_grid(f, g);
  return std::sqrt(
      (f.grid->weights().array() * (f.values - g.values).array().square()).sum());
}

BoundaryFunction visual_density(const GridPtr& grid, const BallPoint& x) {
  const double h = grid->dim() - 1;
  Vec v(grid->size());
  for (int i = 0; i < grid->size(); ++i)
    v[i] = std::pow(poisson_kernel(x, grid->node(i)), h);
  return BoundaryFunction(grid, std::move(v));
}

BoundaryFunction radial_project(const BoundaryFunction& f) {
  double nrm = l2_norm(f);
  if (nrm < 1e-14) throw ZeroFunction("cannot project the zero function");
  return BoundaryFunction(f.grid, f.values / nrm);
}

BoundaryFunction isom_action(const MobiusIsometry& gamma, const BoundaryFunction& f,
                             double h) {
  const auto& grid = f.grid;
  MobiusIsometry inv = gamma.inverse();
  BallPoint go = gamma.apply(BallPoint::origin(grid->dim()));
  Vec out(grid->size());
  for (int i = 0; i < grid->size(); ++i) {
    IdealPoint theta = grid->node(i);
    Vec pre = inv.apply_ideal(theta).dir();
    auto idx = grid->nearest(pre, 4);
    double d0 = (grid->nodes().row(idx[0]).transpose() - pre).norm();
    double fv;
    if (d0 < 1e-12) {
      fv = f.values[idx[0]];
    } else {
      double wsum = 0.0, acc = 0.0;
      for (int j : idx) {
        double d = (grid->nodes().row(j).transpose() - pre).norm();
        double wj = 1.0 / d;
        wsum += wj;
        acc += wj * f.values[j];
      }
      fv = acc / wsum;
    }
    out[i] = fv * std::exp(-0.5 * h * busemann(theta, go));
  }
  return BoundaryFunction(grid, std::move(out));
}

}  // namespace natmaplab

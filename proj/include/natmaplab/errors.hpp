#pragma once

#include <stdexcept>
#include <string>

namespace natmaplab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* point too close to the ideal boundary for the requested operation */
struct NearBoundary : Error {
  using Error::Error;
};

struct UnsupportedDimension : Error {
  using Error::Error;
};

/* binary operation on functions living on different quadrature grids */
struct GridMismatch : Error {
  using Error::Error;
};

struct ZeroFunction : Error {
  using Error::Error;
};

/* barycenter Hessian degenerate (mass concentrated near a single ideal point) */
struct SingularHessian : Error {
  using Error::Error;
};

struct MaxIterExceeded : Error {
  using Error::Error;
};

/* a-posteriori truncation-tail bound too large relative to the estimate */
struct TailNotConverged : Error {
  using Error::Error;
};

/* finite-difference stencil leaves the valid chart region */
struct StencilOutOfDomain : Error {
  using Error::Error;
};

struct NoLevelsFound : Error {
  using Error::Error;
};

struct InsufficientRadii : Error {
  using Error::Error;
};

/* base-map differential not injective at a sample */
struct DegenerateFrame : Error {
  using Error::Error;
};

struct ConfigInvalid : Error {
  using Error::Error;
};

/* report directory holds no result files */
struct NoResults : Error {
  using Error::Error;
};

}  // namespace natmaplab

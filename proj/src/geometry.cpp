#include "irsmd/geometry.hpp"

#include <cmath>

#include "irsmd/error.hpp"

namespace irsmd {

FeasibleSet FeasibleSet::whole_space(std::size_t n) {
  if (n == 0) fail(ErrorCode::invalid_argument, "feasible set: dimension must be positive");
  FeasibleSet s;
  s.kind_ = SetKind::whole_space;
  s.dim_ = n;
  return s;
}

FeasibleSet FeasibleSet::box(Vector lower, Vector upper) {
  require_dimension(static_cast<std::size_t>(upper.size()), static_cast<std::size_t>(lower.size()),
                    "box upper bound");
  if (lower.size() == 0) fail(ErrorCode::invalid_argument, "box: dimension must be positive");
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    if (!(lower[j] <= upper[j]) || !std::isfinite(lower[j]) || !std::isfinite(upper[j])) {
      fail(ErrorCode::invalid_argument,
           "box: need finite lower <= upper at coordinate " + std::to_string(j));
    }
  }
  FeasibleSet s;
  s.kind_ = SetKind::box;
  s.dim_ = static_cast<std::size_t>(lower.size());
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

FeasibleSet FeasibleSet::box(std::size_t n, double lower, double upper) {
  return box(Vector::Constant(static_cast<Eigen::Index>(n), lower),
             Vector::Constant(static_cast<Eigen::Index>(n), upper));
}

FeasibleSet FeasibleSet::ball(Vector center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    fail(ErrorCode::invalid_argument, "ball: radius must be positive");
  }
  if (center.size() == 0) fail(ErrorCode::invalid_argument, "ball: dimension must be positive");
  FeasibleSet s;
  s.kind_ = SetKind::ball;
  s.dim_ = static_cast<std::size_t>(center.size());
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

std::optional<double> FeasibleSet::diameter_bound() const {
  switch (kind_) {
    case SetKind::whole_space:
      return std::nullopt;
    case SetKind::box:
      return lower_.cwiseAbs().cwiseMax(upper_.cwiseAbs()).norm();
    case SetKind::ball:
      return center_.norm() + radius_;
  }
  return std::nullopt;
}

std::optional<Vector> FeasibleSet::coordinate_bounds() const {
  switch (kind_) {
    case SetKind::whole_space:
      return std::nullopt;
    case SetKind::box:
      return Vector(lower_.cwiseAbs().cwiseMax(upper_.cwiseAbs()));
    case SetKind::ball:
      return Vector((center_.array().abs() + radius_).matrix());
  }
  return std::nullopt;
}

bool FeasibleSet::contains(const Vector& x, double tol) const {
  require_dimension(static_cast<std::size_t>(x.size()), dim_, "feasible set membership");
  switch (kind_) {
    case SetKind::whole_space:
      return x.allFinite();
    case SetKind::box:
      return ((x - lower_).array() >= -tol).all() && ((upper_ - x).array() >= -tol).all();
    case SetKind::ball:
      return (x - center_).norm() <= radius_ * (1.0 + tol) + tol;
  }
  return false;
}

void FeasibleSet::project_in_place(Vector& x) const {
  switch (kind_) {
    case SetKind::whole_space:
      return;
    case SetKind::box:
      x = x.cwiseMax(lower_).cwiseMin(upper_);
      return;
    case SetKind::ball: {
      const double d = (x - center_).norm();
      if (d > radius_) x = center_ + (radius_ / d) * (x - center_);
      return;
    }
  }
}

Vector FeasibleSet::project(const Vector& x) const {
  require_dimension(static_cast<std::size_t>(x.size()), dim_, "projection");
  Vector z = x;
  project_in_place(z);
  return z;
}

double DistanceGenerator::bregman(const Vector& x, const Vector& y) const {
  return value(y) - value(x) - gradient(x).dot(y - x);
}

double EuclideanGenerator::value(const Vector& x) const { return 0.5 * x.squaredNorm(); }

Vector EuclideanGenerator::gradient(const Vector& x) const { return x; }

double EuclideanGenerator::bregman(const Vector& x, const Vector& y) const {
  return 0.5 * (y - x).squaredNorm();
}

Vector EuclideanGenerator::prox(const FeasibleSet& set, const Vector& x, const Vector& y) const {
  Vector z = x - y;
  set.project_in_place(z);
  return z;
}

double omega_value(const DistanceGenerator& dgf, const Vector& x) {
  require_dimension(static_cast<std::size_t>(x.size()), dgf.dimension(), "omega_value");
  return dgf.value(x);
}

double bregman_distance(const DistanceGenerator& dgf, const Vector& x, const Vector& y) {
  require_dimension(static_cast<std::size_t>(x.size()), dgf.dimension(), "bregman_distance x");
  require_dimension(static_cast<std::size_t>(y.size()), dgf.dimension(), "bregman_distance y");
  return dgf.bregman(x, y);
}

Vector prox_map(const DistanceGenerator& dgf, const FeasibleSet& set, const Vector& x,
                const Vector& y) {
  require_dimension(set.dimension(), dgf.dimension(), "prox_map set");
  require_dimension(static_cast<std::size_t>(x.size()), dgf.dimension(), "prox_map x");
  require_dimension(static_cast<std::size_t>(y.size()), dgf.dimension(), "prox_map y");
  if (!set.contains(x)) fail(ErrorCode::infeasible_point, "prox_map: base point outside the set");
  return dgf.prox(set, x, y);
}

Vector project(const FeasibleSet& set, const Vector& x) { return set.project(x); }

}  // namespace irsmd

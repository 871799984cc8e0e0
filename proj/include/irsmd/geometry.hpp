#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Core>

namespace irsmd {

using Vector = Eigen::VectorXd;

enum class SetKind { whole_space, box, ball };

/// Closed convex feasible set with an exact Euclidean projection.
class FeasibleSet {
 public:
  static FeasibleSet whole_space(std::size_t n);
  static FeasibleSet box(Vector lower, Vector upper);
  static FeasibleSet box(std::size_t n, double lower, double upper);
  static FeasibleSet ball(Vector center, double radius);

  SetKind kind() const { return kind_; }
  std::size_t dimension() const { return dim_; }
  bool compact() const { return kind_ != SetKind::whole_space; }

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  const Vector& center() const { return center_; }
  double radius() const { return radius_; }

  /// sup of ||x||_2 over the set; absent for whole space.
  std::optional<double> diameter_bound() const;

  bool contains(const Vector& x, double tol = 1e-9) const;
  Vector project(const Vector& x) const;
  void project_in_place(Vector& x) const;

  /// Per-coordinate sup of |x_j| over the set (box and ball); empty for whole space.
  std::optional<Vector> coordinate_bounds() const;

 private:
  FeasibleSet() = default;

  SetKind kind_ = SetKind::whole_space;
  std::size_t dim_ = 0;
  Vector lower_, upper_, center_;
  double radius_ = 0.0;
};

/// A distance-generating function omega: strongly convex with modulus mu and
/// L-smooth with respect to the primal norm. The solver only touches this
/// interface, so new geometries plug in without changing the iteration.
class DistanceGenerator {
 public:
  virtual ~DistanceGenerator() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual double strong_convexity() const = 0;
  virtual double gradient_lipschitz() const = 0;

  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  /// D(x, y) = omega(y) - omega(x) - <grad omega(x), y - x>.
  virtual double bregman(const Vector& x, const Vector& y) const;

  /// argmin_{z in set} <y, z> + D(x, z). Inputs are already validated.
  virtual Vector prox(const FeasibleSet& set, const Vector& x, const Vector& y) const = 0;
};

/// omega(x) = 0.5 ||x||_2^2, so D is half the squared distance and the prox
/// mapping is a projected gradient step.
class EuclideanGenerator final : public DistanceGenerator {
 public:
  explicit EuclideanGenerator(std::size_t n) : dim_(n) {}

  std::string_view name() const override { return "euclidean-half-square"; }
  std::size_t dimension() const override { return dim_; }
  double strong_convexity() const override { return 1.0; }
  double gradient_lipschitz() const override { return 1.0; }

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double bregman(const Vector& x, const Vector& y) const override;
  Vector prox(const FeasibleSet& set, const Vector& x, const Vector& y) const override;

 private:
  std::size_t dim_;
};

double omega_value(const DistanceGenerator& dgf, const Vector& x);
double bregman_distance(const DistanceGenerator& dgf, const Vector& x, const Vector& y);

/// Checked prox mapping. Throws when x lies outside the set.
Vector prox_map(const DistanceGenerator& dgf, const FeasibleSet& set, const Vector& x,
                const Vector& y);

Vector project(const FeasibleSet& set, const Vector& x);

}  // namespace irsmd

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "irsmd/geometry.hpp"
#include "irsmd/oracles.hpp"

namespace irsmd {

/// Convex function of one block variable v (z or y_i) that may depend on the
/// scenario vector xi. Implementations supply their own subgradient.
class ConvexPiece {
 public:
  virtual ~ConvexPiece() = default;
  virtual std::size_t dimension() const = 0;
  virtual double value(const Vector& v, const Vector& xi) const = 0;
  /// acc += weight * g(v, xi), acc has the block's dimension.
  virtual void add_subgradient(const Vector& v, const Vector& xi, double weight, Vector& acc) const = 0;
  /// sup over the box of ||g(v, xi)||_2.
  virtual double subgradient_bound(const FeasibleSet& box, const Vector& xi) const = 0;
  /// sup over the box of |value(v, xi)|.
  virtual double value_bound(const FeasibleSet& box, const Vector& xi) const = 0;
  virtual double strong_convexity() const { return 0.0; }
};

using PiecePtr = std::shared_ptr<const ConvexPiece>;

/// 0.5 u'Qu + g'v + kappa with u = v - c0 - C xi, g = g0 + G xi, kappa = k0 + k'xi.
/// Q = 0 gives an affine piece.
class QuadraticPiece final : public ConvexPiece {
 public:
  struct Coefficients {
    DenseMatrix hessian;      // Q, dim x dim (PSD)
    Vector center;            // c0, dim
    DenseMatrix center_xi;    // C, dim x d (may be empty)
    Vector linear;            // g0, dim
    DenseMatrix linear_xi;    // G, dim x d (may be empty)
    double constant = 0.0;    // k0
    Vector constant_xi;       // k, d (may be empty)
  };

  explicit QuadraticPiece(Coefficients c);
  static PiecePtr affine(Vector linear, double constant);

  std::size_t dimension() const override { return static_cast<std::size_t>(c_.linear.size()); }
  double value(const Vector& v, const Vector& xi) const override;
  void add_subgradient(const Vector& v, const Vector& xi, double weight, Vector& acc) const override;
  double subgradient_bound(const FeasibleSet& box, const Vector& xi) const override;
  double value_bound(const FeasibleSet& box, const Vector& xi) const override;
  double strong_convexity() const override { return min_eigen_; }

 private:
  Vector shift(const Vector& xi) const;
  Vector slope(const Vector& xi) const;
  double offset(const Vector& xi) const;

  Coefficients c_;
  double min_eigen_ = 0.0;
  double max_eigen_ = 0.0;
};

struct LinkingConstraint {
  PiecePtr first_stage;   // t_j(z)
  PiecePtr second_stage;  // w_j(y, xi)
};

/// Scenario-based two-stage convex program:
///   min c(z) + sum_i p_i q(y_i, xi_i)
///   s.t. u_l(z) <= 0, t_j(z) + w_j(y_i, xi_i) <= 0, z in Z, y_i in Y.
/// The recourse sets must be nonempty for every z in Z (relatively complete
/// recourse); the compiler cannot check this.
struct TwoStageSpec {
  std::optional<FeasibleSet> first_stage_box;   // Z
  std::optional<FeasibleSet> second_stage_box;  // Y
  std::vector<double> probabilities;
  std::vector<Vector> scenarios;
  PiecePtr cost;      // c(z)
  PiecePtr recourse;  // q(y, xi)
  std::vector<PiecePtr> first_stage_constraints;  // u_l(z)
  std::vector<LinkingConstraint> linking_constraints;
  /// Overrides the computed strong-convexity modulus of E[H].
  std::optional<double> outer_modulus;
};

/// Stacked variable x = (z, y_1, ..., y_N).
class StackLayout {
 public:
  StackLayout(std::size_t n, std::size_t m, std::size_t scenarios) : n_(n), m_(m), count_(scenarios) {}
  std::size_t first_stage() const { return n_; }
  std::size_t second_stage() const { return m_; }
  std::size_t scenarios() const { return count_; }
  std::size_t dimension() const { return n_ + m_ * count_; }
  Eigen::Index y_offset(std::size_t i) const { return static_cast<Eigen::Index>(n_ + m_ * i); }

 private:
  std::size_t n_, m_, count_;
};

/// F(x, xi_i) = sum_j max{0, t_j(z) + w_j(y_i, xi_i)} + sum_l max{0, u_l(z)}, sampled with p_i.
class TwoStagePenalty final : public StochasticObjective {
 public:
  TwoStagePenalty(std::shared_ptr<const TwoStageSpec> spec, StackLayout layout);

  std::string_view name() const override { return "two-stage-penalty"; }
  std::size_t dimension() const override { return layout_.dimension(); }
  const ScenarioDistribution& distribution() const override { return dist_; }
  double scenario_value(const Vector& x, std::size_t i) const override;
  void add_scenario_subgradient(const Vector& x, std::size_t i, double weight, Vector& acc) const override;
  std::optional<double> subgradient_bound(const FeasibleSet& set) const override;
  std::optional<double> value_bound(const FeasibleSet& set) const override;
  double lower_bound() const override { return 0.0; }

 private:
  std::shared_ptr<const TwoStageSpec> spec_;
  StackLayout layout_;
  ScenarioDistribution dist_;
};

/// H(x, xi_i) = c(z) + q(y_i, xi_i), sampled with p_i, so E[H] = c(z) + sum_i p_i q(y_i, xi_i).
class TwoStageCost final : public StochasticObjective {
 public:
  TwoStageCost(std::shared_ptr<const TwoStageSpec> spec, StackLayout layout, double modulus);

  std::string_view name() const override { return "two-stage-cost"; }
  std::size_t dimension() const override { return layout_.dimension(); }
  const ScenarioDistribution& distribution() const override { return dist_; }
  double scenario_value(const Vector& x, std::size_t i) const override;
  void add_scenario_subgradient(const Vector& x, std::size_t i, double weight, Vector& acc) const override;
  double value(const Vector& x) const override;
  void add_subgradient(const Vector& x, double weight, Vector& acc) const override;
  std::optional<double> subgradient_bound(const FeasibleSet& set) const override;
  std::optional<double> value_bound(const FeasibleSet& set) const override;
  double strong_convexity() const override { return modulus_; }

 private:
  std::shared_ptr<const TwoStageSpec> spec_;
  StackLayout layout_;
  ScenarioDistribution dist_;
  double modulus_;
};

struct CompiledBilevel {
  StackLayout layout;
  std::shared_ptr<const TwoStageSpec> spec;
  std::shared_ptr<const TwoStagePenalty> penalty;
  std::shared_ptr<const TwoStageCost> cost;
  BilevelProblem problem;
};

CompiledBilevel compile(TwoStageSpec spec);

/// Scenario indices are 0-based here; out-of-range indices throw.
double eval_F(const CompiledBilevel& c, const Vector& x, std::size_t i);
double eval_H(const CompiledBilevel& c, const Vector& x, std::size_t i);
Vector subgrad_F(const CompiledBilevel& c, const Vector& x, std::size_t i);
Vector subgrad_H(const CompiledBilevel& c, const Vector& x, std::size_t i);

/// Reads the declarative two-stage problem format (see README).
TwoStageSpec load_two_stage(const std::filesystem::path& path);
TwoStageSpec parse_two_stage(const std::string& text);

}  // namespace irsmd

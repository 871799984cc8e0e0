#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "irsmd/geometry.hpp"
#include "irsmd/sampling.hpp"

namespace irsmd {

using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// One level of the selection problem: phi(x) = E[Phi(x, xi)] over a finite
/// scenario distribution. Scenario subgradients break kinks the same way the
/// exact path does (sign(0) = 0, max{0, t} contributes nothing at t = 0), so the
/// probability-weighted scenario average reproduces the exact subgradient.
class StochasticObjective {
 public:
  virtual ~StochasticObjective() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual const ScenarioDistribution& distribution() const = 0;
  std::size_t support_size() const { return distribution().size(); }

  virtual double scenario_value(const Vector& x, std::size_t i) const = 0;
  /// acc += weight * g(x, xi_i)
  virtual void add_scenario_subgradient(const Vector& x, std::size_t i, double weight,
                                        Vector& acc) const = 0;

  /// False for streams whose expectation cannot be enumerated.
  virtual bool has_exact_expectation() const { return true; }
  /// Exact expectation. Built-ins override this with a direct full-pass formula.
  virtual double value(const Vector& x) const;
  /// acc += weight * g(x) for the exact expectation.
  virtual void add_subgradient(const Vector& x, double weight, Vector& acc) const;

  /// sup over the set and all scenarios of ||g(x, xi)||_2; empty if not certified.
  virtual std::optional<double> subgradient_bound(const FeasibleSet& set) const = 0;
  /// sup over the set of |phi(x)|; empty if not certified.
  virtual std::optional<double> value_bound(const FeasibleSet&) const { return std::nullopt; }
  /// l2 strong-convexity modulus of the expectation (0 when merely convex).
  virtual double strong_convexity() const { return 0.0; }
  /// A known global lower bound on phi.
  virtual double lower_bound() const { return -std::numeric_limits<double>::infinity(); }
};

using ObjectivePtr = std::shared_ptr<const StochasticObjective>;

/// f(x) = ||Ax - b||^2 with row sampling, F(x, xi_i) = m (a_i'x - b_i)^2.
template <typename Matrix>
class LeastSquaresObjective final : public StochasticObjective {
 public:
  LeastSquaresObjective(Matrix a, Vector b);

  std::string_view name() const override { return "least-squares"; }
  std::size_t dimension() const override { return static_cast<std::size_t>(a_.cols()); }
  const ScenarioDistribution& distribution() const override { return dist_; }

  double scenario_value(const Vector& x, std::size_t i) const override;
  void add_scenario_subgradient(const Vector& x, std::size_t i, double weight,
                                Vector& acc) const override;
  double value(const Vector& x) const override;
  void add_subgradient(const Vector& x, double weight, Vector& acc) const override;
  std::optional<double> subgradient_bound(const FeasibleSet& set) const override;
  std::optional<double> value_bound(const FeasibleSet& set) const override;
  double lower_bound() const override { return 0.0; }

  const Matrix& matrix() const { return a_; }
  const Vector& rhs() const { return b_; }

 private:
  double row_dot(std::size_t i, const Vector& x) const;
  double row_norm(std::size_t i) const;
  /// sup over the set of |a_i'x - b_i|.
  std::optional<double> residual_bound(std::size_t i, const FeasibleSet& set) const;

  Matrix a_;
  Vector b_;
  ScenarioDistribution dist_;
};

using DenseLeastSquares = LeastSquaresObjective<DenseMatrix>;
using SparseLeastSquares = LeastSquaresObjective<SparseMatrix>;

/// Average hinge loss max{0, 1 - b_i <x, a_i>} over sparse examples.
class HingeObjective final : public StochasticObjective {
 public:
  HingeObjective(SparseMatrix features, Vector labels);

  std::string_view name() const override { return "hinge"; }
  std::size_t dimension() const override { return static_cast<std::size_t>(a_.cols()); }
  const ScenarioDistribution& distribution() const override { return dist_; }

  double scenario_value(const Vector& x, std::size_t i) const override;
  void add_scenario_subgradient(const Vector& x, std::size_t i, double weight,
                                Vector& acc) const override;
  double value(const Vector& x) const override;
  void add_subgradient(const Vector& x, double weight, Vector& acc) const override;
  /// max_i ||a_i||_2; holds on any domain.
  std::optional<double> subgradient_bound(const FeasibleSet& set) const override;
  std::optional<double> value_bound(const FeasibleSet& set) const override;
  double lower_bound() const override { return 0.0; }

  const SparseMatrix& features() const { return a_; }
  const Vector& labels() const { return b_; }
  /// Fraction of examples with b_i <x, a_i> <= 0.
  double misclassification(const Vector& x) const;

 private:
  double margin(const Vector& x, std::size_t i) const;

  SparseMatrix a_;
  Vector b_;
  ScenarioDistribution dist_;
};

/// h(x) = (mu/2)||x||_2^2 + ||x||_1, deterministic.
class ElasticNetObjective final : public StochasticObjective {
 public:
  ElasticNetObjective(double mu, std::size_t n);

  std::string_view name() const override { return "elastic-net"; }
  std::size_t dimension() const override { return n_; }
  const ScenarioDistribution& distribution() const override { return dist_; }

  double scenario_value(const Vector& x, std::size_t) const override { return value(x); }
  void add_scenario_subgradient(const Vector& x, std::size_t, double weight,
                                Vector& acc) const override {
    add_subgradient(x, weight, acc);
  }
  double value(const Vector& x) const override;
  void add_subgradient(const Vector& x, double weight, Vector& acc) const override;
  std::optional<double> subgradient_bound(const FeasibleSet& set) const override;
  std::optional<double> value_bound(const FeasibleSet& set) const override;
  double strong_convexity() const override { return mu_; }
  double lower_bound() const override { return 0.0; }

  double mu() const { return mu_; }

 private:
  double mu_;
  std::size_t n_;
  ScenarioDistribution dist_;
};

/// phi(x) = 0.5 x'Qx + c'x + kappa with Q symmetric positive semidefinite, deterministic.
class QuadraticObjective final : public StochasticObjective {
 public:
  QuadraticObjective(DenseMatrix q, Vector c, double kappa = 0.0);

  std::string_view name() const override { return "quadratic"; }
  std::size_t dimension() const override { return static_cast<std::size_t>(c_.size()); }
  const ScenarioDistribution& distribution() const override { return dist_; }

  double scenario_value(const Vector& x, std::size_t) const override { return value(x); }
  void add_scenario_subgradient(const Vector& x, std::size_t, double weight,
                                Vector& acc) const override {
    add_subgradient(x, weight, acc);
  }
  double value(const Vector& x) const override;
  void add_subgradient(const Vector& x, double weight, Vector& acc) const override;
  std::optional<double> subgradient_bound(const FeasibleSet& set) const override;
  std::optional<double> value_bound(const FeasibleSet& set) const override;
  double strong_convexity() const override { return min_eigen_; }

 private:
  DenseMatrix q_;
  Vector c_;
  double kappa_;
  double min_eigen_ = 0.0;
  double max_eigen_ = 0.0;
  ScenarioDistribution dist_;
};

ObjectivePtr make_least_squares(DenseMatrix a, Vector b);
ObjectivePtr make_least_squares(SparseMatrix a, Vector b);
/// Labels must be -1 or +1; data must be non-empty.
ObjectivePtr make_hinge_elm(SparseMatrix features, Vector labels);
ObjectivePtr make_elastic_net(double mu_h, std::size_t n);
ObjectivePtr make_quadratic(DenseMatrix q, Vector c, double kappa = 0.0);

/// Declared constants of a problem over its feasible set. Bounds that cannot
/// be certified (e.g. quadratic growth on the whole space) are empty.
struct ProblemConstants {
  std::optional<double> inner_bound;        // C_F
  std::optional<double> outer_bound;        // C_H
  std::optional<double> outer_value_bound;  // M_h
  std::optional<double> diameter;           // M
  double outer_modulus = 0.0;               // mu_h
};

/// Inner objective f, strongly convex outer objective h, and the set X.
class BilevelProblem {
 public:
  BilevelProblem(ObjectivePtr inner, ObjectivePtr outer, FeasibleSet set);

  const StochasticObjective& inner() const { return *inner_; }
  const StochasticObjective& outer() const { return *outer_; }
  ObjectivePtr inner_ptr() const { return inner_; }
  ObjectivePtr outer_ptr() const { return outer_; }
  const FeasibleSet& set() const { return set_; }
  std::size_t dimension() const { return set_.dimension(); }
  double mu_h() const { return outer_->strong_convexity(); }

  /// In deterministic mode the sampling paths return exact subgradients.
  void set_deterministic(bool on) { deterministic_ = on; }
  bool deterministic() const { return deterministic_; }

  ProblemConstants constants() const;

  /// dir += gamma * (g_F(x, xi) + lambda * g_H(x, xi~)), drawing xi then xi~.
  void add_step_direction(const Vector& x, double gamma, double lambda, SampleSource& src,
                          Vector& dir) const;

  /// Regularized objective f(x) + lambda h(x) and one of its exact subgradients.
  double regularized_value(const Vector& x, double lambda) const;
  Vector regularized_subgradient(const Vector& x, double lambda) const;

 private:
  ObjectivePtr inner_, outer_;
  FeasibleSet set_;
  bool deterministic_ = false;
};

Vector sample_subgrad_f(const BilevelProblem& p, const Vector& x, SampleSource& src);
Vector sample_subgrad_h(const BilevelProblem& p, const Vector& x, SampleSource& src);
double exact_f(const BilevelProblem& p, const Vector& x);
double exact_h(const BilevelProblem& p, const Vector& x);
Vector exact_subgrad_f(const BilevelProblem& p, const Vector& x);
Vector exact_subgrad_h(const BilevelProblem& p, const Vector& x);

/// Probability-weighted average of the scenario subgradients over the whole support.
Vector enumerate_scenario_subgradient(const StochasticObjective& obj, const Vector& x);

}  // namespace irsmd

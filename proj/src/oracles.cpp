#include "irsmd/oracles.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "irsmd/error.hpp"

namespace irsmd {

namespace {

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::size_t dim_of(const Vector& x) { return static_cast<std::size_t>(x.size()); }

}  // namespace

double StochasticObjective::value(const Vector& x) const {
  if (!has_exact_expectation()) fail(ErrorCode::unsupported, std::string(name()) + ": no exact expectation");
  const auto& dist = distribution();
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) acc += dist.probability(i) * scenario_value(x, i);
  return acc;
}

void StochasticObjective::add_subgradient(const Vector& x, double weight, Vector& acc) const {
  if (!has_exact_expectation()) fail(ErrorCode::unsupported, std::string(name()) + ": no exact expectation");
  const auto& dist = distribution();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    add_scenario_subgradient(x, i, weight * dist.probability(i), acc);
  }
}

// ---------------------------------------------------------------------------
// least squares

template <typename Matrix>
LeastSquaresObjective<Matrix>::LeastSquaresObjective(Matrix a, Vector b)
    : a_(std::move(a)), b_(std::move(b)), dist_(static_cast<std::size_t>(std::max<Eigen::Index>(a_.rows(), 1))) {
  if (a_.rows() == 0 || a_.cols() == 0) fail(ErrorCode::invalid_argument, "least squares: empty matrix");
  if (b_.size() != a_.rows()) {
    fail(ErrorCode::dimension_mismatch, "least squares: A has " + std::to_string(a_.rows()) +
                                            " rows but b has length " + std::to_string(b_.size()));
  }
}

template <typename Matrix>
double LeastSquaresObjective<Matrix>::row_dot(std::size_t i, const Vector& x) const {
  if constexpr (std::is_same_v<Matrix, DenseMatrix>) {
    return a_.row(static_cast<Eigen::Index>(i)).dot(x);
  } else {
    double s = 0.0;
    for (typename Matrix::InnerIterator it(a_, static_cast<Eigen::Index>(i)); it; ++it) {
      s += it.value() * x[it.col()];
    }
    return s;
  }
}

template <typename Matrix>
double LeastSquaresObjective<Matrix>::row_norm(std::size_t i) const {
  if constexpr (std::is_same_v<Matrix, DenseMatrix>) {
    return a_.row(static_cast<Eigen::Index>(i)).norm();
  } else {
    double s = 0.0;
    for (typename Matrix::InnerIterator it(a_, static_cast<Eigen::Index>(i)); it; ++it) {
      s += it.value() * it.value();
    }
    return std::sqrt(s);
  }
}

template <typename Matrix>
double LeastSquaresObjective<Matrix>::scenario_value(const Vector& x, std::size_t i) const {
  const double r = row_dot(i, x) - b_[static_cast<Eigen::Index>(i)];
  return static_cast<double>(a_.rows()) * r * r;
}

template <typename Matrix>
void LeastSquaresObjective<Matrix>::add_scenario_subgradient(const Vector& x, std::size_t i,
                                                             double weight, Vector& acc) const {
  const double r = row_dot(i, x) - b_[static_cast<Eigen::Index>(i)];
  const double c = weight * 2.0 * static_cast<double>(a_.rows()) * r;
  if constexpr (std::is_same_v<Matrix, DenseMatrix>) {
    acc.noalias() += c * a_.row(static_cast<Eigen::Index>(i)).transpose();
  } else {
    for (typename Matrix::InnerIterator it(a_, static_cast<Eigen::Index>(i)); it; ++it) {
      acc[it.col()] += c * it.value();
    }
  }
}

template <typename Matrix>
double LeastSquaresObjective<Matrix>::value(const Vector& x) const {
  require_dimension(dim_of(x), dimension(), "least squares value");
  return (a_ * x - b_).squaredNorm();
}

template <typename Matrix>
void LeastSquaresObjective<Matrix>::add_subgradient(const Vector& x, double weight, Vector& acc) const {
  const Vector residual = a_ * x - b_;
  acc.noalias() += (2.0 * weight) * (a_.transpose() * residual);
}

template <typename Matrix>
std::optional<double> LeastSquaresObjective<Matrix>::residual_bound(std::size_t i,
                                                                    const FeasibleSet& set) const {
  const double bi = b_[static_cast<Eigen::Index>(i)];
  switch (set.kind()) {
    case SetKind::whole_space:
      return std::nullopt;
    case SetKind::ball: {
      const double center = row_dot(i, set.center()) - bi;
      return std::abs(center) + row_norm(i) * set.radius();
    }
    case SetKind::box: {
      double hi = 0.0, lo = 0.0;
      auto visit = [&](Eigen::Index j, double aij) {
        hi += std::max(aij * set.lower()[j], aij * set.upper()[j]);
        lo += std::min(aij * set.lower()[j], aij * set.upper()[j]);
      };
      if constexpr (std::is_same_v<Matrix, DenseMatrix>) {
        for (Eigen::Index j = 0; j < a_.cols(); ++j) visit(j, a_(static_cast<Eigen::Index>(i), j));
      } else {
        for (typename Matrix::InnerIterator it(a_, static_cast<Eigen::Index>(i)); it; ++it) {
          visit(it.col(), it.value());
        }
      }
      return std::max(std::abs(hi - bi), std::abs(lo - bi));
    }
  }
  return std::nullopt;
}

template <typename Matrix>
std::optional<double> LeastSquaresObjective<Matrix>::subgradient_bound(const FeasibleSet& set) const {
  const double m = static_cast<double>(a_.rows());
  double best = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(a_.rows()); ++i) {
    const auto r = residual_bound(i, set);
    if (!r) return std::nullopt;
    best = std::max(best, 2.0 * m * row_norm(i) * *r);
  }
  return best;
}

template <typename Matrix>
std::optional<double> LeastSquaresObjective<Matrix>::value_bound(const FeasibleSet& set) const {
  double total = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(a_.rows()); ++i) {
    const auto r = residual_bound(i, set);
    if (!r) return std::nullopt;
    total += *r * *r;
  }
  return total;
}

template class LeastSquaresObjective<DenseMatrix>;
template class LeastSquaresObjective<SparseMatrix>;

// ---------------------------------------------------------------------------
// hinge

HingeObjective::HingeObjective(SparseMatrix features, Vector labels)
    : a_(std::move(features)), b_(std::move(labels)),
      dist_(static_cast<std::size_t>(std::max<Eigen::Index>(a_.rows(), 1))) {
  if (a_.rows() == 0) fail(ErrorCode::invalid_argument, "hinge: no examples");
  if (a_.cols() == 0) fail(ErrorCode::invalid_argument, "hinge: no features");
  if (b_.size() != a_.rows()) fail(ErrorCode::dimension_mismatch, "hinge: label count differs from example count");
  for (Eigen::Index i = 0; i < b_.size(); ++i) {
    if (b_[i] != 1.0 && b_[i] != -1.0) {
      fail(ErrorCode::invalid_argument, "hinge: invalid label at example " + std::to_string(i + 1) +
                                            " (labels must be -1 or +1)");
    }
  }
  a_.makeCompressed();
}

double HingeObjective::margin(const Vector& x, std::size_t i) const {
  double s = 0.0;
  for (SparseMatrix::InnerIterator it(a_, static_cast<Eigen::Index>(i)); it; ++it) s += it.value() * x[it.col()];
  return b_[static_cast<Eigen::Index>(i)] * s;
}

double HingeObjective::scenario_value(const Vector& x, std::size_t i) const {
  return std::max(0.0, 1.0 - margin(x, i));
}

void HingeObjective::add_scenario_subgradient(const Vector& x, std::size_t i, double weight,
                                              Vector& acc) const {
  if (1.0 - margin(x, i) <= 0.0) return;
  const double c = -weight * b_[static_cast<Eigen::Index>(i)];
  for (SparseMatrix::InnerIterator it(a_, static_cast<Eigen::Index>(i)); it; ++it) acc[it.col()] += c * it.value();
}

double HingeObjective::value(const Vector& x) const {
  require_dimension(dim_of(x), dimension(), "hinge value");
  const Vector margins = b_.cwiseProduct(a_ * x);
  return (1.0 - margins.array()).max(0.0).sum() / static_cast<double>(a_.rows());
}

void HingeObjective::add_subgradient(const Vector& x, double weight, Vector& acc) const {
  const Vector margins = b_.cwiseProduct(a_ * x);
  const double m = static_cast<double>(a_.rows());
  const Vector coef = (margins.array() < 1.0).select(-b_.array() * (weight / m), 0.0).matrix();
  acc.noalias() += a_.transpose() * coef;
}

std::optional<double> HingeObjective::subgradient_bound(const FeasibleSet&) const {
  double best = 0.0;
  for (Eigen::Index i = 0; i < a_.rows(); ++i) best = std::max(best, a_.row(i).norm());
  return best;
}

std::optional<double> HingeObjective::value_bound(const FeasibleSet& set) const {
  const auto m = set.diameter_bound();
  if (!m) return std::nullopt;
  return 1.0 + *subgradient_bound(set) * *m;
}

double HingeObjective::misclassification(const Vector& x) const {
  const Vector margins = b_.cwiseProduct(a_ * x);
  return static_cast<double>((margins.array() <= 0.0).count()) / static_cast<double>(a_.rows());
}

// ---------------------------------------------------------------------------
// elastic net

ElasticNetObjective::ElasticNetObjective(double mu, std::size_t n) : mu_(mu), n_(n), dist_(1) {
  if (!(mu > 0.0) || !std::isfinite(mu)) fail(ErrorCode::invalid_argument, "elastic net: mu_h must be positive");
  if (n == 0) fail(ErrorCode::invalid_argument, "elastic net: dimension must be positive");
}

double ElasticNetObjective::value(const Vector& x) const {
  require_dimension(dim_of(x), n_, "elastic net value");
  return 0.5 * mu_ * x.squaredNorm() + x.lpNorm<1>();
}

void ElasticNetObjective::add_subgradient(const Vector& x, double weight, Vector& acc) const {
  for (Eigen::Index j = 0; j < x.size(); ++j) acc[j] += weight * (mu_ * x[j] + sign0(x[j]));
}

std::optional<double> ElasticNetObjective::subgradient_bound(const FeasibleSet& set) const {
  const auto m = set.coordinate_bounds();
  if (!m) return std::nullopt;
  double s = 0.0;
  for (Eigen::Index j = 0; j < m->size(); ++j) {
    if ((*m)[j] == 0.0) continue;
    const double g = mu_ * (*m)[j] + 1.0;
    s += g * g;
  }
  return std::sqrt(s);
}

std::optional<double> ElasticNetObjective::value_bound(const FeasibleSet& set) const {
  const auto m = set.coordinate_bounds();
  if (!m) return std::nullopt;
  return 0.5 * mu_ * m->squaredNorm() + m->lpNorm<1>();
}

// ---------------------------------------------------------------------------
// quadratic

QuadraticObjective::QuadraticObjective(DenseMatrix q, Vector c, double kappa)
    : q_(std::move(q)), c_(std::move(c)), kappa_(kappa), dist_(1) {
  if (c_.size() == 0) fail(ErrorCode::invalid_argument, "quadratic: dimension must be positive");
  if (q_.rows() != c_.size() || q_.cols() != c_.size()) {
    fail(ErrorCode::dimension_mismatch, "quadratic: Q must be square and match c");
  }
  if (!q_.isApprox(q_.transpose(), 1e-12)) fail(ErrorCode::invalid_argument, "quadratic: Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(q_, Eigen::EigenvaluesOnly);
  min_eigen_ = eig.eigenvalues().minCoeff();
  max_eigen_ = eig.eigenvalues().maxCoeff();
  if (min_eigen_ < -1e-12 * std::max(1.0, max_eigen_)) {
    fail(ErrorCode::invalid_argument, "quadratic: Q must be positive semidefinite");
  }
  min_eigen_ = std::max(min_eigen_, 0.0);
}

double QuadraticObjective::value(const Vector& x) const {
  require_dimension(dim_of(x), dimension(), "quadratic value");
  return 0.5 * x.dot(q_ * x) + c_.dot(x) + kappa_;
}

void QuadraticObjective::add_subgradient(const Vector& x, double weight, Vector& acc) const {
  acc.noalias() += weight * (q_ * x + c_);
}

std::optional<double> QuadraticObjective::subgradient_bound(const FeasibleSet& set) const {
  const auto m = set.diameter_bound();
  if (!m) return std::nullopt;
  return max_eigen_ * *m + c_.norm();
}

std::optional<double> QuadraticObjective::value_bound(const FeasibleSet& set) const {
  const auto m = set.diameter_bound();
  if (!m) return std::nullopt;
  return 0.5 * max_eigen_ * *m * *m + c_.norm() * *m + std::abs(kappa_);
}

// ---------------------------------------------------------------------------

ObjectivePtr make_least_squares(DenseMatrix a, Vector b) {
  return std::make_shared<DenseLeastSquares>(std::move(a), std::move(b));
}

ObjectivePtr make_least_squares(SparseMatrix a, Vector b) {
  return std::make_shared<SparseLeastSquares>(std::move(a), std::move(b));
}

ObjectivePtr make_hinge_elm(SparseMatrix features, Vector labels) {
  return std::make_shared<HingeObjective>(std::move(features), std::move(labels));
}

ObjectivePtr make_elastic_net(double mu_h, std::size_t n) {
  return std::make_shared<ElasticNetObjective>(mu_h, n);
}

ObjectivePtr make_quadratic(DenseMatrix q, Vector c, double kappa) {
  return std::make_shared<QuadraticObjective>(std::move(q), std::move(c), kappa);
}

// ---------------------------------------------------------------------------

BilevelProblem::BilevelProblem(ObjectivePtr inner, ObjectivePtr outer, FeasibleSet set)
    : inner_(std::move(inner)), outer_(std::move(outer)), set_(std::move(set)) {
  if (!inner_ || !outer_) fail(ErrorCode::invalid_argument, "bilevel problem: missing objective");
  require_dimension(inner_->dimension(), set_.dimension(), "inner objective");
  require_dimension(outer_->dimension(), set_.dimension(), "outer objective");
  if (!(outer_->strong_convexity() > 0.0)) {
    fail(ErrorCode::invalid_argument, "bilevel problem: outer objective must be strongly convex (mu_h > 0)");
  }
}

ProblemConstants BilevelProblem::constants() const {
  ProblemConstants c;
  c.inner_bound = inner_->subgradient_bound(set_);
  c.outer_bound = outer_->subgradient_bound(set_);
  c.outer_value_bound = outer_->value_bound(set_);
  c.diameter = set_.diameter_bound();
  c.outer_modulus = mu_h();
  return c;
}

void BilevelProblem::add_step_direction(const Vector& x, double gamma, double lambda,
                                        SampleSource& src, Vector& dir) const {
  if (deterministic_) {
    inner_->add_subgradient(x, gamma, dir);
    outer_->add_subgradient(x, gamma * lambda, dir);
    return;
  }
  const std::size_t xi = inner_->distribution().draw(src);
  const std::size_t xi_tilde = outer_->distribution().draw(src);
  inner_->add_scenario_subgradient(x, xi, gamma, dir);
  outer_->add_scenario_subgradient(x, xi_tilde, gamma * lambda, dir);
}

double BilevelProblem::regularized_value(const Vector& x, double lambda) const {
  return inner_->value(x) + lambda * outer_->value(x);
}

Vector BilevelProblem::regularized_subgradient(const Vector& x, double lambda) const {
  Vector g = Vector::Zero(x.size());
  inner_->add_subgradient(x, 1.0, g);
  outer_->add_subgradient(x, lambda, g);
  return g;
}

Vector sample_subgrad_f(const BilevelProblem& p, const Vector& x, SampleSource& src) {
  require_dimension(dim_of(x), p.dimension(), "sample_subgrad_f");
  Vector g = Vector::Zero(x.size());
  if (p.deterministic()) {
    p.inner().add_subgradient(x, 1.0, g);
  } else {
    p.inner().add_scenario_subgradient(x, p.inner().distribution().draw(src), 1.0, g);
  }
  return g;
}

Vector sample_subgrad_h(const BilevelProblem& p, const Vector& x, SampleSource& src) {
  require_dimension(dim_of(x), p.dimension(), "sample_subgrad_h");
  Vector g = Vector::Zero(x.size());
  if (p.deterministic()) {
    p.outer().add_subgradient(x, 1.0, g);
  } else {
    p.outer().add_scenario_subgradient(x, p.outer().distribution().draw(src), 1.0, g);
  }
  return g;
}

double exact_f(const BilevelProblem& p, const Vector& x) {
  require_dimension(dim_of(x), p.dimension(), "exact_f");
  return p.inner().value(x);
}

double exact_h(const BilevelProblem& p, const Vector& x) {
  require_dimension(dim_of(x), p.dimension(), "exact_h");
  return p.outer().value(x);
}

Vector exact_subgrad_f(const BilevelProblem& p, const Vector& x) {
  require_dimension(dim_of(x), p.dimension(), "exact_subgrad_f");
  Vector g = Vector::Zero(x.size());
  p.inner().add_subgradient(x, 1.0, g);
  return g;
}

Vector exact_subgrad_h(const BilevelProblem& p, const Vector& x) {
  require_dimension(dim_of(x), p.dimension(), "exact_subgrad_h");
  Vector g = Vector::Zero(x.size());
  p.outer().add_subgradient(x, 1.0, g);
  return g;
}

Vector enumerate_scenario_subgradient(const StochasticObjective& obj, const Vector& x) {
  Vector g = Vector::Zero(x.size());
  const auto& dist = obj.distribution();
  for (std::size_t i = 0; i < dist.size(); ++i) obj.add_scenario_subgradient(x, i, dist.probability(i), g);
  return g;
}

}  // namespace irsmd

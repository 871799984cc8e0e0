#include "irsmd/twostage.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "irsmd/error.hpp"
#include "irsmd/io.hpp"

namespace irsmd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sup over the set of ||v - s||_2; infinite when the set is unbounded.
double sup_norm_offset(const FeasibleSet& set, const Vector& s) {
  if (set.kind() == SetKind::box) {
    return (set.lower() - s).cwiseAbs().cwiseMax((set.upper() - s).cwiseAbs()).norm();
  }
  if (set.kind() == SetKind::ball) return (set.center() - s).norm() + set.radius();
  return kInf;
}

Vector mat_times(const DenseMatrix& m, const Vector& xi, Eigen::Index rows) {
  if (m.size() == 0) return Vector::Zero(rows);
  return m * xi;
}

FeasibleSet slice_box(const FeasibleSet& set, Eigen::Index offset, Eigen::Index len) {
  return FeasibleSet::box(set.lower().segment(offset, len), set.upper().segment(offset, len));
}

std::optional<double> finite_or_empty(double v) {
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

QuadraticPiece::QuadraticPiece(Coefficients c) : c_(std::move(c)) {
  const Eigen::Index n = c_.linear.size();
  if (n == 0) fail(ErrorCode::invalid_argument, "quadratic piece: dimension must be positive");
  if (c_.hessian.size() == 0) c_.hessian = DenseMatrix::Zero(n, n);
  if (c_.center.size() == 0) c_.center = Vector::Zero(n);
  if (c_.hessian.rows() != n || c_.hessian.cols() != n) {
    fail(ErrorCode::dimension_mismatch, "quadratic piece: hessian must be " + std::to_string(n) + "x" +
                                            std::to_string(n));
  }
  require_dimension(static_cast<std::size_t>(c_.center.size()), static_cast<std::size_t>(n), "quadratic piece center");
  if (c_.center_xi.size() != 0 && c_.center_xi.rows() != n) {
    fail(ErrorCode::dimension_mismatch, "quadratic piece: center_xi must have one row per coordinate");
  }
  if (c_.linear_xi.size() != 0 && c_.linear_xi.rows() != n) {
    fail(ErrorCode::dimension_mismatch, "quadratic piece: linear_xi must have one row per coordinate");
  }
  if (!c_.hessian.isApprox(c_.hessian.transpose(), 1e-12) && c_.hessian.norm() > 0.0) {
    fail(ErrorCode::invalid_argument, "quadratic piece: hessian must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(c_.hessian, Eigen::EigenvaluesOnly);
  min_eigen_ = eig.eigenvalues().minCoeff();
  max_eigen_ = eig.eigenvalues().maxCoeff();
  if (min_eigen_ < -1e-12 * std::max(1.0, max_eigen_)) {
    fail(ErrorCode::invalid_argument, "quadratic piece: hessian must be positive semidefinite");
  }
  min_eigen_ = std::max(min_eigen_, 0.0);
  max_eigen_ = std::max(max_eigen_, 0.0);
}

PiecePtr QuadraticPiece::affine(Vector linear, double constant) {
  Coefficients c;
  c.linear = std::move(linear);
  c.constant = constant;
  return std::make_shared<QuadraticPiece>(std::move(c));
}

Vector QuadraticPiece::shift(const Vector& xi) const {
  return c_.center + mat_times(c_.center_xi, xi, c_.linear.size());
}

Vector QuadraticPiece::slope(const Vector& xi) const {
  return c_.linear + mat_times(c_.linear_xi, xi, c_.linear.size());
}

double QuadraticPiece::offset(const Vector& xi) const {
  return c_.constant + (c_.constant_xi.size() ? c_.constant_xi.dot(xi) : 0.0);
}

double QuadraticPiece::value(const Vector& v, const Vector& xi) const {
  const Vector u = v - shift(xi);
  return 0.5 * u.dot(c_.hessian * u) + slope(xi).dot(v) + offset(xi);
}

void QuadraticPiece::add_subgradient(const Vector& v, const Vector& xi, double weight, Vector& acc) const {
  acc.noalias() += weight * (c_.hessian * (v - shift(xi)) + slope(xi));
}

double QuadraticPiece::subgradient_bound(const FeasibleSet& box, const Vector& xi) const {
  const double g = slope(xi).norm();
  if (max_eigen_ == 0.0) return g;
  return max_eigen_ * sup_norm_offset(box, shift(xi)) + g;
}

double QuadraticPiece::value_bound(const FeasibleSet& box, const Vector& xi) const {
  const Vector g = slope(xi);
  const double vq = max_eigen_ == 0.0 ? 0.0 : 0.5 * max_eigen_ * std::pow(sup_norm_offset(box, shift(xi)), 2);
  const double vl = g.norm() == 0.0 ? 0.0 : g.norm() * box.diameter_bound().value_or(kInf);
  return vq + vl + std::abs(offset(xi));
}

// ---------------------------------------------------------------------------

TwoStagePenalty::TwoStagePenalty(std::shared_ptr<const TwoStageSpec> spec, StackLayout layout)
    : spec_(std::move(spec)), layout_(layout), dist_(spec_->probabilities) {}

double TwoStagePenalty::scenario_value(const Vector& x, std::size_t i) const {
  const auto n = static_cast<Eigen::Index>(layout_.first_stage());
  const auto m = static_cast<Eigen::Index>(layout_.second_stage());
  const Vector z = x.head(n);
  const Vector y = x.segment(layout_.y_offset(i), m);
  const Vector& xi = spec_->scenarios[i];
  double acc = 0.0;
  for (const auto& lc : spec_->linking_constraints) {
    acc += std::max(0.0, lc.first_stage->value(z, xi) + lc.second_stage->value(y, xi));
  }
  for (const auto& u : spec_->first_stage_constraints) acc += std::max(0.0, u->value(z, xi));
  return acc;
}

void TwoStagePenalty::add_scenario_subgradient(const Vector& x, std::size_t i, double weight, Vector& acc) const {
  const auto n = static_cast<Eigen::Index>(layout_.first_stage());
  const auto m = static_cast<Eigen::Index>(layout_.second_stage());
  const Eigen::Index off = layout_.y_offset(i);
  const Vector z = x.head(n);
  const Vector y = x.segment(off, m);
  const Vector& xi = spec_->scenarios[i];
  Vector gz = Vector::Zero(n);
  Vector gy = Vector::Zero(m);
  for (const auto& lc : spec_->linking_constraints) {
    if (lc.first_stage->value(z, xi) + lc.second_stage->value(y, xi) > 0.0) {
      lc.first_stage->add_subgradient(z, xi, weight, gz);
      lc.second_stage->add_subgradient(y, xi, weight, gy);
    }
  }
  for (const auto& u : spec_->first_stage_constraints) {
    if (u->value(z, xi) > 0.0) u->add_subgradient(z, xi, weight, gz);
  }
  acc.head(n) += gz;
  acc.segment(off, m) += gy;
}

std::optional<double> TwoStagePenalty::subgradient_bound(const FeasibleSet& set) const {
  if (set.kind() != SetKind::box) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(layout_.first_stage());
  const auto m = static_cast<Eigen::Index>(layout_.second_stage());
  const FeasibleSet zbox = slice_box(set, 0, n);
  double worst = 0.0;
  for (std::size_t i = 0; i < layout_.scenarios(); ++i) {
    const FeasibleSet ybox = slice_box(set, layout_.y_offset(i), m);
    const Vector& xi = spec_->scenarios[i];
    double gz = 0.0, gy = 0.0;
    for (const auto& lc : spec_->linking_constraints) {
      gz += lc.first_stage->subgradient_bound(zbox, xi);
      gy += lc.second_stage->subgradient_bound(ybox, xi);
    }
    for (const auto& u : spec_->first_stage_constraints) gz += u->subgradient_bound(zbox, xi);
    worst = std::max(worst, std::hypot(gz, gy));
  }
  return finite_or_empty(worst);
}

std::optional<double> TwoStagePenalty::value_bound(const FeasibleSet& set) const {
  if (set.kind() != SetKind::box) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(layout_.first_stage());
  const auto m = static_cast<Eigen::Index>(layout_.second_stage());
  const FeasibleSet zbox = slice_box(set, 0, n);
  double worst = 0.0;
  for (std::size_t i = 0; i < layout_.scenarios(); ++i) {
    const FeasibleSet ybox = slice_box(set, layout_.y_offset(i), m);
    const Vector& xi = spec_->scenarios[i];
    double v = 0.0;
    for (const auto& lc : spec_->linking_constraints) {
      v += lc.first_stage->value_bound(zbox, xi) + lc.second_stage->value_bound(ybox, xi);
    }
    for (const auto& u : spec_->first_stage_constraints) v += u->value_bound(zbox, xi);
    worst = std::max(worst, v);
  }
  return finite_or_empty(worst);
}

// ---------------------------------------------------------------------------

TwoStageCost::TwoStageCost(std::shared_ptr<const TwoStageSpec> spec, StackLayout layout, double modulus)
    : spec_(std::move(spec)), layout_(layout), dist_(spec_->probabilities), modulus_(modulus) {}

double TwoStageCost::scenario_value(const Vector& x, std::size_t i) const {
  const auto n = static_cast<Eigen::Index>(layout_.first_stage());
  const auto m = static_cast<Eigen::Index>(layout_.second_stage());
  const Vector& xi = spec_->scenarios[i];
  return spec_->cost->value(x.head(n), xi) + spec_->recourse->value(x.segment(layout_.y_offset(i), m), xi);
}

void TwoStageCost::add_scenario_subgradient(const Vector& x, std::size_t i, double weight, Vector& acc) const {
  const auto n = static_cast<Eigen::Index>(layout_.first_stage());
  const auto m = static_cast<Eigen::Index>(layout_.second_stage());
  const Eigen::Index off = layout_.y_offset(i);
  const Vector& xi = spec_->scenarios[i];
  Vector gz = Vector::Zero(n);
  Vector gy = Vector::Zero(m);
  spec_->cost->add_subgradient(x.head(n), xi, weight, gz);
  spec_->recourse->add_subgradient(x.segment(off, m), xi, weight, gy);
  acc.head(n) += gz;
  acc.segment(off, m) += gy;
}

double TwoStageCost::value(const Vector& x) const {
  require_dimension(static_cast<std::size_t>(x.size()), dimension(), "two-stage cost");
  const auto n = static_cast<Eigen::Index>(layout_.first_stage());
  const auto m = static_cast<Eigen::Index>(layout_.second_stage());
  // c(z) does not depend on xi in the stacked formulation; evaluate it at the first scenario.
  double acc = spec_->cost->value(x.head(n), spec_->scenarios.front());
  for (std::size_t i = 0; i < layout_.scenarios(); ++i) {
    acc += spec_->probabilities[i] * spec_->recourse->value(x.segment(layout_.y_offset(i), m), spec_->scenarios[i]);
  }
  return acc;
}

void TwoStageCost::add_subgradient(const Vector& x, double weight, Vector& acc) const {
  const auto n = static_cast<Eigen::Index>(layout_.first_stage());
  const auto m = static_cast<Eigen::Index>(layout_.second_stage());
  Vector gz = Vector::Zero(n);
  spec_->cost->add_subgradient(x.head(n), spec_->scenarios.front(), weight, gz);
  acc.head(n) += gz;
  for (std::size_t i = 0; i < layout_.scenarios(); ++i) {
    Vector gy = Vector::Zero(m);
    const Eigen::Index off = layout_.y_offset(i);
    spec_->recourse->add_subgradient(x.segment(off, m), spec_->scenarios[i], weight * spec_->probabilities[i], gy);
    acc.segment(off, m) += gy;
  }
}

std::optional<double> TwoStageCost::subgradient_bound(const FeasibleSet& set) const {
  if (set.kind() != SetKind::box) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(layout_.first_stage());
  const auto m = static_cast<Eigen::Index>(layout_.second_stage());
  const FeasibleSet zbox = slice_box(set, 0, n);
  double worst = 0.0;
  for (std::size_t i = 0; i < layout_.scenarios(); ++i) {
    const Vector& xi = spec_->scenarios[i];
    const double gz = spec_->cost->subgradient_bound(zbox, xi);
    const double gy = spec_->recourse->subgradient_bound(slice_box(set, layout_.y_offset(i), m), xi);
    worst = std::max(worst, std::hypot(gz, gy));
  }
  return finite_or_empty(worst);
}

std::optional<double> TwoStageCost::value_bound(const FeasibleSet& set) const {
  if (set.kind() != SetKind::box) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(layout_.first_stage());
  const auto m = static_cast<Eigen::Index>(layout_.second_stage());
  double v = spec_->cost->value_bound(slice_box(set, 0, n), spec_->scenarios.front());
  for (std::size_t i = 0; i < layout_.scenarios(); ++i) {
    v += spec_->probabilities[i] *
         spec_->recourse->value_bound(slice_box(set, layout_.y_offset(i), m), spec_->scenarios[i]);
  }
  return finite_or_empty(v);
}

// ---------------------------------------------------------------------------

namespace {

void check_piece(const PiecePtr& p, std::size_t dim, const std::string& what) {
  if (!p) fail(ErrorCode::invalid_argument, "two-stage: missing " + what);
  require_dimension(p->dimension(), dim, what.c_str());
}

FeasibleSet stack_set(const TwoStageSpec& spec, const StackLayout& layout) {
  const bool has_z = spec.first_stage_box.has_value();
  const bool has_y = spec.second_stage_box.has_value();
  if (!has_z && !has_y) return FeasibleSet::whole_space(layout.dimension());
  if (has_z != has_y) {
    fail(ErrorCode::invalid_argument, "two-stage: give both the first- and second-stage boxes, or neither");
  }
  if (spec.first_stage_box->kind() != SetKind::box || spec.second_stage_box->kind() != SetKind::box) {
    fail(ErrorCode::invalid_argument, "two-stage: stage sets must be boxes");
  }
  require_dimension(spec.first_stage_box->dimension(), layout.first_stage(), "first-stage box");
  require_dimension(spec.second_stage_box->dimension(), layout.second_stage(), "second-stage box");
  const auto dim = static_cast<Eigen::Index>(layout.dimension());
  const auto n = static_cast<Eigen::Index>(layout.first_stage());
  const auto m = static_cast<Eigen::Index>(layout.second_stage());
  Vector lo(dim), hi(dim);
  lo.head(n) = spec.first_stage_box->lower();
  hi.head(n) = spec.first_stage_box->upper();
  for (std::size_t i = 0; i < layout.scenarios(); ++i) {
    lo.segment(layout.y_offset(i), m) = spec.second_stage_box->lower();
    hi.segment(layout.y_offset(i), m) = spec.second_stage_box->upper();
  }
  return FeasibleSet::box(std::move(lo), std::move(hi));
}

}  // namespace

CompiledBilevel compile(TwoStageSpec spec_in) {
  auto spec = std::make_shared<TwoStageSpec>(std::move(spec_in));
  if (spec->scenarios.empty()) fail(ErrorCode::invalid_argument, "two-stage: at least one scenario is required");
  if (spec->probabilities.size() != spec->scenarios.size()) {
    fail(ErrorCode::dimension_mismatch, "two-stage: need one probability per scenario");
  }
  for (double p : spec->probabilities) {
    if (!(p > 0.0)) fail(ErrorCode::invalid_argument, "two-stage: scenario probabilities must be positive");
  }
  const auto d = static_cast<std::size_t>(spec->scenarios.front().size());
  for (const auto& xi : spec->scenarios) require_dimension(static_cast<std::size_t>(xi.size()), d, "scenario vector");
  if (!spec->cost || !spec->recourse) fail(ErrorCode::invalid_argument, "two-stage: cost and recourse are required");
  const std::size_t n = spec->cost->dimension();
  const std::size_t m = spec->recourse->dimension();
  for (std::size_t l = 0; l < spec->first_stage_constraints.size(); ++l) {
    check_piece(spec->first_stage_constraints[l], n, "first-stage constraint " + std::to_string(l + 1));
  }
  for (std::size_t j = 0; j < spec->linking_constraints.size(); ++j) {
    check_piece(spec->linking_constraints[j].first_stage, n, "linking constraint " + std::to_string(j + 1) + " first-stage part");
    check_piece(spec->linking_constraints[j].second_stage, m, "linking constraint " + std::to_string(j + 1) + " second-stage part");
  }
  StackLayout layout(n, m, spec->scenarios.size());
  FeasibleSet set = stack_set(*spec, layout);

  double modulus = spec->cost->strong_convexity();
  for (double p : spec->probabilities) modulus = std::min(modulus, p * spec->recourse->strong_convexity());
  if (spec->outer_modulus) {
    if (!(*spec->outer_modulus > 0.0)) fail(ErrorCode::invalid_argument, "two-stage: outer_modulus must be positive");
    modulus = *spec->outer_modulus;
  }
  if (!(modulus > 0.0)) {
    fail(ErrorCode::invalid_argument,
         "two-stage: the expected cost is not strongly convex (cost and recourse need positive definite curvature)");
  }
  auto penalty = std::make_shared<TwoStagePenalty>(spec, layout);
  auto cost = std::make_shared<TwoStageCost>(spec, layout, modulus);
  BilevelProblem problem(penalty, cost, std::move(set));
  return CompiledBilevel{layout, spec, std::move(penalty), std::move(cost), std::move(problem)};
}

namespace {

void check_scenario(const CompiledBilevel& c, const Vector& x, std::size_t i, const char* what) {
  require_dimension(static_cast<std::size_t>(x.size()), c.layout.dimension(), what);
  if (i >= c.layout.scenarios()) {
    fail(ErrorCode::invalid_argument, std::string(what) + ": scenario index " + std::to_string(i) +
                                          " out of range (have " + std::to_string(c.layout.scenarios()) + ")");
  }
}

}  // namespace

double eval_F(const CompiledBilevel& c, const Vector& x, std::size_t i) {
  check_scenario(c, x, i, "eval_F");
  return c.penalty->scenario_value(x, i);
}

double eval_H(const CompiledBilevel& c, const Vector& x, std::size_t i) {
  check_scenario(c, x, i, "eval_H");
  return c.cost->scenario_value(x, i);
}

Vector subgrad_F(const CompiledBilevel& c, const Vector& x, std::size_t i) {
  check_scenario(c, x, i, "subgrad_F");
  Vector g = Vector::Zero(x.size());
  c.penalty->add_scenario_subgradient(x, i, 1.0, g);
  return g;
}

Vector subgrad_H(const CompiledBilevel& c, const Vector& x, std::size_t i) {
  check_scenario(c, x, i, "subgrad_H");
  Vector g = Vector::Zero(x.size());
  c.cost->add_scenario_subgradient(x, i, 1.0, g);
  return g;
}

// ---------------------------------------------------------------------------
// File format

namespace {

DenseMatrix parse_hessian(const std::string& text, std::size_t dim, const std::string& where) {
  const auto n = static_cast<Eigen::Index>(dim);
  if (text.find(';') == std::string::npos) {
    const auto vals = parse_number_list(text, where);
    if (vals.size() == 1) return DenseMatrix::Identity(n, n) * vals[0];
    if (vals.size() == dim) {
      return Eigen::Map<const Vector>(vals.data(), n).asDiagonal();
    }
    if (vals.size() == dim * dim && dim > 1) {
      fail(ErrorCode::parse, where + ": write full hessians as ';'-separated rows");
    }
    fail(ErrorCode::parse, where + ": hessian needs 1, " + std::to_string(dim) + " or " + std::to_string(dim) + "x" +
                               std::to_string(dim) + " entries");
  }
  DenseMatrix m = parse_matrix(text, where);
  if (m.rows() != n || m.cols() != n) fail(ErrorCode::parse, where + ": hessian must be square of size " + std::to_string(dim));
  return m;
}

Vector parse_exact_vector(const std::string& text, std::size_t dim, const std::string& where) {
  const auto vals = parse_number_list(text, where);
  if (vals.size() == 1 && dim > 1) return Vector::Constant(static_cast<Eigen::Index>(dim), vals[0]);
  if (vals.size() != dim) {
    fail(ErrorCode::parse, where + ": expected " + std::to_string(dim) + " values, got " + std::to_string(vals.size()));
  }
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(dim));
}

DenseMatrix parse_xi_matrix(const std::string& text, std::size_t rows, std::size_t d, const std::string& where) {
  DenseMatrix m = parse_matrix(text, where);
  if (m.rows() == 1 && rows == 1 && static_cast<std::size_t>(m.cols()) == d) return m;
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != d) {
    fail(ErrorCode::parse, where + ": expected a " + std::to_string(rows) + "x" + std::to_string(d) +
                               " matrix (rows separated by ';')");
  }
  return m;
}

// Reads the piece keys that follow `prefix` (e.g. "first_linear").
PiecePtr parse_piece(const IniSection& sec, const std::string& prefix, std::size_t dim, std::size_t d) {
  const std::string where = "[" + sec.name + "] (line " + std::to_string(sec.line) + ")";
  auto get = [&](const char* key) { return sec.find(prefix + key); };
  if (const auto* type = get("type"); type && *type != "quadratic" && *type != "affine") {
    fail(ErrorCode::parse, where + ": unknown piece type '" + *type + "'");
  }
  QuadraticPiece::Coefficients c;
  const auto n = static_cast<Eigen::Index>(dim);
  c.linear = Vector::Zero(n);
  if (const auto* v = get("hessian")) c.hessian = parse_hessian(*v, dim, where + " " + prefix + "hessian");
  if (const auto* v = get("center")) c.center = parse_exact_vector(*v, dim, where + " " + prefix + "center");
  if (const auto* v = get("center_xi")) c.center_xi = parse_xi_matrix(*v, dim, d, where + " " + prefix + "center_xi");
  if (const auto* v = get("linear")) c.linear = parse_exact_vector(*v, dim, where + " " + prefix + "linear");
  if (const auto* v = get("linear_xi")) c.linear_xi = parse_xi_matrix(*v, dim, d, where + " " + prefix + "linear_xi");
  if (const auto* v = get("constant")) c.constant = parse_double(*v, where + " " + prefix + "constant");
  if (const auto* v = get("constant_xi")) c.constant_xi = parse_exact_vector(*v, d, where + " " + prefix + "constant_xi");
  if (const auto* type = get("type"); type && *type == "affine" && c.hessian.size() && c.hessian.norm() > 0.0) {
    fail(ErrorCode::parse, where + ": affine piece cannot have a hessian");
  }
  return std::make_shared<QuadraticPiece>(std::move(c));
}

FeasibleSet parse_box(const IniSection& sec, std::size_t dim) {
  const std::string where = "[" + sec.name + "]";
  const auto* lo = sec.find("lower");
  const auto* hi = sec.find("upper");
  if (!lo || !hi) fail(ErrorCode::parse, where + ": lower and upper are required");
  return FeasibleSet::box(parse_exact_vector(*lo, dim, where + " lower"), parse_exact_vector(*hi, dim, where + " upper"));
}

std::size_t require_count(const IniSection& sec, const char* key) {
  const auto* v = sec.find(key);
  if (!v) fail(ErrorCode::parse, "[dimensions]: missing " + std::string(key));
  const long long n = parse_integer(*v, std::string("[dimensions] ") + key);
  if (n < 0) fail(ErrorCode::parse, "[dimensions]: " + std::string(key) + " must be nonnegative");
  return static_cast<std::size_t>(n);
}

}  // namespace

TwoStageSpec parse_two_stage(const std::string& text) {
  const auto sections = parse_ini(text);
  const IniSection* dims = nullptr;
  for (const auto& s : sections) {
    if (s.name == "dimensions") dims = &s;
  }
  if (!dims) fail(ErrorCode::parse, "two-stage file: missing [dimensions]");
  const std::size_t n = require_count(*dims, "first_stage");
  const std::size_t m = require_count(*dims, "second_stage");
  const std::size_t d = dims->find("xi") ? require_count(*dims, "xi") : 0;
  if (n == 0 || m == 0) fail(ErrorCode::parse, "[dimensions]: stage dimensions must be positive");

  TwoStageSpec spec;
  bool seen_scenarios = false;
  for (const auto& s : sections) {
    const std::string where = "[" + s.name + "]";
    if (s.name.empty()) {
      if (!s.entries.empty() || !s.rows.empty()) fail(ErrorCode::parse, "two-stage file: content before the first section");
    } else if (s.name == "dimensions") {
      if (const auto* v = s.find("outer_modulus")) spec.outer_modulus = parse_double(*v, "[dimensions] outer_modulus");
    } else if (s.name == "first_stage_box") {
      spec.first_stage_box = parse_box(s, n);
    } else if (s.name == "second_stage_box") {
      spec.second_stage_box = parse_box(s, m);
    } else if (s.name == "scenarios") {
      if (seen_scenarios) fail(ErrorCode::parse, "two-stage file: [scenarios] given twice");
      seen_scenarios = true;
      for (const auto& row : s.rows) {
        const auto vals = parse_number_list(row, where);
        if (vals.size() != d + 1) {
          fail(ErrorCode::parse, where + ": each row is a probability followed by " + std::to_string(d) + " values");
        }
        spec.probabilities.push_back(vals[0]);
        spec.scenarios.push_back(d ? Vector(Eigen::Map<const Vector>(vals.data() + 1, static_cast<Eigen::Index>(d)))
                                   : Vector());
      }
    } else if (s.name == "cost") {
      spec.cost = parse_piece(s, "", n, d);
    } else if (s.name == "recourse") {
      spec.recourse = parse_piece(s, "", m, d);
    } else if (s.name == "first_stage_constraint") {
      spec.first_stage_constraints.push_back(parse_piece(s, "", n, d));
    } else if (s.name == "linking_constraint") {
      spec.linking_constraints.push_back({parse_piece(s, "first_", n, d), parse_piece(s, "second_", m, d)});
    } else {
      fail(ErrorCode::parse, "two-stage file: unknown section " + where);
    }
  }
  if (!seen_scenarios) fail(ErrorCode::parse, "two-stage file: missing [scenarios]");
  double total = 0.0;
  for (double p : spec.probabilities) total += p;
  if (std::abs(total - 1.0) > 1e-9) fail(ErrorCode::parse, "[scenarios]: probabilities must sum to 1");
  return spec;
}

TwoStageSpec load_two_stage(const std::filesystem::path& path) { return parse_two_stage(read_text_file(path)); }

}  // namespace irsmd

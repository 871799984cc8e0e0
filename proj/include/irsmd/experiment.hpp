#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irsmd/geometry.hpp"
#include "irsmd/io.hpp"
#include "irsmd/oracles.hpp"
#include "irsmd/schedule.hpp"
#include "irsmd/solver.hpp"
#include "irsmd/twostage.hpp"

namespace irsmd {

enum class ProblemKind { least_squares, hinge, two_stage, synthetic_least_squares, synthetic_hinge };

struct SyntheticParams {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 0;        // least squares; 0 means min(rows, cols)
  std::size_t nnz = 10;        // hinge, nonzeros per example
  double noise = 0.0;          // least squares, rhs noise level
  double margin = 0.05;        // hinge, minimum normalized margin kept by the filter
  std::uint64_t seed = 12345;  // generator seed, separate from the run seed
};

/// Validated experiment description. Relative paths are resolved against the
/// directory of the configuration file.
struct RunConfig {
  ProblemKind kind = ProblemKind::least_squares;
  std::filesystem::path matrix, rhs, data, twostage;
  std::size_t features = 0;
  double mu_h = 1.0;
  SyntheticParams synthetic;

  double gamma0 = 1.0, lambda0 = 1.0, a = 0.55, b = 0.4, r = 0.0;
  std::optional<double> delta;

  std::string set = "whole";  // whole | box | ball
  std::vector<double> lower, upper, center;
  double radius = 1.0;

  std::string x0 = "zero";  // zero | const:<c> | a vector file
  std::optional<std::uint64_t> iterations;
  std::optional<double> time_budget_seconds;
  std::size_t paths = 1;
  std::uint64_t seed = 1;
  CheckpointPolicy checkpoints = CheckpointPolicy::geometric;
  std::vector<std::uint64_t> checkpoint_list;
  std::size_t threads = 0;
  bool deterministic = false;
  bool override_validation = false;
  std::size_t eval_subsample = 0;  // 0 evaluates f exactly

  std::optional<double> f_star, h_star;
  std::size_t grid_resolution = 201;
  std::uint64_t reference_budget = 20000;
  double reference_tol = 1e-5;

  std::filesystem::path output_dir = "irsmd-out";
  bool plot_data = true;

  ValidationReport convergence, rate_bound;
  bool initial_product_ok = true;
  std::vector<std::string> warnings;

  Schedule schedule() const;
};

/// "section.key" -> value; applied on top of the file, so flags win.
using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

RunConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir,
                            const ConfigOverrides& overrides = {});

/// Problem, geometry, schedule and start point materialized from a config.
struct Experiment {
  std::shared_ptr<const BilevelProblem> problem;
  std::shared_ptr<const CompiledBilevel> two_stage;  // set for two-stage problems
  std::shared_ptr<const DistanceGenerator> dgf;
  Schedule schedule;
  Vector x0;
};

Experiment build_experiment(const RunConfig& cfg);

struct AggregateRow {
  std::uint64_t k = 0;
  double f_gap_mean = 0.0, f_gap_se = 0.0;
  double h_gap_mean = 0.0, h_gap_se = 0.0;
  std::size_t paths = 0;
};

struct ExperimentResult {
  double f_star = 0.0, h_star = 0.0;
  std::string f_star_source, h_star_source;
  std::vector<RunReport> reports;       // one per path, empty when the path failed
  std::vector<std::string> path_errors; // empty string for successful paths
  std::vector<AggregateRow> aggregate;
  std::map<std::string, std::string> summary;
  double elapsed_ms = 0.0;

  std::size_t failed_paths() const;
};

/// Runs every sample path (seed = base + i) and writes trace_path<i>.csv,
/// aggregate.csv, summary.txt and optional plot data into the output directory.
ExperimentResult run_experiment(const RunConfig& cfg);
/// Same, for an already materialized experiment (no files unless write is set).
ExperimentResult run_experiment(const RunConfig& cfg, const Experiment& ex, bool write = true);

struct TraceCsvRow {
  std::uint64_t k = 0;
  double gamma = 0.0, lambda = 0.0, f_gap = 0.0, h_gap = 0.0, elapsed_ms = 0.0;
};

inline constexpr const char* kTraceHeader = "k,gamma,lambda,f_gap,h_gap,elapsed_ms";

std::vector<TraceCsvRow> trace_rows(const RunReport& rep, double f_star, double h_star);
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceCsvRow>& rows);
std::vector<TraceCsvRow> read_trace_csv(const std::filesystem::path& path);

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);
std::vector<AggregateRow> read_aggregate_csv(const std::filesystem::path& path);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;  // points used in the fit
};

/// Least-squares fit of log(gap) against log(k) over the last `tail_fraction` of
/// the positive-gap points. Needs at least 4 positive gaps.
RateFit fit_rate(const std::vector<std::pair<double, double>>& k_gap, double tail_fraction = 0.5);
/// Reads an aggregate CSV and fits the given gap column (f_gap_mean or h_gap_mean).
RateFit emit_rate_fit(const std::filesystem::path& aggregate_csv, const std::string& column = "f_gap_mean",
                      double tail_fraction = 0.5);

/// Rank-r matrix with unit spectral norm and rhs b = A x_true + noise * e.
std::pair<DenseMatrix, Vector> make_synthetic_least_squares(const SyntheticParams& p);
/// Sparse rows with unit norm labelled by a hidden separator; rows with
/// normalized margin below p.margin are redrawn, so the data are separable.
SparseDataset make_synthetic_hinge(const SyntheticParams& p);

}  // namespace irsmd

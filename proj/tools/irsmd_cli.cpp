// Command-line front end. Talks to the toolkit only through the C API.
#include <cstdio>
#include <cstring>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "irsmd/irsmd.h"

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::size_t> threads;
  bool override_validation = false;
};

struct ConfigDeleter {
  void operator()(irsmd_config* c) const { irsmd_config_free(c); }
};
struct ProblemDeleter {
  void operator()(irsmd_problem* p) const { irsmd_problem_free(p); }
};
struct ScheduleDeleter {
  void operator()(irsmd_schedule* s) const { irsmd_schedule_free(s); }
};

using ConfigPtr = std::unique_ptr<irsmd_config, ConfigDeleter>;
using ProblemPtr = std::unique_ptr<irsmd_problem, ProblemDeleter>;
using SchedulePtr = std::unique_ptr<irsmd_schedule, ScheduleDeleter>;

struct Failure {
  irsmd_status status;
};

void check(irsmd_status s) {
  if (s != IRSMD_OK) {
    std::cerr << "irsmd: " << irsmd_status_name(s) << ": " << irsmd_last_error() << '\n';
    throw Failure{s};
  }
}

// Splits "--section.key value" and "--section.key=value" extras into overrides.
std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.find('.') == std::string::npos) {
      throw CLI::ExtrasError({arg});
    }
    std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      out.emplace_back(body, extras[++i]);
    } else {
      throw CLI::ArgumentMismatch(body + " needs a value");
    }
  }
  return out;
}

ConfigPtr load(const std::string& path, const Globals& g, const std::vector<std::string>& extras) {
  auto ov = parse_overrides(extras);
  if (g.seed) ov.emplace_back("run.seed", std::to_string(*g.seed));
  if (g.paths) ov.emplace_back("run.paths", std::to_string(*g.paths));
  if (g.threads) ov.emplace_back("run.threads", std::to_string(*g.threads));
  if (g.override_validation) ov.emplace_back("run.override_validation", "true");
  std::vector<const char*> keys, values;
  for (const auto& [k, v] : ov) {
    keys.push_back(k.c_str());
    values.push_back(v.c_str());
  }
  irsmd_config* c = nullptr;
  check(irsmd_config_load(path.c_str(), keys.data(), values.data(), ov.size(), &c));
  return ConfigPtr(c);
}

std::string describe(const irsmd_config* c) {
  std::size_t needed = 0;
  check(irsmd_config_describe(c, nullptr, 0, &needed));
  std::string s(needed, '\0');
  check(irsmd_config_describe(c, s.data(), s.size(), nullptr));
  s.resize(needed - 1);
  return s;
}

std::pair<ProblemPtr, SchedulePtr> materialize(const irsmd_config* c) {
  irsmd_problem* p = nullptr;
  irsmd_schedule* s = nullptr;
  check(irsmd_config_problem(c, &p, &s));
  return {ProblemPtr(p), SchedulePtr(s)};
}

void print_bound(const char* label, const irsmd_bound_summary& b) {
  std::printf("%s: %zu/%zu checkpoints pass%s\n", label, b.passed_rows, b.rows, b.certified ? "" : " (uncertified)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative regularized stochastic mirror descent toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_extras();
  Globals g;
  app.add_option("--seed", g.seed, "Base seed (path i uses seed + i)");
  app.add_option("--paths", g.paths, "Number of sample paths")->check(CLI::PositiveNumber);
  app.add_option("--threads", g.threads, "Worker threads (0 = available parallelism)");
  app.add_flag("--override-validation", g.override_validation, "Run even when the schedule checks fail");
  app.add_flag_callback("--version", [] {
    std::cout << irsmd_version() << '\n';
    throw CLI::Success();
  });

  std::string config;
  auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
  run->add_option("config", config, "Config file")->required();
  run->allow_extras();

  auto* validate = app.add_subcommand("validate", "Parse a config and print the schedule checks");
  validate->add_option("config", config, "Config file")->required();
  validate->allow_extras();

  std::string csv, column = "f_gap_mean";
  double tail = 0.5;
  auto* ratefit = app.add_subcommand("ratefit", "Fit log(gap) against log(k) on an aggregate CSV");
  ratefit->add_option("aggregate", csv, "aggregate.csv written by run")->required();
  ratefit->add_option("--column", column, "f_gap_mean or h_gap_mean");
  ratefit->add_option("--tail", tail, "Fraction of trailing points used")->check(CLI::Range(0.0, 1.0));

  std::uint64_t K = 10;
  std::string out, one_step_out;
  auto* path_bound = app.add_subcommand("path-bound", "Check the regularization-path bound for k = 1..K");
  path_bound->add_option("config", config, "Config file")->required();
  path_bound->add_option("--K", K, "Last index checked");
  path_bound->add_option("--out", out, "CSV report");
  path_bound->allow_extras();

  double rho = 0.5;
  auto* recursion = app.add_subcommand("recursion-bound", "Check the recursive iterate bound up to K");
  recursion->add_option("config", config, "Config file")->required();
  recursion->add_option("--K", K, "Horizon");
  recursion->add_option("--rho", rho, "Contraction slack in (0, 1)")->check(CLI::Range(0.0, 1.0));
  recursion->add_option("--out", out, "CSV report of the tau bound");
  recursion->add_option("--one-step-out", one_step_out, "CSV report of the one-step recursion");
  recursion->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      auto c = load(config, g, app.remaining());
      std::cout << describe(c.get());
      irsmd_experiment_summary s{};
      check(irsmd_experiment_run(c.get(), &s));
      std::size_t needed = 0;
      check(irsmd_config_output_dir(c.get(), nullptr, 0, &needed));
      std::string dir(needed, '\0');
      check(irsmd_config_output_dir(c.get(), dir.data(), dir.size(), nullptr));
      dir.resize(needed - 1);
      std::printf("f* = %.10g\nh* = %.10g\n", s.f_star, s.h_star);
      std::printf("k = %llu: feasibility gap %.6e, optimality gap %.6e\n",
                  static_cast<unsigned long long>(s.final_k), s.final_f_gap, s.final_h_gap);
      std::printf("paths: %zu (%zu failed), %.1f ms\noutput: %s\n", s.paths, s.failed_paths, s.elapsed_ms, dir.c_str());
      return s.failed_paths == 0 ? 0 : 3;
    }
    if (*validate) {
      auto c = load(config, g, app.remaining());
      std::cout << describe(c.get());
      return 0;
    }
    if (*ratefit) {
      double slope = 0.0, intercept = 0.0;
      std::size_t points = 0;
      check(irsmd_rate_fit(csv.c_str(), column.c_str(), tail, &slope, &intercept, &points));
      std::printf("slope = %.6f\nintercept = %.6f\npoints = %zu\n", slope, intercept, points);
      return 0;
    }
    if (*path_bound) {
      auto c = load(config, g, app.remaining());
      auto [p, s] = materialize(c.get());
      irsmd_bound_summary b{};
      check(irsmd_path_bound_check(p.get(), s.get(), K, out.empty() ? nullptr : out.c_str(), &b));
      print_bound("path bound", b);
      return b.passed_rows == b.rows ? 0 : 4;
    }
    if (*recursion) {
      auto c = load(config, g, app.remaining());
      auto [p, s] = materialize(c.get());
      irsmd_bound_summary b{};
      check(irsmd_recursion_bound_check(p.get(), s.get(), K, g.paths.value_or(1), g.seed.value_or(1), rho,
                                        g.threads.value_or(0), out.empty() ? nullptr : out.c_str(),
                                        one_step_out.empty() ? nullptr : one_step_out.c_str(), &b));
      std::printf("tau = %.6e, B1 = %.6e, k1 = %llu, k2 = %llu, kbar = %llu\n", b.tau, b.b1,
                  static_cast<unsigned long long>(b.k1), static_cast<unsigned long long>(b.k2),
                  static_cast<unsigned long long>(b.kbar));
      print_bound("recursion bound", b);
      return b.passed_rows == b.rows ? 0 : 4;
    }
  } catch (const Failure& f) {
    return 10 + static_cast<int>(f.status);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return 0;
}

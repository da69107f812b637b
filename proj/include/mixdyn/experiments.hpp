#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixdyn/analysis.hpp"
#include "mixdyn/dynamics.hpp"
#include "mixdyn/integrator.hpp"
#include "mixdyn/problem.hpp"
#include "mixdyn/schedule.hpp"

namespace mixdyn {

/// A problem with its reference solutions and the initial phase-space state.
struct ProblemSetup {
  ProblemInstance problem;
  SaddlePoint saddle;
  MinimalNormSolution min_norm;
  /// Packed (x, lambda, v) at t0.
  VectorXd initial_state;
  /// Number of times the constraint matrix was redrawn for rank deficiency.
  int resamples = 0;
  std::uint64_t seed_used = 0;
};

/// f(x) = (m x1 + n x2 + e x3)^2 subject to m x1 - n x2 + e x3 = 0. Starts at
/// x = (1, 1, -1), lambda = 1, v = (-1, -1, 1). Throws ArgumentError if any
/// coefficient is zero.
ProblemSetup build_toy(double m, double n, double e, double sigma = 1.0);

/// Random equality-constrained QP. Draw order from SplitMix64(seed): q (n
/// normals), A (m x n normals, row-major), b (m uniforms on [0, 1)), R (n x n
/// normals, row-major); M = R^T R. A rank-deficient A is redrawn with seed + k.
/// Starts at the all-ones state.
ProblemSetup build_random_qp(int mdim, int ndim, std::uint64_t seed, double sigma = 1.0);

/// Quadratic problem from a problem file; starts at the all-ones state.
ProblemSetup build_from_file(const std::filesystem::path& path, std::optional<double> sigma);

enum class Scenario { kToy, kRandomQp, kFile };
const char* to_string(Scenario s) noexcept;

struct ExperimentSpec {
  Scenario scenario = Scenario::kToy;
  double toy_m = 1.0;
  double toy_n = 1.0;
  double toy_e = 1.0;
  int mdim = 30;
  int ndim = 50;
  std::uint64_t seed = 1;
  std::string problem_file;

  DampingFamily::Kind gamma_kind = DampingFamily::Kind::kPowerQuotient;
  double alpha = 13.0;
  ScalingFamily::Kind beta_kind = ScalingFamily::Kind::kPower;
  double beta_exp = 1.0;
  TikhonovFamily::Kind eps_kind = TikhonovFamily::Kind::kPowerDecay;
  /// Defaults: toy c = 3, r = 1.1; otherwise c = 1, r = 4.
  std::optional<double> eps_c;
  std::optional<double> eps_r;
  /// Default: default_theta of the damping family.
  std::optional<double> theta;
  /// Default: 1 (or the problem file's value).
  std::optional<double> sigma;
  double t0 = 1.0;
  double tf = 1000.0;

  bool ablation = false;
  bool allow_violation = false;
  IntegratorSettings integrator;
  int samples = 400;
  /// Default: [50, 0.9 tf].
  std::optional<FitWindow> fit_window;
};

/// Fills every optional field with its scenario default.
ExperimentSpec resolve_defaults(const ExperimentSpec& spec);

/// Schedule as configured (before any ablation).
CoefficientSchedule make_schedule(const ExperimentSpec& resolved);

ProblemSetup make_problem(const ExperimentSpec& resolved);

struct NamedFit {
  std::string quantity;
  std::optional<RateFit> fit;
  std::string error;
};

struct RunReport {
  ExperimentSpec spec;  // resolved
  ConditionReport conditions;
  ProblemSetup setup;
  Trajectory trajectory;
  std::vector<MetricSample> metrics;
  std::optional<DecayAudit> decay;
  std::vector<NamedFit> fits;
  /// Trapezoidal accumulations over the sampled horizon of the integrands
  /// whose improper integrals are claimed finite.
  std::vector<std::pair<std::string, double>> integral_estimates;
  bool failed = false;
  std::string failure;
  double t_reached = 0.0;
  /// Wall time of the integration; not written to any report file.
  double elapsed_seconds = 0.0;
};

/// Integrates, evaluates metrics and fits. Throws ArgumentError when the
/// schedule fails the condition audit unless ablation or allow_violation is
/// set. Integration failures do not throw; the report is flagged as failed.
RunReport run_experiment(const ExperimentSpec& spec);

/// Runs one experiment per value of the regularization exponent r, on up to
/// `jobs` worker threads. Results are in the order of `rs`.
std::vector<RunReport> run_sweep(const ExperimentSpec& base, const std::vector<double>& rs,
                                 int jobs);

/// `key = value` lines for every effective setting; readable as a config file.
std::string format_spec(const ExperimentSpec& resolved);

std::string metrics_csv(const RunReport& r);
std::string trajectory_csv(const RunReport& r);
std::string report_text(const RunReport& r);

/// Writes trajectory.csv, metrics.csv, report.txt and conditions.txt into
/// `dir` (created if needed), each through a temporary file and rename.
void write_report(const RunReport& r, const std::filesystem::path& dir);

}  // namespace mixdyn

#include "mixdyn/experiments.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <exception>
#include <sstream>
#include <thread>

#include "mixdyn/errors.hpp"
#include "mixdyn/keyvalue.hpp"
#include "mixdyn/linalg.hpp"
#include "mixdyn/rng.hpp"

namespace mixdyn {

namespace {

ProblemSetup finish_setup(ProblemInstance problem, VectorXd initial_state) {
  SaddlePoint sp = kkt_saddle_point(problem);
  MinimalNormSolution mn = minimal_norm_solution(problem, sp);
  return ProblemSetup{std::move(problem), std::move(sp), std::move(mn), std::move(initial_state), 0,
                      0};
}

std::string join(const VectorXd& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_real(v[i]);
  }
  return out;
}

const char* gamma_kind_name(DampingFamily::Kind k) {
  switch (k) {
    case DampingFamily::Kind::kPowerQuotient:
      return "power";
    case DampingFamily::Kind::kRationalA:
      return "rationalA";
    case DampingFamily::Kind::kRationalB:
      return "rationalB";
    case DampingFamily::Kind::kCustom:
      return "custom";
  }
  return "custom";
}

}  // namespace

ProblemSetup build_toy(double m, double n, double e, double sigma) {
  if (m == 0.0 || n == 0.0 || e == 0.0) {
    throw ArgumentError("toy coefficients m, n, e must all be nonzero");
  }
  const Eigen::Vector3d u(m, n, e);
  QuadraticObjective f(2.0 * u * u.transpose(), VectorXd::Zero(3));
  MatrixXd a(1, 3);
  a << m, -n, e;
  VectorXd y0(7);
  y0 << 1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0;
  return finish_setup(ProblemInstance(std::move(f), a, VectorXd::Zero(1), sigma), y0);
}

ProblemSetup build_random_qp(int mdim, int ndim, std::uint64_t seed, double sigma) {
  if (mdim <= 0 || ndim <= 0 || mdim >= ndim) {
    throw ArgumentError("random QP needs 0 < mdim < ndim");
  }
  for (int k = 0; k < 64; ++k) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
    SplitMix64 rng(s);
    VectorXd q(ndim);
    for (int i = 0; i < ndim; ++i) q[i] = rng.normal();
    MatrixXd a(mdim, ndim);
    for (int i = 0; i < mdim; ++i) {
      for (int j = 0; j < ndim; ++j) a(i, j) = rng.normal();
    }
    VectorXd b(mdim);
    for (int i = 0; i < mdim; ++i) b[i] = rng.uniform();
    MatrixXd r(ndim, ndim);
    for (int i = 0; i < ndim; ++i) {
      for (int j = 0; j < ndim; ++j) r(i, j) = rng.normal();
    }
    if (numerical_rank(a) < mdim) continue;
    MatrixXd m = r.transpose() * r;
    m = 0.5 * (m + m.transpose()).eval();
    VectorXd y0 = VectorXd::Ones(2 * ndim + mdim);
    ProblemSetup out =
        finish_setup(ProblemInstance(QuadraticObjective(std::move(m), std::move(q)), a, b, sigma),
                     std::move(y0));
    out.resamples = k;
    out.seed_used = s;
    return out;
  }
  throw SolverError("could not draw a full-rank constraint matrix in 64 attempts");
}

ProblemSetup build_from_file(const std::filesystem::path& path, std::optional<double> sigma) {
  ProblemInstance file = read_problem_file(path);
  ProblemInstance p(file.objective(), file.constraint_matrix(), file.constraint_rhs(),
                    sigma.value_or(file.penalty()));
  VectorXd y0 = VectorXd::Ones(2 * p.dim_primal() + p.dim_dual());
  return finish_setup(std::move(p), std::move(y0));
}

const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::kToy:
      return "toy";
    case Scenario::kRandomQp:
      return "qp";
    case Scenario::kFile:
      return "file";
  }
  return "toy";
}

ExperimentSpec resolve_defaults(const ExperimentSpec& spec) {
  ExperimentSpec r = spec;
  const bool toy = r.scenario == Scenario::kToy;
  if (!r.eps_c) r.eps_c = toy ? 3.0 : 1.0;
  if (!r.eps_r) r.eps_r = toy ? 1.1 : 4.0;
  if (!r.theta) {
    DampingFamily g = r.gamma_kind == DampingFamily::Kind::kRationalA
                          ? DampingFamily::rational_a(r.alpha)
                      : r.gamma_kind == DampingFamily::Kind::kRationalB
                          ? DampingFamily::rational_b(r.alpha)
                          : DampingFamily::power_quotient(r.alpha);
    r.theta = default_theta(g);
  }
  if (!r.sigma && r.scenario != Scenario::kFile) r.sigma = 1.0;
  if (!r.fit_window) r.fit_window = FitWindow{50.0, 0.9 * r.tf};
  if (!(r.tf > r.t0)) throw ArgumentError("tf must exceed t0");
  if (r.samples < 2) throw ArgumentError("samples must be >= 2");
  if (r.scenario == Scenario::kFile && r.problem_file.empty()) {
    throw ArgumentError("problem file scenario needs a problem file path");
  }
  r.integrator.validate();
  return r;
}

CoefficientSchedule make_schedule(const ExperimentSpec& r) {
  DampingFamily gamma = DampingFamily::power_quotient(r.alpha);
  switch (r.gamma_kind) {
    case DampingFamily::Kind::kRationalA:
      gamma = DampingFamily::rational_a(r.alpha);
      break;
    case DampingFamily::Kind::kRationalB:
      gamma = DampingFamily::rational_b(r.alpha);
      break;
    case DampingFamily::Kind::kPowerQuotient:
      break;
    case DampingFamily::Kind::kCustom:
      throw ArgumentError("custom damping is not available from a run configuration");
  }
  ScalingFamily beta = r.beta_kind == ScalingFamily::Kind::kConstant
                           ? ScalingFamily::constant(1.0)
                           : ScalingFamily::power(r.beta_exp);
  TikhonovFamily eps = r.eps_kind == TikhonovFamily::Kind::kZero
                           ? TikhonovFamily::zero()
                           : TikhonovFamily::power_decay(r.eps_c.value(), r.eps_r.value());
  return CoefficientSchedule(r.theta.value(), gamma, beta, eps, r.t0);
}

ProblemSetup make_problem(const ExperimentSpec& r) {
  switch (r.scenario) {
    case Scenario::kToy:
      return build_toy(r.toy_m, r.toy_n, r.toy_e, r.sigma.value_or(1.0));
    case Scenario::kRandomQp:
      return build_random_qp(r.mdim, r.ndim, r.seed, r.sigma.value_or(1.0));
    case Scenario::kFile:
      return build_from_file(r.problem_file, r.sigma);
  }
  throw ArgumentError("unknown scenario");
}

RunReport run_experiment(const ExperimentSpec& spec) {
  const ExperimentSpec resolved = resolve_defaults(spec);
  const CoefficientSchedule schedule = make_schedule(resolved);
  const CoefficientSchedule effective =
      resolved.ablation ? schedule.with_eps(TikhonovFamily::zero()) : schedule;

  RunReport rep{resolved, audit_conditions(effective), make_problem(resolved), {}, {}, {}, {}, {},
                false,    {},                          0.0,                    0.0};
  if (!rep.spec.sigma) rep.spec.sigma = rep.setup.problem.penalty();
  if (!rep.conditions.all_pass() && !resolved.ablation && !resolved.allow_violation) {
    throw ArgumentError("schedule fails the condition audit; set allow_violation to run anyway");
  }

  const ProblemInstance& p = rep.setup.problem;
  PrimalDualField field(DynamicsConfig{p, schedule, !resolved.ablation});
  Field f = [&field](double t, const VectorXd& y, VectorXd& dy) { field(t, y, dy); };

  const auto started = std::chrono::steady_clock::now();
  IntegrationResult result = solve(f, resolved.t0, resolved.tf, rep.setup.initial_state,
                                   resolved.integrator,
                                   log_spaced(resolved.t0, resolved.tf, resolved.samples));
  rep.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  rep.trajectory = std::move(result.trajectory);
  rep.t_reached = result.t_reached;
  if (result.failure) {
    rep.failed = true;
    rep.failure = std::string(to_string(result.failure->kind())) + ": " + result.failure->what();
  }

  rep.metrics = compute_metrics(rep.trajectory, p, effective, rep.setup.saddle,
                                rep.setup.min_norm.primal);
  rep.decay = audit_decay_inequality(rep.trajectory, p, effective, rep.setup.saddle,
                                     rep.setup.min_norm);

  std::vector<double> times;
  for (const MetricSample& m : rep.metrics) times.push_back(m.t);
  auto fit = [&](const char* name, double MetricSample::*field_ptr) {
    std::vector<double> values;
    for (const MetricSample& m : rep.metrics) values.push_back(m.*field_ptr);
    NamedFit nf{name, std::nullopt, {}};
    try {
      nf.fit = fit_rate(times, values, *resolved.fit_window);
    } catch (const FitError& e) {
      nf.error = e.what();
    }
    rep.fits.push_back(std::move(nf));
  };
  fit("lag_gap", &MetricSample::lag_gap);
  fit("f_gap_abs", &MetricSample::f_gap_abs);
  fit("feas", &MetricSample::feas);
  fit("grad_err", &MetricSample::grad_err);
  fit("dist_min_norm", &MetricSample::dist_min_norm);
  fit("scaled_speed", &MetricSample::scaled_speed);
  fit("drift", &MetricSample::drift);

  const double theta = effective.theta();
  double i_feas = 0.0, i_gap = 0.0, i_grad = 0.0, i_speed = 0.0;
  auto integrands = [&](std::size_t i) {
    const MetricSample& m = rep.metrics[i];
    const ScheduleValues c = eval_schedule(effective, m.t);
    const double w = ((1.0 - 2.0 * theta) * c.beta - theta * m.t * c.dbeta) * m.t;
    const double speed = m.scaled_speed / m.t;
    return std::array<double, 4>{m.t * c.beta * m.feas * m.feas, w * m.lag_gap,
                                 w * m.grad_err * m.grad_err,
                                 (theta * m.t * c.gamma - theta - 1.0) * m.t * speed};
  };
  for (std::size_t i = 1; i < rep.metrics.size(); ++i) {
    const double dt = rep.metrics[i].t - rep.metrics[i - 1].t;
    const auto a = integrands(i - 1);
    const auto b = integrands(i);
    i_feas += 0.5 * dt * (a[0] + b[0]);
    i_gap += 0.5 * dt * (a[1] + b[1]);
    i_grad += 0.5 * dt * (a[2] + b[2]);
    i_speed += 0.5 * dt * (a[3] + b[3]);
  }
  rep.integral_estimates = {{"t_beta_feas_sq", i_feas},
                            {"weighted_lag_gap", i_gap},
                            {"weighted_grad_err_sq", i_grad},
                            {"weighted_speed", i_speed}};
  return rep;
}

std::vector<RunReport> run_sweep(const ExperimentSpec& base, const std::vector<double>& rs,
                                 int jobs) {
  std::vector<std::optional<RunReport>> slots(rs.size());
  std::vector<std::exception_ptr> errors(rs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rs.size(); i = next++) {
      try {
        ExperimentSpec s = base;
        s.eps_r = rs[i];
        slots[i] = run_experiment(s);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(rs.size(), static_cast<std::size_t>(std::max(1, jobs)));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < workers; ++k) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  std::vector<RunReport> out;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

std::string format_spec(const ExperimentSpec& r) {
  std::ostringstream os;
  os << "problem = " << to_string(r.scenario) << "\n";
  switch (r.scenario) {
    case Scenario::kToy:
      os << "toy.m = " << format_real(r.toy_m) << "\n"
         << "toy.n = " << format_real(r.toy_n) << "\n"
         << "toy.e = " << format_real(r.toy_e) << "\n";
      break;
    case Scenario::kRandomQp:
      os << "qp.mdim = " << r.mdim << "\n"
         << "qp.ndim = " << r.ndim << "\n"
         << "qp.seed = " << r.seed << "\n";
      break;
    case Scenario::kFile:
      os << "problem.file = " << r.problem_file << "\n";
      break;
  }
  os << "theta = " << (r.theta ? format_real(*r.theta) : "default") << "\n";
  os << "gamma.kind = " << gamma_kind_name(r.gamma_kind) << "\n";
  os << "gamma.alpha = " << format_real(r.alpha) << "\n";
  os << "beta.kind = " << (r.beta_kind == ScalingFamily::Kind::kConstant ? "constant" : "power")
     << "\n";
  os << "beta.exp = " << format_real(r.beta_exp) << "\n";
  os << "eps.kind = " << (r.eps_kind == TikhonovFamily::Kind::kZero ? "zero" : "power") << "\n";
  if (r.eps_c) os << "eps.c = " << format_real(*r.eps_c) << "\n";
  if (r.eps_r) os << "eps.r = " << format_real(*r.eps_r) << "\n";
  if (r.sigma) os << "sigma = " << format_real(*r.sigma) << "\n";
  os << "t0 = " << format_real(r.t0) << "\n";
  os << "tf = " << format_real(r.tf) << "\n";
  os << "rtol = " << format_real(r.integrator.rtol) << "\n";
  os << "atol = " << format_real(r.integrator.atol) << "\n";
  os << "h_min = " << format_real(r.integrator.h_min) << "\n";
  if (r.integrator.h_max) os << "h_max = " << format_real(*r.integrator.h_max) << "\n";
  if (r.integrator.h_init) os << "h_init = " << format_real(*r.integrator.h_init) << "\n";
  os << "max_steps = " << r.integrator.max_steps << "\n";
  os << "max_wall_seconds = " << format_real(r.integrator.max_wall_seconds) << "\n";
  os << "samples = " << r.samples << "\n";
  if (r.fit_window) {
    os << "fit.lo = " << format_real(r.fit_window->lo) << "\n";
    os << "fit.hi = " << format_real(r.fit_window->hi) << "\n";
  }
  os << "ablation = " << (r.ablation ? "true" : "false") << "\n";
  os << "allow_violation = " << (r.allow_violation ? "true" : "false") << "\n";
  return os.str();
}

std::string metrics_csv(const RunReport& r) {
  std::string out = "t,lag_gap,f_gap_abs,feas,grad_err,dist_min_norm,scaled_speed,drift,G,Gtilde\n";
  for (const MetricSample& m : r.metrics) {
    for (double v : {m.t, m.lag_gap, m.f_gap_abs, m.feas, m.grad_err, m.dist_min_norm,
                     m.scaled_speed, m.drift, m.G, m.Gtilde}) {
      out += format_real(v);
      out += ',';
    }
    out.back() = '\n';
  }
  return out;
}

std::string trajectory_csv(const RunReport& r) {
  const Index n = r.setup.problem.dim_primal();
  const Index m = r.setup.problem.dim_dual();
  std::string out = "t";
  for (Index i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
  for (Index i = 1; i <= m; ++i) out += ",lam" + std::to_string(i);
  for (Index i = 1; i <= n; ++i) out += ",v" + std::to_string(i);
  out += '\n';
  for (std::size_t k = 0; k < r.trajectory.times.size(); ++k) {
    out += format_real(r.trajectory.times[k]);
    for (Index i = 0; i < r.trajectory.states[k].size(); ++i) {
      out += ',';
      out += format_real(r.trajectory.states[k][i]);
    }
    out += '\n';
  }
  return out;
}

std::string report_text(const RunReport& r) {
  std::ostringstream os;
  os << "# effective configuration\n" << format_spec(r.spec);
  os << "\n# status\n";
  os << "status = " << (r.failed ? "FAILED" : "ok") << "\n";
  os << "t_reached = " << format_real(r.t_reached) << "\n";
  if (r.failed) os << "failure = " << r.failure << "\n";
  os << "accepted_steps = " << r.trajectory.accepted << "\n";
  os << "rejected_steps = " << r.trajectory.rejected << "\n";
  os << "field_evaluations = " << r.trajectory.evaluations << "\n";
  os << "conditions = " << (r.conditions.all_pass() ? "pass" : "FAIL") << "\n";

  os << "\n# references\n";
  os << "x_star = " << join(r.setup.saddle.primal) << "\n";
  os << "lambda_star = " << join(r.setup.saddle.dual) << "\n";
  os << "kkt_least_squares = " << (r.setup.saddle.from_least_squares ? "yes" : "no") << "\n";
  os << "x_min_norm = " << join(r.setup.min_norm.primal) << "\n";
  os << "lambda_min_norm = " << join(r.setup.min_norm.dual) << "\n";
  os << "lambda_min_norm_residual = " << format_real(r.setup.min_norm.dual_residual) << "\n";
  os << "min_norm_approximate = " << (r.setup.min_norm.approximate ? "yes" : "no") << "\n";
  if (r.spec.scenario == Scenario::kRandomQp) {
    os << "qp.resamples = " << r.setup.resamples << "\n";
    os << "qp.seed_used = " << r.setup.seed_used << "\n";
  }

  if (r.decay) {
    os << "\n# decay inequality t^2 Gtilde(t) <= t0^2 Gtilde(t0) + ||x*||^2/(2 theta) int s beta eps\n";
    os << "decay.certified = " << (r.decay->certified ? "yes" : "no (conditions fail)") << "\n";
    os << "decay.worst_violation = " << format_real(r.decay->worst_violation) << "\n";
    os << "decay.worst_time = " << format_real(r.decay->worst_time) << "\n";
  }

  os << "\n# log-log rate fits over [" << format_real(r.spec.fit_window->lo) << ", "
     << format_real(r.spec.fit_window->hi) << "]\n";
  for (const NamedFit& f : r.fits) {
    if (f.fit) {
      os << "fit." << f.quantity << " = slope " << format_real(f.fit->slope) << ", r2 "
         << format_real(f.fit->r_squared) << ", points " << f.fit->n_points << "\n";
    } else {
      os << "fit." << f.quantity << " = unavailable (" << f.error << ")\n";
    }
  }

  os << "\n# integrals accumulated over the sampled horizon only; finiteness of the\n"
        "# improper integrals cannot be established numerically\n";
  for (const auto& [name, value] : r.integral_estimates) {
    os << "integral." << name << " = " << format_real(value) << "\n";
  }

  if (!r.metrics.empty()) {
    const MetricSample& m = r.metrics.back();
    os << "\n# final sample\n";
    os << "final.t = " << format_real(m.t) << "\n";
    os << "final.lag_gap = " << format_real(m.lag_gap) << "\n";
    os << "final.f_gap_abs = " << format_real(m.f_gap_abs) << "\n";
    os << "final.feas = " << format_real(m.feas) << "\n";
    os << "final.grad_err = " << format_real(m.grad_err) << "\n";
    os << "final.dist_min_norm = " << format_real(m.dist_min_norm) << "\n";
    os << "final.scaled_speed = " << format_real(m.scaled_speed) << "\n";
    os << "final.drift = " << format_real(m.drift) << "\n";
  }
  return os.str();
}

void write_report(const RunReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string trajectory = trajectory_csv(r);
  const std::string metrics = metrics_csv(r);
  const std::string report = report_text(r);
  const std::string conditions = format_condition_report(r.conditions);
  write_file_atomic(dir / "trajectory.csv", trajectory);
  write_file_atomic(dir / "metrics.csv", metrics);
  write_file_atomic(dir / "conditions.txt", conditions);
  write_file_atomic(dir / "report.txt", report);
}

}  // namespace mixdyn

#include "mixdyn/cli.hpp"

#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mixdyn/errors.hpp"

namespace mixdyn::cli {

namespace {

DampingFamily::Kind parse_gamma_kind(const std::string& key, const std::string& v) {
  if (v == "power") return DampingFamily::Kind::kPowerQuotient;
  if (v == "rationalA") return DampingFamily::Kind::kRationalA;
  if (v == "rationalB") return DampingFamily::Kind::kRationalB;
  throw ConfigError(key, "expected power, rationalA or rationalB, got '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  const std::int64_t x = parse_integer(key, v);
  if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(key, "value out of range");
  return static_cast<int>(x);
}

}  // namespace

void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  ExperimentSpec& s = cfg.spec;
  IntegratorSettings& ig = s.integrator;
  if (key == "problem") {
    if (value == "toy") s.scenario = Scenario::kToy;
    else if (value == "qp") s.scenario = Scenario::kRandomQp;
    else if (value == "file") s.scenario = Scenario::kFile;
    else throw ConfigError(key, "expected toy, qp or file, got '" + value + "'");
  } else if (key == "problem.file") {
    s.problem_file = value;
  } else if (key == "toy.m") {
    s.toy_m = parse_real(key, value);
  } else if (key == "toy.n") {
    s.toy_n = parse_real(key, value);
  } else if (key == "toy.e") {
    s.toy_e = parse_real(key, value);
  } else if (key == "qp.mdim") {
    s.mdim = parse_int(key, value);
  } else if (key == "qp.ndim") {
    s.ndim = parse_int(key, value);
  } else if (key == "qp.seed") {
    s.seed = parse_unsigned(key, value);
  } else if (key == "theta") {
    if (value == "default") s.theta.reset();
    else s.theta = parse_real(key, value);
  } else if (key == "gamma.kind") {
    s.gamma_kind = parse_gamma_kind(key, value);
  } else if (key == "gamma.alpha") {
    s.alpha = parse_real(key, value);
  } else if (key == "beta.kind") {
    if (value == "power") s.beta_kind = ScalingFamily::Kind::kPower;
    else if (value == "constant") s.beta_kind = ScalingFamily::Kind::kConstant;
    else throw ConfigError(key, "expected power or constant, got '" + value + "'");
  } else if (key == "beta.exp") {
    s.beta_exp = parse_real(key, value);
  } else if (key == "eps.kind") {
    if (value == "power") s.eps_kind = TikhonovFamily::Kind::kPowerDecay;
    else if (value == "zero") s.eps_kind = TikhonovFamily::Kind::kZero;
    else throw ConfigError(key, "expected power or zero, got '" + value + "'");
  } else if (key == "eps.c") {
    s.eps_c = parse_real(key, value);
  } else if (key == "eps.r") {
    cfg.r_values = parse_real_list(key, value);
    if (cfg.r_values.empty()) throw ConfigError(key, "expected at least one value");
    s.eps_r = cfg.r_values.front();
  } else if (key == "sigma") {
    s.sigma = parse_real(key, value);
  } else if (key == "t0") {
    s.t0 = parse_real(key, value);
  } else if (key == "tf") {
    s.tf = parse_real(key, value);
  } else if (key == "rtol") {
    ig.rtol = parse_real(key, value);
  } else if (key == "atol") {
    ig.atol = parse_real(key, value);
  } else if (key == "h_min") {
    ig.h_min = parse_real(key, value);
  } else if (key == "h_max") {
    ig.h_max = parse_real(key, value);
  } else if (key == "h_init") {
    ig.h_init = parse_real(key, value);
  } else if (key == "max_steps") {
    ig.max_steps = parse_integer(key, value);
  } else if (key == "max_wall_seconds") {
    ig.max_wall_seconds = parse_real(key, value);
  } else if (key == "samples") {
    s.samples = parse_int(key, value);
  } else if (key == "fit.lo" || key == "fit.hi") {
    FitWindow w = s.fit_window.value_or(FitWindow{50.0, 0.9 * s.tf});
    (key == "fit.lo" ? w.lo : w.hi) = parse_real(key, value);
    s.fit_window = w;
  } else if (key == "ablation") {
    s.ablation = parse_bool(key, value);
  } else if (key == "allow_violation") {
    s.allow_violation = parse_bool(key, value);
  } else if (key == "out") {
    cfg.out_dir = value;
  } else if (key == "jobs") {
    cfg.jobs = parse_int(key, value);
    if (cfg.jobs < 1) throw ConfigError(key, "must be >= 1");
  } else if (key == "verbose") {
    cfg.verbosity = parse_int(key, value);
  } else {
    throw ConfigError(key, "unknown configuration key");
  }
}

RunConfig config_from_map(const KeyValueMap& kv) {
  RunConfig cfg;
  // tf first so that a later fit window default sees it.
  if (const auto it = kv.find("tf"); it != kv.end()) apply_config_key(cfg, it->first, it->second);
  for (const auto& [key, value] : kv) {
    if (key != "tf") apply_config_key(cfg, key, value);
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  return config_from_map(read_key_value_file(path));
}

namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
  const char* default_text;
};

// Flags that map one-to-one onto configuration keys.
constexpr FlagSpec kValueFlags[] = {
    {"--problem", "problem", "Scenario: toy, qp or file", "toy"},
    {"--problem-file", "problem.file", "Problem file for --problem file", ""},
    {"--m", "toy.m", "Toy coefficient m", "1"},
    {"--n", "toy.n", "Toy coefficient n", "1"},
    {"--e", "toy.e", "Toy coefficient e", "1"},
    {"--mdim", "qp.mdim", "Random QP: number of constraints", "30"},
    {"--ndim", "qp.ndim", "Random QP: number of variables", "50"},
    {"--seed", "qp.seed", "Random QP: generator seed", "1"},
    {"--gamma-kind", "gamma.kind", "Damping family: power, rationalA or rationalB", "power"},
    {"--alpha", "gamma.alpha", "Damping parameter alpha", "13"},
    {"--beta-kind", "beta.kind", "Scaling family: power or constant", "power"},
    {"--beta-exp", "beta.exp", "Scaling exponent, beta(t) = t^exp", "1"},
    {"--eps-kind", "eps.kind", "Regularization family: power or zero", "power"},
    {"--eps-c", "eps.c", "Regularization coefficient c in c/t^r", "3 (toy), 1 (otherwise)"},
    {"--r", "eps.r", "Regularization exponent r; a comma list runs a sweep",
     "1.1 (toy), 4 (otherwise)"},
    {"--theta", "theta", "theta > 0", "1/(alpha-1); 1/(2 alpha-2) for rationalA"},
    {"--sigma", "sigma", "Augmented Lagrangian penalty", "1"},
    {"--t0", "t0", "Start time", "1"},
    {"--tf", "tf", "End time", "1000"},
    {"--rtol", "rtol", "Relative tolerance", "1e-06"},
    {"--atol", "atol", "Absolute tolerance", "1e-09"},
    {"--h-min", "h_min", "Smallest step size", "1e-12"},
    {"--h-max", "h_max", "Largest step size", "tf - t0"},
    {"--h-init", "h_init", "Initial step size", "1e-2 (tf-t0)/max(1, |F(t0,y0)|)"},
    {"--max-steps", "max_steps", "Budget of attempted steps", "10000000"},
    {"--max-wall", "max_wall_seconds", "Wall-clock budget in seconds, 0 for none", "0"},
    {"--samples", "samples", "Number of log-spaced output samples", "400"},
    {"--fit-lo", "fit.lo", "Lower end of the rate-fit window", "50"},
    {"--fit-hi", "fit.hi", "Upper end of the rate-fit window", "0.9 tf"},
};

std::string summarize(const RunReport& r) {
  std::ostringstream os;
  os << "status: " << (r.failed ? "FAILED" : "ok") << ", t_reached " << format_real(r.t_reached)
     << ", accepted steps " << r.trajectory.accepted << "\n";
  for (const NamedFit& f : r.fits) {
    if (f.fit) os << "  slope " << f.quantity << " = " << format_real(f.fit->slope) << "\n";
  }
  if (!r.metrics.empty()) {
    os << "  final lag_gap = " << format_real(r.metrics.back().lag_gap)
       << ", feas = " << format_real(r.metrics.back().feas)
       << ", dist_min_norm = " << format_real(r.metrics.back().dist_min_norm) << "\n";
  }
  return os.str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Integrate the mixed-order primal-dual system with Tikhonov regularization and "
               "audit its convergence.",
               "mixdyn"};
  app.get_formatter()->column_width(34);

  std::string config_path;
  std::string out_dir;
  std::string jobs;
  bool ablation = false;
  bool allow_violation = false;
  int verbose = 0;
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::Option*, std::string>> bound;

  app.add_option("--config", config_path, "Configuration file of dotted key = value lines");
  app.add_option("--out", out_dir, "Output directory")->default_str("mixdyn_out");
  for (const FlagSpec& f : kValueFlags) {
    CLI::Option* opt = app.add_option(f.flag, values[f.key], f.help);
    if (f.default_text[0] != '\0') opt->default_str(f.default_text);
    bound.emplace_back(opt, f.key);
  }
  app.add_flag("--ablation", ablation, "Drop the regularization term from the dynamics");
  app.add_flag("--allow-violation", allow_violation,
               "Run even when the schedule fails the condition audit");
  app.add_option("--jobs", jobs, "Worker threads for an r sweep")->default_str("1");
  app.add_flag("-v,--verbose", verbose, "Print the condition audit and the full report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  RunConfig cfg;
  try {
    KeyValueMap kv;
    if (!config_path.empty()) kv = read_key_value_file(config_path);
    for (const auto& [opt, key] : bound) {
      if (opt->count() > 0) kv[key] = values[key];
    }
    if (!out_dir.empty()) kv["out"] = out_dir;
    if (!jobs.empty()) kv["jobs"] = jobs;
    if (ablation) kv["ablation"] = "true";
    if (allow_violation) kv["allow_violation"] = "true";
    cfg = config_from_map(kv);
    cfg.verbosity = std::max(cfg.verbosity, verbose);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  std::vector<RunReport> reports;
  std::vector<std::filesystem::path> dirs;
  try {
    if (cfg.r_values.size() > 1) {
      reports = run_sweep(cfg.spec, cfg.r_values, cfg.jobs);
      for (double r : cfg.r_values) dirs.push_back(cfg.out_dir / ("r_" + format_real(r)));
    } else {
      reports.push_back(run_experiment(cfg.spec));
      dirs.push_back(cfg.out_dir);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  int code = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    try {
      write_report(reports[i], dirs[i]);
    } catch (const std::exception& e) {
      err << "error: writing " << dirs[i].string() << ": " << e.what() << "\n";
      return 1;
    }
    out << dirs[i].string() << ": " << summarize(reports[i]);
    if (cfg.verbosity > 0) {
      out << format_condition_report(reports[i].conditions) << report_text(reports[i]);
    }
    if (reports[i].failed) {
      err << "error: integration aborted at t = " << format_real(reports[i].t_reached) << " ("
          << reports[i].failure << ")\n";
      code = 2;
    }
  }
  return code;
}

}  // namespace mixdyn::cli

#pragma once

// Command-line front end: `spca`, `classify`, `compare` and `check`.
// Exit codes: 0 success, 1 usage/configuration error, 2 runtime failure.

#include "marsadmm/experiment.hpp"
#include "selfcheck.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace marsadmm::tools {

enum ExitCode : int { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

/// Values given on the command line; unset options leave the config alone.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::int64_t> seeds;
  std::optional<std::uint64_t> first_seed;
  std::optional<std::string> out;
  std::optional<unsigned> jobs;
  std::optional<std::int64_t> max_iters;
  std::optional<double> obj_tol;
  std::optional<std::int64_t> max_sfo;
  std::optional<Index> batch;
  std::optional<double> c_rho, c_eta, c_alpha, c_beta, beta1, eta0;
  std::optional<std::string> solver;
  std::optional<std::int64_t> residual_every;
  bool full_batch = false;
  bool no_wall_time = false;

  std::optional<Index> n, m, p, num_samples;
  std::optional<double> mu, sigma2;
  std::optional<std::string> data;
  std::optional<std::string> problem;
};

namespace detail {

inline void add_run_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON config file (flags take precedence)");
  app->add_option("--seeds", o.seeds, "number of seeds to run")->check(CLI::PositiveNumber);
  app->add_option("--first-seed", o.first_seed, "first seed of the range (default 1)");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--jobs", o.jobs, "worker threads (default: hardware concurrency)");
  app->add_option("--max-iters", o.max_iters, "iteration cap (default 1500)");
  app->add_option("--obj-tol", o.obj_tol, "objective-change tolerance (default 1e-6; inf disables)");
  app->add_option("--max-sfo", o.max_sfo, "oracle-call budget per run (0: none)");
  app->add_option("--batch", o.batch, "batch size (default 50)");
  app->add_flag("--full-batch", o.full_batch, "use every sample at every iteration");
  app->add_option("--c-rho", o.c_rho, "penalty schedule constant");
  app->add_option("--c-eta", o.c_eta, "primal step constant");
  app->add_option("--c-alpha", o.c_alpha, "momentum schedule constant");
  app->add_option("--c-beta", o.c_beta, "dual step cap constant");
  app->add_option("--beta1", o.beta1, "initial dual stepsize");
  app->add_option("--eta0", o.eta0, "subgradient baseline initial step");
  app->add_option("--residual-every", o.residual_every, "diagnostics cadence");
  app->add_flag("--no-wall-time", o.no_wall_time, "record wall time as 0 (byte-identical traces)");
  app->add_option("--mu", o.mu, "l1 weight");
  app->add_option("--data", o.data, "LIBSVM data file instead of synthetic data");
}

inline void add_spca_options(CLI::App* app, Overrides& o) {
  app->add_option("--n", o.n, "SPCA ambient dimension");
  app->add_option("--m", o.m, "SPCA sample count");
  app->add_option("--p", o.p, "number of components");
}

inline void add_classify_options(CLI::App* app, Overrides& o, bool share_m) {
  if (!share_m) app->add_option("--m", o.m, "feature dimension");
  app->add_option("--N", o.num_samples, "sample count");
  app->add_option("--sigma2", o.sigma2, "label noise variance");
}

/// defaults < config file < flags.
inline ExperimentConfig resolve(const Overrides& o, ProblemKind problem) {
  ExperimentConfig c;
  if (o.config) c = load_config_file(*o.config, c);
  c.problem = problem;

  if (o.seeds || o.first_seed) {
    const std::int64_t count = o.seeds.value_or(static_cast<std::int64_t>(c.seeds.size()));
    const std::uint64_t first = o.first_seed.value_or(o.seeds ? 1 : c.seeds.front());
    c.seeds.clear();
    for (std::int64_t i = 0; i < count; ++i) c.seeds.push_back(first + std::uint64_t(i));
  }
  if (o.out) c.output_dir = *o.out;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.max_iters) c.max_iters = *o.max_iters;
  if (o.obj_tol) c.obj_tol = *o.obj_tol;
  if (o.max_sfo) c.max_sfo = *o.max_sfo;
  if (o.batch) c.admm.batch_size = c.subgrad.batch_size = *o.batch;
  if (o.full_batch) c.admm.full_batch = c.subgrad.full_batch = true;
  if (o.c_rho) c.admm.c_rho = *o.c_rho;
  if (o.c_eta) c.admm.c_eta = *o.c_eta;
  if (o.c_alpha) c.admm.c_alpha = *o.c_alpha;
  if (o.c_beta) c.admm.c_beta = *o.c_beta;
  if (o.beta1) c.admm.beta1 = *o.beta1;
  if (o.eta0) c.subgrad.eta0 = *o.eta0;
  if (o.residual_every) {
    c.admm.residual_check_every = c.subgrad.residual_check_every = *o.residual_every;
  }
  if (o.no_wall_time) c.admm.record_wall_time = c.subgrad.record_wall_time = false;
  if (o.solver) {
    if (*o.solver == "mars_admm") c.solver = SolverKind::MarsAdmm;
    else if (*o.solver == "rsubgrad") c.solver = SolverKind::RSubgrad;
    else throw std::invalid_argument("unknown solver '" + *o.solver + "'");
  }
  if (problem == ProblemKind::Spca) {
    if (o.n) c.spca.n = *o.n;
    if (o.m) c.spca.m = *o.m;
    if (o.p) c.spca.p = *o.p;
    if (o.mu) c.spca.mu = *o.mu;
    if (o.data) c.spca.data_file = *o.data;
  } else {
    if (o.m) c.classify.m = *o.m;
    if (o.num_samples) c.classify.num_samples = *o.num_samples;
    if (o.mu) c.classify.mu = *o.mu;
    if (o.sigma2) c.classify.sigma2 = *o.sigma2;
    if (o.data) c.classify.data_file = *o.data;
  }
  return c;
}

inline std::string joined_command(int argc, const char* const* argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

inline int run_command(const ExperimentConfig& c, bool compare,
                       const std::string& command, std::ostream& out,
                       std::ostream& err) {
  const auto warnings = validate(c);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  const auto outcomes = run_experiment(c, compare);
  std::vector<std::string> all = warnings;
  for (const auto& o : outcomes) {
    for (const auto& w : o.warnings) {
      err << "warning (seed " << o.seed << "): " << w << '\n';
      all.push_back("seed " + std::to_string(o.seed) + ": " + w);
    }
  }
  write_outputs(c, command, outcomes, all);
  for (const auto& row : summarize_outcomes(outcomes)) {
    out << row.solver << ": runs=" << row.runs
        << " objective=" << format_double(row.objective_mean) << " +- "
        << format_double(row.objective_std)
        << " sfo=" << format_double(row.sfo_mean)
        << " iters=" << format_double(row.iters_mean) << '\n';
  }
  out << "wrote " << outcomes.size() << " traces to " << c.output_dir << '\n';
  return kOk;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out,
                    std::ostream& err) {
  CLI::App app{"Riemannian stochastic ADMM benchmarks", "marsadmm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MARSADMM_VERSION));

  Overrides spca_o, clf_o, cmp_o;
  std::uint64_t check_seed = 1;

  auto* spca = app.add_subcommand("spca", "sparse PCA on the Stiefel manifold");
  detail::add_run_options(spca, spca_o);
  detail::add_spca_options(spca, spca_o);
  spca->add_option("--solver", spca_o.solver, "mars_admm or rsubgrad")
      ->check(CLI::IsMember({"mars_admm", "rsubgrad"}));

  auto* clf = app.add_subcommand("classify", "l1-regularized classifier on the sphere");
  detail::add_run_options(clf, clf_o);
  detail::add_classify_options(clf, clf_o, false);
  clf->add_option("--solver", clf_o.solver, "mars_admm or rsubgrad")
      ->check(CLI::IsMember({"mars_admm", "rsubgrad"}));

  auto* cmp = app.add_subcommand(
      "compare", "MARS-ADMM, then the subgradient baseline down to its objective");
  detail::add_run_options(cmp, cmp_o);
  detail::add_spca_options(cmp, cmp_o);
  detail::add_classify_options(cmp, cmp_o, true);
  cmp->add_option("--problem", cmp_o.problem, "spca or classify")
      ->required()
      ->check(CLI::IsMember({"spca", "classify"}));

  auto* chk = app.add_subcommand("check", "run the built-in invariant suite");
  chk->add_option("--seed", check_seed, "seed for random test points");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << MARSADMM_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kConfigError;
  }

  if (chk->parsed()) {
    const auto results = run_self_checks(check_seed);
    bool ok = true;
    for (const auto& r : results) {
      out << (r.ok ? "PASS " : "FAIL ") << r.name;
      if (!r.detail.empty()) out << " (" << r.detail << ')';
      out << '\n';
      ok = ok && r.ok;
    }
    return ok ? kOk : kRuntimeError;
  }

  ExperimentConfig cfg;
  bool compare = false;
  try {
    if (spca->parsed()) {
      cfg = detail::resolve(spca_o, ProblemKind::Spca);
    } else if (clf->parsed()) {
      cfg = detail::resolve(clf_o, ProblemKind::Classify);
    } else {
      compare = true;
      cfg = detail::resolve(cmp_o, *cmp_o.problem == "spca" ? ProblemKind::Spca
                                                            : ProblemKind::Classify);
    }
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    return detail::run_command(cfg, compare, detail::joined_command(argc, argv),
                               out, err);
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kRuntimeError;
}

}  // namespace marsadmm::tools

#pragma once

// Experiment driver behind the command-line front end: configuration (with a
// JSON mirror), per-seed execution in a worker pool, trace/summary output.

#include "marsadmm/baselines.hpp"
#include "marsadmm/data_io.hpp"
#include "marsadmm/problem.hpp"
#include "marsadmm/solver.hpp"
#include "marsadmm/trace.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#ifndef MARSADMM_VERSION
#define MARSADMM_VERSION "unknown"
#endif

namespace marsadmm {

enum class ProblemKind { Spca, Classify };
enum class SolverKind { MarsAdmm, RSubgrad };

inline std::string to_string(ProblemKind k) {
  return k == ProblemKind::Spca ? "spca" : "classify";
}
inline std::string to_string(SolverKind k) {
  return k == SolverKind::MarsAdmm ? "mars_admm" : "rsubgrad";
}

struct SpcaSettings {
  Index n = 50;
  Index m = 500;  // number of samples
  Index p = 5;
  double mu = 0.4;
  std::string data_file;  // empty: synthetic
};

struct ClassifySettings {
  Index m = 10;  // feature dimension
  Index num_samples = 50000;
  double mu = 0.25;
  double sigma2 = 1.0;
  std::string data_file;  // empty: synthetic
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::Spca;
  SpcaSettings spca;
  ClassifySettings classify;
  SolverKind solver = SolverKind::MarsAdmm;
  SolverConfig admm;
  SubgradConfig subgrad;
  std::int64_t max_iters = 1500;
  double obj_tol = 1e-6;
  std::int64_t max_sfo = 0;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "results";
  unsigned jobs = 0;  // 0: hardware concurrency
};

/// Throws std::invalid_argument on any inconsistency; returns solver warnings.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
  if (c.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (c.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (c.max_sfo < 0) throw std::invalid_argument("max_sfo must be >= 0");
  if (std::isnan(c.obj_tol)) throw std::invalid_argument("obj_tol is NaN");
  if (c.output_dir.empty()) throw std::invalid_argument("output_dir is empty");
  if (c.problem == ProblemKind::Spca) {
    const auto& s = c.spca;
    if (!(s.mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
    if (s.p < 1) throw std::invalid_argument("p must be >= 1");
    if (s.data_file.empty() && (s.n < 2 || s.m < 2)) {
      throw std::invalid_argument("spca needs n >= 2 and m >= 2");
    }
    if (s.data_file.empty() && s.n < s.p) {
      throw std::invalid_argument("spca needs n >= p");
    }
  } else {
    const auto& s = c.classify;
    if (!(s.mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
    if (!(s.sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be >= 0");
    if (s.data_file.empty() && (s.m < 2 || s.num_samples < 1)) {
      throw std::invalid_argument("classify needs m >= 2 and N >= 1");
    }
  }
  auto w = validate(c.admm);
  validate(c.subgrad);
  return w;
}

// ---------------------------------------------------------------------------
// JSON mirror

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["problem"] = to_string(c.problem);
  j["spca"] = {{"n", c.spca.n}, {"m", c.spca.m}, {"p", c.spca.p},
               {"mu", c.spca.mu},
               {"data", c.spca.data_file.empty() ? "synthetic" : c.spca.data_file}};
  j["classify"] = {{"m", c.classify.m}, {"N", c.classify.num_samples},
                   {"mu", c.classify.mu}, {"sigma2", c.classify.sigma2},
                   {"data", c.classify.data_file.empty() ? "synthetic"
                                                         : c.classify.data_file}};
  j["solver"] = to_string(c.solver);
  j["mars_admm"] = {{"c_rho", c.admm.c_rho},
                    {"c_eta", c.admm.c_eta},
                    {"c_alpha", c.admm.c_alpha},
                    {"c_beta", c.admm.c_beta},
                    {"beta1", c.admm.beta1},
                    {"batch", c.admm.batch_size},
                    {"full_batch", c.admm.full_batch},
                    {"residual_check_every", c.admm.residual_check_every}};
  j["rsubgrad"] = {{"eta0", c.subgrad.eta0},
                   {"batch", c.subgrad.batch_size},
                   {"residual_check_every", c.subgrad.residual_check_every}};
  j["max_iters"] = c.max_iters;
  j["obj_tol"] = std::isfinite(c.obj_tol) ? nlohmann::json(c.obj_tol)
                                          : nlohmann::json("inf");
  j["max_sfo"] = c.max_sfo;
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["jobs"] = c.jobs;
  j["record_wall_time"] = c.admm.record_wall_time;
  return j;
}

namespace detail {

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline std::string data_field(const nlohmann::json& j) {
  if (!j.contains("data")) return {};
  const auto s = j.at("data").get<std::string>();
  return s == "synthetic" ? std::string{} : s;
}

}  // namespace detail

/// Overlays the keys present in `j` onto `c`. Unknown keys are rejected.
inline void apply_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const std::vector<std::string> known = {
      "problem", "spca",    "classify", "solver", "mars_admm", "rsubgrad",
      "max_iters", "obj_tol", "max_sfo", "seeds",  "output_dir", "jobs",
      "record_wall_time"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw std::invalid_argument("unknown config key '" + it.key() + "'");
    }
  }
  try {
    if (j.contains("problem")) {
      const auto p = j.at("problem").get<std::string>();
      if (p == "spca") c.problem = ProblemKind::Spca;
      else if (p == "classify") c.problem = ProblemKind::Classify;
      else throw std::invalid_argument("unknown problem '" + p + "'");
    }
    if (j.contains("spca")) {
      const auto& s = j.at("spca");
      detail::read_if(s, "n", c.spca.n);
      detail::read_if(s, "m", c.spca.m);
      detail::read_if(s, "p", c.spca.p);
      detail::read_if(s, "mu", c.spca.mu);
      if (s.contains("data")) c.spca.data_file = detail::data_field(s);
    }
    if (j.contains("classify")) {
      const auto& s = j.at("classify");
      detail::read_if(s, "m", c.classify.m);
      detail::read_if(s, "N", c.classify.num_samples);
      detail::read_if(s, "mu", c.classify.mu);
      detail::read_if(s, "sigma2", c.classify.sigma2);
      if (s.contains("data")) c.classify.data_file = detail::data_field(s);
    }
    if (j.contains("solver")) {
      const auto s = j.at("solver").get<std::string>();
      if (s == "mars_admm") c.solver = SolverKind::MarsAdmm;
      else if (s == "rsubgrad") c.solver = SolverKind::RSubgrad;
      else throw std::invalid_argument("unknown solver '" + s + "'");
    }
    if (j.contains("mars_admm")) {
      const auto& s = j.at("mars_admm");
      detail::read_if(s, "c_rho", c.admm.c_rho);
      detail::read_if(s, "c_eta", c.admm.c_eta);
      detail::read_if(s, "c_alpha", c.admm.c_alpha);
      detail::read_if(s, "c_beta", c.admm.c_beta);
      detail::read_if(s, "beta1", c.admm.beta1);
      detail::read_if(s, "batch", c.admm.batch_size);
      detail::read_if(s, "full_batch", c.admm.full_batch);
      detail::read_if(s, "residual_check_every", c.admm.residual_check_every);
    }
    if (j.contains("rsubgrad")) {
      const auto& s = j.at("rsubgrad");
      detail::read_if(s, "eta0", c.subgrad.eta0);
      detail::read_if(s, "batch", c.subgrad.batch_size);
      detail::read_if(s, "residual_check_every", c.subgrad.residual_check_every);
    }
    detail::read_if(j, "max_iters", c.max_iters);
    if (j.contains("obj_tol")) {
      const auto& t = j.at("obj_tol");
      c.obj_tol = t.is_string() && t.get<std::string>() == "inf"
                      ? INFINITY
                      : t.get<double>();
    }
    detail::read_if(j, "max_sfo", c.max_sfo);
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      if (s.is_number_integer()) {
        const auto count = s.get<std::int64_t>();
        if (count < 1) throw std::invalid_argument("seed count must be >= 1");
        c.seeds.clear();
        for (std::int64_t i = 1; i <= count; ++i) c.seeds.push_back(std::uint64_t(i));
      } else {
        c.seeds = s.get<std::vector<std::uint64_t>>();
      }
    }
    detail::read_if(j, "output_dir", c.output_dir);
    detail::read_if(j, "jobs", c.jobs);
    if (j.contains("record_wall_time")) {
      const bool w = j.at("record_wall_time").get<bool>();
      c.admm.record_wall_time = w;
      c.subgrad.record_wall_time = w;
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config type error: ") + e.what());
  }
}

inline ExperimentConfig load_config_file(const std::string& path,
                                         ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  apply_json(j, base);
  return base;
}

// ---------------------------------------------------------------------------
// Execution

struct SeedOutcome {
  std::uint64_t seed = 0;
  SolverKind solver = SolverKind::MarsAdmm;
  Trace trace;
  std::string stop_reason;
  std::vector<std::string> warnings;
};

/// Dataset for one seed: synthetic data is regenerated from the seed's
/// "data" sub-stream; file data is shared across seeds.
inline Dataset make_dataset(const ExperimentConfig& c, std::uint64_t seed,
                            const std::optional<Dataset>& file_data) {
  if (file_data) return *file_data;
  const std::uint64_t ds = derive_seed(seed, "data");
  if (c.problem == ProblemKind::Spca) return gen_spca_data(c.spca.n, c.spca.m, ds);
  return gen_classifier_data(c.classify.m, c.classify.num_samples,
                             c.classify.sigma2, ds);
}

inline std::optional<Dataset> load_file_data(const ExperimentConfig& c) {
  const std::string& path = c.problem == ProblemKind::Spca ? c.spca.data_file
                                                           : c.classify.data_file;
  if (path.empty()) return std::nullopt;
  Dataset d = load_libsvm(path);
  validate(d);
  return d;
}

/// Calls f(problem) with the concrete problem type for this experiment.
template <class F>
decltype(auto) with_problem(const ExperimentConfig& c, const Dataset& d, F&& f) {
  if (c.problem == ProblemKind::Spca) {
    const auto p = make_spca(d.spca_matrix(), c.spca.mu, c.spca.p);
    return f(p);
  }
  if (!d.labels) throw std::invalid_argument("classification data needs labels");
  const auto p = make_sphere_classifier(d.features, *d.labels, c.classify.mu);
  return f(p);
}

inline StopCriteria stop_criteria(const ExperimentConfig& c) {
  StopCriteria s;
  s.max_iters = c.max_iters;
  s.obj_tol = c.obj_tol;
  s.max_sfo = c.max_sfo;
  return s;
}

template <class Problem>
SeedOutcome run_admm_seed(const ExperimentConfig& c, const Problem& p,
                          std::uint64_t seed, const StopCriteria& stop) {
  SolverConfig sc = c.admm;
  sc.seed = derive_seed(seed, "solver");
  sc.max_iters = stop.max_iters;
  RunResult r = run(sc, p, stop);
  return {seed, SolverKind::MarsAdmm, std::move(r.trace), r.stop_reason,
          std::move(r.warnings)};
}

template <class Problem>
SeedOutcome run_subgrad_seed(const ExperimentConfig& c, const Problem& p,
                             std::uint64_t seed, const StopCriteria& stop) {
  SubgradConfig sc = c.subgrad;
  sc.seed = derive_seed(seed, "solver");
  sc.max_iters = stop.max_iters;
  SubgradResult r = run_subgrad(sc, p, stop);
  return {seed, SolverKind::RSubgrad, std::move(r.trace), r.stop_reason, {}};
}

/// Single-solver runs (compare = false) or the comparison protocol: ADMM
/// first with the objective-change rule, then the baseline from the same
/// initialization until it reaches F_ADMM or the iteration cap.
inline std::vector<SeedOutcome> run_seed(const ExperimentConfig& c,
                                         std::uint64_t seed, bool compare,
                                         const std::optional<Dataset>& file_data) {
  const Dataset d = make_dataset(c, seed, file_data);
  return with_problem(c, d, [&](const auto& p) {
    std::vector<SeedOutcome> out;
    const StopCriteria stop = stop_criteria(c);
    if (!compare) {
      out.push_back(c.solver == SolverKind::MarsAdmm
                        ? run_admm_seed(c, p, seed, stop)
                        : run_subgrad_seed(c, p, seed, stop));
      return out;
    }
    out.push_back(run_admm_seed(c, p, seed, stop));
    StopCriteria base = stop;
    base.obj_tol = INFINITY;
    base.target_objective = out.front().trace.back().objective;
    out.push_back(run_subgrad_seed(c, p, seed, base));
    return out;
  });
}

/// Runs every seed on a pool of `jobs` workers; results are ordered by seed
/// position, then solver.
inline std::vector<SeedOutcome> run_experiment(const ExperimentConfig& c,
                                               bool compare) {
  validate(c);
  const std::optional<Dataset> file_data = load_file_data(c);
  const std::size_t n = c.seeds.size();
  std::vector<std::vector<SeedOutcome>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  unsigned jobs = c.jobs ? c.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = run_seed(c, c.seeds[i], compare, file_data);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<SeedOutcome> out;
  for (auto& s : slots) {
    for (auto& o : s) out.push_back(std::move(o));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summaries

struct SummaryRow {
  std::string solver;
  std::size_t runs = 0;
  double objective_mean = NAN, objective_std = NAN;
  double r_feas_mean = NAN, r_feas_std = NAN;
  double r_grad_mean = NAN, r_grad_std = NAN;
  double r_subdiff_mean = NAN, r_subdiff_std = NAN;
  double wall_mean = NAN, wall_std = NAN;
  double sfo_mean = NAN, sfo_std = NAN;
  double iters_mean = NAN;
};

namespace detail {

/// Mean and sample standard deviation (0 for a single value).
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {NAN, NAN};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= double(v.size());
  if (v.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / double(v.size() - 1))};
}

}  // namespace detail

/// Aggregates the final record of each trace.
inline SummaryRow summarize(const std::string& solver,
                            const std::vector<Trace>& traces) {
  SummaryRow row;
  row.solver = solver;
  row.runs = traces.size();
  std::vector<double> obj, feas, grad, sub, wall, sfo, iters;
  for (const auto& t : traces) {
    if (t.empty()) continue;
    const auto& r = t.back();
    obj.push_back(r.objective);
    feas.push_back(r.r_feas);
    grad.push_back(r.r_grad);
    sub.push_back(r.r_subdiff);
    wall.push_back(r.wall_seconds);
    sfo.push_back(double(r.sfo_count));
    iters.push_back(double(r.iter));
  }
  std::tie(row.objective_mean, row.objective_std) = detail::mean_std(obj);
  std::tie(row.r_feas_mean, row.r_feas_std) = detail::mean_std(feas);
  std::tie(row.r_grad_mean, row.r_grad_std) = detail::mean_std(grad);
  std::tie(row.r_subdiff_mean, row.r_subdiff_std) = detail::mean_std(sub);
  std::tie(row.wall_mean, row.wall_std) = detail::mean_std(wall);
  std::tie(row.sfo_mean, row.sfo_std) = detail::mean_std(sfo);
  row.iters_mean = detail::mean_std(iters).first;
  return row;
}

inline constexpr const char* kSummaryHeader =
    "solver,runs,objective_mean,objective_std,r_feas_mean,r_feas_std,"
    "r_grad_mean,r_grad_std,r_subdiff_mean,r_subdiff_std,wall_mean,wall_std,"
    "sfo_mean,sfo_std,iters_mean";

inline void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.solver << ',' << r.runs << ',' << format_double(r.objective_mean)
        << ',' << format_double(r.objective_std) << ','
        << format_double(r.r_feas_mean) << ',' << format_double(r.r_feas_std)
        << ',' << format_double(r.r_grad_mean) << ','
        << format_double(r.r_grad_std) << ',' << format_double(r.r_subdiff_mean)
        << ',' << format_double(r.r_subdiff_std) << ','
        << format_double(r.wall_mean) << ',' << format_double(r.wall_std) << ','
        << format_double(r.sfo_mean) << ',' << format_double(r.sfo_std) << ','
        << format_double(r.iters_mean) << '\n';
  }
}

inline std::string trace_filename(SolverKind s, std::uint64_t seed) {
  return "trace_" + to_string(s) + "_seed" + std::to_string(seed) + ".csv";
}

/// Summary rows (one per solver present, ADMM first) from outcomes.
inline std::vector<SummaryRow> summarize_outcomes(
    const std::vector<SeedOutcome>& outcomes) {
  std::vector<SummaryRow> rows;
  for (SolverKind s : {SolverKind::MarsAdmm, SolverKind::RSubgrad}) {
    std::vector<Trace> traces;
    for (const auto& o : outcomes) {
      if (o.solver == s) traces.push_back(o.trace);
    }
    if (!traces.empty()) rows.push_back(summarize(to_string(s), traces));
  }
  return rows;
}

/// Writes per-seed traces, summary.csv and run.json into c.output_dir.
inline void write_outputs(const ExperimentConfig& c, const std::string& command,
                          const std::vector<SeedOutcome>& outcomes,
                          const std::vector<std::string>& warnings) {
  namespace fs = std::filesystem;
  fs::create_directories(c.output_dir);
  for (const auto& o : outcomes) {
    write_trace_file(o.trace, (fs::path(c.output_dir) / trace_filename(o.solver, o.seed)).string());
  }
  {
    const auto path = (fs::path(c.output_dir) / "summary.csv").string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_summary(summarize_outcomes(outcomes), out);
  }
  nlohmann::json meta;
  meta["version"] = MARSADMM_VERSION;
  meta["command"] = command;
  meta["config"] = to_json(c);
  meta["warnings"] = warnings;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& o : outcomes) {
    runs.push_back({{"seed", o.seed},
                    {"solver", to_string(o.solver)},
                    {"trace", trace_filename(o.solver, o.seed)},
                    {"stop_reason", o.stop_reason},
                    {"iterations", o.trace.empty() ? 0 : o.trace.back().iter},
                    {"warnings", o.warnings}});
  }
  meta["runs"] = runs;
  const auto path = (fs::path(c.output_dir) / "run.json").string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << meta.dump(2) << '\n';
}

}  // namespace marsadmm

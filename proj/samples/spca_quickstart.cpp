// Sparse PCA on a small synthetic dataset: run the solver, print a few trace
// rows and the sparsity of the final loading matrix.

#include <marsadmm/marsadmm.hpp>

#include <cstdio>

int main() {
  using namespace marsadmm;

  const Dataset data = gen_spca_data(/*n=*/20, /*m=*/200, /*seed=*/7);
  const auto problem = make_spca(data.spca_matrix(), /*mu=*/0.3, /*p=*/3);

  SolverConfig cfg;
  cfg.batch_size = 20;
  cfg.seed = 7;
  StopCriteria stop;
  stop.max_iters = 500;

  const RunResult r = run(cfg, problem, stop);
  for (const auto& w : r.warnings) std::printf("warning: %s\n", w.c_str());

  std::printf("%6s %12s %12s %12s\n", "iter", "objective", "r_feas", "r_grad");
  for (const auto& rec : r.trace) {
    if (rec.iter % 100 != 0 && &rec != &r.trace.back()) continue;
    std::printf("%6lld %12.6f %12.3e %12.3e\n", static_cast<long long>(rec.iter),
                rec.objective, rec.r_feas, rec.r_grad);
  }

  const Matrix& x = r.state.x;
  const Index small = (x.array().abs() < 1e-3).count();
  std::printf("stop: %s, %lld/%lld loadings below 1e-3, sfo=%lld\n",
              r.stop_reason.c_str(), static_cast<long long>(small),
              static_cast<long long>(x.size()),
              static_cast<long long>(r.state.est.sfo_count));
  return 0;
}

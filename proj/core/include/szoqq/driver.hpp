#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "szoqq/problem.hpp"
#include "szoqq/subsolver.hpp"
#include "szoqq/types.hpp"

namespace szoqq {

struct DriverConfig {
  double mu = 1e-3;            // proximal weight, > 0
  double xi = 1e-4;            // termination threshold on the step; 0 disables
  int max_iters = 1000;
  double subsolver_tol = 1e-8;
  bool escalation_enabled = true;
  double escalation_factor = 2.0;
  int escalation_cap = 10;
  double kkt_check_nu = 1e-5;  // probe step for the final KKT check
};

// One row per iteration: the iterate at the start of iteration k and the
// step the iteration took.
struct IterationRecord {
  int k = 0;
  Vec x;
  double objective = 0.0;  // f0(x)
  double increment = 0.0;  // |x_{k+1} - x_k|
  double l_star = 0.0;
  double nu_star = 0.0;
  std::int64_t oracle_evals = 0;  // cumulative ledger count after this iteration
  double wall_time = 0.0;         // seconds since the run started
};

struct SolveTrace {
  std::vector<IterationRecord> iterations;
  Vec final_point;
  double final_objective = 0.0;  // f0(final_point)
  bool terminated = false;
  std::optional<KktResidual> final_kkt;
  std::optional<double> k_bar;  // iteration bound, when the infimum is known
  int escalations = 0;
};

// Iteration bound (f0_x0 - f0_inf) / (mu xi^2).
double complexity_bound(double f0_x0, double f0_inf, double mu, double xi);

// Runs the safe zeroth-order loop: at each iterate build the local feasible
// set, solve the proximal subproblem over it, and stop once the step length
// drops to xi. Every iterate is strictly feasible. If an anchor re-query
// comes back nonnegative the smoothness constants are escalated (when
// enabled) and the step is retried from the previous anchor, up to
// escalation_cap times. objective_infimum, when given, fills in k_bar.
SolveTrace run_szoqq(const BlackBoxProblem& p, const SmoothnessConstants& constants,
                     const DriverConfig& config, SafetyLedger& ledger,
                     std::optional<double> objective_infimum = std::nullopt);

// Same loop with the value-only comparison set (single ball of radius l*)
// in place of the gradient-based local set. Costs m queries per iteration.
SolveTrace run_lbm_baseline(const BlackBoxProblem& p, const SmoothnessConstants& constants,
                            const DriverConfig& config, SafetyLedger& ledger,
                            std::optional<double> objective_infimum = std::nullopt);

}  // namespace szoqq

#pragma once

#include <vector>

#include "szoqq/local_sets.hpp"
#include "szoqq/problem.hpp"
#include "szoqq/types.hpp"

namespace szoqq {

// Ball constraints are satisfied within this absolute tolerance on
// |x - center|^2 - radius^2.
inline constexpr double kBallFeasibilityTol = 1e-9;

// Steps shorter than this collapse to the prox center exactly.
inline constexpr double kDegenerateStep = 1e-14;

// Proximal subproblem over an intersection of balls:
//   min  linear . x + sum_j quad_diag[j] x_j^2 + prox_weight |x - prox_center|^2
//   s.t. |x - center_i|^2 <= radius_i^2  for every ball of region.
// prox_center must be strictly interior to the region.
struct Subproblem {
  Vec linear;
  Vec quad_diag;  // empty means zero
  Vec prox_center;
  double prox_weight = 0.0;
  LocalSet region;
};

// Residuals of the subproblem KKT system at (x_opt, multipliers), with the
// ball constraints written as |x - O_i|^2 - r_i^2 <= 0.
struct KktResidual {
  double stationarity = 0.0;
  double complementarity = 0.0;
};

struct SubSolution {
  Vec x_opt;
  std::vector<double> multipliers;  // one per ball, nonnegative
  KktResidual kkt;
  int newton_iters = 0;
  double certified_gap = 0.0;  // duality gap bound m / t at exit
};

// Primal log-barrier solve with damped Newton steps from the strictly
// feasible prox center. Deterministic: identical inputs give bit-identical
// outputs. Returns the prox center unchanged when the optimal step is
// degenerate (shorter than kDegenerateStep) or fails to improve the
// proximal objective.
SubSolution solve(const Subproblem& sp, double tol = 1e-8);

// Exact minimization when the region is a single ball centred at the prox
// center: direct solve of the radial multiplier equation.
SubSolution solve_single_ball(const Subproblem& sp);

// eta-KKT residuals of the original problem at x with multipliers for the
// original constraints: stationarity |grad f0 + sum_i lambda_i g_i| with g_i
// the forward-difference estimates, inflated by sum_i lambda_i alpha_i nu;
// complementarity max_i |lambda_i f_i(x)|. x must be strictly feasible; the
// probe step is clamped to kNuClampFraction * l*(x). Costs m (d + 1) queries.
KktResidual kkt_residual_original(const BlackBoxProblem& p, SafetyLedger& ledger, const Vec& x,
                                  const std::vector<double>& multipliers,
                                  const SmoothnessConstants& constants, double nu);

// Nonnegative multipliers minimizing the summed squares of both residuals of
// kkt_residual_original at x (stationarity against the same forward-difference
// gradient estimates, complementarity against the queried values), solved as a
// nonnegative least-squares problem. x must be strictly feasible; the probe
// step is clamped as in kkt_residual_original. Costs m (d + 1) queries.
std::vector<double> certificate_multipliers(const BlackBoxProblem& p, SafetyLedger& ledger,
                                            const Vec& x, const SmoothnessConstants& constants,
                                            double nu);

}  // namespace szoqq

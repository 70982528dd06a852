#include "szoqq/driver.hpp"

#include <chrono>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "szoqq/local_sets.hpp"

namespace szoqq {

namespace {

void validate(const DriverConfig& config) {
  if (!(config.mu > 0.0)) {
    throw ContractViolation(fmt::format("prox weight must be positive, got {}", config.mu));
  }
  if (!(config.xi >= 0.0)) {
    throw ContractViolation(fmt::format("termination threshold must be >= 0, got {}", config.xi));
  }
  if (config.max_iters < 1) {
    throw ContractViolation("max_iters must be at least 1");
  }
  if (!(config.subsolver_tol > 0.0) || !(config.kkt_check_nu > 0.0)) {
    throw ContractViolation("tolerances must be positive");
  }
  if (config.escalation_enabled &&
      (!(config.escalation_factor > 1.0) || config.escalation_cap < 1)) {
    throw ContractViolation("escalation needs factor > 1 and a positive cap");
  }
}

// Shared skeleton of the full method and the value-only baseline. Each
// iteration: re-query the anchor, build a region, solve the proximal
// subproblem, step. A nonnegative anchor value triggers escalation: the
// constants grow by escalation_factor, the offending step is undone (its
// trace row popped), and the iteration is rebuilt from the previous anchor.
template <typename BuildRegion, typename SolveRegion>
SolveTrace run_loop(const BlackBoxProblem& p, const SmoothnessConstants& initial_constants,
                    const DriverConfig& config, SafetyLedger& ledger,
                    std::optional<double> objective_infimum, bool compute_final_kkt,
                    BuildRegion build_region, SolveRegion solve_region) {
  validate(config);
  if (initial_constants.size() != p.num_constraints) {
    throw ContractViolation("smoothness constants do not match the constraint count");
  }
  const auto t_start = std::chrono::steady_clock::now();
  const auto elapsed = [&t_start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  SmoothnessConstants constants = initial_constants;
  SolveTrace trace;
  Vec x = p.x0;
  std::vector<double> final_multipliers(p.num_constraints, 0.0);

  for (int k = 0; k < config.max_iters; ++k) {
    Vec values(p.num_constraints);
    int bad_constraint = 0;
    for (int i = 1; i <= p.num_constraints; ++i) {
      values(i - 1) = query(p, ledger, i, x);
      if (bad_constraint == 0 && !(values(i - 1) < 0.0)) {
        bad_constraint = i;
      }
    }
    if (bad_constraint != 0) {
      if (!config.escalation_enabled || trace.escalations >= config.escalation_cap ||
          trace.iterations.empty()) {
        throw InfeasibleAnchor(bad_constraint, values(bad_constraint - 1),
                               fmt::format("iterate {} violates constraint {} (value {})", k,
                                           bad_constraint, values(bad_constraint - 1)));
      }
      constants = constants.scaled(config.escalation_factor);
      ++trace.escalations;
      x = trace.iterations.back().x;
      trace.iterations.pop_back();
      k -= 2;  // rebuild the undone iteration on the next pass
      continue;
    }

    const LocalSet set = build_region(constants, x, values, k);
    Subproblem sp;
    sp.linear = p.objective.linear;
    sp.quad_diag = p.objective.quad_diag;
    sp.prox_center = x;
    sp.prox_weight = config.mu;
    sp.region = set;
    const SubSolution sol = solve_region(sp);
    if (sol.multipliers.size() == static_cast<std::size_t>(p.num_constraints)) {
      for (int i = 0; i < p.num_constraints; ++i) {
        // Ball constraints are the quadratic models scaled by 1/(2 M_i).
        final_multipliers[i] = sol.multipliers[i] / (2.0 * constants.m(i + 1));
      }
    }

    const double increment = (sol.x_opt - x).norm();
    trace.iterations.push_back(IterationRecord{k, x, p.objective.value(x), increment, set.l_star,
                                               set.nu_star, ledger.total_evals(), elapsed()});
    x = sol.x_opt;
    if (config.xi > 0.0 && increment <= config.xi) {
      trace.terminated = true;
      break;
    }
  }

  trace.final_point = x;
  trace.final_objective = p.objective.value(x);
  if (compute_final_kkt) {
    try {
      KktResidual best = kkt_residual_original(p, ledger, x, final_multipliers, constants,
                                               config.kkt_check_nu);
      // The last subproblem's multipliers certify the final point only up to
      // a term proportional to the terminal step length; a nonnegative
      // least-squares fit at the point itself usually certifies tighter.
      // Report whichever pair gives the stronger certificate.
      const std::vector<double> fitted =
          certificate_multipliers(p, ledger, x, constants, config.kkt_check_nu);
      const KktResidual refit =
          kkt_residual_original(p, ledger, x, fitted, constants, config.kkt_check_nu);
      if (std::max(refit.stationarity, refit.complementarity) <
          std::max(best.stationarity, best.complementarity)) {
        best = refit;
      }
      trace.final_kkt = best;
    } catch (const InfeasibleAnchor&) {
      // The terminal point failed its feasibility re-check; the violation is
      // already on the ledger and the residual stays unset.
    }
  }
  if (objective_infimum.has_value() && config.xi > 0.0 && !trace.iterations.empty()) {
    trace.k_bar = complexity_bound(trace.iterations.front().objective, *objective_infimum,
                                   config.mu, config.xi);
  }
  return trace;
}

}  // namespace

double complexity_bound(double f0_x0, double f0_inf, double mu, double xi) {
  if (!(mu > 0.0) || !(xi > 0.0)) {
    throw ContractViolation("complexity bound needs mu > 0 and xi > 0");
  }
  if (!(f0_x0 >= f0_inf)) {
    throw ContractViolation(fmt::format(
        "initial objective {} lies below the claimed infimum {}", f0_x0, f0_inf));
  }
  return (f0_x0 - f0_inf) / (mu * xi * xi);
}

SolveTrace run_szoqq(const BlackBoxProblem& p, const SmoothnessConstants& constants,
                     const DriverConfig& config, SafetyLedger& ledger,
                     std::optional<double> objective_infimum) {
  return run_loop(
      p, constants, config, ledger, objective_infimum, /*compute_final_kkt=*/true,
      [&p, &ledger](const SmoothnessConstants& c, const Vec& x, const Vec& values, int k) {
        return build_local_set_at(p, ledger, c, x, values, k);
      },
      [&config](const Subproblem& sp) { return solve(sp, config.subsolver_tol); });
}

SolveTrace run_lbm_baseline(const BlackBoxProblem& p, const SmoothnessConstants& constants,
                            const DriverConfig& config, SafetyLedger& ledger,
                            std::optional<double> objective_infimum) {
  return run_loop(
      p, constants, config, ledger, objective_infimum, /*compute_final_kkt=*/false,
      [](const SmoothnessConstants& c, const Vec& x, const Vec& values, int) {
        return comparison_set(x, values, c.l_max());
      },
      [](const Subproblem& sp) { return solve_single_ball(sp); });
}

}  // namespace szoqq

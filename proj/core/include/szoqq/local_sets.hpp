#pragma once

#include <vector>

#include "szoqq/estimator.hpp"
#include "szoqq/problem.hpp"
#include "szoqq/types.hpp"

namespace szoqq {

// Probe step as a fraction of l*: keeps finite-difference probes strictly
// inside the ball of provably feasible points around the anchor.
inline constexpr double kNuClampFraction = 0.9;

// Absolute tolerance used by membership tests.
inline constexpr double kMembershipTol = 1e-12;

// Closed ball {x : |x - center| <= radius} certified to lie inside
// {f_i <= 0} for its source constraint.
struct LocalBall {
  Vec center;
  double radius = 0.0;
  int source_constraint = 0;  // 1-based
  Vec gradient;               // estimate used to build the ball
  double anchor_value = 0.0;  // f_i at the anchor
};

// Intersection of per-constraint balls around a strictly feasible anchor.
struct LocalSet {
  Vec anchor;
  double l_star = 0.0;
  double nu_star = 0.0;
  std::vector<LocalBall> balls;
};

struct StepSizes {
  double l_star = 0.0;
  double nu_star = 0.0;
};

// l* = min_i(-f_i) / L_max and nu* = min(2 l*/sqrt(d), 1/(k+1), clamp l*).
// Requires every constraint value < 0 (throws InfeasibleAnchor otherwise).
StepSizes step_schedule(const Vec& constraint_values, double l_max, int dim, int iteration,
                        double clamp = kNuClampFraction);

// Ball form of {x : f + g.(x - anchor) + 2 m |x - anchor|^2 <= 0}:
//   center = anchor - g / (4 m),  radius^2 = -f / (2 m) + |g|^2 / (16 m^2).
LocalBall ball_from_model(const Vec& anchor, double f_value, const Vec& gradient, double m_i,
                          int source_constraint);

// Builds the local feasible set at x: queries the m anchor values, runs the
// step schedule, estimates each gradient with d probes, and intersects the
// per-constraint balls. Costs m (d + 1) oracle queries.
LocalSet build_local_set(const BlackBoxProblem& p, SafetyLedger& ledger,
                         const SmoothnessConstants& constants, const Vec& x, int iteration);

// Same, reusing anchor constraint values already queried at x this
// iteration; costs m * d further queries.
LocalSet build_local_set_at(const BlackBoxProblem& p, SafetyLedger& ledger,
                            const SmoothnessConstants& constants, const Vec& x,
                            const Vec& values, int iteration);

// Value-only fallback set: the single ball at x of radius l*. Needs no
// gradient estimates.
LocalSet comparison_set(const Vec& x, const Vec& constraint_values, double l_max);

// True iff x lies in every ball, within tol on |x - center| - radius.
bool membership(const LocalSet& set, const Vec& x, double tol = kMembershipTol);

}  // namespace szoqq

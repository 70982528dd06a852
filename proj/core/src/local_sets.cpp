#include "szoqq/local_sets.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace szoqq {

StepSizes step_schedule(const Vec& constraint_values, double l_max, int dim, int iteration,
                        double clamp) {
  if (constraint_values.size() == 0) {
    throw ContractViolation("step schedule needs at least one constraint value");
  }
  if (!(l_max > 0.0) || dim < 1 || iteration < 0) {
    throw ContractViolation("step schedule needs l_max > 0, dim >= 1, iteration >= 0");
  }
  if (!(clamp > 0.0) || !(clamp < 1.0)) {
    throw ContractViolation(fmt::format("probe clamp must lie in (0, 1), got {}", clamp));
  }
  for (Eigen::Index i = 0; i < constraint_values.size(); ++i) {
    if (!(constraint_values(i) < 0.0)) {
      throw InfeasibleAnchor(static_cast<int>(i) + 1, constraint_values(i),
                             fmt::format("anchor is not strictly feasible: f_{} = {}", i + 1,
                                         constraint_values(i)));
    }
  }
  StepSizes out;
  out.l_star = -constraint_values.maxCoeff() / l_max;
  const double by_dim = 2.0 * out.l_star / std::sqrt(static_cast<double>(dim));
  const double by_iter = 1.0 / static_cast<double>(iteration + 1);
  out.nu_star = std::min({by_dim, by_iter, clamp * out.l_star});
  return out;
}

LocalBall ball_from_model(const Vec& anchor, double f_value, const Vec& gradient, double m_i,
                          int source_constraint) {
  if (!(m_i > 0.0)) {
    throw ContractViolation(fmt::format("ball needs m > 0, got {}", m_i));
  }
  if (!(f_value < 0.0)) {
    throw InfeasibleAnchor(source_constraint, f_value,
                           fmt::format("ball model needs f < 0 at the anchor, got {}", f_value));
  }
  if (gradient.size() != anchor.size()) {
    throw ContractViolation("gradient and anchor dimensions differ");
  }
  LocalBall ball;
  ball.center = anchor - gradient / (4.0 * m_i);
  const double radius_sq =
      -f_value / (2.0 * m_i) + gradient.squaredNorm() / (16.0 * m_i * m_i);
  ball.radius = std::sqrt(radius_sq);
  ball.source_constraint = source_constraint;
  ball.gradient = gradient;
  ball.anchor_value = f_value;
  return ball;
}

LocalSet build_local_set(const BlackBoxProblem& p, SafetyLedger& ledger,
                         const SmoothnessConstants& constants, const Vec& x, int iteration) {
  Vec values(p.num_constraints);
  for (int i = 1; i <= p.num_constraints; ++i) {
    values(i - 1) = query(p, ledger, i, x);
  }
  return build_local_set_at(p, ledger, constants, x, values, iteration);
}

LocalSet build_local_set_at(const BlackBoxProblem& p, SafetyLedger& ledger,
                            const SmoothnessConstants& constants, const Vec& x,
                            const Vec& values, int iteration) {
  if (constants.size() != p.num_constraints) {
    throw ContractViolation(fmt::format("expected {} smoothness constants, got {}",
                                        p.num_constraints, constants.size()));
  }
  if (values.size() != p.num_constraints) {
    throw ContractViolation("anchor values do not match the constraint count");
  }
  const StepSizes steps = step_schedule(values, constants.l_max(), p.dim, iteration);

  LocalSet set;
  set.anchor = x;
  set.l_star = steps.l_star;
  set.nu_star = steps.nu_star;
  set.balls.reserve(p.num_constraints);
  for (int i = 1; i <= p.num_constraints; ++i) {
    const GradientEstimate est =
        estimate_gradient_at(p, ledger, i, x, values(i - 1), steps.nu_star, constants.m(i));
    set.balls.push_back(ball_from_model(x, values(i - 1), est.gradient, constants.m(i), i));
  }
  return set;
}

LocalSet comparison_set(const Vec& x, const Vec& constraint_values, double l_max) {
  const StepSizes steps = step_schedule(constraint_values, l_max, static_cast<int>(x.size()), 0);
  LocalSet set;
  set.anchor = x;
  set.l_star = steps.l_star;
  set.nu_star = steps.nu_star;
  LocalBall ball;
  ball.center = x;
  ball.radius = steps.l_star;
  ball.source_constraint = 0;  // no single source: the radius binds them all
  ball.gradient = Vec::Zero(x.size());
  ball.anchor_value = constraint_values.maxCoeff();
  set.balls.push_back(std::move(ball));
  return set;
}

bool membership(const LocalSet& set, const Vec& x, double tol) {
  if (set.balls.empty()) {
    return false;
  }
  for (const LocalBall& ball : set.balls) {
    if ((x - ball.center).norm() - ball.radius > tol) {
      return false;
    }
  }
  return true;
}

}  // namespace szoqq

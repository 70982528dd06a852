#include "szoqq/estimator.hpp"

#include <cmath>

#include <fmt/format.h>

namespace szoqq {

double estimate_error_coefficient(int dim, double m_i) {
  return 0.5 * std::sqrt(static_cast<double>(dim)) * m_i;
}

GradientEstimate estimate_gradient(const BlackBoxProblem& p, SafetyLedger& ledger, int i,
                                   const Vec& x, double nu, double m_i) {
  const double anchor = query(p, ledger, i, x);
  return estimate_gradient_at(p, ledger, i, x, anchor, nu, m_i);
}

GradientEstimate estimate_gradient_at(const BlackBoxProblem& p, SafetyLedger& ledger, int i,
                                      const Vec& x, double f_at_x, double nu, double m_i) {
  if (!(nu > 0.0)) {
    throw ContractViolation(fmt::format("probe step must be positive, got {}", nu));
  }
  if (!(m_i > 0.0)) {
    throw ContractViolation(fmt::format("gradient Lipschitz bound must be positive, got {}", m_i));
  }
  GradientEstimate out;
  out.gradient = Vec(p.dim);
  Vec probe = x;
  for (int j = 0; j < p.dim; ++j) {
    probe(j) = x(j) + nu;
    const double fj = query(p, ledger, i, probe);
    out.gradient(j) = (fj - f_at_x) / nu;
    probe(j) = x(j);
  }
  out.nu = nu;
  out.error_bound = estimate_error_coefficient(p.dim, m_i) * nu;
  out.evals_used = p.dim + 1;
  return out;
}

}  // namespace szoqq

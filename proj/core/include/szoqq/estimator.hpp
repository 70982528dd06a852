#pragma once

#include "szoqq/problem.hpp"
#include "szoqq/types.hpp"

namespace szoqq {

// Forward-difference gradient estimate of one constraint,
//   g_j = (f_i(x + nu e_j) - f_i(x)) / nu,
// with the deterministic error bound |g - grad f_i(x)| <= (sqrt(d) M_i / 2) nu.
struct GradientEstimate {
  Vec gradient;
  double nu = 0.0;
  double error_bound = 0.0;
  int evals_used = 0;  // d + 1, counting the anchor evaluation
};

// Error bound coefficient alpha_i = sqrt(d) * m_i / 2.
double estimate_error_coefficient(int dim, double m_i);

// Estimates grad f_i(x) with d + 1 oracle queries (anchor plus one probe per
// coordinate), all recorded in the ledger. Probes lie at x + nu e_j, so the
// caller must pick nu small enough that they stay feasible.
GradientEstimate estimate_gradient(const BlackBoxProblem& p, SafetyLedger& ledger, int i,
                                   const Vec& x, double nu, double m_i);

// Same estimate reusing an already-queried anchor value f_i(x); performs the
// d probe queries only. evals_used still reports d + 1.
GradientEstimate estimate_gradient_at(const BlackBoxProblem& p, SafetyLedger& ledger, int i,
                                      const Vec& x, double f_at_x, double nu, double m_i);

}  // namespace szoqq

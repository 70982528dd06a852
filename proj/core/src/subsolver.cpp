#include "szoqq/subsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <fmt/format.h>

namespace szoqq {

namespace {

constexpr int kMaxNewtonPerStage = 200;
constexpr int kMaxBacktracks = 60;
constexpr int kMaxStages = 64;
// Stage exit: lambda^2/2 <= tol * max(1, t). The stage objective is scaled
// by the barrier weight t, so this keeps the error in original-objective
// units at tol while staying above rounding noise at large t.
constexpr double kNewtonDecrementTol = 1e-12;
// Polish exit: lambda^2/2 below this absolute level. Drives the decrement
// far enough down that the multipliers 1/(t s_i) and the stationarity
// residual are accurate, not just the objective value.
constexpr double kPolishDecrementTol = 1e-9;
constexpr int kMaxPolishSteps = 40;

double prox_objective(const Subproblem& sp, const Vec& x) {
  double v = sp.linear.dot(x) + sp.prox_weight * (x - sp.prox_center).squaredNorm();
  if (sp.quad_diag.size() > 0) {
    v += sp.quad_diag.dot(x.cwiseProduct(x));
  }
  return v;
}

Vec prox_gradient(const Subproblem& sp, const Vec& x) {
  Vec g = sp.linear + 2.0 * sp.prox_weight * (x - sp.prox_center);
  if (sp.quad_diag.size() > 0) {
    g += 2.0 * sp.quad_diag.cwiseProduct(x);
  }
  return g;
}

Vec slacks(const Subproblem& sp, const Vec& x) {
  Vec s(static_cast<Eigen::Index>(sp.region.balls.size()));
  for (std::size_t i = 0; i < sp.region.balls.size(); ++i) {
    const LocalBall& ball = sp.region.balls[i];
    s(static_cast<Eigen::Index>(i)) =
        ball.radius * ball.radius - (x - ball.center).squaredNorm();
  }
  return s;
}

double barrier_value(const Subproblem& sp, double t, const Vec& x) {
  const Vec s = slacks(sp, x);
  if (s.minCoeff() <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return t * prox_objective(sp, x) - s.array().log().sum();
}

void validate(const Subproblem& sp) {
  const Eigen::Index d = sp.prox_center.size();
  if (d == 0 || sp.linear.size() != d ||
      (sp.quad_diag.size() != 0 && sp.quad_diag.size() != d)) {
    throw ContractViolation("subproblem coefficient sizes do not match");
  }
  if (!(sp.prox_weight > 0.0)) {
    throw ContractViolation(fmt::format("prox weight must be positive, got {}", sp.prox_weight));
  }
  if (sp.quad_diag.size() > 0 && sp.quad_diag.minCoeff() < 0.0) {
    throw ContractViolation("subproblem curvature must be nonnegative");
  }
  if (sp.region.balls.empty()) {
    throw ContractViolation("subproblem region has no balls");
  }
  for (const LocalBall& ball : sp.region.balls) {
    if (ball.center.size() != d) {
      throw ContractViolation("ball center dimension does not match the subproblem");
    }
    if (!(ball.radius > 0.0)) {
      throw ContractViolation(fmt::format("ball radius must be positive, got {}", ball.radius));
    }
  }
  const Vec s = slacks(sp, sp.prox_center);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s(i) > 0.0)) {
      throw ContractViolation(fmt::format(
          "prox center is not strictly interior (ball {} slack {})", i + 1, s(i)));
    }
  }
}

std::vector<double> multipliers_at(const Subproblem& sp, double t, const Vec& x) {
  const Vec s = slacks(sp, x);
  std::vector<double> lambda(sp.region.balls.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    lambda[i] = 1.0 / (t * s(static_cast<Eigen::Index>(i)));
  }
  return lambda;
}

KktResidual subproblem_kkt(const Subproblem& sp, const Vec& x,
                           const std::vector<double>& lambda) {
  Vec grad = prox_gradient(sp, x);
  double comp = 0.0;
  for (std::size_t i = 0; i < sp.region.balls.size(); ++i) {
    const LocalBall& ball = sp.region.balls[i];
    grad += lambda[i] * 2.0 * (x - ball.center);
    const double h = (x - ball.center).squaredNorm() - ball.radius * ball.radius;
    comp = std::max(comp, std::abs(lambda[i] * h));
  }
  return KktResidual{grad.norm(), comp};
}

// Gradient and Hessian of the barrier objective t * prox - sum log(s_i) at
// an interior point x.
void barrier_derivatives(const Subproblem& sp, double t, const Vec& hess_diag, const Vec& x,
                         Vec& grad, Eigen::MatrixXd& hess) {
  const Eigen::Index d = x.size();
  const Vec s = slacks(sp, x);
  grad = t * prox_gradient(sp, x);
  hess = (t * hess_diag).asDiagonal();
  for (std::size_t i = 0; i < sp.region.balls.size(); ++i) {
    const Vec diff = x - sp.region.balls[i].center;
    const double si = s(static_cast<Eigen::Index>(i));
    grad += (2.0 / si) * diff;
    hess += (2.0 / si) * Eigen::MatrixXd::Identity(d, d) +
            (4.0 / (si * si)) * (diff * diff.transpose());
  }
}

// Pure-Newton refinement at the final barrier weight. The staged loop
// targets value accuracy; its t-scaled exit leaves a Newton decrement that
// grows with t, which is too coarse for the multipliers and the stationarity
// residual. Damped steps of length 1/(1 + lambda) descend without any
// objective comparisons, so the refinement is immune to the value round-off
// the staged line search has to respect; it stops once the decrement hits
// kPolishDecrementTol, stalls, or stops shrinking.
void polish_at(const Subproblem& sp, double t, const Vec& hess_diag, Vec& x, int& newton_total) {
  double prev_dec_sq = std::numeric_limits<double>::infinity();
  Vec grad;
  Eigen::MatrixXd hess;
  for (int iter = 0; iter < kMaxPolishSteps; ++iter) {
    barrier_derivatives(sp, t, hess_diag, x, grad, hess);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) {
      return;
    }
    const Vec dx = ldlt.solve(-grad);
    const double dec_sq = -grad.dot(dx);
    if (!std::isfinite(dec_sq) || dec_sq <= 0.0 || 0.5 * dec_sq <= kPolishDecrementTol ||
        dec_sq >= prev_dec_sq) {
      return;
    }
    prev_dec_sq = dec_sq;
    double alpha = 1.0 / (1.0 + std::sqrt(dec_sq));
    int halvings = 0;
    while (halvings < kMaxBacktracks && slacks(sp, x + alpha * dx).minCoeff() <= 0.0) {
      alpha *= 0.5;
      ++halvings;
    }
    if (halvings >= kMaxBacktracks) {
      return;
    }
    x += alpha * dx;
    ++newton_total;
  }
}

// Collapse to the prox center when the step is degenerate or the candidate
// does not strictly improve the proximal objective; keeps descent exact.
SubSolution finalize(const Subproblem& sp, double t, Vec x, int newton_iters, double gap) {
  const double step = (x - sp.prox_center).norm();
  if (step < kDegenerateStep ||
      !(prox_objective(sp, x) < prox_objective(sp, sp.prox_center))) {
    x = sp.prox_center;
  }
  SubSolution out;
  out.x_opt = std::move(x);
  out.multipliers = multipliers_at(sp, t, out.x_opt);
  out.kkt = subproblem_kkt(sp, out.x_opt, out.multipliers);
  out.newton_iters = newton_iters;
  out.certified_gap = gap;
  return out;
}

}  // namespace

SubSolution solve(const Subproblem& sp, double tol) {
  validate(sp);
  if (!(tol > 0.0)) {
    throw ContractViolation(fmt::format("tolerance must be positive, got {}", tol));
  }
  const Eigen::Index d = sp.prox_center.size();
  const double m = static_cast<double>(sp.region.balls.size());

  const double c_norm = sp.linear.norm();
  double t = (c_norm > 0.0) ? std::max(1.0, m / c_norm) : 1.0;

  Vec hess_diag = Vec::Constant(d, 2.0 * sp.prox_weight);
  if (sp.quad_diag.size() > 0) {
    hess_diag += 2.0 * sp.quad_diag;
  }

  Vec x = sp.prox_center;
  int newton_total = 0;
  for (int stage = 0; stage < kMaxStages; ++stage) {
    for (int iter = 0;; ++iter) {
      if (iter >= kMaxNewtonPerStage) {
        throw SolveFailure(
            fmt::format("no Newton convergence after {} steps at barrier weight {}",
                        kMaxNewtonPerStage, t),
            x);
      }
      Vec grad;
      Eigen::MatrixXd hess;
      barrier_derivatives(sp, t, hess_diag, x, grad, hess);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      if (ldlt.info() != Eigen::Success) {
        throw SolveFailure("barrier Hessian factorization failed", x);
      }
      const Vec dx = ldlt.solve(-grad);
      const double decrement_sq = -grad.dot(dx);
      if (!std::isfinite(decrement_sq)) {
        throw SolveFailure("non-finite Newton decrement", x);
      }
      ++newton_total;
      if (0.5 * decrement_sq <= kNewtonDecrementTol * std::max(1.0, t)) {
        break;
      }
      const double base = barrier_value(sp, t, x);
      const double slope = grad.dot(dx);
      double alpha = 1.0;
      int backtracks = 0;
      while (backtracks < kMaxBacktracks) {
        const Vec candidate = x + alpha * dx;
        const double value = barrier_value(sp, t, candidate);
        if (value <= base + 0.25 * alpha * slope) {
          break;
        }
        alpha *= 0.5;
        ++backtracks;
      }
      if (backtracks >= kMaxBacktracks) {
        throw SolveFailure("line search stalled", x);
      }
      x += alpha * dx;
    }
    if (m / t <= tol) {
      polish_at(sp, t, hess_diag, x, newton_total);
      return finalize(sp, t, std::move(x), newton_total, m / t + kNewtonDecrementTol);
    }
    t *= 10.0;
  }
  throw SolveFailure(fmt::format("barrier stage limit reached at weight {}", t), x);
}

SubSolution solve_single_ball(const Subproblem& sp) {
  validate(sp);
  if (sp.region.balls.size() != 1) {
    throw ContractViolation("single-ball solve needs exactly one ball");
  }
  const LocalBall& ball = sp.region.balls.front();
  if ((sp.prox_center - ball.center).norm() > 1e-12 * (1.0 + ball.radius)) {
    throw ContractViolation("single-ball solve needs the prox center at the ball center");
  }
  const Eigen::Index d = sp.prox_center.size();
  const Vec& a = ball.center;
  const double r = ball.radius;

  // Objective in y = x - a:  b.y + sum_j big_d_j y_j^2  with big_d_j > 0.
  Vec b = sp.linear;
  Vec big_d = Vec::Constant(d, sp.prox_weight);
  if (sp.quad_diag.size() > 0) {
    b += 2.0 * sp.quad_diag.cwiseProduct(a);
    big_d += sp.quad_diag;
  }

  const auto y_of = [&](double sigma) -> Vec {
    return (-b.array() / (2.0 * (big_d.array() + sigma))).matrix();
  };

  Vec y = y_of(0.0);
  double sigma = 0.0;
  int iters = 0;
  if (y.norm() > r) {
    // Radial multiplier equation: phi(sigma) = |y(sigma)|^2 - r^2 = 0,
    // phi strictly decreasing on sigma >= 0. Bisection with a fixed bound.
    double lo = 0.0;
    double hi = std::max(1.0, b.norm() / (2.0 * r));
    while (y_of(hi).squaredNorm() > r * r && hi < 1e300) {
      hi *= 2.0;
      ++iters;
    }
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (y_of(mid).squaredNorm() > r * r) {
        lo = mid;
      } else {
        hi = mid;
      }
      ++iters;
      if (hi - lo <= 1e-16 * (1.0 + hi)) {
        break;
      }
    }
    sigma = hi;  // upper end: keeps the point inside the ball
    y = y_of(sigma);
  }

  Vec x = a + y;
  if ((x - a).norm() < kDegenerateStep) {
    x = a;
  }
  SubSolution out;
  out.x_opt = std::move(x);
  out.multipliers = {sigma};
  out.kkt = subproblem_kkt(sp, out.x_opt, out.multipliers);
  out.newton_iters = iters;
  out.certified_gap = 0.0;
  return out;
}

KktResidual kkt_residual_original(const BlackBoxProblem& p, SafetyLedger& ledger, const Vec& x,
                                  const std::vector<double>& multipliers,
                                  const SmoothnessConstants& constants, double nu) {
  if (static_cast<int>(multipliers.size()) != p.num_constraints) {
    throw ContractViolation(fmt::format("expected {} multipliers, got {}", p.num_constraints,
                                        multipliers.size()));
  }
  if (constants.size() != p.num_constraints) {
    throw ContractViolation("smoothness constants do not match the constraint count");
  }
  if (!(nu > 0.0)) {
    throw ContractViolation(fmt::format("probe step must be positive, got {}", nu));
  }
  Vec values(p.num_constraints);
  for (int i = 1; i <= p.num_constraints; ++i) {
    values(i - 1) = query(p, ledger, i, x);
  }
  const StepSizes steps = step_schedule(values, constants.l_max(), p.dim, 0);
  const double nu_eff = std::min(nu, kNuClampFraction * steps.l_star);

  Vec stationarity = p.objective.gradient(x);
  double inflation = 0.0;
  double comp = 0.0;
  for (int i = 1; i <= p.num_constraints; ++i) {
    const GradientEstimate est =
        estimate_gradient_at(p, ledger, i, x, values(i - 1), nu_eff, constants.m(i));
    stationarity += multipliers[i - 1] * est.gradient;
    inflation += multipliers[i - 1] * est.error_bound;
    comp = std::max(comp, std::abs(multipliers[i - 1] * values(i - 1)));
  }
  return KktResidual{stationarity.norm() + inflation, comp};
}

namespace {

// min_{z >= 0} |a z - b|^2 by the Lawson-Hanson active-set method. The
// passive set grows only while it strictly improves the fit, so both loops
// terminate; the caps are a safety net against cycling in degenerate cases.
Vec nonnegative_least_squares(const Eigen::MatrixXd& a, const Vec& b) {
  const Eigen::Index n = a.cols();
  Vec z = Vec::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> idx;
  const double gradient_tol = 1e-12 * std::max(1.0, b.norm());
  Vec residual = b;
  for (Eigen::Index outer = 0; outer < 4 * n + 16; ++outer) {
    const Vec w = a.transpose() * residual;
    Eigen::Index entering = -1;
    double best = gradient_tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
        best = w(j);
        entering = j;
      }
    }
    if (entering < 0) {
      break;
    }
    passive[static_cast<std::size_t>(entering)] = true;
    for (Eigen::Index inner = 0; inner < 4 * n + 16; ++inner) {
      idx.clear();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)]) {
          idx.push_back(j);
        }
      }
      Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t c = 0; c < idx.size(); ++c) {
        ap.col(static_cast<Eigen::Index>(c)) = a.col(idx[c]);
      }
      const Vec sub = ap.colPivHouseholderQr().solve(b);
      if (sub.minCoeff() > 0.0) {
        z.setZero();
        for (std::size_t c = 0; c < idx.size(); ++c) {
          z(idx[c]) = sub(static_cast<Eigen::Index>(c));
        }
        break;
      }
      // Back off to the last nonnegative point on the segment toward sub and
      // drop the coordinates that hit zero.
      double alpha = 1.0;
      for (std::size_t c = 0; c < idx.size(); ++c) {
        const double zc = z(idx[c]);
        const double sc = sub(static_cast<Eigen::Index>(c));
        if (sc <= 0.0 && zc - sc > 0.0) {
          alpha = std::min(alpha, zc / (zc - sc));
        }
      }
      for (std::size_t c = 0; c < idx.size(); ++c) {
        const double sc = sub(static_cast<Eigen::Index>(c));
        double zc = z(idx[c]) + alpha * (sc - z(idx[c]));
        if (sc <= 0.0 && zc <= 1e-14) {
          zc = 0.0;
          passive[static_cast<std::size_t>(idx[c])] = false;
        }
        z(idx[c]) = std::max(zc, 0.0);
      }
    }
    residual = b - a * z;
  }
  return z;
}

}  // namespace

std::vector<double> certificate_multipliers(const BlackBoxProblem& p, SafetyLedger& ledger,
                                            const Vec& x, const SmoothnessConstants& constants,
                                            double nu) {
  if (constants.size() != p.num_constraints) {
    throw ContractViolation("smoothness constants do not match the constraint count");
  }
  if (!(nu > 0.0)) {
    throw ContractViolation(fmt::format("probe step must be positive, got {}", nu));
  }
  Vec values(p.num_constraints);
  for (int i = 1; i <= p.num_constraints; ++i) {
    values(i - 1) = query(p, ledger, i, x);
  }
  const StepSizes steps = step_schedule(values, constants.l_max(), p.dim, 0);
  const double nu_eff = std::min(nu, kNuClampFraction * steps.l_star);

  // Stack the stationarity rows over one complementarity row per constraint:
  // column i is [g_i ; f_i(x) e_i] and the target is [-grad f0 ; 0], so the
  // least-squares objective is exactly the summed squares of both residuals.
  const Eigen::Index d = p.dim;
  const Eigen::Index m = p.num_constraints;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d + m, m);
  for (int i = 1; i <= m; ++i) {
    const GradientEstimate est =
        estimate_gradient_at(p, ledger, i, x, values(i - 1), nu_eff, constants.m(i));
    a.col(i - 1).head(d) = est.gradient;
    a(d + i - 1, i - 1) = values(i - 1);
  }
  Vec b = Vec::Zero(d + m);
  b.head(d) = -p.objective.gradient(x);
  const Vec lambda = nonnegative_least_squares(a, b);
  return std::vector<double>(lambda.data(), lambda.data() + m);
}

}  // namespace szoqq

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "szoqq/problem.hpp"
#include "szoqq/types.hpp"

namespace szoqq::bench {

struct BenchmarkMeta {
  std::string name;
  std::string description;
  std::optional<Vec> known_optimum_point;
  std::optional<double> known_optimum_value;  // infimum of f0, attained at the point above
  // Valid lower bound on f0 over the feasible set, not necessarily attained.
  std::optional<double> objective_lower_bound;
  Vec suggested_l;
  Vec suggested_m;
  double suggested_mu = 1e-3;
  double suggested_xi = 0.0;
  int suggested_max_iters = 1000;
  // Exact smoothness constants, when the generator knows them.
  std::optional<Vec> true_l;
  std::optional<Vec> true_m;
  // 1-based index of the first non-synthetic constraint (2 after an
  // epigraph lift, else 1).
  int physical_constraints_begin = 1;
};

struct BenchmarkInstance {
  BlackBoxProblem problem;
  BenchmarkMeta meta;
};

// One-dimensional warm-up: f0 = 3x, single constraint x^2 - x - 0.75 <= 0,
// start 1.49, L = 3.01, M = 3. Optimum -1.5 at x = -0.5.
BenchmarkInstance make_example1();

// Two-dimensional known-objective problem: min 0.1 x1^2 + x2 subject to
// -x1 <= 0, x2 - 1 <= 0, x1^2 - x2 <= 0, from (0.9, 0.9) with L_i = 5,
// M_i = 3. Optimum 0 at the origin.
BenchmarkInstance make_qcqp_2d();

// Same feasibility problem with the objective treated as unknown and lifted
// through the epigraph transform (dim 3, four constraints).
BenchmarkInstance make_qcqp_2d_epigraph();

// Randomized convex-quadratic instance: m constraints
// (x - c_i)' P_i (x - c_i) - b_i <= 0 with P_i >= 0 (P_1 positive definite),
// strictly feasible origin start, unit linear objective. Exact constants are
// reported in meta.true_l / true_m; suggested constants inflate them.
BenchmarkInstance make_random_qcqp(int dim, int num_constraints, std::uint64_t seed);

// Discrete-time regulation task with a state-dependent disturbance.
struct OcpSpec {
  int horizon = 6;
  double state_bound = 0.7;
  double input_bound = 1.5;
  double disturbance_coeff = 0.1;
  Eigen::Matrix2d a = (Eigen::Matrix2d() << 1.1, 1.0, -0.5, 1.1).finished();
  Eigen::Matrix2d b = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d q = 0.5 * Eigen::Matrix2d::Identity();
  Eigen::Matrix2d r = 2.0 * Eigen::Matrix2d::Identity();
  Eigen::Vector2d x_init = Eigen::Vector2d::Ones();

  int dim() const { return 2 * horizon; }
};

// Stacked states x_1..x_H of the true rollout under inputs u (length 2H).
Vec ocp_rollout_states(const OcpSpec& spec, const Vec& u);

// Quadratic tracking cost of the true rollout.
double ocp_true_cost(const OcpSpec& spec, const Vec& u);

// Deterministic strictly feasible input sequence: solves the nominal
// (disturbance-free) problem with state bounds tightened to
// state_bound - 0.15, verifies the result on the true rollout, and tightens
// in -0.05 steps on failure. Throws BenchmarkUnavailable below bound 0.3.
Vec find_initial_inputs(const OcpSpec& spec = {});

// Full benchmark: decision variables are the stacked inputs, the cost is
// queryable only, so the problem is epigraph-lifted (dim 2H + 1). State
// bounds apply to x_1..x_H and input bounds to u_1..u_{H-1}; u_0 is free.
BenchmarkInstance make_ocp(const OcpSpec& spec = {});

}  // namespace szoqq::bench

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <vector>

#include "szoqq/types.hpp"

namespace szoqq {

// Known objective of the form
//   f0(x) = sum_j quad_diag[j] x_j^2 + linear . x + offset
// with quad_diag >= 0 elementwise (affine when quad_diag is empty or zero).
struct KnownObjective {
  Vec linear;
  Vec quad_diag;  // empty means identically zero
  double offset = 0.0;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  bool is_affine() const;
};

// Per-constraint smoothness bounds: L_i bounds |f_i(x) - f_i(y)| / |x - y|,
// M_i bounds |grad f_i(x) - grad f_i(y)| / |x - y|. All entries positive.
struct SmoothnessConstants {
  SmoothnessConstants(Vec l, Vec m);

  const Vec& l() const { return l_; }
  const Vec& m() const { return m_; }
  double l(int i) const { return l_(i - 1); }  // 1-based
  double m(int i) const { return m_(i - 1); }
  int size() const { return static_cast<int>(l_.size()); }
  double l_max() const;

  // Returns a copy with every L_i and M_i multiplied by factor > 1.
  SmoothnessConstants scaled(double factor) const;

 private:
  Vec l_;
  Vec m_;
};

struct QueryRecord {
  std::int64_t eval_index;  // append order, 0-based
  int constraint;           // 1-based
  Vec point;
  double value;
  double timestamp;  // seconds since ledger creation
};

// Append-only audit log of every oracle query made on behalf of a run.
// Appends are serialized; evaluations themselves may come from any thread.
class SafetyLedger {
 public:
  SafetyLedger();

  // Records one query. Returns its eval_index.
  std::int64_t record(int constraint, const Vec& point, double value);

  std::int64_t total_evals() const;
  // Number of recorded queries with value > 0.
  std::int64_t violation_count() const;
  // Same, restricted to constraint indices >= first (1-based). Lets callers
  // ignore synthetic constraints introduced by reformulation.
  std::int64_t violation_count_from(int first) const;

  std::vector<QueryRecord> entries() const;

  // Writes all stored entries as CSV: eval_index,constraint,x_0..x_{d-1},value,violated.
  void export_csv(std::ostream& os) const;

  // Optional streaming sink; every subsequent record() appends one CSV row.
  void attach_sink(std::ostream* sink);

  // Stops storing full records beyond this many entries (counters stay
  // exact). Default: unlimited.
  void set_storage_cap(std::int64_t cap);

 private:
  mutable std::mutex mutex_;
  std::vector<QueryRecord> entries_;
  std::vector<std::int64_t> violations_per_constraint_;
  std::int64_t total_ = 0;
  std::int64_t violations_ = 0;
  std::int64_t storage_cap_ = -1;
  std::ostream* sink_ = nullptr;
  std::chrono::steady_clock::time_point start_;
};

// Constraint oracle: pure function of (i, x) with i 1-based in 1..m.
using ConstraintOracle = std::function<double(int, const Vec&)>;

// A feasibility problem with known objective and black-box constraints.
// The feasible set is {x : f_i(x) <= 0 for all i}; x0 is strictly feasible.
struct BlackBoxProblem {
  int dim = 0;
  int num_constraints = 0;
  ConstraintOracle oracle;
  KnownObjective objective;
  Vec x0;
  // Leading constraints that were introduced by a reformulation (e.g. an
  // epigraph lift) rather than by the underlying application.
  int synthetic_constraints = 0;
};

// Evaluates f_i(x), records the query, and throws OracleError if the oracle
// returns a non-finite value.
double query(const BlackBoxProblem& p, SafetyLedger& ledger, int i, const Vec& x);

// Builds a problem and verifies f_i(x0) < 0 for every i with one oracle
// query per constraint (recorded in *ledger when given). Throws
// InfeasibleAnchor otherwise.
BlackBoxProblem make_problem(int dim, int num_constraints, ConstraintOracle oracle,
                             KnownObjective objective, Vec x0,
                             SafetyLedger* ledger = nullptr);

// A problem whose objective is available only through point queries.
struct QueryableObjectiveProblem {
  int dim = 0;
  int num_constraints = 0;
  ConstraintOracle oracle;
  std::function<double(const Vec&)> objective;
  Vec x0;
  double objective_l = 1.0;  // Lipschitz bound of the objective
  double objective_m = 1.0;  // gradient Lipschitz bound of the objective
};

struct EpigraphProblem {
  BlackBoxProblem problem;
  SmoothnessConstants constants;
  double initial_slack;  // gamma_0 - g0(x0)
};

// Lifts the unknown objective g0 into an extra coordinate gamma:
//   min gamma  s.t.  g0(x) - gamma <= 0  and  f_i(x) <= 0.
// The new constraint comes first (index 1) and is marked synthetic; its
// constants are L = objective_l + 1 and M = objective_m. The start point is
// (x0, g0(x0) + s0) with s0 = slack if given, else max(0.1, 0.01 |g0(x0)|).
EpigraphProblem epigraph_transform(const QueryableObjectiveProblem& qp,
                                   const SmoothnessConstants& constraint_constants,
                                   std::optional<double> slack = std::nullopt);

}  // namespace szoqq

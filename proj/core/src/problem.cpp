#include "szoqq/problem.hpp"

#include <cmath>
#include <ostream>
#include <utility>

#include <fmt/format.h>

namespace szoqq {

double KnownObjective::value(const Vec& x) const {
  double v = linear.dot(x) + offset;
  if (quad_diag.size() > 0) {
    v += quad_diag.dot(x.cwiseProduct(x));
  }
  return v;
}

Vec KnownObjective::gradient(const Vec& x) const {
  Vec g = linear;
  if (quad_diag.size() > 0) {
    g += 2.0 * quad_diag.cwiseProduct(x);
  }
  return g;
}

bool KnownObjective::is_affine() const {
  return quad_diag.size() == 0 || quad_diag.isZero(0.0);
}

SmoothnessConstants::SmoothnessConstants(Vec l, Vec m) : l_(std::move(l)), m_(std::move(m)) {
  if (l_.size() == 0 || l_.size() != m_.size()) {
    throw ContractViolation(fmt::format(
        "smoothness constants need matching nonempty L and M (got {} and {})", l_.size(),
        m_.size()));
  }
  for (Eigen::Index i = 0; i < l_.size(); ++i) {
    if (!(l_(i) > 0.0) || !(m_(i) > 0.0)) {
      throw ContractViolation(fmt::format(
          "smoothness constants must be strictly positive (constraint {}: L={}, M={})", i + 1,
          l_(i), m_(i)));
    }
  }
}

double SmoothnessConstants::l_max() const { return l_.maxCoeff(); }

SmoothnessConstants SmoothnessConstants::scaled(double factor) const {
  if (!(factor > 0.0)) {
    throw ContractViolation("scale factor must be positive");
  }
  return SmoothnessConstants(factor * l_, factor * m_);
}

SafetyLedger::SafetyLedger() : start_(std::chrono::steady_clock::now()) {}

namespace {

void write_csv_row(std::ostream& os, const QueryRecord& rec) {
  os << rec.eval_index << ',' << rec.constraint;
  for (Eigen::Index j = 0; j < rec.point.size(); ++j) {
    os << ',' << fmt::format("{}", rec.point(j));
  }
  os << ',' << fmt::format("{}", rec.value) << ',' << (rec.value > 0.0 ? 1 : 0) << '\n';
}

void write_csv_header(std::ostream& os, Eigen::Index dim) {
  os << "eval_index,constraint";
  for (Eigen::Index j = 0; j < dim; ++j) {
    os << ",x_" << j;
  }
  os << ",value,violated\n";
}

}  // namespace

std::int64_t SafetyLedger::record(int constraint, const Vec& point, double value) {
  const std::lock_guard<std::mutex> lock(mutex_);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  const std::int64_t index = total_++;
  if (value > 0.0) {
    ++violations_;
    if (constraint >= 1) {
      if (static_cast<std::size_t>(constraint) > violations_per_constraint_.size()) {
        violations_per_constraint_.resize(constraint, 0);
      }
      ++violations_per_constraint_[constraint - 1];
    }
  }
  if (storage_cap_ < 0 || static_cast<std::int64_t>(entries_.size()) < storage_cap_) {
    entries_.push_back(QueryRecord{index, constraint, point, value, elapsed});
  }
  if (sink_ != nullptr) {
    if (index == 0) {
      write_csv_header(*sink_, point.size());
    }
    write_csv_row(*sink_, QueryRecord{index, constraint, point, value, elapsed});
  }
  return index;
}

std::int64_t SafetyLedger::total_evals() const {
  const std::lock_guard<std::mutex> lock(mutex_);
  return total_;
}

std::int64_t SafetyLedger::violation_count() const {
  const std::lock_guard<std::mutex> lock(mutex_);
  return violations_;
}

std::int64_t SafetyLedger::violation_count_from(int first) const {
  const std::lock_guard<std::mutex> lock(mutex_);
  std::int64_t count = 0;
  for (std::size_t i = static_cast<std::size_t>(first > 0 ? first - 1 : 0);
       i < violations_per_constraint_.size(); ++i) {
    count += violations_per_constraint_[i];
  }
  return count;
}

std::vector<QueryRecord> SafetyLedger::entries() const {
  const std::lock_guard<std::mutex> lock(mutex_);
  return entries_;
}

void SafetyLedger::export_csv(std::ostream& os) const {
  const std::lock_guard<std::mutex> lock(mutex_);
  write_csv_header(os, entries_.empty() ? 0 : entries_.front().point.size());
  for (const QueryRecord& rec : entries_) {
    write_csv_row(os, rec);
  }
}

void SafetyLedger::attach_sink(std::ostream* sink) {
  const std::lock_guard<std::mutex> lock(mutex_);
  sink_ = sink;
}

void SafetyLedger::set_storage_cap(std::int64_t cap) {
  const std::lock_guard<std::mutex> lock(mutex_);
  storage_cap_ = cap;
}

double query(const BlackBoxProblem& p, SafetyLedger& ledger, int i, const Vec& x) {
  if (i < 1 || i > p.num_constraints) {
    throw ContractViolation(
        fmt::format("constraint index {} outside 1..{}", i, p.num_constraints));
  }
  if (x.size() != p.dim) {
    throw ContractViolation(
        fmt::format("query point has dimension {}, problem has {}", x.size(), p.dim));
  }
  const double value = p.oracle(i, x);
  if (!std::isfinite(value)) {
    ledger.record(i, x, value);
    throw OracleError(i, fmt::format("constraint {} returned non-finite value {}", i, value));
  }
  ledger.record(i, x, value);
  return value;
}

BlackBoxProblem make_problem(int dim, int num_constraints, ConstraintOracle oracle,
                             KnownObjective objective, Vec x0, SafetyLedger* ledger) {
  if (dim < 1 || num_constraints < 1) {
    throw ContractViolation("problem needs dim >= 1 and at least one constraint");
  }
  if (x0.size() != dim) {
    throw ContractViolation(
        fmt::format("start point has dimension {}, problem has {}", x0.size(), dim));
  }
  if (objective.linear.size() != dim ||
      (objective.quad_diag.size() != 0 && objective.quad_diag.size() != dim)) {
    throw ContractViolation("objective coefficients do not match the problem dimension");
  }
  if (objective.quad_diag.size() > 0 && objective.quad_diag.minCoeff() < 0.0) {
    throw ContractViolation("objective curvature must be nonnegative");
  }
  BlackBoxProblem p;
  p.dim = dim;
  p.num_constraints = num_constraints;
  p.oracle = std::move(oracle);
  p.objective = std::move(objective);
  p.x0 = std::move(x0);

  SafetyLedger scratch;
  SafetyLedger& check_ledger = (ledger != nullptr) ? *ledger : scratch;
  for (int i = 1; i <= num_constraints; ++i) {
    const double v = query(p, check_ledger, i, p.x0);
    if (!(v < 0.0)) {
      throw InfeasibleAnchor(
          i, v, fmt::format("start point is not strictly feasible: f_{}(x0) = {}", i, v));
    }
  }
  return p;
}

EpigraphProblem epigraph_transform(const QueryableObjectiveProblem& qp,
                                   const SmoothnessConstants& constraint_constants,
                                   std::optional<double> slack) {
  if (qp.dim < 1 || qp.num_constraints < 1 || !qp.oracle || !qp.objective) {
    throw ContractViolation("epigraph transform needs a complete problem");
  }
  if (constraint_constants.size() != qp.num_constraints) {
    throw ContractViolation(fmt::format("expected {} constraint constants, got {}",
                                        qp.num_constraints, constraint_constants.size()));
  }
  if (qp.x0.size() != qp.dim) {
    throw ContractViolation("start point dimension mismatch");
  }
  const double f0_x0 = qp.objective(qp.x0);
  if (!std::isfinite(f0_x0)) {
    throw OracleError(0, fmt::format("objective returned non-finite value {}", f0_x0));
  }
  const double s0 = slack.value_or(std::max(0.1, 0.01 * std::abs(f0_x0)));
  if (!(s0 > 0.0)) {
    throw ContractViolation("epigraph slack must be positive");
  }

  const int dim = qp.dim + 1;
  const int m = qp.num_constraints + 1;

  Vec x0(dim);
  x0.head(qp.dim) = qp.x0;
  x0(qp.dim) = f0_x0 + s0;

  KnownObjective objective;
  objective.linear = Vec::Zero(dim);
  objective.linear(qp.dim) = 1.0;

  auto inner_oracle = qp.oracle;
  auto inner_objective = qp.objective;
  const int inner_dim = qp.dim;
  ConstraintOracle oracle = [inner_oracle, inner_objective, inner_dim](int i, const Vec& x) {
    const Vec point = x.head(inner_dim);
    if (i == 1) {
      return inner_objective(point) - x(inner_dim);
    }
    return inner_oracle(i - 1, point);
  };

  Vec l(m);
  Vec m_vec(m);
  l(0) = qp.objective_l + 1.0;
  m_vec(0) = std::max(qp.objective_m, 1e-12);
  l.tail(qp.num_constraints) = constraint_constants.l();
  m_vec.tail(qp.num_constraints) = constraint_constants.m();

  EpigraphProblem out{
      make_problem(dim, m, std::move(oracle), std::move(objective), std::move(x0)),
      SmoothnessConstants(std::move(l), std::move(m_vec)), s0};
  out.problem.synthetic_constraints = 1;
  return out;
}

}  // namespace szoqq

#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "szoqq/problem.hpp"
#include "szoqq/types.hpp"

using szoqq::BlackBoxProblem;
using szoqq::ContractViolation;
using szoqq::EpigraphProblem;
using szoqq::InfeasibleAnchor;
using szoqq::KnownObjective;
using szoqq::OracleError;
using szoqq::QueryableObjectiveProblem;
using szoqq::SafetyLedger;
using szoqq::SmoothnessConstants;
using szoqq::Vec;

namespace {

KnownObjective linear_objective(std::initializer_list<double> coeffs) {
  KnownObjective obj;
  obj.linear = Vec(static_cast<Eigen::Index>(coeffs.size()));
  Eigen::Index i = 0;
  for (double c : coeffs) {
    obj.linear(i++) = c;
  }
  return obj;
}

}  // namespace

TEST_CASE("known objective evaluates value and gradient of its model") {
  KnownObjective obj;
  obj.linear = (Vec(2) << 3.0, -1.0).finished();
  obj.quad_diag = (Vec(2) << 0.5, 2.0).finished();
  obj.offset = 4.0;

  const Vec x = (Vec(2) << 2.0, -3.0).finished();
  // 3*2 - 1*(-3) + 0.5*4 + 2*9 + 4 = 6 + 3 + 2 + 18 + 4
  CHECK(obj.value(x) == doctest::Approx(33.0).epsilon(1e-15));
  const Vec g = obj.gradient(x);
  CHECK(g(0) == doctest::Approx(3.0 + 2.0 * 0.5 * 2.0).epsilon(1e-15));
  CHECK(g(1) == doctest::Approx(-1.0 + 2.0 * 2.0 * (-3.0)).epsilon(1e-15));
  CHECK_FALSE(obj.is_affine());

  KnownObjective affine = linear_objective({1.0, 2.0});
  CHECK(affine.is_affine());
  affine.quad_diag = Vec::Zero(2);
  CHECK(affine.is_affine());
}

TEST_CASE("smoothness constants validate, index from one, and scale") {
  const SmoothnessConstants c((Vec(2) << 3.0, 5.0).finished(), (Vec(2) << 1.0, 2.0).finished());
  CHECK(c.size() == 2);
  CHECK(c.l(1) == 3.0);
  CHECK(c.l(2) == 5.0);
  CHECK(c.m(1) == 1.0);
  CHECK(c.m(2) == 2.0);
  CHECK(c.l_max() == 5.0);

  const SmoothnessConstants doubled = c.scaled(2.0);
  CHECK(doubled.l(1) == 6.0);
  CHECK(doubled.m(2) == 4.0);

  CHECK_THROWS_AS(SmoothnessConstants(Vec(), Vec()), ContractViolation);
  CHECK_THROWS_AS(SmoothnessConstants(Vec::Ones(2), Vec::Ones(3)), ContractViolation);
  CHECK_THROWS_AS(SmoothnessConstants((Vec(1) << 0.0).finished(), Vec::Ones(1)),
                  ContractViolation);
  CHECK_THROWS_AS(SmoothnessConstants(Vec::Ones(1), (Vec(1) << -2.0).finished()),
                  ContractViolation);
  CHECK_THROWS_AS(c.scaled(0.0), ContractViolation);
  CHECK_THROWS_AS(c.scaled(-1.0), ContractViolation);
}

TEST_CASE("safety ledger counts every query and flags positive values") {
  SafetyLedger ledger;
  const Vec p = (Vec(2) << 0.25, 0.5).finished();
  CHECK(ledger.record(1, p, -1.0) == 0);
  CHECK(ledger.record(2, p, 0.0) == 1);
  CHECK(ledger.record(2, p, 0.5) == 2);
  CHECK(ledger.record(3, p, 1e-12) == 3);

  CHECK(ledger.total_evals() == 4);
  // Only strictly positive values are violations; zero is boundary-feasible.
  CHECK(ledger.violation_count() == 2);
  CHECK(ledger.violation_count_from(1) == 2);
  CHECK(ledger.violation_count_from(2) == 2);
  CHECK(ledger.violation_count_from(3) == 1);
  CHECK(ledger.violation_count_from(4) == 0);

  const auto entries = ledger.entries();
  REQUIRE(entries.size() == 4);
  CHECK(entries[2].constraint == 2);
  CHECK(entries[2].value == 0.5);
  CHECK(entries[2].eval_index == 2);
  CHECK(entries[3].timestamp >= entries[0].timestamp);
}

TEST_CASE("safety ledger caps stored rows but keeps exact counters") {
  SafetyLedger ledger;
  ledger.set_storage_cap(2);
  const Vec p = Vec::Zero(1);
  for (int i = 0; i < 5; ++i) {
    ledger.record(1, p, i == 3 ? 1.0 : -1.0);
  }
  CHECK(ledger.total_evals() == 5);
  CHECK(ledger.violation_count() == 1);
  CHECK(ledger.entries().size() == 2);
}

TEST_CASE("safety ledger exports its log as csv") {
  SafetyLedger ledger;
  const Vec a = (Vec(2) << 0.25, 0.5).finished();
  const Vec b = (Vec(2) << -1.0, 2.0).finished();
  ledger.record(1, a, -0.5);
  ledger.record(2, b, 1.5);

  std::ostringstream os;
  ledger.export_csv(os);
  CHECK(os.str() ==
        "eval_index,constraint,x_0,x_1,value,violated\n"
        "0,1,0.25,0.5,-0.5,0\n"
        "1,2,-1,2,1.5,1\n");
}

TEST_CASE("safety ledger streams rows to an attached sink") {
  SafetyLedger ledger;
  std::ostringstream sink;
  ledger.attach_sink(&sink);
  ledger.set_storage_cap(0);

  const Vec p = Vec::Constant(1, 2.0);
  ledger.record(1, p, -3.0);
  ledger.record(1, p, 0.25);
  CHECK(ledger.entries().empty());
  CHECK(sink.str() ==
        "eval_index,constraint,x_0,value,violated\n"
        "0,1,2,-3,0\n"
        "1,1,2,0.25,1\n");
}

TEST_CASE("query validates the constraint index and point dimension") {
  SafetyLedger ledger;
  const BlackBoxProblem p = szoqq::make_problem(
      2, 2, [](int i, const Vec& x) { return i == 1 ? x(0) - 1.0 : x(1) - 1.0; },
      linear_objective({1.0, 0.0}), Vec::Zero(2));

  CHECK(szoqq::query(p, ledger, 1, Vec::Zero(2)) == -1.0);
  CHECK_THROWS_AS(szoqq::query(p, ledger, 0, Vec::Zero(2)), ContractViolation);
  CHECK_THROWS_AS(szoqq::query(p, ledger, 3, Vec::Zero(2)), ContractViolation);
  CHECK_THROWS_AS(szoqq::query(p, ledger, 1, Vec::Zero(3)), ContractViolation);
}

TEST_CASE("query records non-finite answers before raising them") {
  SafetyLedger ledger;
  const BlackBoxProblem p = szoqq::make_problem(
      1, 1,
      [](int, const Vec& x) {
        return x(0) > 0.5 ? std::numeric_limits<double>::quiet_NaN() : x(0) - 1.0;
      },
      linear_objective({1.0}), Vec::Zero(1));
  const std::int64_t before = ledger.total_evals();

  try {
    szoqq::query(p, ledger, 1, Vec::Constant(1, 1.0));
    FAIL("expected an oracle error");
  } catch (const OracleError& e) {
    CHECK(e.constraint == 1);
  }
  // The failed probe still landed on the ledger.
  CHECK(ledger.total_evals() == before + 1);
}

TEST_CASE("make_problem rejects malformed or infeasible starts") {
  auto oracle = [](int, const Vec& x) { return x(0) - 1.0; };

  CHECK_THROWS_AS(szoqq::make_problem(0, 1, oracle, linear_objective({1.0}), Vec::Zero(1)),
                  ContractViolation);
  CHECK_THROWS_AS(szoqq::make_problem(1, 0, oracle, linear_objective({1.0}), Vec::Zero(1)),
                  ContractViolation);
  CHECK_THROWS_AS(szoqq::make_problem(1, 1, oracle, linear_objective({1.0}), Vec::Zero(2)),
                  ContractViolation);
  CHECK_THROWS_AS(szoqq::make_problem(2, 1, oracle, linear_objective({1.0}), Vec::Zero(2)),
                  ContractViolation);

  KnownObjective concave = linear_objective({1.0});
  concave.quad_diag = Vec::Constant(1, -0.5);
  CHECK_THROWS_AS(szoqq::make_problem(1, 1, oracle, concave, Vec::Zero(1)), ContractViolation);

  // The start must be strictly feasible: the boundary is rejected.
  try {
    szoqq::make_problem(1, 1, oracle, linear_objective({1.0}), Vec::Constant(1, 1.0));
    FAIL("expected an infeasible-start rejection");
  } catch (const InfeasibleAnchor& e) {
    CHECK(e.constraint == 1);
    CHECK(e.value == 0.0);
  }
}

TEST_CASE("make_problem probes the start point through the supplied ledger") {
  SafetyLedger ledger;
  szoqq::make_problem(
      2, 3, [](int i, const Vec&) { return -static_cast<double>(i); }, linear_objective({1.0, 0.0}),
      Vec::Zero(2), &ledger);
  CHECK(ledger.total_evals() == 3);
  CHECK(ledger.violation_count() == 0);
}

TEST_CASE("epigraph lift adds one synthetic constraint ahead of the others") {
  QueryableObjectiveProblem qp;
  qp.dim = 2;
  qp.num_constraints = 2;
  qp.oracle = [](int i, const Vec& x) { return i == 1 ? x(0) - 1.0 : x(1) - 1.0; };
  qp.objective = [](const Vec& x) { return x(0) + 10.0 * x(1); };
  qp.x0 = (Vec(2) << 0.5, -2.0).finished();
  qp.objective_l = 11.0;
  qp.objective_m = 0.25;

  const SmoothnessConstants inner((Vec(2) << 1.0, 1.0).finished(),
                                  (Vec(2) << 2.0, 3.0).finished());

  SUBCASE("default slack scales with the initial objective") {
    const EpigraphProblem ep = szoqq::epigraph_transform(qp, inner);
    const double f0 = 0.5 - 20.0;
    CHECK(ep.problem.dim == 3);
    CHECK(ep.problem.num_constraints == 3);
    CHECK(ep.problem.synthetic_constraints == 1);
    CHECK(ep.initial_slack == doctest::Approx(std::max(0.1, 0.01 * std::abs(f0))).epsilon(1e-15));
    CHECK(ep.problem.x0(0) == 0.5);
    CHECK(ep.problem.x0(1) == -2.0);
    CHECK(ep.problem.x0(2) == doctest::Approx(f0 + ep.initial_slack).epsilon(1e-15));

    // The lifted objective is the epigraph coordinate itself.
    const Vec probe = (Vec(3) << 7.0, 8.0, 9.0).finished();
    CHECK(ep.problem.objective.value(probe) == 9.0);
    CHECK(ep.problem.objective.is_affine());

    // Constraint 1 is (hidden objective) - gamma; the rest pass through.
    CHECK(ep.problem.oracle(1, probe) == doctest::Approx(7.0 + 80.0 - 9.0).epsilon(1e-15));
    CHECK(ep.problem.oracle(2, probe) == 6.0);
    CHECK(ep.problem.oracle(3, probe) == 7.0);

    // Smoothness constants: the new constraint inherits the objective's with
    // the epigraph coordinate adding one to the value-Lipschitz bound.
    CHECK(ep.constants.size() == 3);
    CHECK(ep.constants.l(1) == 12.0);
    CHECK(ep.constants.m(1) == 0.25);
    CHECK(ep.constants.l(2) == 1.0);
    CHECK(ep.constants.m(3) == 3.0);
  }

  SUBCASE("explicit slack is honored") {
    const EpigraphProblem ep = szoqq::epigraph_transform(qp, inner, 0.75);
    CHECK(ep.initial_slack == 0.75);
    CHECK(ep.problem.x0(2) == doctest::Approx(0.5 - 20.0 + 0.75).epsilon(1e-15));
  }

  SUBCASE("contract violations are rejected") {
    CHECK_THROWS_AS(szoqq::epigraph_transform(qp, inner, -0.5), ContractViolation);
    const SmoothnessConstants wrong(Vec::Ones(3), Vec::Ones(3));
    CHECK_THROWS_AS(szoqq::epigraph_transform(qp, wrong), ContractViolation);
    QueryableObjectiveProblem incomplete = qp;
    incomplete.objective = nullptr;
    CHECK_THROWS_AS(szoqq::epigraph_transform(incomplete, inner), ContractViolation);
  }
}

#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "doctest.h"
#include "szoqq/driver.hpp"
#include "szoqq/problem.hpp"
#include "szoqq/trace_io.hpp"
#include "szoqq/types.hpp"

using szoqq::ContractViolation;
using szoqq::IterationRecord;
using szoqq::SafetyLedger;
using szoqq::SolveTrace;
using szoqq::Vec;

namespace {

IterationRecord make_record(int k, double x0, double x1, double objective, double increment,
                            double l_star, double nu_star, std::int64_t evals, double wall) {
  IterationRecord rec;
  rec.k = k;
  rec.x = (Vec(2) << x0, x1).finished();
  rec.objective = objective;
  rec.increment = increment;
  rec.l_star = l_star;
  rec.nu_star = nu_star;
  rec.oracle_evals = evals;
  rec.wall_time = wall;
  return rec;
}

SolveTrace make_two_row_trace() {
  SolveTrace trace;
  trace.iterations.push_back(make_record(0, 0.5, -1.25, 3.0, 0.1, 0.0625, 0.001, 9, 0.0));
  trace.iterations.push_back(make_record(1, 0.25, 2.0, -1.5, 0.75, 0.125, 0.03125, 18, 0.5));
  trace.final_point = (Vec(2) << 0.25, 1.75).finished();
  trace.final_objective = -1.625;
  trace.terminated = true;
  return trace;
}

}  // namespace

TEST_CASE("trace header lists one column per coordinate") {
  CHECK(szoqq::trace_csv_header(2) ==
        "k,x_0,x_1,f0,increment,l_star,nu_star,oracle_evals,wall_time_s");
  CHECK(szoqq::trace_csv_header(1) == "k,x_0,f0,increment,l_star,nu_star,oracle_evals,wall_time_s");
}

TEST_CASE("trace rows serialize with shortest round-trip decimals") {
  const SolveTrace trace = make_two_row_trace();
  std::ostringstream os;
  szoqq::write_trace_csv(os, trace, 2);
  CHECK(os.str() ==
        "k,x_0,x_1,f0,increment,l_star,nu_star,oracle_evals,wall_time_s\n"
        "0,0.5,-1.25,3,0.1,0.0625,0.001,9,0\n"
        "1,0.25,2,-1.5,0.75,0.125,0.03125,18,0.5\n");

  // Serialization is byte-deterministic.
  std::ostringstream again;
  szoqq::write_trace_csv(again, trace, 2);
  CHECK(again.str() == os.str());
}

TEST_CASE("trace rows must match the declared dimension") {
  SolveTrace trace = make_two_row_trace();
  trace.iterations[1].x = Vec::Zero(3);
  std::ostringstream os;
  CHECK_THROWS_AS(szoqq::write_trace_csv(os, trace, 2), ContractViolation);
}

TEST_CASE("summary reports the last recorded objective and the terminal point separately") {
  SolveTrace trace = make_two_row_trace();
  trace.k_bar = 42.5;
  trace.final_kkt = szoqq::KktResidual{1e-3, 2e-5};
  trace.escalations = 3;

  SafetyLedger ledger;
  ledger.record(1, (Vec(2) << 0.0, 0.0).finished(), -1.0);
  ledger.record(2, (Vec(2) << 0.5, 0.0).finished(), 0.25);
  ledger.record(1, (Vec(2) << 0.0, 0.5).finished(), -0.5);

  std::ostringstream os;
  szoqq::write_summary_json(os, "demo", "szoqq", trace, ledger);
  const nlohmann::ordered_json out = nlohmann::ordered_json::parse(os.str());

  const std::vector<std::string> expected_order = {
      "benchmark",       "method",      "final_objective", "final_point",
      "final_point_objective", "iterations",  "K",               "K_bar",
      "terminated",      "violation_count", "total_evals",     "escalations",
      "final_kkt"};
  std::vector<std::string> order;
  for (auto it = out.begin(); it != out.end(); ++it) {
    order.push_back(it.key());
  }
  CHECK(order == expected_order);

  CHECK(out["benchmark"] == "demo");
  CHECK(out["method"] == "szoqq");
  // The summary's final_objective mirrors the last trace row; the point one
  // step later carries its own objective.
  CHECK(out["final_objective"].get<double>() == -1.5);
  CHECK(out["final_point"].size() == 2);
  CHECK(out["final_point"][0].get<double>() == 0.25);
  CHECK(out["final_point"][1].get<double>() == 1.75);
  CHECK(out["final_point_objective"].get<double>() == -1.625);
  CHECK(out["iterations"].get<int>() == 2);
  CHECK(out["K"].get<int>() == 2);
  CHECK(out["K_bar"].get<double>() == 42.5);
  CHECK(out["terminated"].get<bool>() == true);
  CHECK(out["violation_count"].get<int>() == 1);
  CHECK(out["total_evals"].get<int>() == 3);
  CHECK(out["escalations"].get<int>() == 3);
  CHECK(out["final_kkt"]["stationarity"].get<double>() == 1e-3);
  CHECK(out["final_kkt"]["complementarity"].get<double>() == 2e-5);

  // Byte-deterministic output.
  std::ostringstream again;
  szoqq::write_summary_json(again, "demo", "szoqq", trace, ledger);
  CHECK(again.str() == os.str());
}

TEST_CASE("summary of an empty run uses the terminal objective and null optionals") {
  SolveTrace trace;
  trace.final_point = Vec::Constant(1, 0.5);
  trace.final_objective = 7.0;

  SafetyLedger ledger;
  std::ostringstream os;
  szoqq::write_summary_json(os, "empty", "lbm-baseline", trace, ledger);
  const nlohmann::json out = nlohmann::json::parse(os.str());

  CHECK(out["final_objective"].get<double>() == 7.0);
  CHECK(out["iterations"].get<int>() == 0);
  CHECK(out["K_bar"].is_null());
  CHECK(out["final_kkt"].is_null());
  CHECK(out["terminated"].get<bool>() == false);
  CHECK(out["violation_count"].get<int>() == 0);
  CHECK(out["total_evals"].get<int>() == 0);
  CHECK(out["escalations"].get<int>() == 0);
}

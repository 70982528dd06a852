#include "szoqq/trace_io.hpp"

#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "szoqq/types.hpp"

namespace szoqq {

std::string trace_csv_header(int dim) {
  std::string header = "k";
  for (int j = 0; j < dim; ++j) {
    header += fmt::format(",x_{}", j);
  }
  header += ",f0,increment,l_star,nu_star,oracle_evals,wall_time_s";
  return header;
}

void write_trace_csv(std::ostream& os, const SolveTrace& trace, int dim) {
  os << trace_csv_header(dim) << '\n';
  for (const IterationRecord& rec : trace.iterations) {
    if (rec.x.size() != dim) {
      throw ContractViolation(fmt::format("trace row {} has dimension {}, expected {}", rec.k,
                                          rec.x.size(), dim));
    }
    os << rec.k;
    for (int j = 0; j < dim; ++j) {
      os << ',' << fmt::format("{}", rec.x(j));
    }
    os << ',' << fmt::format("{}", rec.objective) << ',' << fmt::format("{}", rec.increment)
       << ',' << fmt::format("{}", rec.l_star) << ',' << fmt::format("{}", rec.nu_star) << ','
       << rec.oracle_evals << ',' << fmt::format("{}", rec.wall_time) << '\n';
  }
}

void write_summary_json(std::ostream& os, const std::string& benchmark, const std::string& method,
                        const SolveTrace& trace, const SafetyLedger& ledger) {
  nlohmann::ordered_json out;
  out["benchmark"] = benchmark;
  out["method"] = method;
  // final_objective mirrors the trace file exactly: the objective at the
  // start of the last recorded iteration. The terminal point (one step
  // later) gets its own pair of fields.
  out["final_objective"] =
      trace.iterations.empty() ? trace.final_objective : trace.iterations.back().objective;
  nlohmann::ordered_json point = nlohmann::ordered_json::array();
  for (Eigen::Index j = 0; j < trace.final_point.size(); ++j) {
    point.push_back(trace.final_point(j));
  }
  out["final_point"] = std::move(point);
  out["final_point_objective"] = trace.final_objective;
  out["iterations"] = trace.iterations.size();
  out["K"] = trace.iterations.size();
  if (trace.k_bar.has_value()) {
    out["K_bar"] = *trace.k_bar;
  } else {
    out["K_bar"] = nullptr;
  }
  out["terminated"] = trace.terminated;
  out["violation_count"] = ledger.violation_count();
  out["total_evals"] = ledger.total_evals();
  out["escalations"] = trace.escalations;
  if (trace.final_kkt.has_value()) {
    out["final_kkt"] = {{"stationarity", trace.final_kkt->stationarity},
                        {"complementarity", trace.final_kkt->complementarity}};
  } else {
    out["final_kkt"] = nullptr;
  }
  os << out.dump(2) << '\n';
}

}  // namespace szoqq

#pragma once

#include <iosfwd>
#include <string>

#include "szoqq/driver.hpp"
#include "szoqq/problem.hpp"

namespace szoqq {

// Column header for a trace with points of the given dimension:
// k,x_0..x_{dim-1},f0,increment,l_star,nu_star,oracle_evals,wall_time_s
std::string trace_csv_header(int dim);

// One row per iteration record, floats as shortest round-trip decimals.
// Deterministic except for the wall_time_s column.
void write_trace_csv(std::ostream& os, const SolveTrace& trace, int dim);

// Fixed-schema run summary. final_objective repeats the last trace row's
// objective; the terminal point and its objective get their own fields.
void write_summary_json(std::ostream& os, const std::string& benchmark,
                        const std::string& method, const SolveTrace& trace,
                        const SafetyLedger& ledger);

}  // namespace szoqq

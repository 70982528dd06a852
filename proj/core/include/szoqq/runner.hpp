#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "szoqq/bench.hpp"
#include "szoqq/types.hpp"

namespace szoqq {

// Process exit codes shared by the library runner and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitViolation = 2;
inline constexpr int kExitSolveFailure = 3;

// One run: a benchmark, a method, and optional overrides of the benchmark's
// suggested parameters. Parsed from a JSON config file.
struct RunConfig {
  std::string benchmark;
  std::string method = "szoqq";  // "szoqq" or "lbm-baseline" ("lbm" accepted)
  std::optional<double> mu;
  std::optional<double> xi;
  std::optional<int> max_iters;
  std::optional<Vec> l_override;  // scalar configs broadcast to all constraints
  std::optional<Vec> m_override;
  std::optional<bool> escalation;
  std::string trace_csv;     // empty: no file
  std::string summary_json;  // empty: no file
  std::string ledger_csv;    // empty: no file
  std::uint64_t seed = 0;    // random benchmark family only
  int random_dim = 2;
  int random_constraints = 3;
  bench::OcpSpec ocp;
  bool quiet = false;
};

// Names accepted in RunConfig::benchmark.
std::vector<std::string> benchmark_names();

// Builds the named benchmark, applying config overrides where relevant.
bench::BenchmarkInstance make_benchmark(const RunConfig& config);

// Parses a JSON config file. Throws ContractViolation with a line-oriented
// message on malformed input.
RunConfig parse_run_config(const std::string& path);

// Config with the benchmark's suggested parameters, ready to run.
RunConfig default_run_config(const std::string& benchmark, const std::string& method = "szoqq");

// Validates a config without running it: checks the benchmark exists and
// builds, prints a one-line report. Returns an exit code.
int check(const RunConfig& config);

// Executes one run end to end: build, solve, write outputs, print a
// summary line. Returns an exit code (kExit*). A recorded safety violation
// maps to kExitViolation, solver breakdown to kExitSolveFailure.
int run(const RunConfig& config);

// Runs several configs, at most jobs at a time. Returns the worst exit code.
int run_batch(const std::vector<RunConfig>& configs, int jobs);

}  // namespace szoqq

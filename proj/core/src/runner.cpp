#include "szoqq/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "szoqq/driver.hpp"
#include "szoqq/trace_io.hpp"

namespace szoqq {

namespace {

// Ledger storage is bounded when no CSV sink was requested; the counters
// stay exact regardless.
constexpr std::int64_t kDefaultLedgerCap = 1000000;

Vec broadcast(const Vec& v, int m, const char* what) {
  if (v.size() == m) {
    return v;
  }
  if (v.size() == 1) {
    return Vec::Constant(m, v(0));
  }
  throw ContractViolation(
      fmt::format("{} override has {} entries, the problem has {} constraints", what, v.size(), m));
}

// Canonical method spelling, or nullopt for an unknown method.
std::optional<std::string> canonical_method(const std::string& method) {
  if (method == "szoqq") {
    return "szoqq";
  }
  if (method == "lbm-baseline" || method == "lbm") {
    return "lbm-baseline";
  }
  return std::nullopt;
}

int first_violated_constraint(const SafetyLedger& ledger, int num_constraints) {
  for (int i = 1; i <= num_constraints; ++i) {
    if (ledger.violation_count_from(i) - ledger.violation_count_from(i + 1) > 0) {
      return i;
    }
  }
  return 0;
}

int violation_exit(const SafetyLedger& ledger, int num_constraints, const std::string& benchmark) {
  const int constraint = first_violated_constraint(ledger, num_constraints);
  fmt::print(stderr, "{}: safety violation recorded on constraint {} ({} violating queries)\n",
             benchmark, constraint, ledger.violation_count());
  return kExitViolation;
}

double json_number(const nlohmann::json& j, const std::string& key) {
  if (!j.at(key).is_number()) {
    throw ContractViolation(fmt::format("config key '{}' must be a number", key));
  }
  return j.at(key).get<double>();
}

int json_int(const nlohmann::json& j, const std::string& key) {
  if (!j.at(key).is_number_integer()) {
    throw ContractViolation(fmt::format("config key '{}' must be an integer", key));
  }
  return j.at(key).get<int>();
}

std::string json_string(const nlohmann::json& j, const std::string& key) {
  if (!j.at(key).is_string()) {
    throw ContractViolation(fmt::format("config key '{}' must be a string", key));
  }
  return j.at(key).get<std::string>();
}

bool json_bool(const nlohmann::json& j, const std::string& key) {
  if (!j.at(key).is_boolean()) {
    throw ContractViolation(fmt::format("config key '{}' must be a boolean", key));
  }
  return j.at(key).get<bool>();
}

std::optional<Vec> json_constants(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) {
    return std::nullopt;
  }
  const nlohmann::json& v = j.at(key);
  if (v.is_number()) {
    return Vec::Constant(1, v.get<double>());
  }
  if (v.is_array()) {
    Vec out(v.size());
    Eigen::Index idx = 0;
    for (const nlohmann::json& entry : v) {
      if (!entry.is_number()) {
        throw ContractViolation(fmt::format("config key '{}' must contain only numbers", key));
      }
      out(idx++) = entry.get<double>();
    }
    if (out.size() == 0) {
      throw ContractViolation(fmt::format("config key '{}' must not be an empty array", key));
    }
    return out;
  }
  throw ContractViolation(
      fmt::format("config key '{}' must be a number or an array of numbers", key));
}

}  // namespace

std::vector<std::string> benchmark_names() {
  return {"example1", "qcqp_2d", "qcqp_2d_epigraph", "random_qcqp", "ocp"};
}

bench::BenchmarkInstance make_benchmark(const RunConfig& config) {
  if (config.benchmark == "example1") {
    return bench::make_example1();
  }
  if (config.benchmark == "qcqp_2d") {
    return bench::make_qcqp_2d();
  }
  if (config.benchmark == "qcqp_2d_epigraph") {
    return bench::make_qcqp_2d_epigraph();
  }
  if (config.benchmark == "random_qcqp") {
    return bench::make_random_qcqp(config.random_dim, config.random_constraints, config.seed);
  }
  if (config.benchmark == "ocp") {
    return bench::make_ocp(config.ocp);
  }
  throw ContractViolation(fmt::format("unknown benchmark '{}' (known: {})", config.benchmark,
                                      fmt::join(benchmark_names(), ", ")));
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ContractViolation(fmt::format("cannot open config file '{}'", path));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
  if (!j.is_object()) {
    throw ContractViolation(fmt::format("config '{}' must be a JSON object", path));
  }

  static const std::set<std::string> known = {
      "benchmark",  "method",     "mu",           "xi",
      "max_iters",  "L",          "M",            "escalation",
      "trace_csv",  "summary_json", "ledger_csv", "seed",
      "random_dim", "random_constraints", "ocp",  "quiet"};
  for (const auto& item : j.items()) {
    if (known.find(item.key()) == known.end()) {
      throw ContractViolation(fmt::format("unknown config key '{}'", item.key()));
    }
  }

  RunConfig cfg;
  if (!j.contains("benchmark")) {
    throw ContractViolation("config needs a 'benchmark' key");
  }
  cfg.benchmark = json_string(j, "benchmark");
  if (j.contains("method")) {
    cfg.method = json_string(j, "method");
  }
  if (j.contains("mu")) {
    cfg.mu = json_number(j, "mu");
  }
  if (j.contains("xi")) {
    cfg.xi = json_number(j, "xi");
  }
  if (j.contains("max_iters")) {
    cfg.max_iters = json_int(j, "max_iters");
  }
  cfg.l_override = json_constants(j, "L");
  cfg.m_override = json_constants(j, "M");
  if (j.contains("escalation")) {
    cfg.escalation = json_bool(j, "escalation");
  }
  if (j.contains("trace_csv")) {
    cfg.trace_csv = json_string(j, "trace_csv");
  }
  if (j.contains("summary_json")) {
    cfg.summary_json = json_string(j, "summary_json");
  }
  if (j.contains("ledger_csv")) {
    cfg.ledger_csv = json_string(j, "ledger_csv");
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
      throw ContractViolation("config key 'seed' must be a nonnegative integer");
    }
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("random_dim")) {
    cfg.random_dim = json_int(j, "random_dim");
  }
  if (j.contains("random_constraints")) {
    cfg.random_constraints = json_int(j, "random_constraints");
  }
  if (j.contains("quiet")) {
    cfg.quiet = json_bool(j, "quiet");
  }
  if (j.contains("ocp")) {
    const nlohmann::json& o = j.at("ocp");
    if (!o.is_object()) {
      throw ContractViolation("config key 'ocp' must be an object");
    }
    static const std::set<std::string> ocp_known = {"horizon", "state_bound", "input_bound",
                                                    "disturbance_coeff"};
    for (const auto& item : o.items()) {
      if (ocp_known.find(item.key()) == ocp_known.end()) {
        throw ContractViolation(fmt::format("unknown config key 'ocp.{}'", item.key()));
      }
    }
    if (o.contains("horizon")) {
      cfg.ocp.horizon = json_int(o, "horizon");
    }
    if (o.contains("state_bound")) {
      cfg.ocp.state_bound = json_number(o, "state_bound");
    }
    if (o.contains("input_bound")) {
      cfg.ocp.input_bound = json_number(o, "input_bound");
    }
    if (o.contains("disturbance_coeff")) {
      cfg.ocp.disturbance_coeff = json_number(o, "disturbance_coeff");
    }
  }
  return cfg;
}

RunConfig default_run_config(const std::string& benchmark, const std::string& method) {
  RunConfig cfg;
  cfg.benchmark = benchmark;
  cfg.method = method;
  return cfg;
}

int check(const RunConfig& config) {
  const std::optional<std::string> method = canonical_method(config.method);
  if (!method.has_value()) {
    fmt::print(stderr, "unknown method '{}' (known: szoqq, lbm-baseline)\n", config.method);
    return kExitUsage;
  }
  try {
    const bench::BenchmarkInstance inst = make_benchmark(config);
    const int m = inst.problem.num_constraints;
    const Vec l = config.l_override ? broadcast(*config.l_override, m, "L") : inst.meta.suggested_l;
    const Vec m_vec =
        config.m_override ? broadcast(*config.m_override, m, "M") : inst.meta.suggested_m;
    const SmoothnessConstants constants(l, m_vec);
    const double mu = config.mu.value_or(inst.meta.suggested_mu);
    const double xi = config.xi.value_or(inst.meta.suggested_xi);
    const int max_iters = config.max_iters.value_or(inst.meta.suggested_max_iters);
    if (!(mu > 0.0) || xi < 0.0 || max_iters < 1) {
      throw ContractViolation("need mu > 0, xi >= 0 and max_iters >= 1");
    }
    fmt::print("ok: benchmark {} (dim {}, {} constraints), method {}, mu={}, xi={}, max_iters={}\n",
               inst.meta.name, inst.problem.dim, m, *method, mu, xi, max_iters);
    return kExitOk;
  } catch (const ContractViolation& e) {
    fmt::print(stderr, "invalid config: {}\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    fmt::print(stderr, "cannot build benchmark: {}\n", e.what());
    return kExitSolveFailure;
  }
}

int run(const RunConfig& config) {
  const std::optional<std::string> method = canonical_method(config.method);
  if (!method.has_value()) {
    fmt::print(stderr, "unknown method '{}' (known: szoqq, lbm-baseline)\n", config.method);
    return kExitUsage;
  }

  bench::BenchmarkInstance inst;
  try {
    inst = make_benchmark(config);
  } catch (const ContractViolation& e) {
    fmt::print(stderr, "invalid config: {}\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    fmt::print(stderr, "cannot build benchmark: {}\n", e.what());
    return kExitSolveFailure;
  }

  std::optional<SmoothnessConstants> constants;
  DriverConfig driver_config;
  try {
    const int m = inst.problem.num_constraints;
    const Vec l = config.l_override ? broadcast(*config.l_override, m, "L") : inst.meta.suggested_l;
    const Vec m_vec =
        config.m_override ? broadcast(*config.m_override, m, "M") : inst.meta.suggested_m;
    constants.emplace(l, m_vec);
    driver_config.mu = config.mu.value_or(inst.meta.suggested_mu);
    driver_config.xi = config.xi.value_or(inst.meta.suggested_xi);
    driver_config.max_iters = config.max_iters.value_or(inst.meta.suggested_max_iters);
    driver_config.escalation_enabled = config.escalation.value_or(true);
  } catch (const ContractViolation& e) {
    fmt::print(stderr, "invalid config: {}\n", e.what());
    return kExitUsage;
  }

  SafetyLedger ledger;
  std::ofstream ledger_file;
  if (!config.ledger_csv.empty()) {
    ledger_file.open(config.ledger_csv);
    if (!ledger_file) {
      fmt::print(stderr, "cannot open '{}' for writing\n", config.ledger_csv);
      return kExitUsage;
    }
    ledger.attach_sink(&ledger_file);
    ledger.set_storage_cap(0);
  } else {
    ledger.set_storage_cap(kDefaultLedgerCap);
  }

  std::optional<double> infimum = inst.meta.known_optimum_value;
  if (!infimum.has_value()) {
    infimum = inst.meta.objective_lower_bound;
  }

  SolveTrace trace;
  try {
    if (*method == "szoqq") {
      trace = run_szoqq(inst.problem, *constants, driver_config, ledger, infimum);
    } else {
      trace = run_lbm_baseline(inst.problem, *constants, driver_config, ledger, infimum);
    }
  } catch (const InfeasibleAnchor& e) {
    fmt::print(stderr, "{}: solve stopped, constraint {} reached value {}: {}\n", inst.meta.name,
               e.constraint, e.value, e.what());
    if (ledger.violation_count() > 0) {
      return violation_exit(ledger, inst.problem.num_constraints, inst.meta.name);
    }
    return kExitSolveFailure;
  } catch (const ContractViolation& e) {
    fmt::print(stderr, "invalid config: {}\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    fmt::print(stderr, "{}: solve failed: {}\n", inst.meta.name, e.what());
    if (ledger.violation_count() > 0) {
      return violation_exit(ledger, inst.problem.num_constraints, inst.meta.name);
    }
    return kExitSolveFailure;
  }

  if (!config.trace_csv.empty()) {
    std::ofstream f(config.trace_csv);
    if (!f) {
      fmt::print(stderr, "cannot open '{}' for writing\n", config.trace_csv);
      return kExitUsage;
    }
    write_trace_csv(f, trace, inst.problem.dim);
  }
  if (!config.summary_json.empty()) {
    std::ofstream f(config.summary_json);
    if (!f) {
      fmt::print(stderr, "cannot open '{}' for writing\n", config.summary_json);
      return kExitUsage;
    }
    write_summary_json(f, inst.meta.name, *method, trace, ledger);
  }

  if (!config.quiet) {
    std::string kkt;
    if (trace.final_kkt.has_value()) {
      kkt = fmt::format(" kkt=({:.3e},{:.3e})", trace.final_kkt->stationarity,
                        trace.final_kkt->complementarity);
    }
    std::string escalations;
    if (trace.escalations > 0) {
      escalations = fmt::format(" escalations={}", trace.escalations);
    }
    fmt::print("{} {}: iterations={} final_objective={} violations={} evals={} terminated={}{}{}\n",
               inst.meta.name, *method, trace.iterations.size(), trace.final_objective,
               ledger.violation_count(), ledger.total_evals(), trace.terminated, kkt, escalations);
  }

  if (ledger.violation_count() > 0) {
    return violation_exit(ledger, inst.problem.num_constraints, inst.meta.name);
  }
  return kExitOk;
}

int run_batch(const std::vector<RunConfig>& configs, int jobs) {
  if (configs.empty()) {
    return kExitOk;
  }
  const int workers = std::clamp(jobs, 1, static_cast<int>(configs.size()));
  std::atomic<std::size_t> next{0};
  std::vector<int> codes(configs.size(), kExitOk);
  auto work = [&configs, &next, &codes] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) {
        break;
      }
      codes[i] = run(configs[i]);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 0; t + 1 < workers; ++t) {
    pool.emplace_back(work);
  }
  work();
  for (std::thread& t : pool) {
    t.join();
  }
  return *std::max_element(codes.begin(), codes.end());
}

}  // namespace szoqq

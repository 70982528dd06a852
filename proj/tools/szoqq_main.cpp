#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "szoqq/runner.hpp"

namespace {

bool is_method_name(const std::string& s) {
  return s == "szoqq" || s == "lbm-baseline" || s == "lbm";
}

// Flag overrides applied on top of a parsed config or a benchmark's defaults.
struct CliOverrides {
  std::optional<std::string> method;
  std::optional<double> mu;
  std::optional<double> xi;
  std::optional<int> max_iters;
  std::optional<double> l_scalar;
  std::optional<double> m_scalar;
  std::optional<std::uint64_t> seed;
  std::optional<int> random_dim;
  std::optional<int> random_constraints;
  std::optional<std::string> trace_csv;
  std::optional<std::string> summary_json;
  std::optional<std::string> ledger_csv;
  bool no_escalation = false;
  bool quiet = false;
};

void apply(const CliOverrides& o, szoqq::RunConfig& cfg) {
  if (o.method) cfg.method = *o.method;
  if (o.mu) cfg.mu = *o.mu;
  if (o.xi) cfg.xi = *o.xi;
  if (o.max_iters) cfg.max_iters = *o.max_iters;
  if (o.l_scalar) cfg.l_override = szoqq::Vec::Constant(1, *o.l_scalar);
  if (o.m_scalar) cfg.m_override = szoqq::Vec::Constant(1, *o.m_scalar);
  if (o.seed) cfg.seed = *o.seed;
  if (o.random_dim) cfg.random_dim = *o.random_dim;
  if (o.random_constraints) cfg.random_constraints = *o.random_constraints;
  if (o.trace_csv) cfg.trace_csv = *o.trace_csv;
  if (o.summary_json) cfg.summary_json = *o.summary_json;
  if (o.ledger_csv) cfg.ledger_csv = *o.ledger_csv;
  if (o.no_escalation) cfg.escalation = false;
  if (o.quiet) cfg.quiet = true;
}

// A target is either a path to a JSON config or a benchmark name.
std::optional<szoqq::RunConfig> resolve_target(const std::string& target) {
  const auto names = szoqq::benchmark_names();
  if (std::find(names.begin(), names.end(), target) != names.end()) {
    return szoqq::default_run_config(target);
  }
  if (std::filesystem::exists(target)) {
    try {
      return szoqq::parse_run_config(target);
    } catch (const szoqq::Error& e) {
      fmt::print(stderr, "{}\n", e.what());
      return std::nullopt;
    }
  }
  fmt::print(stderr, "'{}' is neither a config file nor a benchmark (known: {})\n", target,
             fmt::join(names, ", "));
  return std::nullopt;
}

void add_override_flags(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--method", o.method, "szoqq or lbm-baseline");
  cmd->add_option("--mu", o.mu, "proximal weight");
  cmd->add_option("--xi", o.xi, "termination threshold (0 disables)");
  cmd->add_option("--max-iters", o.max_iters, "iteration cap");
  cmd->add_option("--L", o.l_scalar, "Lipschitz constant, broadcast to all constraints");
  cmd->add_option("--M", o.m_scalar, "gradient Lipschitz constant, broadcast to all constraints");
  cmd->add_option("--seed", o.seed, "seed for the random benchmark family");
  cmd->add_option("--dim", o.random_dim, "dimension for the random benchmark family");
  cmd->add_option("--constraints", o.random_constraints,
                  "constraint count for the random benchmark family");
  cmd->add_option("--trace", o.trace_csv, "write the iteration trace CSV here");
  cmd->add_option("--summary", o.summary_json, "write the run summary JSON here");
  cmd->add_option("--ledger", o.ledger_csv, "stream the full query ledger CSV here");
  cmd->add_flag("--no-escalation", o.no_escalation, "disable smoothness-constant escalation");
  cmd->add_flag("--quiet", o.quiet, "suppress the per-run summary line");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"safe zeroth-order solver: every oracle query stays feasible"};
  app.require_subcommand(1);

  std::vector<std::string> targets;
  int jobs = 1;
  CliOverrides overrides;

  CLI::App* run_cmd = app.add_subcommand("run", "run a benchmark or config file");
  run_cmd->add_option("target", targets, "config file or benchmark name; optionally a method")
      ->required()
      ->expected(-1);
  run_cmd->add_option("--jobs", jobs, "run multiple targets concurrently")
      ->check(CLI::PositiveNumber);
  add_override_flags(run_cmd, overrides);

  std::string check_target;
  CliOverrides check_overrides;
  CLI::App* check_cmd = app.add_subcommand("check", "validate a config without running it");
  check_cmd->add_option("target", check_target, "config file or benchmark name")->required();
  add_override_flags(check_cmd, check_overrides);

  CLI::App* list_cmd = app.add_subcommand("list-benchmarks", "print the benchmark names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? szoqq::kExitOk : szoqq::kExitUsage;
  }

  if (list_cmd->parsed()) {
    for (const std::string& name : szoqq::benchmark_names()) {
      fmt::print("{}\n", name);
    }
    return szoqq::kExitOk;
  }

  if (check_cmd->parsed()) {
    std::optional<szoqq::RunConfig> cfg = resolve_target(check_target);
    if (!cfg.has_value()) {
      return szoqq::kExitUsage;
    }
    apply(check_overrides, *cfg);
    return szoqq::check(*cfg);
  }

  // run: allow the two-positional form "run <target> <method>".
  if (targets.size() == 2 && is_method_name(targets[1])) {
    overrides.method = overrides.method.value_or(targets[1]);
    targets.pop_back();
  }

  std::vector<szoqq::RunConfig> configs;
  configs.reserve(targets.size());
  for (const std::string& target : targets) {
    std::optional<szoqq::RunConfig> cfg = resolve_target(target);
    if (!cfg.has_value()) {
      return szoqq::kExitUsage;
    }
    apply(overrides, *cfg);
    configs.push_back(std::move(*cfg));
  }
  if (configs.size() == 1) {
    return szoqq::run(configs.front());
  }
  return szoqq::run_batch(configs, jobs);
}

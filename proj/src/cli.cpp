#include "etlqg/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "etlqg/config.hpp"
#include "etlqg/errors.hpp"
#include "etlqg/model.hpp"
#include "etlqg/policies.hpp"
#include "etlqg/riccati.hpp"
#include "etlqg/simulate.hpp"

namespace etlqg {
namespace {

using nlohmann::ordered_json;

// Shortest round-trip decimal form; keeps outputs byte-stable across reruns.
std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 60; shift >= 0; shift -= 4) {
    s.push_back(digits[(h >> shift) & 0xf]);
  }
  return s;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::string> out;
  std::optional<std::string> policy;
};

// Policy names: voi, always, never, exact_scalar_dp, periodic,
// periodic:P, periodic:P:OFF.
void apply_policy(ExperimentConfig& cfg, const std::string& name) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  while (true) {
    auto colon = name.find(':', start);
    parts.push_back(name.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  cfg.trigger = trigger_kind_from(parts[0]);
  if (cfg.trigger != TriggerKind::kPeriodic) {
    if (parts.size() > 1) {
      throw ConfigError("policy \"" + parts[0] + "\" takes no arguments");
    }
    return;
  }
  if (parts.size() > 3) throw ConfigError("policy: expected periodic[:P[:OFF]]");
  auto to_int = [&](const std::string& s, const char* what) {
    int value = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw ConfigError(std::string("policy: invalid ") + what + " \"" + s + "\"");
    }
    return value;
  };
  if (parts.size() >= 2) cfg.periodic.period = to_int(parts[1], "period");
  cfg.periodic.offset = parts.size() >= 3 ? to_int(parts[2], "offset") : 0;
  if (cfg.periodic.period < 1) throw ConfigError("policy: period must be >= 1");
  if (cfg.periodic.offset < 0 || cfg.periodic.offset >= cfg.periodic.period) {
    throw ConfigError("policy: offset must lie in [0, period)");
  }
}

ExperimentConfig load_with_overrides(const std::string& path,
                                     const Overrides& ov) {
  ExperimentConfig cfg = load_config(path);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.runs) {
    if (*ov.runs < 1) throw ConfigError("--runs must be >= 1");
    cfg.runs = *ov.runs;
  }
  if (ov.out) cfg.out = *ov.out;
  if (ov.policy) apply_policy(cfg, *ov.policy);
  return cfg;
}

void print_diagnostics(const std::vector<Diagnostic>& diags, std::ostream& os) {
  for (const Diagnostic& d : diags) {
    os << (d.severity == Diagnostic::Severity::kError ? "error" : "warning") << " "
       << d.field;
    if (d.k >= 0) os << "[k=" << d.k << "]";
    os << ": " << d.message << "\n";
  }
}

// Returns false if any error-severity diagnostic is present. Warnings are
// printed and the run proceeds.
bool check_system(const ExperimentConfig& cfg) {
  const std::vector<Diagnostic> diags = validate_system(cfg.sys, cfg.cost);
  print_diagnostics(diags, std::cerr);
  for (const Diagnostic& d : diags) {
    if (d.severity == Diagnostic::Severity::kError) return false;
  }
  return true;
}

const std::string& require_out(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) {
    throw ConfigError("no output path: set \"out\" in the config or pass --out");
  }
  return cfg.out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << content;
  if (!os) throw Error("write to " + path + " failed");
}

TriggerPolicy build_trigger(const ExperimentConfig& cfg,
                            const RiccatiSolution& ric) {
  TriggerPolicy trigger;
  trigger.kind = cfg.trigger;
  trigger.periodic = cfg.periodic;
  if (cfg.trigger == TriggerKind::kExactScalarDp) {
    trigger.table = std::make_shared<const ScalarDpTable>(
        scalar_dp_value(cfg.sys, cfg.cost, ric));
  }
  return trigger;
}

std::string metadata_line(const ExperimentConfig& cfg) {
  return "# config_hash=" + hash_hex(config_hash(cfg)) +
         " seed=" + std::to_string(cfg.seed) + " algorithm=" +
         std::string(RngStream::algorithm_id) + "\n";
}

std::string trajectory_csv(const ExperimentConfig& cfg,
                           const TrajectoryRecord& tr) {
  const int n = cfg.sys.state_dim();
  const int m = cfg.sys.input_dim();
  const bool imperfect = tr.pattern == InfoPattern::kImperfect;
  const int p = imperfect ? cfg.sys.output_dim() : 0;

  std::ostringstream os;
  os << metadata_line(cfg);
  os << "k,delta,voi";
  for (int i = 0; i < m; ++i) os << ",u" << i;
  for (int i = 0; i < n; ++i) os << ",x" << i;
  for (int i = 0; i < n; ++i) os << ",xhat" << i;
  if (imperfect) {
    for (int i = 0; i < p; ++i) os << ",y" << i;
    for (int i = 0; i < n; ++i) os << ",eps" << i;
    for (int i = 0; i < p; ++i) os << ",nu" << i;
  }
  os << "\n";

  for (int k = 0; k <= tr.horizon; ++k) {
    os << k << "," << tr.delta[k] << "," << fmt(tr.voi[k]);
    for (int i = 0; i < m; ++i) os << "," << fmt(tr.u[k](i));
    for (int i = 0; i < n; ++i) os << "," << fmt(tr.x[k](i));
    for (int i = 0; i < n; ++i) os << "," << fmt(tr.xhat[k](i));
    if (imperfect) {
      for (int i = 0; i < p; ++i) os << "," << fmt(tr.y[k](i));
      for (int i = 0; i < n; ++i) os << "," << fmt(tr.eps[k](i));
      for (int i = 0; i < p; ++i) os << "," << fmt(tr.nu[k](i));
    }
    os << "\n";
  }
  // terminal state row: only k and x carry values
  os << (tr.horizon + 1) << ",,";
  for (int i = 0; i < m; ++i) os << ",";
  for (int i = 0; i < n; ++i) os << "," << fmt(tr.x[tr.horizon + 1](i));
  for (int i = 0; i < n; ++i) os << ",";
  if (imperfect) {
    for (int i = 0; i < p + n + p; ++i) os << ",";
  }
  os << "\n";
  return os.str();
}

ordered_json stat_json(double mean, double se) {
  ordered_json j;
  j["mean"] = mean;
  j["stderr"] = se;
  return j;
}

std::string summary_json(const ExperimentConfig& cfg, const RunSummary& s) {
  ordered_json js;
  js["command"] = "simulate";
  js["config_hash"] = hash_hex(config_hash(cfg));
  js["seed"] = cfg.seed;
  js["algorithm"] = std::string(RngStream::algorithm_id);
  js["runs"] = s.n_runs;
  js["horizon"] = cfg.sys.horizon;
  js["policy"] = trigger_kind_name(cfg.trigger);
  js["lambda"] = cfg.cost.lambda;
  js["J"] = stat_json(s.j_mean, s.j_se);
  js["rate"] = stat_json(s.rate_mean, s.rate_se);
  js["psi"] = stat_json(s.psi_mean, s.psi_se);
  ordered_json tx;
  tx["mean"] = s.tx_mean;
  tx["stderr"] = s.tx_se;
  tx["min"] = s.tx_min;
  tx["max"] = s.tx_max;
  js["transmissions"] = tx;
  return js.dump(2) + "\n";
}

std::string tradeoff_csv(const ExperimentConfig& cfg,
                         const std::vector<TradeoffPoint>& points) {
  std::ostringstream os;
  os << metadata_line(cfg);
  os << "lambda,rate_mean,rate_stderr,J_mean,J_stderr,n_runs\n";
  for (const TradeoffPoint& pt : points) {
    os << fmt(pt.lambda) << "," << fmt(pt.rate_mean) << "," << fmt(pt.rate_se)
       << "," << fmt(pt.j_mean) << "," << fmt(pt.j_se) << "," << pt.n_runs
       << "\n";
  }
  return os.str();
}

int cmd_validate(const ExperimentConfig& cfg) {
  const std::vector<Diagnostic> diags = validate_system(cfg.sys, cfg.cost);
  print_diagnostics(diags, std::cout);
  if (diags.empty()) {
    std::cout << "ok: config_hash=" << hash_hex(config_hash(cfg)) << "\n";
    return 0;
  }
  return 2;
}

int cmd_simulate(const ExperimentConfig& cfg) {
  if (!check_system(cfg)) return 2;
  const std::string& out = require_out(cfg);
  const RiccatiSolution ric = backward_riccati(cfg.sys, cfg.cost);
  const TriggerPolicy trigger = build_trigger(cfg, ric);
  const ControlLaw control = ce_law(ric);

  RngStream rng(cfg.seed, 0);
  const TrajectoryRecord tr =
      run_trajectory(cfg.sys, cfg.cost, ric, trigger, control, rng);

  RunSummary summary;
  if (cfg.runs >= 2) {
    summary = monte_carlo(cfg.sys, cfg.cost, ric, trigger, control, cfg.runs,
                          cfg.seed);
  } else {
    summary.n_runs = 1;
    summary.j_mean = tr.j();
    summary.rate_mean = tr.rate();
    summary.psi_mean = tr.psi();
    summary.tx_mean = tr.transmissions;
    summary.tx_min = tr.transmissions;
    summary.tx_max = tr.transmissions;
  }

  write_file(out + "_trajectory.csv", trajectory_csv(cfg, tr));
  write_file(out + "_summary.json", summary_json(cfg, summary));
  std::cout << "runs=" << summary.n_runs << " J=" << fmt(summary.j_mean)
            << " rate=" << fmt(summary.rate_mean)
            << " transmissions=" << fmt(summary.tx_mean) << "\n"
            << "wrote " << out << "_trajectory.csv and " << out
            << "_summary.json\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& lambdas) {
  if (!check_system(cfg)) return 2;
  const std::string& out = require_out(cfg);
  if (cfg.runs < 2) {
    throw ConfigError("sweep needs runs >= 2 for standard errors; pass --runs");
  }
  const RiccatiSolution ric = backward_riccati(cfg.sys, cfg.cost);
  const std::vector<TradeoffPoint> points =
      lambda_sweep(cfg.sys, cfg.cost, ric, lambdas, cfg.runs, cfg.seed);
  write_file(out + "_tradeoff.csv", tradeoff_csv(cfg, points));
  std::cout << "swept " << points.size() << " lambda values, " << cfg.runs
            << " runs each\nwrote " << out << "_tradeoff.csv\n";
  return 0;
}

std::vector<double> parse_lambda_list(const std::string& text) {
  std::vector<double> out;
  std::string::size_type start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    const std::string item = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    double value = 0.0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), value);
    if (res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
      throw ConfigError("--lambda: invalid value \"" + item + "\"");
    }
    if (!(value >= 0.0)) throw ConfigError("--lambda: values must be >= 0");
    out.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"event-triggered LQG simulation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  std::uint64_t seed_value = 0;
  int runs_value = 0;
  std::string out_value, policy_value, lambda_text;

  CLI::App* validate = app.add_subcommand("validate", "check a config file");
  CLI::App* simulate =
      app.add_subcommand("simulate", "run trajectories, write CSV and summary");
  CLI::App* sweep =
      app.add_subcommand("sweep", "rate/performance trade-off over lambda");

  for (CLI::App* sub : {validate, simulate, sweep}) {
    sub->add_option("--config", config_path, "config file (JSON)")
        ->required();
  }
  for (CLI::App* sub : {simulate, sweep}) {
    sub->add_option("--seed", seed_value, "override the config seed");
    sub->add_option("--runs", runs_value, "override the number of runs");
    sub->add_option("--out", out_value, "override the output path prefix");
    sub->add_option("--policy", policy_value,
                    "override the trigger: voi, always, never, "
                    "exact_scalar_dp, or periodic[:P[:OFF]]");
  }
  sweep->add_option("--lambda", lambda_text,
                    "comma-separated lambda values (required)");

  std::vector<const char*> argv;
  argv.push_back("etlqg");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed() || sweep->parsed()) {
      CLI::App* sub = simulate->parsed() ? simulate : sweep;
      if (sub->count("--seed")) ov.seed = seed_value;
      if (sub->count("--runs")) ov.runs = runs_value;
      if (sub->count("--out")) ov.out = out_value;
      if (sub->count("--policy")) ov.policy = policy_value;
    }
    const ExperimentConfig cfg = load_with_overrides(config_path, ov);
    if (validate->parsed()) return cmd_validate(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (sweep->count("--lambda") == 0) {
      std::cerr << "sweep requires --lambda with at least one value\n";
      return 2;
    }
    return cmd_sweep(cfg, parse_lambda_list(lambda_text));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? argc - 1 : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace etlqg

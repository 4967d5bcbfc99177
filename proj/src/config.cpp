#include "etlqg/config.hpp"

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "etlqg/errors.hpp"

namespace etlqg {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail(where, "unknown field \"" + it.key() + "\"");
  }
}

const json& require(const json& j, const std::string& where, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing field \"") + key + "\"");
  return *it;
}

const json& require_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  return j;
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

Matrix parse_matrix(const json& j, const std::string& where) {
  require_object(j, where);
  check_keys(j, where, {"rows", "cols", "data"});
  const int rows = get_int(require(j, where, "rows"), where + ".rows");
  const int cols = get_int(require(j, where, "cols"), where + ".cols");
  if (rows < 1 || cols < 1) fail(where, "rows and cols must be positive");
  const json& data = require(j, where, "data");
  if (!data.is_array() ||
      data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    fail(where + ".data", "expected an array of rows*cols numbers");
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = get_number(data[static_cast<std::size_t>(r) * cols + c],
                           where + ".data");
    }
  }
  return m;
}

// A matrix-valued field is either one matrix object (broadcast over time) or
// an array of per-step matrices.
std::vector<Matrix> parse_matrix_seq(const json& j, const std::string& where) {
  if (j.is_array()) {
    if (j.empty()) fail(where, "sequence must not be empty");
    std::vector<Matrix> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
      out.push_back(parse_matrix(j[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
  }
  std::vector<Matrix> out;
  out.push_back(parse_matrix(j, where));
  return out;
}

Vector parse_vector(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) =
        get_number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

std::vector<double> parse_scalar_seq(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array() || j.empty()) {
    fail(where, "expected a number or a nonempty array of numbers");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = data;
  return j;
}

ordered_json matrix_seq_json(const std::vector<Matrix>& seq) {
  if (seq.size() == 1) return matrix_json(seq[0]);
  ordered_json arr = ordered_json::array();
  for (const Matrix& m : seq) arr.push_back(matrix_json(m));
  return arr;
}

ordered_json scalar_seq_json(const std::vector<double>& seq) {
  if (seq.size() == 1) return ordered_json(seq[0]);
  return ordered_json(seq);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(e.what());
  }
  require_object(root, "config");
  check_keys(root, "config",
             {"horizon", "info_pattern", "system", "cost", "trigger", "runs",
              "seed", "out"});

  ExperimentConfig cfg;
  const int horizon = get_int(require(root, "config", "horizon"), "horizon");
  if (horizon < 0) fail("horizon", "must be >= 0");
  const std::string pattern =
      get_string(require(root, "config", "info_pattern"), "info_pattern");
  if (pattern == "perfect") {
    cfg.sys.pattern = InfoPattern::kPerfect;
  } else if (pattern == "imperfect") {
    cfg.sys.pattern = InfoPattern::kImperfect;
  } else {
    fail("info_pattern", "expected \"perfect\" or \"imperfect\"");
  }
  cfg.sys.horizon = horizon;

  const json& jsys = require_object(require(root, "config", "system"), "system");
  check_keys(jsys, "system", {"A", "B", "W", "C", "V", "m0", "M0", "continuous"});
  if (jsys.contains("continuous")) {
    if (jsys.contains("A") || jsys.contains("B")) {
      fail("system", "give either \"continuous\" or explicit A/B, not both");
    }
    const json& jc = require_object(jsys["continuous"], "system.continuous");
    check_keys(jc, "system.continuous", {"Ac", "Bc", "dt"});
    ContinuousLinearSystem cont;
    cont.Ac = parse_matrix(require(jc, "system.continuous", "Ac"),
                           "system.continuous.Ac");
    cont.Bc = parse_matrix(require(jc, "system.continuous", "Bc"),
                           "system.continuous.Bc");
    cont.dt = get_number(require(jc, "system.continuous", "dt"),
                         "system.continuous.dt");
    Discretized d;
    try {
      d = zoh_discretize(cont);
    } catch (const Error& e) {
      fail("system.continuous", e.what());
    }
    cfg.sys.A = {d.A};
    cfg.sys.B = {d.B};
  } else {
    cfg.sys.A = parse_matrix_seq(require(jsys, "system", "A"), "system.A");
    cfg.sys.B = parse_matrix_seq(require(jsys, "system", "B"), "system.B");
  }
  cfg.sys.W = parse_matrix_seq(require(jsys, "system", "W"), "system.W");
  if (cfg.sys.pattern == InfoPattern::kImperfect) {
    cfg.sys.C = parse_matrix_seq(require(jsys, "system", "C"), "system.C");
    cfg.sys.V = parse_matrix_seq(require(jsys, "system", "V"), "system.V");
  } else if (jsys.contains("C") || jsys.contains("V")) {
    fail("system", "C and V are only valid with info_pattern \"imperfect\"");
  }
  cfg.sys.m0 = parse_vector(require(jsys, "system", "m0"), "system.m0");
  cfg.sys.M0 = parse_matrix(require(jsys, "system", "M0"), "system.M0");

  const json& jcost = require_object(require(root, "config", "cost"), "cost");
  check_keys(jcost, "cost", {"Q", "Q_terminal", "R", "ell", "lambda"});
  cfg.cost.horizon = horizon;
  cfg.cost.Q = parse_matrix_seq(require(jcost, "cost", "Q"), "cost.Q");
  if (jcost.contains("Q_terminal")) {
    cfg.cost.Q_terminal = parse_matrix(jcost["Q_terminal"], "cost.Q_terminal");
  } else if (cfg.cost.Q.size() == 1) {
    cfg.cost.Q_terminal = cfg.cost.Q[0];
  } else {
    fail("cost", "Q_terminal is required when Q is a per-step sequence");
  }
  cfg.cost.R = parse_matrix_seq(require(jcost, "cost", "R"), "cost.R");
  cfg.cost.ell = parse_scalar_seq(require(jcost, "cost", "ell"), "cost.ell");
  cfg.cost.lambda = get_number(require(jcost, "cost", "lambda"), "cost.lambda");
  if (!(cfg.cost.lambda >= 0.0)) fail("cost.lambda", "must be >= 0");
  for (std::size_t i = 0; i < cfg.cost.ell.size(); ++i) {
    if (!(cfg.cost.ell[i] >= 0.0)) {
      fail("cost.ell[" + std::to_string(i) + "]", "must be >= 0");
    }
  }

  const json& jtrig = require_object(require(root, "config", "trigger"), "trigger");
  check_keys(jtrig, "trigger", {"type", "period", "offset"});
  cfg.trigger = trigger_kind_from(get_string(require(jtrig, "trigger", "type"),
                                             "trigger.type"));
  if (cfg.trigger == TriggerKind::kPeriodic) {
    cfg.periodic.period =
        get_int(require(jtrig, "trigger", "period"), "trigger.period");
    cfg.periodic.offset =
        jtrig.contains("offset") ? get_int(jtrig["offset"], "trigger.offset") : 0;
    if (cfg.periodic.period < 1) fail("trigger.period", "must be >= 1");
    if (cfg.periodic.offset < 0 || cfg.periodic.offset >= cfg.periodic.period) {
      fail("trigger.offset", "must lie in [0, period)");
    }
  } else if (jtrig.contains("period") || jtrig.contains("offset")) {
    fail("trigger", "period/offset are only valid with type \"periodic\"");
  }

  if (root.contains("runs")) {
    cfg.runs = get_int(root["runs"], "runs");
    if (cfg.runs < 1) fail("runs", "must be >= 1");
  }
  if (root.contains("seed")) {
    const json& js = root["seed"];
    if (!js.is_number_integer()) fail("seed", "expected a nonnegative integer");
    if (!js.is_number_unsigned() && js.get<std::int64_t>() < 0) {
      fail("seed", "expected a nonnegative integer");
    }
    cfg.seed = js.get<std::uint64_t>();
  }
  if (root.contains("out")) cfg.out = get_string(root["out"], "out");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& config) {
  ordered_json root;
  root["horizon"] = config.sys.horizon;
  root["info_pattern"] =
      config.sys.pattern == InfoPattern::kPerfect ? "perfect" : "imperfect";

  ordered_json jsys;
  jsys["A"] = matrix_seq_json(config.sys.A);
  jsys["B"] = matrix_seq_json(config.sys.B);
  jsys["W"] = matrix_seq_json(config.sys.W);
  if (config.sys.pattern == InfoPattern::kImperfect) {
    jsys["C"] = matrix_seq_json(config.sys.C);
    jsys["V"] = matrix_seq_json(config.sys.V);
  }
  std::vector<double> m0(config.sys.m0.data(),
                         config.sys.m0.data() + config.sys.m0.size());
  jsys["m0"] = m0;
  jsys["M0"] = matrix_json(config.sys.M0);
  root["system"] = jsys;

  ordered_json jcost;
  jcost["Q"] = matrix_seq_json(config.cost.Q);
  jcost["Q_terminal"] = matrix_json(config.cost.Q_terminal);
  jcost["R"] = matrix_seq_json(config.cost.R);
  jcost["ell"] = scalar_seq_json(config.cost.ell);
  jcost["lambda"] = config.cost.lambda;
  root["cost"] = jcost;

  ordered_json jtrig;
  jtrig["type"] = trigger_kind_name(config.trigger);
  if (config.trigger == TriggerKind::kPeriodic) {
    jtrig["period"] = config.periodic.period;
    jtrig["offset"] = config.periodic.offset;
  }
  root["trigger"] = jtrig;

  root["runs"] = config.runs;
  root["seed"] = config.seed;
  root["out"] = config.out;
  return root.dump(2) + "\n";
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  // The output path is excluded: it changes where results land, never what
  // they contain, and runs differing only in destination should compare equal.
  ExperimentConfig keyed = config;
  keyed.out.clear();
  const std::string text = serialize_config(keyed);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

const char* trigger_kind_name(TriggerKind kind) {
  switch (kind) {
    case TriggerKind::kVoi: return "voi";
    case TriggerKind::kPeriodic: return "periodic";
    case TriggerKind::kAlways: return "always";
    case TriggerKind::kNever: return "never";
    case TriggerKind::kExactScalarDp: return "exact_scalar_dp";
  }
  throw InvalidInputError("unknown trigger kind");
}

TriggerKind trigger_kind_from(const std::string& name) {
  if (name == "voi") return TriggerKind::kVoi;
  if (name == "periodic") return TriggerKind::kPeriodic;
  if (name == "always") return TriggerKind::kAlways;
  if (name == "never") return TriggerKind::kNever;
  if (name == "exact_scalar_dp") return TriggerKind::kExactScalarDp;
  throw ConfigError("unknown trigger type \"" + name +
                    "\" (expected voi, periodic, always, never, or exact_scalar_dp)");
}

}  // namespace etlqg

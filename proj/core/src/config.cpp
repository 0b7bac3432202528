#include "eventsnn/config.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "eventsnn/spike_io.hpp"

namespace eventsnn {

namespace {

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::ConfigError, "invalid value '" + value + "' for key '" + key + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T out{};
  is >> out;
  if (is.fail() || !is.eof()) {
    // accept "inf" for doubles
    if constexpr (std::is_floating_point_v<T>) {
      if (value == "inf") return std::numeric_limits<T>::infinity();
    }
    bad_value(key, value);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

std::string show(double v) { return format_time(v); }
std::string show(int v) { return std::to_string(v); }
std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }

#define EVENTSNN_FIELD(name, member, type)                                                          \
  Field {                                                                                           \
    name, [](ExperimentConfig& c, const std::string& v) { c.member = parse_number<type>(name, v); }, \
        [](const ExperimentConfig& c) { return show(c.member); }                                    \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      EVENTSNN_FIELD("dataset.seed", dataset.seed, std::uint64_t),
      EVENTSNN_FIELD("dataset.n_train", dataset.n_train, int),
      EVENTSNN_FIELD("dataset.n_test", dataset.n_test, int),
      EVENTSNN_FIELD("dataset.r_small", dataset.r_small, double),
      EVENTSNN_FIELD("dataset.t_early", dataset.t_early, double),
      EVENTSNN_FIELD("dataset.t_late", dataset.t_late, double),
      EVENTSNN_FIELD("dataset.t_bias", dataset.t_bias, double),
      Field{"dataset.bias_enabled",
            [](ExperimentConfig& c, const std::string& v) { c.dataset.bias_enabled = parse_bool("dataset.bias_enabled", v); },
            [](const ExperimentConfig& c) { return show(c.dataset.bias_enabled); }},
      EVENTSNN_FIELD("network.n_hidden", network.n_hidden, int),
      EVENTSNN_FIELD("network.n_outputs", network.n_outputs, int),
      EVENTSNN_FIELD("network.tau_mem_ratio", network.tau_mem_ratio, double),
      EVENTSNN_FIELD("network.v_th", network.v_th, double),
      EVENTSNN_FIELD("network.v_reset", network.v_reset, double),
      EVENTSNN_FIELD("network.hidden_mean", network.hidden_mean, double),
      EVENTSNN_FIELD("network.hidden_scale", network.hidden_scale, double),
      EVENTSNN_FIELD("network.output_mean", network.output_mean, double),
      EVENTSNN_FIELD("network.output_scale", network.output_scale, double),
      EVENTSNN_FIELD("sim.m", sim.m, int),
      EVENTSNN_FIELD("sim.t_max", sim.t_max, double),
      Field{"backend.kind",
            [](ExperimentConfig& c, const std::string& v) { c.backend.kind = parse_backend_kind(v); },
            [](const ExperimentConfig& c) { return std::string(to_string(c.backend.kind)); }},
      EVENTSNN_FIELD("backend.mock.jitter_sigma", backend.mock.jitter_sigma, double),
      EVENTSNN_FIELD("backend.mock.weight_bits", backend.mock.weight_bits, int),
      EVENTSNN_FIELD("backend.mock.weight_clip", backend.mock.weight_clip, double),
      EVENTSNN_FIELD("backend.mock.input_weight_clip", backend.mock.input_weight_clip, double),
      EVENTSNN_FIELD("backend.mock.spike_loss_prob", backend.mock.spike_loss_prob, double),
      Field{"backend.replay.trace_path",
            [](ExperimentConfig& c, const std::string& v) { c.backend.replay.trace_path = v; },
            [](const ExperimentConfig& c) { return c.backend.replay.trace_path; }},
      EVENTSNN_FIELD("train.epochs", train.epochs, int),
      EVENTSNN_FIELD("train.batch", train.batch, int),
      EVENTSNN_FIELD("train.lr", train.lr, double),
      EVENTSNN_FIELD("train.lr_decay", train.lr_decay, double),
      EVENTSNN_FIELD("train.beta1", train.beta1, double),
      EVENTSNN_FIELD("train.beta2", train.beta2, double),
      EVENTSNN_FIELD("train.eps", train.eps, double),
      EVENTSNN_FIELD("train.xi", train.xi, double),
      EVENTSNN_FIELD("train.alpha", train.alpha, double),
      EVENTSNN_FIELD("train.seed", train.seed, std::uint64_t),
      EVENTSNN_FIELD("train.patience", train.patience, int),
      EVENTSNN_FIELD("train.weight_bump", train.weight_bump, double),
      EVENTSNN_FIELD("train.max_silent_hidden", train.max_silent_hidden, double),
      EVENTSNN_FIELD("train.max_silent_output", train.max_silent_output, double),
      EVENTSNN_FIELD("train.min_vdot", train.min_vdot, double),
      Field{"train.estimator",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "eventprop") c.train.estimator = GradientEstimator::eventprop;
              else if (v == "fud") c.train.estimator = GradientEstimator::fud;
              else bad_value("train.estimator", v);
            },
            [](const ExperimentConfig& c) {
              return std::string(c.train.estimator == GradientEstimator::fud ? "fud" : "eventprop");
            }},
  };
  return table;
}

#undef EVENTSNN_FIELD

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

ExperimentConfig parse_config(std::istream& is, ExperimentConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  return parse_config(in, std::move(base));
}

void write_config(std::ostream& os, const ExperimentConfig& cfg) {
  for (const auto& f : fields()) os << f.key << " = " << f.get(cfg) << '\n';
}

void validate_config(const ExperimentConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ConfigError, what);
  };
  require(cfg.dataset.n_train > 0 && cfg.dataset.n_test > 0, "dataset sizes must be positive");
  require(cfg.dataset.t_early < cfg.dataset.t_late, "t_early must be < t_late");
  require(cfg.dataset.r_small > 0.0 && cfg.dataset.r_small < 0.25, "r_small must lie in (0, 0.25)");
  require(cfg.network.n_hidden > 0 && cfg.network.n_outputs > 0, "layer sizes must be positive");
  require(cfg.network.n_outputs == 3, "the yin-yang task has 3 outputs");
  require(cfg.network.tau_mem_ratio == 1.0 || cfg.network.tau_mem_ratio == 2.0,
          "network.tau_mem_ratio must be 1 or 2");
  require(cfg.network.v_th > 0.0 && cfg.network.v_reset < cfg.network.v_th, "need 0 < v_th and v_reset < v_th");
  require(cfg.sim.m >= 0 && cfg.sim.t_max > 0.0, "sim.m must be >= 0 and sim.t_max > 0");
  require(cfg.train.epochs >= 0 && cfg.train.batch > 0, "train.epochs >= 0 and train.batch > 0");
  require(cfg.train.lr >= 0.0 && cfg.train.xi > 0.0, "train.lr >= 0 and train.xi > 0");
  require(cfg.train.weight_bump >= 0.0, "train.weight_bump must be >= 0");
  require(cfg.train.min_vdot >= 0.0, "train.min_vdot must be >= 0");
  require(cfg.train.estimator == GradientEstimator::eventprop || cfg.network.tau_mem_ratio == 2.0,
          "fud gradients need network.tau_mem_ratio = 2");
  validate_backend(cfg.backend);
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  // Single-spike regime: a deep reset keeps every neuron to its first spike.
  c.network.v_reset = -1000.0;
  c.train.xi = 0.1;
  c.train.lr = 0.02;
  c.train.lr_decay = 0.93;
  c.train.epochs = 80;
  c.train.weight_bump = 0.005;
  if (name == "eventprop-sim") return c;
  if (name == "fud-sim") {
    c.train.estimator = GradientEstimator::fud;
    return c;
  }
  if (name == "mock") {
    c.network.n_hidden = 100;
    c.backend.kind = BackendKind::mock;
    c.train.min_vdot = 0.05;
    return c;
  }
  if (name == "smoke") {
    c.dataset.n_train = 300;
    c.dataset.n_test = 300;
    c.network.n_hidden = 30;
    c.train.epochs = 2;
    return c;
  }
  throw Error(ErrorCode::ConfigError, "unknown preset '" + name + "'");
}

}  // namespace eventsnn

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "eventsnn/backend.hpp"

namespace eventsnn {

enum class GradientEstimator { eventprop, fud };

struct DatasetConfig {
  std::uint64_t seed = 1234;
  int n_train = 5000;
  int n_test = 3000;
  double r_small = 0.1;
  double t_early = 0.0;
  double t_late = 1.5;
  double t_bias = 0.9 * 1.5;
  bool bias_enabled = true;
};

struct NetworkConfig {
  int n_hidden = 120;
  int n_outputs = 3;
  double tau_mem_ratio = 2.0;  // tau_mem / tau_syn
  double v_th = 1.0;
  double v_reset = 0.0;
  // Gaussian init per layer: mean, and std = scale / sqrt(fan_in)
  double hidden_mean = 1.5;
  double hidden_scale = 1.8;
  double output_mean = 0.25;
  double output_scale = 4.4;
};

struct SimConfig {
  int m = 0;  // 0: n_inputs + n_neurons + 10
  double t_max = 6.0;
};

struct TrainConfig {
  int epochs = 300;
  int batch = 64;
  double lr = 5e-3;
  double lr_decay = 0.97;  // per epoch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double xi = 0.5;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  int patience = 0;  // epochs without test improvement before stopping; 0 disables
  // A batch in which some neuron stays silent on more than the allowed fraction
  // of samples raises that neuron's incoming weights by weight_bump instead of
  // taking an optimizer step. Outputs are only counted on samples carrying
  // their label. 0 disables.
  double weight_bump = 0.0;
  double max_silent_hidden = 0.95;
  double max_silent_output = 0.0;
  // EventProp drops the jump of any spike whose dV/dt at threshold is below
  // this; noisy backends produce traces where it can even be negative.
  double min_vdot = 1e-6;
  GradientEstimator estimator = GradientEstimator::eventprop;
};

/// Everything a run needs. Serialized as a flat `key = value` text file; see
/// `config_keys()` for the key set.
struct ExperimentConfig {
  DatasetConfig dataset;
  NetworkConfig network;
  SimConfig sim;
  BackendConfig backend;
  TrainConfig train;
};

/// Sets one key from its text value. Throws ConfigError for unknown keys or
/// unparsable values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();

/// Reads `key = value` lines; `#` starts a comment.
ExperimentConfig parse_config(std::istream& is, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
void write_config(std::ostream& os, const ExperimentConfig& cfg);

/// Checks cross-field invariants; throws ConfigError.
void validate_config(const ExperimentConfig& cfg);

/// Named starting points: "eventprop-sim", "fud-sim", "mock", "smoke".
ExperimentConfig preset(const std::string& name);

}  // namespace eventsnn

#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace eventsnn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  DimensionMismatch,
  UnsupportedTauRatio,
  NonpositiveTimeConstant,
  InvalidThreshold,
  NegativeDt,
  UnsortedInput,
  InvalidBudget,
  DegenerateCrossing,
  NoSpike,
  MultipleSpikes,
  ReplayShapeMismatch,
  ReplayUnsorted,
  ShapeMismatch,
  ParseError,
  IoError,
  ConfigError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class SpikeKind : std::uint8_t { internal, input, dummy };

/// A single event. `neuron` indexes the network population for internal
/// spikes and the input channel for input spikes; dummies carry -1 and +inf.
struct Spike {
  int neuron = -1;
  double time = kInf;
  SpikeKind kind = SpikeKind::dummy;

  static constexpr Spike dummy() { return {}; }
  static constexpr Spike internal(int n, double t) { return {n, t, SpikeKind::internal}; }
  static constexpr Spike input(int channel, double t) { return {channel, t, SpikeKind::input}; }

  bool is_dummy() const { return kind == SpikeKind::dummy; }
  friend bool operator==(const Spike&, const Spike&) = default;
};

/// Time is measured in units of tau_syn and voltages relative to rest.
struct LifParams {
  double tau_mem = 2.0;
  double tau_syn = 1.0;
  double v_th = 1.0;
  double v_reset = 0.0;
  double v_rest = 0.0;
};

enum class TauRatio { equal, double_, other };
TauRatio tau_ratio(const LifParams& p);

/// weights(j, i) is the current jump in neuron i caused by a spike of neuron j.
/// Masks are optional (empty means all-to-all); entries outside a mask must be
/// zero and receive no gradient.
struct Network {
  int n_total = 0;
  Matrix weights;
  Matrix input_weights;
  LifParams params;
  std::vector<int> output_set;
  std::vector<int> record_set;  // empty: all neurons
  Mask weight_mask;
  Mask input_mask;

  int n_inputs() const { return static_cast<int>(input_weights.rows()); }
  bool connected(int pre, int post) const {
    return weight_mask.size() == 0 || weight_mask(pre, post) != 0;
  }
  bool input_connected(int channel, int post) const {
    return input_mask.size() == 0 || input_mask(channel, post) != 0;
  }
};

struct NeuronState {
  Vector v;
  Vector i;
  double t = 0.0;

  static NeuronState zeros(int n) { return {Vector::Zero(n), Vector::Zero(n), 0.0}; }
};

struct SimDiagnostics {
  int truncated_inputs = 0;  // input events that did not fit the budget
};

/// Fixed-length result of a forward pass. `spike_currents` holds the synaptic
/// current of each internal spike's neuron just before its transition, when
/// the producer knows it (empty for replayed traces).
struct EventTrace {
  std::vector<Spike> spikes;
  NeuronState final_state;
  std::vector<double> spike_currents;
  SimDiagnostics diagnostics;

  int size() const { return static_cast<int>(spikes.size()); }
  int count_real() const;
  /// Spikes of neurons in `net.record_set` (all internal spikes when empty).
  std::vector<Spike> recorded(const Network& net) const;
};

/// Checks shapes, time constants and thresholds. With `analytic_solver` the
/// tau ratio must be one of the two closed-form cases.
void validate_network(const Network& net, bool analytic_solver = true);

}  // namespace eventsnn

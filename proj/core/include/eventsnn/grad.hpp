#pragma once

#include <span>
#include <vector>

#include "eventsnn/types.hpp"

namespace eventsnn {

struct Gradients {
  Matrix weights;        // d loss / d Network::weights
  Matrix input_weights;  // d loss / d Network::input_weights

  static Gradients zeros_like(const Network& net);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
};

/// Backward-time adjoint variables. With this sign and scale convention every
/// spike of presynaptic j at time t adds -tau_syn * lambda_i[k](t) to the
/// gradient of weight (j, k).
struct AdjointState {
  Vector lambda_v;
  Vector lambda_i;
  Matrix grad_w;
  Matrix grad_w_in;
};

enum class CrossingGuard {
  strict,  // throw DegenerateCrossing
  skip,    // drop the spike's jump
};

struct BackwardOptions {
  CrossingGuard guard = CrossingGuard::strict;
  double min_vdot = 1e-6;
};

/// Synaptic current of each internal spike's neuron just before its
/// transition, obtained by replaying the trace through the current dynamics
/// alone. Entries for input and dummy slots are 0.
std::vector<double> reconstruct_currents(const EventTrace& trace, const Network& net);

/// EventProp adjoint pass. `loss_grads[k]` is d loss / d time of trace slot k
/// (only internal spikes may carry a nonzero value). The trace is the only
/// forward information consumed; currents come from reconstruct_currents.
/// Gradients are produced for every connection present in the network masks.
Gradients eventprop_backward(const EventTrace& trace, const Network& net,
                             std::span<const double> loss_grads, const BackwardOptions& opts = {});

/// Same pass, returning the adjoint state at the start of the trace along
/// with the accumulated gradients.
AdjointState eventprop_adjoint(const EventTrace& trace, const Network& net,
                               std::span<const double> loss_grads, const BackwardOptions& opts = {});

/// Presynaptic event seen by a neuron that starts at rest.
struct TimedInput {
  double time;
  double weight;
};

struct FudSpikeGrad {
  double time = kInf;               // first spike time of the neuron
  std::vector<double> d_weights;    // d time / d weight, per input
  std::vector<double> d_times;      // d time / d input time, per input
  double d_threshold = 0.0;         // d time / d v_th
};

/// First spike time of a neuron at rest receiving `inputs`, and its
/// derivatives by implicit differentiation of the closed-form crossing
/// condition (tau_mem = 2 tau_syn only). Inputs after the spike get zero
/// derivatives. Throws NoSpike when the threshold is never reached.
FudSpikeGrad fud_spike_time_grad(std::span<const TimedInput> inputs, const LifParams& p);

/// Weight gradients by chaining fud_spike_time_grad through the trace. Needs
/// every neuron to spike at most once (MultipleSpikes otherwise) and a trace
/// that started from rest.
Gradients fud_backward(const EventTrace& trace, const Network& net, std::span<const double> loss_grads);

}  // namespace eventsnn

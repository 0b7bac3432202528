#pragma once

#include <optional>
#include <span>

#include "eventsnn/types.hpp"

namespace eventsnn {

struct StepOutput {
  NeuronState state;
  Spike spike;
  double spike_current = 0.0;  // I of the spiking neuron before reset (internal spikes)
};

/// One iteration of the event loop: pick min(t_input, t_internal), advance all
/// neurons to it and apply the transition. Inputs win ties with internal
/// events; among internal events the lowest index wins. When the next event
/// lies beyond t_max (or nothing is pending) the state is advanced to t_max and
/// a dummy is emitted.
StepOutput step(const NeuronState& state, const Network& net, std::optional<Spike> input_head,
                double t_max);

/// n_inputs + n_neurons + 10 slack events.
int default_budget(int n_inputs, int n_neurons);

/// Runs exactly `m` loop iterations and returns a trace of length m. Inputs
/// must be sorted by time; those that do not fit the budget are dropped and
/// counted in the diagnostics. Only neurons affected by an event have their
/// state and crossing time refreshed; the result matches repeated `step`.
EventTrace simulate(const Network& net, std::span<const Spike> inputs, int m, double t_max,
                    const NeuronState& initial);
EventTrace simulate(const Network& net, std::span<const Spike> inputs, int m, double t_max);

/// Forward-Euler reference integrator on a fixed grid of width dt. Threshold
/// crossings are located by linear interpolation within the step and the step
/// is split there, as it is at input times. Returns every event up to t_max
/// without dummy padding. Works for any tau ratio.
EventTrace dense_oracle(const Network& net, std::span<const Spike> inputs, double dt, double t_max);

}  // namespace eventsnn

#pragma once

// Central finite differences of a smooth spike-time loss through simulate,
// compared against eventprop_backward.

#include <cmath>
#include <vector>

#include "eventsnn/grad.hpp"
#include "eventsnn/lif.hpp"
#include "eventsnn/sim.hpp"
#include "support/oracles.hpp"

namespace eventsnn::testing {

struct GradCheckResult {
  bool usable = false;      // some spike, no grazing crossing
  int checked = 0;          // weights compared
  int skipped = 0;          // weights whose perturbation changed the event sequence
  double worst_rel = 0.0;
  double min_abs_vdot = kInf;
};

inline bool same_sequence(const EventTrace& a, const EventTrace& b) {
  if (a.size() != b.size()) return false;
  for (int k = 0; k < a.size(); ++k) {
    if (a.spikes[k].kind != b.spikes[k].kind || a.spikes[k].neuron != b.spikes[k].neuron) return false;
  }
  return true;
}

// Loss = sum over internal slots of coeff[slot] * time.
inline double linear_loss(const EventTrace& t, const std::vector<double>& coeff) {
  double l = 0.0;
  for (int k = 0; k < t.size(); ++k) {
    if (t.spikes[k].kind == SpikeKind::internal) l += coeff[k] * t.spikes[k].time;
  }
  return l;
}

inline double relative_error(double got, double want, double floor) {
  return std::abs(got - want) / std::max({std::abs(got), std::abs(want), floor});
}

inline GradCheckResult check_gradients(const Network& net, const std::vector<Spike>& inputs, int m, double t_max,
                                       Rng& rng, double eps, double min_vdot) {
  GradCheckResult r;
  const auto base = simulate(net, inputs, m, t_max);
  if (base.count_real() == 0) return r;
  std::vector<double> coeff(base.size(), 0.0);
  bool any_internal = false;
  for (int k = 0; k < base.size(); ++k) {
    if (base.spikes[k].kind != SpikeKind::internal) continue;
    any_internal = true;
    coeff[k] = rng.uniform(-1.0, 1.0);
    const double vdot = -net.params.v_th / net.params.tau_mem + base.spike_currents[k];
    r.min_abs_vdot = std::min(r.min_abs_vdot, std::abs(vdot));
  }
  if (!any_internal || r.min_abs_vdot < min_vdot) return r;
  r.usable = true;

  const auto g = eventprop_backward(base, net, coeff);
  auto probe = [&](auto&& param_ref, double analytic) {
    Network plus = net, minus = net;
    param_ref(plus) += eps;
    param_ref(minus) -= eps;
    const auto tp = simulate(plus, inputs, m, t_max);
    const auto tm = simulate(minus, inputs, m, t_max);
    if (!same_sequence(tp, base) || !same_sequence(tm, base)) {
      ++r.skipped;
      return;
    }
    const double fd = (linear_loss(tp, coeff) - linear_loss(tm, coeff)) / (2.0 * eps);
    r.worst_rel = std::max(r.worst_rel, relative_error(analytic, fd, 1e-4));
    ++r.checked;
  };
  for (int j = 0; j < net.n_total; ++j) {
    for (int k = 0; k < net.n_total; ++k) {
      probe([&](Network& n) -> double& { return n.weights(j, k); }, g.weights(j, k));
    }
  }
  for (int c = 0; c < net.n_inputs(); ++c) {
    for (int k = 0; k < net.n_total; ++k) {
      probe([&](Network& n) -> double& { return n.input_weights(c, k); }, g.input_weights(c, k));
    }
  }
  return r;
}

}  // namespace eventsnn::testing

#include "eventsnn/grad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "connectivity.hpp"
#include "eventsnn/lif.hpp"

namespace eventsnn {

Gradients Gradients::zeros_like(const Network& net) {
  return {Matrix::Zero(net.weights.rows(), net.weights.cols()),
          Matrix::Zero(net.input_weights.rows(), net.input_weights.cols())};
}

Gradients& Gradients::operator+=(const Gradients& other) {
  weights += other.weights;
  input_weights += other.input_weights;
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  weights *= s;
  input_weights *= s;
  return *this;
}

std::vector<double> reconstruct_currents(const EventTrace& trace, const Network& net) {
  const int n = net.n_total;
  const auto fan = detail::build_fan_out(net.weights, net.weight_mask, true);
  const auto fan_in = detail::build_fan_out(net.input_weights, net.input_mask, true);
  const double tau_syn = net.params.tau_syn;

  std::vector<double> cur(n, 0.0);
  std::vector<double> stamp(n, 0.0);
  auto advance = [&](int k, double t) {
    if (stamp[k] != t) {
      cur[k] *= std::exp(-(t - stamp[k]) / tau_syn);
      stamp[k] = t;
    }
  };
  auto deliver = [&](const detail::FanOut& f, int row, double t) {
    for (int e = f.begin(row); e < f.end(row); ++e) {
      const int k = f.targets[e];
      advance(k, t);
      cur[k] += f.weights[e];
    }
  };

  std::vector<double> out(trace.spikes.size(), 0.0);
  for (std::size_t s = 0; s < trace.spikes.size(); ++s) {
    const Spike& sp = trace.spikes[s];
    if (sp.kind == SpikeKind::input) {
      deliver(fan_in, sp.neuron, sp.time);
    } else if (sp.kind == SpikeKind::internal) {
      advance(sp.neuron, sp.time);
      out[s] = cur[sp.neuron];
      deliver(fan, sp.neuron, sp.time);
    }
  }
  return out;
}

namespace {

// Adjoint flow backward in time over an interval of length d: lambda_v decays
// with tau_mem, lambda_i with tau_syn and is driven by lambda_v.
void flow_back(double& lv, double& li, double d, const LifParams& p, bool equal_tau) {
  if (d == 0.0) return;
  const double es = std::exp(-d / p.tau_syn);
  if (equal_tau) {
    li = (li + lv * d) * es;
    lv *= es;
    return;
  }
  const double em = std::exp(-d / p.tau_mem);
  const double rate = 1.0 / p.tau_syn - 1.0 / p.tau_mem;
  li = li * es + lv * es * std::expm1(d * rate) / rate;
  lv *= em;
}

}  // namespace

AdjointState eventprop_adjoint(const EventTrace& trace, const Network& net,
                               std::span<const double> loss_grads, const BackwardOptions& opts) {
  if (loss_grads.size() != trace.spikes.size()) {
    throw Error(ErrorCode::ShapeMismatch, "loss_grads must have one entry per trace slot");
  }
  const int n = net.n_total;
  const auto& p = net.params;
  const bool equal_tau = tau_ratio(p) == TauRatio::equal;
  const auto fan = detail::build_fan_out(net.weights, net.weight_mask, false);
  const auto fan_in = detail::build_fan_out(net.input_weights, net.input_mask, false);
  const auto currents = reconstruct_currents(trace, net);

  AdjointState adj{Vector::Zero(n), Vector::Zero(n), Matrix::Zero(n, n),
                   Matrix::Zero(net.input_weights.rows(), n)};
  std::vector<double> stamp(n, kInf);
  auto bring = [&](int k, double t) {
    if (std::isinf(stamp[k])) {
      stamp[k] = t;  // still zero, nothing to flow
      return;
    }
    flow_back(adj.lambda_v[k], adj.lambda_i[k], stamp[k] - t, p, equal_tau);
    stamp[k] = t;
  };

  for (int s = static_cast<int>(trace.spikes.size()) - 1; s >= 0; --s) {
    const Spike& sp = trace.spikes[s];
    if (sp.is_dummy()) continue;
    const double t = sp.time;

    if (sp.kind == SpikeKind::input) {
      for (int e = fan_in.begin(sp.neuron); e < fan_in.end(sp.neuron); ++e) {
        const int k = fan_in.targets[e];
        bring(k, t);
        adj.grad_w_in(sp.neuron, k) -= p.tau_syn * adj.lambda_i[k];
      }
      continue;
    }

    const int src = sp.neuron;
    bring(src, t);
    double coupling = 0.0;  // lambda^+ . (post-event state velocity change)
    double self_weight = 0.0;
    for (int e = fan.begin(src); e < fan.end(src); ++e) {
      const int k = fan.targets[e];
      const double w = fan.weights[e];
      bring(k, t);
      adj.grad_w(src, k) -= p.tau_syn * adj.lambda_i[k];
      coupling += w * adj.lambda_i[k] / p.tau_syn;
      if (k == src) {
        self_weight = w;
      } else {
        coupling -= w * adj.lambda_v[k];
      }
    }
    const double i_spike = currents[s];
    const double vdot_before = lif::vdot(p.v_th, i_spike, p);
    const double vdot_after = lif::vdot(p.v_reset, i_spike + self_weight, p);
    coupling -= vdot_after * adj.lambda_v[src];

    if (vdot_before < opts.min_vdot) {
      if (opts.guard == CrossingGuard::strict) {
        throw Error(ErrorCode::DegenerateCrossing,
                    "neuron " + std::to_string(src) + " crosses threshold with dV/dt = " +
                        std::to_string(vdot_before));
      }
      adj.lambda_v[src] = 0.0;
      continue;
    }
    adj.lambda_v[src] = (loss_grads[s] / p.tau_syn - coupling) / vdot_before;
  }

  const auto first = std::find_if(trace.spikes.begin(), trace.spikes.end(),
                                  [](const Spike& s) { return !s.is_dummy(); });
  if (first != trace.spikes.end()) {
    for (int k = 0; k < n; ++k) bring(k, first->time);
  }
  return adj;
}

Gradients eventprop_backward(const EventTrace& trace, const Network& net,
                             std::span<const double> loss_grads, const BackwardOptions& opts) {
  auto adj = eventprop_adjoint(trace, net, loss_grads, opts);
  return {std::move(adj.grad_w), std::move(adj.grad_w_in)};
}

FudSpikeGrad fud_spike_time_grad(std::span<const TimedInput> inputs, const LifParams& p) {
  if (tau_ratio(p) != TauRatio::double_) {
    throw Error(ErrorCode::UnsupportedTauRatio, "analytic spike-time gradients need tau_mem = 2 tau_syn");
  }
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return inputs[a].time < inputs[b].time; });

  // State right after the k-th input (in time order) from the running sums
  //   A = sum w e^{(t_j - t_k)/tm},  B = sum w e^{(t_j - t_k)/ts},
  // giving V = 2 ts (A - B) and I = B.
  double t_spike = kInf;
  std::size_t n_causal = 0;
  double a = 0.0, b = 0.0, t_ref = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& in = inputs[order[k]];
    if (k > 0) {
      a *= std::exp(-(in.time - t_ref) / p.tau_mem);
      b *= std::exp(-(in.time - t_ref) / p.tau_syn);
    }
    t_ref = in.time;
    a += in.weight;
    b += in.weight;
    const double v0 = 2.0 * p.tau_syn * (a - b);
    const auto dt = lif::next_crossing_double_tau(v0, b, p);
    const double t_next = k + 1 < order.size() ? inputs[order[k + 1]].time : kInf;
    if (dt.has_value() && t_ref + *dt.time < t_next) {
      t_spike = t_ref + *dt.time;
      n_causal = k + 1;
      break;
    }
  }
  if (std::isinf(t_spike)) throw Error(ErrorCode::NoSpike, "the neuron does not reach threshold");

  auto kernel = [&](double s) {
    return 2.0 * p.tau_syn * (std::exp(-s / p.tau_mem) - std::exp(-s / p.tau_syn));
  };
  auto kernel_dot = [&](double s) {
    return 2.0 * p.tau_syn * (-std::exp(-s / p.tau_mem) / p.tau_mem + std::exp(-s / p.tau_syn) / p.tau_syn);
  };

  double vdot = 0.0;
  for (std::size_t j = 0; j < n_causal; ++j) {
    const auto& in = inputs[order[j]];
    vdot += in.weight * kernel_dot(t_spike - in.time);
  }

  FudSpikeGrad g;
  g.time = t_spike;
  g.d_weights.assign(inputs.size(), 0.0);
  g.d_times.assign(inputs.size(), 0.0);
  for (std::size_t j = 0; j < n_causal; ++j) {
    const std::size_t idx = order[j];
    const double s = t_spike - inputs[idx].time;
    g.d_weights[idx] = -kernel(s) / vdot;
    g.d_times[idx] = inputs[idx].weight * kernel_dot(s) / vdot;
  }
  g.d_threshold = 1.0 / vdot;
  return g;
}

Gradients fud_backward(const EventTrace& trace, const Network& net, std::span<const double> loss_grads) {
  if (loss_grads.size() != trace.spikes.size()) {
    throw Error(ErrorCode::ShapeMismatch, "loss_grads must have one entry per trace slot");
  }
  const int n = net.n_total;
  std::vector<int> slot_of(n, -1);
  for (int s = 0; s < trace.size(); ++s) {
    const Spike& sp = trace.spikes[s];
    if (sp.kind != SpikeKind::internal) continue;
    if (slot_of[sp.neuron] >= 0) {
      throw Error(ErrorCode::MultipleSpikes,
                  "neuron " + std::to_string(sp.neuron) + " spikes more than once");
    }
    slot_of[sp.neuron] = s;
  }

  Gradients grads = Gradients::zeros_like(net);
  std::vector<double> d_time(trace.spikes.size(), 0.0);
  for (int s = 0; s < trace.size(); ++s) d_time[s] = loss_grads[s];

  struct Source {
    int slot;
    bool is_input;
    int index;
  };
  std::vector<TimedInput> presyn;
  std::vector<Source> sources;

  for (int s = trace.size() - 1; s >= 0; --s) {
    const Spike& sp = trace.spikes[s];
    if (sp.kind != SpikeKind::internal || d_time[s] == 0.0) continue;
    const int post = sp.neuron;
    presyn.clear();
    sources.clear();
    for (int q = 0; q < s; ++q) {
      const Spike& pre = trace.spikes[q];
      if (pre.time >= sp.time) continue;
      if (pre.kind == SpikeKind::input && net.input_connected(pre.neuron, post)) {
        presyn.push_back({pre.time, net.input_weights(pre.neuron, post)});
        sources.push_back({q, true, pre.neuron});
      } else if (pre.kind == SpikeKind::internal && pre.neuron != post && net.connected(pre.neuron, post)) {
        presyn.push_back({pre.time, net.weights(pre.neuron, post)});
        sources.push_back({q, false, pre.neuron});
      }
    }
    const auto g = fud_spike_time_grad(presyn, net.params);
    for (std::size_t j = 0; j < presyn.size(); ++j) {
      const auto& src = sources[j];
      if (src.is_input) {
        grads.input_weights(src.index, post) += d_time[s] * g.d_weights[j];
      } else {
        grads.weights(src.index, post) += d_time[s] * g.d_weights[j];
        d_time[src.slot] += d_time[s] * g.d_times[j];
      }
    }
  }
  return grads;
}

}  // namespace eventsnn

#include "eventsnn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "connectivity.hpp"
#include "eventsnn/lif.hpp"

namespace eventsnn {

namespace {

void check_inputs(const Network& net, std::span<const Spike> inputs) {
  double last = -kInf;
  for (const auto& s : inputs) {
    if (s.kind != SpikeKind::input || s.neuron < 0 || s.neuron >= net.n_inputs()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "input spike with channel " + std::to_string(s.neuron) + " is not a valid input");
    }
    if (s.time < last) throw Error(ErrorCode::UnsortedInput, "input spikes are not sorted by time");
    last = s.time;
  }
}

// Min-tournament over per-neuron crossing times; ties resolve to the lower
// index so the simultaneous-event order is deterministic.
class MinTree {
 public:
  explicit MinTree(std::span<const double> keys) : keys_(keys) {
    size_ = 1;
    while (size_ < static_cast<int>(keys.size())) size_ <<= 1;
    tree_.assign(2 * size_, -1);
    for (int k = 0; k < static_cast<int>(keys.size()); ++k) tree_[size_ + k] = k;
    for (int node = size_ - 1; node >= 1; --node) tree_[node] = pick(tree_[2 * node], tree_[2 * node + 1]);
  }

  void update(int k) {
    for (int node = (size_ + k) >> 1; node >= 1; node >>= 1) {
      tree_[node] = pick(tree_[2 * node], tree_[2 * node + 1]);
    }
  }

  int argmin() const { return tree_[1]; }

 private:
  int pick(int a, int b) const {
    if (a < 0) return b;
    if (b < 0) return a;
    if (keys_[b] < keys_[a]) return b;
    return a;
  }

  std::span<const double> keys_;
  int size_ = 1;
  std::vector<int> tree_;
};

}  // namespace

int default_budget(int n_inputs, int n_neurons) { return n_inputs + n_neurons + 10; }

StepOutput step(const NeuronState& state, const Network& net, std::optional<Spike> input_head,
                double t_max) {
  const auto& p = net.params;
  const int n = net.n_total;
  if (input_head && input_head->time < state.t) {
    throw Error(ErrorCode::UnsortedInput, "input event lies before the current time");
  }

  const auto dts = lif::next_crossing_safe(std::span(state.v.data(), n), std::span(state.i.data(), n), p);
  int ix = -1;
  double t_ix = kInf;
  for (int k = 0; k < n; ++k) {
    const double t = state.t + dts[k];
    if (t < t_ix) {
      t_ix = t;
      ix = k;
    }
  }
  const double t_input = input_head ? input_head->time : kInf;
  const bool take_input = input_head.has_value() && t_input <= t_ix;
  const double t = take_input ? t_input : t_ix;

  StepOutput out;
  if (t > t_max || std::isinf(t)) {
    out.state = state.t < t_max ? lif::propagate(state, p, t_max - state.t) : state;
    out.spike = Spike::dummy();
    return out;
  }

  out.state = lif::propagate(state, p, t - state.t);
  out.state.t = t;
  if (take_input) {
    const int c = input_head->neuron;
    for (int k = 0; k < n; ++k) {
      if (net.input_connected(c, k)) out.state.i[k] += net.input_weights(c, k);
    }
    out.spike = Spike::input(c, t);
  } else {
    out.spike_current = out.state.i[ix];
    out.state.v[ix] = p.v_reset;
    for (int k = 0; k < n; ++k) {
      if (net.connected(ix, k)) out.state.i[k] += net.weights(ix, k);
    }
    out.spike = Spike::internal(ix, t);
  }
  return out;
}

EventTrace simulate(const Network& net, std::span<const Spike> inputs, int m, double t_max,
                    const NeuronState& initial) {
  if (m <= 0) throw Error(ErrorCode::InvalidBudget, "event budget must be positive");
  if (!(t_max > 0.0)) throw Error(ErrorCode::InvalidBudget, "t_max must be positive");
  check_inputs(net, inputs);
  const int n = net.n_total;
  if (initial.v.size() != n || initial.i.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "initial state size differs from n_total");
  }
  if (!inputs.empty() && inputs.front().time < initial.t) {
    throw Error(ErrorCode::UnsortedInput, "input event lies before the initial time");
  }
  const auto& p = net.params;
  const TauRatio ratio = tau_ratio(p);
  if (ratio == TauRatio::other) {
    throw Error(ErrorCode::UnsupportedTauRatio, "event-driven simulation needs tau_mem/tau_syn in {1, 2}");
  }
  const auto fan = detail::build_fan_out(net.weights, net.weight_mask, true);
  const auto fan_in = detail::build_fan_out(net.input_weights, net.input_mask, true);

  std::vector<double> v(initial.v.data(), initial.v.data() + n);
  std::vector<double> cur(initial.i.data(), initial.i.data() + n);
  std::vector<double> stamp(n, initial.t);
  std::vector<double> next(n);

  auto crossing = [&](int k) {
    const double dt = ratio == TauRatio::double_ ? lif::next_crossing_double_tau(v[k], cur[k], p).value_or_inf()
                                                 : lif::next_crossing_equal_tau(v[k], cur[k], p).value_or_inf();
    return stamp[k] + dt;
  };
  auto advance = [&](int k, double t) {
    if (stamp[k] != t) {
      const auto q = lif::propagate(lif::Point{v[k], cur[k]}, p, t - stamp[k]);
      v[k] = q.v;
      cur[k] = q.i;
      stamp[k] = t;
    }
  };

  for (int k = 0; k < n; ++k) next[k] = crossing(k);
  MinTree tree(next);

  EventTrace trace;
  trace.spikes.reserve(m);
  trace.spike_currents.reserve(m);
  std::size_t in_pos = 0;
  double t_now = initial.t;
  bool quiescent = false;

  auto deliver = [&](const detail::FanOut& f, int row, double t) {
    for (int e = f.begin(row); e < f.end(row); ++e) {
      const int k = f.targets[e];
      advance(k, t);
      cur[k] += f.weights[e];
      next[k] = crossing(k);
      tree.update(k);
    }
  };

  for (int slot = 0; slot < m; ++slot) {
    if (quiescent) {
      trace.spikes.push_back(Spike::dummy());
      trace.spike_currents.push_back(0.0);
      continue;
    }
    const int ix = tree.argmin();
    const double t_ix = ix >= 0 ? next[ix] : kInf;
    const bool have_input = in_pos < inputs.size();
    const double t_input = have_input ? inputs[in_pos].time : kInf;
    const bool take_input = have_input && t_input <= t_ix;
    const double t = take_input ? t_input : t_ix;

    if (t > t_max || std::isinf(t)) {
      quiescent = true;
      t_now = std::max(t_now, t_max);
      trace.spikes.push_back(Spike::dummy());
      trace.spike_currents.push_back(0.0);
      continue;
    }
    t_now = t;
    if (take_input) {
      const int c = inputs[in_pos++].neuron;
      deliver(fan_in, c, t);
      trace.spikes.push_back(Spike::input(c, t));
      trace.spike_currents.push_back(0.0);
    } else {
      advance(ix, t);
      trace.spike_currents.push_back(cur[ix]);
      v[ix] = p.v_reset;
      deliver(fan, ix, t);
      next[ix] = crossing(ix);
      tree.update(ix);
      trace.spikes.push_back(Spike::internal(ix, t));
    }
  }

  for (std::size_t k = in_pos; k < inputs.size(); ++k) {
    if (inputs[k].time <= t_max) ++trace.diagnostics.truncated_inputs;
  }

  trace.final_state = NeuronState::zeros(n);
  trace.final_state.t = t_now;
  for (int k = 0; k < n; ++k) {
    advance(k, t_now);
    trace.final_state.v[k] = v[k];
    trace.final_state.i[k] = cur[k];
  }
  return trace;
}

EventTrace simulate(const Network& net, std::span<const Spike> inputs, int m, double t_max) {
  return simulate(net, inputs, m, t_max, NeuronState::zeros(net.n_total));
}

EventTrace dense_oracle(const Network& net, std::span<const Spike> inputs, double dt, double t_max) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidBudget, "dt must be positive");
  check_inputs(net, inputs);
  const int n = net.n_total;
  const auto& p = net.params;
  std::vector<double> v(n, 0.0), cur(n, 0.0), v_next(n), i_next(n);
  EventTrace trace;
  std::size_t in_pos = 0;
  double t = 0.0;

  auto euler = [&](double h) {
    for (int k = 0; k < n; ++k) {
      v_next[k] = v[k] + h * (-v[k] / p.tau_mem + cur[k]);
      i_next[k] = cur[k] - h * cur[k] / p.tau_syn;
    }
  };
  auto commit = [&](double h) {
    euler(h);
    v.swap(v_next);
    cur.swap(i_next);
  };

  const auto n_steps = static_cast<long long>(std::ceil(t_max / dt));
  for (long long s = 0; s < n_steps; ++s) {
    const double t_end = std::min(static_cast<double>(s + 1) * dt, t_max);
    while (t < t_end) {
      const double h = t_end - t;
      euler(h);
      int ix = -1;
      double t_cross = kInf;
      for (int k = 0; k < n; ++k) {
        if (v[k] < p.v_th && v_next[k] >= p.v_th) {
          const double tc = t + h * (p.v_th - v[k]) / (v_next[k] - v[k]);
          if (tc < t_cross) {
            t_cross = tc;
            ix = k;
          }
        }
      }
      const bool input_due = in_pos < inputs.size() && inputs[in_pos].time <= t_end;
      const double t_input = input_due ? inputs[in_pos].time : kInf;
      if (input_due && t_input <= t_cross) {
        commit(std::max(0.0, t_input - t));
        t = t_input;
        const int c = inputs[in_pos++].neuron;
        for (int k = 0; k < n; ++k) {
          if (net.input_connected(c, k)) cur[k] += net.input_weights(c, k);
        }
        trace.spikes.push_back(Spike::input(c, t));
        trace.spike_currents.push_back(0.0);
      } else if (ix >= 0) {
        commit(t_cross - t);
        t = t_cross;
        v[ix] = p.v_reset;
        trace.spike_currents.push_back(cur[ix]);
        for (int k = 0; k < n; ++k) {
          if (net.connected(ix, k)) cur[k] += net.weights(ix, k);
        }
        trace.spikes.push_back(Spike::internal(ix, t));
      } else {
        commit(h);
        t = t_end;
      }
    }
  }

  trace.final_state = NeuronState::zeros(n);
  trace.final_state.t = t;
  for (int k = 0; k < n; ++k) {
    trace.final_state.v[k] = v[k];
    trace.final_state.i[k] = cur[k];
  }
  return trace;
}

}  // namespace eventsnn

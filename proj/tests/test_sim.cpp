#include <gtest/gtest.h>

#include <cmath>

#include "eventsnn/data.hpp"
#include "eventsnn/lif.hpp"
#include "eventsnn/sim.hpp"
#include "support/oracles.hpp"

namespace eventsnn {
namespace {

using testing::Rng;

Network single(double w_in) {
  Network net;
  net.n_total = 1;
  net.weights = Matrix::Zero(1, 1);
  net.input_weights = Matrix::Constant(1, 1, w_in);
  return net;
}

Network zero_net(int n, int channels) {
  Network net;
  net.n_total = n;
  net.weights = Matrix::Zero(n, n);
  net.input_weights = Matrix::Zero(channels, n);
  return net;
}

std::vector<Spike> real_spikes(const EventTrace& t) {
  std::vector<Spike> out;
  for (const auto& s : t.spikes) {
    if (!s.is_dummy()) out.push_back(s);
  }
  return out;
}

TEST(Step, ZeroWeightsPassInputThrough) {
  const auto net = zero_net(3, 1);
  const auto out = step(NeuronState::zeros(3), net, Spike::input(0, 0.2), 5.0);
  EXPECT_EQ(out.spike, Spike::input(0, 0.2));
  const auto next = step(out.state, net, std::nullopt, 5.0);
  EXPECT_TRUE(next.spike.is_dummy());
}

TEST(Step, StrongInputThenInternalSpikeAndReset) {
  auto net = single(4.0);
  net.params.v_reset = -0.25;
  auto s = step(NeuronState::zeros(1), net, Spike::input(0, 0.0), 5.0);
  s = step(s.state, net, std::nullopt, 5.0);
  ASSERT_EQ(s.spike.kind, SpikeKind::internal);
  EXPECT_NEAR(s.spike.time, testing::euler_crossing(0.0, 4.0, net.params, 1e-6, 5.0), 1e-5);
  EXPECT_EQ(s.state.v[0], -0.25);
  EXPECT_NEAR(s.spike_current, 4.0 * std::exp(-s.spike.time), 1e-14);
  EXPECT_EQ(s.state.i[0], s.spike_current);  // own current is not reset
}

TEST(Step, QuiescentNetworkEmitsDummyAndAdvancesToTmax) {
  const auto out = step(NeuronState::zeros(2), zero_net(2, 1), std::nullopt, 3.0);
  EXPECT_EQ(out.spike, Spike::dummy());
  EXPECT_EQ(out.state.t, 3.0);
}

TEST(Step, InputWinsTieWithInternalEvent) {
  auto net = single(4.0);
  auto s = step(NeuronState::zeros(1), net, Spike::input(0, 0.0), 5.0);
  const double t_star = lif::next_crossing(s.state.v[0], s.state.i[0], net.params).value_or_inf();
  const auto tie = step(s.state, net, Spike::input(0, t_star), 5.0);
  EXPECT_EQ(tie.spike.kind, SpikeKind::input);
}

TEST(Step, LowestIndexWinsInternalTie) {
  Network net = zero_net(3, 1);
  net.input_weights << 0.0, 4.0, 4.0;
  auto s = step(NeuronState::zeros(3), net, Spike::input(0, 0.0), 5.0);
  s = step(s.state, net, std::nullopt, 5.0);
  EXPECT_EQ(s.spike.neuron, 1);
  s = step(s.state, net, std::nullopt, 5.0);
  EXPECT_EQ(s.spike.neuron, 2);
}

TEST(Step, EarlierInputThanClockThrows) {
  NeuronState st = NeuronState::zeros(1);
  st.t = 1.0;
  try {
    step(st, single(1.0), Spike::input(0, 0.5), 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsortedInput);
  }
}

TEST(Simulate, TwoInputsZeroWeightsPadWithDummies) {
  const std::vector<Spike> in{Spike::input(0, 0.1), Spike::input(1, 0.4)};
  const auto t = simulate(zero_net(2, 2), in, 4, 5.0);
  ASSERT_EQ(t.size(), 4);
  EXPECT_EQ(t.spikes[0], in[0]);
  EXPECT_EQ(t.spikes[1], in[1]);
  EXPECT_TRUE(t.spikes[2].is_dummy());
  EXPECT_TRUE(t.spikes[3].is_dummy());
}

TEST(Simulate, SmallBudgetTruncatesAndCountsDroppedInputs) {
  const std::vector<Spike> in{Spike::input(0, 0.1), Spike::input(0, 0.2), Spike::input(0, 0.3)};
  const auto t = simulate(zero_net(1, 1), in, 2, 5.0);
  ASSERT_EQ(t.size(), 2);
  EXPECT_EQ(t.spikes[1], in[1]);
  EXPECT_EQ(t.diagnostics.truncated_inputs, 1);
}

TEST(Simulate, InputsAfterTmaxAreNotDelivered) {
  const std::vector<Spike> in{Spike::input(0, 0.1), Spike::input(0, 7.0)};
  const auto t = simulate(zero_net(1, 1), in, 3, 5.0);
  EXPECT_EQ(t.count_real(), 1);
  EXPECT_EQ(t.final_state.t, 5.0);
}

TEST(Simulate, Errors) {
  const auto net = zero_net(1, 1);
  const std::vector<Spike> unsorted{Spike::input(0, 0.5), Spike::input(0, 0.1)};
  const std::vector<Spike> bad_channel{Spike::input(3, 0.5)};
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigError;
  };
  EXPECT_EQ(code_of([&] { simulate(net, unsorted, 4, 5.0); }), ErrorCode::UnsortedInput);
  EXPECT_EQ(code_of([&] { simulate(net, bad_channel, 4, 5.0); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { simulate(net, {}, 0, 5.0); }), ErrorCode::InvalidBudget);
  auto other = net;
  other.params.tau_mem = 3.0;
  EXPECT_EQ(code_of([&] { simulate(other, {}, 2, 5.0); }), ErrorCode::UnsupportedTauRatio);
}

TEST(Simulate, MatchesRepeatedStepProperty) {
  Rng rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    testing::RandomNetSpec spec;
    spec.tau_mem = rng.coin(0.5) ? 2.0 : 1.0;
    spec.v_reset = rng.coin(0.5) ? 0.0 : -0.5;
    const auto c = testing::random_case(rng, spec);
    const int m = rng.integer(1, 30);
    const auto trace = simulate(c.net, c.inputs, m, 5.0);
    NeuronState st = NeuronState::zeros(c.net.n_total);
    std::size_t next = 0;
    for (int k = 0; k < m; ++k) {
      std::optional<Spike> head;
      if (next < c.inputs.size()) head = c.inputs[next];
      const auto out = step(st, c.net, head, 5.0);
      if (out.spike.kind == SpikeKind::input) ++next;
      st = out.state;
      ASSERT_EQ(out.spike.neuron, trace.spikes[k].neuron) << "trial " << trial << " slot " << k;
      ASSERT_EQ(out.spike.kind, trace.spikes[k].kind);
      if (!out.spike.is_dummy()) EXPECT_NEAR(out.spike.time, trace.spikes[k].time, 1e-12);
    }
  }
}

TEST(Simulate, BudgetAndMonotonicityProperty) {
  Rng rng(103);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = testing::random_case(rng, {});
    const int m = rng.integer(1, 40);
    const auto t = simulate(c.net, c.inputs, m, 4.0);
    ASSERT_EQ(t.size(), m);
    bool seen_dummy = false;
    double last = -kInf;
    for (const auto& s : t.spikes) {
      if (s.is_dummy()) {
        seen_dummy = true;
        EXPECT_EQ(s.neuron, -1);
        EXPECT_TRUE(std::isinf(s.time));
        continue;
      }
      EXPECT_FALSE(seen_dummy) << "real spike after a dummy";
      EXPECT_GE(s.time, last);
      EXPECT_LE(s.time, 4.0);
      last = s.time;
    }
  }
}

TEST(Simulate, BlockDiagonalNetworkDecomposesProperty) {
  Rng rng(107);
  int compared = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int k = rng.integer(2, 4);
    std::vector<testing::RandomCase> parts;
    int n_total = 0;
    for (int b = 0; b < k; ++b) {
      testing::RandomNetSpec spec;
      spec.max_neurons = 4;
      spec.n_channels = 1;
      parts.push_back(testing::random_case(rng, spec));
      n_total += parts.back().net.n_total;
    }
    // one shared network with one input channel per block
    Network big = zero_net(n_total, k);
    std::vector<Spike> inputs;
    int off = 0;
    for (int b = 0; b < k; ++b) {
      const auto& p = parts[b].net;
      big.weights.block(off, off, p.n_total, p.n_total) = p.weights;
      big.input_weights.block(b, off, 1, p.n_total) = p.input_weights;
      for (const auto& s : parts[b].inputs) inputs.push_back(Spike::input(b, s.time));
      off += p.n_total;
    }
    std::stable_sort(inputs.begin(), inputs.end(), [](const Spike& a, const Spike& b) { return a.time < b.time; });
    const auto whole = simulate(big, inputs, 2000, 4.0);
    if (whole.count_real() == 2000) continue;  // runaway excitation, budget exhausted
    ++compared;
    off = 0;
    for (int b = 0; b < k; ++b) {
      const auto& p = parts[b].net;
      const auto alone = real_spikes(simulate(p, parts[b].inputs, 2000, 4.0));
      std::vector<Spike> filtered;
      for (const auto& s : whole.spikes) {
        if (s.kind == SpikeKind::internal && s.neuron >= off && s.neuron < off + p.n_total) {
          filtered.push_back(Spike::internal(s.neuron - off, s.time));
        }
      }
      std::vector<Spike> alone_internal;
      for (const auto& s : alone) {
        if (s.kind == SpikeKind::internal) alone_internal.push_back(s);
      }
      ASSERT_EQ(filtered.size(), alone_internal.size());
      for (std::size_t q = 0; q < filtered.size(); ++q) {
        EXPECT_EQ(filtered[q].neuron, alone_internal[q].neuron);
        EXPECT_NEAR(filtered[q].time, alone_internal[q].time, 1e-12);
      }
      off += p.n_total;
    }
  }
  EXPECT_GT(compared, 20);
}

TEST(Simulate, MutualExcitationAlternates) {
  Network net = zero_net(2, 1);
  net.weights << 0.0, 4.0, 4.0, 0.0;
  net.input_weights << 4.0, 0.0;
  net.params.v_reset = 0.0;
  const std::vector<Spike> in{Spike::input(0, 0.0)};
  const auto t = simulate(net, in, 12, 3.0);
  std::vector<int> origin;
  for (const auto& s : t.spikes) {
    if (s.kind == SpikeKind::internal) origin.push_back(s.neuron);
  }
  ASSERT_GE(origin.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(origin[k], static_cast<int>(k % 2));
}

TEST(Simulate, RecordSetFiltersReadoutOnly) {
  Network net = zero_net(2, 1);
  net.input_weights << 4.0, 4.0;
  net.params.v_reset = -1000.0;
  net.record_set = {1};
  const std::vector<Spike> in{Spike::input(0, 0.0)};
  const auto t = simulate(net, in, 5, 3.0);
  EXPECT_EQ(t.count_real(), 3);
  const auto rec = t.recorded(net);
  ASSERT_EQ(rec.size(), 1u);
  EXPECT_EQ(rec[0].neuron, 1);
}

TEST(DenseOracle, ZeroWeightsReturnInputsOnly) {
  const std::vector<Spike> in{Spike::input(0, 0.1), Spike::input(1, 0.4)};
  const auto t = dense_oracle(zero_net(2, 2), in, 1e-3, 5.0);
  EXPECT_EQ(t.spikes, in);
}

TEST(DenseOracle, SingleNeuronCrossingWithinStep) {
  const std::vector<Spike> in{Spike::input(0, 0.0)};
  for (double dt : {1e-3, 1e-4, 1e-5}) {
    Network net = single(4.0);
    net.params.v_reset = -1000.0;
    const auto t = dense_oracle(net, in, dt, 1.0);
    ASSERT_EQ(t.size(), 2);
    EXPECT_NEAR(t.spikes[1].time, 0.3166, 2.0 * dt + 1e-4);
  }
}

TEST(DenseOracle, ConvergesToSimulateAsDtShrinks) {
  Rng rng(109);
  for (int trial = 0; trial < 5; ++trial) {
    testing::RandomNetSpec spec;
    spec.max_neurons = 4;
    spec.recurrent = false;
    const auto c = testing::random_case(rng, spec);
    const auto exact = real_spikes(simulate(c.net, c.inputs, 100, 3.0));
    double prev = kInf;
    for (double dt : {1e-3, 1e-4, 1e-5}) {
      const auto approx = dense_oracle(c.net, c.inputs, dt, 3.0);
      if (approx.spikes.size() != exact.size()) continue;  // coarse grids may miss grazing spikes
      double err = 0.0;
      for (std::size_t k = 0; k < exact.size(); ++k) err = std::max(err, std::abs(approx.spikes[k].time - exact[k].time));
      EXPECT_LE(err, std::max(prev, 1e-12) * 1.01 + 1e-9);
      prev = err;
    }
    EXPECT_LE(prev, 1e-3);
  }
}

TEST(Simulate, YinYangSampleMatchesDenseOracle) {
  const auto pt = data::generate(5, 1)[0];
  const auto enc = data::encode(pt, {});
  Network net = zero_net(123, 5);
  Rng rng(113);
  for (int c = 0; c < 5; ++c) {
    for (int k = 0; k < 120; ++k) net.input_weights(c, k) = rng.uniform(0.5, 2.5);
  }
  for (int j = 0; j < 120; ++j) {
    for (int k = 120; k < 123; ++k) net.weights(j, k) = rng.uniform(-0.1, 0.2);
  }
  net.params.v_reset = -1000.0;
  const auto exact = simulate(net, enc.spikes, default_budget(5, 123), 6.0);
  EXPECT_EQ(exact.size(), 5 + 123 + 10);
  const auto approx = dense_oracle(net, enc.spikes, 1e-5, 6.0);
  const auto cmp = testing::compare_events(exact.spikes, approx.spikes, 1e-4);
  ASSERT_TRUE(cmp.same_events);
  EXPECT_LE(cmp.max_dt, 1e-3);
  // 120 hidden neurons fire within a few time units, so some pairs may be
  // closer than the Euler error; only those are allowed to swap
  int swapped = 0;
  const auto real = real_spikes(exact);
  for (std::size_t k = 0; k < real.size(); ++k) swapped += real[k].neuron != approx.spikes[k].neuron;
  EXPECT_EQ(swapped, cmp.tie_swaps);
}

}  // namespace
}  // namespace eventsnn

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eventsnn/backend.hpp"
#include "eventsnn/grad.hpp"
#include "eventsnn/sim.hpp"
#include "support/oracles.hpp"

namespace eventsnn {
namespace {

using testing::Rng;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::ConfigError;
}

std::vector<double> internal_coeffs(const EventTrace& t, Rng& rng) {
  std::vector<double> c(t.size(), 0.0);
  for (int k = 0; k < t.size(); ++k) {
    if (t.spikes[k].kind == SpikeKind::internal) c[k] = rng.uniform(-1, 1);
  }
  return c;
}

TEST(Quantize, ZeroStaysZero) {
  const Matrix z = Matrix::Zero(3, 3);
  for (int bits = 2; bits <= 64; ++bits) EXPECT_EQ(quantize_weights(z, bits, 1.0), z);
}

TEST(Quantize, TwoBitRounding) {
  Matrix w(1, 4);
  w << 0.6, -0.6, 0.4, 2.0;
  Matrix want(1, 4);
  want << 1.0, -1.0, 0.0, 1.0;
  EXPECT_EQ(quantize_weights(w, 2, 1.0), want);
}

TEST(Quantize, TiesRoundAwayFromZero) {
  Matrix w(1, 2);
  w << 0.5, -0.5;  // halfway between 0 and +-1 at 2 bits
  Matrix want(1, 2);
  want << 1.0, -1.0;
  EXPECT_EQ(quantize_weights(w, 2, 1.0), want);
}

TEST(Quantize, NearestLevelExhaustiveCheck) {
  // Every output must be the closest member of the explicit level set, which
  // bounds the error by half the level spacing.
  Rng rng(1);
  const int bits = 6;
  const double clip = 1.7;
  const int levels = (1 << (bits - 1)) - 1;
  std::vector<double> level_set;
  for (int k = -levels; k <= levels; ++k) level_set.push_back(clip * k / levels);
  Matrix w(40, 40);
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 40; ++c) w(r, c) = rng.uniform(-1.2 * clip, 1.2 * clip);
  }
  const Matrix q = quantize_weights(w, bits, clip);
  double worst = 0.0;
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 40; ++c) {
      const double target = std::clamp(w(r, c), -clip, clip);
      double best = kInf;
      for (double l : level_set) best = std::min(best, std::abs(l - target));
      EXPECT_NEAR(std::abs(q(r, c) - target), best, 1e-15);
      worst = std::max(worst, std::abs(q(r, c) - target));
    }
  }
  EXPECT_LE(worst, clip / (2.0 * levels) + 1e-15);
}

TEST(Quantize, SaturatesAndPreservesOrder) {
  Rng rng(2);
  Matrix w(1, 500);
  for (int k = 0; k < 500; ++k) w(0, k) = rng.uniform(-3, 3);
  const Matrix q = quantize_weights(w, 5, 1.0);
  EXPECT_LE(q.cwiseAbs().maxCoeff(), 1.0);
  for (int a = 0; a < 500; ++a) {
    for (int b = 0; b < 500; ++b) {
      if (w(0, a) < w(0, b)) EXPECT_LE(q(0, a), q(0, b));
    }
  }
}

TEST(Forward, NumericIsSimulateBitForBit) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = testing::random_case(rng, {});
    const auto a = forward({}, c.net, c.inputs, 30, 4.0, 99);
    const auto b = simulate(c.net, c.inputs, 30, 4.0);
    EXPECT_EQ(a.spikes, b.spikes);
  }
}

TEST(Forward, DegenerateMockEqualsNumeric) {
  Rng rng(4);
  BackendConfig cfg;
  cfg.kind = BackendKind::mock;
  cfg.mock.jitter_sigma = 0.0;
  cfg.mock.weight_bits = 64;
  cfg.mock.spike_loss_prob = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = testing::random_case(rng, {});
    EXPECT_EQ(forward(cfg, c.net, c.inputs, 30, 4.0, 5).spikes, simulate(c.net, c.inputs, 30, 4.0).spikes);
  }
}

TEST(Forward, MockIsDeterministicPerSeedAndKeepsTheBudget) {
  Rng rng(5);
  BackendConfig cfg;
  cfg.kind = BackendKind::mock;
  cfg.mock.spike_loss_prob = 0.2;
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = testing::random_case(rng, {});
    const auto a = forward(cfg, c.net, c.inputs, 30, 4.0, 7);
    const auto b = forward(cfg, c.net, c.inputs, 30, 4.0, 7);
    EXPECT_EQ(a.spikes, b.spikes);
    ASSERT_EQ(a.size(), 30);
    double last = -kInf;
    bool dummy = false;
    for (const auto& s : a.spikes) {
      if (s.is_dummy()) {
        dummy = true;
        continue;
      }
      EXPECT_FALSE(dummy);
      EXPECT_GE(s.time, last);
      EXPECT_GE(s.time, 0.0);
      EXPECT_LE(s.time, 4.0);
      last = s.time;
    }
  }
}

TEST(Forward, MockJitterMovesInternalSpikesOnly) {
  Network net;
  net.n_total = 1;
  net.weights = Matrix::Zero(1, 1);
  net.input_weights = Matrix::Constant(1, 1, 4.0);
  const std::vector<Spike> in{Spike::input(0, 0.5)};
  BackendConfig cfg;
  cfg.kind = BackendKind::mock;
  cfg.mock.jitter_sigma = 0.05;
  const auto ideal = simulate(net, in, 3, 4.0);
  double moved = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = forward(cfg, net, in, 3, 4.0, seed);
    EXPECT_EQ(t.spikes[0], in[0]);
    moved += std::abs(t.spikes[1].time - ideal.spikes[1].time);
  }
  EXPECT_GT(moved / 50.0, 0.01);  // E|N(0, 0.05)| is about 0.04
  EXPECT_LT(moved / 50.0, 0.08);
}

TEST(Replay, LoopbackGradientsMatchInProcess) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = testing::random_case(rng, {});
    const int m = 40;
    const auto trace = simulate(c.net, c.inputs, m, 4.0);
    const auto lg = internal_coeffs(trace, rng);
    const auto in_process = eventprop_backward(trace, c.net, lg, {CrossingGuard::skip, 1e-6});

    const auto path = std::filesystem::temp_directory_path() / ("eventsnn_replay_" + std::to_string(trial) + ".txt");
    {
      std::ofstream os(path);
      write_manifest(os, {m, 4.0, {{trial, trace.spikes}}}, c.net.n_total);
    }
    BackendConfig cfg;
    cfg.kind = BackendKind::replay;
    cfg.replay.trace_path = path.string();
    cfg.replay.sample = trial;
    const auto replayed = forward(cfg, c.net, {}, m, 4.0, 0);
    std::filesystem::remove(path);
    EXPECT_EQ(replayed.spikes, trace.spikes);
    const auto g = eventprop_backward(replayed, c.net, lg, {CrossingGuard::skip, 1e-6});
    EXPECT_LE((g.weights - in_process.weights).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((g.input_weights - in_process.input_weights).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Replay, ManifestErrors) {
  const std::string good =
      "m=3 t_max=4 samples=1\n# sample 0\nneuron,time\n2,0.5\n0,0.75\n-1,inf\n";
  std::istringstream ok(good);
  const auto man = read_manifest(ok, 2);
  ASSERT_EQ(man.samples.size(), 1u);
  EXPECT_EQ(man.samples[0].spikes[0], Spike::input(0, 0.5));

  auto parse = [](const std::string& text) {
    std::istringstream is(text);
    return read_manifest(is, 2);
  };
  EXPECT_EQ(code_of([&] { parse("m=3 t_max=4 samples=1\n# sample 0\nneuron,time\n2,0.5\n0,0.75\n"); }),
            ErrorCode::ReplayShapeMismatch);
  EXPECT_EQ(code_of([&] { parse("m=3 t_max=4 samples=2\n# sample 0\nneuron,time\n2,0.5\n0,0.75\n-1,inf\n"); }),
            ErrorCode::ReplayShapeMismatch);
  EXPECT_EQ(code_of([&] { parse("t_max=4 samples=1\n"); }), ErrorCode::ReplayShapeMismatch);

  Network net;
  net.n_total = 2;
  net.weights = Matrix::Zero(2, 2);
  net.input_weights = Matrix::Zero(1, 2);
  EXPECT_EQ(code_of([&] { replay_trace(man.samples[0], net, 4, 4.0); }), ErrorCode::ReplayShapeMismatch);
  ReplaySample unsorted{0, {Spike::internal(0, 0.8), Spike::internal(1, 0.2), Spike::dummy()}};
  EXPECT_EQ(code_of([&] { replay_trace(unsorted, net, 3, 4.0); }), ErrorCode::ReplayUnsorted);
  ReplaySample after_dummy{0, {Spike::internal(0, 0.8), Spike::dummy(), Spike::internal(1, 0.9)}};
  EXPECT_EQ(code_of([&] { replay_trace(after_dummy, net, 3, 4.0); }), ErrorCode::ReplayUnsorted);
  ReplaySample out_of_range{0, {Spike::input(3, 0.1), Spike::dummy(), Spike::dummy()}};
  EXPECT_EQ(code_of([&] { replay_trace(out_of_range, net, 3, 4.0); }), ErrorCode::ReplayShapeMismatch);
}

TEST(Replay, ManifestBudgetMismatchThroughForward) {
  const auto path = std::filesystem::temp_directory_path() / "eventsnn_replay_m.txt";
  {
    std::ofstream os(path);
    write_manifest(os, {2, 4.0, {{0, {Spike::dummy(), Spike::dummy()}}}}, 1);
  }
  Network net;
  net.n_total = 1;
  net.weights = Matrix::Zero(1, 1);
  net.input_weights = Matrix::Zero(1, 1);
  BackendConfig cfg;
  cfg.kind = BackendKind::replay;
  cfg.replay.trace_path = path.string();
  EXPECT_EQ(code_of([&] { forward(cfg, net, {}, 3, 4.0, 0); }), ErrorCode::ReplayShapeMismatch);
  std::filesystem::remove(path);
}

TEST(BackendConfig, Validation) {
  BackendConfig cfg;
  EXPECT_NO_THROW(validate_backend(cfg));
  cfg.mock.weight_bits = 1;
  EXPECT_EQ(code_of([&] { validate_backend(cfg); }), ErrorCode::ConfigError);
  cfg = {};
  cfg.mock.spike_loss_prob = 1.5;
  EXPECT_EQ(code_of([&] { validate_backend(cfg); }), ErrorCode::ConfigError);
  EXPECT_EQ(parse_backend_kind("mock"), BackendKind::mock);
  EXPECT_EQ(code_of([&] { parse_backend_kind("asic"); }), ErrorCode::ConfigError);
}

}  // namespace
}  // namespace eventsnn

#include "eventsnn/backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "eventsnn/sim.hpp"
#include "eventsnn/spike_io.hpp"

namespace eventsnn {

const char* to_string(BackendKind k) {
  switch (k) {
    case BackendKind::numeric: return "numeric";
    case BackendKind::mock: return "mock";
    case BackendKind::replay: return "replay";
  }
  return "?";
}

BackendKind parse_backend_kind(const std::string& s) {
  if (s == "numeric") return BackendKind::numeric;
  if (s == "mock") return BackendKind::mock;
  if (s == "replay") return BackendKind::replay;
  throw Error(ErrorCode::ConfigError, "unknown backend '" + s + "'");
}

void validate_backend(const BackendConfig& cfg) {
  if (cfg.mock.weight_bits < 2) throw Error(ErrorCode::ConfigError, "mock.weight_bits must be >= 2");
  if (!(cfg.mock.spike_loss_prob >= 0.0 && cfg.mock.spike_loss_prob <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "mock.spike_loss_prob must lie in [0, 1]");
  }
  if (!(cfg.mock.jitter_sigma >= 0.0)) throw Error(ErrorCode::ConfigError, "mock.jitter_sigma must be >= 0");
}

Matrix quantize_weights(const Matrix& w, int bits, double clip) {
  if (bits < 2) throw Error(ErrorCode::ConfigError, "quantizer needs at least 2 bits");
  if (!(clip > 0.0)) return Matrix::Zero(w.rows(), w.cols());
  // 64-bit and wider leave doubles untouched
  if (bits >= 64) return w.cwiseMax(-clip).cwiseMin(clip);
  const double levels = std::ldexp(1.0, bits - 1) - 1.0;
  const double step = clip / levels;
  return w.unaryExpr([&](double x) {
    const double c = std::clamp(x, -clip, clip);
    return std::round(c / step) * step;  // std::round: ties away from zero
  });
}

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit(rng);  // (0, 1]
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool time_less(const Spike& a, const Spike& b) {
  if (a.is_dummy() != b.is_dummy()) return b.is_dummy();
  return a.time < b.time;
}

}  // namespace

EventTrace mock_forward(const MockConfig& cfg, const Network& net, std::span<const Spike> inputs, int m,
                        double t_max, std::uint64_t seed) {
  auto range = [](double configured, const Matrix& w) {
    return configured > 0.0 ? configured : (w.size() ? w.cwiseAbs().maxCoeff() : 0.0);
  };
  Network hw = net;
  hw.weights = quantize_weights(net.weights, cfg.weight_bits, range(cfg.weight_clip, net.weights));
  hw.input_weights =
      quantize_weights(net.input_weights, cfg.weight_bits, range(cfg.input_weight_clip, net.input_weights));
  EventTrace trace = simulate(hw, inputs, m, t_max);

  std::mt19937_64 rng(seed);
  std::vector<Spike> kept;
  kept.reserve(m);
  for (const auto& s : trace.spikes) {
    if (s.is_dummy()) continue;
    if (s.kind == SpikeKind::input) {
      kept.push_back(s);
      continue;
    }
    const double noise = cfg.jitter_sigma > 0.0 ? cfg.jitter_sigma * gaussian(rng) : 0.0;
    const bool lost = cfg.spike_loss_prob > 0.0 && unit(rng) < cfg.spike_loss_prob;
    const double t = std::max(0.0, s.time + noise);
    if (lost || t > t_max) continue;
    kept.push_back(Spike::internal(s.neuron, t));
  }
  std::stable_sort(kept.begin(), kept.end(), time_less);
  kept.resize(m, Spike::dummy());
  trace.spikes = std::move(kept);
  trace.spike_currents.clear();
  return trace;
}

void write_manifest(std::ostream& os, const ReplayManifest& manifest, int n_total) {
  const SpikeIndexMap map{n_total};
  os << "m=" << manifest.m << " t_max=" << format_time(manifest.t_max)
     << " samples=" << manifest.samples.size() << '\n';
  for (const auto& s : manifest.samples) {
    os << "# sample " << s.id << '\n';
    write_spikes(os, s.spikes, map);
  }
}

ReplayManifest read_manifest(std::istream& is, int n_total) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ReplayShapeMismatch, what); };
  ReplayManifest out;
  std::string line;
  if (!std::getline(is, line)) fail("empty manifest");
  int n_samples = -1;
  {
    std::istringstream hs(line);
    std::string tok;
    bool have_m = false, have_t = false;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) fail("bad manifest header token '" + tok + "'");
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      try {
        if (key == "m") out.m = std::stoi(val), have_m = true;
        else if (key == "t_max") out.t_max = std::stod(val), have_t = true;
        else if (key == "samples") n_samples = std::stoi(val);
        else fail("unknown manifest key '" + key + "'");
      } catch (const std::logic_error&) {
        fail("bad manifest value '" + tok + "'");
      }
    }
    if (!have_m || !have_t || n_samples < 0 || out.m <= 0) fail("manifest header needs m, t_max, samples");
  }

  const SpikeIndexMap map{n_total};
  for (int k = 0; k < n_samples; ++k) {
    if (!std::getline(is, line) || line.rfind("# sample ", 0) != 0) {
      fail("missing block for sample " + std::to_string(k));
    }
    ReplaySample sample;
    try {
      sample.id = std::stoi(line.substr(9));
    } catch (const std::logic_error&) {
      fail("bad sample separator '" + line + "'");
    }
    if (!std::getline(is, line) || line != kSpikeHeader) fail("missing spike header in sample block");
    for (int r = 0; r < out.m; ++r) {
      if (!std::getline(is, line) || line.rfind('#', 0) == 0) {
        fail("sample " + std::to_string(sample.id) + " has fewer than m=" + std::to_string(out.m) + " records");
      }
      try {
        sample.spikes.push_back(parse_spike_record(line, map));
      } catch (const Error& e) {
        fail(e.what());
      }
    }
    out.samples.push_back(std::move(sample));
  }
  while (std::getline(is, line)) {
    if (!line.empty()) fail("trailing data after the last sample block");
  }
  return out;
}

ReplayManifest load_manifest(const std::string& path, int n_total) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open replay file " + path);
  return read_manifest(in, n_total);
}

EventTrace replay_trace(const ReplaySample& sample, const Network& net, int m, double t_max) {
  if (static_cast<int>(sample.spikes.size()) != m) {
    throw Error(ErrorCode::ReplayShapeMismatch, "replayed block has " + std::to_string(sample.spikes.size()) +
                                                    " records, expected m=" + std::to_string(m));
  }
  bool seen_dummy = false;
  double last = -kInf;
  for (const auto& s : sample.spikes) {
    if (s.is_dummy()) {
      seen_dummy = true;
      continue;
    }
    const int limit = s.kind == SpikeKind::internal ? net.n_total : net.n_inputs();
    if (s.neuron < 0 || s.neuron >= limit) {
      throw Error(ErrorCode::ReplayShapeMismatch, "replayed spike index out of range");
    }
    if (seen_dummy || s.time < last) throw Error(ErrorCode::ReplayUnsorted, "replayed spikes are not sorted");
    if (s.time > t_max) throw Error(ErrorCode::ReplayUnsorted, "replayed spike beyond t_max");
    last = s.time;
  }
  EventTrace trace;
  trace.spikes = sample.spikes;
  trace.final_state = NeuronState::zeros(net.n_total);
  trace.final_state.t = seen_dummy ? t_max : last;
  return trace;
}

EventTrace forward(const BackendConfig& cfg, const Network& net, std::span<const Spike> inputs, int m,
                   double t_max, std::uint64_t seed) {
  switch (cfg.kind) {
    case BackendKind::numeric: return simulate(net, inputs, m, t_max);
    case BackendKind::mock: return mock_forward(cfg.mock, net, inputs, m, t_max, seed);
    case BackendKind::replay: {
      const auto manifest = load_manifest(cfg.replay.trace_path, net.n_total);
      if (manifest.m != m) {
        throw Error(ErrorCode::ReplayShapeMismatch, "manifest m=" + std::to_string(manifest.m) +
                                                        " differs from requested m=" + std::to_string(m));
      }
      for (const auto& s : manifest.samples) {
        if (s.id == cfg.replay.sample) return replay_trace(s, net, m, t_max);
      }
      throw Error(ErrorCode::ReplayShapeMismatch, "sample " + std::to_string(cfg.replay.sample) + " not in manifest");
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown backend");
}

}  // namespace eventsnn

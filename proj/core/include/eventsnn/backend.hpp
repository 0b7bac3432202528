#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "eventsnn/types.hpp"

namespace eventsnn {

enum class BackendKind { numeric, mock, replay };

const char* to_string(BackendKind k);
BackendKind parse_backend_kind(const std::string& s);

/// Hardware non-idealities applied by the mock backend.
struct MockConfig {
  double jitter_sigma = 0.01;  // Gaussian spike-time jitter, units of tau_syn
  int weight_bits = 6;         // signed levels of the symmetric quantizer
  // Saturation bounds of the network and input weight matrices; <= 0 means
  // max |w| of that matrix.
  double weight_clip = 0.0;
  double input_weight_clip = 0.0;
  double spike_loss_prob = 0.0;
};

struct ReplayConfig {
  std::string trace_path;
  int sample = 0;
};

struct BackendConfig {
  BackendKind kind = BackendKind::numeric;
  MockConfig mock;
  ReplayConfig replay;
};

/// Throws ConfigError when weight_bits < 2 or a probability lies outside [0, 1].
void validate_backend(const BackendConfig& cfg);

/// Symmetric uniform quantizer with 2^(bits-1) - 1 positive levels on
/// [-clip, clip]; values saturate at +-clip and round to the nearest level,
/// ties away from zero.
Matrix quantize_weights(const Matrix& w, int bits, double clip);

/// One replayed sample: the spike block of a manifest.
struct ReplaySample {
  int id = 0;
  std::vector<Spike> spikes;
};

/// Replay manifest: header line `m=<int> t_max=<real> samples=<int>`, then for
/// each sample a `# sample <id>` line followed by a spike block (header
/// `neuron,time` and exactly m records). Indices follow SpikeIndexMap with
/// n_internal = n_total of the network.
struct ReplayManifest {
  int m = 0;
  double t_max = 0.0;
  std::vector<ReplaySample> samples;
};

void write_manifest(std::ostream& os, const ReplayManifest& manifest, int n_total);
/// Throws ReplayShapeMismatch on truncated or inconsistent files.
ReplayManifest read_manifest(std::istream& is, int n_total);
ReplayManifest load_manifest(const std::string& path, int n_total);

/// Checks a replayed block against the requested budget and network and turns
/// it into a trace; throws ReplayShapeMismatch / ReplayUnsorted.
EventTrace replay_trace(const ReplaySample& sample, const Network& net, int m, double t_max);

/// Forward pass through the selected backend. The returned trace always has
/// length m and feeds the same backward pass regardless of its origin.
EventTrace forward(const BackendConfig& cfg, const Network& net, std::span<const Spike> inputs, int m,
                   double t_max, std::uint64_t seed);

/// Quantized simulation followed by jitter and spike loss on internal spikes;
/// deterministic in `seed`.
EventTrace mock_forward(const MockConfig& cfg, const Network& net, std::span<const Spike> inputs, int m,
                        double t_max, std::uint64_t seed);

}  // namespace eventsnn

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "eventsnn/types.hpp"

namespace eventsnn {

/// Spike files are UTF-8 text with the header `neuron,time` and one
/// `neuron_index,timestamp` record per line. Dummies are written `-1,inf`.
///
/// The two-column record has no kind field, so internal and input spikes share
/// one index space: [0, n_internal) are network neurons and
/// [n_internal, n_internal + n_inputs) are input channels. Files that carry
/// only input spikes (encoded datasets) use n_internal = 0.
struct SpikeIndexMap {
  int n_internal = 0;

  int encode(const Spike& s) const;
  Spike decode(int index, double time) const;
};

inline constexpr const char* kSpikeHeader = "neuron,time";

/// Shortest exact representation is not required; 17 significant digits
/// round-trip every double.
std::string format_time(double t);

void write_spike_record(std::ostream& os, const Spike& s, const SpikeIndexMap& map);
/// Parses one `index,time` line. Throws ParseError on malformed input.
Spike parse_spike_record(const std::string& line, const SpikeIndexMap& map);

void write_spikes(std::ostream& os, const std::vector<Spike>& spikes, const SpikeIndexMap& map);
std::vector<Spike> read_spikes(std::istream& is, const SpikeIndexMap& map);

}  // namespace eventsnn

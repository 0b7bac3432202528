#include "eventsnn/spike_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

namespace eventsnn {

int SpikeIndexMap::encode(const Spike& s) const {
  switch (s.kind) {
    case SpikeKind::dummy: return -1;
    case SpikeKind::internal: return s.neuron;
    case SpikeKind::input: return n_internal + s.neuron;
  }
  return -1;
}

Spike SpikeIndexMap::decode(int index, double time) const {
  if (index == -1) return Spike::dummy();
  if (index < 0) throw Error(ErrorCode::ParseError, "negative spike index " + std::to_string(index));
  if (index < n_internal) return Spike::internal(index, time);
  return Spike::input(index - n_internal, time);
}

std::string format_time(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  return buf;
}

void write_spike_record(std::ostream& os, const Spike& s, const SpikeIndexMap& map) {
  os << map.encode(s) << ',' << format_time(s.is_dummy() ? kInf : s.time) << '\n';
}

Spike parse_spike_record(const std::string& line, const SpikeIndexMap& map) {
  const auto comma = line.find(',');
  if (comma == std::string::npos) throw Error(ErrorCode::ParseError, "missing comma: '" + line + "'");
  const std::string idx_str = line.substr(0, comma);
  const std::string time_str = line.substr(comma + 1);

  char* end = nullptr;
  errno = 0;
  const long idx = std::strtol(idx_str.c_str(), &end, 10);
  if (idx_str.empty() || *end != '\0' || errno != 0) {
    throw Error(ErrorCode::ParseError, "bad neuron index: '" + line + "'");
  }
  std::string trimmed = time_str;
  while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' ')) trimmed.pop_back();
  const double t = std::strtod(trimmed.c_str(), &end);
  if (trimmed.empty() || *end != '\0' || std::isnan(t)) {
    throw Error(ErrorCode::ParseError, "bad timestamp: '" + line + "'");
  }
  const Spike s = map.decode(static_cast<int>(idx), t);
  if (s.is_dummy() && !std::isinf(t)) {
    throw Error(ErrorCode::ParseError, "dummy record must carry time inf: '" + line + "'");
  }
  return s;
}

void write_spikes(std::ostream& os, const std::vector<Spike>& spikes, const SpikeIndexMap& map) {
  os << kSpikeHeader << '\n';
  for (const auto& s : spikes) write_spike_record(os, s, map);
}

std::vector<Spike> read_spikes(std::istream& is, const SpikeIndexMap& map) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::ParseError, "empty spike file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSpikeHeader) throw Error(ErrorCode::ParseError, "expected header 'neuron,time'");
  std::vector<Spike> out;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    out.push_back(parse_spike_record(line, map));
  }
  return out;
}

}  // namespace eventsnn

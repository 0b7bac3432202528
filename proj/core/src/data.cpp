#include "eventsnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "eventsnn/spike_io.hpp"

namespace eventsnn::data {

const char* class_name(YinYangClass c) {
  switch (c) {
    case YinYangClass::yin: return "yin";
    case YinYangClass::yang: return "yang";
    case YinYangClass::dot: return "dot";
  }
  return "?";
}

bool YinYangGeometry::inside(double x, double y) const {
  return std::hypot(x - r_big, y - r_big) <= r_big;
}

YinYangClass YinYangGeometry::classify(double x, double y) const {
  const double d_right = std::hypot(x - 1.5 * r_big, y - r_big);
  const double d_left = std::hypot(x - 0.5 * r_big, y - r_big);
  if (d_right < r_small || d_left < r_small) return YinYangClass::dot;
  // yin: the left lobe around its dot, plus the upper half-disk outside the right lobe
  const bool in_left_lobe = d_left <= 0.5 * r_big;
  const bool upper_outside = y > r_big && d_right > 0.5 * r_big;
  return (in_left_lobe || upper_outside) ? YinYangClass::yin : YinYangClass::yang;
}

namespace {

// Uniform double in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<YinYangPoint> generate(std::uint64_t seed, int n, const YinYangGeometry& geo) {
  if (n <= 0) throw Error(ErrorCode::ConfigError, "dataset size must be positive");
  std::mt19937_64 rng(seed);
  std::vector<YinYangPoint> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const auto goal = static_cast<YinYangClass>(k % kNumClasses);
    for (;;) {
      const double x = unit(rng) * 2.0 * geo.r_big;
      const double y = unit(rng) * 2.0 * geo.r_big;
      if (!geo.inside(x, y)) continue;
      const auto c = geo.classify(x, y);
      if (c != goal) continue;
      out.push_back({x, y, c});
      break;
    }
  }
  return out;
}

int encoded_channels(const EncodingConfig& cfg) { return cfg.bias_enabled ? 5 : 4; }

EncodedSample encode(const YinYangPoint& p, const EncodingConfig& cfg) {
  const double span = cfg.t_late - cfg.t_early;
  const double tx = cfg.t_early + p.x * span;
  const double ty = cfg.t_early + p.y * span;
  EncodedSample s;
  s.label = p.label;
  s.spikes = {Spike::input(0, tx), Spike::input(1, ty), Spike::input(2, cfg.t_late - (tx - cfg.t_early)),
              Spike::input(3, cfg.t_late - (ty - cfg.t_early))};
  if (cfg.bias_enabled) s.spikes.push_back(Spike::input(4, cfg.t_bias));
  std::stable_sort(s.spikes.begin(), s.spikes.end(),
                   [](const Spike& a, const Spike& b) { return a.time < b.time; });
  return s;
}

YinYangPoint decode(const EncodedSample& s, const EncodingConfig& cfg) {
  const double span = cfg.t_late - cfg.t_early;
  YinYangPoint p;
  p.label = s.label;
  for (const auto& sp : s.spikes) {
    if (sp.neuron == 0) p.x = (sp.time - cfg.t_early) / span;
    if (sp.neuron == 1) p.y = (sp.time - cfg.t_early) / span;
  }
  return p;
}

void write_dataset(std::ostream& os, const std::vector<YinYangPoint>& points) {
  os << "x,y,label\n";
  for (const auto& p : points) {
    os << format_time(p.x) << ',' << format_time(p.y) << ',' << static_cast<int>(p.label) << '\n';
  }
}

std::vector<YinYangPoint> read_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("x,y,label", 0) != 0) {
    throw Error(ErrorCode::ParseError, "expected header 'x,y,label'");
  }
  std::vector<YinYangPoint> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string xs, ys, ls_label;
    if (!std::getline(ls, xs, ',') || !std::getline(ls, ys, ',') || !std::getline(ls, ls_label)) {
      throw Error(ErrorCode::ParseError, "bad dataset line: '" + line + "'");
    }
    try {
      const int label = std::stoi(ls_label);
      if (label < 0 || label >= kNumClasses) throw Error(ErrorCode::ParseError, "label out of range");
      out.push_back({std::stod(xs), std::stod(ys), static_cast<YinYangClass>(label)});
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "bad dataset line: '" + line + "'");
    }
  }
  return out;
}

void write_encoded(std::ostream& os, const std::vector<EncodedSample>& samples) {
  const SpikeIndexMap inputs_only{0};
  os << kSpikeHeader << '\n';
  for (std::size_t k = 0; k < samples.size(); ++k) {
    os << "# sample " << k << " label=" << static_cast<int>(samples[k].label) << '\n';
    for (const auto& s : samples[k].spikes) write_spike_record(os, s, inputs_only);
  }
}

}  // namespace eventsnn::data
